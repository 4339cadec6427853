"""PBC circuit model: Pauli rotations and measurements, text format, and a
seeded random workload generator.

Circuit file format (one directive per line, `#` starts a comment):

    qubits <n>                     first non-comment line
    rot <signed-pauli> <angle>     angle: pi/2, pi/4, pi/8, negated forms,
                                   or decimal radians
    meas <signed-pauli>

Angles parsed from an exact token are kept as exact rational multiples of
pi so Clifford/T classification never depends on float noise; decimal angles
classify as Arbitrary unless within 1e-12 of an exact token (modulo pi).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .pauli import SignedPauli, SymplecticVector

ANGLE_TOKENS = {
    "pi/2": Fraction(1, 2),
    "pi/4": Fraction(1, 4),
    "pi/8": Fraction(1, 8),
}
_FLOAT_SNAP_TOL = 1e-12


class AngleClass(enum.Enum):
    CLIFFORD = "clifford"
    TLIKE = "tlike"
    ARBITRARY = "arbitrary"


@dataclass(frozen=True)
class Angle:
    """Rotation angle: exact rational multiple of pi when known, else float
    radians."""

    frac: Fraction | None
    radians: float

    @classmethod
    def exact(cls, frac: Fraction) -> "Angle":
        return cls(frac, float(frac) * math.pi)

    @classmethod
    def from_float(cls, radians: float) -> "Angle":
        return cls(None, float(radians))

    def _pi_residue(self) -> float:
        return (self.radians / math.pi) % 1.0

    def classify(self) -> AngleClass:
        if self.frac is not None:
            r = self.frac % 1
            if r in (Fraction(1, 4), Fraction(1, 2), Fraction(3, 4)):
                return AngleClass.CLIFFORD
            if r.denominator == 8:
                return AngleClass.TLIKE
            return AngleClass.ARBITRARY
        t = self._pi_residue()
        eighth = round(t * 8)
        if abs(t - eighth / 8) * math.pi >= _FLOAT_SNAP_TOL:
            return AngleClass.ARBITRARY
        eighth %= 8
        if eighth == 0:
            return AngleClass.ARBITRARY  # multiple of pi: trivial, not a token
        return AngleClass.CLIFFORD if eighth % 2 == 0 else AngleClass.TLIKE

    def quarter_turn_directions(self) -> list[int]:
        """Decomposition of a Clifford angle into quarter turns.

        +pi/4 -> [+1]; -pi/4 (== 3pi/4 mod pi) -> [-1]; +-pi/2 -> [+1, +1].
        """
        if self.frac is not None:
            r = self.frac % 1
        else:
            t = self._pi_residue()
            r = Fraction(round(t * 4), 4) % 1
        if r == Fraction(1, 4):
            return [1]
        if r == Fraction(3, 4):
            return [-1]
        if r == Fraction(1, 2):
            return [1, 1]
        raise ValueError(f"not a Clifford angle: {self}")

    def is_synthesis_trivial(self, tol: float = _FLOAT_SNAP_TOL) -> bool:
        """True when the angle is a multiple of pi/2 (no magic states needed)."""
        r = (self.radians / (math.pi / 2)) % 1.0
        return min(r, 1.0 - r) * (math.pi / 2) < tol

    def render(self) -> str:
        if self.frac is not None:
            r = abs(self.frac)
            for token, value in ANGLE_TOKENS.items():
                if r == value:
                    return ("-" if self.frac < 0 else "") + token
        return repr(self.radians)


class OpKind(enum.Enum):
    ROTATION = "rot"
    MEASUREMENT = "meas"


@dataclass(frozen=True)
class PbcOp:
    kind: OpKind
    pauli: SignedPauli
    angle: Angle | None = None

    def __post_init__(self):
        if self.pauli.vector.is_zero:
            raise ValueError("identity Pauli is not a valid operation")
        if (self.angle is not None) != (self.kind is OpKind.ROTATION):
            raise ValueError("angle must be present exactly for rotations")

    @classmethod
    def rotation(cls, pauli: SignedPauli, angle: Angle) -> "PbcOp":
        return cls(OpKind.ROTATION, pauli, angle)

    @classmethod
    def measurement(cls, pauli: SignedPauli) -> "PbcOp":
        return cls(OpKind.MEASUREMENT, pauli)

    def angle_class(self) -> AngleClass | None:
        return self.angle.classify() if self.angle is not None else None


@dataclass
class PbcCircuit:
    n_qubits: int
    ops: list[PbcOp] = field(default_factory=list)

    def __post_init__(self):
        if self.n_qubits < 1:
            raise ValueError("circuit needs at least one qubit")
        for op in self.ops:
            if op.pauli.n != self.n_qubits:
                raise ValueError(
                    f"op on {op.pauli.n} qubits in a {self.n_qubits}-qubit circuit"
                )

    @property
    def L(self) -> int:
        return len(self.ops)

    def class_counts(self) -> dict[str, int]:
        counts = {"clifford": 0, "tlike": 0, "arbitrary": 0, "measurement": 0}
        for op in self.ops:
            cls_ = op.angle_class()
            counts["measurement" if cls_ is None else cls_.value] += 1
        return counts


class CircuitParseError(ValueError):
    def __init__(self, message: str, line: int, column: int = 0):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column


def _parse_angle(token: str, line: int, col: int) -> Angle:
    body = token
    sign = 1
    if body[:1] in "+-":
        sign = -1 if body[0] == "-" else 1
        body = body[1:]
    if body in ANGLE_TOKENS:
        return Angle.exact(sign * ANGLE_TOKENS[body])
    try:
        return Angle.from_float(float(token))
    except ValueError:
        raise CircuitParseError(f"malformed angle {token!r}", line, col) from None


def parse_circuit(text: str | bytes) -> PbcCircuit:
    """Parse the text circuit format; errors carry line/column positions."""
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    n_qubits = None
    ops: list[PbcOp] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0]
        if not line.strip():
            continue
        tokens = line.split()
        col = line.index(tokens[0])
        head = tokens[0]
        if n_qubits is None:
            if head != "qubits":
                raise CircuitParseError("expected `qubits <n>` first", lineno, col)
            if len(tokens) != 2 or not tokens[1].isdigit():
                raise CircuitParseError("expected `qubits <n>`", lineno, col)
            n_qubits = int(tokens[1])
            if n_qubits == 0:
                raise CircuitParseError("zero qubits", lineno, col)
            continue
        if head not in ("rot", "meas"):
            raise CircuitParseError(f"unknown directive {head!r}", lineno, col)
        want = 3 if head == "rot" else 2
        if len(tokens) != want:
            raise CircuitParseError(
                f"`{head}` takes {want - 1} argument(s)", lineno, col
            )
        pauli_col = line.index(tokens[1], col + len(head))
        try:
            pauli = SignedPauli.from_string(tokens[1])
        except ValueError as exc:
            raise CircuitParseError(str(exc), lineno, pauli_col) from None
        if pauli.n != n_qubits:
            raise CircuitParseError(
                f"Pauli length {pauli.n} != qubit count {n_qubits}",
                lineno,
                pauli_col,
            )
        if pauli.vector.is_zero:
            raise CircuitParseError("identity Pauli", lineno, pauli_col)
        if head == "rot":
            angle_col = line.index(tokens[2], pauli_col + len(tokens[1]))
            angle = _parse_angle(tokens[2], lineno, angle_col)
            ops.append(PbcOp.rotation(pauli, angle))
        else:
            ops.append(PbcOp.measurement(pauli))
    if n_qubits is None:
        raise CircuitParseError("empty circuit file", 1)
    return PbcCircuit(n_qubits, ops)


def render_circuit(circuit: PbcCircuit) -> str:
    lines = [f"qubits {circuit.n_qubits}"]
    for op in circuit.ops:
        if op.kind is OpKind.ROTATION:
            lines.append(f"rot {op.pauli.to_string()} {op.angle.render()}")
        else:
            lines.append(f"meas {op.pauli.to_string()}")
    return "\n".join(lines) + "\n"


_CLIFFORD_FRACS = (Fraction(1, 4), Fraction(-1, 4), Fraction(1, 2), Fraction(-1, 2))
_TLIKE_FRACS = (Fraction(1, 8), Fraction(-1, 8))


def _draw_weight(rng: np.random.Generator, weight_dist, n: int) -> int:
    if weight_dist is None:
        return int(rng.integers(1, min(4, n) + 1))
    if isinstance(weight_dist, int):
        if not 1 <= weight_dist <= n:
            raise ValueError("fixed weight out of range")
        return weight_dist
    lo, hi = weight_dist
    if not 1 <= lo <= hi <= n:
        raise ValueError("weight range out of range")
    return int(rng.integers(lo, hi + 1))


def gen_random(
    n: int,
    L: int,
    clifford_frac: float,
    arb_frac: float,
    weight_dist=None,
    seed: int = 0,
) -> PbcCircuit:
    """Seeded random workload.

    Each op is a Clifford rotation with probability `clifford_frac`, an
    arbitrary-angle rotation with probability `arb_frac`, and otherwise a
    T-like rotation or a Pauli measurement with equal probability. Supports
    are uniform over qubit subsets of the drawn weight; `weight_dist` is an
    int (fixed weight), a (lo, hi) inclusive range, or None for uniform over
    [1, min(4, n)].
    """
    if clifford_frac < 0 or arb_frac < 0 or clifford_frac + arb_frac > 1:
        raise ValueError("invalid class fractions")
    rng = np.random.default_rng(seed)
    ops: list[PbcOp] = []
    for _ in range(L):
        weight = _draw_weight(rng, weight_dist, n)
        support = rng.choice(n, size=weight, replace=False)
        x = z = 0
        for q in support:
            letter = int(rng.integers(3))  # 0 -> X, 1 -> Y, 2 -> Z
            if letter != 2:
                x |= 1 << int(q)
            if letter != 0:
                z |= 1 << int(q)
        pauli = SignedPauli(SymplecticVector(n, x, z), -1 if rng.random() < 0.5 else 1)
        u = rng.random()
        if u < clifford_frac:
            angle = Angle.exact(_CLIFFORD_FRACS[int(rng.integers(4))])
            ops.append(PbcOp.rotation(pauli, angle))
        elif u < clifford_frac + arb_frac:
            ops.append(PbcOp.rotation(pauli, Angle.from_float(float(rng.uniform(0, math.pi)))))
        elif rng.random() < 0.5:
            angle = Angle.exact(_TLIKE_FRACS[int(rng.integers(2))])
            ops.append(PbcOp.rotation(pauli, angle))
        else:
            ops.append(PbcOp.measurement(pauli))
    return PbcCircuit(n, ops)
