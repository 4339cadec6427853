"""Bivariate-bicycle code construction and the in-module measurement cost
model.

A BB code is fixed by cycle lengths (l, m) and two polynomials A, B in the
commuting shifts x = S_l (x) I_m and y = I_l (x) S_m; the check matrices are
H_X = [A | B], H_Z = [B^T | A^T].

The cost of synthesizing an in-module Pauli measurement is the number of
native measurements it takes: strings reachable directly from the native set
cost 1, and every conjugation layer (one native rotation on each side of the
sandwich, three native measurements each) adds 6. `closure_costs` computes
the full table for small compute-qubit counts; the table for the 144-qubit
gross code is not derivable from the polynomials alone and is instead loaded
from a versioned data file whose stored histogram acts as a checksum. When no
file is available a support-weight fallback keeps the pipeline running and
watermarks every report as a synthetic cost model.
"""

from __future__ import annotations

import re
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import gf2
from .pauli import SymplecticVector

Monomial = tuple[int, int]  # (p, q) for x^p y^q

GROSS_L = 12
GROSS_M = 6
GROSS_A = ((0, 0), (0, 1), (3, -1))  # 1 + y + x^3 y^-1
GROSS_B = ((0, 0), (1, 0), (-1, -3))  # 1 + x + x^-1 y^-3

# Expected gross-code histogram {cost: count}; doubles as the load-time
# checksum for the shipped table file.
GROSS_COST_HISTOGRAM = {1: 245, 7: 12579, 13: 490770, 19: 3505249, 25: 185460}

# Where the gross-code cost table is looked for when no explicit path is
# given. Deriving it needs the extractor generating set's logical action and
# the shift-automorphism group, which are hardware data, not code; without
# the file the pipeline falls back to the synthetic weight-bucket model and
# watermarks its reports.
DEFAULT_GROSS_TABLE_PATH = Path(__file__).parent / "data" / "gross_cost_table.bbct"

COST_LEVEL_STEP = 6


class CostTableError(ValueError):
    pass


def cyclic_shift(size: int, power: int) -> np.ndarray:
    return np.roll(np.eye(size, dtype=np.uint8), shift=power % size, axis=1)


def monomial_matrix(l: int, m: int, mono: Monomial) -> np.ndarray:
    p, q = mono
    return np.kron(cyclic_shift(l, p), cyclic_shift(m, q))


def polynomial_matrix(l: int, m: int, monomials) -> np.ndarray:
    acc = np.zeros((l * m, l * m), dtype=np.uint8)
    for mono in monomials:
        acc ^= monomial_matrix(l, m, mono)
    return acc


_MONO_RE = re.compile(r"^(?:1|(?:x(?:\^?(-?\d+))?)?\s*\*?\s*(?:y(?:\^?(-?\d+))?)?)$")


def parse_polynomial(text: str) -> tuple[Monomial, ...]:
    """Parse e.g. ``1 + y + x^3 y^-1`` into monomial exponent pairs."""
    monomials = []
    for term in text.split("+"):
        term = term.strip()
        match = _MONO_RE.match(term)
        if not match or not term:
            raise ValueError(f"bad monomial {term!r}")
        if term == "1":
            monomials.append((0, 0))
            continue
        p = q = 0
        if "x" in term:
            p = int(match.group(1)) if match.group(1) is not None else 1
        if "y" in term:
            q = int(match.group(2)) if match.group(2) is not None else 1
        monomials.append((p, q))
    return tuple(monomials)


@dataclass
class BbCode:
    l: int
    m: int
    a_poly: tuple[Monomial, ...]
    b_poly: tuple[Monomial, ...]
    h_x: np.ndarray
    h_z: np.ndarray
    n: int
    k: int


def build_bb_code(l: int, m: int, a_poly, b_poly) -> BbCode:
    """Materialize the check matrices and derive n, k via GF(2) rank."""
    a_poly, b_poly = tuple(a_poly), tuple(b_poly)
    a = polynomial_matrix(l, m, a_poly)
    b = polynomial_matrix(l, m, b_poly)
    h_x = np.hstack([a, b])
    h_z = np.hstack([b.T, a.T])
    if np.any((h_x @ h_z.T) % 2):
        raise ValueError("check matrices do not commute: H_X H_Z^T != 0")
    n = 2 * l * m
    k = n - gf2.rank(h_x) - gf2.rank(h_z)
    return BbCode(l, m, a_poly, b_poly, h_x, h_z, n, k)


def build_gross_code() -> BbCode:
    return build_bb_code(GROSS_L, GROSS_M, GROSS_A, GROSS_B)


# ---------------------------------------------------------------------------
# Native sets

def identity_cols(nq: int) -> list[int]:
    return [1 << j for j in range(2 * nq)]


def perm_cols(nq: int, perm: list[int]) -> list[int]:
    """Symplectic action of a qubit permutation: qubit q -> perm[q]."""
    if sorted(perm) != list(range(nq)):
        raise ValueError("not a permutation")
    cols = [0] * (2 * nq)
    for q in range(nq):
        cols[q] = 1 << perm[q]
        cols[nq + q] = 1 << (nq + perm[q])
    return cols


def hadamard_cols(nq: int, qubits: list[int]) -> list[int]:
    """X <-> Z swap on the listed qubits."""
    cols = identity_cols(nq)
    for q in qubits:
        cols[q], cols[nq + q] = cols[nq + q], cols[q]
    return cols


def apply_cols(cols: list[int], packed: int) -> int:
    out = 0
    j = 0
    while packed:
        if packed & 1:
            out ^= cols[j]
        packed >>= 1
        j += 1
    return out


def compose_cols(a: list[int], b: list[int]) -> list[int]:
    return [apply_cols(a, col) for col in b]


def close_group(generators: list[list[int]], cap: int = 20000) -> list[list[int]]:
    """Close a set of vector maps under composition (identity included)."""
    nq2 = len(generators[0]) if generators else 0
    ident = [1 << j for j in range(nq2)]
    seen = {tuple(ident)}
    order = [ident]
    frontier = [ident]
    while frontier:
        nxt = []
        for g in generators:
            for h in frontier:
                c = compose_cols(g, h)
                key = tuple(c)
                if key not in seen:
                    seen.add(key)
                    order.append(c)
                    nxt.append(c)
                    if len(seen) > cap:
                        raise ValueError("automorphism group too large to close")
        frontier = nxt
    return order


@dataclass
class NativeSetSpec:
    """Generating measurements (pivot at local index 0) plus automorphisms,
    with the derived native measurement and rotation sets.

    `rotations` overrides the derived rotation library when given explicitly
    (useful for synthetic codes exercised in tests and the closure CLI).
    """

    k: int
    measurements: list[SymplecticVector]
    automorphisms: list[list[int]] = field(default_factory=list)
    rotations: list[SymplecticVector] | None = None

    def __post_init__(self):
        for p in self.measurements:
            if p.n != self.k + 1:
                raise ValueError("measurement length must be pivot + compute qubits")

    def _group(self) -> list[list[int]]:
        if not self.automorphisms:
            return [identity_cols(self.k + 1)]
        return close_group(self.automorphisms)

    def native_measurements(self) -> list[SymplecticVector]:
        nq = self.k + 1
        seen = set()
        out = []
        for u in self._group():
            for p in self.measurements:
                img = apply_cols(u, p.packed())
                if img not in seen:
                    seen.add(img)
                    out.append(SymplecticVector.from_packed(nq, img))
        return out

    def _restrict(self, vec: SymplecticVector) -> SymplecticVector:
        mask = ((1 << self.k) - 1) << 1
        return SymplecticVector(self.k, (vec.x & mask) >> 1, (vec.z & mask) >> 1)

    def _pivot_component(self, vec: SymplecticVector) -> tuple[int, int]:
        return vec.x & 1, vec.z & 1

    def level0(self) -> set[int]:
        """Compute-qubit restrictions of the native measurements (cost 1)."""
        out = set()
        for p in self.native_measurements():
            r = self._restrict(p)
            if not r.is_zero:
                out.add(r.packed())
        return out

    def native_rotations(self) -> list[SymplecticVector]:
        if self.rotations is not None:
            return list(self.rotations)
        seen = set()
        out = []
        for p in self.native_measurements():
            if self._pivot_component(p) == (0, 0):
                continue
            r = self._restrict(p)
            if not r.is_zero and r.packed() not in seen:
                seen.add(r.packed())
                out.append(r)
        return out


# ---------------------------------------------------------------------------
# Cost tables

@dataclass
class CostTable:
    k: int
    costs: np.ndarray  # uint8, 4^k entries, 0 = identity slot / unreachable
    source: str  # "closure" | "file" | "synthetic-fallback"

    MAX_COMPUTE_QUBITS = 11

    @property
    def synthetic(self) -> bool:
        return self.source == "synthetic-fallback"

    @property
    def complete(self) -> bool:
        return not np.any(self.costs[1:] == 0)

    def histogram(self) -> dict[int, int]:
        values, counts = np.unique(self.costs[1:], return_counts=True)
        return {int(v): int(c) for v, c in zip(values, counts) if v != 0}

    def lookup(self, pauli) -> int:
        if isinstance(pauli, SymplecticVector):
            if pauli.n != self.k:
                raise ValueError(f"expected {self.k}-qubit string, got {pauli.n}")
            idx = pauli.packed()
        else:
            idx = int(pauli)
        if idx == 0:
            raise ValueError("identity has no synthesis cost")
        cost = int(self.costs[idx])
        if cost == 0:
            raise LookupError(f"string index {idx} unreachable in this cost table")
        return cost

    def min_cost_strings(self, limit: int) -> list[SymplecticVector]:
        """Cheapest nonidentity strings, ordered by (cost, index)."""
        order = np.argsort(self.costs[1:], kind="stable") + 1
        out = []
        for idx in order:
            if self.costs[idx] == 0:
                continue
            out.append(SymplecticVector.from_packed(self.k, int(idx)))
            if len(out) >= limit:
                break
        return out


def f_cost(table: CostTable, pauli) -> int:
    return table.lookup(pauli)


def closure_costs(spec: NativeSetSpec, k: int | None = None) -> CostTable:
    """BFS level assignment: level-0 strings cost 1, each conjugation layer
    by a native rotation adds 6. Non-generating specs yield a partial table
    (unreachable entries stay 0) rather than an error.
    """
    if k is None:
        k = spec.k
    if k != spec.k:
        raise ValueError("spec/table qubit count mismatch")
    if k > CostTable.MAX_COMPUTE_QUBITS:
        raise ValueError(f"closure limited to k <= {CostTable.MAX_COMPUTE_QUBITS}")
    size = 1 << (2 * k)
    costs = np.zeros(size, dtype=np.uint8)
    frontier = np.array(sorted(spec.level0()), dtype=np.int64)
    costs[frontier] = 1
    rotations = [r.packed() for r in spec.native_rotations()]
    mask = (1 << k) - 1
    swapped = np.array(
        [((r >> k) & mask) | ((r & mask) << k) for r in rotations], dtype=np.int64
    )
    rot_arr = np.array(rotations, dtype=np.int64)
    cost = 1
    while frontier.size and rotations:
        cost += COST_LEVEL_STEP
        if cost > 255:
            raise CostTableError("cost exceeds one byte; table format limit")
        candidates = []
        for r, sw in zip(rot_arr, swapped):
            anti = (np.bitwise_count((frontier & sw).astype(np.uint64)).astype(np.int64) & 1).astype(bool)
            candidates.append(frontier[anti] ^ r)
        if candidates:
            new = np.unique(np.concatenate(candidates))
            new = new[costs[new] == 0]
            new = new[new != 0]
        else:
            new = np.array([], dtype=np.int64)
        costs[new] = cost
        frontier = new
    return CostTable(k, costs, "closure")


def synthetic_fallback(k: int) -> CostTable:
    """Support-weight bucket costs: weight 1 -> 1, 2 -> 7, ... >= 5 -> 25."""
    size = 1 << (2 * k)
    idx = np.arange(size, dtype=np.int64)
    mask = (1 << k) - 1
    support = (idx & mask) | (idx >> k)
    weight = np.bitwise_count(support.astype(np.uint64)).astype(np.int64)
    costs = (1 + COST_LEVEL_STEP * np.minimum(weight - 1, 4)).astype(np.uint8)
    costs[0] = 0
    return CostTable(k, costs, "synthetic-fallback")


# ---------------------------------------------------------------------------
# Cost table file format:
#   magic "BBCT", version u8, k u8, n_levels u16  (little endian)
#   n_levels x (cost u16, count u64)
#   4^k cost bytes, index = x_bits | z_bits << k
_MAGIC = b"BBCT"
_HEADER = struct.Struct("<4sBBH")
_LEVEL = struct.Struct("<HQ")


def write_cost_table(path, table: CostTable) -> None:
    hist = table.histogram()
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(_MAGIC, 1, table.k, len(hist)))
        for cost in sorted(hist):
            fh.write(_LEVEL.pack(cost, hist[cost]))
        fh.write(table.costs.tobytes())


def load_cost_table(path) -> CostTable:
    with open(path, "rb") as fh:
        header = fh.read(_HEADER.size)
        if len(header) != _HEADER.size:
            raise CostTableError("truncated cost table header")
        magic, version, k, n_levels = _HEADER.unpack(header)
        if magic != _MAGIC:
            raise CostTableError("not a cost table file")
        if version != 1:
            raise CostTableError(f"unsupported cost table version {version}")
        declared = {}
        for _ in range(n_levels):
            cost, count = _LEVEL.unpack(fh.read(_LEVEL.size))
            declared[cost] = count
        body = fh.read(1 << (2 * k))
        if len(body) != 1 << (2 * k):
            raise CostTableError("truncated cost table body")
    table = CostTable(k, np.frombuffer(body, dtype=np.uint8).copy(), "file")
    if table.costs[0] != 0:
        raise CostTableError("identity slot must be zero")
    if table.histogram() != declared:
        raise CostTableError("histogram checksum mismatch")
    return table


def verify_gross_histogram(table: CostTable) -> None:
    """Raise unless the table matches the expected gross-code histogram."""
    if table.k != 11:
        raise CostTableError(f"gross table must have k=11, got {table.k}")
    hist = table.histogram()
    if hist != GROSS_COST_HISTOGRAM:
        raise CostTableError(
            f"histogram {hist} does not match the gross-code reference"
        )
    if sum(hist.values()) != 4**11 - 1:
        raise CostTableError("histogram does not cover all nonidentity strings")
