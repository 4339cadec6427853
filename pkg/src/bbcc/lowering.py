"""Lowering of a deferred, allocated PBC circuit to the native instruction
stream of the modular architecture.

Lowering rules:

* single-module measurement of P: f(P) `in` instructions, each sandwiched by
  `aut_per_meas` shift automorphisms;
* multi-module op spanning modules a..b on the line: one communication
  `inter` per adjacent pivot pair in [min, max] (intermediate pivots are
  occupied), per-module local pieces lowered like in-module measurements,
  and for measurements a final pivot X readout (`in`);
* T-like rotation: one |T> production plus one magic-state teleport,
  independent of the placement choice;
* arbitrary-angle rotation: synth_at_lpu (|T> states teleported one by one)
  or synth_at_fac (|theta>-family states synthesized at the factory and
  teleported, with the doubling correction cascade).

Expected mode books closed-form expectations as weighted aggregate
instructions (node counts stay integral, weights carry the fractional
instruction counts); sampled mode draws per-rotation T counts and cascade
lengths from a seeded generator and emits unit-weight instructions.

Factories produce one state at a time with a single-item buffer; requests go
to the earliest-ready factory, ties to the lowest index.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .allocation import Allocation
from .bbcode import CostTable
from .circuit import Angle, AngleClass, OpKind
from .costmodel import CostModel
from .deferral import DeferredCircuit
from .pauli import SignedPauli, SymplecticVector

ORIGINS = ("communication", "teleportation", "synthesis", "measurement", "plumbing")


@dataclass(frozen=True)
class BbInstr:
    uid: int
    kind: str  # idle | aut | in | inter | tele | T | ls
    latency: float
    origin: str
    source: int = -1  # source op index in the deferred circuit
    module: int | None = None
    modules: tuple[int, ...] = ()  # both endpoints for inter
    factory: int | None = None
    weight: float = 1.0
    group: int | None = None  # measurement-synthesis block id
    pivot_only: bool = False
    resources: tuple = ()
    extra_deps: tuple[int, ...] = ()  # uids this instruction must follow


@dataclass
class MeasGroup:
    gid: int
    op_index: int
    module: int
    pauli: SignedPauli  # local string on the module's compute slots
    cost: int
    role: str  # "meas" | "local" | "inserted"


@dataclass
class RotationStats:
    op_index: int
    placement: str
    n_states: int
    teleports: float
    t_count: float
    ls_count: float
    failure: float
    latency: float


@dataclass
class BbProgram:
    n_modules: int
    n_factories: int
    capacity: int
    alloc: Allocation
    instructions: list[BbInstr] = field(default_factory=list)
    meas_groups: dict[int, MeasGroup] = field(default_factory=dict)
    rotation_stats: list[RotationStats] = field(default_factory=list)
    synthetic_cost_model: bool = False
    _next_uid: int = 0
    _next_gid: int = 0

    def new_uid(self) -> int:
        self._next_uid += 1
        return self._next_uid

    def new_gid(self) -> int:
        self._next_gid += 1
        return self._next_gid

    def counts(self) -> dict[str, float]:
        out: dict[str, float] = {}
        for instr in self.instructions:
            out[instr.kind] = out.get(instr.kind, 0.0) + instr.weight
        return out

    def clone(self) -> "BbProgram":
        return BbProgram(
            self.n_modules,
            self.n_factories,
            self.capacity,
            self.alloc,
            list(self.instructions),
            {gid: replace(g) for gid, g in self.meas_groups.items()},
            list(self.rotation_stats),
            self.synthetic_cost_model,
            self._next_uid,
            self._next_gid,
        )

    def render_text(self) -> str:
        lines = ["# idx kind weight latency module factory origin source group"]
        for i, t in enumerate(self.instructions):
            lines.append(
                f"{i} {t.kind} {t.weight:g} {t.latency:g} "
                f"{t.module if t.module is not None else '-'} "
                f"{t.factory if t.factory is not None else '-'} "
                f"{t.origin} {t.source} {t.group if t.group is not None else '-'}"
            )
        return "\n".join(lines) + "\n"


@dataclass
class SynthesisOracle:
    """T-count oracle for arbitrary-angle rotations.

    `paper-statistics` draws from the reported Ross-Selinger statistics at
    the supported tolerances; `fixed` returns a constant; `table` looks up
    explicit angles. Angles that are multiples of pi/2 are trivial and cost
    nothing.
    """

    mode: str = "paper-statistics"
    epsilon: float = 1e-3
    fixed_n_t: float | None = None
    table: dict | None = None

    PARAMS = {1e-3: (28.63, 7.57), 1e-4: (39.25, 4.65)}

    def __post_init__(self):
        if self.mode == "paper-statistics" and self.epsilon not in self.PARAMS:
            raise ValueError(
                f"paper-statistics mode supports epsilon in {sorted(self.PARAMS)}"
            )
        if self.mode == "fixed" and self.fixed_n_t is None:
            raise ValueError("fixed mode needs fixed_n_t")
        if self.mode == "table" and self.table is None:
            raise ValueError("table mode needs a table")

    def _lookup(self, radians: float) -> float:
        for angle, n_t in self.table.items():
            if abs(angle - radians) < 1e-9:
                return n_t
        raise KeyError(f"no table entry for angle {radians}")

    def mean_n_t(self, angle: Angle) -> float:
        if angle.is_synthesis_trivial():
            return 0.0
        if self.mode == "paper-statistics":
            return self.PARAMS[self.epsilon][0]
        if self.mode == "fixed":
            return float(self.fixed_n_t)
        return float(self._lookup(angle.radians))

    def sample_n_t(self, angle: Angle, rng: np.random.Generator) -> int:
        if angle.is_synthesis_trivial():
            return 0
        if self.mode == "paper-statistics":
            mu, var = self.PARAMS[self.epsilon]
            return max(1, round(rng.normal(mu, math.sqrt(var))))
        if self.mode == "fixed":
            return int(round(self.fixed_n_t))
        return int(round(self._lookup(angle.radians)))


@dataclass
class FactoryModel:
    count: int = 1

    def __post_init__(self):
        if self.count < 1:
            raise ValueError("need at least one factory")


class _FactoryQueue:
    """Earliest-ready factory wins, ties broken by index. Ready times advance
    by the production latency of each accepted request."""

    def __init__(self, count: int):
        self.ready = [0.0] * count

    def assign(self, production_latency: float) -> int:
        f = min(range(len(self.ready)), key=lambda i: (self.ready[i], i))
        self.ready[f] += production_latency
        return f


def placement_decision(model: CostModel, n_t: float) -> str:
    """Factory-side synthesis wins iff
    p_T/p_inter + 2 p_ls/p_inter < 1 - 2/n_T."""
    if n_t <= 2:
        return "lpu"
    lhs = model.p("T") / model.p("inter") + 2.0 * model.p("ls") / model.p("inter")
    return "fac" if lhs < 1.0 - 2.0 / n_t else "lpu"


def sample_cascade_states(rng: np.random.Generator, angle: Angle) -> list[Angle]:
    """Angles of the states actually consumed by one sampled syn@fac cascade:
    theta, then 2 theta with probability 1/2, and so on. The cascade stops
    early if the doubled angle becomes trivial or Clifford (nothing left to
    correct with magic states)."""
    states = []
    current = angle
    while True:
        states.append(current)
        doubled = Angle.from_float(2.0 * current.radians)
        if doubled.is_synthesis_trivial() or doubled.classify() is AngleClass.CLIFFORD:
            break
        if rng.random() >= 0.5:
            break
        current = doubled
    return states


# ---------------------------------------------------------------------------
# Fragment builders

def _qubit_resources(alloc: Allocation, module: int, support: list[int]) -> tuple:
    return tuple(("q", q) for q in support if alloc.module_of[q] == module)


def _meas_block(
    program: BbProgram,
    module: int,
    local: SignedPauli,
    cost: int,
    role: str,
    source: int,
    model: CostModel,
    aut_per_meas: int,
    qubit_res: tuple,
    origin: str = "measurement",
) -> list[BbInstr]:
    gid = program.new_gid()
    program.meas_groups[gid] = MeasGroup(gid, source, module, local, cost, role)
    resources = (("pivot", module),) + qubit_res
    out = []
    for _ in range(cost):
        for _ in range(aut_per_meas // 2):
            out.append(BbInstr(program.new_uid(), "aut", model.t("aut"), origin,
                               source, module, weight=1.0, group=gid,
                               resources=resources))
        out.append(BbInstr(program.new_uid(), "in", model.t("in"), origin,
                           source, module, weight=1.0, group=gid,
                           resources=resources))
        for _ in range(aut_per_meas - aut_per_meas // 2):
            out.append(BbInstr(program.new_uid(), "aut", model.t("aut"), origin,
                               source, module, weight=1.0, group=gid,
                               resources=resources))
    return out


def synth_at_lpu(
    program: BbProgram,
    angle: Angle,
    oracle: SynthesisOracle,
    factories: _FactoryQueue,
    model: CostModel,
    mode: str,
    rng: np.random.Generator,
    target: int,
    consume_res: tuple,
    source: int,
) -> tuple[list[BbInstr], RotationStats]:
    t_t, t_inter = model.t("T"), model.t("inter")
    out: list[BbInstr] = []
    if mode == "expected":
        n_t = oracle.mean_n_t(angle)
        units = math.ceil(n_t)
        scale = n_t / units if units else 0.0
    else:
        n_t = oracle.sample_n_t(angle, rng)
        units = int(n_t)
        scale = 1.0
    if units == 0:
        return out, RotationStats(source, "lpu", 0, 0, 0, 0, 0.0, 0.0)
    # One production/teleport pair per |T>; in expected mode the pair weights
    # and latencies are scaled by n_t/ceil(n_t) so totals match the mean while
    # the pipelined chain structure (and pivot occupancy) stays physical.
    tele_uids: list[int] = []
    for i in range(units):
        f = factories.assign(scale * t_t)
        deps = []
        if i >= 2:
            deps.append(tele_uids[i - 2])  # single-item buffer
        t_uid = program.new_uid()
        out.append(BbInstr(t_uid, "T", scale * t_t, "synthesis", source,
                           factory=f, weight=scale,
                           resources=(("fprod", f),), extra_deps=tuple(deps)))
        tele_uid = program.new_uid()
        out.append(BbInstr(tele_uid, "tele", scale * t_inter, "teleportation",
                           source, module=target, factory=f, weight=scale,
                           resources=consume_res + (("fadapter", f),),
                           extra_deps=(t_uid,)))
        tele_uids.append(tele_uid)
    teleports = t_count = float(n_t)
    latency = n_t * max(t_inter, t_t) + min(t_inter, t_t)
    ls_count = 0.0
    failure = teleports * model.p("tele") + t_count * model.p("T")
    stats = RotationStats(source, "lpu", 1, teleports, t_count, ls_count,
                          failure, latency)
    return out, stats


def synth_at_fac(
    program: BbProgram,
    angle: Angle,
    oracle: SynthesisOracle,
    factories: _FactoryQueue,
    model: CostModel,
    mode: str,
    rng: np.random.Generator,
    target: int,
    consume_res: tuple,
    source: int,
) -> tuple[list[BbInstr], RotationStats]:
    t_t, t_inter, t_ls = model.t("T"), model.t("inter"), model.t("ls")
    out: list[BbInstr] = []
    if mode == "expected":
        n_t = oracle.mean_n_t(angle)
        if n_t == 0:
            return out, RotationStats(source, "fac", 0, 0, 0, 0, 0.0, 0.0)
        # Closed form: two states in expectation, n_t |T>'s and lattice
        # surgeries each, one teleport each.
        prev_tele = None
        for _ in range(2):
            f = factories.assign(n_t * t_t + t_ls)
            deps = (prev_tele,) if prev_tele is not None else ()
            t_uid = program.new_uid()
            out.append(BbInstr(t_uid, "T", n_t * t_t, "synthesis", source,
                               factory=f, weight=n_t, resources=(("fprod", f),),
                               extra_deps=deps))
            ls_uid = program.new_uid()
            out.append(BbInstr(ls_uid, "ls", t_ls, "synthesis", source,
                               factory=f, weight=n_t,
                               resources=(("fpatch", f),), extra_deps=(t_uid,)))
            tele_uid = program.new_uid()
            out.append(BbInstr(tele_uid, "tele", t_inter, "teleportation",
                               source, module=target, factory=f,
                               resources=consume_res + (("fadapter", f), ("fpatch", f))))
            prev_tele = tele_uid
        states, teleports = 2, 2.0
        t_count = ls_count = 2.0 * n_t
        latency = 2.0 * (n_t * t_t + t_ls + t_inter)
    else:
        if angle.is_synthesis_trivial():
            return out, RotationStats(source, "fac", 0, 0, 0, 0, 0.0, 0.0)
        state_angles = sample_cascade_states(rng, angle)
        states = 0
        teleports = t_count = ls_count = 0.0
        latency = 0.0
        prev_tele = None
        for state_angle in state_angles:
            n_t = oracle.sample_n_t(state_angle, rng)
            if n_t == 0:
                break
            states += 1
            f = factories.assign(n_t * t_t + t_ls)
            ls_uids: list[int] = []
            first_deps = (prev_tele,) if prev_tele is not None else ()
            for i in range(n_t):
                deps = list(first_deps) if i == 0 else []
                if i >= 2:
                    deps.append(ls_uids[i - 2])  # single-item buffer
                t_uid = program.new_uid()
                out.append(BbInstr(t_uid, "T", t_t, "synthesis", source,
                                   factory=f, resources=(("fprod", f),),
                                   extra_deps=tuple(deps)))
                ls_uid = program.new_uid()
                out.append(BbInstr(ls_uid, "ls", t_ls, "synthesis", source,
                                   factory=f, resources=(("fpatch", f),),
                                   extra_deps=(t_uid,)))
                ls_uids.append(ls_uid)
            tele_uid = program.new_uid()
            out.append(BbInstr(tele_uid, "tele", t_inter, "teleportation",
                               source, module=target, factory=f,
                               resources=consume_res + (("fadapter", f), ("fpatch", f))))
            prev_tele = tele_uid
            teleports += 1
            t_count += n_t
            ls_count += n_t
            latency += n_t * t_t + t_ls + t_inter
    failure = (teleports * model.p("tele")
               + t_count * model.p("T") + ls_count * model.p("ls"))
    stats = RotationStats(source, "fac", states, teleports, t_count, ls_count,
                          failure, latency)
    return out, stats


# ---------------------------------------------------------------------------
# Main lowering pass

def _support(op) -> list[int]:
    bits = op.pauli.vector.x | op.pauli.vector.z
    return [q for q in range(op.pauli.n) if (bits >> q) & 1]


def _local_restriction(
    op_pauli: SignedPauli, alloc: Allocation, module: int, k_table: int, carry_sign: bool
) -> SignedPauli:
    """Restrict a global Pauli to one module's compute slots."""
    slots = {q: slot for slot, q in enumerate(sorted(
        q for q in range(len(alloc.module_of)) if alloc.module_of[q] == module))}
    x = z = 0
    for q, slot in slots.items():
        x |= ((op_pauli.vector.x >> q) & 1) << slot
        z |= ((op_pauli.vector.z >> q) & 1) << slot
    return SignedPauli(SymplecticVector(k_table, x, z), op_pauli.sign if carry_sign else 1)


def lower(
    deferred: DeferredCircuit,
    alloc: Allocation,
    cost_table: CostTable,
    placement: str,
    oracle: SynthesisOracle,
    factory: FactoryModel,
    model: CostModel,
    mode: str = "expected",
    seed: int = 0,
    aut_per_meas: int = 2,
) -> BbProgram:
    if placement not in ("lpu", "fac"):
        raise ValueError(f"unknown placement {placement!r}")
    if mode not in ("expected", "sampled"):
        raise ValueError(f"unknown mode {mode!r}")
    if alloc.capacity > cost_table.k:
        raise ValueError(
            f"allocation capacity {alloc.capacity} exceeds cost table width {cost_table.k}"
        )
    rng = np.random.default_rng(seed)
    program = BbProgram(alloc.n_modules, factory.count, alloc.capacity, alloc,
                        synthetic_cost_model=cost_table.synthetic)
    factories = _FactoryQueue(factory.count)
    synth = synth_at_lpu if placement == "lpu" else synth_at_fac

    for op_i, op in enumerate(deferred.circuit.ops):
        support = _support(op)
        modules = alloc.modules_of_support(support)
        target = modules[0]
        multi = len(modules) > 1
        is_meas = op.kind is OpKind.MEASUREMENT
        is_tlike = (not is_meas) and op.angle_class() is AngleClass.TLIKE
        is_arb = (not is_meas) and op.angle_class() is AngleClass.ARBITRARY
        if not (is_meas or is_tlike or is_arb):
            raise ValueError("lowering expects a Clifford-free circuit; run deferral first")
        if is_arb and oracle.mean_n_t(op.angle) == 0:
            continue  # trivial rotation: identity, nothing to emit

        if multi:
            # GHZ chain along the line through every intermediate pivot.
            for a in range(modules[0], modules[-1]):
                program.instructions.append(BbInstr(
                    program.new_uid(), "inter", model.t("inter"),
                    "communication", op_i, module=a, modules=(a, a + 1),
                    resources=(("pivot", a), ("pivot", a + 1), ("adapter", a, a + 1)),
                ))
            for idx, m in enumerate(modules):
                local = _local_restriction(op.pauli, alloc, m, cost_table.k,
                                           carry_sign=(idx == 0))
                cost = cost_table.lookup(local.vector)
                program.instructions.extend(_meas_block(
                    program, m, local, cost, "local", op_i, model,
                    aut_per_meas, _qubit_resources(alloc, m, support)))
            if is_meas:
                program.instructions.append(BbInstr(
                    program.new_uid(), "in", model.t("in"), "measurement",
                    op_i, module=target, pivot_only=True,
                    resources=(("pivot", target),),
                ))
        elif is_meas:
            local = _local_restriction(op.pauli, alloc, target, cost_table.k,
                                       carry_sign=True)
            cost = cost_table.lookup(local.vector)
            program.instructions.extend(_meas_block(
                program, target, local, cost, "meas", op_i, model,
                aut_per_meas, _qubit_resources(alloc, target, support)))

        if is_tlike:
            f = factories.assign(model.t("T"))
            t_uid = program.new_uid()
            program.instructions.append(BbInstr(
                t_uid, "T", model.t("T"), "synthesis", op_i, factory=f,
                resources=(("fprod", f),)))
            program.instructions.append(BbInstr(
                program.new_uid(), "tele", model.t("inter"), "teleportation",
                op_i, module=target, factory=f,
                resources=(("pivot", target),)
                + _qubit_resources(alloc, target, support) + (("fadapter", f),),
                extra_deps=(t_uid,)))
        elif is_arb:
            consume_res = (("pivot", target),) + _qubit_resources(alloc, target, support)
            instrs, stats = synth(program, op.angle, oracle, factories, model,
                                  mode, rng, target, consume_res, op_i)
            program.instructions.extend(instrs)
            program.rotation_stats.append(stats)

    return program
