"""Clifford insertion: per-segment multi-window selection by dynamic
programming, plus the iterative critical-path driver.

A window (a, b, k) wraps segment positions a..b in a C_k^dagger / C_k
sandwich, conjugating every enclosed measurement. Raw gain at position i is
Delta_k[i] = f(P_i) - f(C_k P_i C_k^dagger); a window pays the fixed
overhead s_k = cost of implementing the opening and closing rotations (three
native measurements per unit of f each, so 6 f(C_k) for a self-inverse Pauli
rotation). The DP picks disjoint closed windows maximizing the net
reduction in O(KL) using running prefix sums and per-candidate best bases.

The driver scores every segment on the current critical path, rewrites the
top T segments, rebuilds the path, and repeats until the relative duration
reduction drops below the threshold. A rewrite is reverted wholesale if it
ever fails to shrink the critical path (possible when a window increases the
cost of an interior node that another path runs through).
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .bbcode import CostTable
from .costmodel import CostModel
from .lowering import BbProgram, MeasGroup, _meas_block
from .pauli import SignedPauli, SymplecticVector, quarter_turn
from .scheduler import Segment, build_dag, critical_path, extract_segments

ROTATION_MEAS_FACTOR = 3  # native measurements per pi/4 rotation


@dataclass
class WindowProblem:
    deltas: list[list[int]]  # K x L raw reductions
    overheads: list[int]  # per-candidate window overhead s_k > 0

    def __post_init__(self):
        if not self.deltas or len(self.deltas) != len(self.overheads):
            raise ValueError("need one overhead per candidate")
        if any(s <= 0 for s in self.overheads):
            raise ValueError("window overhead must be positive")
        lengths = {len(row) for row in self.deltas}
        if len(lengths) > 1:
            raise ValueError("ragged delta rows")


@dataclass
class WindowSolution:
    windows: list[tuple[int, int, int]]  # (a, b, k), positions 1-based
    net_reduction: int


def solve_windows(problem: WindowProblem) -> WindowSolution:
    """Optimal disjoint windows via the prefix/base/close recurrence."""
    deltas = problem.deltas
    K = len(deltas)
    L = len(deltas[0]) if deltas else 0
    pref = [[0] * (L + 1) for _ in range(K)]
    for k in range(K):
        for i in range(1, L + 1):
            pref[k][i] = pref[k][i - 1] + deltas[k][i - 1]
    dp = [0] * (L + 1)
    # base_k[i] = max_{1<=j<=i} dp[j-1] - pref_k[j-1] - s_k, with the argmax
    # start position kept for backtracking.
    base = [-problem.overheads[k] for k in range(K)]
    base_start = [1] * K
    choice: list[tuple] = [("skip",)] * (L + 1)
    for i in range(1, L + 1):
        best = dp[i - 1]
        pick: tuple = ("skip",)
        for k in range(K):
            close = base[k] + pref[k][i]
            if close > best:
                best = close
                pick = ("close", k, base_start[k])
        dp[i] = best
        choice[i] = pick
        for k in range(K):
            candidate = dp[i] - pref[k][i] - problem.overheads[k]
            if candidate > base[k]:
                base[k] = candidate
                base_start[k] = i + 1
    windows = []
    i = L
    while i > 0:
        if choice[i][0] == "skip":
            i -= 1
        else:
            _, k, a = choice[i]
            windows.append((a, i, k))
            i = a - 1
    windows.reverse()
    return WindowSolution(windows, dp[L])


# ---------------------------------------------------------------------------
# Driver

@dataclass
class AppliedWindow:
    module: int
    candidate: SymplecticVector
    group_ids: list[int]
    before: list[SignedPauli]
    after: list[SignedPauli]
    net_units: int


@dataclass
class InsertionReport:
    iterations: int = 0
    windows: list[AppliedWindow] = field(default_factory=list)
    t_before: float = 0.0
    t_after: float = 0.0
    reverted_last: bool = False


def default_library(table: CostTable, cap: int = 64) -> list[SymplecticVector]:
    """Cheapest candidate rotations: lowest synthesis cost, then index order."""
    return table.min_cost_strings(cap)


def _conjugate_group(group: MeasGroup, candidate: SymplecticVector) -> SignedPauli:
    # The sandwich turns P into C P C^dagger, i.e. the pushforward through
    # C^dagger (a -pi/4 turn about the candidate).
    return quarter_turn(group.pauli, SignedPauli(candidate, 1), -1)


def _window_problem(
    program: BbProgram,
    segment: Segment,
    table: CostTable,
    library: list[SymplecticVector],
) -> WindowProblem:
    groups = [program.meas_groups[g] for g in segment.groups]
    deltas = []
    overheads = []
    for cand in library:
        s_k = 2 * ROTATION_MEAS_FACTOR * table.lookup(cand)
        row = []
        for g in groups:
            new_vec = _conjugate_group(g, cand).vector
            if new_vec.is_zero:
                row.append(-(10**9))  # cannot measure identity; forbid
            else:
                row.append(g.cost - table.lookup(new_vec))
        deltas.append(row)
        overheads.append(s_k)
    return WindowProblem(deltas, overheads)


def _per_unit_duration(model: CostModel, aut_per_meas: int) -> float:
    return model.t("in") + aut_per_meas * model.t("aut")


def _rewrite_segment(
    program: BbProgram,
    segment: Segment,
    solution: WindowSolution,
    library: list[SymplecticVector],
    table: CostTable,
    model: CostModel,
    aut_per_meas: int,
    report: InsertionReport,
) -> None:
    """Apply the chosen windows: replace enclosed measurement blocks with
    their conjugated versions and wrap them in opening/closing rotation
    blocks. Spanned `inter` nodes pass through untouched."""
    by_uid = {instr.uid: idx for idx, instr in enumerate(program.instructions)}
    for a, b, k in solution.windows:
        cand = library[k]
        gids = segment.groups[a - 1 : b]
        groups = [program.meas_groups[g] for g in gids]
        before = [g.pauli for g in groups]
        rot_cost = ROTATION_MEAS_FACTOR * table.lookup(cand)
        module = groups[0].module

        first_idx = min(by_uid[program.instructions[i].uid]
                        for g in groups
                        for i in _group_indices(program, g.gid))
        last_idx = max(i for g in groups for i in _group_indices(program, g.gid))

        qubit_res = _candidate_resources(program, module, cand)
        opening = _insertion_block(program, module, cand, rot_cost, model,
                                   aut_per_meas, qubit_res)
        closing = _insertion_block(program, module, cand, rot_cost, model,
                                   aut_per_meas, qubit_res)

        after = []
        replacements: dict[int, list] = {}
        for g in groups:
            new_pauli = _conjugate_group(g, cand)
            after.append(new_pauli)
            new_cost = table.lookup(new_pauli.vector)
            g.pauli = new_pauli
            g.cost = new_cost
            old_indices = _group_indices(program, g.gid)
            sample = program.instructions[old_indices[0]]
            block = _meas_block(program, g.module, new_pauli, new_cost, g.role,
                                sample.source, model, aut_per_meas,
                                tuple(r for r in sample.resources if r[0] == "q"),
                                origin=sample.origin)
            # _meas_block registers a fresh group; fold it back into g.
            new_gid = block[0].group
            del program.meas_groups[new_gid]
            block = [ _with_group(instr, g.gid) for instr in block ]
            replacements[g.gid] = (old_indices, block)

        new_instructions = []
        for idx, instr in enumerate(program.instructions):
            if idx == first_idx:
                new_instructions.extend(opening)
            gid = instr.group
            if gid in replacements:
                old_indices, block = replacements[gid]
                if idx == old_indices[0]:
                    new_instructions.extend(block)
                # other indices of the old block are dropped
            else:
                new_instructions.append(instr)
            if idx == last_idx:
                new_instructions.extend(closing)
        program.instructions = new_instructions
        by_uid = {instr.uid: i for i, instr in enumerate(program.instructions)}

        report.windows.append(AppliedWindow(
            module, cand, list(gids), before, after,
            solution.net_reduction))


def _with_group(instr, gid):
    from dataclasses import replace

    return replace(instr, group=gid)


def _group_indices(program: BbProgram, gid: int) -> list[int]:
    return [i for i, instr in enumerate(program.instructions) if instr.group == gid]


def _candidate_resources(program: BbProgram, module: int, cand: SymplecticVector) -> tuple:
    qubits = sorted(q for q in range(len(program.alloc.module_of))
                    if program.alloc.module_of[q] == module)
    bits = cand.x | cand.z
    return tuple(("q", qubits[slot]) for slot in range(min(len(qubits), cand.n))
                 if (bits >> slot) & 1)


def _insertion_block(program, module, cand, rot_cost, model, aut_per_meas, qubit_res):
    local = SignedPauli(cand, 1)
    block = _meas_block(program, module, local, rot_cost, "inserted", -1,
                        model, aut_per_meas, qubit_res, origin="plumbing")
    return block


def apply_insertion(
    program: BbProgram,
    table: CostTable,
    model: CostModel,
    library: list[SymplecticVector] | None = None,
    top_segments: int = 5,
    threshold: float = 0.01,
    aut_per_meas: int = 2,
    max_iterations: int = 50,
) -> tuple[BbProgram, InsertionReport]:
    """Iterated critical-path Clifford insertion. Never increases the
    critical-path duration: an iteration that would is rolled back and the
    loop stops."""
    if library is None:
        library = default_library(table)
    library = [v for v in library if not v.is_zero]
    report = InsertionReport()
    dag = build_dag(program)
    path, t_current = critical_path(dag)
    report.t_before = report.t_after = t_current
    if not library or t_current == 0:
        return program, report
    unit = _per_unit_duration(model, aut_per_meas)

    for _ in range(max_iterations):
        segments = extract_segments(program, dag, path)
        scored = []
        for seg_idx, seg in enumerate(segments):
            problem = _window_problem(program, seg, table, library)
            solution = solve_windows(problem)
            if solution.net_reduction > 0:
                scored.append((solution.net_reduction * unit, seg_idx, seg, solution))
        if not scored:
            break
        scored.sort(key=lambda item: (-item[0], item[1]))
        snapshot = program.clone()
        windows_before = len(report.windows)
        for _gain, _idx, seg, solution in scored[:top_segments]:
            _rewrite_segment(program, seg, solution, library, table, model,
                             aut_per_meas, report)
        report.iterations += 1
        dag = build_dag(program)
        path, t_new = critical_path(dag)
        if t_new > t_current + 1e-9:
            program.instructions = snapshot.instructions
            program.meas_groups = snapshot.meas_groups
            del report.windows[windows_before:]
            report.reverted_last = True
            dag = build_dag(program)
            path, t_new = critical_path(dag)
            report.t_after = t_new
            break
        reduction = (t_current - t_new) / t_current if t_current else 0.0
        t_current = t_new
        report.t_after = t_new
        if reduction < threshold:
            break
    return program, report
