"""Weighted instruction DAG, critical path, idle materialization, and
segment extraction.

Edges come from per-resource program order (qubits, pivots, adapters,
factory production/patch slots) plus the explicit dependencies carried by
instructions (teleport-before-production buffer limits, cascade order).
Instruction latencies are the node weights; circuit duration is the longest
weighted path.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .costmodel import CostModel
from .lowering import BbInstr, BbProgram


@dataclass
class InstrDag:
    nodes: list[BbInstr]
    preds: list[list[int]]
    start: list[float] = field(default_factory=list)  # ASAP schedule
    finish: list[float] = field(default_factory=list)


@dataclass
class Segment:
    module: int
    groups: list[int]  # MeasGroup ids in path order
    node_spans: dict[int, list[int]]  # gid -> path node indices
    spanned_inter: list[int] = field(default_factory=list)


def build_dag(program: BbProgram) -> InstrDag:
    nodes = list(program.instructions)  # snapshot: idle nodes may be appended later
    uid_to_index = {instr.uid: i for i, instr in enumerate(nodes)}
    preds: list[list[int]] = [[] for _ in nodes]
    last_writer: dict = {}
    for j, instr in enumerate(nodes):
        seen = set()
        for res in instr.resources:
            i = last_writer.get(res)
            if i is not None and i not in seen:
                preds[j].append(i)
                seen.add(i)
            last_writer[res] = j
        for uid in instr.extra_deps:
            i = uid_to_index[uid]
            if i not in seen:
                preds[j].append(i)
                seen.add(i)
        if any(i >= j for i in preds[j]):
            raise RuntimeError("dependency cycle: instruction depends on a later one")
    return InstrDag(nodes, preds)


def critical_path(dag: InstrDag) -> tuple[list[int], float]:
    """Longest weighted path via topological DP (program order is already
    topological). Ties break to the lowest node index, so results are
    deterministic."""
    n = len(dag.nodes)
    dist = [0.0] * n
    best_pred = [-1] * n
    for j in range(n):
        incoming = 0.0
        pick = -1
        for i in dag.preds[j]:
            if dist[i] > incoming:
                incoming = dist[i]
                pick = i
        dist[j] = incoming + dag.nodes[j].latency
        best_pred[j] = pick
    dag.start = [dist[j] - dag.nodes[j].latency for j in range(n)]
    dag.finish = dist
    if n == 0:
        return [], 0.0
    end = 0
    for j in range(1, n):
        if dist[j] > dist[end]:
            end = j
    path = []
    j = end
    while j != -1:
        path.append(j)
        j = best_pred[j]
    path.reverse()
    return path, dist[end]


def clifford_only_duration(dag: InstrDag, path: list[int]) -> float:
    """Critical-path duration with the gate-teleportation nodes removed."""
    return sum(
        dag.nodes[j].latency for j in path if dag.nodes[j].kind not in ("tele", "T", "ls")
    )


def materialize_idle(program: BbProgram, dag: InstrDag, model: CostModel) -> int:
    """Charge factory waits: for every teleport, the gap on the requesting
    pivot since its previous use becomes idle instructions (weight =
    gap / t_idle). Returns the number of idle records appended."""
    if not dag.start:
        critical_path(dag)
    last_on_pivot: dict[int, float] = {}
    idle_instrs = []
    t_idle = model.t("idle")
    for j, instr in enumerate(program.instructions):
        pivots = [r[1] for r in instr.resources if r[0] == "pivot"]
        if instr.kind == "tele" and instr.module is not None:
            prev_end = last_on_pivot.get(instr.module, 0.0)
            gap = dag.start[j] - prev_end
            if gap > 1e-9:
                idle_instrs.append(BbInstr(
                    program.new_uid(), "idle", gap, "synthesis", instr.source,
                    module=instr.module, weight=gap / t_idle))
        for m in pivots:
            last_on_pivot[m] = max(last_on_pivot.get(m, 0.0), dag.finish[j])
    program.instructions.extend(idle_instrs)
    return len(idle_instrs)


def extract_segments(program: BbProgram, dag: InstrDag, path: list[int]) -> list[Segment]:
    """Maximal same-module runs of measurement-synthesis blocks on the
    critical path. Communication `inter` nodes are spanned without breaking
    the run; pivot-only readouts are transparent; everything else (synthesis
    traffic, inserted Clifford blocks, module changes) closes the run."""
    segments: list[Segment] = []
    current: Segment | None = None

    def close():
        nonlocal current
        if current is not None and current.groups:
            segments.append(current)
        current = None

    for j in path:
        instr = dag.nodes[j]
        if instr.kind == "inter":
            if current is not None:
                current.spanned_inter.append(j)
            continue
        if instr.pivot_only:
            continue
        group = program.meas_groups.get(instr.group) if instr.group is not None else None
        if group is None or group.role == "inserted":
            close()
            continue
        if current is not None and current.module != group.module:
            close()
        if current is None:
            current = Segment(group.module, [], {})
        if not current.groups or current.groups[-1] != group.gid:
            current.groups.append(group.gid)
            current.node_spans[group.gid] = []
        current.node_spans[group.gid].append(j)
    close()
    return segments
