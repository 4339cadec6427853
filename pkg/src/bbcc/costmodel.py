"""Instruction cost tables, the first-order union-bound failure estimate,
and the per-rotation placement formulas used by the ratio sweeps.

Logical error rates are stored as log10 values so the reference table is
transcribed exactly as published; probabilities are derived on demand.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

INSTRUCTION_KINDS = ("idle", "aut", "in", "inter", "tele", "T", "ls")
NON_CLIFFORD_KINDS = ("tele", "T", "ls")

# Reference model: timesteps and log10 logical error rates per instruction.
_REFERENCE_TIMES = {
    "idle": 8.0,
    "aut": 14.0,
    "in": 120.0,
    "inter": 120.0,
    "tele": 120.0,  # inherits inter
    "T": 122.0,
    "ls": 66.0,
}
_REFERENCE_LOG10P = {
    "idle": -8.8,
    "aut": -6.4,
    "in": -5.0,
    "inter": -2.7,
    "tele": -2.7,  # inherits inter
    "T": math.log10(2e-6),
    "ls": -7.2,
}


@dataclass(frozen=True)
class CostModel:
    times: dict[str, float] = field(default_factory=lambda: dict(_REFERENCE_TIMES))
    log10p: dict[str, float] = field(default_factory=lambda: dict(_REFERENCE_LOG10P))

    def __post_init__(self):
        for kind in INSTRUCTION_KINDS:
            if kind not in self.times or kind not in self.log10p:
                raise ValueError(f"cost model missing instruction {kind!r}")
            if self.times[kind] <= 0:
                raise ValueError(f"non-positive latency for {kind!r}")
            if not -30 < self.log10p[kind] < 0:
                raise ValueError(f"log10 error rate out of range for {kind!r}")

    def t(self, kind: str) -> float:
        return self.times[kind]

    def p(self, kind: str) -> float:
        return 10.0 ** self.log10p[kind]

    def derive(self, times=None, log10p=None) -> "CostModel":
        new_times = dict(self.times)
        new_times.update(times or {})
        new_log = dict(self.log10p)
        new_log.update(log10p or {})
        return CostModel(new_times, new_log)

    def with_ratios(self, p_t_over_inter: float | None = None,
                    t_t_over_inter: float | None = None,
                    p_ls_over_inter: float | None = None) -> "CostModel":
        """Reference model with the swept ratio(s) replaced."""
        times = {}
        log10p = {}
        if p_t_over_inter is not None:
            log10p["T"] = self.log10p["inter"] + math.log10(p_t_over_inter)
        if p_ls_over_inter is not None:
            log10p["ls"] = self.log10p["inter"] + math.log10(p_ls_over_inter)
        if t_t_over_inter is not None:
            times["T"] = self.times["inter"] * t_t_over_inter
        return self.derive(times, log10p)


REFERENCE_MODEL = CostModel()


def load_cost_model(path) -> CostModel:
    """Key-value file: `<kind>.time <float>` and `<kind>.log10p <float>` per
    line, `#` comments; unspecified entries keep reference values, and tele
    inherits inter unless overridden."""
    times = dict(_REFERENCE_TIMES)
    log10p = dict(_REFERENCE_LOG10P)
    tele_time_set = tele_p_set = False
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            try:
                key, value = line.split()
                kind, attr = key.split(".")
                number = float(value)
            except ValueError:
                raise ValueError(f"{path}:{lineno}: bad cost model line {raw!r}") from None
            if kind not in INSTRUCTION_KINDS:
                raise ValueError(f"{path}:{lineno}: unknown instruction {kind!r}")
            if attr == "time":
                times[kind] = number
                tele_time_set |= kind == "tele"
            elif attr == "log10p":
                log10p[kind] = number
                tele_p_set |= kind == "tele"
            else:
                raise ValueError(f"{path}:{lineno}: unknown attribute {attr!r}")
    if not tele_time_set:
        times["tele"] = times["inter"]
    if not tele_p_set:
        log10p["tele"] = log10p["inter"]
    return CostModel(times, log10p)


def save_cost_model(path, model: CostModel) -> None:
    with open(path, "w") as fh:
        for kind in INSTRUCTION_KINDS:
            fh.write(f"{kind}.time {model.times[kind]!r}\n")
            fh.write(f"{kind}.log10p {model.log10p[kind]!r}\n")


# ---------------------------------------------------------------------------
# Union-bound estimate

@dataclass
class Report:
    counts: dict[str, float]
    p_circ: float
    p_cliff: float
    failure_by_kind: dict[str, float]
    n_inter_comm: float
    n_inter_tele: float
    t_circ: float | None = None
    t_cliff: float | None = None
    duration_by_kind: dict[str, float] | None = None
    synthetic_cost_model: bool = False

    def as_dict(self) -> dict:
        return {
            "p_circ": self.p_circ,
            "p_cliff": self.p_cliff,
            "t_circ": self.t_circ,
            "t_cliff": self.t_cliff,
            "counts": {k: self.counts.get(k, 0.0) for k in INSTRUCTION_KINDS},
            "n_inter_comm": self.n_inter_comm,
            "n_inter_tele": self.n_inter_tele,
            "failure_by_kind": self.failure_by_kind,
            "duration_by_kind": self.duration_by_kind,
            "synthetic_cost_model": self.synthetic_cost_model,
        }


def _iter_instructions(program):
    return program.instructions if hasattr(program, "instructions") else program


def estimate(program, model: CostModel) -> Report:
    """p_circ = sum_i N_i p_i over all instruction kinds; p_cliff excludes
    the gate-teleportation kinds (tele, T, ls). Fractional counts from
    expected-mode lowering are accepted as weights."""
    counts = {kind: 0.0 for kind in INSTRUCTION_KINDS}
    for instr in _iter_instructions(program):
        counts[instr.kind] += instr.weight
    failure_by_kind = {k: counts[k] * model.p(k) for k in INSTRUCTION_KINDS}
    p_circ = sum(failure_by_kind.values())
    p_cliff = sum(v for k, v in failure_by_kind.items() if k not in NON_CLIFFORD_KINDS)
    return Report(
        counts=counts,
        p_circ=p_circ,
        p_cliff=p_cliff,
        failure_by_kind=failure_by_kind,
        n_inter_comm=counts["inter"],
        n_inter_tele=counts["tele"],
        synthetic_cost_model=getattr(program, "synthetic_cost_model", False),
    )


# ---------------------------------------------------------------------------
# Per-rotation placement formulas (one arbitrary-angle rotation)

def per_rotation_failure(model: CostModel, n_t: float, placement: str) -> float:
    p_inter, p_t, p_ls = model.p("inter"), model.p("T"), model.p("ls")
    if placement == "lpu":
        return n_t * (p_inter + p_t)
    if placement == "fac":
        return 2.0 * (p_inter + n_t * (p_t + p_ls))
    raise ValueError(f"unknown placement {placement!r}")


def per_rotation_latency(model: CostModel, n_t: float, placement: str) -> float:
    t_inter, t_t, t_ls = model.t("inter"), model.t("T"), model.t("ls")
    if placement == "lpu":
        return n_t * max(t_inter, t_t) + min(t_inter, t_t)
    if placement == "fac":
        return 2.0 * (n_t * t_t + t_ls + t_inter)
    raise ValueError(f"unknown placement {placement!r}")


def sweep_ratio_cells(
    model: CostModel,
    n_t: float,
    p_ratios: list[float],
    t_ratios: list[float],
) -> list[dict]:
    """Per-rotation syn@fac / syn@LPU ratios over a grid of p_T/p_inter and
    t_T/t_inter values (all other entries at the given model)."""
    rows = []
    for rp in p_ratios:
        for rt in t_ratios:
            cell = model.with_ratios(p_t_over_inter=rp, t_t_over_inter=rt)
            fail_ratio = per_rotation_failure(cell, n_t, "fac") / per_rotation_failure(
                cell, n_t, "lpu"
            )
            dur_ratio = per_rotation_latency(cell, n_t, "fac") / per_rotation_latency(
                cell, n_t, "lpu"
            )
            rows.append(
                {
                    "p_T_over_p_inter": rp,
                    "t_T_over_t_inter": rt,
                    "failure_ratio": fail_ratio,
                    "duration_ratio": dur_ratio,
                }
            )
    return rows


def geometric_mean(values) -> float:
    values = list(values)
    if not values:
        raise ValueError("geometric mean of nothing")
    return math.exp(sum(math.log(v) for v in values) / len(values))


def _safe_ratio(numerator: float, denominator: float) -> float:
    if numerator == denominator:
        return 1.0  # covers Clifford-only workloads where both sides vanish
    if denominator == 0:
        return math.inf
    return numerator / denominator


def _run_sweep_cell(cell: tuple) -> dict:
    """One (workload, M, F, placement) pipeline run; pure function of the
    cell description so cells can go to a process pool."""
    from .pipeline import RunConfig, run_compile  # local import: layering

    w_idx, m_count, f_count, placement, cfg_dict = cell
    row = {"workload": w_idx, "M": m_count, "F": f_count, "placement": placement}
    try:
        result = run_compile(RunConfig.from_dict(cfg_dict))
    except ValueError as exc:
        row["error"] = str(exc)
        return row
    report = result.report
    row.update({"p_circ": report.p_circ, "p_cliff": report.p_cliff,
                "t_circ": report.t_circ, "t_cliff": report.t_cliff})
    for kind in INSTRUCTION_KINDS:
        row[f"N_{kind}"] = report.counts.get(kind, 0.0)
    row["N_inter_tele"] = report.n_inter_tele
    row["N_inter_comm"] = report.n_inter_comm
    return row


def sweep_system(
    workloads: list[dict],
    modules: list[int],
    factories: list[int],
    base: dict | None = None,
    placements=("lpu", "fac"),
    jobs: int = 1,
) -> tuple[list[dict], list[dict]]:
    """End-to-end sweep over workloads x LPU count x factory count x
    placement. Returns (per-cell rows, per-(M, F) ratio summary with the
    geometric means of p_circ and t_circ syn@fac / syn@LPU ratios). Capacity
    violations become error rows; the sweep continues. `jobs` > 1 dispatches
    cells to a process pool."""
    cells = []
    for w_idx, workload in enumerate(workloads):
        for m_count in modules:
            for f_count in factories:
                for placement in placements:
                    cfg_dict = dict(base or {})
                    cfg_dict.update({"modules": m_count, "factories": f_count,
                                     "placement": placement})
                    if isinstance(workload, str):
                        cfg_dict["input"] = workload
                    else:
                        cfg_dict["gen"] = dict(workload)
                    cells.append((w_idx, m_count, f_count, placement, cfg_dict))
    if jobs > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_run_sweep_cell, cells))
    else:
        rows = [_run_sweep_cell(cell) for cell in cells]
    metrics = {(r["workload"], r["M"], r["F"], r["placement"]): r
               for r in rows if "error" not in r}
    summary = []
    for m_count in modules:
        for f_count in factories:
            p_list, t_list = [], []
            for w_idx in range(len(workloads)):
                fac = metrics.get((w_idx, m_count, f_count, "fac"))
                lpu = metrics.get((w_idx, m_count, f_count, "lpu"))
                if not fac or not lpu:
                    continue
                p_list.append(_safe_ratio(fac["p_circ"], lpu["p_circ"]))
                t_list.append(_safe_ratio(fac["t_circ"], lpu["t_circ"]))
            if p_list:
                summary.append(
                    {"M": m_count, "F": f_count,
                     "workloads": len(p_list),
                     "p_ratio_geomean": geometric_mean(p_list),
                     "t_ratio_geomean": geometric_mean(t_list)}
                )
    return rows, summary
