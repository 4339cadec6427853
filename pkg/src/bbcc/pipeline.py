"""End-to-end compile pipeline: parse/generate -> defer -> allocate ->
lower -> schedule -> (optional insertion) -> estimate.

`RunConfig` captures every knob; the resolved config is embedded in each
report so a report reproduces itself byte for byte when re-run.
"""

from __future__ import annotations

import json
import os
from dataclasses import asdict, dataclass
from pathlib import Path

from . import __version__
from .allocation import Allocation, allocate
from .bbcode import (
    DEFAULT_GROSS_TABLE_PATH,
    CostTable,
    load_cost_table,
    synthetic_fallback,
)
from .circuit import PbcCircuit, gen_random, parse_circuit
from .costmodel import REFERENCE_MODEL, CostModel, Report, estimate, load_cost_model
from .deferral import DeferredCircuit, defer
from .insertion import InsertionReport, apply_insertion, default_library
from .lowering import BbProgram, FactoryModel, SynthesisOracle, lower
from .scheduler import (
    InstrDag,
    build_dag,
    clifford_only_duration,
    critical_path,
    materialize_idle,
)

DEFAULT_TABLE_ENV = "BBCC_COST_TABLE"


@dataclass
class GenSpec:
    n: int = 8
    L: int = 100
    clifford_frac: float = 0.3
    arb_frac: float = 0.2
    weight_lo: int = 1
    weight_hi: int = 3
    seed: int = 0

    def build(self) -> PbcCircuit:
        return gen_random(self.n, self.L, self.clifford_frac, self.arb_frac,
                          weight_dist=(self.weight_lo, self.weight_hi),
                          seed=self.seed)


@dataclass
class RunConfig:
    input: str | None = None
    gen: GenSpec | None = None
    modules: int = 1
    factories: int = 1
    capacity: int = 11
    placement: str = "fac"
    deferral: str = "transvection"
    allocator: str = "greedy"
    insertion: bool = False
    insertion_top: int = 5
    insertion_threshold: float = 0.01  # fraction, not percent
    insertion_cap: int = 64
    cost_model: str | None = None
    cost_table: str | None = None
    epsilon: float = 1e-3
    oracle_mode: str = "paper-statistics"
    oracle_fixed_n_t: float | None = None
    mode: str = "expected"
    seed: int = 0
    aut_per_meas: int = 2

    def to_dict(self) -> dict:
        data = asdict(self)
        return data

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        data = dict(data)
        gen = data.pop("gen", None)
        cfg = cls(**data)
        if gen is not None:
            cfg.gen = GenSpec(**gen)
        return cfg

    def validate(self) -> None:
        if (self.input is None) == (self.gen is None):
            raise ValueError("exactly one of input path or generator spec required")
        if self.modules < 1 or self.factories < 1:
            raise ValueError("need at least one module and one factory")
        if self.placement not in ("fac", "lpu"):
            raise ValueError(f"unknown placement {self.placement!r}")
        if self.mode not in ("expected", "sampled"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if not 0 < self.insertion_threshold <= 1:
            raise ValueError("insertion threshold must be in (0, 1]")


@dataclass
class CompileResult:
    config: RunConfig
    circuit: PbcCircuit
    deferred: DeferredCircuit
    alloc: Allocation
    table: CostTable
    program: BbProgram
    dag: InstrDag
    path: list[int]
    report: Report
    insertion: InsertionReport | None


def load_circuit(cfg: RunConfig) -> PbcCircuit:
    if cfg.input is not None:
        return parse_circuit(Path(cfg.input).read_text())
    return cfg.gen.build()


def build_cost_table(cfg: RunConfig) -> CostTable:
    path = cfg.cost_table or os.environ.get(DEFAULT_TABLE_ENV)
    if path:
        return load_cost_table(path)
    if cfg.capacity == 11 and DEFAULT_GROSS_TABLE_PATH.exists():
        return load_cost_table(DEFAULT_GROSS_TABLE_PATH)
    return synthetic_fallback(cfg.capacity)


def build_model(cfg: RunConfig) -> CostModel:
    return load_cost_model(cfg.cost_model) if cfg.cost_model else REFERENCE_MODEL


def run_compile(cfg: RunConfig) -> CompileResult:
    cfg.validate()
    circuit = load_circuit(cfg)
    model = build_model(cfg)
    table = build_cost_table(cfg)
    deferred = defer(circuit, cfg.deferral)
    alloc = allocate(deferred, cfg.modules, cfg.allocator, cfg.capacity)
    oracle = SynthesisOracle(mode=cfg.oracle_mode, epsilon=cfg.epsilon,
                             fixed_n_t=cfg.oracle_fixed_n_t)
    program = lower(deferred, alloc, table, cfg.placement, oracle,
                    FactoryModel(cfg.factories), model,
                    mode=cfg.mode, seed=cfg.seed, aut_per_meas=cfg.aut_per_meas)
    insertion_report = None
    if cfg.insertion:
        library = default_library(table, cfg.insertion_cap)
        program, insertion_report = apply_insertion(
            program, table, model, library=library,
            top_segments=cfg.insertion_top,
            threshold=cfg.insertion_threshold,
            aut_per_meas=cfg.aut_per_meas)
    dag = build_dag(program)
    path, t_circ = critical_path(dag)
    materialize_idle(program, dag, model)
    report = estimate(program, model)
    report.t_circ = t_circ
    report.t_cliff = clifford_only_duration(dag, path)
    by_kind: dict[str, float] = {}
    for j in path:
        node = dag.nodes[j]
        by_kind[node.kind] = by_kind.get(node.kind, 0.0) + node.latency
    report.duration_by_kind = by_kind
    return CompileResult(cfg, circuit, deferred, alloc, table, program, dag,
                         path, report, insertion_report)


def report_dict(result: CompileResult) -> dict:
    cfg = result.config
    data = {
        "tool": {"name": "bbcc", "version": __version__},
        "config": cfg.to_dict(),
        "circuit": {
            "n_qubits": result.circuit.n_qubits,
            "ops": result.circuit.L,
            "classes": result.circuit.class_counts(),
        },
        "deferral": {
            "engine": result.deferred.stats.engine,
            "cliffords_removed": result.deferred.stats.cliffords_removed,
            "word_ops": result.deferred.stats.word_ops,
        },
        "allocation": {
            "strategy": cfg.allocator,
            "module_of": list(result.alloc.module_of),
        },
        "cost_table": {
            "source": result.table.source,
            "k": result.table.k,
        },
        "estimate": result.report.as_dict(),
    }
    if result.report.synthetic_cost_model:
        data["watermark"] = "synthetic cost model"
    if result.insertion is not None:
        data["insertion"] = {
            "iterations": result.insertion.iterations,
            "windows": len(result.insertion.windows),
            "t_before": result.insertion.t_before,
            "t_after": result.insertion.t_after,
            "reverted_last": result.insertion.reverted_last,
        }
    return data


def render_report(result: CompileResult) -> str:
    return json.dumps(report_dict(result), indent=2, sort_keys=True) + "\n"


def render_dag_text(dag: InstrDag) -> str:
    """Adjacency + weights listing for --dump-dag."""
    lines = ["# node kind latency preds"]
    for j, node in enumerate(dag.nodes):
        preds = ",".join(str(i) for i in dag.preds[j]) or "-"
        lines.append(f"{j} {node.kind} {node.latency:g} {preds}")
    return "\n".join(lines) + "\n"
