"""Command-line driver.

Subcommands:

    compile     run the full pipeline on a circuit file or generated workload
    sweep       ratio or system sweeps, CSV output, resumable by config hash
    gen         write a random circuit file
    cost-table  verify a cost-table file or run the closure algorithm

Configuration precedence: built-in defaults < --config JSON file < BBCC_*
environment variables < explicit flags. Exit codes: 0 success, 1 input
error, 2 internal invariant violation.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import os
import sys
from pathlib import Path

import numpy as np

from .bbcode import (
    CostTableError,
    NativeSetSpec,
    closure_costs,
    hadamard_cols,
    load_cost_table,
    perm_cols,
    verify_gross_histogram,
    write_cost_table,
)
from .circuit import gen_random, render_circuit
from .costmodel import (
    INSTRUCTION_KINDS,
    geometric_mean,
    sweep_ratio_cells,
    sweep_system,
)
from .lowering import SynthesisOracle
from .pauli import SymplecticVector
from .pipeline import (
    GenSpec,
    RunConfig,
    render_dag_text,
    render_report,
    run_compile,
)

ENV_PREFIX = "BBCC_"


class InputError(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # input errors exit 1, not argparse's 2
        raise InputError(message)


def _env_overrides() -> dict:
    """BBCC_<FIELD> variables override config-file values (flags win over
    both). Example: BBCC_SEED=7 BBCC_PLACEMENT=lpu."""
    out = {}
    fields = {f.lower() for f in RunConfig.__dataclass_fields__}
    for key, value in os.environ.items():
        if not key.startswith(ENV_PREFIX):
            continue
        name = key[len(ENV_PREFIX):].lower()
        if name in fields:
            out[name] = value
    return out


_BOOL = {"1": True, "true": True, "on": True, "0": False, "false": False, "off": False}


def _coerce(name: str, value, target_type):
    if not isinstance(value, str):
        return value
    if target_type is bool:
        try:
            return _BOOL[value.lower()]
        except KeyError:
            raise InputError(f"bad boolean for {name}: {value!r}") from None
    if target_type in (int, float):
        return target_type(value)
    return value


def build_run_config(args) -> RunConfig:
    data: dict = {}
    if args.config:
        data.update(json.loads(Path(args.config).read_text()))
    for name, value in _env_overrides().items():
        data[name] = value
    flag_map = {
        "input": args.input,
        "modules": args.modules,
        "factories": args.factories,
        "placement": args.placement,
        "deferral": args.deferral,
        "allocator": args.alloc,
        "mode": args.mode,
        "seed": args.seed,
        "epsilon": args.epsilon,
        "cost_model": args.cost_model,
        "cost_table": args.cost_table,
        "capacity": args.capacity,
        "aut_per_meas": args.aut_per_meas,
        "insertion_top": args.insertion_top,
    }
    if args.insertion is not None:
        flag_map["insertion"] = args.insertion == "on"
    if args.insertion_threshold is not None:
        flag_map["insertion_threshold"] = args.insertion_threshold / 100.0
    for name, value in flag_map.items():
        if value is not None:
            data[name] = value
    if args.gen:
        data["gen"] = _parse_gen_spec(args.gen)
        data.pop("input", None)
    types = {
        "modules": int, "factories": int, "capacity": int, "seed": int,
        "aut_per_meas": int, "insertion_top": int, "insertion_cap": int,
        "epsilon": float, "insertion_threshold": float,
        "oracle_fixed_n_t": float, "insertion": bool,
    }
    for name, target in types.items():
        if name in data and data[name] is not None:
            data[name] = _coerce(name, data[name], target)
    try:
        return RunConfig.from_dict(data)
    except TypeError as exc:
        raise InputError(f"bad configuration: {exc}") from None


def _parse_gen_spec(text: str) -> dict:
    """`key=value` pairs, e.g. 'n=12,L=200,clifford_frac=0.3,arb_frac=0.2'."""
    spec: dict = {}
    for part in text.split(","):
        if not part:
            continue
        try:
            key, value = part.split("=")
        except ValueError:
            raise InputError(f"bad generator spec fragment {part!r}") from None
        if key in ("n", "L", "weight_lo", "weight_hi", "seed"):
            spec[key] = int(value)
        elif key in ("clifford_frac", "arb_frac"):
            spec[key] = float(value)
        else:
            raise InputError(f"unknown generator key {key!r}")
    return spec


# ---------------------------------------------------------------------------
# Subcommands

def cmd_compile(args) -> int:
    cfg = build_run_config(args)
    result = run_compile(cfg)
    text = render_report(result)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    if args.out_program:
        Path(args.out_program).write_text(result.program.render_text())
    if args.dump_dag:
        Path(args.dump_dag).write_text(render_dag_text(result.dag))
    return 0


def _config_hash(row_config: dict) -> str:
    blob = json.dumps(row_config, sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def _existing_ids(path: Path) -> set:
    if not path.exists():
        return set()
    with open(path) as fh:
        return {row["config_id"] for row in csv.DictReader(fh)}


def cmd_sweep(args) -> int:
    spec = json.loads(Path(args.spec).read_text())
    out = Path(args.out)
    kind = spec.get("kind")
    if kind == "ratio":
        n_t = spec.get("n_t")
        if n_t is None:
            oracle = SynthesisOracle(epsilon=spec.get("epsilon", 1e-3))
            n_t = oracle.PARAMS[oracle.epsilon][0]
        from .costmodel import REFERENCE_MODEL

        rows = sweep_ratio_cells(REFERENCE_MODEL, n_t,
                                 spec["p_ratios"], spec["t_ratios"])
        for row in rows:
            row["config_id"] = _config_hash(row)
        _write_csv(out, rows, ["config_id", "p_T_over_p_inter",
                               "t_T_over_t_inter", "failure_ratio",
                               "duration_ratio"], resume=args.resume)
        return 0
    if kind == "system":
        rows, summary = sweep_system(
            spec["workloads"], spec.get("modules", [3]),
            spec.get("factories", [1]), base=spec.get("base"),
            placements=tuple(spec.get("placements", ["lpu", "fac"])),
            jobs=args.jobs,
        )
        for row in rows:
            row["config_id"] = _config_hash(
                {k: row.get(k) for k in ("workload", "M", "F", "placement")})
        columns = (["config_id", "workload", "M", "F", "placement", "error",
                    "p_circ", "p_cliff", "t_circ", "t_cliff"]
                   + [f"N_{k}" for k in INSTRUCTION_KINDS]
                   + ["N_inter_tele", "N_inter_comm"])
        _write_csv(out, rows, columns, resume=args.resume)
        if summary:
            summary_path = out.with_suffix(".summary.csv")
            _write_csv(summary_path, summary,
                       ["M", "F", "workloads", "p_ratio_geomean",
                        "t_ratio_geomean"], resume=False)
        return 0
    raise InputError(f"unknown sweep kind {kind!r}")


def _write_csv(path: Path, rows: list[dict], columns: list[str], resume: bool) -> None:
    done = _existing_ids(path) if resume else set()
    mode = "a" if resume and path.exists() else "w"
    with open(path, mode, newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=columns, extrasaction="ignore")
        if mode == "w":
            writer.writeheader()
        for row in rows:
            if resume and row.get("config_id") in done:
                continue
            writer.writerow(row)


def cmd_gen(args) -> int:
    spec = GenSpec(**_parse_gen_spec(args.spec))
    circuit = spec.build()
    text = render_circuit(circuit)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


def _native_spec_from_json(data: dict) -> NativeSetSpec:
    k = int(data["k"])
    measurements = [SymplecticVector.from_string(s) for s in data["measurements"]]
    autos = []
    for entry in data.get("automorphisms", []):
        if "perm" in entry:
            autos.append(perm_cols(k + 1, entry["perm"]))
        elif "hadamard" in entry:
            autos.append(hadamard_cols(k + 1, entry["hadamard"]))
        elif "cols" in entry:
            autos.append([int(c) for c in entry["cols"]])
        else:
            raise InputError(f"bad automorphism entry {entry!r}")
    rotations = None
    if "rotations" in data:
        rotations = [SymplecticVector.from_string(s) for s in data["rotations"]]
    return NativeSetSpec(k, measurements, autos, rotations)


def cmd_cost_table(args) -> int:
    if args.table_cmd == "verify":
        table = load_cost_table(args.file)
        hist = table.histogram()
        print(f"k={table.k} entries={sum(hist.values())}")
        for cost in sorted(hist):
            print(f"cost {cost}: {hist[cost]}")
        if table.k == 11:
            verify_gross_histogram(table)
            print("gross-code histogram check: ok")
        return 0
    if args.table_cmd == "closure":
        spec = _native_spec_from_json(json.loads(Path(args.spec).read_text()))
        table = closure_costs(spec)
        hist = table.histogram()
        reachable = sum(hist.values())
        total = 4**spec.k - 1
        print(f"k={spec.k} reachable={reachable}/{total}")
        for cost in sorted(hist):
            print(f"cost {cost}: {hist[cost]}")
        if not table.complete:
            print("warning: rotation set does not generate every Pauli string")
        if args.out:
            write_cost_table(args.out, table)
        return 0
    raise InputError(f"unknown cost-table command {args.table_cmd!r}")


# ---------------------------------------------------------------------------

def _add_compile_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("input", nargs="?", help="circuit file (or use --gen)")
    p.add_argument("--gen", help="generator spec, e.g. n=12,L=200,arb_frac=0.2,seed=1")
    p.add_argument("--config", help="JSON config file")
    p.add_argument("--modules", "-M", type=int)
    p.add_argument("--factories", "-F", type=int)
    p.add_argument("--capacity", type=int)
    p.add_argument("--placement", choices=["lpu", "fac"])
    p.add_argument("--deferral", choices=["conventional", "transvection"])
    p.add_argument("--alloc", choices=["contiguous", "greedy"])
    p.add_argument("--mode", choices=["expected", "sampled"])
    p.add_argument("--seed", type=int)
    p.add_argument("--epsilon", type=float, choices=[1e-3, 1e-4])
    p.add_argument("--cost-model", dest="cost_model")
    p.add_argument("--cost-table", dest="cost_table")
    p.add_argument("--aut-per-meas", dest="aut_per_meas", type=int)
    p.add_argument("--insertion", choices=["on", "off"])
    p.add_argument("--insertion-top", dest="insertion_top", type=int)
    p.add_argument("--insertion-threshold", dest="insertion_threshold",
                   type=float, metavar="PCT",
                   help="stop when the per-iteration reduction drops below PCT percent")


def make_parser() -> _Parser:
    parser = _Parser(prog="bbcc", description=__doc__,
                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    p_compile = sub.add_parser("compile", help="compile and estimate a circuit")
    _add_compile_flags(p_compile)
    p_compile.add_argument("--out", help="report JSON path (default stdout)")
    p_compile.add_argument("--out-program", dest="out_program",
                           help="write the lowered instruction stream")
    p_compile.add_argument("--dump-dag", dest="dump_dag",
                           help="write the instruction DAG as text")
    p_compile.set_defaults(fn=cmd_compile)

    p_sweep = sub.add_parser("sweep", help="run a sweep described by a JSON spec")
    p_sweep.add_argument("spec")
    p_sweep.add_argument("--out", required=True, help="CSV output path")
    p_sweep.add_argument("--resume", action="store_true",
                         help="skip cells already present in the CSV")
    p_sweep.add_argument("--jobs", type=int, default=1,
                         help="worker processes for system-sweep cells")
    p_sweep.set_defaults(fn=cmd_sweep)

    p_gen = sub.add_parser("gen", help="generate a random circuit file")
    p_gen.add_argument("spec", help="e.g. n=12,L=200,clifford_frac=0.3,arb_frac=0.2,seed=7")
    p_gen.add_argument("--out")
    p_gen.set_defaults(fn=cmd_gen)

    p_table = sub.add_parser("cost-table", help="cost table utilities")
    table_sub = p_table.add_subparsers(dest="table_cmd", required=True)
    p_verify = table_sub.add_parser("verify", help="check a table file's checksum")
    p_verify.add_argument("file")
    p_verify.set_defaults(fn=cmd_cost_table)
    p_closure = table_sub.add_parser("closure", help="run closure on a native-set spec")
    p_closure.add_argument("--spec", required=True)
    p_closure.add_argument("--out")
    p_closure.set_defaults(fn=cmd_cost_table)

    return parser


def main(argv=None) -> int:
    parser = make_parser()
    try:
        args = parser.parse_args(argv)
        return args.fn(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (OSError, ValueError, CostTableError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (AssertionError, RuntimeError) as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
