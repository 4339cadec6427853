"""Acceptance suite: one test per criterion, each printing a pass/fail line.

Run with `pytest tests/test_acceptance.py -v -s`.
"""

import math
import os
import time
from fractions import Fraction
from functools import lru_cache
from pathlib import Path

import numpy as np
import pytest

from bbcc import bbcode, gf2
from bbcc.allocation import allocate_contiguous
from bbcc.bbcode import (
    GROSS_COST_HISTOGRAM,
    NativeSetSpec,
    build_gross_code,
    closure_costs,
    load_cost_table,
    synthetic_fallback,
    verify_gross_histogram,
)
from bbcc.circuit import Angle, PbcCircuit, PbcOp, gen_random
from bbcc.costmodel import (
    REFERENCE_MODEL,
    estimate,
    geometric_mean,
    sweep_system,
)
from bbcc.deferral import defer_conventional, defer_transvection
from bbcc.insertion import WindowProblem, apply_insertion, default_library, solve_windows
from bbcc.lowering import (
    FactoryModel,
    SynthesisOracle,
    lower,
    placement_decision,
    sample_cascade_states,
)
from bbcc.pauli import SignedPauli, SymplecticVector, quarter_turn
from bbcc.scheduler import build_dag, critical_path
from helpers import equal_up_to_global_phase, random_signed_pauli, rotation_matrix

MODEL = REFERENCE_MODEL
MU = 28.63
FALLBACK_TABLE = synthetic_fallback(11)


def record(num: int, name: str, ok: bool, detail: str = "") -> None:
    print(f"[{'PASS' if ok else 'FAIL'}] criterion {num:2d}: {name} {detail}".rstrip())
    assert ok, f"criterion {num}: {name} {detail}"


def one_rotation_program(placement: str, model=MODEL, theta: float = 0.7):
    circuit = PbcCircuit(1, [PbcOp.rotation(SignedPauli.from_string("+Z"),
                                            Angle.from_float(theta))])
    deferred = defer_transvection(circuit)
    alloc = allocate_contiguous(deferred, 1)
    return lower(deferred, alloc, FALLBACK_TABLE, placement,
                 SynthesisOracle(), FactoryModel(1), model)


def test_criterion_01_per_rotation_placement_ratio():
    t0 = time.perf_counter()
    fac = estimate(one_rotation_program("fac"), MODEL).p_circ
    lpu = estimate(one_rotation_program("lpu"), MODEL).p_circ
    ratio = fac / lpu
    elapsed = time.perf_counter() - t0
    record(1, "per-rotation syn@fac/syn@LPU failure ratio",
           0.06 <= ratio <= 0.08 and elapsed < 1.0,
           f"ratio={ratio:.4f} time={elapsed:.2f}s")


def test_criterion_02_decision_inequality_matches_estimator():
    t0 = time.perf_counter()
    p_ratios = np.logspace(-3, 0.25, 20)
    ls_ratios = np.logspace(-4, -0.05, 20)
    agree = True
    for rp in p_ratios:
        for rls in ls_ratios:
            model = MODEL.with_ratios(p_t_over_inter=float(rp),
                                      p_ls_over_inter=float(rls))
            p_fac = estimate(one_rotation_program("fac", model), model).p_circ
            p_lpu = estimate(one_rotation_program("lpu", model), model).p_circ
            predicted = placement_decision(model, MU)
            agree &= (p_fac < p_lpu) == (predicted == "fac")
    elapsed = time.perf_counter() - t0
    record(2, "decision inequality matches estimator sign on 20x20 grid",
           agree and elapsed < 10.0, f"time={elapsed:.1f}s")


def test_criterion_03_deferral_oracle_equivalence():
    t0 = time.perf_counter()
    ok = True
    for seed in range(1000):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(1, 9))
        L = int(rng.integers(1, 301))
        circuit = gen_random(n, L, 0.5, 0.2, seed=seed)
        a = defer_conventional(circuit)
        b = defer_transvection(circuit)
        if a.circuit != b.circuit:
            ok = False
            break
    elapsed = time.perf_counter() - t0
    record(3, "transvection == conventional on 1000 random circuits",
           ok and elapsed < 30.0, f"time={elapsed:.1f}s")


def test_criterion_04_deferral_dense_semantics():
    t0 = time.perf_counter()
    ok = True
    rng = np.random.default_rng(404)
    for case in range(200):
        n = int(rng.integers(1, 4))
        L = int(rng.integers(1, 16))
        ops = []
        for _ in range(L):
            pauli = random_signed_pauli(rng, n, nonzero=True)
            if rng.random() < 0.5:
                frac = [Fraction(1, 4), Fraction(-1, 4), Fraction(1, 2)][int(rng.integers(3))]
                ops.append(PbcOp.rotation(pauli, Angle.exact(frac)))
            else:
                ops.append(PbcOp.rotation(pauli, Angle.from_float(float(rng.uniform(0, math.pi)))))
        circuit = PbcCircuit(n, ops)
        engine = defer_transvection if case % 2 else defer_conventional
        deferred = engine(circuit)
        dim = 2 ** n
        u_orig = np.eye(dim, dtype=complex)
        for op in circuit.ops:
            u_orig = rotation_matrix(op.pauli, op.angle.radians) @ u_orig
        u_def = np.eye(dim, dtype=complex)
        for op in deferred.circuit.ops:
            u_def = rotation_matrix(op.pauli, op.angle.radians) @ u_def
        c_tail = np.eye(dim, dtype=complex)
        for rec in deferred.removed:
            c_tail = rotation_matrix(rec.pauli, rec.angle.radians) @ c_tail
        if not equal_up_to_global_phase(u_orig, c_tail @ u_def, tol=1e-10):
            ok = False
            break
    elapsed = time.perf_counter() - t0
    record(4, "dense unitary preserved up to phase and trailing Clifford",
           ok and elapsed < 60.0, f"cases=200 time={elapsed:.1f}s")


def _adversarial_prefix(n: int, L: int, seed: int) -> PbcCircuit:
    rng = np.random.default_rng(seed)
    ops = []
    for i in range(L):
        pauli = random_signed_pauli(rng, n, nonzero=True)
        frac = Fraction(1, 4) if i < L // 2 else Fraction(1, 8)
        ops.append(PbcOp.rotation(pauli, Angle.exact(frac)))
    return PbcCircuit(n, ops)


def test_criterion_05_complexity_scaling():
    t0 = time.perf_counter()
    n = 12
    fit = {}
    for L in (10**3, 10**4, 10**5):
        circuit = gen_random(n, L, 0.5, 0.2, weight_dist=(1, 4), seed=55)
        stats = defer_transvection(circuit).stats
        fit[L] = stats.word_ops / (n * n * L)
    linear_ok = max(fit.values()) / min(fit.values()) <= 2.0
    per_op = {}
    for L in (10**3, 10**4, 31623):
        stats = defer_conventional(_adversarial_prefix(n, L, seed=56)).stats
        per_op[L] = stats.word_ops / L
    superlinear_ok = per_op[31623] / per_op[10**3] >= 5.0
    elapsed = time.perf_counter() - t0
    record(5, "transvection fits c*n^2*L; conventional superlinear",
           linear_ok and superlinear_ok and elapsed < 120.0,
           f"fit-spread={max(fit.values())/min(fit.values()):.2f} "
           f"conv-ratio={per_op[31623]/per_op[10**3]:.0f}x time={elapsed:.0f}s")


def _enumeration_best(deltas, overheads):
    K, L = len(deltas), len(deltas[0])

    @lru_cache(maxsize=None)
    def go(i):
        if i >= L:
            return 0
        best = go(i + 1)
        for k in range(K):
            raw = 0
            for j in range(i, L):
                raw += deltas[k][j]
                best = max(best, raw - overheads[k] + go(j + 1))
        return best

    return go(0)


def test_criterion_06_window_dp_optimality():
    t0 = time.perf_counter()
    rng = np.random.default_rng(606)
    ok = True
    for _ in range(10_000):
        K = int(rng.integers(1, 4))
        L = int(rng.integers(1, 11))
        deltas = tuple(tuple(int(d) for d in rng.integers(-24, 25, size=L))
                       for _ in range(K))
        overheads = tuple(int(s) for s in rng.integers(1, 13, size=K))
        got = solve_windows(WindowProblem([list(r) for r in deltas], list(overheads)))
        if got.net_reduction != _enumeration_best(deltas, overheads):
            ok = False
            break
    elapsed = time.perf_counter() - t0
    record(6, "window DP equals exhaustive enumeration on 10^4 instances",
           ok and elapsed < 60.0, f"time={elapsed:.1f}s")


def _random_complete_table(seed: int):
    # Single-qubit X/Z rotations generate the whole group (nothing commutes
    # with all of them); random extras vary the level structure.
    rng = np.random.default_rng(seed)
    k = 5
    rotations = [SymplecticVector(k, 1 << q, 0) for q in range(k)]
    rotations += [SymplecticVector(k, 0, 1 << q) for q in range(k)]
    rotations += [random_signed_pauli(rng, k, nonzero=True).vector for _ in range(3)]
    meas = [random_signed_pauli(rng, k + 1, nonzero=True).vector for _ in range(3)]
    spec = NativeSetSpec(k, meas, rotations=rotations)
    table = closure_costs(spec)
    assert table.complete and spec.level0()
    return table


def test_criterion_07_insertion_safety():
    t0 = time.perf_counter()
    table = _random_complete_table(7)
    ok = True
    fired = 0
    for seed in range(200):
        circuit = gen_random(10, 25, 0.15, 0.1, weight_dist=(1, 4), seed=seed)
        deferred = defer_transvection(circuit)
        alloc = allocate_contiguous(deferred, 2, capacity=5)
        program = lower(deferred, alloc, table, "fac", SynthesisOracle(),
                        FactoryModel(1), MODEL)
        _, t_before = critical_path(build_dag(program))
        program, report = apply_insertion(program, table, MODEL,
                                          library=default_library(table, 32))
        _, t_after = critical_path(build_dag(program))
        if t_after > t_before + 1e-9:
            ok = False
            break
        for window in report.windows:
            fired += 1
            r = SignedPauli(window.candidate, 1)
            for before, after in zip(window.before, window.after):
                if quarter_turn(after, r, 1) != before:
                    ok = False
    elapsed = time.perf_counter() - t0
    record(7, "insertion never lengthens the path; rewrites invert exactly",
           ok and fired > 0 and elapsed < 120.0,
           f"windows={fired} time={elapsed:.0f}s")


def test_criterion_08_gross_table_checksum():
    path = os.environ.get("BBCC_COST_TABLE") or bbcode.DEFAULT_GROSS_TABLE_PATH
    if not Path(path).exists():
        print("[SKIP] criterion  8: gross cost-table data file absent; "
              "pipeline runs carry the 'synthetic cost model' watermark")
        pytest.skip("gross cost-table file not present")
    table = load_cost_table(path)
    verify_gross_histogram(table)
    hist = table.histogram()
    record(8, "gross table histogram checksum",
           hist == GROSS_COST_HISTOGRAM and sum(hist.values()) == 4**11 - 1)


def _bfs_oracle(level0, rotations, k):
    dist = {s: 1 for s in level0}
    frontier = sorted(level0)
    while frontier:
        nxt = []
        for s in frontier:
            sv = SymplecticVector.from_packed(k, s)
            for r in rotations:
                u = rotation_matrix(SignedPauli(r, 1), np.pi / 4)
                from helpers import pauli_matrix

                conj = u.conj().T @ pauli_matrix(SignedPauli(sv, 1)) @ u
                if np.allclose(conj, pauli_matrix(SignedPauli(sv, 1))):
                    t = s
                else:
                    t = s ^ r.packed()
                    tv = SymplecticVector.from_packed(k, t)
                    assert np.allclose(conj, pauli_matrix(SignedPauli(tv, 1))) or \
                        np.allclose(conj, -pauli_matrix(SignedPauli(tv, 1)))
                if t and t not in dist:
                    dist[t] = dist[s] + 6
                    nxt.append(t)
        frontier = sorted(nxt)
    return dist


def test_criterion_09_closure_matches_bfs_oracle():
    t0 = time.perf_counter()
    rng = np.random.default_rng(909)
    ok = True
    for _ in range(12):
        k = int(rng.integers(2, 5))
        meas = [random_signed_pauli(rng, k + 1, nonzero=True).vector
                for _ in range(int(rng.integers(1, 4)))]
        rotations = [random_signed_pauli(rng, k, nonzero=True).vector
                     for _ in range(int(rng.integers(1, 6)))]
        spec = NativeSetSpec(k, meas, rotations=rotations)
        if not spec.level0():
            continue
        table = closure_costs(spec)
        oracle = _bfs_oracle(spec.level0(), rotations, k)
        for idx in range(1, 1 << (2 * k)):
            expected = oracle.get(idx, 0)
            if int(table.costs[idx]) != expected:
                ok = False
    elapsed = time.perf_counter() - t0
    record(9, "closure costs equal brute-force shortest sandwich (k <= 4)",
           ok and elapsed < 60.0, f"time={elapsed:.1f}s")


def test_criterion_10_gross_code_construction():
    t0 = time.perf_counter()
    code = build_gross_code()
    commute = not np.any((code.h_x @ code.h_z.T) % 2)
    cross_check = gf2.rank(code.h_x) == code.h_x.shape[1] - len(gf2.nullspace(code.h_x))
    elapsed = time.perf_counter() - t0
    record(10, "gross code builds with n=144, k=12, H_X H_Z^T = 0",
           code.n == 144 and code.k == 12 and commute and cross_check
           and elapsed < 5.0,
           f"n={code.n} k={code.k} time={elapsed:.1f}s")


def test_criterion_11_cascade_monte_carlo():
    t0 = time.perf_counter()
    rng = np.random.default_rng(111)
    angle = Angle.from_float(0.813)
    total = sum(len(sample_cascade_states(rng, angle)) for _ in range(1_000_000))
    mean = total / 1_000_000
    elapsed = time.perf_counter() - t0
    record(11, "sampled syn@fac mean teleports over 1e6 draws",
           1.98 <= mean <= 2.02 and elapsed < 30.0,
           f"mean={mean:.4f} time={elapsed:.1f}s")


def test_criterion_12_system_sweeps_directional():
    t0 = time.perf_counter()
    workloads = [{"n": 30, "L": 120, "clifford_frac": 0.3, "arb_frac": 0.3,
                  "weight_lo": 1, "weight_hi": 4, "seed": s} for s in range(50)]
    rows, summary = sweep_system(workloads, modules=[3], factories=[1, 2])
    by_key = {(r["workload"], r["F"], r["placement"]): r for r in rows if "error" not in r}
    every_workload_improves = all(
        by_key[(w, f, "fac")]["p_circ"] < by_key[(w, f, "lpu")]["p_circ"]
        for w in range(50) for f in (1, 2)
    )
    s1 = next(s for s in summary if s["F"] == 1)
    s2 = next(s for s in summary if s["F"] == 2)
    duration_drops = s2["t_ratio_geomean"] < s1["t_ratio_geomean"]
    failure_stable = abs(s2["p_ratio_geomean"] - s1["p_ratio_geomean"]) \
        / s1["p_ratio_geomean"] < 0.05
    elapsed = time.perf_counter() - t0
    record(12, "system sweep: fac wins everywhere; F=2 shrinks duration ratio",
           every_workload_improves and duration_drops and failure_stable
           and elapsed < 600.0,
           f"t-ratio {s1['t_ratio_geomean']:.3f}->{s2['t_ratio_geomean']:.3f} "
           f"p-ratio {s1['p_ratio_geomean']:.4f}->{s2['p_ratio_geomean']:.4f} "
           f"time={elapsed:.0f}s")


def test_criterion_13_union_bound_arithmetic():
    from bbcc.lowering import BbInstr

    instrs = [BbInstr(uid=i, kind="in", latency=120.0, origin="measurement")
              for i in range(10)]
    instrs += [BbInstr(uid=10 + i, kind="inter", latency=120.0, origin="communication")
               for i in range(2)]
    report = estimate(instrs, MODEL)
    expected = 10 * 10**-5.0 + 2 * 10**-2.7
    ok = abs(report.p_circ - expected) / expected < 1e-6
    record(13, "union bound on N_in=10, N_inter=2 program",
           ok and abs(expected - 4.0905e-3) < 1e-6,
           f"p_circ={report.p_circ:.6e}")
