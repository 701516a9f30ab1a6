"""The eleven acceptance criteria, each at its stated tolerance."""

import time
from functools import lru_cache

import numpy as np
import pytest

from conftest import small_instance
from zacf import (
    MultiChannelSignal,
    build_cross_power,
    circular_correlate,
    constraint_residual,
    forward_dft,
    inverse_dft,
    linear_correlate,
    make_problem,
    solve,
    solve_mmcf,
    solve_mosse,
    solve_prox,
    solve_zammcf_closed,
    zero_pad,
)
from zacf import data, oracle, protocols
from zacf.cli import main
from zacf.io import write_csv

SEEDS = range(10)


def rel_err(a, b):
    return float(np.max(np.abs(a - b)) / max(float(np.max(np.abs(b))), 1e-300))


@lru_cache(maxsize=None)
def ecg_sweep(seed):
    training = data.ecg_like(10, 301, seed=seed)
    return training, protocols.ace_sweep(training)


@lru_cache(maxsize=None)
def shapes_run(seed):
    return protocols.shapes_suite(seed)


def test_c01_correlation_oracle_equivalence(criterion):
    rng = np.random.default_rng(101)
    start = time.perf_counter()
    worst_circ = worst_lin = 0.0
    for i in range(500):
        K = int(rng.integers(1, 4))
        if i % 2:
            na, nb = (int(v) for v in rng.integers(1, 24, size=2))
            ma = mb = 1
            nf, mf = int(rng.integers(max(na, nb), 65)), 1
        else:
            na, nb, ma, mb = (int(v) for v in rng.integers(1, 6, size=4))
            nf, mf = (int(rng.integers(max(a, b), 65)) for a, b in ((na, nb), (ma, mb)))
        a = MultiChannelSignal(rng.normal(size=(K, na, ma)))
        b = MultiChannelSignal(rng.normal(size=(K, nb, mb)))
        worst_circ = max(worst_circ, rel_err(circular_correlate(a, b, (nf, mf)).values,
                                             oracle.brute_circular(a, b, (nf, mf)).values))
        # with padding >= N_a + N_b - 1 the circular result is the linear one
        pn, pm = max(nf, na + nb - 1), max(mf, ma + mb - 1)
        padded = circular_correlate(a, b, (pn, pm)).values
        lin = oracle.brute_linear(a, b).values
        rows = [t % pn for t in range(-(na - 1), nb)]
        cols = [t % pm for t in range(-(ma - 1), mb)]
        lin_rows = [t % (na + nb - 1) for t in range(-(na - 1), nb)]
        lin_cols = [t % (ma + mb - 1) for t in range(-(ma - 1), mb)]
        ref = lin[np.ix_(lin_rows, lin_cols)]
        worst_lin = max(worst_lin, rel_err(padded[np.ix_(rows, cols)], ref),
                        rel_err(linear_correlate(a, b).values, lin))
    elapsed = time.perf_counter() - start
    ok = worst_circ < 1e-10 and worst_lin < 1e-10 and elapsed < 5.0
    criterion(1, "correlation oracle equivalence", ok,
              f"circular {worst_circ:.2e}, linear {worst_lin:.2e}, {elapsed:.2f} s")
    assert ok


def test_c02_zamace_equals_tdmace(criterion):
    start = time.perf_counter()
    worst_mse = worst_ace = 0.0
    for seed in SEEDS:
        training = data.ecg_like(5, 32, seed=seed)
        za = solve(make_problem(training, pad=31), "ZAMACE")
        td = oracle.tdmace(training)
        worst_mse = max(worst_mse, float(np.mean((za.template.data - td.template.data) ** 2)))
        a, b = oracle.unaliased_ace(za, training), oracle.unaliased_ace(td, training)
        worst_ace = max(worst_ace, abs(a - b) / b)
    elapsed = time.perf_counter() - start
    ok = worst_mse < 1e-10 and worst_ace < 1e-9 and elapsed < 10.0
    criterion(2, "ZAMACE equals TDMACE at q = N-1", ok,
              f"MSE {worst_mse:.2e}, ACE rel {worst_ace:.2e}, {elapsed:.2f} s")
    assert ok


def test_c03_unaliased_ace_ordering(criterion):
    violations = 0
    checks = 0
    for seed in SEEDS:
        _, rows = ecg_sweep(seed)
        for q, full, cropped, _za, td, *_ in rows:
            checks += 2
            violations += int(td > cropped) + int(td > full)
    criterion(3, "unaliased ACE ordering TDMACE <= MACE cropped/full", violations == 0,
              f"{violations} violations in {checks} comparisons (N=301, L=10)")
    assert violations == 0


def test_c04_zamace_converges_to_tdmace(criterion):
    failures = []
    worst = 0.0
    for seed in SEEDS:
        rows = protocols.ace_sweep(data.ecg_like(5, 32, seed=seed))
        at_full, at_zero = rows[-1][6], rows[0][6]
        worst = max(worst, at_full)
        if not (at_full < 1e-10 and at_full < at_zero):
            failures.append(seed)
    criterion(4, "ZAMACE MSE-to-TDMACE trend", not failures,
              f"worst MSE at q=N-1 {worst:.2e}, failing seeds {failures}")
    assert not failures


def _mmcf_instance(rng):
    training, grid = small_instance(rng, min_L=2)
    labels = np.array([1] + [-1] * (len(training) - 1))
    rng.shuffle(labels)
    return training, labels, grid


def test_c05_optimality_certificates(criterion):
    rng = np.random.default_rng(505)
    worst = {"peak": 0.0, "tail": 0.0, "normal": 0.0, "kkt": 0.0}
    for _ in range(100):
        training, grid = small_instance(rng)
        base = make_problem(training, fft_size=grid)
        reg = make_problem(training, fft_size=grid, delta=0.05)
        for problem, kinds in ((base, ("MACE", "ZAMACE")), (reg, ("OTSDF", "ZAOTSDF"))):
            for kind in kinds:
                t = solve(problem, kind)
                peaks = np.real(np.conj(problem.X).T @ t.spectrum.data.reshape(-1))
                worst["peak"] = max(worst["peak"], float(np.max(np.abs(peaks - problem.peaks))))
                if kind.startswith("ZA"):
                    worst["tail"] = max(worst["tail"], constraint_residual(problem.za_system, t.spectrum))
        for kind in ("ZAMACE", "ZAOTSDF"):
            problem = base if kind == "ZAMACE" else reg
            t, _ = solve_prox(problem, kind)
            peaks = np.real(np.conj(problem.X).T @ t.spectrum.data.reshape(-1))
            worst["peak"] = max(worst["peak"], float(np.max(np.abs(peaks - problem.peaks))))
            worst["tail"] = max(worst["tail"], constraint_residual(problem.za_system, t.spectrum))
        mosse = solve_mosse(reg)
        model = reg.model(default_desired="peak")
        worst["normal"] = max(worst["normal"], float(np.max(np.abs(model.apply_T(mosse.spectrum.data) - model.p_spectrum))))
        for t in (solve(reg, "ZAMOSSE"), solve_prox(reg, "ZAMOSSE")[0]):
            worst["tail"] = max(worst["tail"], constraint_residual(reg.za_system, t.spectrum))

        training, labels, grid = _mmcf_instance(rng)
        problem = make_problem(training, labels, fft_size=grid, delta=0.05, C=0.5)
        _, state = solve_mmcf(problem)
        tz, sz = solve_zammcf_closed(problem)
        worst["kkt"] = max(worst["kkt"], state.kkt_violation(), sz.kkt_violation())
        tp, _ = solve_prox(problem, "ZAMMCF")
        worst["tail"] = max(worst["tail"], constraint_residual(problem.za_system, tz.spectrum),
                            constraint_residual(problem.za_system, tp.spectrum))
    ok = worst["peak"] < 1e-8 and worst["tail"] < 1e-8 and worst["normal"] < 1e-8 and worst["kkt"] < 1e-5
    criterion(5, "closed-form optimality certificates", ok,
              ", ".join(f"{k} {v:.1e}" for k, v in worst.items()))
    assert ok


def test_c06_prox_matches_closed_form(criterion):
    rng = np.random.default_rng(606)
    start = time.perf_counter()
    worst12 = 0.0
    max_iters = 0
    for _ in range(50):
        training, grid = small_instance(rng)
        reg = make_problem(training, fft_size=grid, delta=0.05)
        t, trace = solve_prox(reg, "ZAMOSSE")
        ref = oracle.dense_za_solve(reg, "ZAMOSSE")
        f_ref = reg.model(default_desired="peak").objective(ref.spectrum.data)
        worst12 = max(worst12, abs(t.objective - f_ref) / abs(f_ref))
        max_iters = max(max_iters, trace.iterations)
        base = make_problem(training, fft_size=grid)
        t, trace = solve_prox(base, "ZAMACE")
        ref = oracle.dense_za_solve(base, "ZAMACE")
        f_ref = base.model(delta=0.0).objective(ref.spectrum.data)
        worst12 = max(worst12, abs(t.objective - f_ref) / abs(f_ref))
        max_iters = max(max_iters, trace.iterations)
    worst3 = 0.0
    for _ in range(20):
        training, labels, grid = _mmcf_instance(rng)
        problem = make_problem(training, labels, fft_size=grid, delta=0.05, C=0.5)
        t, trace = solve_prox(problem, "ZAMMCF")
        _, ref = oracle.spatial_squared_hinge(problem, 1.0 / problem.C)
        worst3 = max(worst3, abs(t.objective - ref) / abs(ref))
        max_iters = max(max_iters, trace.iterations)
    elapsed = time.perf_counter() - start
    ok = worst12 < 1e-6 and worst3 < 1e-4 and max_iters <= 20000 and elapsed < 60
    criterion(6, "prox solvers reach the closed forms", ok,
              f"alg 1/2 {worst12:.2e}, alg 3 {worst3:.2e}, max iterations {max_iters}, {elapsed:.1f} s")
    assert ok


def test_c07_parseval_and_round_trip(criterion):
    rng = np.random.default_rng(707)
    worst_loss = worst_trip = 0.0
    for _ in range(200):
        K = int(rng.integers(1, 4))
        N, M = int(rng.integers(1, 8)), int(rng.integers(1, 6))
        grid = (N + int(rng.integers(0, 6)), M + int(rng.integers(0, 4)))
        L = int(rng.integers(1, 4))
        xs = [MultiChannelSignal(rng.normal(size=(K, N, M))) for _ in range(L)]
        gs = [MultiChannelSignal(rng.normal(size=(1, *grid))) for _ in range(L)]
        h = MultiChannelSignal(rng.normal(size=(K, *grid)))
        spatial = np.mean([np.sum((circular_correlate(x, h, grid).values - g.data[0]) ** 2) for x, g in zip(xs, gs)])
        X = [forward_dft(x, grid).data for x in xs]
        G = [forward_dft(g, grid).data[0] for g in gs]
        H = forward_dft(h, grid).data
        freq = np.mean([np.sum(np.abs(np.sum(np.conj(x) * H, axis=0) - g) ** 2) for x, g in zip(X, G)])
        B = grid[0] * grid[1]
        model = build_cross_power([forward_dft(x, grid) for x in xs], [forward_dft(g, grid) for g in gs])
        worst_loss = max(worst_loss, abs(spatial - freq / B) / spatial, abs(model.loss(H) - spatial) / spatial)
        worst_trip = max(worst_trip, rel_err(inverse_dft(forward_dft(xs[0], grid)).data, zero_pad(xs[0], grid).data))
    ok = worst_loss < 1e-9 and worst_trip < 1e-10
    criterion(7, "Parseval and DFT round trip", ok, f"loss {worst_loss:.2e}, round trip {worst_trip:.2e}")
    assert ok


def test_c08_za_recognition_not_worse(criterion):
    start = time.perf_counter()
    wins = {za: 0 for _, za in protocols.PAIRS}
    means = {k: 0.0 for k in protocols.DESIGN_KINDS}
    for seed in SEEDS:
        metrics, _ = shapes_run(seed)
        rec = {row[0]: row[5] for row in metrics}
        for conv, za in protocols.PAIRS:
            wins[za] += rec[za] >= rec[conv]
        for k in means:
            means[k] += rec[k] / len(SEEDS)
    elapsed = time.perf_counter() - start
    ok = all(v >= 9 for v in wins.values()) and elapsed < 120
    detail = ", ".join(f"{za} {wins[za]}/10 ({means[conv]:.3f}->{means[za]:.3f})" for conv, za in protocols.PAIRS)
    criterion(8, "ZA recognition >= conventional on shapes", ok, f"{detail}, {elapsed:.1f} s")
    assert ok


def test_c09_racf_between_extremes(criterion):
    failures = []
    for seed in SEEDS:
        training, rows = ecg_sweep(seed)
        lo, hi = rows[-1][3], rows[0][3]
        mid = protocols.racf_ace(training, 0.25)
        if not lo <= mid <= hi:
            failures.append(seed)
    criterion(9, "RACF unaliased ACE between q=0 and q=N-1", not failures, f"failing seeds {failures}")
    assert not failures


def test_c10_retraining_helps(criterion):
    helped = 0
    pre_mean = post_mean = 0.0
    for seed in SEEDS:
        (pre, post), _ = protocols.retrain_suite(seed)
        helped += post[5] >= pre[5]
        pre_mean += pre[5] / len(SEEDS)
        post_mean += post[5] / len(SEEDS)
    ok = helped >= 9
    criterion(10, "retraining does not hurt MMCF recognition", ok,
              f"{helped}/10 seeds, mean recognition {pre_mean:.3f}->{post_mean:.3f}")
    assert ok


def test_c11_determinism(criterion, tmp_path, capsys):
    outputs = []
    for run in ("a", "b"):
        assert main(["selftest", "--seed", "7", "--out", str(tmp_path / run)]) == 0
        metrics, scores = protocols.shapes_suite(3)
        write_csv(tmp_path / run / "metrics.csv", protocols.METRIC_HEADER, metrics)
        write_csv(tmp_path / run / "scores.csv", ("design",) + protocols.SCORE_HEADER, scores)
        outputs.append({p.name: p.read_bytes() for p in sorted((tmp_path / run).iterdir())})
    capsys.readouterr()
    ok = outputs[0] == outputs[1] and len(outputs[0]) == 3
    criterion(11, "byte-identical selftest and shapes CSVs", ok, f"files {sorted(outputs[0])}")
    assert ok
