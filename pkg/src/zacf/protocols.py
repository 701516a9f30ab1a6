"""Experiment protocols shared by the CLI, the demos and the acceptance tests.

Each suite is a pure function of its inputs and seed and returns plain rows,
so CSV output is reproducible byte for byte.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from . import data, oracle
from .constraints import constraint_residual
from .designs import (
    FilterTemplate,
    make_problem,
    solve,
    solve_mace,
    solve_mace_cropped,
    solve_zamace,
)
from .evaluation import ScoreSet, apply_filter, eer, localization_check, mine_and_retrain, rank1
from .prox import ProxConfig, solve_prox
from .spectral import MultiChannelSignal, circular_correlate, linear_correlate

__all__ = [
    "SuiteConfig",
    "PAIRS",
    "DESIGN_KINDS",
    "METRIC_HEADER",
    "SCORE_HEADER",
    "SWEEP_HEADER",
    "design_filter",
    "train_class_filter",
    "train_class_filters",
    "evaluate_filters",
    "default_q_grid",
    "ace_sweep",
    "racf_ace",
    "shapes_suite",
    "retrain_suite",
    "selftest",
    "SELFTEST_HEADER",
]

PAIRS = (("MACE", "ZAMACE"), ("OTSDF", "ZAOTSDF"), ("MOSSE", "ZAMOSSE"), ("MMCF", "ZAMMCF"))
DESIGN_KINDS = tuple(k for pair in PAIRS for k in pair)
METRIC_HEADER = ("design", "eer", "rank1", "classification", "localization", "recognition")
SCORE_HEADER = ("probe_id", "filter_id", "pce", "peak_row", "peak_col")
SWEEP_HEADER = (
    "q",
    "ace_mace_full",
    "ace_mace_cropped",
    "ace_zamace",
    "ace_tdmace",
    "mse_mace_cropped_tdmace",
    "mse_zamace_tdmace",
)
SELFTEST_HEADER = ("check", "instances", "worst", "tolerance", "passed")


@dataclass(frozen=True)
class SuiteConfig:
    """Design and scoring parameters.

    ``q`` is the zero padding per axis (``None`` means ``N - 1``), or use
    ``pad_fraction`` for RACF grids.  ``delta`` regularizes every design
    except MACE/ZAMACE; ``C`` is the max-margin trade-off.
    """

    q: int | None = None
    pad_fraction: float | None = None
    delta: float = 0.01
    C: float = 0.003
    desired_shape: str = "delta"
    sigma: float = 1.0
    solver: str = "closed"
    scorer: str = "pce"
    prox: ProxConfig = field(default_factory=ProxConfig)


def _uses_delta(kind):
    return not kind.upper().endswith("MACE")


def design_filter(training, labels, kind: str, cfg: SuiteConfig) -> FilterTemplate:
    """Solve one filter of ``kind`` on the grid chosen by ``cfg``."""
    kind = kind.upper()
    n, m = training[0].size
    grid_kw = {}
    if cfg.pad_fraction is not None:
        grid_kw["pad_fraction"] = cfg.pad_fraction
    else:
        grid_kw["pad"] = n - 1 if cfg.q is None else cfg.q
    problem = make_problem(
        training,
        labels,
        delta=cfg.delta if _uses_delta(kind) else 0.0,
        C=cfg.C,
        desired_shape=cfg.desired_shape,
        sigma=cfg.sigma,
        **grid_kw,
    )
    if cfg.solver == "prox" and kind.startswith("ZA"):
        return solve_prox(problem, kind, cfg.prox)[0]
    return solve(problem, kind)


def _one_vs_rest(train_by_class, c, negatives=()):
    pos = list(train_by_class[c])
    neg = [x for d in sorted(train_by_class) if d != c for x in train_by_class[d]] + list(negatives)
    return pos + neg, [1] * len(pos) + [-1] * len(neg)


def train_class_filter(train_by_class, c, kind: str, cfg: SuiteConfig, negatives=()) -> FilterTemplate:
    """The filter for class ``c``.  Max-margin designs use the other classes
    (and ``negatives``) as the negative class; the others train on class
    ``c`` only."""
    if kind.upper().endswith("MMCF"):
        training, labels = _one_vs_rest(train_by_class, c, negatives)
    else:
        training, labels = list(train_by_class[c]), None
    return design_filter(training, labels, kind, cfg)


def train_class_filters(train_by_class, kind: str, cfg: SuiteConfig, negatives=()) -> list[FilterTemplate]:
    """:func:`train_class_filter` for every class, in class order."""
    return [train_class_filter(train_by_class, c, kind, cfg, negatives) for c in sorted(train_by_class)]


def evaluate_filters(filters, scenes, tolerance, scorer: str = "pce", design: str = ""):
    """Classify and localize every scene.

    Returns ``(metrics_row, score_rows)``; the metrics row follows
    :data:`METRIC_HEADER` and every score row :data:`SCORE_HEADER`.  Scenes
    whose ``location`` is ``None`` count as localized.
    """
    scores = ScoreSet()
    matrix = np.zeros((len(scenes), len(filters)))
    labels = []
    n_cls = n_loc = n_rec = 0
    rows = []
    for i, scene in enumerate(scenes):
        planes = [apply_filter(scene.image, f, scorer=scorer) for f in filters]
        for j, plane in enumerate(planes):
            matrix[i, j] = plane.score
            scores.add(plane.score, genuine=(j == scene.label), probe=i, filter=j)
            r, c = plane.peak_lag
            rows.append((i, j, plane.score, r, c))
        pred = int(np.argmax(matrix[i]))
        located = scene.location is None or localization_check(planes[scene.label].peak_lag, scene.location, tolerance)
        n_cls += pred == scene.label
        n_loc += located
        n_rec += (pred == scene.label) and located
        labels.append(scene.label)
    n = len(scenes)
    error = eer(scores) if len(filters) > 1 else float("nan")
    metrics = (design, error, rank1(matrix, labels), n_cls / n, n_loc / n, n_rec / n)
    return metrics, rows


def default_q_grid(N: int) -> list[int]:
    """``{0, N/4, N/2, 3N/4, N-1}`` (integer division, duplicates removed)."""
    return sorted({0, N // 4, N // 2, (3 * N) // 4, N - 1})


def _crop_mse(template: FilterTemplate, reference: FilterTemplate) -> float:
    n, m = reference.support.size
    a = template.template.data[:, :n, :m]
    b = reference.template.data[:, :n, :m]
    return float(np.mean((a - b) ** 2))


def ace_sweep(training, qs=None):
    """Unaliased ACE and MSE-to-TDMACE versus zero padding ``q``.

    Rows follow :data:`SWEEP_HEADER`.
    """
    training = list(training)
    N = training[0].height
    qs = default_q_grid(N) if qs is None else list(qs)
    td = oracle.tdmace(training)
    ace_td = oracle.unaliased_ace(td, training)
    rows = []
    for q in qs:
        if not 0 <= q <= N - 1:
            raise ValueError(f"q must lie in [0, {N - 1}], got {q}")
        problem = make_problem(training, pad=q)
        full = solve_mace(problem)
        cropped = solve_mace_cropped(problem)
        za = solve_zamace(problem)
        rows.append((
            q,
            oracle.unaliased_ace(full, training),
            oracle.unaliased_ace(cropped, training),
            oracle.unaliased_ace(za, training),
            ace_td,
            _crop_mse(cropped, td),
            _crop_mse(za, td),
        ))
    return rows


def racf_ace(training, pad_fraction: float) -> float:
    """Unaliased ACE of the ZAMACE template on the reduced RACF grid."""
    training = list(training)
    return oracle.unaliased_ace(solve_zamace(make_problem(training, pad_fraction=pad_fraction)), training)


def shapes_suite(seed: int, cfg: SuiteConfig | None = None, designs=None, n_train=10, n_test=10, noise=0.1):
    """Conventional versus ZA filters on the synthetic shapes data.

    Returns ``(metric_rows, score_rows)``; score rows are prefixed with the
    design name.
    """
    cfg = cfg or SuiteConfig()
    designs = designs or list(DESIGN_KINDS)
    ds = data.shapes(n_train=n_train, n_test=n_test, seed=seed, noise=noise)
    tol = (ds.chip_size // 2, ds.chip_size // 2)
    metrics, scores = [], []
    for kind in designs:
        filters = train_class_filters(ds.train, kind, cfg)
        row, srows = evaluate_filters(filters, ds.test, tol, cfg.scorer, design=kind)
        metrics.append(row)
        scores += [(kind, *r) for r in srows]
    return metrics, scores


def _training_scores(problem, template):
    return np.real(np.conj(problem.X).T @ template.spectrum.data.reshape(-1)) + template.bias


def retrain_suite(seed: int, cfg: SuiteConfig | None = None, kind: str = "MMCF", rho: float = 0.5, n_test: int = 20):
    """Hard-negative retraining on the vehicle-like data.

    Each class filter is trained one-vs-rest with background chips as extra
    negatives, then windows on target-free frames whose correlation exceeds
    ``rho`` times the median training-positive score are added as negatives
    and the filter is re-solved.  Returns metric rows for the ``pre`` and
    ``post`` filters (design names suffixed accordingly) and the number of
    mined windows.
    """
    cfg = cfg or SuiteConfig()
    ds = data.vehicles_ir_like(seed=seed, n_test=n_test)
    q = max(ds.chip_size) - 1 if cfg.q is None else cfg.q
    grid_cfg = replace(cfg, q=q)
    pre, post, mined = [], [], 0
    for c in sorted(ds.train_pos):
        training, labels = _one_vs_rest(ds.train_pos, c, ds.train_neg)
        problem = make_problem(
            training, labels, pad=q, delta=cfg.delta if _uses_delta(kind) else 0.0, C=cfg.C,
            desired_shape=cfg.desired_shape, sigma=cfg.sigma,
        )
        template = solve(problem, kind)
        scores = _training_scores(problem, template)
        threshold = rho * float(np.median(scores[problem.labels > 0]))
        grown = mine_and_retrain(problem, ds.frames, threshold, template=template)
        mined += grown.count - problem.count
        pre.append(template)
        post.append(solve(grown, kind))
    tol = tuple(s // 2 for s in ds.chip_size)
    row_pre, _ = evaluate_filters(pre, ds.test, tol, grid_cfg.scorer, design=f"{kind}-pre")
    row_post, _ = evaluate_filters(post, ds.test, tol, grid_cfg.scorer, design=f"{kind}-post")
    return [row_pre, row_post], mined


# ---------------------------------------------------------------------------
# self test


def _random_signal(rng, K, N, M):
    return MultiChannelSignal(rng.normal(size=(K, N, M)))


def _check_correlations(rng, count):
    worst = 0.0
    for _ in range(count):
        K = int(rng.integers(1, 3))
        na, ma = int(rng.integers(1, 6)), int(rng.integers(1, 4))
        nb, mb = int(rng.integers(1, 6)), int(rng.integers(1, 4))
        a, b = _random_signal(rng, K, na, ma), _random_signal(rng, K, nb, mb)
        nf = max(na, nb) + int(rng.integers(0, 4))
        mf = max(ma, mb) + int(rng.integers(0, 3))
        fast = circular_correlate(a, b, (nf, mf)).values
        ref = oracle.brute_circular(a, b, (nf, mf)).values
        worst = max(worst, float(np.max(np.abs(fast - ref)) / max(np.max(np.abs(ref)), 1e-300)))
        lin = linear_correlate(a, b).values
        lref = oracle.brute_linear(a, b).values
        worst = max(worst, float(np.max(np.abs(lin - lref)) / max(np.max(np.abs(lref)), 1e-300)))
    return worst


def _check_zamace_tdmace(seed):
    training = data.ecg_like(5, 32, seed=seed)
    td = oracle.tdmace(training)
    za = solve_zamace(make_problem(training, pad=31))
    return float(np.mean((za.template.data - td.template.data) ** 2))


def _check_residuals(rng, count):
    worst = 0.0
    for _ in range(count):
        N = int(rng.integers(3, 7))
        L = int(rng.integers(1, 4))
        training = [_random_signal(rng, 1, N, 1) for _ in range(L)]
        problem = make_problem(training, pad=int(rng.integers(0, N)), delta=0.1)
        for kind in ("ZAMACE", "ZAOTSDF"):
            t = solve(problem if kind == "ZAOTSDF" else _with_delta(problem, 0.0), kind)
            peak = np.max(np.abs(np.real(np.conj(problem.X).T @ t.spectrum.data.reshape(-1)) - problem.peaks))
            tail = constraint_residual(problem.za_system, t.spectrum)
            worst = max(worst, float(peak), float(tail))
    return worst


def _with_delta(problem, delta):
    return make_problem(
        problem.training, problem.labels, problem.peaks, fft_size=problem.grid, support=problem.support,
        delta=delta, C=problem.C, desired_shape=problem.desired_shape, sigma=problem.sigma,
    )


def _check_prox(rng, count):
    worst = 0.0
    for _ in range(count):
        N = int(rng.integers(3, 6))
        L = int(rng.integers(1, 3))
        training = [_random_signal(rng, 1, N, 1) for _ in range(L)]
        problem = make_problem(training, pad=N - 1, delta=0.05)
        ref = oracle.dense_za_solve(problem, "ZAMOSSE")
        model = problem.model(default_desired="peak")
        t, _ = solve_prox(problem, "ZAMOSSE")
        f_ref = model.objective(ref.spectrum.data)
        worst = max(worst, abs(t.objective - f_ref) / abs(f_ref))
    return worst


def selftest(seed: int = 0, scale: int = 1):
    """A quick oracle suite.  Rows follow :data:`SELFTEST_HEADER`."""
    rng = np.random.default_rng(seed)
    rows = []
    n = 20 * scale
    worst = _check_correlations(rng, n)
    rows.append(("correlation_vs_brute_force", n, worst, 1e-10, worst < 1e-10))
    worst = max(_check_zamace_tdmace(seed + s) for s in range(scale))
    rows.append(("zamace_equals_tdmace_mse", scale, worst, 1e-10, worst < 1e-10))
    worst = _check_residuals(rng, 5 * scale)
    rows.append(("constraint_residuals", 5 * scale, worst, 1e-8, worst < 1e-8))
    worst = _check_prox(rng, 3 * scale)
    rows.append(("prox_vs_dense_objective", 3 * scale, worst, 1e-6, worst < 1e-6))
    return rows
