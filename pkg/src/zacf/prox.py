"""Accelerated proximal gradient solvers for zero-aliasing designs.

The zero-aliasing constraints are enforced in the spatial domain: every
iterate is transformed back, its tail is zeroed (and, for equality designs,
its peak constraints are restored with a minimum-norm correction) and it is
transformed forward again.  No constraint matrix is ever formed, so memory
stays linear in the grid size.

Three solvers are provided:

* :func:`prox_unconstrained` -- ZAMOSSE-type objectives
  ``h^H T h - 2 Re(h^H p)``.
* :func:`prox_equality` -- ZAMACE / ZAOTSDF, the same objective with peak
  equality constraints.
* :func:`prox_inequality` -- the squared-hinge ZAMMCF surrogate
  ``(lam/2) h^H T h + (1/2L) sum [1 - y_l (s_l + b)]_+^2``.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np

from .constraints import CrossPowerModel, ZaConstraintSystem, constraint_residual
from .designs import DesignProblem, FilterTemplate, _check_two_class, solve_mace, solve_mmcf, solve_mosse, solve_otsdf
from .errors import MaxIterationsExceeded, RankDeficientTraining, ZeroGradient
from .spectral import MultiChannelSignal, Spectrum

__all__ = [
    "ProxConfig",
    "ProxTrace",
    "exact_quadratic_step",
    "prox_unconstrained",
    "prox_equality",
    "prox_inequality",
    "solve_prox",
    "optimal_bias",
]


@dataclass(frozen=True)
class ProxConfig:
    """Solver settings.

    ``eps`` is the relative-objective-change stopping tolerance.  ``lam``
    defaults to ``1 / C`` of the problem for the squared-hinge solver.
    With ``restart`` enabled, a momentum step that raises the objective by
    more than ``10 * eps`` (relative) is discarded and momentum is reset.
    """

    eps: float = 1e-10
    max_iterations: int = 20000
    line_search: str = "newton"
    newton_iterations: int = 20
    newton_tol: float = 1e-12
    lam: float | None = None
    restart: bool = True
    raise_on_max_iterations: bool = False

    def __post_init__(self):
        if self.eps <= 0:
            raise ValueError("eps must be positive")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if self.line_search not in ("quadratic", "newton"):
            raise ValueError("line_search must be 'quadratic' or 'newton'")
        if self.lam is not None and self.lam <= 0:
            raise ValueError("lam must be positive")


@dataclass
class ProxTrace:
    """Per-iteration diagnostics of an accelerated proximal gradient run."""

    objective: list = field(default_factory=list)
    step: list = field(default_factory=list)
    residual: list = field(default_factory=list)
    reason: str = ""
    restarts: int = 0

    @property
    def iterations(self) -> int:
        return len(self.objective)

    def to_csv(self, target=None) -> str:
        """Write ``iteration,objective,step,residual`` rows; returns the text."""
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["iteration", "objective", "step", "residual"])
        for i, (f, s, r) in enumerate(zip(self.objective, self.step, self.residual)):
            writer.writerow([i, repr(float(f)), repr(float(s)), repr(float(r))])
        text = buf.getvalue()
        if target is not None:
            if hasattr(target, "write"):
                target.write(text)
            else:
                with open(target, "w", newline="") as fh:
                    fh.write(text)
        return text


def _as_array(h):
    return h.data if isinstance(h, Spectrum) else np.asarray(h)


def exact_quadratic_step(gradient, model: CrossPowerModel) -> float:
    """``eta = g^H g / (2 g^H T g)``, the exact minimizer along ``-g``."""
    g = _as_array(gradient)
    gg = float(np.real(np.vdot(g, g)))
    if gg == 0.0:
        raise ZeroGradient("gradient is zero")
    curv = model.quadratic(g)
    if curv <= 0.0:
        raise ZeroGradient("no curvature along the gradient")
    return gg / (2.0 * curv)


class _TailProx:
    """Tail zeroing (and real projection) on spectra of shape (K, N_F, M_F)."""

    def __init__(self, system: ZaConstraintSystem):
        self.mask = system.mask

    def spatial(self, h):
        x = np.fft.ifft2(h, axes=(1, 2)).real
        x[:, self.mask] = 0.0
        return x

    def __call__(self, h):
        return np.fft.fft2(self.spatial(h), axes=(1, 2))

    direction = __call__


class _PeakProx(_TailProx):
    """Tail zeroing followed by the minimum-norm peak correction."""

    def __init__(self, system: ZaConstraintSystem, X: np.ndarray, u: np.ndarray):
        super().__init__(system)
        self.support = system.support
        self.X = np.asarray(X, dtype=float)
        self.u = np.asarray(u, dtype=float)
        gram = self.X.T @ self.X
        s = np.linalg.svd(gram, compute_uv=False)
        if s.size == 0 or s[-1] <= 1e-12 * s[0]:
            raise RankDeficientTraining("training signals are linearly dependent on the support")
        self._gram_inv = np.linalg.inv(gram)
        self.K = system.channels

    def _correct(self, h, target):
        x = self.spatial(h)
        n, m = self.support.size
        core = x[:, :n, :m].reshape(-1)
        core = core + self.X @ (self._gram_inv @ (target - self.X.T @ core))
        x[:, :n, :m] = core.reshape(self.K, n, m)
        return np.fft.fft2(x, axes=(1, 2))

    def __call__(self, h):
        return self._correct(h, self.u)

    def direction(self, g):
        return self._correct(g, np.zeros_like(self.u))

    def peak_residual(self, h) -> float:
        x = self.spatial(h)
        n, m = self.support.size
        return float(np.max(np.abs(self.X.T @ x[:, :n, :m].reshape(-1) - self.u)))


def _relative_change(new, old):
    denom = abs(old)
    return abs(new - old) / denom if denom > 0 else abs(new - old)


def _accelerate(objective, gradient, prox, step_size, v0, cfg: ProxConfig, residual, after_step=None):
    """Accelerated projected gradient loop shared by all three algorithms."""
    trace = ProxTrace()
    v = prox(v0)
    if after_step is not None:
        after_step(v)
    fv = objective(v)
    w = v
    t = 1
    momentum = False
    trace.reason = "max_iterations"
    for _ in range(cfg.max_iterations):
        g = gradient(w)
        gp = prox.direction(g)
        try:
            eta = step_size(w, gp, g)
        except ZeroGradient:
            trace.reason = "stationary"
            break
        v_new = prox(w - eta * g)
        if after_step is not None:
            after_step(v_new)
        f_new = objective(v_new)
        if cfg.restart and momentum and f_new > fv + 10.0 * cfg.eps * abs(fv):
            trace.restarts += 1
            w = v
            t = 1
            momentum = False
            if after_step is not None:
                after_step(v)
            continue
        rel = _relative_change(f_new, fv)
        beta = (t - 1.0) / (t + 2.0)
        w = v_new + beta * (v_new - v)
        momentum = beta > 0
        if after_step is not None and momentum:
            after_step(w)
        v, fv = v_new, f_new
        t += 1
        trace.objective.append(fv)
        trace.step.append(float(eta))
        trace.residual.append(residual(v))
        if rel < cfg.eps:
            trace.reason = "converged"
            break
    if after_step is not None:
        after_step(v)
    return v, fv, trace


def _finish(v, fv, trace, cfg, kind, system, model, bias=0.0, C=None):
    spatial = np.fft.ifft2(v, axes=(1, 2)).real
    template = FilterTemplate(
        kind=kind,
        template=MultiChannelSignal(spatial),
        spectrum=Spectrum(v),
        support=system.support,
        bias=float(bias),
        delta=model.delta,
        C=C,
        pad=system.grid[0] - system.support.height,
        solver="prox",
        iterations=trace.iterations,
        objective=float(fv),
    )
    if trace.reason == "max_iterations" and cfg.raise_on_max_iterations:
        raise MaxIterationsExceeded(
            f"no convergence within {cfg.max_iterations} iterations", template=template, trace=trace
        )
    return template, trace


def prox_unconstrained(model: CrossPowerModel, system: ZaConstraintSystem, init, cfg: ProxConfig | None = None):
    """Minimize ``h^H T h - 2 Re(h^H p)`` over tail-free templates.

    ``init`` is usually the conventional MOSSE solution; it is passed through
    the prox before the first iteration.
    """
    cfg = cfg or ProxConfig()
    prox = _TailProx(system)
    p = model.p_spectrum

    def gradient(w):
        return 2.0 * (model.apply_T(w) - p)

    def step(w, gp, g):
        return exact_quadratic_step(gp, model)

    def residual(v):
        return constraint_residual(system, v)

    v, fv, trace = _accelerate(model.objective, gradient, prox, step, _as_array(init), cfg, residual)
    return _finish(v, fv, trace, cfg, "ZAMOSSE", system, model)


def prox_equality(model: CrossPowerModel, system: ZaConstraintSystem, peak_data, init, cfg: ProxConfig | None = None):
    """Minimize the loss over tail-free templates with ``X^T h = u``.

    ``peak_data`` is ``(X, u)`` with ``X`` the ``(K N M, L)`` matrix of
    spatial training signals over the support.
    """
    cfg = cfg or ProxConfig()
    X, u = peak_data
    prox = _PeakProx(system, X, u)
    p = model.p_spectrum

    def gradient(w):
        return 2.0 * (model.apply_T(w) - p)

    def step(w, gp, g):
        return exact_quadratic_step(gp, model)

    def residual(v):
        return max(constraint_residual(system, v), prox.peak_residual(v))

    v, fv, trace = _accelerate(model.objective, gradient, prox, step, _as_array(init), cfg, residual)
    kind = "ZAOTSDF" if model.delta > 0 else "ZAMACE"
    return _finish(v, fv, trace, cfg, kind, system, model)


def optimal_bias(scores, labels, margin: float = 1.0) -> float:
    """Exact minimizer over ``b`` of ``sum_l [margin - y_l (s_l + b)]_+^2``.

    The function is convex and piecewise quadratic with breakpoints at
    ``y_l margin - s_l``.  A flat minimum (every sample outside the margin) is
    resolved to the midpoint of the flat interval.
    """
    s = np.asarray(scores, dtype=float)
    y = np.asarray(labels, dtype=float)
    brk = y * margin - s
    pos = y > 0
    neg = ~pos
    # positives are active for b < brk, negatives for b > brk, so every
    # sample is inactive on [max brk_pos, min brk_neg] when that is non-empty
    lo_flat = np.max(brk[pos]) if pos.any() else -np.inf
    hi_flat = np.min(brk[neg]) if neg.any() else np.inf
    if lo_flat <= hi_flat:
        if np.isfinite(lo_flat) and np.isfinite(hi_flat):
            return float(0.5 * (lo_flat + hi_flat))
        if np.isfinite(lo_flat):
            return float(lo_flat)
        if np.isfinite(hi_flat):
            return float(hi_flat)
        return 0.0
    edges = np.unique(brk)
    bounds = np.concatenate([[-np.inf], edges, [np.inf]])
    for lo, hi in zip(bounds[:-1], bounds[1:]):
        mid = 0.5 * (lo + hi) if np.isfinite(lo) and np.isfinite(hi) else (hi - 1.0 if np.isfinite(hi) else lo + 1.0)
        active = (pos & (mid < brk)) | (neg & (mid > brk))
        if not active.any():
            continue
        b = float(np.mean(brk[active]))
        if lo - 1e-12 * (1 + abs(lo)) <= b <= hi + 1e-12 * (1 + abs(hi)):
            return b
    return float(np.mean(brk))


def prox_inequality(problem: DesignProblem, init, cfg: ProxConfig | None = None, margin: float = 1.0):
    """Squared-hinge ZAMMCF by accelerated proximal gradient.

    The bias is re-solved exactly (:func:`optimal_bias`) whenever the
    template changes, so the tracked objective is ``min_b f(h, b)``.  The
    support-vector set is the margin violators ``y_l (s_l + b) < 1``.
    """
    cfg = cfg or ProxConfig()
    _check_two_class(problem)
    lam = cfg.lam if cfg.lam is not None else 1.0 / problem.C
    model = problem.model()
    system = problem.za_system
    prox = _TailProx(system)
    X = problem.X
    Xh = np.conj(X).T
    y = problem.labels.astype(float)
    L = problem.count
    state = {"b": 0.0}

    def scores(h):
        return np.real(Xh @ h.reshape(-1))

    def set_bias(h):
        state["b"] = optimal_bias(scores(h), y, margin)

    def f_at(h, b):
        r = margin - y * (scores(h) + b)
        return 0.5 * lam * model.quadratic(h) + 0.5 / L * float(np.sum(np.maximum(r, 0.0) ** 2))

    def objective(h):
        return f_at(h, optimal_bias(scores(h), y, margin))

    def gradient(w):
        r = margin - y * (scores(w) + state["b"])
        active = r > 0
        coeff = np.where(active, y * r, 0.0)
        hinge = (X @ coeff).reshape(w.shape)
        return lam * model.apply_T(w) - hinge / L

    def step(w, gp, g):
        A = model.quadratic(gp)
        Bq = float(np.real(np.vdot(w, model.apply_T(gp))))
        c = np.real(Xh @ gp.reshape(-1))
        r0 = margin - y * (scores(w) + state["b"])
        gg = float(np.real(np.vdot(gp, gp)))
        if gg == 0.0 or A <= 0.0:
            raise ZeroGradient("projected gradient vanished")

        def dphi(eta):
            r = r0 + eta * y * c
            act = r > 0
            return lam * (eta * A - Bq) + float(np.sum(r[act] * y[act] * c[act])) / L

        def d2phi(eta):
            r = r0 + eta * y * c
            act = r > 0
            return lam * A + float(np.sum(c[act] ** 2)) / L

        d0 = dphi(0.0)
        if d0 >= 0.0:
            raise ZeroGradient("no descent along the projected gradient")
        eta = -d0 / d2phi(0.0)
        if cfg.line_search == "quadratic":
            return eta
        lo, hi = 0.0, eta
        while dphi(hi) < 0.0:
            lo, hi = hi, 2.0 * hi
        scale = abs(d0)
        for _ in range(cfg.newton_iterations):
            dv = dphi(eta)
            if abs(dv) <= cfg.newton_tol * scale:
                break
            if dv < 0:
                lo = eta
            else:
                hi = eta
            nxt = eta - dv / d2phi(eta)
            if not lo < nxt < hi:
                nxt = 0.5 * (lo + hi)
            eta = nxt
        return eta

    def residual(v):
        return constraint_residual(system, v)

    v, fv, trace = _accelerate(objective, gradient, prox, step, _as_array(init), cfg, residual, after_step=set_bias)
    return _finish(v, fv, trace, cfg, "ZAMMCF", system, model, bias=state["b"], C=problem.C)


def _spatial_training_matrix(problem: DesignProblem) -> np.ndarray:
    n, m = problem.support.size
    return np.stack([x.data[:, :n, :m].reshape(-1) for x in problem.training], axis=1)


def solve_prox(problem: DesignProblem, kind: str, cfg: ProxConfig | None = None):
    """Run the proximal solver matching a ZA design name.

    The conventional counterpart is solved first and used (after the prox)
    as the initial iterate.  Returns ``(FilterTemplate, ProxTrace)``.
    """
    kind = kind.upper()
    cfg = cfg or ProxConfig()
    system = problem.za_system
    if kind == "ZAMOSSE":
        init = solve_mosse(problem).spectrum
        model = problem.model(default_desired="peak")
        return prox_unconstrained(model, system, init, cfg)
    if kind in ("ZAMACE", "ZAOTSDF"):
        delta = 0.0 if kind == "ZAMACE" else problem.delta
        init = (solve_mace(problem) if delta == 0 else solve_otsdf(problem)).spectrum
        model = problem.model(delta=delta)
        return prox_equality(model, system, (_spatial_training_matrix(problem), problem.peaks), init, cfg)
    if kind == "ZAMMCF":
        init = solve_mmcf(problem)[0].spectrum
        return prox_inequality(problem, init, cfg)
    raise ValueError(f"no proximal solver for {kind!r}")
