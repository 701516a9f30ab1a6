"""Closed-form correlation filter designs, conventional and zero-aliasing.

Every design is a quadratic program in the filter spectrum ``h``::

    minimize   h^H T h - 2 Re(h^H p)
    subject to peak constraints (equality or margin) and, for ZA designs,
               a zero template tail.

Peak constraints are expressed as spatial dot products, i.e. on
``x_l^H h / B`` with ``B = N_F M_F``; this is the value the correlation plane
takes at lag zero, so a ZAMACE template with ``u = 1`` correlates with its own
training images to 1 at the origin.

All designs share one operator ``S``: ``T^{-1}`` for conventional designs and
``Delta_T T^{-1}`` (the inverse of ``T`` restricted to tail-free spectra) for
ZA designs.  ``S`` is applied either through the support basis (default,
cheap) or through the tail-constraint matrix exactly as the printed
closed forms do (``method="constraints"``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.linalg

from .constraints import CrossPowerModel, ZaConstraintSystem, build_cross_power, build_za_system
from .errors import (
    DegenerateLabels,
    NegativeDelta,
    RankDeficientConstraints,
    ShapeMismatch,
    SizeCapExceeded,
    SizeError,
)
from .spectral import MultiChannelSignal, Spectrum, SupportRegion, forward_dft

__all__ = [
    "DesignProblem",
    "FilterTemplate",
    "MmcfDualState",
    "make_problem",
    "racf_fft_size",
    "solve_mace",
    "solve_otsdf",
    "solve_zamace",
    "solve_mosse",
    "solve_zamosse",
    "solve_mmcf",
    "solve_zammcf_closed",
    "solve_mace_cropped",
    "solve_box_qp",
    "solve",
    "DESIGNS",
    "DEFAULT_SIZE_CAP",
    "primal_mmcf_value",
]

DEFAULT_SIZE_CAP = 4096
RANK_RCOND = 1e-12


# ---------------------------------------------------------------------------
# problem and result types


@dataclass(frozen=True, eq=False)
class DesignProblem:
    """Everything a solver needs.

    ``training`` holds the spatial training signals (all ``N x M``), which are
    zero-padded onto ``grid`` for the frequency-domain designs.  ``peaks`` is
    the equality-constraint vector ``u``.  ``desired`` optionally gives one
    single-channel desired correlation output per training signal on ``grid``;
    when ``None`` the MACE family uses an all-zero output and MOSSE/MMCF a
    ``desired_shape`` peak for positives and zero for negatives.
    """

    training: tuple
    labels: np.ndarray
    peaks: np.ndarray
    grid: tuple[int, int]
    support: SupportRegion
    delta: float = 0.0
    C: float = 1.0
    desired: tuple | None = None
    desired_shape: str = "delta"
    sigma: float = 1.0
    size_cap: int = DEFAULT_SIZE_CAP
    _models: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if len(self.training) < 1:
            raise ShapeMismatch("at least one training signal is required")
        first = self.training[0]
        for x in self.training:
            if x.data.shape != first.data.shape:
                raise ShapeMismatch("training signals must share channels and size")
        if len(self.labels) != len(self.training) or len(self.peaks) != len(self.training):
            raise ShapeMismatch("labels and peaks need one entry per training signal")
        if not set(np.unique(self.labels)).issubset({-1, 1}):
            raise ValueError("labels must be +1 or -1")
        if self.delta < 0:
            raise NegativeDelta(f"delta must be >= 0, got {self.delta}")
        if self.C <= 0:
            raise ValueError("C must be positive")
        if not self.support.fits(self.grid):
            raise SizeError(f"support {self.support.size} exceeds grid {self.grid}")
        if first.height > self.grid[0] or first.width > self.grid[1]:
            raise SizeError("training signals do not fit the FFT grid")

    @property
    def count(self) -> int:
        return len(self.training)

    @property
    def channels(self) -> int:
        return self.training[0].channels

    @property
    def signal_size(self) -> tuple[int, int]:
        return self.training[0].size

    @property
    def bins(self) -> int:
        return self.grid[0] * self.grid[1]

    @property
    def unknowns(self) -> int:
        return self.channels * self.bins

    @property
    def pad(self) -> int:
        return self.grid[0] - self.support.height

    @cached_property
    def spectra(self) -> np.ndarray:
        """``(L, K, N_F, M_F)`` training spectra."""
        return np.stack([forward_dft(x, self.grid).data for x in self.training])

    @cached_property
    def X(self) -> np.ndarray:
        """``(K B, L)`` constraint matrix, columns scaled so ``X^H h`` is a spatial dot product."""
        return self.spectra.reshape(self.count, -1).T / self.bins

    @cached_property
    def za_system(self) -> ZaConstraintSystem:
        return build_za_system(self.grid, self.support, self.channels)

    def desired_outputs(self, default: str = "zero") -> list[Spectrum] | None:
        """Desired-output spectra, or ``None`` when they are all zero."""
        if self.desired is not None:
            return [forward_dft(g, self.grid) for g in self.desired]
        if default == "zero":
            return None
        peak = _peak_shape(self.grid, self.desired_shape, self.sigma)
        out = []
        for y in self.labels:
            g = peak if y > 0 else np.zeros_like(peak)
            out.append(Spectrum(np.fft.fft2(g)[None]))
        return out

    def model(self, delta: float | None = None, default_desired: str = "zero") -> CrossPowerModel:
        delta = self.delta if delta is None else delta
        key = (float(delta), default_desired if self.desired is None else "given")
        if key not in self._models:
            spectra = [Spectrum(s) for s in self.spectra]
            self._models[key] = build_cross_power(
                spectra, self.desired_outputs(default_desired), delta
            )
        return self._models[key]

    def with_training(self, training, labels, peaks) -> DesignProblem:
        """A copy with a different training set (other parameters kept)."""
        return DesignProblem(
            training=tuple(training),
            labels=np.asarray(labels, dtype=int),
            peaks=np.asarray(peaks, dtype=float),
            grid=self.grid,
            support=self.support,
            delta=self.delta,
            C=self.C,
            desired=None,
            desired_shape=self.desired_shape,
            sigma=self.sigma,
            size_cap=self.size_cap,
        )


def _peak_shape(grid, shape, sigma):
    n_f, m_f = grid
    g = np.zeros(grid)
    if shape == "delta":
        g[0, 0] = 1.0
        return g
    if shape != "gaussian":
        raise ValueError(f"unknown desired output shape {shape!r}")
    # wrapped distance to the origin, so the peak sits at lag 0
    dn = np.minimum(np.arange(n_f), n_f - np.arange(n_f))
    dm = np.minimum(np.arange(m_f), m_f - np.arange(m_f))
    return np.exp(-(dn[:, None] ** 2 + dm[None, :] ** 2) / (2.0 * sigma**2))


def racf_fft_size(N: int, M: int, pad_fraction: float) -> tuple[int, int]:
    """Reduced-aliasing DFT size: pad each axis by ``ceil(pad_fraction * size)``.

    The result stays strictly below ``2 * size - 1`` (full padding would be a
    plain ZA design).  Singleton axes are left unpadded.
    """
    if not 0 < pad_fraction < 1:
        raise ValueError("pad_fraction must lie in (0, 1)")

    def one(n):
        if n == 1:
            return 1
        padded = n + math.ceil(pad_fraction * n - 1e-9)
        return max(n, min(padded, 2 * n - 2))

    return one(int(N)), one(int(M))


def make_problem(
    training,
    labels=None,
    peaks=None,
    *,
    fft_size=None,
    pad=None,
    pad_fraction=None,
    support=None,
    delta: float = 0.0,
    C: float = 1.0,
    desired=None,
    desired_shape: str = "delta",
    sigma: float = 1.0,
    size_cap: int = DEFAULT_SIZE_CAP,
) -> DesignProblem:
    """Assemble a :class:`DesignProblem`.

    The FFT grid comes from ``fft_size``, else from a pad amount ``q`` added
    to every non-singleton axis, else from ``pad_fraction`` (RACF sizing),
    else it equals the signal size.  Labels default to all positive; peaks
    default to 1 for positives and 0 for negatives.
    """
    training = tuple(training)
    n, m = training[0].size
    labels = np.ones(len(training), dtype=int) if labels is None else np.asarray(labels, dtype=int)
    if peaks is None:
        peaks = np.where(labels > 0, 1.0, 0.0)
    peaks = np.asarray(peaks, dtype=float)
    if fft_size is not None:
        grid = (int(fft_size[0]), int(fft_size[1]) if len(fft_size) > 1 else 1)
    elif pad is not None:
        grid = (n + int(pad), m + int(pad) if m > 1 else 1)
    elif pad_fraction is not None:
        grid = racf_fft_size(n, m, pad_fraction)
    else:
        grid = (n, m)
    if support is None:
        support = SupportRegion(n, m)
    elif not isinstance(support, SupportRegion):
        support = SupportRegion(*support)
    if desired is not None:
        desired = tuple(desired)
    return DesignProblem(
        training=training,
        labels=labels,
        peaks=peaks,
        grid=grid,
        support=support,
        delta=float(delta),
        C=float(C),
        desired=desired,
        desired_shape=desired_shape,
        sigma=float(sigma),
        size_cap=int(size_cap),
    )


@dataclass(frozen=True, eq=False)
class FilterTemplate:
    """A solved filter in both domains with its design provenance."""

    kind: str
    template: MultiChannelSignal
    spectrum: Spectrum
    support: SupportRegion
    bias: float = 0.0
    delta: float = 0.0
    C: float | None = None
    pad: int = 0
    solver: str = "closed-form"
    iterations: int = 0
    objective: float | None = None

    @property
    def grid(self) -> tuple[int, int]:
        return self.template.size

    @property
    def channels(self) -> int:
        return self.template.channels

    def cropped(self) -> MultiChannelSignal:
        s = self.support
        return MultiChannelSignal(self.template.data[:, : s.height, : s.width])

    def tail_max(self) -> float:
        mask = np.ones(self.grid, dtype=bool)
        mask[: self.support.height, : self.support.width] = False
        if not mask.any():
            return 0.0
        return float(np.max(np.abs(self.template.data[:, mask])))


@dataclass(frozen=True, eq=False)
class MmcfDualState:
    """Solution of the box-constrained MMCF dual ``max a^T M a + d^T a``.

    ``constant`` is the term the printed dual omits
    (``-p^H S p``); ``dual_value`` includes it so that it can be compared
    with the primal objective.  Slacks ``xi`` are measured with ``b = 0``, the
    problem the box-only dual actually solves.
    """

    a: np.ndarray
    M: np.ndarray
    d: np.ndarray
    C: float
    xi: np.ndarray
    constant: float = 0.0
    iterations: int = 0

    def objective(self, a=None) -> float:
        a = self.a if a is None else a
        return float(a @ self.M @ a + self.d @ a)

    @property
    def dual_value(self) -> float:
        return self.objective() + self.constant

    @property
    def gradient(self) -> np.ndarray:
        return 2.0 * self.M @ self.a + self.d

    def kkt_violation(self) -> float:
        """Largest violation of the box-QP optimality conditions."""
        return float(np.max(np.abs(_projected_gradient(self.a, self.gradient, self.C)), initial=0.0))


# ---------------------------------------------------------------------------
# the shared inverse operator


def _ensure_cap(problem: DesignProblem):
    if problem.unknowns > problem.size_cap:
        raise SizeCapExceeded(
            f"{problem.unknowns} complex unknowns exceed the dense cap of {problem.size_cap}; "
            "use the proximal gradient solvers"
        )


class _InverseOperator:
    """Applies ``S`` to columns of shape ``(K B, c)``."""

    def __init__(self, model: CrossPowerModel, system: ZaConstraintSystem | None, method="support"):
        self.model = model
        self.K = model.channels
        self.B = model.bins
        self.system = None if system is None or system.is_empty else system
        self.method = method
        if self.system is None:
            self._Tinv = model.T_inv
        elif method == "support":
            self._setup_support()
        elif method == "constraints":
            self._Tinv = model.T_inv
            self._setup_constraints()
        else:
            raise ValueError(f"unknown method {method!r}")

    def _tinv(self, V):
        Vb = V.reshape(self.K, self.B, -1)
        return np.einsum("bkj,jbc->kbc", self._Tinv, Vb).reshape(self.K * self.B, -1)

    def _setup_support(self):
        # E0[b, i]: DFT of a unit impulse at support position i
        E0 = np.conj(self.system.fourier_rows(self.system.support_positions())).T
        T = self.model.T
        n_s = E0.shape[1]
        G = np.empty((self.K, n_s, self.K, n_s), dtype=np.complex128)
        E0h = np.conj(E0).T
        for k in range(self.K):
            for j in range(self.K):
                G[k, :, j, :] = (E0h * T[:, k, j]) @ E0
        G = G.reshape(self.K * n_s, self.K * n_s)
        G = 0.5 * (G + np.conj(G).T)
        self._E0 = E0
        self._E0h = E0h
        try:
            self._chol = scipy.linalg.cho_factor(G)
        except np.linalg.LinAlgError as exc:
            from .errors import SingularCrossPower

            raise SingularCrossPower("cross power restricted to the template support is singular") from exc

    def _setup_constraints(self):
        A = np.conj(self.system.dense_adjoint()).T  # (K B, K tail)
        self._A = A
        self._TinvA = self._tinv(A)
        G = np.conj(A).T @ self._TinvA
        G = 0.5 * (G + np.conj(G).T)
        self._chol = scipy.linalg.cho_factor(G)

    def __call__(self, V):
        V = np.asarray(V, dtype=np.complex128)
        vec = V.ndim == 1
        V = V.reshape(self.K * self.B, -1)
        if self.system is None:
            out = self._tinv(V)
        elif self.method == "support":
            Vb = V.reshape(self.K, self.B, -1)
            W = np.concatenate([self._E0h @ Vb[k] for k in range(self.K)])
            Y = scipy.linalg.cho_solve(self._chol, W).reshape(self.K, self._E0.shape[1], -1)
            out = np.concatenate([self._E0 @ Y[k] for k in range(self.K)])
        else:
            TV = self._tinv(V)
            out = TV - self._TinvA @ scipy.linalg.cho_solve(self._chol, np.conj(self._A).T @ TV)
        return out[:, 0] if vec else out


def _check_rank(gram, what):
    s = np.linalg.svd(gram, compute_uv=False)
    if s.size and (s[-1] <= RANK_RCOND * s[0] or s[0] == 0):
        raise RankDeficientConstraints(f"{what} is rank deficient (condition {s[0] / max(s[-1], 1e-300):.3g})")


def _equality_solution(problem: DesignProblem, S: _InverseOperator, p_flat):
    X = problem.X
    SX = S(X)
    gram = np.conj(X).T @ SX
    _check_rank(gram, "peak-constraint Gram matrix")
    if np.any(p_flat):
        Sp = S(p_flat)
        rhs = problem.peaks - np.conj(X).T @ Sp
    else:
        Sp = np.zeros_like(p_flat)
        rhs = problem.peaks.astype(np.complex128)
    coeff = np.linalg.solve(gram, rhs)
    return Sp + SX @ coeff


def _make_template(problem, h_flat, kind, za, model, **prov) -> FilterTemplate:
    h = h_flat.reshape(problem.channels, *problem.grid)
    spatial = np.fft.ifft2(h, axes=(1, 2)).real
    spec = np.fft.fft2(spatial, axes=(1, 2))
    support = problem.support if za else SupportRegion(*problem.grid)
    return FilterTemplate(
        kind=kind,
        template=MultiChannelSignal(spatial),
        spectrum=Spectrum(spec, source_size=problem.grid),
        support=support,
        delta=model.delta,
        pad=problem.pad,
        objective=model.objective(spec),
        **prov,
    )


def _za_active(problem) -> bool:
    return not problem.za_system.is_empty


# ---------------------------------------------------------------------------
# equality-constrained designs


def solve_mace(problem: DesignProblem) -> FilterTemplate:
    """Conventional MACE: minimum ACE subject to ``x_l^H h / B = u_l``."""
    model = problem.model(delta=0.0)
    S = _InverseOperator(model, None)
    h = _equality_solution(problem, S, model.p.T.reshape(-1))
    return _make_template(problem, h, "MACE", False, model)


def solve_otsdf(problem: DesignProblem) -> FilterTemplate:
    """MACE with the regularized cross power ``T = D + delta I``."""
    if problem.delta <= 0:
        raise NegativeDelta("OTSDF requires delta > 0")
    model = problem.model()
    S = _InverseOperator(model, None)
    h = _equality_solution(problem, S, model.p.T.reshape(-1))
    return _make_template(problem, h, "OTSDF", False, model)


def solve_zamace(problem: DesignProblem, method: str = "support") -> FilterTemplate:
    """Zero-aliasing MACE (ZAOTSDF when ``problem.delta > 0``).

    With no tail (``N_F == N``) this is exactly the conventional design.
    """
    otsdf = problem.delta > 0
    if not _za_active(problem):
        base = solve_otsdf(problem) if otsdf else solve_mace(problem)
        return _rename(base, "ZAOTSDF" if otsdf else "ZAMACE", problem.support)
    _ensure_cap(problem)
    model = problem.model()
    S = _InverseOperator(model, problem.za_system, method)
    h = _equality_solution(problem, S, model.p.T.reshape(-1))
    return _make_template(problem, h, "ZAOTSDF" if otsdf else "ZAMACE", True, model)


def solve_mace_cropped(problem: DesignProblem) -> FilterTemplate:
    """Conventional MACE trained on the padded grid, then cropped to the support."""
    full = solve_mace(problem)
    data = np.zeros_like(full.template.data)
    s = problem.support
    data[:, : s.height, : s.width] = full.template.data[:, : s.height, : s.width]
    spec = np.fft.fft2(data, axes=(1, 2))
    model = problem.model(delta=0.0)
    return FilterTemplate(
        kind="MACE-cropped",
        template=MultiChannelSignal(data),
        spectrum=Spectrum(spec),
        support=s,
        pad=problem.pad,
        objective=model.objective(spec),
    )


def _rename(t: FilterTemplate, kind, support) -> FilterTemplate:
    return FilterTemplate(
        kind=kind,
        template=t.template,
        spectrum=t.spectrum,
        support=support,
        bias=t.bias,
        delta=t.delta,
        C=t.C,
        pad=t.pad,
        solver=t.solver,
        iterations=t.iterations,
        objective=t.objective,
    )


# ---------------------------------------------------------------------------
# unconstrained designs


def solve_mosse(problem: DesignProblem) -> FilterTemplate:
    """``h = T^{-1} p`` bin by bin."""
    model = problem.model(default_desired="peak")
    h = model.apply_T_inv(model.p_spectrum)
    return _make_template(problem, h.reshape(-1), "MOSSE", False, model)


def solve_zamosse(problem: DesignProblem, method: str = "support") -> FilterTemplate:
    """MOSSE restricted to tail-free templates: ``h = Delta_T T^{-1} p``."""
    if not _za_active(problem):
        return _rename(solve_mosse(problem), "ZAMOSSE", problem.support)
    _ensure_cap(problem)
    model = problem.model(default_desired="peak")
    S = _InverseOperator(model, problem.za_system, method)
    h = S(model.p.T.reshape(-1))
    return _make_template(problem, h, "ZAMOSSE", True, model)


# ---------------------------------------------------------------------------
# max-margin designs


def _projected_gradient(a, g, C):
    pg = g.copy()
    at_lo = a <= 0.0
    at_hi = a >= C
    pg[at_lo] = np.maximum(g[at_lo], 0.0)
    pg[at_hi] = np.minimum(g[at_hi], 0.0)
    return pg


def solve_box_qp(M, d, C, tol: float = 1e-8, max_iter: int = 10000):
    """Maximize ``a^T M a + d^T a`` over ``0 <= a <= C`` (``M`` negative semidefinite).

    Projected gradient ascent with an exact step along the projected gradient,
    followed each iteration by a Newton step on the currently free variables.
    Stops when the projected-gradient norm drops below ``tol * (1 + ||d||)``.

    Returns ``(a, iterations)``.
    """
    M = np.asarray(M, dtype=float)
    d = np.asarray(d, dtype=float)
    n = d.size
    a = np.zeros(n)
    threshold = tol * (1.0 + np.linalg.norm(d))

    def q(v):
        return v @ M @ v + d @ v

    it = 0
    for it in range(1, max_iter + 1):
        g = 2.0 * M @ a + d
        pg = _projected_gradient(a, g, C)
        if np.linalg.norm(pg) < threshold:
            break
        curv = pg @ M @ pg
        slope = g @ pg
        eta = slope / (-2.0 * curv) if curv < -1e-300 else C * n / max(np.linalg.norm(pg), 1e-300)
        qa = q(a)
        cand = np.clip(a + eta * pg, 0.0, C)
        while q(cand) < qa and eta > 1e-18:
            eta *= 0.5
            cand = np.clip(a + eta * pg, 0.0, C)
        if q(cand) >= qa:
            a = cand
        a = _newton_polish(a, M, d, C)
    return a, it


def _newton_polish(a, M, d, C):
    free = (a > 0.0) & (a < C)
    if not free.any():
        # try releasing variables whose gradient points inward
        g = 2.0 * M @ a + d
        free = ((a <= 0.0) & (g > 0)) | ((a >= C) & (g < 0))
        if not free.any():
            return a
    fixed = ~free
    rhs = -(d[free] + 2.0 * M[np.ix_(free, fixed)] @ a[fixed])
    try:
        z = np.linalg.solve(2.0 * M[np.ix_(free, free)], rhs)
    except np.linalg.LinAlgError:
        return a
    target = a.copy()
    target[free] = z
    step = target - a
    # largest fraction of the step that stays inside the box
    t = 1.0
    pos = step > 0
    neg = step < 0
    if pos.any():
        t = min(t, float(np.min((C - a[pos]) / step[pos])))
    if neg.any():
        t = min(t, float(np.min(-a[neg] / step[neg])))
    t = max(t, 0.0)
    cand = np.clip(a + t * step, 0.0, C)
    if t >= 1.0:
        cand = np.clip(target, 0.0, C)

    def q(v):
        return v @ M @ v + d @ v

    return cand if q(cand) >= q(a) else a


def _check_two_class(problem):
    labels = np.asarray(problem.labels)
    if not ((labels > 0).any() and (labels < 0).any()):
        raise DegenerateLabels("max-margin designs need positive and negative training samples")


def _mmcf(problem: DesignProblem, za: bool, kind: str, method="support", margin: float = 1.0):
    _check_two_class(problem)
    if problem.delta <= 0:
        raise NegativeDelta("MMCF designs require delta > 0")
    model = problem.model(default_desired="peak")
    system = problem.za_system if za else None
    if za:
        _ensure_cap(problem)
    S = _InverseOperator(model, system, method)
    y = problem.labels.astype(float)
    X = problem.X
    p_flat = model.p.T.reshape(-1)
    SX = S(X)
    Sp = S(p_flat)
    H = np.real(np.conj(X).T @ SX)
    H = 0.5 * (H + H.T)
    qv = np.real(np.conj(X).T @ Sp)
    M = -np.outer(y, y) * H
    d = 2.0 * (margin - y * qv)
    a, iters = solve_box_qp(M, d, problem.C)
    h = Sp + SX @ (y * a)
    scores = np.real(np.conj(X).T @ h)
    free = (a > 1e-8 * problem.C) & (a < problem.C * (1.0 - 1e-8))
    bias = float(np.mean(y[free] * margin - scores[free])) if free.any() else 0.0
    xi = np.maximum(0.0, margin - y * scores)
    constant = -float(np.real(np.vdot(p_flat, Sp)))
    state = MmcfDualState(a=a, M=M, d=d, C=problem.C, xi=xi, constant=constant, iterations=iters)
    template = _make_template(problem, h, kind, za, model, bias=bias, C=problem.C, iterations=iters)
    return template, state


def solve_mmcf(problem: DesignProblem):
    """Maximum-margin correlation filter via its box-constrained dual.

    Returns ``(FilterTemplate, MmcfDualState)``.  The margin condition is
    ``y_l (x_l^H h / B + b) >= 1 - xi_l``; the dual is solved for ``b = 0``
    and ``b`` is then recovered from the free support vectors.
    """
    return _mmcf(problem, za=False, kind="MMCF")


def solve_zammcf_closed(problem: DesignProblem, method: str = "support"):
    """Zero-aliasing MMCF: the MMCF dual built on ``Delta_T T^{-1}``."""
    if not _za_active(problem):
        t, state = _mmcf(problem, za=False, kind="MMCF")
        return _rename(t, "ZAMMCF", problem.support), state
    return _mmcf(problem, za=True, kind="ZAMMCF", method=method)


def primal_mmcf_value(problem: DesignProblem, template: FilterTemplate, margin: float = 1.0) -> float:
    """Primal MMCF objective of a template with ``b = 0`` (for duality-gap checks)."""
    model = problem.model(default_desired="peak")
    h = template.spectrum.data
    scores = np.real(np.conj(problem.X).T @ h.reshape(-1))
    xi = np.maximum(0.0, margin - problem.labels * scores)
    return model.objective(h) + 2.0 * problem.C * float(np.sum(xi))


# ---------------------------------------------------------------------------


DESIGNS = {
    "MACE": solve_mace,
    "OTSDF": solve_otsdf,
    "MOSSE": solve_mosse,
    "MMCF": lambda p: solve_mmcf(p)[0],
    "ZAMACE": solve_zamace,
    "ZAOTSDF": solve_zamace,
    "ZAMOSSE": solve_zamosse,
    "ZAMMCF": lambda p: solve_zammcf_closed(p)[0],
}


def solve(problem: DesignProblem, kind: str) -> FilterTemplate:
    """Dispatch a closed-form design by name (``"MACE"``, ``"ZAMMCF"``, ...)."""
    try:
        fn = DESIGNS[kind.upper()]
    except KeyError:
        raise ValueError(f"unknown design {kind!r}; choose from {sorted(DESIGNS)}") from None
    return fn(problem)
