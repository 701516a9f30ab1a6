"""Slow reference implementations.

Nothing here calls the FFT-based fast paths it is meant to check: the
correlations are explicit index loops, DFT matrices are built from their
defining exponentials, and the constrained solves use dense linear algebra.
Every dense routine is guarded by a size cap.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np
import scipy.optimize
import scipy.signal

from .designs import DesignProblem, FilterTemplate, _peak_shape
from .errors import DegenerateLabels, RankDeficientTraining, SingularCrossPower, SizeCapExceeded
from .spectral import CorrelationPlane, MultiChannelSignal, Spectrum, SupportRegion

__all__ = [
    "ORACLE_CAP",
    "brute_circular",
    "brute_linear",
    "linear_correlation_matrix",
    "tdmace",
    "unaliased_ace",
    "DenseSystem",
    "dense_system",
    "dense_za_solve",
    "enumerate_box_qp",
    "spatial_quadratic",
    "spatial_constrained_ls",
    "spatial_mmcf",
    "spatial_squared_hinge",
    "dft_matrix",
]

ORACLE_CAP = 64


def _grid(size):
    if np.isscalar(size):
        return int(size), 1
    size = tuple(int(s) for s in size)
    return (size[0], 1) if len(size) == 1 else size


def brute_circular(a: MultiChannelSignal, b: MultiChannelSignal, fft_size) -> CorrelationPlane:
    """``c(t) = sum_k sum_n a_k(n) b_k((n + t) mod F)`` by direct summation."""
    nf, mf = _grid(fft_size)
    out = np.zeros((nf, mf))
    A, B = a.data, b.data
    for k in range(A.shape[0]):
        for n in range(A.shape[1]):
            for m in range(A.shape[2]):
                v = A[k, n, m]
                if v == 0.0:
                    continue
                for r in range(B.shape[1]):
                    for s in range(B.shape[2]):
                        out[(r - n) % nf, (s - m) % mf] += v * B[k, r, s]
    return CorrelationPlane(out, positive_extent=(min(b.height, nf), min(b.width, mf)))


def brute_linear(a: MultiChannelSignal, b: MultiChannelSignal) -> CorrelationPlane:
    """Linear correlation ``c(t) = sum_n a(n) b(n + t)`` over all overlapping lags.

    Lag ``t`` is stored at index ``t mod P`` with ``P = N_a + N_b - 1``.
    """
    pn = a.height + b.height - 1
    pm = a.width + b.width - 1
    out = np.zeros((pn, pm))
    A, B = a.data, b.data
    for k in range(A.shape[0]):
        for n in range(A.shape[1]):
            for m in range(A.shape[2]):
                v = A[k, n, m]
                if v == 0.0:
                    continue
                for r in range(B.shape[1]):
                    for s in range(B.shape[2]):
                        out[(r - n) % pn, (s - m) % pm] += v * B[k, r, s]
    return CorrelationPlane(out, positive_extent=(b.height, b.width))


def linear_correlation_matrix(x: np.ndarray, support) -> np.ndarray:
    """Matrix ``C`` with ``C @ h.ravel()`` the linear correlation of ``x`` with ``h``.

    ``x`` is ``(K, N, M)``; ``h`` is ``(K, Nh, Mh)`` with ``support = (Nh, Mh)``.
    Rows enumerate every lag of the full linear correlation.
    """
    K, N, M = x.shape
    nh, mh = support
    lags_m = M + mh - 1
    k, n, m, r, s = np.meshgrid(
        np.arange(K), np.arange(N), np.arange(M), np.arange(nh), np.arange(mh), indexing="ij"
    )
    # x[k, n, m] multiplies h[k, r, s] at lag (r - n, s - m)
    rows = ((r - n) + N - 1) * lags_m + (s - m) + M - 1
    cols = (k * nh + r) * mh + s
    C = np.zeros(((N + nh - 1) * lags_m, K * nh * mh))
    np.add.at(C, (rows.ravel(), cols.ravel()), np.broadcast_to(x[:, :, :, None, None], rows.shape).ravel())
    return C


def _embed(h, grid):
    K = h.shape[0]
    out = np.zeros((K, *grid))
    out[:, : h.shape[1], : h.shape[2]] = h
    return out


def _template(kind, spatial, support, grid, delta=0.0, bias=0.0, C=None, solver="oracle", objective=None):
    data = _embed(spatial, grid)
    return FilterTemplate(
        kind=kind,
        template=MultiChannelSignal(data),
        spectrum=Spectrum(np.fft.fft2(data, axes=(1, 2))),
        support=support,
        bias=bias,
        delta=delta,
        C=C,
        pad=grid[0] - support.height,
        solver=solver,
        objective=objective,
    )


def tdmace(training, u=None, q: int | None = None) -> FilterTemplate:
    """Spatial-domain MACE free of aliasing.

    Minimizes the average energy of the *linear* correlations of the training
    signals with an ``N x M`` template subject to ``x_l^T h = u_l``.  The
    template is returned zero-padded to ``(N + q, M + q)`` (non-singleton
    axes only; ``q`` defaults to ``N - 1``) so that it can be compared with
    frequency-domain designs on that grid.
    """
    xs = [np.asarray(getattr(x, "data", x), dtype=float) for x in training]
    K, N, M = xs[0].shape
    L = len(xs)
    u = np.ones(L) if u is None else np.asarray(u, dtype=float)
    q = N - 1 if q is None else int(q)
    grid = (N + q, M + q if M > 1 else 1)
    D = np.zeros((K * N * M, K * N * M))
    for x in xs:
        Cl = linear_correlation_matrix(x, (N, M))
        D += Cl.T @ Cl
    D /= L
    X = np.stack([x.reshape(-1) for x in xs], axis=1)
    s = np.linalg.svd(X, compute_uv=False)
    if s[-1] <= 1e-12 * s[0]:
        raise RankDeficientTraining("training signals are linearly dependent")
    DiX = np.linalg.solve(D, X)
    h = DiX @ np.linalg.solve(X.T @ DiX, u)
    return _template("TDMACE", h.reshape(K, N, M), SupportRegion(N, M), grid, objective=float(h @ D @ h))


def unaliased_ace(template, training) -> float:
    """Mean over training signals of the total energy of their linear
    correlations with the template (restricted to its support)."""
    if isinstance(template, FilterTemplate):
        h = template.cropped().data
    else:
        h = np.asarray(getattr(template, "data", template), dtype=float)
    total = 0.0
    xs = list(training)
    for x in xs:
        x = np.asarray(getattr(x, "data", x), dtype=float)
        # channel-summed linear correlation by direct summation
        c = sum(scipy.signal.correlate(h[k], x[k], mode="full", method="direct") for k in range(x.shape[0]))
        total += float(np.sum(c**2))
    return total / len(xs)


def dft_matrix(grid, positions) -> np.ndarray:
    """``F[r, i] = exp(-j 2 pi (r_n n_i / N_F + r_m m_i / M_F))``: the DFT of an
    impulse at each position, with bins ``r`` in row-major order."""
    nf, mf = grid
    rows = []
    for rn in range(nf):
        for rm in range(mf):
            rows.append([np.exp(-2j * np.pi * (rn * n / nf + rm * m / mf)) for n, m in positions])
    return np.array(rows, dtype=np.complex128).reshape(nf * mf, len(positions))


@dataclass(frozen=True, eq=False)
class DenseSystem:
    """Full matrices of a design problem.

    ``D``, ``T`` are ``K B x K B``; ``X`` has one column per training signal
    (scaled by ``1 / B`` so ``X^H h`` is the spatial peak value); ``A`` holds
    the zero-aliasing constraint columns; ``Bm = [X, A]`` and ``k = [u; 0]``.
    """

    D: np.ndarray
    T: np.ndarray
    p: np.ndarray
    X: np.ndarray
    A: np.ndarray
    Bm: np.ndarray
    k: np.ndarray
    grid: tuple
    support: SupportRegion
    channels: int


def _check_cap(problem, cap):
    n = problem.channels * problem.bins
    if n > cap:
        raise SizeCapExceeded(f"oracle limited to {cap} unknowns, problem has {n}")


def dense_system(problem: DesignProblem, desired: str = "zero", delta: float | None = None, cap: int = ORACLE_CAP) -> DenseSystem:
    """Assemble the dense matrices of a problem from their definitions.

    ``desired`` selects the desired outputs when the problem gives none:
    ``"zero"`` (MACE family) or ``"peak"`` (MOSSE / MMCF).
    """
    _check_cap(problem, cap)
    K = problem.channels
    nf, mf = problem.grid
    B = nf * mf
    L = problem.count
    delta = problem.delta if delta is None else delta
    all_pos = [(n, m) for n in range(nf) for m in range(mf)]
    F = dft_matrix(problem.grid, all_pos)  # (B, B)
    specs = []
    for x in problem.training:
        full = _embed(x.data, problem.grid)
        specs.append(np.concatenate([F @ full[k].reshape(-1) for k in range(K)]))
    if problem.desired is not None:
        gs = [F @ _embed(g.data, problem.grid)[0].reshape(-1) for g in problem.desired]
    elif desired == "peak":
        peak = _peak_shape(problem.grid, problem.desired_shape, problem.sigma)
        gs = [F @ (peak if y > 0 else 0 * peak).reshape(-1) for y in problem.labels]
    else:
        gs = [np.zeros(B, complex) for _ in range(L)]
    D = np.zeros((K * B, K * B), dtype=complex)
    p = np.zeros(K * B, dtype=complex)
    for xh, gh in zip(specs, gs):
        Xl = np.vstack([np.diag(xh[k * B : (k + 1) * B]) for k in range(K)])  # (K B, B)
        D += Xl @ Xl.conj().T
        p += Xl @ gh
    D /= B * L
    p /= B * L
    T = D + delta * np.eye(K * B)
    X = np.stack(specs, axis=1) / B
    tail = [(n, m) for n, m in all_pos if n >= problem.support.height or m >= problem.support.width]
    if tail:
        Z = dft_matrix(problem.grid, tail)  # A^H rows are conj(Z)^T, the inverse-DFT rows times B
        A = np.kron(np.eye(K), Z)
    else:
        A = np.zeros((K * B, 0), dtype=complex)
    Bm = np.concatenate([X, A], axis=1)
    k = np.concatenate([problem.peaks.astype(complex), np.zeros(A.shape[1], complex)])
    return DenseSystem(D, T, p, X, A, Bm, k, problem.grid, problem.support, K)


def enumerate_box_qp(M, d, C):
    """Maximize ``a^T M a + d^T a`` on ``[0, C]^L`` by enumerating face patterns.

    Each variable is fixed at 0, fixed at C or free; the free ones solve the
    stationarity equations.  Returns the best feasible KKT point.
    """
    M = np.asarray(M, float)
    d = np.asarray(d, float)
    L = d.size
    best, best_val = None, -np.inf
    for pattern in itertools.product((0, 1, 2), repeat=L):
        pattern = np.array(pattern)
        a = np.where(pattern == 1, C, 0.0)
        free = pattern == 2
        if free.any():
            fixed = ~free
            rhs = -(d[free] + 2.0 * M[np.ix_(free, fixed)] @ a[fixed])
            sol, *_ = np.linalg.lstsq(2.0 * M[np.ix_(free, free)], rhs, rcond=None)
            a[free] = sol
            if np.any(sol < -1e-12) or np.any(sol > C + 1e-12):
                continue
            a = np.clip(a, 0.0, C)
        val = a @ M @ a + d @ a
        if val > best_val:
            best, best_val = a, val
    return best, best_val


def spatial_quadratic(problem: DesignProblem, desired="zero", delta=None, cap=ORACLE_CAP):
    """Real quadratic ``h^T Q h - 2 c^T h`` over the spatial support coefficients.

    Returns ``(Q, c, Xs, F)`` where ``Xs`` holds the spatial training
    vectors on the support and ``F`` maps support coefficients to the stacked
    spectrum.
    """
    sysd = dense_system(problem, desired, delta, cap)
    K = problem.channels
    n, m = problem.support.size
    pos = [(i, j) for i in range(n) for j in range(m)]
    F1 = dft_matrix(problem.grid, pos)
    F = np.kron(np.eye(K), F1)
    Q = np.real(F.conj().T @ sysd.T @ F)
    Q = 0.5 * (Q + Q.T)
    c = np.real(F.conj().T @ sysd.p)
    Xs = np.stack([x.data[:, :n, :m].reshape(-1) for x in problem.training], axis=1)
    return Q, c, Xs, F


def _spectral_template(problem, kind, h_support, delta, bias=0.0, C=None, objective=None):
    K = problem.channels
    n, m = problem.support.size
    return _template(kind, h_support.reshape(K, n, m), problem.support, problem.grid, delta=delta,
                     bias=bias, C=C, objective=objective)


def spatial_constrained_ls(problem: DesignProblem, desired="zero", constrained=True, delta=None, cap=ORACLE_CAP):
    """Solve the ZA design directly for the support coefficients.

    With ``constrained`` the peak equalities ``x_l^T h = u_l`` are imposed
    (ZAMACE / ZAOTSDF); otherwise it is the unconstrained ZAMOSSE problem.
    """
    delta = problem.delta if delta is None else delta
    Q, c, Xs, _ = spatial_quadratic(problem, desired, delta, cap)
    if constrained:
        n = Q.shape[0]
        L = Xs.shape[1]
        kkt = np.block([[Q, Xs], [Xs.T, np.zeros((L, L))]])
        rhs = np.concatenate([c, problem.peaks])
        h = np.linalg.solve(kkt, rhs)[:n]
    else:
        h = np.linalg.solve(Q, c)
    obj = float(h @ Q @ h - 2 * c @ h)
    return _spectral_template(problem, "oracle", h, delta, objective=obj)


def spatial_mmcf(problem: DesignProblem, margin=1.0, cap=ORACLE_CAP):
    """Max-margin design over the support coefficients (bias fixed at 0).

    The dual is solved by :func:`enumerate_box_qp`.  Returns
    ``(template, a, primal_value)``.
    """
    y = problem.labels.astype(float)
    if not ((y > 0).any() and (y < 0).any()):
        raise DegenerateLabels("need both classes")
    Q, c, Xs, _ = spatial_quadratic(problem, "peak", None, cap)
    Qi_X = np.linalg.solve(Q, Xs)
    Qi_c = np.linalg.solve(Q, c)
    M = -np.outer(y, y) * (Xs.T @ Qi_X)
    M = 0.5 * (M + M.T)
    d = 2.0 * (margin - y * (Xs.T @ Qi_c))
    a, _ = enumerate_box_qp(M, d, problem.C)
    h = Qi_c + Qi_X @ (y * a)
    xi = np.maximum(0.0, margin - y * (Xs.T @ h))
    primal = float(h @ Q @ h - 2 * c @ h + 2 * problem.C * xi.sum())
    return _spectral_template(problem, "oracle", h, problem.delta, C=problem.C, objective=primal), a, primal


def spatial_squared_hinge(problem: DesignProblem, lam: float, margin=1.0, cap=ORACLE_CAP):
    """Minimize ``(lam/2) h^T Q h + (1/2L) sum [margin - y (x^T h + b)]_+^2``
    over the support coefficients and the bias with BFGS.

    Returns ``(template, value)``.
    """
    y = problem.labels.astype(float)
    Q, _, Xs, _ = spatial_quadratic(problem, "zero", None, cap)
    L = y.size
    n = Q.shape[0]

    def fun(z):
        h, b = z[:n], z[n]
        r = np.maximum(margin - y * (Xs.T @ h + b), 0.0)
        val = 0.5 * lam * h @ Q @ h + 0.5 / L * r @ r
        gh = lam * Q @ h - Xs @ (y * r) / L
        gb = -np.sum(y * r) / L
        return val, np.concatenate([gh, [gb]])

    z = np.zeros(n + 1)
    for _ in range(3):
        res = scipy.optimize.minimize(fun, z, jac=True, method="BFGS", options={"gtol": 1e-12, "maxiter": 20000})
        z = res.x
    h, b = z[:n], z[n]
    val = float(fun(z)[0])
    return _spectral_template(problem, "oracle", h, problem.delta, bias=b, objective=val), val


def _inverse(T):
    try:
        return np.linalg.inv(T)
    except np.linalg.LinAlgError:
        raise SingularCrossPower("dense cross-power matrix is singular; use delta > 0") from None


def dense_za_solve(problem: DesignProblem, kind: str = "ZAMACE", cap: int = ORACLE_CAP, margin: float = 1.0):
    """Evaluate the printed closed forms with dense matrices.

    ``kind`` is one of ``ZAMACE`` (``delta`` from the problem, so this also
    covers ZAOTSDF), ``ZAMOSSE`` or ``ZAMMCF``.  ZAMMCF returns
    ``(template, a)`` with the dual solved by enumeration.
    """
    kind = kind.upper()
    if kind == "ZAMACE":
        S = dense_system(problem, "zero", cap=cap)
        Ti = _inverse(S.T)
        Bm = S.Bm
        TiB = Ti @ Bm
        Tip = Ti @ S.p
        h = Tip + TiB @ np.linalg.solve(Bm.conj().T @ TiB, S.k - Bm.conj().T @ Tip)
        return _from_spectrum(problem, "ZAMACE", h, problem.delta)
    S = dense_system(problem, "peak", cap=cap)
    Ti = _inverse(S.T)
    A = S.A
    if A.shape[1]:
        TiA = Ti @ A
        delta_T = np.eye(Ti.shape[0]) - TiA @ np.linalg.solve(A.conj().T @ TiA, A.conj().T)
    else:
        delta_T = np.eye(Ti.shape[0])
    if kind == "ZAMOSSE":
        h = delta_T @ Ti @ S.p
        return _from_spectrum(problem, "ZAMOSSE", h, problem.delta)
    if kind == "ZAMMCF":
        y = problem.labels.astype(float)
        X = S.X
        G = X.conj().T @ delta_T @ Ti @ X
        M = -np.outer(y, y) * np.real(0.5 * (G + G.conj().T))
        d = 2.0 * (margin - y * np.real(X.conj().T @ delta_T @ Ti @ S.p))
        a, _ = enumerate_box_qp(M, d, problem.C)
        v = S.p + X @ (y * a)
        if A.shape[1]:
            omega = -np.linalg.solve(A.conj().T @ Ti @ A, A.conj().T @ Ti @ v)
            h = Ti @ (v + A @ omega)
        else:
            h = Ti @ v
        return _from_spectrum(problem, "ZAMMCF", h, problem.delta, C=problem.C), a
    raise ValueError(f"unknown kind {kind!r}")


def _from_spectrum(problem, kind, h, delta, C=None):
    K = problem.channels
    nf, mf = problem.grid
    B = nf * mf
    # inverse DFT by the defining sum
    pos = [(n, m) for n in range(nf) for m in range(mf)]
    Finv = dft_matrix(problem.grid, pos).conj().T / B
    spatial = np.stack([np.real(Finv @ h[k * B : (k + 1) * B]).reshape(nf, mf) for k in range(K)])
    return FilterTemplate(
        kind=kind,
        template=MultiChannelSignal(spatial),
        spectrum=Spectrum(h.reshape(K, nf, mf)),
        support=problem.support,
        delta=delta,
        C=C,
        pad=problem.pad,
        solver="oracle",
    )
