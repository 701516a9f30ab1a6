"""Per-bin cross-power model and the zero-aliasing constraint system.

The cross-power matrix of the localization loss is block diagonal in
frequency, so it is stored as one K x K Hermitian matrix per bin.  Spectra
are handled as ``(K, N_F, M_F)`` arrays; the per-bin layout used here is
``(B, K)`` with ``B = N_F * M_F`` bins in row-major order.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import NegativeDelta, ShapeMismatch, SingularCrossPower, SizeError
from .spectral import Spectrum, SupportRegion

__all__ = [
    "CrossPowerModel",
    "ZaConstraintSystem",
    "build_cross_power",
    "build_za_system",
    "constraint_residual",
    "tail_mask",
]

# relative eigenvalue floor below which a bin counts as singular
SINGULAR_RTOL = 1e-13


def _bins_first(arr):
    """(K, N_F, M_F) -> (B, K)."""
    k = arr.shape[0]
    return arr.reshape(k, -1).T


def _channels_first(arr, grid):
    """(B, K) -> (K, N_F, M_F)."""
    return arr.T.reshape(arr.shape[1], grid[0], grid[1])


@dataclass(frozen=True, eq=False)
class CrossPowerModel:
    """Cross-power matrices ``D(r)`` and vectors ``p(r)`` for every bin.

    Attributes
    ----------
    D : ndarray, shape (B, K, K)
        Hermitian PSD blocks, already scaled by ``1 / (N_F M_F L)``.
    p : ndarray, shape (B, K)
    delta : float
        Regularizer; ``T(r) = D(r) + delta I``.
    grid : (N_F, M_F)
    count : int
        Number of training signals L.
    energy : float
        Mean desired-output energy, the constant term of the loss.
    """

    D: np.ndarray
    p: np.ndarray
    delta: float
    grid: tuple[int, int]
    count: int
    energy: float = 0.0

    @property
    def channels(self) -> int:
        return self.D.shape[1]

    @property
    def bins(self) -> int:
        return self.D.shape[0]

    @cached_property
    def T(self) -> np.ndarray:
        eye = np.eye(self.channels)
        return self.D + self.delta * eye[None]

    @cached_property
    def min_eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.T)[:, 0]

    def check_invertible(self):
        lam = self.min_eigenvalues
        top = float(np.max(np.abs(np.linalg.eigvalsh(self.T)[:, -1])))
        bad = np.flatnonzero(lam <= SINGULAR_RTOL * max(top, np.finfo(float).tiny))
        if bad.size:
            raise SingularCrossPower(
                f"{bad.size} of {self.bins} frequency bins have a singular cross-power matrix "
                f"(first bin {int(bad[0])}); use delta > 0"
            )

    @cached_property
    def T_inv(self) -> np.ndarray:
        self.check_invertible()
        return np.linalg.inv(self.T)

    def apply_T(self, h: np.ndarray) -> np.ndarray:
        """Multiply a ``(K, N_F, M_F)`` spectrum by T bin-wise."""
        hb = _bins_first(h)
        return _channels_first(np.einsum("bij,bj->bi", self.T, hb), self.grid)

    def apply_T_inv(self, h: np.ndarray) -> np.ndarray:
        hb = _bins_first(h)
        return _channels_first(np.einsum("bij,bj->bi", self.T_inv, hb), self.grid)

    @property
    def p_spectrum(self) -> np.ndarray:
        return _channels_first(self.p, self.grid)

    def quadratic(self, h: np.ndarray) -> float:
        """``h^H T h`` for a ``(K, N_F, M_F)`` spectrum."""
        return float(np.real(np.vdot(h, self.apply_T(h))))

    def objective(self, h: np.ndarray) -> float:
        """``h^H T h - 2 Re(h^H p)``, the loss without its constant."""
        return self.quadratic(h) - 2.0 * float(np.real(np.vdot(h, self.p_spectrum)))

    def loss(self, h: np.ndarray) -> float:
        """Localization loss including the desired-output energy."""
        return self.objective(h) + self.energy


def build_cross_power(training, desired=None, delta: float = 0.0) -> CrossPowerModel:
    """Bin-wise cross power of training spectra and desired-output spectra.

    ``D(r)[i, j] = sum_l x_l^i(r) conj(x_l^j(r)) / (B L)`` and
    ``p(r)[i] = sum_l x_l^i(r) g_l(r) / (B L)``.  ``desired`` may be ``None``
    or empty, giving ``p = 0``; otherwise it holds one single-channel spectrum
    per training spectrum.
    """
    training = list(training)
    if not training:
        raise ShapeMismatch("at least one training spectrum is required")
    if delta < 0:
        raise NegativeDelta(f"delta must be >= 0, got {delta}")
    first = training[0]
    for s in training:
        if s.data.shape != first.data.shape:
            raise ShapeMismatch("all training spectra must share channels and grid")
    grid = first.grid
    n_bins = grid[0] * grid[1]
    count = len(training)
    scale = 1.0 / (n_bins * count)

    X = np.stack([_bins_first(s.data) for s in training])  # (L, B, K)
    D = scale * np.einsum("lbi,lbj->bij", X, np.conj(X))
    D = 0.5 * (D + np.conj(np.swapaxes(D, 1, 2)))
    p = np.zeros((n_bins, first.channels), dtype=np.complex128)
    energy = 0.0
    if desired:
        desired = list(desired)
        if len(desired) != count:
            raise ShapeMismatch("need one desired output per training signal")
        G = []
        for g in desired:
            if g.channels != 1 or g.grid != grid:
                raise ShapeMismatch("desired outputs must be single-channel on the training grid")
            G.append(g.data.reshape(-1))
        G = np.stack(G)  # (L, B)
        p = scale * np.einsum("lbi,lb->bi", X, G)
        energy = float(np.sum(np.abs(G) ** 2)) * scale  # Parseval: sum |g|^2 / L
    return CrossPowerModel(D=D, p=p, delta=float(delta), grid=grid, count=count, energy=energy)


def tail_mask(grid, support: SupportRegion) -> np.ndarray:
    """Boolean ``(N_F, M_F)`` mask that is True outside the support block."""
    mask = np.ones(grid, dtype=bool)
    mask[: support.height, : support.width] = False
    return mask


@dataclass(frozen=True)
class ZaConstraintSystem:
    """Zero-aliasing constraints: every sample outside the support is zero.

    The constraint matrix rows are inverse-DFT rows (without the ``1/B``
    factor) for the tail samples, one block per channel.  It is described
    implicitly; :meth:`dense_adjoint` materializes it for small problems.
    """

    grid: tuple[int, int]
    support: SupportRegion
    channels: int

    @property
    def tail_count(self) -> int:
        return self.support.tail_count(self.grid)

    @property
    def row_count(self) -> int:
        return self.channels * self.tail_count

    @property
    def is_empty(self) -> bool:
        return self.tail_count == 0

    @cached_property
    def mask(self) -> np.ndarray:
        return tail_mask(self.grid, self.support)

    def tail_positions(self) -> np.ndarray:
        """Row-major (n, m) coordinates of the constrained samples."""
        return np.argwhere(self.mask)

    def support_positions(self) -> np.ndarray:
        return np.argwhere(~self.mask)

    def fourier_rows(self, positions) -> np.ndarray:
        """``exp(+j 2 pi (r n / N_F + s m / M_F))`` rows for the given positions."""
        n_f, m_f = self.grid
        r, s = np.meshgrid(np.arange(n_f), np.arange(m_f), indexing="ij")
        r = r.reshape(-1)
        s = s.reshape(-1)
        pos = np.asarray(positions).reshape(-1, 2)
        phase = np.outer(pos[:, 0], r) / n_f + np.outer(pos[:, 1], s) / m_f
        return np.exp(2j * np.pi * phase)

    def dense_adjoint(self) -> np.ndarray:
        """Dense ``A^H`` of shape ``(K * tail, K * B)``: ``I_K kron Z^H``."""
        z_adj = self.fourier_rows(self.tail_positions())
        return np.kron(np.eye(self.channels), z_adj)

    def apply_adjoint(self, h: np.ndarray) -> np.ndarray:
        """``A^H h`` evaluated with an inverse FFT; returns ``(K, tail)``."""
        n_bins = self.grid[0] * self.grid[1]
        spatial = np.fft.ifft2(h, axes=(1, 2)) * n_bins
        return spatial[:, self.mask]

    def project(self, h: np.ndarray) -> np.ndarray:
        """Orthogonal projection of a spectrum onto the constraint set (tail zeroing)."""
        spatial = np.fft.ifft2(h, axes=(1, 2))
        spatial[:, self.mask] = 0.0
        return np.fft.fft2(spatial, axes=(1, 2))

    def is_satisfied(self, h: np.ndarray, tol: float = 1e-10) -> bool:
        return constraint_residual(self, h) < tol


def build_za_system(fft_grid, support, channels: int) -> ZaConstraintSystem:
    if not isinstance(support, SupportRegion):
        support = SupportRegion(*support)
    grid = (int(fft_grid[0]), int(fft_grid[1]))
    if not support.fits(grid):
        raise SizeError(f"support {support.size} exceeds grid {grid}")
    return ZaConstraintSystem(grid=grid, support=support, channels=int(channels))


def constraint_residual(system: ZaConstraintSystem, h) -> float:
    """Largest absolute tail sample of the inverse DFT of ``h``."""
    data = h.data if isinstance(h, Spectrum) else np.asarray(h)
    if data.shape != (system.channels, *system.grid):
        raise ShapeMismatch(f"spectrum {data.shape} does not match system {(system.channels, *system.grid)}")
    if system.is_empty:
        return 0.0
    spatial = np.fft.ifft2(data, axes=(1, 2))
    return float(np.max(np.abs(spatial[:, system.mask])))
