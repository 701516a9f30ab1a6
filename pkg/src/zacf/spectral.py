"""Multi-channel DFTs, support-region operators and FFT correlation.

Arrays are stored channel-major as ``(K, N, M)``; one-dimensional signals use
``M == 1``. The forward transform is unnormalized and the inverse carries the
``1 / (N_F * M_F)`` factor, so ``inverse_dft(forward_dft(x, s))`` is ``x``
zero-padded to ``s``.

Templates and their support regions are anchored at index ``(0, 0)``; an
aligned target therefore produces its correlation peak at lag ``(0, 0)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ChannelMismatch, ShapeMismatch, SizeError

__all__ = [
    "MultiChannelSignal",
    "Spectrum",
    "SupportRegion",
    "CorrelationPlane",
    "as_signal",
    "from_1d",
    "forward_dft",
    "inverse_dft",
    "circular_correlate",
    "linear_correlate",
    "project_support",
    "crop",
    "zero_pad",
    "linear_size",
]


def _frozen(arr):
    arr = np.array(arr, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class MultiChannelSignal:
    """K real channels on an N x M grid."""

    data: np.ndarray

    def __post_init__(self):
        data = np.asarray(self.data, dtype=np.float64)
        if data.ndim != 3 or min(data.shape) < 1:
            raise ShapeMismatch(f"signal data must be (K, N, M) with K, N, M >= 1, got {data.shape}")
        if not np.all(np.isfinite(data)):
            raise ValueError("signal samples must be finite")
        object.__setattr__(self, "data", _frozen(data))

    @property
    def channels(self) -> int:
        return self.data.shape[0]

    @property
    def height(self) -> int:
        return self.data.shape[1]

    @property
    def width(self) -> int:
        return self.data.shape[2]

    @property
    def size(self) -> tuple[int, int]:
        return self.data.shape[1], self.data.shape[2]

    def energy(self) -> float:
        return float(np.sum(self.data**2))


@dataclass(frozen=True)
class Spectrum:
    """K complex channels on an N_F x M_F frequency grid.

    ``source_size`` records the spatial size of the signal the spectrum was
    computed from, when known.
    """

    data: np.ndarray
    source_size: tuple[int, int] | None = None

    def __post_init__(self):
        data = np.asarray(self.data, dtype=np.complex128)
        if data.ndim != 3 or min(data.shape) < 1:
            raise ShapeMismatch(f"spectrum data must be (K, N_F, M_F), got {data.shape}")
        if self.source_size is not None:
            n, m = self.source_size
            if n > data.shape[1] or m > data.shape[2]:
                raise SizeError("spectrum grid is smaller than its source signal")
        object.__setattr__(self, "data", _frozen(data))

    @property
    def channels(self) -> int:
        return self.data.shape[0]

    @property
    def grid(self) -> tuple[int, int]:
        return self.data.shape[1], self.data.shape[2]


@dataclass(frozen=True)
class SupportRegion:
    """An N x M block anchored at the origin of a larger grid."""

    height: int
    width: int = 1

    def __post_init__(self):
        if self.height < 1 or self.width < 1:
            raise SizeError("support region must be at least 1 x 1")

    @property
    def size(self) -> tuple[int, int]:
        return self.height, self.width

    def fits(self, grid) -> bool:
        return self.height <= grid[0] and self.width <= grid[1]

    def tail_count(self, grid) -> int:
        return grid[0] * grid[1] - self.height * self.width


@dataclass(frozen=True)
class CorrelationPlane:
    """Real correlation output stored on the circular (padded) lag grid.

    Lag ``tau`` lives at index ``tau mod P`` per axis. ``positive_extent`` is
    the number of non-negative lags along each axis that carry linear
    correlation values; indices at or past it hold negative (wrapped) lags.
    ``score`` is filled in by the evaluation harness.
    """

    values: np.ndarray
    positive_extent: tuple[int, int] | None = None
    score: float | None = None
    bias: float = 0.0

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 2:
            raise ShapeMismatch("correlation plane must be 2-D")
        object.__setattr__(self, "values", _frozen(values))

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    @property
    def peak_index(self) -> tuple[int, int]:
        # np.argmax returns the first maximum in row-major order
        flat = int(np.argmax(self.values))
        return tuple(int(i) for i in np.unravel_index(flat, self.values.shape))

    @property
    def peak_value(self) -> float:
        return float(self.values.flat[np.argmax(self.values)])

    def signed_lag(self, index) -> tuple[int, int]:
        """Map a plane index to a signed lag."""
        extent = self.positive_extent or (
            (self.shape[0] + 1) // 2,
            (self.shape[1] + 1) // 2,
        )
        out = []
        for i, e, p in zip(index, extent, self.shape):
            out.append(int(i) if i < e else int(i) - p)
        return tuple(out)

    @property
    def peak_lag(self) -> tuple[int, int]:
        return self.signed_lag(self.peak_index)


def as_signal(arr) -> MultiChannelSignal:
    """Wrap an array: ``(N,)`` and ``(N, M)`` become single-channel signals."""
    if isinstance(arr, MultiChannelSignal):
        return arr
    a = np.asarray(arr, dtype=np.float64)
    if a.ndim == 1:
        a = a[None, :, None]
    elif a.ndim == 2:
        a = a[None]
    return MultiChannelSignal(a)


def from_1d(arr) -> MultiChannelSignal:
    """Wrap a 1-D signal given as ``(N,)`` or ``(K, N)``."""
    a = np.asarray(arr, dtype=np.float64)
    if a.ndim == 1:
        a = a[None]
    return MultiChannelSignal(a[:, :, None])


def _normalize_size(size) -> tuple[int, int]:
    if np.isscalar(size):
        return int(size), 1
    size = tuple(int(s) for s in size)
    if len(size) == 1:
        return size[0], 1
    return size[0], size[1]


def _pad_array(data, size):
    n_f, m_f = size
    k, n, m = data.shape
    if n > n_f or m > m_f:
        raise SizeError(f"cannot fit a {n}x{m} signal into a {n_f}x{m_f} grid")
    out = np.zeros((k, n_f, m_f), dtype=data.dtype)
    out[:, :n, :m] = data
    return out


def forward_dft(signal: MultiChannelSignal, fft_size) -> Spectrum:
    """Per-channel unnormalized 2-D DFT of ``signal`` zero-padded to ``fft_size``."""
    size = _normalize_size(fft_size)
    padded = _pad_array(signal.data, size)
    return Spectrum(np.fft.fft2(padded, axes=(1, 2)), source_size=signal.size)


def inverse_dft(spectrum: Spectrum) -> MultiChannelSignal:
    """Inverse DFT with the ``1 / (N_F M_F)`` factor; the real part is returned."""
    return MultiChannelSignal(np.fft.ifft2(spectrum.data, axes=(1, 2)).real)


def linear_size(a_size, b_size) -> tuple[int, int]:
    """Smallest grid on which circular correlation of the two sizes is linear."""
    return a_size[0] + b_size[0] - 1, a_size[1] + b_size[1] - 1


def circular_correlate(a: MultiChannelSignal, b: MultiChannelSignal, fft_size) -> CorrelationPlane:
    """Channel-summed circular cross-correlation ``c(t) = sum_n a(n) b(n + t)``."""
    if a.channels != b.channels:
        raise ChannelMismatch(f"{a.channels} vs {b.channels} channels")
    size = _normalize_size(fft_size)
    fa = forward_dft(a, size).data
    fb = forward_dft(b, size).data
    plane = np.fft.ifft2(np.sum(np.conj(fa) * fb, axis=0)).real
    extent = (min(b.height, size[0]), min(b.width, size[1]))
    return CorrelationPlane(plane, positive_extent=extent)


def linear_correlate(a: MultiChannelSignal, b: MultiChannelSignal) -> CorrelationPlane:
    """True linear cross-correlation through a sufficiently padded FFT.

    The output grid is ``(N_a + N_b - 1) x (M_a + M_b - 1)``; non-negative lags
    occupy the first ``N_b x M_b`` indices.
    """
    if a.channels != b.channels:
        raise ChannelMismatch(f"{a.channels} vs {b.channels} channels")
    return circular_correlate(a, b, linear_size(a.size, b.size))


def _check_region(signal, region):
    if not region.fits(signal.size):
        raise SizeError(f"region {region.size} does not fit signal {signal.size}")


def project_support(signal: MultiChannelSignal, region: SupportRegion) -> MultiChannelSignal:
    """Zero every sample outside the support region (all channels)."""
    _check_region(signal, region)
    out = np.zeros_like(signal.data)
    out[:, : region.height, : region.width] = signal.data[:, : region.height, : region.width]
    return MultiChannelSignal(out)


def crop(signal: MultiChannelSignal, region: SupportRegion) -> MultiChannelSignal:
    """Extract the support block."""
    _check_region(signal, region)
    return MultiChannelSignal(signal.data[:, : region.height, : region.width])


def zero_pad(signal: MultiChannelSignal, fft_size) -> MultiChannelSignal:
    """Embed ``signal`` at the origin of a larger zero grid."""
    return MultiChannelSignal(_pad_array(signal.data, _normalize_size(fft_size)))
