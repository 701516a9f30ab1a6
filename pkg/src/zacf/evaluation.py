"""Applying templates to scenes and scoring the results.

Correlation planes are linear correlations of the (support-cropped) template
with the scene, so the lag of the peak is the displacement of the target's
top-left corner.  Scores are PCE by default, PSR on request.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .designs import DesignProblem, FilterTemplate, solve
from .errors import ChannelMismatch, DegenerateEyes, EmptyScores, ZeroPlane
from .spectral import CorrelationPlane, MultiChannelSignal, linear_correlate

__all__ = [
    "apply_filter",
    "pce",
    "psr",
    "SCORERS",
    "ScoreSet",
    "eer",
    "rank1",
    "localization_check",
    "normalized_eye_distance",
    "mine_and_retrain",
]

SIDELOBE_FLOOR = 1e-30
PCE_CAP = 1e30


def _values(plane):
    return plane.values if isinstance(plane, CorrelationPlane) else np.asarray(plane, dtype=float)


def _sidelobes(values, window):
    idx = np.unravel_index(int(np.argmax(values)), values.shape)
    mask = np.ones(values.shape, dtype=bool)
    r, c = idx
    mask[max(0, r - window) : r + window + 1, max(0, c - window) : c + window + 1] = False
    return values[idx], values[mask]


def pce(plane, window: int = 2) -> float:
    """Peak-to-correlation energy.

    ``peak^2 / mean(c^2)`` where the mean runs over the plane outside a
    ``(2w+1) x (2w+1)`` window centred on the first maximum in row-major
    order.  A vanishing sidelobe energy is floored at 1e-30 and the ratio is
    capped at 1e30.
    """
    values = _values(plane)
    if not np.any(values):
        raise ZeroPlane("correlation plane is identically zero")
    peak, side = _sidelobes(values, window)
    energy = float(np.mean(side**2)) if side.size else 0.0
    return float(min(peak**2 / max(energy, SIDELOBE_FLOOR), PCE_CAP))


def psr(plane, window: int = 2) -> float:
    """Peak-to-sidelobe ratio ``(peak - mean) / std`` over the same sidelobe region."""
    values = _values(plane)
    if not np.any(values):
        raise ZeroPlane("correlation plane is identically zero")
    peak, side = _sidelobes(values, window)
    if side.size == 0:
        return PCE_CAP
    sd = float(np.std(side))
    return float(min((peak - float(np.mean(side))) / max(sd, np.sqrt(SIDELOBE_FLOOR)), PCE_CAP))


SCORERS = {"pce": pce, "psr": psr}


def apply_filter(scene: MultiChannelSignal, template: FilterTemplate, scorer: str = "pce", window: int = 2) -> CorrelationPlane:
    """Linear correlation of ``scene`` with the template's support block.

    The template bias is added to every sample.  The returned plane carries
    the score; an all-zero plane scores 0.
    """
    if scene.channels != template.channels:
        raise ChannelMismatch(f"scene has {scene.channels} channels, template {template.channels}")
    plane = linear_correlate(template.cropped(), scene)
    values = plane.values + template.bias
    try:
        score = SCORERS[scorer](values, window)
    except ZeroPlane:
        score = 0.0
    return CorrelationPlane(values, positive_extent=plane.positive_extent, score=score, bias=template.bias)


@dataclass
class ScoreSet:
    """Genuine and impostor score populations with optional per-trial metadata."""

    genuine: list = field(default_factory=list)
    impostor: list = field(default_factory=list)
    metadata: list = field(default_factory=list)

    def add(self, score: float, genuine: bool, **meta):
        (self.genuine if genuine else self.impostor).append(float(score))
        self.metadata.append(dict(meta, genuine=bool(genuine), score=float(score)))

    def merge(self, other: ScoreSet) -> ScoreSet:
        return ScoreSet(self.genuine + other.genuine, self.impostor + other.impostor, self.metadata + other.metadata)


def eer(scores: ScoreSet) -> float:
    """Equal error rate.

    Thresholds sweep the pooled score values (then +inf).  At threshold ``t``
    ``FRR = #{genuine < t} / n_G`` and ``FAR = #{impostor >= t} / n_I``; the
    EER is read off where ``FAR - FRR`` changes sign, interpolating linearly
    between the two bracketing thresholds.
    """
    g = np.asarray(scores.genuine, dtype=float)
    i = np.asarray(scores.impostor, dtype=float)
    if g.size == 0 or i.size == 0:
        raise EmptyScores("need at least one genuine and one impostor score")
    thresholds = np.concatenate([np.unique(np.concatenate([g, i])), [np.inf]])
    gs = np.sort(g)
    is_ = np.sort(i)
    frr = np.searchsorted(gs, thresholds, side="left") / g.size
    far = 1.0 - np.searchsorted(is_, thresholds, side="left") / i.size
    diff = far - frr
    k = int(np.argmax(diff <= 0))  # diff[-1] == -1, so a crossing always exists
    if diff[k] == 0 or k == 0:
        return float(far[k])
    lam = diff[k - 1] / (diff[k - 1] - diff[k])
    return float(far[k - 1] + lam * (far[k] - far[k - 1]))


def rank1(score_matrix, true_labels) -> float:
    """Fraction of probes (rows) whose highest-scoring filter (column) is the true class."""
    s = np.asarray(score_matrix, dtype=float)
    y = np.asarray(true_labels, dtype=int)
    if s.size == 0:
        raise EmptyScores("empty score matrix")
    return float(np.mean(np.argmax(s, axis=1) == y))


def localization_check(predicted, truth, tolerance) -> bool:
    """True when both axis offsets are within the (inclusive) tolerance."""
    return all(abs(p - t) <= tol for p, t, tol in zip(predicted, truth, tolerance))


def normalized_eye_distance(estimate, truth, left_eye, right_eye) -> float:
    """``||P - P_hat|| / ||P_l - P_r||``."""
    left = np.asarray(left_eye, dtype=float)
    right = np.asarray(right_eye, dtype=float)
    span = float(np.linalg.norm(left - right))
    if span == 0.0:
        raise DegenerateEyes("left and right eye coincide")
    return float(np.linalg.norm(np.asarray(truth, float) - np.asarray(estimate, float)) / span)


def _in_zones(lag, zones):
    r, c = lag
    return any(r0 <= r < r1 and c0 <= c < c1 for r0, c0, r1, c1 in zones)


def mine_and_retrain(
    problem: DesignProblem,
    frames,
    threshold: float,
    template: FilterTemplate | None = None,
    kind: str = "MMCF",
    exclusions=None,
    max_per_frame: int = 5,
) -> DesignProblem:
    """Append false-positive windows from target-free frames as negatives.

    Peaks are picked greedily: the global maximum of the plane is taken if it
    exceeds ``threshold``, a template-sized neighbourhood around it is
    suppressed, and the search repeats up to ``max_per_frame`` times.
    ``exclusions`` optionally lists, per frame, ``(r0, c0, r1, c1)`` boxes of
    lags that must not be mined.  New samples get ``y = -1`` and ``u = 0``.
    The caller re-solves the returned problem.
    """
    if template is None:
        template = solve(problem, kind)
    n, m = problem.signal_size
    windows = []
    for f, frame in enumerate(frames):
        zones = exclusions[f] if exclusions is not None else ()
        plane = apply_filter(frame, template)
        values = plane.values.copy()
        for _ in range(max_per_frame):
            idx = np.unravel_index(int(np.argmax(values)), values.shape)
            if values[idx] <= threshold:
                break
            r0, c0 = idx
            values[max(0, r0 - n + 1) : r0 + n, max(0, c0 - m + 1) : c0 + m] = -np.inf
            lag = plane.signed_lag(idx)
            r = min(max(lag[0], 0), frame.height - n)
            c = min(max(lag[1], 0), frame.width - m)
            if r < 0 or c < 0 or _in_zones(lag, zones):
                continue
            windows.append(MultiChannelSignal(frame.data[:, r : r + n, c : c + m]))
    if not windows:
        return problem
    training = list(problem.training) + windows
    labels = np.concatenate([problem.labels, -np.ones(len(windows), dtype=int)])
    peaks = np.concatenate([problem.peaks, np.zeros(len(windows))])
    return problem.with_training(training, labels, peaks)
