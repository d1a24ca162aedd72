"""Phase-difference estimation from RSSI feedback.

With equally spaced training phases the least-squares fit of
``alpha + beta cos(theta_n + phi)`` decouples from ``alpha`` and ``beta``:
the stationary points of the objective are the two arctangent solutions of
``sum R_n sin(theta_n + phi) = 0``, and the minimum is the one with
``sum R_n cos(theta_n + phi) > 0``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .codebook import PhaseSet, is_equally_spaced, make_theta
from .feedback import TrainingTable
from .model import ChannelVector, SystemParams, wrap_angle

DEGENERATE_TOL = 1e-12
_THETA3 = make_theta(3).thetas


class DegenerateFeedbackError(ValueError):
    """Feedback carries no phase information (the RSSI curve is flat)."""

    def __init__(self, msg: str, slot: int | None = None):
        super().__init__(msg if slot is None else f"slot {slot}: {msg}")
        self.slot = slot


@dataclass(frozen=True)
class PhaseEstimate:
    candidate_a: float  # principal arctangent value, in (-pi/2, pi/2]
    candidate_b: float  # candidate_a - pi, wrapped
    resolved: float
    discriminant: float  # sum R_n cos(theta_n + candidate_a)
    tie: bool = False

    @property
    def candidates(self) -> tuple[float, float]:
        return self.candidate_a, self.candidate_b


@dataclass(frozen=True, eq=False)
class EstimateSet:
    phases: np.ndarray  # phi_hat_k for k = 2..K
    details: tuple = field(default=())

    def __post_init__(self):
        p = np.atleast_1d(np.asarray(self.phases, dtype=float)).copy()
        p.setflags(write=False)
        object.__setattr__(self, "phases", p)

    @property
    def K(self) -> int:
        return self.phases.size + 1

    def __len__(self) -> int:
        return self.phases.size


def _fold(t):
    """Shift a full-circle angle onto the principal arctangent range (-pi/2, pi/2]."""
    return np.where(t > np.pi / 2, t - np.pi, np.where(t <= -np.pi / 2, t + np.pi, t))


def _candidates_from(num, den):
    # candidate_b is taken from atan2 directly whenever possible so the
    # resolved value is bit-identical to the two-argument arctangent
    t = np.arctan2(num, den)
    a = _fold(t)
    b = np.where(a == t, wrap_angle(t - np.pi), t)
    return a, b


def _theta_for(R: np.ndarray, theta) -> np.ndarray:
    if theta is None:
        return make_theta(R.shape[-1]).thetas
    t = theta.thetas if isinstance(theta, PhaseSet) else np.atleast_1d(np.asarray(theta, dtype=float))
    if t.size != R.shape[-1]:
        raise ValueError(f"length mismatch: {R.shape[-1]} RSSI values, {t.size} training phases")
    return t


def _require_equally_spaced(t: np.ndarray) -> None:
    if t.size < 3:
        raise ValueError(f"need N >= 3 feedback values, got {t.size}")
    if not is_equally_spaced(t):
        raise ValueError("training phases must be the equally spaced set 2(n-1)pi/N")


def _sums(R: np.ndarray, t: np.ndarray):
    """(-sum R sin theta, sum R cos theta) along the last axis.

    np.sum rather than a matrix product so a single row and the same row
    inside a batch round identically.
    """
    return -np.sum(R * np.sin(t), axis=-1), np.sum(R * np.cos(t), axis=-1)


def _degenerate(num, den, R):
    scale = np.maximum(1.0, np.sum(np.abs(R), axis=-1))
    return (np.abs(num) < DEGENERATE_TOL * scale) & (np.abs(den) < DEGENERATE_TOL * scale)


def estimate_ml(R: Sequence[float], theta=None) -> tuple[float, float]:
    """The two stationary points of the least-squares objective, pi apart."""
    R = np.asarray(R, dtype=float)
    t = _theta_for(R, theta)
    _require_equally_spaced(t)
    num, den = _sums(R, t)
    if _degenerate(num, den, R):
        raise DegenerateFeedbackError("degenerate feedback: both weighted sums vanish")
    a, b = _candidates_from(num, den)
    return float(a), float(b)


def resolve_ambiguity(R: Sequence[float], theta, candidates: tuple[float, float]) -> PhaseEstimate:
    """Pick the candidate at which the objective has positive curvature.

    A zero discriminant returns ``candidate_a`` with ``tie=True``.
    """
    R = np.asarray(R, dtype=float)
    t = _theta_for(R, theta)
    a, b = (float(c) for c in candidates)
    disc = float(R @ np.cos(t + a))
    if disc > 0:
        return PhaseEstimate(a, b, a, disc)
    if disc < 0:
        return PhaseEstimate(a, b, b, disc)
    return PhaseEstimate(a, b, a, disc, tie=True)


def estimate_phase(R: Sequence[float], theta=None) -> PhaseEstimate:
    """estimate_ml followed by resolve_ambiguity."""
    R = np.asarray(R, dtype=float)
    t = _theta_for(R, theta)
    return resolve_ambiguity(R, t, estimate_ml(R, t))


def estimate_noiseless_n3(R1: float, R2: float, R3: float) -> PhaseEstimate:
    """Closed-form inversion of three noiseless readings at phases 0, 2pi/3, 4pi/3."""
    num = math.sqrt(3.0) * (R2 - R3)
    den = (R2 - R1) + (R3 - R1)
    R = np.array([R1, R2, R3], dtype=float)
    if _degenerate(num, den, R):
        raise DegenerateFeedbackError("degenerate feedback: both weighted sums vanish")
    a, b = _candidates_from(num, den)
    return resolve_ambiguity(R, _THETA3, (float(a), float(b)))


def ls_objective(R: Sequence[float], theta, alpha: float, beta: float, phi: float) -> float:
    """sum_n [R_n - (alpha + beta cos(theta_n + phi))]^2."""
    R = np.asarray(R, dtype=float)
    t = _theta_for(R, theta)
    r = R - (alpha + beta * np.cos(t + phi))
    return float(r @ r)


def estimate_phases_batch(R: np.ndarray, theta=None) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized estimate_phase over leading axes.

    Returns (resolved, degenerate_mask); degenerate rows resolve to their
    first candidate instead of raising.
    """
    R = np.asarray(R, dtype=float)
    t = _theta_for(R, theta)
    _require_equally_spaced(t)
    num, den = _sums(R, t)
    a, b = _candidates_from(num, den)
    disc = np.sum(R * np.cos(t + a[..., None]), axis=-1)
    resolved = np.where(disc < 0, b, a)
    return resolved, _degenerate(num, den, R)


def estimate_noiseless_n3_batch(R: np.ndarray) -> np.ndarray:
    """Vectorized estimate_noiseless_n3 over rows of an (..., 3) array."""
    R = np.asarray(R, dtype=float)
    num = math.sqrt(3.0) * (R[..., 1] - R[..., 2])
    den = (R[..., 1] - R[..., 0]) + (R[..., 2] - R[..., 0])
    a, b = _candidates_from(num, den)
    disc = np.sum(R * np.cos(_THETA3 + a[..., None]), axis=-1)
    return np.where(disc < 0, b, a)


def estimate_all_phases(table: TrainingTable, theta=None) -> EstimateSet:
    """Resolve one phase per antenna pair (1, k), k = 2..K."""
    t = _theta_for(table.rssi, table.theta if theta is None else theta)
    details = []
    for row, k in zip(table.rssi, range(2, table.K + 1)):
        try:
            details.append(estimate_phase(row, t))
        except DegenerateFeedbackError as exc:
            raise DegenerateFeedbackError(str(exc), slot=k) from None
    return EstimateSet(phases=[d.resolved for d in details], details=tuple(details))


def exhaustive_baseline(
    h: ChannelVector,
    sys: SystemParams,
    grid_step: float = 2.0 * np.pi / 360,
) -> EstimateSet:
    """Full-CSI grid search for the equal-gain phases maximizing received energy.

    Exact over the grid {0, step, 2 step, ...} in every coordinate. For a fixed
    angle c of the summed signal each coordinate is optimized separately by
    the grid point nearest to ``arg h_k - c``; that assignment only changes at
    finitely many breakpoints in c, and the global grid optimum is the best
    assignment over all breakpoint intervals. Antennas with zero gain keep the
    grid origin.
    """
    if not (grid_step > 0 and math.isfinite(grid_step)):
        raise ValueError(f"grid step must be positive, got {grid_step}")
    if grid_step > np.pi / 2:
        raise ValueError(f"grid step {grid_step} is coarser than pi/2")
    two_pi = 2.0 * np.pi
    grid = np.arange(0.0, two_pi - 1e-12, grid_step)
    n = grid.size
    upper = np.append(grid[1:], two_pi)
    mids = (grid + upper) / 2.0

    g = h.gains
    mag, ang = np.abs(g[1:]), np.angle(g[1:])
    active = mag > 0
    psi = np.zeros(h.K - 1)
    if not np.any(active):
        return EstimateSet(phases=psi)

    bps = np.unique(np.mod(ang[active, None] - mids[None, :], two_pi))
    nxt = np.append(bps[1:], bps[0] + two_pi)
    c = np.mod((bps + nxt) / 2.0, two_pi)

    x = np.mod(ang[active][None, :] - c[:, None], two_pi)
    hi = np.searchsorted(grid, x, side="right")
    lo = hi - 1
    d_lo = x - grid[lo]
    d_hi = np.where(hi < n, grid[np.minimum(hi, n - 1)], two_pi) - x
    pick = np.where(d_hi < d_lo, hi % n, lo)

    choice = grid[pick]
    total = g[0] + np.sum(g[1:][active] * np.exp(-1j * choice), axis=1)
    best = int(np.argmax(np.abs(total) ** 2))
    psi[active] = choice[best]
    return EstimateSet(phases=wrap_angle(psi))
