"""Choosing the training length N: WPB-stage energy model and the N* trade-off."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .model import ChannelVector, SystemParams, derive_pair_params

N_MIN = 3


class PlannerError(ValueError):
    pass


@dataclass(frozen=True)
class WpbParams:
    omega1: float  # WPB-stage RSSI with error-free phases
    omega2: float  # estimation penalty: R_WPB = omega1 (1 - omega2 / N)
    epsilon: float = 0.0

    def __post_init__(self):
        if not self.omega1 > 0:
            raise ValueError(f"omega1 must be positive, got {self.omega1}")
        if not self.omega2 >= 0:
            raise ValueError(f"omega2 must be non-negative, got {self.omega2}")


@dataclass(frozen=True)
class TimingParams:
    T: float  # block length
    tau_kn: float = 1.0  # time per RSSI feedback
    E_f: float = 0.0  # energy per RSSI feedback
    K: int = 2

    def __post_init__(self):
        if not (self.T > 0 and self.tau_kn > 0):
            raise ValueError("block length and feedback time must be positive")
        if self.E_f < 0:
            raise ValueError(f"feedback energy must be non-negative, got {self.E_f}")
        if self.K < 2:
            raise ValueError(f"need K >= 2, got {self.K}")

    def max_feasible_n(self) -> int:
        """Largest N with N (K-1) tau < T."""
        return math.ceil(self.T / ((self.K - 1) * self.tau_kn)) - 1

    def upper_bound(self) -> float:
        """sqrt(3 T / ((K-1) tau)), the largest possible optimal N."""
        return math.sqrt(3.0 * self.T / ((self.K - 1) * self.tau_kn))


@dataclass(frozen=True)
class NStar:
    analytic: float  # unclamped stationary point of the continuous relaxation
    clamped: float  # analytic value clipped to [3, upper bound]
    integer: int


def omega_params(alpha1: float, betas: Sequence[float], beta_pairs: Sequence[float], epsilon: float) -> WpbParams:
    """omega1 = alpha1 + sum beta_i + sum beta_ij; omega2 = (sum beta_i) eps^2 / (2 omega1)."""
    if not alpha1 > 0:
        raise ValueError(f"alpha1 must be positive, got {alpha1}")
    b = np.asarray(betas, dtype=float)
    if np.any(b < 0):
        raise ValueError("betas must be non-negative")
    sum_b = float(b.sum())
    omega1 = alpha1 + sum_b + float(np.sum(beta_pairs))
    if not omega1 > 0:
        raise ValueError(f"omega1 must be positive, got {omega1}")
    return WpbParams(omega1=omega1, omega2=sum_b * epsilon**2 / (2.0 * omega1), epsilon=float(epsilon))


def wpb_coefficients(h: ChannelVector, sys: SystemParams) -> tuple[float, np.ndarray, np.ndarray]:
    """(alpha1, beta_i, beta_ij) of the WPB-stage RSSI under equal-gain beamforming.

    R = xi P/K |sum_k |h_k| e^{j err_k}|^2 expands into
    alpha1 = xi P/K sum |h_k|^2, beta_i = 2 xi P/K |h_1||h_i| and
    beta_ij = 2 xi P/K |h_i||h_j| for 2 <= i < j <= K.
    """
    m = h.magnitudes
    c = sys.xi * sys.power / h.K
    alpha1 = c * float(np.sum(m**2))
    betas = 2.0 * c * m[0] * m[1:]
    i, j = np.triu_indices(h.K - 1, k=1)
    beta_pairs = 2.0 * c * m[1:][i] * m[1:][j]
    return alpha1, betas, beta_pairs


def noise_epsilon(sigma2: float, training_betas: Sequence[float]) -> float:
    """Error scale eps with eps^2 / N = mean over pairs of 2 sigma^2 / (N beta_k^2)."""
    b = np.asarray(training_betas, dtype=float)
    if np.any(b <= 0):
        raise ValueError("training betas must be positive")
    return math.sqrt(2.0 * sigma2 * float(np.mean(1.0 / b**2)))


def wpb_params_for_channel(h: ChannelVector, sys: SystemParams, sigma2: float) -> WpbParams:
    """omega parameters of a channel, with eps calibrated to the training noise."""
    alpha1, betas, pairs = wpb_coefficients(h, sys)
    g = h.gains
    train_betas = [derive_pair_params(g[0], g[k], sys).beta for k in range(1, h.K)]
    return omega_params(alpha1, betas, pairs, noise_epsilon(sigma2, train_betas))


def rwpb_approx(w: WpbParams, N) -> float:
    """omega1 (1 - omega2 / N)."""
    if np.any(np.asarray(N) < 1):
        raise ValueError(f"N must be >= 1, got {N}")
    return w.omega1 * (1.0 - w.omega2 / np.asarray(N, dtype=float))


def e_total(w: WpbParams, t: TimingParams, N):
    """Energy harvested over one block after N (K-1) feedback transmissions."""
    Nf = np.asarray(N, dtype=float)
    train = Nf * (t.K - 1)
    if np.any(train * t.tau_kn >= t.T):
        raise PlannerError(f"infeasible N={N}: training does not fit in the block (T={t.T})")
    if np.any(Nf < 1):
        raise ValueError(f"N must be >= 1, got {N}")
    out = (t.T - train * t.tau_kn) * w.omega1 * (1.0 - w.omega2 / Nf) - train * t.E_f
    return float(out) if out.ndim == 0 else out


def _check_harvest(w: WpbParams, t: TimingParams) -> None:
    if t.max_feasible_n() < N_MIN:
        raise PlannerError(f"block too short: {N_MIN} training rounds do not fit in T={t.T}")
    if e_total(w, t, N_MIN) <= 0:
        raise PlannerError("block too short to harvest: E_total(N=3) <= 0")


def n_star(w: WpbParams, t: TimingParams) -> NStar:
    """Stationary point of E_total in N, clamped to [3, sqrt(3T/((K-1)tau))].

    The integer choice compares E_total at the floor and ceiling of the
    clamped value (and at the clamp bounds) and keeps the best feasible one.
    """
    _check_harvest(w, t)
    psi = w.omega1 * w.omega2 * t.tau_kn / (w.omega1 * t.tau_kn + t.E_f)
    analytic = math.sqrt(psi * t.T / ((t.K - 1) * t.tau_kn))
    hi = t.upper_bound()
    clamped = min(max(analytic, float(N_MIN)), hi)
    n_max = t.max_feasible_n()
    cands = {math.floor(clamped), math.ceil(clamped), N_MIN, math.floor(hi)}
    cands = sorted(n for n in cands if N_MIN <= n <= n_max)
    vals = [e_total(w, t, n) for n in cands]
    return NStar(analytic=analytic, clamped=clamped, integer=cands[int(np.argmax(vals))])


def n_star_brute(w: WpbParams, t: TimingParams) -> int:
    """Exact integer argmax of E_total over every feasible N >= 3."""
    n_max = t.max_feasible_n()
    if n_max < N_MIN:
        raise PlannerError(f"no feasible N: {N_MIN} training rounds do not fit in T={t.T}")
    Ns = np.arange(N_MIN, n_max + 1)
    return int(Ns[int(np.argmax(e_total(w, t, Ns)))])
