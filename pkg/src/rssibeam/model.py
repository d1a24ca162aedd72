"""MISO channel, equal-gain beam vectors and the two-antenna RSSI parameterization.

Signal convention: the ER observes ``h^T w`` (no conjugation on the channel),
so a training beam ``sqrt(P/2) [1, e^{j theta}]`` produces an RSSI that
oscillates as ``cos(theta + phi)`` and the compensating beam carries
``e^{-j phi_k}``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

CHANNEL_MODELS = ("rayleigh", "unit", "fixed")


def wrap_angle(x):
    """Map angles onto (-pi, pi]. Works on scalars and arrays."""
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise ValueError("wrap_angle: non-finite input")
    out = np.pi - np.mod(np.pi - arr, 2.0 * np.pi)
    # np.mod can round up to 2*pi for tiny negative arguments
    out = np.where(out <= -np.pi, out + 2.0 * np.pi, out)
    if np.ndim(out) == 0:
        return float(out)
    return out


@dataclass(frozen=True)
class SystemParams:
    xi: float = 1.0
    power: float = 2.0

    def __post_init__(self):
        if not (0.0 < self.xi <= 1.0):
            raise ValueError(f"conversion efficiency must be in (0, 1], got {self.xi}")
        if not self.power > 0.0:
            raise ValueError(f"transmit power must be positive, got {self.power}")


@dataclass(frozen=True, eq=False)
class ChannelVector:
    """K complex gains ``|h_k| e^{j delta_k}``."""

    gains: np.ndarray

    def __post_init__(self):
        g = np.asarray(self.gains, dtype=complex).reshape(-1)
        if g.size < 2:
            raise ValueError(f"need at least 2 antennas, got K={g.size}")
        if not np.all(np.isfinite(g)):
            raise ValueError("channel gains must be finite")
        g = g.copy()
        g.setflags(write=False)
        object.__setattr__(self, "gains", g)

    @classmethod
    def from_polar(cls, magnitudes: Sequence[float], phases: Sequence[float]) -> "ChannelVector":
        mag = np.asarray(magnitudes, dtype=float)
        if np.any(mag < 0):
            raise ValueError("magnitudes must be non-negative")
        return cls(mag * np.exp(1j * np.asarray(phases, dtype=float)))

    @property
    def K(self) -> int:
        return int(self.gains.size)

    @property
    def magnitudes(self) -> np.ndarray:
        return np.abs(self.gains)

    @property
    def phases(self) -> np.ndarray:
        """delta_k wrapped to (-pi, pi]."""
        return wrap_angle(np.angle(self.gains))

    def phase_differences(self) -> np.ndarray:
        """phi_k = delta_k - delta_1 for k = 2..K, wrapped."""
        d = np.angle(self.gains)
        return np.atleast_1d(wrap_angle(d[1:] - d[0]))

    def __len__(self) -> int:
        return self.K


@dataclass(frozen=True)
class PairParams:
    """RSSI curve ``alpha + beta cos(theta + phi)`` of one activated antenna pair."""

    alpha: float
    beta: float
    phi: float

    def rssi(self, theta):
        return self.alpha + self.beta * np.cos(np.asarray(theta, dtype=float) + self.phi)


@dataclass(frozen=True, eq=False)
class BeamVector:
    weights: np.ndarray
    power_budget: float

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=complex).reshape(-1)
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @property
    def K(self) -> int:
        return int(self.weights.size)


def derive_pair_params(h_i: complex, h_j: complex, sys: SystemParams) -> PairParams:
    """Coefficients of the RSSI seen when antennas i and j transmit together.

    alpha = xi P/4 (|h_i|^2 + |h_j|^2), beta = xi P/2 |h_i||h_j|, phi = delta_j - delta_i.
    A zero gain gives beta = 0 and phi = 0 by convention.
    """
    a_i, a_j = abs(complex(h_i)), abs(complex(h_j))
    scale = sys.xi * sys.power
    beta = scale / 2.0 * a_i * a_j
    # written as beta + (.)^2 so that alpha >= beta survives rounding
    alpha = beta + scale / 4.0 * (a_i - a_j) ** 2
    if a_i == 0.0 or a_j == 0.0:
        phi = 0.0
    else:
        phi = wrap_angle(np.angle(complex(h_j)) - np.angle(complex(h_i)))
    return PairParams(alpha=alpha, beta=beta, phi=phi)


def _gains(h) -> np.ndarray:
    if isinstance(h, ChannelVector):
        return h.gains
    return np.asarray(h, dtype=complex).reshape(-1)


def _weights(w) -> np.ndarray:
    if isinstance(w, BeamVector):
        return w.weights
    return np.asarray(w, dtype=complex).reshape(-1)


def received_energy(h, w, xi: float = 1.0) -> float:
    """xi |h^T w|^2 for a rank-one transmit covariance."""
    g, v = _gains(h), _weights(w)
    if g.shape != v.shape:
        raise ValueError(f"dimension mismatch: channel K={g.size}, beam K={v.size}")
    return float(xi * abs(np.dot(g, v)) ** 2)


def egt_beam_vector(phase_estimates: Sequence[float], sys: SystemParams) -> BeamVector:
    """sqrt(P/K) [1, e^{-j phi_2}, ..., e^{-j phi_K}]."""
    phases = np.atleast_1d(np.asarray(phase_estimates, dtype=float))
    if phases.size == 0:
        raise ValueError("need at least one phase estimate")
    if not np.all(np.isfinite(phases)):
        raise ValueError("phase estimates must be finite")
    K = phases.size + 1
    weights = np.sqrt(sys.power / K) * np.concatenate(([1.0 + 0j], np.exp(-1j * phases)))
    return BeamVector(weights=weights, power_budget=sys.power)


def sample_channel(
    model: str,
    K: int,
    rng: np.random.Generator | None = None,
    *,
    scale: float = 1.0,
    gains: Sequence[complex] | None = None,
) -> ChannelVector:
    """Draw a channel.

    ``rayleigh``: i.i.d. CN(0, scale). ``unit``: unit magnitude, phases uniform
    on (-pi, pi]. ``fixed``: returns ``gains`` unchanged.
    """
    if K < 2:
        raise ValueError(f"need at least 2 antennas, got K={K}")
    if model == "fixed":
        if gains is None:
            raise ValueError("fixed channel model needs gains")
        ch = ChannelVector(gains)
        if ch.K != K:
            raise ValueError(f"fixed gains have K={ch.K}, expected {K}")
        return ch
    if model not in CHANNEL_MODELS:
        raise ValueError(f"unknown channel model {model!r}; expected one of {CHANNEL_MODELS}")
    if rng is None:
        raise ValueError(f"channel model {model!r} needs an rng stream")
    if model == "unit":
        return ChannelVector(np.exp(1j * uniform_phase(rng, K)))
    re_im = rng.standard_normal((2, K))
    return ChannelVector(np.sqrt(scale / 2.0) * (re_im[0] + 1j * re_im[1]))


def uniform_phase(rng: np.random.Generator, size) -> np.ndarray:
    """Phases uniform on (-pi, pi]."""
    return np.pi - rng.uniform(0.0, 2.0 * np.pi, size)
