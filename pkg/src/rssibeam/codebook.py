"""Training phase sets, codebooks, and Fisher-information bounds on the pair phase."""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np

from .model import PairParams, wrap_angle

# two phases closer than this (after wrapping) count as repeated
PHASE_TOL = 1e-12


class CrlbUnboundedError(ValueError):
    """The Fisher information is singular, so no finite bound exists."""


@dataclass(frozen=True, eq=False)
class PhaseSet:
    thetas: np.ndarray

    def __post_init__(self):
        t = np.atleast_1d(np.asarray(self.thetas, dtype=float)).copy()
        if t.ndim != 1 or t.size < 1:
            raise ValueError("phase set needs at least one phase")
        if not np.all(np.isfinite(t)):
            raise ValueError("phases must be finite")
        t.setflags(write=False)
        object.__setattr__(self, "thetas", t)

    @property
    def N(self) -> int:
        return int(self.thetas.size)

    def __len__(self) -> int:
        return self.N

    def __iter__(self):
        return iter(self.thetas.tolist())

    def is_distinct(self, tol: float = PHASE_TOL) -> bool:
        t = self.thetas
        i, j = np.triu_indices(t.size, k=1)
        if i.size == 0:
            return True
        return bool(np.all(np.abs(wrap_angle(t[i] - t[j])) >= tol))


@dataclass(frozen=True, eq=False)
class Codebook:
    vectors: np.ndarray  # (N, 2) complex
    source: PhaseSet
    power: float

    @property
    def N(self) -> int:
        return self.source.N


@dataclass(frozen=True, eq=False)
class FimMatrix:
    """Fisher information of (alpha, beta, phi), in that order."""

    matrix: np.ndarray
    noise_var: float

    @property
    def det(self) -> float:
        return float(np.linalg.det(self.matrix))


def make_theta(N: int) -> PhaseSet:
    """Equally spaced training phases theta_n = 2 (n-1) pi / N."""
    if int(N) != N or N < 1:
        raise ValueError(f"N must be a positive integer, got {N}")
    N = int(N)
    return PhaseSet(2.0 * np.arange(N) * np.pi / N)


def is_equally_spaced(thetas, tol: float = 1e-9) -> bool:
    """True if ``thetas`` is the equally spaced set for its length, up to ``tol``."""
    t = np.atleast_1d(np.asarray(thetas, dtype=float))
    ref = make_theta(t.size).thetas
    return bool(np.all(np.abs(wrap_angle(t - ref)) <= tol))


def make_codebook(theta: PhaseSet | Sequence[float], power: float) -> Codebook:
    """Beams b_n = sqrt(P/2) [1, e^{j theta_n}]."""
    if not power > 0:
        raise ValueError(f"power must be positive, got {power}")
    ps = theta if isinstance(theta, PhaseSet) else PhaseSet(theta)
    t = ps.thetas
    vec = np.sqrt(power / 2.0) * np.stack([np.ones_like(t, dtype=complex), np.exp(1j * t)], axis=1)
    return Codebook(vectors=vec, source=ps, power=power)


def delta_ijk(theta_i, theta_j, theta_k):
    """[4 sin((ti-tj)/2) sin((tj-tk)/2) sin((tk-ti)/2)]^2, broadcasting."""
    ti, tj, tk = (np.asarray(x, dtype=float) for x in (theta_i, theta_j, theta_k))
    prod = 4.0 * np.sin((ti - tj) / 2.0) * np.sin((tj - tk) / 2.0) * np.sin((tk - ti) / 2.0)
    out = prod * prod
    return float(out) if out.ndim == 0 else out


@lru_cache(maxsize=64)
def _triples(N: int):
    pairs = np.triu_indices(N, k=1)
    i, j, k = np.indices((N, N, N)).reshape(3, -1)
    keep = (i < j) & (j < k)
    return pairs, (i[keep], j[keep], k[keep])


def _thetas(theta) -> np.ndarray:
    return theta.thetas if isinstance(theta, PhaseSet) else np.atleast_1d(np.asarray(theta, dtype=float))


def delta_sum(theta) -> float:
    """Sum of delta_ijk over all i < j < k."""
    t = _thetas(theta)
    if t.size < 3:
        return 0.0
    _, (i, j, k) = _triples(t.size)
    return float(np.sum(delta_ijk(t[i], t[j], t[k])))


def fim(params: PairParams, theta, sigma2: float) -> FimMatrix:
    """Fisher information for R_n = alpha + beta cos(theta_n + phi) + N(0, sigma2)."""
    if not sigma2 > 0:
        raise ValueError(f"noise variance must be positive, got {sigma2}")
    J = jacobian(params, theta)
    return FimMatrix(matrix=J.T @ J / sigma2, noise_var=float(sigma2))


def jacobian(params: PairParams, theta) -> np.ndarray:
    """d x_n / d(alpha, beta, phi): rows [1, A_n, D_n]."""
    t = _thetas(theta)
    A = np.cos(t + params.phi)
    D = -params.beta * np.sin(t + params.phi)
    return np.stack([np.ones_like(t), A, D], axis=1)


def _check_bounded(t: np.ndarray, beta: float) -> None:
    if t.size < 3:
        raise CrlbUnboundedError(f"CRLB unbounded: need N >= 3 training phases, got {t.size}")
    if not PhaseSet(t).is_distinct():
        raise CrlbUnboundedError("CRLB unbounded: repeated training phases")
    if not beta > 0:
        raise CrlbUnboundedError("CRLB unbounded: beta = 0 (one channel absent)")


def crlb_phi(params: PairParams, theta, sigma2: float) -> float:
    """Closed-form CRLB of the pair phase for the given training phases."""
    t = _thetas(theta)
    _check_bounded(t, params.beta)
    if not sigma2 > 0:
        raise ValueError(f"noise variance must be positive, got {sigma2}")
    (ip, jp), _ = _triples(t.size)
    c = np.cos(t + params.phi)
    num = sigma2 * np.sum((c[ip] - c[jp]) ** 2)
    return float(num / (params.beta**2 * delta_sum(t)))


def mcrlb(theta, beta: float, sigma2: float) -> float:
    """CRLB averaged over a uniformly distributed pair phase."""
    t = _thetas(theta)
    _check_bounded(t, beta)
    if not sigma2 > 0:
        raise ValueError(f"noise variance must be positive, got {sigma2}")
    (ip, jp), _ = _triples(t.size)
    num = sigma2 * np.sum(1.0 - np.cos(t[ip] - t[jp]))
    return float(num / (beta**2 * delta_sum(t)))


def mcrlb_equally_spaced(N: int, beta: float, sigma2: float) -> float:
    """2 sigma^2 / (N beta^2), the value attained by the equally spaced set."""
    return 2.0 * sigma2 / (N * beta**2)


def _batch_terms(thetas: np.ndarray, chunk: int = 1 << 22):
    """Yield (rows, pair index arrays, delta sums) over row blocks of ``thetas``."""
    M, N = thetas.shape
    (ip, jp), (i, j, k) = _triples(N)
    step = max(1, chunk // max(1, i.size))
    for s in range(0, M, step):
        t = thetas[s : s + step]
        dsum = np.sum(delta_ijk(t[:, i], t[:, j], t[:, k]), axis=1)
        # match the scalar contract: any repeated phase counts as unbounded
        repeated = np.any(np.abs(wrap_angle(t[:, ip] - t[:, jp])) < PHASE_TOL, axis=1)
        yield slice(s, s + step), t, (ip, jp), np.where(repeated, 0.0, dsum)


def _check_batch(thetas: np.ndarray, beta: float) -> None:
    if thetas.ndim != 2:
        raise ValueError("expected a 2-D array of phase sets")
    if thetas.shape[1] < 3:
        raise CrlbUnboundedError(f"CRLB unbounded: need N >= 3 training phases, got {thetas.shape[1]}")
    if not beta > 0:
        raise CrlbUnboundedError("CRLB unbounded: beta = 0 (one channel absent)")


def mcrlb_batch(thetas, beta: float, sigma2: float) -> np.ndarray:
    """mcrlb for each row of an (M, N) array of phase sets.

    Rows with a repeated phase give inf rather than raising.
    """
    thetas = np.asarray(thetas, dtype=float)
    _check_batch(thetas, beta)
    out = np.empty(thetas.shape[0])
    with np.errstate(divide="ignore", invalid="ignore"):
        for rows, t, (ip, jp), dsum in _batch_terms(thetas):
            num = sigma2 * np.sum(1.0 - np.cos(t[:, ip] - t[:, jp]), axis=1)
            out[rows] = np.where(dsum > 0, num / (beta**2 * dsum), np.inf)
    return out


def crlb_batch(thetas, phis, beta: float, sigma2: float) -> np.ndarray:
    """crlb_phi for each row of (M, N) phase sets with matching pair phases."""
    thetas = np.asarray(thetas, dtype=float)
    _check_batch(thetas, beta)
    phis = np.broadcast_to(np.asarray(phis, dtype=float), thetas.shape[:1])
    out = np.empty(thetas.shape[0])
    with np.errstate(divide="ignore", invalid="ignore"):
        for rows, t, (ip, jp), dsum in _batch_terms(thetas):
            c = np.cos(t + phis[rows, None])
            num = sigma2 * np.sum((c[:, ip] - c[:, jp]) ** 2, axis=1)
            out[rows] = np.where(dsum > 0, num / (beta**2 * dsum), np.inf)
    return out
