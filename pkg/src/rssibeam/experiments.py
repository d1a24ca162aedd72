"""Seeded Monte Carlo experiments behind each CLI subcommand.

Every experiment returns a ``ResultTable``. Trials are processed in fixed
chunks; all randomness comes from streams keyed by (seed, purpose, trial,
slot), so the table is the same for any worker count.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from importlib import metadata
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from . import rng as rngmod
from .codebook import crlb_batch, is_equally_spaced, make_theta, mcrlb, mcrlb_batch
from .config import ConfigError, ExperimentConfig
from .estimator import (
    estimate_noiseless_n3_batch,
    estimate_phase,
    estimate_phases_batch,
    exhaustive_baseline,
)
from .feedback import read_trace
from .model import ChannelVector, SystemParams, derive_pair_params, egt_beam_vector, received_energy, sample_channel, wrap_angle
from .planner import PlannerError, TimingParams, n_star, n_star_brute, wpb_params_for_channel

CHUNK = 500
FLOAT_FORMAT = ".17g"
DEG = 180.0 / math.pi


def tool_version() -> str:
    try:
        return "v" + metadata.version("artifact")
    except metadata.PackageNotFoundError:  # pragma: no cover - source checkout
        from . import __version__

        return "v" + __version__


@dataclass
class ResultTable:
    columns: tuple[str, ...]
    rows: list[tuple]
    provenance: list[str] = field(default_factory=list)
    summary: list[str] = field(default_factory=list)

    def __post_init__(self):
        width = len(self.columns)
        for i, row in enumerate(self.rows):
            if len(row) != width:
                raise ValueError(f"row {i} has {len(row)} fields, expected {width}")

    def column(self, name: str) -> np.ndarray:
        j = self.columns.index(name)
        return np.array([row[j] for row in self.rows], dtype=float)

    def to_csv(self) -> str:
        lines = [f"# {p}" for p in self.provenance]
        lines.append(",".join(self.columns))
        lines.extend(",".join(_fmt(v) for v in row) for row in self.rows)
        return "\n".join(lines) + "\n"

    def write(self, path) -> None:
        Path(path).write_text(self.to_csv(), encoding="utf-8", newline="")


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    x = float(v)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return format(x, FLOAT_FORMAT)


def provenance(command: str, cfg: ExperimentConfig | None = None, extra: Sequence[str] = ()) -> list[str]:
    lines = [f"rssibeam {tool_version()}", f"command: {command}"]
    if cfg is not None:
        lines += [f"config: {ln}" for ln in cfg.echo()]
    lines += list(extra)
    lines.append(f"floats: {FLOAT_FORMAT} (17 significant digits, '.' decimal separator)")
    return lines


def sigma2_for_snr(snr_db: float, convention: str, beta: float = 1.0) -> float:
    """Noise variance giving ``snr_db`` for an RSSI oscillation amplitude ``beta``.

    beta_sq_over_sigma_sq: SNR = beta^2 / sigma^2.
    beta_sq_over_two_sigma_sq: SNR = beta^2 / (2 sigma^2).
    """
    if snr_db == math.inf:
        return 0.0
    ratio = 10.0 ** (snr_db / 10.0)
    if convention == "beta_sq_over_sigma_sq":
        return beta**2 / ratio
    if convention == "beta_sq_over_two_sigma_sq":
        return beta**2 / (2.0 * ratio)
    raise ValueError(f"unknown SNR convention {convention!r}")


def reference_beta(cfg: ExperimentConfig) -> float:
    """beta of a pair whose gains both have squared magnitude ``channel_scale``."""
    return cfg.xi * cfg.power / 2.0 * cfg.channel_scale


def _sys(cfg: ExperimentConfig) -> SystemParams:
    return SystemParams(xi=cfg.xi, power=cfg.power)


def trial_channel(cfg: ExperimentConfig, trial: int) -> ChannelVector:
    g = rngmod.stream(cfg.seed, rngmod.CHANNEL, trial)
    return sample_channel(cfg.channel, cfg.k, g, scale=cfg.channel_scale)


def trial_noise(cfg: ExperimentConfig, trial: int, n: int) -> np.ndarray:
    """(K-1, n) standard normals; row k-2 is the stream for antenna pair (1, k)."""
    return np.stack([rngmod.stream(cfg.seed, rngmod.NOISE, trial, k).standard_normal(n) for k in range(2, cfg.k + 1)])


def run_chunks(fn: Callable, cfg: ExperimentConfig, trials: int) -> list:
    chunks = [range(s, min(s + CHUNK, trials)) for s in range(0, trials, CHUNK)]
    if cfg.workers <= 1 or len(chunks) == 1:
        return [fn(cfg, c) for c in chunks]
    with ProcessPoolExecutor(max_workers=cfg.workers) as ex:
        return list(ex.map(fn, [cfg] * len(chunks), chunks))


# -- mcrlb-sweep ------------------------------------------------------------


def _random_thetas(cfg: ExperimentConfig, trials, N: int) -> np.ndarray:
    return np.stack([rngmod.stream(cfg.seed, rngmod.THETA, t, N).uniform(0.0, 2.0 * np.pi, N) for t in trials])


def _mcrlb_chunk(cfg: ExperimentConfig, trials) -> dict:
    s2 = cfg.sigma**2
    return {N: mcrlb_batch(_random_thetas(cfg, trials, N), cfg.beta, s2) for N in cfg.n}


def cmd_mcrlb_sweep(cfg: ExperimentConfig) -> ResultTable:
    cfg = cfg.resolved("mcrlb-sweep")
    if min(cfg.n) < 3:
        raise ConfigError("mcrlb-sweep needs every n >= 3")
    parts = run_chunks(_mcrlb_chunk, cfg, cfg.trials)
    s2 = cfg.sigma**2
    rows = []
    for N in cfg.n:
        rand = np.concatenate([p[N] for p in parts])
        rows.append((N, mcrlb(make_theta(N), cfg.beta, s2), float(np.mean(rand)), float(np.min(rand)), 2.0 * s2 / (N * cfg.beta**2)))
    cols = ("N", "mcrlb_def1", "mcrlb_random_mean", "mcrlb_random_min", "two_over_N")
    return ResultTable(cols, rows, provenance("mcrlb-sweep", cfg))


# -- crlb-scatter -----------------------------------------------------------


def _crlb_chunk(cfg: ExperimentConfig, trials) -> dict:
    out = {}
    for N in cfg.n:
        th = _random_thetas(cfg, trials, N)
        phi = np.array([rngmod.stream(cfg.seed, rngmod.PHASE, t, N).uniform(0.0, 2.0 * np.pi) for t in trials])
        out[N] = crlb_batch(th, phi, cfg.beta, cfg.sigma**2)
    return out


def cmd_crlb_scatter(cfg: ExperimentConfig) -> ResultTable:
    cfg = cfg.resolved("crlb-scatter")
    if min(cfg.n) < 3:
        raise ConfigError("crlb-scatter needs every n >= 3")
    parts = run_chunks(_crlb_chunk, cfg, cfg.trials)
    s2 = cfg.sigma**2
    rows = []
    summary = []
    for N in cfg.n:
        vals = np.concatenate([p[N] for p in parts])
        bound = mcrlb(make_theta(N), cfg.beta, s2)
        rows.extend((N, r, float(v), bound) for r, v in enumerate(vals))
        summary.append(f"N={N}: median crlb {np.median(vals):.6g}, mcrlb_def1 {bound:.6g}")
    return ResultTable(("N", "realization", "crlb", "mcrlb_def1"), rows, provenance("crlb-scatter", cfg), summary)


# -- rmse-sweep -------------------------------------------------------------


def _rmse_chunk(cfg: ExperimentConfig, trials) -> tuple[np.ndarray, np.ndarray]:
    sys = _sys(cfg)
    n_max = max(cfg.n)
    beta_ref = reference_beta(cfg)
    sig = np.sqrt([sigma2_for_snr(s, cfg.snr_convention, beta_ref) for s in cfg.snr_db])
    params = [derive_pair_params(*trial_channel(cfg, t).gains[:2], sys) for t in trials]
    alpha = np.array([p.alpha for p in params])[:, None, None]
    beta = np.array([p.beta for p in params])[:, None, None]
    phi = np.array([p.phi for p in params])
    z = np.concatenate([trial_noise(cfg, t, n_max) for t in trials])[:, None, :]

    sq = np.empty((len(params), sig.size, len(cfg.n)))
    sq3 = np.full((len(params), sig.size), np.nan)
    for j, N in enumerate(cfg.n):
        t = make_theta(N).thetas
        R = alpha + beta * np.cos(t + phi[:, None, None]) + sig[None, :, None] * z[:, :, :N]
        est, _ = estimate_phases_batch(R, t)
        sq[:, :, j] = wrap_angle(est - phi[:, None]) ** 2
        if N == 3:
            sq3[:] = wrap_angle(estimate_noiseless_n3_batch(R) - phi[:, None]) ** 2
    return sq, sq3


def cmd_rmse_sweep(cfg: ExperimentConfig) -> ResultTable:
    cfg = cfg.resolved("rmse-sweep")
    if cfg.k != 2:
        raise ConfigError("rmse-sweep models a single antenna pair; set k = 2")
    if min(cfg.n) < 3:
        raise ConfigError("rmse-sweep needs every n >= 3")
    parts = run_chunks(_rmse_chunk, cfg, cfg.trials)
    sq = np.concatenate([p[0] for p in parts])
    sq3 = np.concatenate([p[1] for p in parts])
    beta_ref = reference_beta(cfg)
    rows = []
    for i, snr in enumerate(cfg.snr_db):
        s2 = sigma2_for_snr(snr, cfg.snr_convention, beta_ref)
        for j, N in enumerate(cfg.n):
            e2 = sq[:, i, j]
            mse = float(np.mean(e2))
            rmse = math.sqrt(mse)
            se = float(np.std(e2, ddof=1) / math.sqrt(e2.size)) / (2.0 * rmse) if rmse > 0 and e2.size > 1 else 0.0
            bound = math.sqrt(2.0 * s2 / (N * beta_ref**2)) * DEG
            thm1 = math.sqrt(float(np.mean(sq3[:, i]))) * DEG if N == 3 else math.nan
            rows.append((snr, s2, N, cfg.trials, rmse * DEG, se * DEG, bound, thm1))
    cols = ("snr_db", "sigma2", "N", "trials", "rmse_deg", "rmse_se_deg", "mcrlb_rmse_deg", "rmse_noiseless_n3_deg")
    extra = [f"snr_convention: {cfg.snr_convention} (reference beta {beta_ref!r})"]
    return ResultTable(cols, rows, provenance("rmse-sweep", cfg, extra))


# -- energy-cdf -------------------------------------------------------------


def _energy_chunk(cfg: ExperimentConfig, trials) -> np.ndarray:
    sys = _sys(cfg)
    N = cfg.n[0]
    t = make_theta(N).thetas
    beta_ref = reference_beta(cfg)
    sig = [math.sqrt(sigma2_for_snr(s, cfg.snr_convention, beta_ref)) for s in cfg.snr_db]
    step = math.radians(cfg.grid_step_deg)
    out = np.empty((len(trials), len(sig), 3))
    for r, trial in enumerate(trials):
        h = trial_channel(cfg, trial)
        g = h.gains
        pp = [derive_pair_params(g[0], g[k], sys) for k in range(1, h.K)]
        alpha = np.array([p.alpha for p in pp])[:, None]
        beta = np.array([p.beta for p in pp])[:, None]
        phi = np.array([p.phi for p in pp])
        clean = alpha + beta * np.cos(t + phi[:, None])
        z = trial_noise(cfg, trial, N)
        perfect = received_energy(h, egt_beam_vector(h.phase_differences(), sys), sys.xi)
        if cfg.baseline:
            base = received_energy(h, egt_beam_vector(exhaustive_baseline(h, sys, step).phases, sys), sys.xi)
        else:
            base = math.nan
        for i, s in enumerate(sig):
            est, _ = estimate_phases_batch(clean + s * z, t)
            out[r, i] = (received_energy(h, egt_beam_vector(est, sys), sys.xi), perfect, base)
    return out


def cmd_energy_cdf(cfg: ExperimentConfig) -> ResultTable:
    cfg = cfg.resolved("energy-cdf")
    if len(cfg.n) != 1 or cfg.n[0] < 3:
        raise ConfigError("energy-cdf needs a single n >= 3")
    data = np.concatenate(run_chunks(_energy_chunk, cfg, cfg.trials))
    rows = []
    summary = []
    for i, snr in enumerate(cfg.snr_db):
        est, perfect, base = data[:, i, 0], data[:, i, 1], data[:, i, 2]
        loss = 100.0 * (1.0 - est / perfect)
        loss_b = 100.0 * (1.0 - est / base)
        order = np.argsort(est, kind="stable")
        n = est.size
        for rank, tr in enumerate(order, start=1):
            rows.append((snr, int(tr), est[tr], perfect[tr], base[tr], loss[tr], loss_b[tr], rank / n))
        line = f"snr={snr:g} dB: mean loss vs perfect CSI {np.mean(loss):.4f}%, loss variance {np.var(loss):.6g}"
        if cfg.baseline:
            line += f", mean loss vs grid baseline {np.mean(loss_b):.4f}%"
        summary.append(line)
    cols = (
        "snr_db",
        "trial",
        "energy_estimated",
        "energy_perfect",
        "energy_baseline",
        "loss_percent",
        "loss_vs_baseline_percent",
        "ecdf",
    )
    extra = [f"snr_convention: {cfg.snr_convention} (reference beta {reference_beta(cfg)!r})"]
    return ResultTable(cols, rows, provenance("energy-cdf", cfg, extra), summary)


# -- nstar-cdf --------------------------------------------------------------


def _nstar_chunk(cfg: ExperimentConfig, trials) -> np.ndarray:
    sys = _sys(cfg)
    timing = TimingParams(T=cfg.block_length, tau_kn=cfg.tau, E_f=cfg.feedback_energy, K=cfg.k)
    beta_ref = reference_beta(cfg)
    s2 = [sigma2_for_snr(s, cfg.snr_convention, beta_ref) for s in cfg.snr_db]
    out = np.full((len(trials), len(s2), 5), np.nan)
    for r, trial in enumerate(trials):
        h = trial_channel(cfg, trial)
        for i, v in enumerate(s2):
            w = wpb_params_for_channel(h, sys, v)
            try:
                ns = n_star(w, timing)
            except PlannerError:
                out[r, i, 0] = 0
                out[r, i, 4] = w.omega2
                continue
            out[r, i] = (1, n_star_brute(w, timing), ns.integer, ns.analytic, w.omega2)
    return out


def cmd_nstar_cdf(cfg: ExperimentConfig) -> ResultTable:
    cfg = cfg.resolved("nstar-cdf")
    timing = TimingParams(T=cfg.block_length, tau_kn=cfg.tau, E_f=cfg.feedback_energy, K=cfg.k)
    if timing.max_feasible_n() < 3:
        raise ConfigError("block_length too short for 3 training rounds")
    data = np.concatenate(run_chunks(_nstar_chunk, cfg, cfg.trials))
    rows = []
    summary = []
    for i, snr in enumerate(cfg.snr_db):
        d = data[:, i]
        feasible = d[:, 0] == 1
        n_feas = int(feasible.sum())
        key = np.where(feasible, d[:, 1], np.inf)
        order = np.lexsort((np.arange(d.shape[0]), key))
        rank = 0
        for tr in order:
            if feasible[tr]:
                rank += 1
                rows.append((snr, int(tr), 1, int(d[tr, 1]), int(d[tr, 2]), d[tr, 3], d[tr, 4], rank / n_feas))
            else:
                rows.append((snr, int(tr), 0, math.nan, math.nan, math.nan, d[tr, 4], math.nan))
        if n_feas:
            ns = d[feasible, 1]
            summary.append(
                f"snr={snr:g} dB: N* range [{int(ns.min())}, {int(ns.max())}], median {np.median(ns):g}, "
                f"{d.shape[0] - n_feas} infeasible draws; bounds [3, {timing.upper_bound():.4g}]"
            )
    cols = ("snr_db", "trial", "feasible", "n_star", "n_star_integer", "n_star_analytic", "omega2", "ecdf")
    extra = [
        f"snr_convention: {cfg.snr_convention} (reference beta {reference_beta(cfg)!r})",
        f"n_star bounds: [3, {timing.upper_bound()!r}]",
    ]
    return ResultTable(cols, rows, provenance("nstar-cdf", cfg, extra), summary)


# -- replay and theta -------------------------------------------------------


def cmd_replay(trace, source_name: str | None = None) -> ResultTable:
    """Estimate the phase of every slot in a recorded trace."""
    slots = read_trace(trace)
    rows = []
    for slot, recs in slots.items():
        N = len(recs)
        thetas = np.array([r[1] for r in recs])
        if N < 3:
            raise ValueError(f"slot {slot}: need at least 3 mini-slots, got {N}")
        if not is_equally_spaced(thetas, tol=1e-6):
            expected = ", ".join(repr(float(x)) for x in make_theta(N).thetas)
            raise ValueError(f"slot {slot}: theta column is not the equally spaced set for N={N}; expected [{expected}]")
        R = np.array([r[2] for r in recs])
        est = estimate_phase(R, make_theta(N))
        rows.append((slot, N, est.resolved, est.resolved * DEG, est.candidate_a, est.candidate_b, est.discriminant, est.tie))
    cols = ("slot", "N", "phi_hat_rad", "phi_hat_deg", "candidate_a", "candidate_b", "discriminant", "tie")
    name = source_name if source_name is not None else (str(trace) if isinstance(trace, (str, Path)) else "<stream>")
    return ResultTable(cols, rows, provenance("replay", extra=[f"trace: {name}"]))


def cmd_theta(N: int) -> ResultTable:
    t = make_theta(N).thetas
    rows = [(n, float(x), float(x) * DEG) for n, x in enumerate(t, start=1)]
    return ResultTable(("n", "theta_rad", "theta_deg"), rows, provenance("theta", extra=[f"N: {N}"]))


COMMANDS = {
    "mcrlb-sweep": cmd_mcrlb_sweep,
    "crlb-scatter": cmd_crlb_scatter,
    "rmse-sweep": cmd_rmse_sweep,
    "energy-cdf": cmd_energy_cdf,
    "nstar-cdf": cmd_nstar_cdf,
}
