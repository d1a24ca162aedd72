"""Training-stage simulation: noisy RSSI per mini-slot and the pairwise schedule."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator

import numpy as np

from . import rng as rngmod
from .codebook import PhaseSet
from .model import ChannelVector, PairParams, SystemParams, derive_pair_params

REPLAY_HEADER = ("slot", "mini_slot", "theta", "rssi")


class TraceFormatError(ValueError):
    pass


@dataclass(frozen=True)
class NoiseModel:
    sigma2: float = 0.0

    def __post_init__(self):
        if not (self.sigma2 >= 0 and math.isfinite(self.sigma2)):
            raise ValueError(f"noise variance must be finite and >= 0, got {self.sigma2}")

    @property
    def sigma(self) -> float:
        return math.sqrt(self.sigma2)


@dataclass(frozen=True)
class RssiRecord:
    slot: int  # antenna k paired with antenna 1, k in 2..K
    mini_slot: int  # n in 1..N
    value: float


@dataclass(frozen=True)
class TrainingSchedule:
    """Slot k-1 activates antennas (1, k) and sweeps the whole codebook."""

    K: int
    N: int

    def __post_init__(self):
        if self.K < 2:
            raise ValueError(f"need K >= 2, got {self.K}")
        if self.N < 0:
            raise ValueError(f"need N >= 0, got {self.N}")

    @property
    def total_mini_slots(self) -> int:
        return (self.K - 1) * self.N

    def pairs(self) -> list[tuple[int, int]]:
        return [(1, k) for k in range(2, self.K + 1)]

    def __iter__(self) -> Iterator[tuple[int, int]]:
        for k in range(2, self.K + 1):
            for n in range(1, self.N + 1):
                yield k, n


@dataclass(frozen=True, eq=False)
class TrainingTable:
    """RSSI feedback for every (slot, mini-slot); row ``k-2`` holds antenna pair (1, k)."""

    rssi: np.ndarray  # (K-1, N)
    theta: PhaseSet

    @property
    def K(self) -> int:
        return self.rssi.shape[0] + 1

    @property
    def N(self) -> int:
        return self.rssi.shape[1]

    def records(self) -> list[RssiRecord]:
        return [
            RssiRecord(slot=k, mini_slot=n, value=float(self.rssi[k - 2, n - 1]))
            for k, n in TrainingSchedule(self.K, self.N)
        ]

    def __len__(self) -> int:
        return self.rssi.size


def simulate_rssi(params: PairParams, theta, noise: NoiseModel, rng: np.random.Generator | None = None):
    """alpha + beta cos(theta + phi) plus N(0, sigma2) noise drawn from ``rng``.

    ``theta`` may be a scalar or an array; one noise draw per element, in order.
    Values are not clamped at zero.
    """
    clean = params.rssi(theta)
    if noise.sigma2 > 0:
        if rng is None:
            raise ValueError("noisy simulation needs an rng stream")
        clean = clean + noise.sigma * rng.standard_normal(np.shape(clean))
    return float(clean) if np.ndim(clean) == 0 else clean


def pair_params_table(h: ChannelVector, sys: SystemParams) -> list[PairParams]:
    g = h.gains
    return [derive_pair_params(g[0], g[k], sys) for k in range(1, h.K)]


def run_training(
    h: ChannelVector,
    theta: PhaseSet,
    sys: SystemParams,
    noise: NoiseModel,
    seed: int = 0,
    trial: int = 0,
) -> TrainingTable:
    """Simulate the pairwise training stage for one channel realization.

    Noise for (trial, slot k, mini-slot n) is draw n of the stream keyed by
    (seed, trial, k), so it is fixed by its key alone.
    """
    t = theta.thetas
    rows = []
    for k, pp in enumerate(pair_params_table(h, sys), start=2):
        g = rngmod.stream(seed, rngmod.NOISE, trial, k) if noise.sigma2 > 0 else None
        rows.append(np.atleast_1d(simulate_rssi(pp, t, noise, g)))
    return TrainingTable(rssi=np.array(rows, dtype=float).reshape(h.K - 1, t.size), theta=theta)


def training_overhead(K: int, N: int, tau_kn: float, E_f: float) -> tuple[float, float]:
    """(time, energy) spent on N(K-1) feedback transmissions."""
    count = N * (K - 1)
    return count * tau_kn, count * E_f


def write_trace(table: TrainingTable, path=None) -> str:
    """Serialize a training table in the replay format; returns the text."""
    buf = io.StringIO(newline="")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(REPLAY_HEADER)
    t = table.theta.thetas
    for rec in table.records():
        w.writerow([rec.slot, rec.mini_slot, repr(float(t[rec.mini_slot - 1])), repr(rec.value)])
    text = buf.getvalue()
    if path is not None:
        Path(path).write_text(text, encoding="utf-8", newline="")
    return text


def read_trace(source) -> dict[int, list[tuple[int, float, float]]]:
    """Parse a replay CSV into {slot: [(mini_slot, theta, rssi), ...]} sorted by mini-slot.

    ``source`` is a path or a text stream. Raises TraceFormatError naming the
    offending line.
    """
    if isinstance(source, (str, Path)):
        text = Path(source).read_text(encoding="utf-8")
    else:
        text = source.read()
    lines = text.splitlines()
    if not lines or not any(ln.strip() for ln in lines):
        raise TraceFormatError("trace is empty")
    reader = csv.reader(lines)
    slots: dict[int, dict[int, tuple[float, float]]] = {}
    header_seen = False
    for lineno, row in enumerate(reader, start=1):
        if not row or not "".join(row).strip() or row[0].lstrip().startswith("#"):
            continue
        cells = [c.strip() for c in row]
        if not header_seen:
            if tuple(cells) != REPLAY_HEADER:
                raise TraceFormatError(
                    f"line {lineno}: expected header {','.join(REPLAY_HEADER)}, got {','.join(cells)}"
                )
            header_seen = True
            continue
        if len(cells) != 4:
            raise TraceFormatError(f"line {lineno}: expected 4 fields, got {len(cells)}")
        try:
            slot, n = int(cells[0]), int(cells[1])
            theta, value = float(cells[2]), float(cells[3])
        except ValueError as exc:
            raise TraceFormatError(f"line {lineno}: {exc}") from None
        if slot < 2 or n < 1:
            raise TraceFormatError(f"line {lineno}: slot must be >= 2 and mini_slot >= 1")
        if not (math.isfinite(theta) and math.isfinite(value)):
            raise TraceFormatError(f"line {lineno}: non-finite value")
        per = slots.setdefault(slot, {})
        if n in per:
            raise TraceFormatError(f"line {lineno}: duplicate record for slot {slot}, mini_slot {n}")
        per[n] = (theta, value)
    if not slots:
        raise TraceFormatError("trace has no records")
    out = {}
    N = max(max(per) for per in slots.values())
    for slot in sorted(slots):
        per = slots[slot]
        missing = [n for n in range(1, N + 1) if n not in per]
        if missing:
            raise TraceFormatError(f"slot {slot}: missing mini_slot(s) {missing}")
        out[slot] = [(n, per[n][0], per[n][1]) for n in range(1, N + 1)]
    return out
