"""Two-step photon arrival simulator: Poisson count, then i.i.d. timestamps.

Counts follow Poisson(N * Q) and timestamps are drawn from the arrival PDF
by inverse transform sampling on the discretized grid. All randomness flows
through seedable, stream-addressable handles so any simulation is exactly
reproducible.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import (
    DiscretizedFunction,
    EnvParams,
    FormatError,
    ParameterError,
    SystemParams,
    TimeGrid,
    arrival_pdf,
    build_flux,
)

_MIX = 0x9E3779B97F4A7C15  # 64-bit golden-ratio multiplier for stream derivation
_MASK63 = (1 << 63) - 1


@dataclass(frozen=True)
class RngHandle:
    """Addressable random stream: (seed, stream) fully determines the output."""

    seed: int
    stream: int = 0

    def __post_init__(self):
        if self.seed < 0 or self.stream < 0:
            raise ParameterError("seed and stream id must be non-negative")

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(entropy=self.seed, spawn_key=(self.stream,))
        return np.random.Generator(np.random.PCG64(ss))

    def child(self, index: int) -> "RngHandle":
        """Derive an independent sub-stream, e.g. one per pixel or realization."""
        if index < 0:
            raise ParameterError("stream index must be non-negative")
        mixed = ((self.stream + 1) * _MIX + index) & _MASK63
        return RngHandle(self.seed, mixed)


def as_generator(rng: "RngHandle | np.random.Generator") -> np.random.Generator:
    if isinstance(rng, RngHandle):
        return rng.generator()
    return rng


@dataclass(frozen=True)
class TimestampBatch:
    """Relative photon timestamps in [0, t_r) plus the realized count."""

    times: np.ndarray
    count: int

    def __post_init__(self):
        times = np.ascontiguousarray(self.times, dtype=np.float64)
        if self.count != times.size:
            raise ParameterError(f"count {self.count} != number of timestamps {times.size}")
        times.flags.writeable = False
        object.__setattr__(self, "times", times)

    @classmethod
    def from_times(cls, times: np.ndarray) -> "TimestampBatch":
        times = np.asarray(times, dtype=np.float64)
        return cls(times=times, count=times.size)


def sample_poisson_count(mean: float, rng: "RngHandle | np.random.Generator") -> int:
    """Draw a Poisson count with the given mean (the total energy N*Q)."""
    if mean < 0:
        raise ParameterError(f"Poisson mean must be non-negative, got {mean}")
    if mean == 0:
        return 0
    return int(as_generator(rng).poisson(mean))


class CdfInverter:
    """Cached inverse CDF of a discretized PDF for repeated sampling.

    The PDF is piecewise constant over the bins, so timestamps are placed
    uniformly within the selected bin and the CDF inverts in O(log K).
    """

    # Below this many draws, per-draw CDF inversion is cheaper than the
    # bin-count decomposition used for large batches.
    BULK_THRESHOLD = 2048

    def __init__(self, pdf: DiscretizedFunction):
        if not pdf.is_pdf():
            raise ParameterError(
                f"inverse transform requires a normalized PDF; integral = {pdf.integral()}"
            )
        self.grid = pdf.grid
        self.values = pdf.values
        delta = pdf.grid.bin_width
        cdf = np.concatenate(([0.0], np.cumsum(pdf.values) * delta))
        cdf[-1] = 1.0
        self.cdf = cdf
        self.edges = pdf.grid.edges()
        # Zero-density bins carry no mass; a unit slope keeps division safe.
        self._safe_density = np.where(pdf.values > 0, pdf.values, 1.0)
        self._bin_mass = pdf.values * delta / float(np.sum(pdf.values) * delta)
        self._t_max = np.nextafter(self.grid.t_r, 0.0)

    def invert(self, u: np.ndarray) -> np.ndarray:
        """Map uniform variates in [0, 1) to timestamps in [0, t_r)."""
        u = np.asarray(u, dtype=np.float64)
        idx = np.searchsorted(self.cdf, u, side="right") - 1
        idx = np.clip(idx, 0, self.grid.n_bins - 1)
        t = self.edges[idx] + (u - self.cdf[idx]) / self._safe_density[idx]
        return np.minimum(t, self._t_max)

    def sample(self, n: int, gen: np.random.Generator) -> np.ndarray:
        """Draw n timestamps; piecewise-constant density over the bins.

        Small batches invert the CDF draw by draw. Large batches use the
        exact decomposition of the same distribution (multinomial bin
        counts, then uniform placement within each bin), which keeps the
        per-draw cost flat for photon-rich simulations.
        """
        if n < self.BULK_THRESHOLD:
            return self.invert(gen.random(n))
        counts = gen.multinomial(n, self._bin_mass)
        starts = np.repeat(self.edges[:-1], counts)
        t = starts + gen.random(n) * self.grid.bin_width
        return np.minimum(t, self._t_max)


def invert_cdf(pdf: DiscretizedFunction, u: np.ndarray) -> np.ndarray:
    """One-shot inverse CDF evaluation (see CdfInverter for the cached form)."""
    return CdfInverter(pdf).invert(u)


def inverse_transform_sample(
    pdf: DiscretizedFunction, n: int, rng: "RngHandle | np.random.Generator"
) -> TimestampBatch:
    """Draw n i.i.d. timestamps from a discretized PDF."""
    if n < 0:
        raise ParameterError(f"sample count must be non-negative, got {n}")
    inverter = CdfInverter(pdf)
    return TimestampBatch.from_times(inverter.sample(n, as_generator(rng)))


def simulate_arrivals(
    sys: SystemParams,
    env: EnvParams,
    grid: TimeGrid,
    rng: "RngHandle | np.random.Generator",
) -> TimestampBatch:
    """Simulate one acquisition of photon arrivals over N cycles.

    The count is Poisson(N * Q) and the relative timestamps are i.i.d.
    draws from the arrival PDF.
    """
    gen = as_generator(rng)
    energy = env.energy
    if energy == 0:
        return TimestampBatch.from_times(np.empty(0))
    count = sample_poisson_count(sys.n_cycles * energy, gen)
    pdf = arrival_pdf(build_flux(sys, env, grid))
    return inverse_transform_sample(pdf, count, gen)


def write_times_csv(batch: TimestampBatch, path: "str | Path") -> None:
    """One timestamp per line, full double precision."""
    np.savetxt(path, batch.times, fmt="%.17g")


def read_times_csv(path: "str | Path") -> TimestampBatch:
    times = np.loadtxt(path, dtype=np.float64, ndmin=1)
    return TimestampBatch.from_times(times)


_BIN_HEADER = struct.Struct("<Q")


def write_times_binary(batch: TimestampBatch, path: "str | Path") -> None:
    """Flat little-endian float64 dump with an 8-byte count header."""
    with open(path, "wb") as fh:
        fh.write(_BIN_HEADER.pack(batch.count))
        fh.write(batch.times.astype("<f8").tobytes())


def read_times_binary(path: "str | Path") -> TimestampBatch:
    raw = Path(path).read_bytes()
    if len(raw) < _BIN_HEADER.size:
        raise FormatError(f"{path}: truncated timestamp file")
    (count,) = _BIN_HEADER.unpack_from(raw)
    body = raw[_BIN_HEADER.size:]
    if len(body) != 8 * count:
        raise FormatError(f"{path}: expected {count} timestamps, found {len(body) // 8}")
    times = np.frombuffer(body, dtype="<f8").astype(np.float64)
    return TimestampBatch.from_times(times)
