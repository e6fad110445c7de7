"""Training-pair generation and the versioned binary dataset format.

Each sample pairs a discretized flux vector (scaled to network input
magnitude) with the averaged empirical registration histogram produced by
the conventional simulator. Files carry a magic tag, the full generating
configuration, and a trailing CRC32 so a dataset can be regenerated
bit-exactly from its own header.
"""

from __future__ import annotations

import logging
import struct
import zlib
from dataclasses import dataclass
from hashlib import sha256
from pathlib import Path

import numpy as np

from .arrival import RngHandle
from .core import (
    DegenerateDistributionError,
    EnvParams,
    FormatError,
    ParameterError,
    SystemParams,
    TimeGrid,
    build_flux,
)
from .oracle import empirical_pdf

log = logging.getLogger(__name__)

DATASET_MAGIC = b"SPLDS1"
TEST_FRACTION_DENOM = 5  # 4:1 train/test split
MIN_ENERGY = 0.01        # resample environments below this per-cycle energy

DEFAULT_S_RANGE = (0.0, 3.0)
DEFAULT_B_RANGE = (0.0, 3.0)
DEFAULT_TAU_RANGE = (2.0, 6.0)


@dataclass(frozen=True)
class EnvRanges:
    s_range: "tuple[float, float]" = DEFAULT_S_RANGE
    b_range: "tuple[float, float]" = DEFAULT_B_RANGE
    tau_range: "tuple[float, float]" = DEFAULT_TAU_RANGE

    def __post_init__(self):
        for lo, hi in (self.s_range, self.b_range, self.tau_range):
            if not lo <= hi:
                raise ParameterError(f"invalid range ({lo}, {hi})")

    def contains(self, env: EnvParams) -> bool:
        return (
            self.s_range[0] <= env.s_level <= self.s_range[1]
            and self.b_range[0] <= env.b_level <= self.b_range[1]
            and self.tau_range[0] <= env.tau <= self.tau_range[1]
        )


def sample_env(rng: "RngHandle | np.random.Generator", ranges: EnvRanges = EnvRanges()) -> EnvParams:
    """Draw independent uniform (S, B, tau) from the configured ranges."""
    from .arrival import as_generator

    gen = as_generator(rng)
    s = gen.uniform(*ranges.s_range)
    b = gen.uniform(*ranges.b_range)
    tau = gen.uniform(*ranges.tau_range)
    return EnvParams(tau=tau, s_level=s, b_level=b)


def make_pair(
    sys: SystemParams,
    env: EnvParams,
    grid: TimeGrid,
    n_realizations: int = 20,
    rng: "RngHandle" = RngHandle(0),
) -> "tuple[np.ndarray, np.ndarray]":
    """One (scaled flux vector, empirical registration PDF) training pair."""
    flux = build_flux(sys, env, grid)
    label = empirical_pdf(sys, env, grid, n_realizations, rng)
    return flux.values * grid.bin_width, label.values.copy()


def split_tag(seed: int, index: int) -> str:
    """Deterministic 4:1 train/test assignment from (seed, sample index)."""
    digest = sha256(f"{seed}:{index}".encode()).digest()
    return "test" if int.from_bytes(digest[:8], "little") % TEST_FRACTION_DENOM == 0 else "train"


@dataclass(frozen=True)
class DatasetSample:
    env: EnvParams
    flux: np.ndarray
    label: np.ndarray
    split: str


@dataclass(frozen=True)
class DatasetHeader:
    sys: SystemParams
    n_bins: int
    ranges: EnvRanges
    seed: int
    n_realizations: int
    n_samples: int

    @property
    def grid(self) -> TimeGrid:
        return TimeGrid(n_bins=self.n_bins, t_r=self.sys.t_r)


@dataclass(frozen=True)
class Dataset:
    header: DatasetHeader
    samples: "list[DatasetSample]"

    @property
    def sys(self) -> SystemParams:
        return self.header.sys

    @property
    def grid(self) -> TimeGrid:
        return self.header.grid

    def arrays(self, split: str) -> "tuple[np.ndarray, np.ndarray]":
        picked = [s for s in self.samples if s.split == split]
        if not picked:
            return np.empty((0, self.grid.n_bins)), np.empty((0, self.grid.n_bins))
        return np.stack([s.flux for s in picked]), np.stack([s.label for s in picked])


def generate_dataset(
    sys: SystemParams,
    grid: TimeGrid,
    n_samples: int,
    n_realizations: int = 20,
    seed: int = 0,
    ranges: EnvRanges = EnvRanges(),
) -> Dataset:
    """Generate training pairs; the result is a pure function of the header.

    Near-zero-energy environments (Q < MIN_ENERGY) and the rare draw that
    registers no photon at all are resampled, with a log record.
    """
    if n_samples < 1:
        raise ParameterError("dataset needs at least one sample")
    env_gen = RngHandle(seed, stream=0).generator()
    base = RngHandle(seed, stream=1)
    samples: "list[DatasetSample]" = []
    attempt = 0
    for i in range(n_samples):
        while True:
            env = sample_env(env_gen, ranges)
            attempt += 1
            if env.energy < MIN_ENERGY:
                log.info("resampling near-degenerate environment %s", env)
                continue
            try:
                flux, label = make_pair(sys, env, grid, n_realizations, base.child(attempt))
            except DegenerateDistributionError:
                log.info("resampling environment with zero registrations %s", env)
                continue
            break
        samples.append(DatasetSample(env=env, flux=flux, label=label, split=split_tag(seed, i)))
    header = DatasetHeader(
        sys=sys,
        n_bins=grid.n_bins,
        ranges=ranges,
        seed=seed,
        n_realizations=n_realizations,
        n_samples=n_samples,
    )
    return Dataset(header=header, samples=samples)


# t_r, t_d, sigma_t, n_cycles, n_bins, seed, n_realizations,
# s_lo, s_hi, b_lo, b_hi, tau_lo, tau_hi, n_samples
_HEADER = struct.Struct("<dddIIQIddddddI")
_RECORD_META = struct.Struct("<dddB")  # tau, s, b, split flag


def write_dataset(ds: Dataset, path: "str | Path") -> None:
    h = ds.header
    buf = bytearray()
    buf += DATASET_MAGIC
    buf += _HEADER.pack(
        h.sys.t_r,
        h.sys.t_d,
        h.sys.sigma_t,
        h.sys.n_cycles,
        h.n_bins,
        h.seed,
        h.n_realizations,
        *h.ranges.s_range,
        *h.ranges.b_range,
        *h.ranges.tau_range,
        h.n_samples,
    )
    for s in ds.samples:
        buf += _RECORD_META.pack(s.env.tau, s.env.s_level, s.env.b_level, s.split == "test")
        buf += np.ascontiguousarray(s.flux, dtype="<f8").tobytes()
        buf += np.ascontiguousarray(s.label, dtype="<f8").tobytes()
    buf += struct.pack("<I", zlib.crc32(bytes(buf)))
    Path(path).write_bytes(bytes(buf))


def _parse_header(raw: bytes, path) -> DatasetHeader:
    if len(raw) < len(DATASET_MAGIC) + _HEADER.size or raw[: len(DATASET_MAGIC)] != DATASET_MAGIC:
        raise FormatError(f"{path}: not a {DATASET_MAGIC.decode()} dataset file")
    fields = _HEADER.unpack_from(raw, len(DATASET_MAGIC))
    t_r, t_d, sigma_t, n_cycles, n_bins, seed, n_real = fields[:7]
    s_lo, s_hi, b_lo, b_hi, tau_lo, tau_hi, n_samples = fields[7:]
    return DatasetHeader(
        sys=SystemParams(t_r=t_r, t_d=t_d, sigma_t=sigma_t, n_cycles=n_cycles),
        n_bins=n_bins,
        ranges=EnvRanges((s_lo, s_hi), (b_lo, b_hi), (tau_lo, tau_hi)),
        seed=seed,
        n_realizations=n_real,
        n_samples=n_samples,
    )


def read_dataset_header(path: "str | Path") -> DatasetHeader:
    """Read only the header (e.g. the generating seed) without the samples."""
    with open(path, "rb") as fh:
        raw = fh.read(len(DATASET_MAGIC) + _HEADER.size)
    return _parse_header(raw, path)


def read_dataset(path: "str | Path") -> Dataset:
    raw = Path(path).read_bytes()
    header = _parse_header(raw, path)
    if len(raw) < 4:
        raise FormatError(f"{path}: truncated dataset file")
    stored_crc = struct.unpack_from("<I", raw, len(raw) - 4)[0]
    if zlib.crc32(raw[:-4]) != stored_crc:
        raise FormatError(f"{path}: checksum mismatch")
    k = header.n_bins
    record_size = _RECORD_META.size + 16 * k
    expected = len(DATASET_MAGIC) + _HEADER.size + header.n_samples * record_size + 4
    if len(raw) != expected:
        raise FormatError(f"{path}: expected {expected} bytes, found {len(raw)}")
    off = len(DATASET_MAGIC) + _HEADER.size
    samples = []
    for _ in range(header.n_samples):
        tau, s, b, is_test = _RECORD_META.unpack_from(raw, off)
        off += _RECORD_META.size
        flux = np.frombuffer(raw, dtype="<f8", count=k, offset=off).astype(np.float64)
        off += 8 * k
        label = np.frombuffer(raw, dtype="<f8", count=k, offset=off).astype(np.float64)
        off += 8 * k
        samples.append(
            DatasetSample(
                env=EnvParams(tau=tau, s_level=s, b_level=b),
                flux=flux,
                label=label,
                split="test" if is_test else "train",
            )
        )
    return Dataset(header=header, samples=samples)
