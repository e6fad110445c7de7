"""Learned fast simulator and the multi-pixel depth-map demo.

The fast path predicts the registration PDF with the autoencoder, draws a
registration count from the Gaussian count model, and inverse-transform
samples that many timestamps. Per pixel the cost is a network forward pass
plus O(m log K) sampling, independent of the number of laser cycles.
"""

from __future__ import annotations

import time
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .arrival import CdfInverter, RngHandle, TimestampBatch, as_generator
from .core import (
    EnvParams,
    FormatError,
    NoPhotonError,
    ParameterError,
    SystemParams,
    TimeGrid,
    build_flux,
)
from .count_model import estimate_count, sample_count
from .dataset import EnvRanges
from .oracle import simulate_registrations
from .pdf_net import AEModel, predict_pdf

ENGINES = ("oracle", "fast")


def fast_simulate(
    sys: SystemParams,
    env: EnvParams,
    model: AEModel,
    grid: TimeGrid,
    rng: "RngHandle | np.random.Generator",
    ranges: EnvRanges = EnvRanges(),
) -> TimestampBatch:
    """One acquisition from the learned simulator."""
    if env.energy == 0:
        return TimestampBatch.from_times(np.empty(0))
    if not ranges.contains(env):
        warnings.warn(
            f"environment {env} lies outside the trained parameter ranges; "
            "predictions may extrapolate poorly",
            stacklevel=2,
        )
    gen = as_generator(rng)
    flux = build_flux(sys, env, grid)
    f_r = predict_pdf(model, flux)
    count = sample_count(estimate_count(sys, env, f_r), gen)
    times = CdfInverter(f_r).sample(count, gen)
    return TimestampBatch.from_times(times)


def estimate_depth(batch: TimestampBatch) -> float:
    """Naive sample-mean depth (delay) estimate from relative timestamps."""
    if batch.count == 0:
        raise NoPhotonError("cannot estimate depth from an empty batch")
    return float(batch.times.mean())


@dataclass(frozen=True)
class SceneSpec:
    """Per-pixel depth (delay) and reflectivity plus global illumination.

    The per-pixel signal level is reflectivity * pulse_energy; the
    background level b_level is shared by all pixels.
    """

    depths: np.ndarray
    reflectivity: np.ndarray
    b_level: float
    pulse_energy: float

    def __post_init__(self):
        depths = np.ascontiguousarray(self.depths, dtype=np.float64)
        refl = np.broadcast_to(
            np.asarray(self.reflectivity, dtype=np.float64), depths.shape
        ).copy()
        if depths.ndim != 2:
            raise ParameterError("depth map must be 2-D")
        if np.any(refl < 0) or self.b_level < 0 or self.pulse_energy < 0:
            raise ParameterError("reflectivity, background, and energy must be non-negative")
        object.__setattr__(self, "depths", depths)
        object.__setattr__(self, "reflectivity", refl)

    @property
    def height(self) -> int:
        return self.depths.shape[0]

    @property
    def width(self) -> int:
        return self.depths.shape[1]

    def env_at(self, row: int, col: int) -> EnvParams:
        return EnvParams(
            tau=float(self.depths[row, col]),
            s_level=float(self.reflectivity[row, col] * self.pulse_energy),
            b_level=self.b_level,
        )


def write_scene(scene: SceneSpec, path: "str | Path") -> None:
    """Plain-text scene: header line, then row-major depth and reflectivity."""
    with open(path, "w") as fh:
        fh.write(f"{scene.width} {scene.height} {scene.b_level:.17g} {scene.pulse_energy:.17g}\n")
        for grid_vals in (scene.depths, scene.reflectivity):
            for row in grid_vals:
                fh.write(" ".join(f"{v:.17g}" for v in row) + "\n")


def read_scene(path: "str | Path") -> SceneSpec:
    tokens = Path(path).read_text().split()
    if len(tokens) < 4:
        raise FormatError(f"{path}: missing scene header")
    try:
        width, height = int(tokens[0]), int(tokens[1])
        b_level, pulse_energy = float(tokens[2]), float(tokens[3])
        body = np.asarray([float(t) for t in tokens[4:]])
    except ValueError as exc:
        raise FormatError(f"{path}: malformed scene file") from exc
    if body.size != 2 * width * height:
        raise FormatError(
            f"{path}: expected {2 * width * height} grid values, found {body.size}"
        )
    depths = body[: width * height].reshape(height, width)
    refl = body[width * height :].reshape(height, width)
    return SceneSpec(depths=depths, reflectivity=refl, b_level=b_level, pulse_energy=pulse_energy)


@dataclass
class ImageResult:
    """Per-pixel simulation output for one engine."""

    engine: str
    depth_estimate: np.ndarray      # NaN where a pixel registered no photon
    valid: np.ndarray
    batches: "list[TimestampBatch]"  # row-major pixel order
    pixel_seconds: np.ndarray
    total_seconds: float

    @property
    def mean_pixel_seconds(self) -> float:
        return float(self.pixel_seconds.mean())


def simulate_image(
    scene: SceneSpec,
    sys: SystemParams,
    grid: TimeGrid,
    engine: str,
    rng: RngHandle,
    model: "AEModel | None" = None,
    ranges: EnvRanges = EnvRanges(),
) -> ImageResult:
    """Simulate every pixel independently and estimate the depth map.

    Each pixel gets its own random stream keyed by (seed, pixel index), so
    the result does not depend on traversal order.
    """
    if engine not in ENGINES:
        raise ParameterError(f"unknown engine {engine!r}; expected one of {ENGINES}")
    if engine == "fast" and model is None:
        raise ParameterError("the fast engine requires a trained model")
    h, w = scene.height, scene.width
    depth = np.full((h, w), np.nan)
    valid = np.zeros((h, w), dtype=bool)
    pixel_seconds = np.empty(h * w)
    batches: "list[TimestampBatch]" = []
    start_total = time.perf_counter()
    for idx in range(h * w):
        row, col = divmod(idx, w)
        env = scene.env_at(row, col)
        pixel_rng = rng.child(idx)
        t0 = time.perf_counter()
        if engine == "oracle":
            batch = simulate_registrations(sys, env, grid, pixel_rng).rel_times
        else:
            batch = fast_simulate(sys, env, model, grid, pixel_rng, ranges)
        pixel_seconds[idx] = time.perf_counter() - t0
        batches.append(batch)
        if batch.count:
            depth[row, col] = estimate_depth(batch)
            valid[row, col] = True
    total = time.perf_counter() - start_total
    return ImageResult(
        engine=engine,
        depth_estimate=depth,
        valid=valid,
        batches=batches,
        pixel_seconds=pixel_seconds,
        total_seconds=total,
    )


def ramp_scene(
    width: int,
    height: int,
    tau_range: "tuple[float, float]" = (2.0, 6.0),
    reflectivity: float = 1.0,
    b_level: float = 1.0,
    pulse_energy: float = 2.0,
) -> SceneSpec:
    """Synthetic left-to-right depth ramp used by the demo and benchmarks."""
    lo, hi = tau_range
    col_depths = np.linspace(lo, hi, width)
    depths = np.tile(col_depths, (height, 1))
    return SceneSpec(
        depths=depths,
        reflectivity=reflectivity,
        b_level=b_level,
        pulse_energy=pulse_energy,
    )


def write_depth_csv(depth: np.ndarray, path: "str | Path") -> None:
    np.savetxt(path, depth, fmt="%.17g", delimiter=",")
