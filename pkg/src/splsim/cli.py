"""Unified command-line entry point.

Subcommands: gen-dataset, train, simulate, estimate-count, benchmark,
plot-data, depth-demo. Exit codes: 0 ok, 2 usage, 3 validation error,
4 runtime failure.
"""

from __future__ import annotations

import argparse
import sys as _sys
from pathlib import Path

from . import bench as bench_mod
from .arrival import RngHandle, write_times_binary, write_times_csv
from .config import merge_settings
from .core import (
    DegenerateDistributionError,
    EnvParams,
    FormatError,
    NoPhotonError,
    ParameterError,
    SystemParams,
    TimeGrid,
)
from .count_model import estimate_count
from .dataset import generate_dataset, read_dataset, write_dataset
from .fast_sim import (
    ramp_scene,
    read_scene,
    simulate_image,
    write_depth_csv,
    write_scene,
)
from .oracle import empirical_pdf, simulate_registrations
from .pdf_net import (
    TrainConfig,
    build_model,
    load_model,
    predict_pdf,
    save_model,
    train,
)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_VALIDATION = 3
EXIT_RUNTIME = 4

FULL_SCALE_SAMPLES = 11_000
FULL_SCALE_BINS = 1024
FULL_SCALE_EPOCHS = 5000


def _common_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--config", type=Path, help="key=value parameter file")
    p.add_argument("--seed", type=int, help="random seed")
    p.add_argument("--bins", type=int, help="time grid resolution K")
    p.add_argument("--out", type=Path, help="output file or directory")
    for flag, key in (
        ("--t-r", "t_r"),
        ("--t-d", "t_d"),
        ("--sigma-t", "sigma_t"),
        ("--tau", "tau"),
        ("--s-level", "s_level"),
        ("--b-level", "b_level"),
    ):
        p.add_argument(flag, dest=key, type=float)
    p.add_argument("--n-cycles", dest="n_cycles", type=int)
    return p


def _settings(args) -> dict:
    overrides = {
        key: getattr(args, key, None)
        for key in ("t_r", "t_d", "sigma_t", "n_cycles", "tau", "s_level", "b_level", "seed")
    }
    overrides["n_bins"] = getattr(args, "bins", None)
    return merge_settings(args.config, overrides)


def _sys_params(s: dict) -> SystemParams:
    return SystemParams(
        t_r=s["t_r"], t_d=s["t_d"], sigma_t=s["sigma_t"], n_cycles=s["n_cycles"]
    )


def _env_params(s: dict) -> EnvParams:
    return EnvParams(tau=s["tau"], s_level=s["s_level"], b_level=s["b_level"])


def _grid(s: dict) -> TimeGrid:
    return TimeGrid(n_bins=s["n_bins"], t_r=s["t_r"])


def _require_out(args, what="--out") -> Path:
    if args.out is None:
        raise ParameterError(f"{what} is required for this subcommand")
    return args.out


def cmd_gen_dataset(args) -> int:
    s = _settings(args)
    if args.full_scale:
        n_samples, n_bins = FULL_SCALE_SAMPLES, FULL_SCALE_BINS
    else:
        n_samples = args.n
        n_bins = s["n_bins"] if args.bins is not None else args.dataset_bins
    out = _require_out(args)
    sys_p = _sys_params(s)
    ds = generate_dataset(
        sys_p,
        TimeGrid(n_bins=n_bins, t_r=sys_p.t_r),
        n_samples=n_samples,
        n_realizations=args.realizations,
        seed=s["seed"],
    )
    write_dataset(ds, out)
    print(f"wrote {n_samples} pairs at K={n_bins} to {out}")
    return EXIT_OK


def cmd_train(args) -> int:
    s = _settings(args)
    out = _require_out(args)
    ds = read_dataset(args.dataset)
    train_x, train_y = ds.arrays("train")
    test_x, test_y = ds.arrays("test")
    epochs = FULL_SCALE_EPOCHS if args.full_scale else args.epochs
    cfg = TrainConfig(
        batch_size=args.batch_size,
        epochs=epochs,
        learning_rate=args.lr,
        seed=s["seed"],
    )
    model = build_model(ds.grid.n_bins, input_scale=ds.grid.bin_width, seed=s["seed"])
    result = train(model, train_x, train_y, cfg, val_x=test_x, val_y=test_y)
    save_model(result.model, out)
    final_val = result.val_loss[-1][1] if result.val_loss else float("nan")
    print(
        f"trained {epochs} epochs; final train loss {result.train_loss[-1]:.6g}, "
        f"held-out loss {final_val:.6g}; model written to {out}"
    )
    return EXIT_OK


def cmd_simulate(args) -> int:
    s = _settings(args)
    out = _require_out(args)
    out.mkdir(parents=True, exist_ok=True)
    sys_p = _sys_params(s)
    rng = RngHandle(s["seed"])
    model = load_model(args.model) if args.model else None
    if args.engine == "fast" and model is None:
        raise ParameterError("--model is required with --engine fast")
    if args.scene is not None:
        scene = read_scene(args.scene)
        grid = TimeGrid(n_bins=model.n_bins if model else s["n_bins"], t_r=sys_p.t_r)
        result = simulate_image(scene, sys_p, grid, args.engine, rng, model=model)
        write_depth_csv(result.depth_estimate, out / f"depth_{args.engine}.csv")
        with open(out / f"runtime_{args.engine}.csv", "w") as fh:
            fh.write("engine,total_seconds,mean_pixel_seconds\n")
            fh.write(f"{args.engine},{result.total_seconds:.9f},{result.mean_pixel_seconds:.9f}\n")
        print(f"simulated {scene.height}x{scene.width} scene with the {args.engine} engine")
    else:
        grid = TimeGrid(n_bins=model.n_bins if model else s["n_bins"], t_r=sys_p.t_r)
        env = _env_params(s)
        if args.engine == "oracle":
            batch = simulate_registrations(sys_p, env, grid, rng).rel_times
        else:
            from .fast_sim import fast_simulate

            batch = fast_simulate(sys_p, env, model, grid, rng)
        write_times_csv(batch, out / "timestamps.csv")
        write_times_binary(batch, out / "timestamps.bin")
        print(f"wrote {batch.count} timestamps to {out}")
    return EXIT_OK


def cmd_estimate_count(args) -> int:
    s = _settings(args)
    sys_p = _sys_params(s)
    env = _env_params(s)
    if args.model:
        model = load_model(args.model)
        grid = TimeGrid(n_bins=model.n_bins, t_r=sys_p.t_r)
        from .core import build_flux

        f_r = predict_pdf(model, build_flux(sys_p, env, grid))
    else:
        grid = _grid(s)
        f_r = empirical_pdf(sys_p, env, grid, args.realizations, RngHandle(s["seed"]))
    est = estimate_count(sys_p, env, f_r)
    print("mean_r,std_r,e_loss")
    print(f"{est.mean_r:.9g},{est.std_r:.9g},{est.e_loss:.9g}")
    return EXIT_OK


def _parse_cycles(spec: str) -> "list[int]":
    try:
        cycles = [int(tok) for tok in spec.split(",") if tok]
    except ValueError as exc:
        raise ParameterError(f"bad --cycles list: {spec!r}") from exc
    if not cycles or any(c < 1 for c in cycles):
        raise ParameterError(f"--cycles must be positive integers, got {spec!r}")
    return cycles


def _run_benchmark(args):
    s = _settings(args)
    sys_p = _sys_params(s)
    model = load_model(args.model)
    grid = TimeGrid(n_bins=model.n_bins, t_r=sys_p.t_r)
    return bench_mod.run_benchmark(
        sys_p,
        _env_params(s),
        _parse_cycles(args.cycles),
        args.reps,
        model,
        grid,
        RngHandle(s["seed"]),
    )


def cmd_benchmark(args) -> int:
    out = _require_out(args)
    report = _run_benchmark(args)
    bench_mod.write_runtime_csv(report, out)
    print(f"benchmark written to {out}")
    return EXIT_OK


def cmd_plot_data(args) -> int:
    s = _settings(args)
    out = _require_out(args)
    sys_p = _sys_params(s)
    if args.kind == "count-hist":
        bench_mod.write_count_hist_csv(
            sys_p, _env_params(s), _grid(s), args.realizations, RngHandle(s["seed"]), out
        )
    elif args.kind == "pdf-compare":
        if not args.model:
            raise ParameterError("--model is required for pdf-compare")
        model = load_model(args.model)
        grid = TimeGrid(n_bins=model.n_bins, t_r=sys_p.t_r)
        env = _env_params(s)
        from .core import build_flux

        oracle_pdf = empirical_pdf(sys_p, env, grid, args.realizations, RngHandle(s["seed"]))
        predicted = predict_pdf(model, build_flux(sys_p, env, grid))
        bench_mod.write_pdf_compare_csv(oracle_pdf, predicted, out)
    else:  # runtime
        if not args.model:
            raise ParameterError("--model is required for runtime plot data")
        report = _run_benchmark(args)
        bench_mod.write_runtime_csv(report, out)
    print(f"{args.kind} data written to {out}")
    return EXIT_OK


def cmd_depth_demo(args) -> int:
    s = _settings(args)
    out = _require_out(args)
    out.mkdir(parents=True, exist_ok=True)
    sys_p = _sys_params(s)
    model = load_model(args.model)
    grid = TimeGrid(n_bins=model.n_bins, t_r=sys_p.t_r)
    scene = ramp_scene(
        args.width, args.height, b_level=s["b_level"], pulse_energy=args.pulse_energy
    )
    write_scene(scene, out / "scene.txt")
    write_depth_csv(scene.depths, out / "depth_true.csv")
    rng = RngHandle(s["seed"])
    with open(out / "runtime.csv", "w") as fh:
        fh.write("engine,total_seconds,mean_pixel_seconds\n")
        for engine in ("oracle", "fast"):
            result = simulate_image(scene, sys_p, grid, engine, rng, model=model)
            write_depth_csv(result.depth_estimate, out / f"depth_{engine}.csv")
            fh.write(
                f"{engine},{result.total_seconds:.9f},{result.mean_pixel_seconds:.9f}\n"
            )
            print(
                f"{engine}: {result.total_seconds:.3f}s total, "
                f"{result.mean_pixel_seconds * 1e3:.3f}ms per pixel"
            )
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = _common_parser()
    parser = argparse.ArgumentParser(
        prog="splsim",
        description="Single-photon LiDAR timestamp simulation toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-dataset", parents=[common], help="generate training pairs")
    p.add_argument("--n", type=int, default=2000, help="number of pairs (desk scale)")
    p.add_argument("--dataset-bins", type=int, default=256, help="grid resolution when --bins is not given")
    p.add_argument("--realizations", type=int, default=20, help="realizations averaged per label")
    p.add_argument("--full-scale", action="store_true", help="11,000 pairs at K=1024")
    p.set_defaults(func=cmd_gen_dataset)

    p = sub.add_parser("train", parents=[common], help="train the PDF mapper")
    p.add_argument("--dataset", type=Path, required=True)
    p.add_argument("--epochs", type=int, default=300)
    p.add_argument("--batch-size", type=int, default=128)
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--full-scale", action="store_true", help=f"train for {FULL_SCALE_EPOCHS} epochs")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("simulate", parents=[common], help="simulate timestamps or a scene")
    p.add_argument("--engine", choices=("oracle", "fast"), required=True)
    p.add_argument("--scene", type=Path, help="scene file; omit for a single pixel")
    p.add_argument("--model", type=Path, help="trained model (required for fast engine)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("estimate-count", parents=[common], help="registration count estimate")
    p.add_argument("--model", type=Path, help="use the network-predicted PDF")
    p.add_argument("--realizations", type=int, default=20, help="oracle realizations for f_r")
    p.set_defaults(func=cmd_estimate_count)

    p = sub.add_parser("benchmark", parents=[common], help="runtime-vs-cycles comparison")
    p.add_argument("--cycles", default="100,1000,10000", help="comma-separated cycle counts")
    p.add_argument("--reps", type=int, default=5)
    p.add_argument("--model", type=Path, required=True)
    p.set_defaults(func=cmd_benchmark)

    p = sub.add_parser("plot-data", parents=[common], help="emit figure data as CSV")
    p.add_argument("--kind", choices=("count-hist", "pdf-compare", "runtime"), required=True)
    p.add_argument("--realizations", type=int, default=5000)
    p.add_argument("--model", type=Path)
    p.add_argument("--cycles", default="100,1000,10000")
    p.add_argument("--reps", type=int, default=5)
    p.set_defaults(func=cmd_plot_data)

    p = sub.add_parser("depth-demo", parents=[common], help="two-engine depth map demo")
    p.add_argument("--width", type=int, default=24)
    p.add_argument("--height", type=int, default=16)
    p.add_argument("--pulse-energy", type=float, default=2.0)
    p.add_argument("--model", type=Path, required=True)
    p.set_defaults(func=cmd_depth_demo)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ParameterError as exc:
        print(f"splsim: invalid parameters: {exc}", file=_sys.stderr)
        return EXIT_VALIDATION
    except (DegenerateDistributionError, NoPhotonError, FormatError, OSError) as exc:
        print(f"splsim: {exc}", file=_sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    _sys.exit(main())
