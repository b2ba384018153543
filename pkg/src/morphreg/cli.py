"""Command-line front end: registration runs, forward shooting, scheme comparison.

stdout carries exactly one machine-readable JSON summary per invocation;
human-oriented diagnostics go to stderr.  Exit codes: 0 success, 1 I/O or
geometry problems, 2 integrator divergence at the accepted optimum, 3 line
search failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import datetime
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .fields import FieldError, ScalarField
from .image_io import (
    ImageFormatError,
    load_momentum,
    read_image,
    render_deformation_grid,
    save_momentum,
    write_image,
    write_momentum_heatmap,
)
from .integrator import (
    GeodesicTrajectory,
    IntegrationDiverged,
    Scheme,
    ShootingConfig,
    path_energy,
    shoot,
)
from .kernel import GaussianKernel
from .objective import RegistrationProblem, cost
from .optimizer import (
    OptimizeConfig,
    Termination,
    default_init,
    optimize,
)
from .synthetic import PRESETS, preset_pair

METRICS_HEADER = "iteration,total,data_term,v_norm,z_norm,step_size"


def _fail(code: int, kind: str, msg: str) -> int:
    print(f"morphreg: error={code} kind={kind} msg={msg}", file=sys.stderr)
    return code


def _emit(summary: dict) -> None:
    print(json.dumps(summary, sort_keys=True))


def _write_metrics(path: Path, history, step_sizes) -> None:
    lines = [METRICS_HEADER]
    for it, (rep, step) in enumerate(zip(history, step_sizes)):
        lines.append(
            f"{it},{rep.total!r},{rep.data_term!r},{rep.v_norm!r},"
            f"{rep.z_norm!r},{step!r}"
        )
    path.write_text("\n".join(lines) + "\n")


def _write_manifest(path: Path, command: str, params: dict, extra: dict) -> None:
    manifest = {
        "tool": "morphreg",
        "version": __version__,
        "created": datetime.datetime.now(datetime.timezone.utc).isoformat(),
        "command": command,
        "params": params,
        **extra,
    }
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def _save_trajectory_frames(
    traj: GeodesicTrajectory, out: Path, save_all: bool, vmax: float
) -> int:
    n = len(traj.states) - 1
    indices = range(n + 1) if save_all else (0, n)
    count = 0
    for k in sorted(set(indices)):
        state = traj.states[k]
        write_image(state.image, out / f"frame_{k:03d}.pgm")
        write_momentum_heatmap(
            state.momentum.values, out / f"momentum_{k:03d}.png", vmax
        )
        count += 1
    render_deformation_grid(traj.deformation, out / "grid_t1.png")
    return count


def _total_variation(a: np.ndarray) -> float:
    return float(np.sum(np.abs(np.diff(a, axis=0))) + np.sum(np.abs(np.diff(a, axis=1))))


# --- register ---------------------------------------------------------------


def _register_params(args) -> dict:
    if args.replay:
        manifest = json.loads(Path(args.replay).read_text())
        if manifest.get("command") != "register":
            raise FieldError(f"{args.replay}: not a register manifest")
        return manifest["params"]
    return {
        "source": args.source,
        "target": args.target,
        "synthetic": args.synthetic,
        "size": args.size,
        "scheme": args.scheme,
        "steps": args.steps,
        "mu": args.mu,
        "rho": args.rho,
        "lambda": args.lam,
        "sigma": args.sigma,
        "max_iters": args.max_iters,
        "save_frames": args.save_frames,
        "seed": args.seed,
    }


def _load_pair(params) -> tuple[ScalarField, ScalarField]:
    if params["synthetic"]:
        return preset_pair(params["synthetic"], params["size"])
    if not params["source"] or not params["target"]:
        raise FieldError("need SOURCE and TARGET paths or --synthetic PRESET")
    return read_image(params["source"]), read_image(params["target"])


def cmd_register(args) -> int:
    try:
        params = _register_params(args)
        source, target = _load_pair(params)
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        cfg = ShootingConfig(
            scheme=Scheme(params["scheme"]),
            n_steps=params["steps"],
            mu=params["mu"],
            kernel=GaussianKernel(params["sigma"]),
        )
        problem = RegistrationProblem(
            source=source,
            target=target,
            lam=params["lambda"],
            rho=params["rho"],
            cfg=cfg,
        )
    except (FieldError, ImageFormatError, OSError, json.JSONDecodeError) as exc:
        return _fail(1, type(exc).__name__, str(exc))
    result = optimize(
        problem, default_init(problem), OptimizeConfig(max_iters=params["max_iters"])
    )

    _write_metrics(out / "metrics.csv", result.history, result.step_sizes)
    save_momentum(result.z0, out / "z0.npy")
    # lossless copies so a later `shoot` replays the exact run
    np.save(out / "source.npy", source.values)
    np.save(out / "target.npy", target.values)
    final = result.history[-1]
    _write_manifest(
        out / "manifest.json",
        "register",
        params,
        {
            "termination": result.termination.value,
            "iterations": len(result.history) - 1,
            "initial_total": result.history[0].total,
            "final": dataclasses.asdict(final),
        },
    )

    if result.termination is Termination.LINE_SEARCH_FAILURE:
        return _fail(3, "LineSearchFailure", "no Armijo step accepted after 40 backtracks")

    try:
        traj = shoot(source, result.z0, cfg)
    except IntegrationDiverged as exc:
        return _fail(2, "IntegrationDiverged", str(exc))
    vmax = float(np.max(np.abs(result.z0.values)))
    frames = _save_trajectory_frames(traj, out, params["save_frames"], vmax)

    _emit(
        {
            "command": "register",
            "termination": result.termination.value,
            "iterations": len(result.history) - 1,
            "total": final.total,
            "data_term": final.data_term,
            "frames": frames,
            "out": str(out),
        }
    )
    return 0


# --- shoot ------------------------------------------------------------------


def _load_field(path: str) -> ScalarField:
    if str(path).endswith(".npy"):
        return load_momentum(path)
    return read_image(path)


def cmd_shoot(args) -> int:
    try:
        z0 = load_momentum(args.z0)
        image = _load_field(args.image)
        if z0.geometry != image.geometry:
            raise FieldError(
                f"momentum {z0.geometry.shape} vs image {image.geometry.shape}"
            )
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
    except (FieldError, ImageFormatError, OSError) as exc:
        return _fail(1, type(exc).__name__, str(exc))

    cfg = ShootingConfig(
        scheme=Scheme(args.scheme),
        n_steps=args.steps,
        mu=args.mu,
        kernel=GaussianKernel(args.sigma),
    )
    try:
        traj = shoot(image, z0, cfg)
    except IntegrationDiverged as exc:
        return _fail(2, "IntegrationDiverged", str(exc))

    energies = path_energy(traj, cfg.kernel, args.rho)
    lines = ["step,t,energy,max_abs_z"]
    for k, (state, e) in enumerate(zip(traj.states, energies)):
        lines.append(
            f"{k},{state.t!r},{e!r},{float(np.max(np.abs(state.momentum.values)))!r}"
        )
    (out / "energy.csv").write_text("\n".join(lines) + "\n")

    vmax = float(np.max(np.abs(z0.values)))
    frames = _save_trajectory_frames(traj, out, args.save_frames, vmax)
    _write_manifest(
        out / "manifest.json",
        "shoot",
        {
            "z0": args.z0,
            "image": args.image,
            "scheme": args.scheme,
            "steps": args.steps,
            "mu": args.mu,
            "rho": args.rho,
            "sigma": args.sigma,
            "save_frames": args.save_frames,
        },
        {"energy_t0": energies[0], "energy_t1": energies[-1]},
    )
    _emit(
        {
            "command": "shoot",
            "frames": frames,
            "energy_t0": energies[0],
            "energy_t1": energies[-1],
            "out": str(out),
        }
    )
    return 0


# --- compare-schemes --------------------------------------------------------


def _warmup_momentum(args) -> tuple[ScalarField, ScalarField]:
    """Momentum for the stability experiment.

    Either loaded from disk, or produced by a deformation-only (mu = 0)
    optimization of a disk toward the C image, as in the figure-style setup.
    """
    if args.z0:
        boost = 1.0 if args.boost is None else args.boost
        z0 = load_momentum(args.z0)
        if boost != 1.0:
            z0 = ScalarField(z0.geometry, boost * z0.values)
        return z0, _load_field(args.image)
    source, target = preset_pair("disk2c", args.size)
    cfg = ShootingConfig(
        scheme=Scheme.SEMI_LAGRANGIAN,
        n_steps=args.steps_sl,
        mu=0.0,
        kernel=GaussianKernel(args.sigma),
    )
    problem = RegistrationProblem(
        source=source, target=target, lam=args.lam, rho=1.0, cfg=cfg
    )
    result = optimize(
        problem,
        default_init(problem),
        OptimizeConfig(max_iters=args.warmup_iters, init_step=args.warmup_step),
    )
    # amplify slightly so the run sits just past the Eulerian stability margin
    boost = 1.12 if args.boost is None else args.boost
    return ScalarField(result.z0.geometry, boost * result.z0.values), source


def cmd_compare_schemes(args) -> int:
    try:
        if not args.z0 and not args.synthetic:
            raise FieldError("need --synthetic PRESET or --z0/--image")
        if args.z0 and not args.image:
            raise FieldError("--z0 requires --image")
        z0, image = _warmup_momentum(args)
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
    except (FieldError, ImageFormatError, OSError) as exc:
        return _fail(1, type(exc).__name__, str(exc))

    save_momentum(z0, out / "z0.npy")
    z0_max = float(np.max(np.abs(z0.values)))
    runs = {
        "eulerian": (Scheme.EULERIAN, args.steps_eulerian),
        "semi-lagrangian": (Scheme.SEMI_LAGRANGIAN, args.steps_sl),
        "hybrid": (Scheme.HYBRID, args.steps_sl),
    }
    results = {}
    for name, (scheme, steps) in runs.items():
        cfg = ShootingConfig(
            scheme=scheme, n_steps=steps, mu=args.mu, kernel=GaussianKernel(args.sigma)
        )
        diverged = False
        lines = ["step,t,max_abs_z"]
        peak = z0_max
        tv_final = None
        try:
            traj = shoot(image, z0, cfg)
        except IntegrationDiverged as exc:
            diverged = True
            print(f"morphreg: note scheme={name} {exc}", file=sys.stderr)
        else:
            for k, state in enumerate(traj.states):
                zmax = float(np.max(np.abs(state.momentum.values)))
                peak = max(peak, zmax)
                lines.append(f"{k},{state.t!r},{zmax!r}")
            tv_final = _total_variation(traj.states[-1].momentum.values)
            write_image(traj.final_image, out / f"final_{name}.pgm")
            write_momentum_heatmap(
                traj.states[-1].momentum.values, out / f"zfinal_{name}.png", z0_max
            )
            render_deformation_grid(traj.deformation, out / f"grid_{name}.png")
        (out / f"growth_{name}.csv").write_text("\n".join(lines) + "\n")
        results[name] = (diverged, peak, tv_final, steps)

    # the semi-Lagrangian momentum is the smooth reference for the ripple test
    tv_sl = results["semi-lagrangian"][2]
    verdicts = {}
    for name, (diverged, peak, tv_final, steps) in results.items():
        ratio = 1.0 if z0_max == 0 else peak / z0_max
        tv_ratio = None
        if tv_final is not None and tv_sl:
            tv_ratio = tv_final / tv_sl
        rippled = name != "semi-lagrangian" and tv_ratio is not None and tv_ratio > 3.0
        if diverged or ratio > 10.0 or rippled:
            status = "unstable"
        elif ratio < 2.0:
            status = "stable"
        else:
            status = "marginal"
        verdicts[name] = {
            "status": status,
            "growth_ratio": ratio,
            "tv_final": tv_final,
            "tv_ratio_vs_sl": tv_ratio,
            "diverged": diverged,
            "steps": steps,
        }

    _write_manifest(
        out / "manifest.json",
        "compare-schemes",
        {
            "synthetic": args.synthetic,
            "z0": args.z0,
            "image": args.image,
            "size": args.size,
            "sigma": args.sigma,
            "mu": args.mu,
            "lambda": args.lam,
            "steps_eulerian": args.steps_eulerian,
            "steps_sl": args.steps_sl,
            "warmup_iters": args.warmup_iters,
            "warmup_step": args.warmup_step,
            "boost": args.boost,
            "seed": args.seed,
        },
        {"verdicts": verdicts},
    )
    (out / "verdict.json").write_text(json.dumps(verdicts, indent=2, sort_keys=True) + "\n")
    _emit({"command": "compare-schemes", "verdicts": verdicts, "out": str(out)})
    return 0


# --- argument parsing -------------------------------------------------------


def _add_common_shoot_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument(
        "--scheme",
        choices=[s.value for s in Scheme],
        default=Scheme.SEMI_LAGRANGIAN.value,
    )
    p.add_argument("--steps", type=int, default=20)
    p.add_argument("--mu", type=float, default=0.0)
    p.add_argument("--sigma", type=float, default=6.0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="morphreg",
        description="2D diffeomorphic and metamorphic image registration",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    reg = sub.add_parser("register", help="optimize an initial momentum")
    reg.add_argument("source", nargs="?", default=None)
    reg.add_argument("target", nargs="?", default=None)
    reg.add_argument("--synthetic", choices=PRESETS, default=None)
    reg.add_argument("--size", type=int, default=200)
    _add_common_shoot_flags(reg)
    reg.add_argument("--rho", type=float, default=1.0)
    reg.add_argument("--lambda", dest="lam", type=float, default=1e-4)
    reg.add_argument("--max-iters", type=int, default=50)
    reg.add_argument("--save-frames", action="store_true")
    reg.add_argument("--seed", type=int, default=0)
    reg.add_argument("--replay", default=None, help="re-run a saved manifest")
    reg.add_argument("--out", required=True)
    reg.set_defaults(func=cmd_register)

    sht = sub.add_parser("shoot", help="forward geodesic shooting only")
    sht.add_argument("z0", help="initial momentum (.npy)")
    sht.add_argument("image", help="initial image (PGM/PNG)")
    _add_common_shoot_flags(sht)
    sht.add_argument("--rho", type=float, default=1.0)
    sht.add_argument("--save-frames", action="store_true")
    sht.add_argument("--out", required=True)
    sht.set_defaults(func=cmd_shoot)

    cmp = sub.add_parser(
        "compare-schemes", help="stability comparison of the three schemes"
    )
    cmp.add_argument("--synthetic", choices=PRESETS, default=None)
    cmp.add_argument("--z0", default=None)
    cmp.add_argument("--image", default=None)
    cmp.add_argument("--size", type=int, default=200)
    cmp.add_argument("--sigma", type=float, default=4.0)
    cmp.add_argument("--mu", type=float, default=0.0)
    cmp.add_argument("--lambda", dest="lam", type=float, default=3e-5)
    cmp.add_argument("--steps-eulerian", type=int, default=38)
    cmp.add_argument("--steps-sl", type=int, default=20)
    cmp.add_argument("--warmup-iters", type=int, default=20)
    cmp.add_argument("--warmup-step", type=float, default=3.0)
    cmp.add_argument(
        "--boost",
        type=float,
        default=None,
        help="momentum scale applied before shooting "
        "(default: 1.12 after a synthetic warmup, 1.0 for --z0)",
    )
    cmp.add_argument("--seed", type=int, default=0)
    cmp.add_argument("--out", required=True)
    cmp.set_defaults(func=cmd_compare_schemes)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
