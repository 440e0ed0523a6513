"""Command-line interface: train, curvature, bridge, eval, plot."""

from __future__ import annotations

import argparse
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np

from .analysis import curvature_profile, empirical_w2, sdr
from .config import apply_overrides, dump_config, load_config
from .exceptions import (
    CheckpointError,
    ConfigError,
    CsvFormatError,
    DivergenceError,
    TrainingDivergedError,
    ValidationError,
)
from .nn.checkpoint import load_checkpoint, save_checkpoint
from .nn.model import ModelConfig
from .sampler import gfb_transfer, integrate, schedule_raised_cosine, schedule_uniform
from .signalio import load_signals, read_csv, save_signals, write_csv
from .svgplot import PALETTE, SvgFigure
from .tasks import TaskSpec, gen_cond_ring, gen_eight_gaussians, gen_two_moons, gen_checkerboard, make_training_stream
from .training import TrainConfig, train

__all__ = ["main"]


def _build_schedule(name: str, steps: int):
    if name == "raised_cosine":
        return schedule_raised_cosine(steps)
    if name == "uniform":
        return schedule_uniform(steps)
    raise ConfigError(f"unknown schedule {name!r}")


def _section(cfg: dict, name: str) -> dict:
    value = cfg.get(name, {})
    if not isinstance(value, dict):
        raise ConfigError(f"config section {name!r} must be an object")
    return dict(value)


def _cmd_train(args) -> int:
    cfg = load_config(args.config)
    cfg = apply_overrides(cfg, args.set or [])
    if args.seed is not None:
        cfg["seed"] = args.seed

    task_raw = _section(cfg, "task")
    try:
        task = TaskSpec(**task_raw)
    except TypeError as exc:
        raise ConfigError(f"task section: {exc}") from exc
    model_raw = _section(cfg, "model")
    for key in ("signal_length", "cond_dim"):
        if key in model_raw:
            raise ConfigError(f"model.{key} is derived from the task; remove it")
    try:
        model_cfg = ModelConfig(signal_length=task.n, cond_dim=task.cond_dim, **model_raw)
    except TypeError as exc:
        raise ConfigError(f"model section: {exc}") from exc
    train_raw = _section(cfg, "train")
    train_raw.setdefault("seed", int(cfg.get("seed", 0)))
    try:
        train_cfg = TrainConfig(**train_raw)
    except TypeError as exc:
        raise ConfigError(f"train section: {exc}") from exc

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    result = train(model_cfg, task, train_cfg)
    extra = {"task": asdict(task), "train": asdict(train_cfg)}
    ckpt = out / "model.fbc"
    save_checkpoint(ckpt, result.model, optimizer=result.optimizer, extra=extra)
    write_csv(out / "loss.csv", ["iteration", "loss"], result.history)
    dump_config(cfg, out / "config.json")
    print(
        f"trained {train_cfg.iterations} iterations on {task.family} "
        f"({train_cfg.coupling}); final loss {result.final_loss:.6g}"
    )
    print(f"checkpoint: {ckpt}")
    return 0


def _cmd_curvature(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rows = []
    fig = SvgFigure(title="trajectory curvature", xlabel="flow time", ylabel="curvature")
    schedule = _build_schedule(args.schedule, args.steps)
    for i, ckpt_path in enumerate(args.checkpoint):
        model, _, extra = load_checkpoint(ckpt_path)
        label = Path(ckpt_path).stem if len(args.checkpoint) == 1 else Path(ckpt_path).parent.name
        rng = np.random.default_rng(args.seed)
        z = rng.standard_normal((args.samples, model.config.signal_length)).astype(
            model.config.np_dtype
        )
        traj = integrate(model, z, schedule, direction="backward", method=args.method)
        prof = curvature_profile([traj])
        for tau, mean, p25, p75 in zip(prof.taus, prof.mean, prof.p25, prof.p75):
            rows.append((label, tau, mean, p25, p75))
        color = PALETTE[i % len(PALETTE)]
        fig.band(prof.taus, prof.p25, prof.p75, color=color)
        fig.line(prof.taus, prof.mean, color=color, label=label)
        print(f"{label}: time-averaged mean curvature {prof.time_average:.6g}")
    write_csv(out / "curvature.csv", ["model", "tau", "mean", "p25", "p75"], rows)
    fig.save(out / "curvature.svg")
    return 0


def _parse_condition(text: str | None, batch: int, cond_dim: int):
    if text is None:
        return None
    values = np.array([float(v) for v in text.split(",")], dtype=np.float32)
    if values.shape[0] != cond_dim:
        raise ConfigError(
            f"condition has {values.shape[0]} values, model expects {cond_dim}"
        )
    return np.tile(values[None, :], (batch, 1))


def _cmd_bridge(args) -> int:
    model, _, _ = load_checkpoint(args.checkpoint)
    values, fs = load_signals(args.input)
    if values.shape[1] != model.config.signal_length:
        raise ValidationError(
            f"input length {values.shape[1]} != model signal length "
            f"{model.config.signal_length}"
        )
    condition = _parse_condition(args.condition, values.shape[0], model.config.cond_dim)
    schedule = _build_schedule(args.schedule, args.steps)
    result = gfb_transfer(
        model, values.astype(model.config.np_dtype), schedule, condition,
        gamma=args.gamma, method=args.method,
    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    save_signals(out / "output.fbs", result.output.astype(np.float32), fs=fs)
    save_signals(out / "latent.fbs", result.latent.astype(np.float32), fs=fs)
    disp = np.linalg.norm(result.output - values, axis=1)
    rel = disp / np.maximum(np.linalg.norm(values, axis=1), 1e-12)
    print(
        f"bridged {values.shape[0]} signals (gamma={args.gamma:g}, steps={args.steps}); "
        f"median relative displacement {float(np.median(rel)):.4g}"
    )
    print(f"output: {out / 'output.fbs'}")
    return 0


def _eval_planar(model, extra, gamma, schedule, method, samples, rng):
    family = extra["task"]["family"]
    n = model.config.signal_length
    z = rng.standard_normal((samples, n)).astype(model.config.np_dtype)
    if family == "cond_ring":
        ref, cond = gen_cond_ring(samples, rng)
        traj = integrate(
            model, z, schedule, direction="backward", method=method,
            condition=cond, gamma=gamma,
        )
    else:
        draw = {
            "two_moons": gen_two_moons,
            "checkerboard": gen_checkerboard,
            "eight_gaussians": gen_eight_gaussians,
        }[family]
        ref = draw(samples, rng)
        traj = integrate(model, z, schedule, direction="backward", method=method)
    return empirical_w2(traj.final.astype(np.float64), ref.astype(np.float64))


def _eval_signal(model, extra, gamma, schedule, method, samples, rng):
    task = TaskSpec(**extra["task"])
    stream = make_training_stream(task, samples, rng)
    batch = next(stream)
    result = gfb_transfer(
        model, batch.values.astype(model.config.np_dtype), schedule,
        batch.condition, gamma=gamma, method=method,
    )
    scores = [sdr(batch.values[i], result.output[i]) for i in range(samples)]
    return float(np.mean(scores))


def _cmd_eval(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    gammas = [float(g) for g in args.gammas.split(",")]
    schedule = _build_schedule(args.schedule, args.steps)
    rows = []
    for ckpt_path in args.checkpoint:
        model, _, extra = load_checkpoint(ckpt_path)
        if "task" not in extra:
            raise CheckpointError(f"{ckpt_path}: checkpoint lacks task metadata")
        family = extra["task"]["family"]
        chunk = extra.get("train", {}).get("chunk_size")
        coupling = extra.get("train", {}).get("coupling", "")
        label = Path(ckpt_path).parent.name
        for gamma in gammas:
            rng = np.random.default_rng(args.seed)
            if family == "toy_signal":
                metric, value = "round_trip_sdr", _eval_signal(
                    model, extra, gamma, schedule, args.method, args.samples, rng
                )
            else:
                metric, value = "w2", _eval_planar(
                    model, extra, gamma, schedule, args.method, args.samples, rng
                )
            rows.append((label, coupling, "" if chunk is None else chunk, gamma, metric, value))
            print(f"{label} gamma={gamma:g}: {metric}={value:.6g}")
    write_csv(
        out / "eval.csv",
        ["model", "coupling", "chunk_size", "gamma", "metric", "value"],
        rows,
    )
    return 0


def _cmd_plot(args) -> int:
    header, rows = read_csv(args.input)
    for col in [args.x, *args.y]:
        if col not in header:
            raise ConfigError(f"column {col!r} not in {header}")
    xi = header.index(args.x)
    fig = SvgFigure(title=Path(args.input).stem, xlabel=args.x, ylabel=",".join(args.y))
    if args.group and args.group in header:
        gi = header.index(args.group)
        groups = sorted({r[gi] for r in rows})
    else:
        gi, groups = None, [None]
    color_idx = 0
    for group in groups:
        sel = rows if gi is None else [r for r in rows if r[gi] == group]
        xs = [float(r[xi]) for r in sel]
        for col in args.y:
            yi = header.index(col)
            ys = [float(r[yi]) for r in sel]
            label = col if group is None else f"{group}:{col}" if len(args.y) > 1 else group
            fig.line(xs, ys, color=PALETTE[color_idx % len(PALETTE)], label=label)
            color_idx += 1
    fig.save(args.out)
    print(f"wrote {args.out}")
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="flowbridge",
        description="Flow-matching bridges with chunked minibatch OT couplings.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train a model from a JSON config")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--set", action="append", metavar="KEY=VALUE")
    p.set_defaults(fn=_cmd_train)

    p = sub.add_parser("curvature", help="measure sampling-trajectory curvature")
    p.add_argument("--checkpoint", action="append", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--samples", type=int, default=64)
    p.add_argument("--steps", type=int, default=25)
    p.add_argument("--method", default="euler", choices=["euler", "midpoint"])
    p.add_argument("--schedule", default="raised_cosine", choices=["raised_cosine", "uniform"])
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(fn=_cmd_curvature)

    p = sub.add_parser("bridge", help="encode signals and decode them under a condition")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--gamma", type=float, default=1.0)
    p.add_argument("--steps", type=int, default=25)
    p.add_argument("--method", default="euler", choices=["euler", "midpoint"])
    p.add_argument("--schedule", default="raised_cosine", choices=["raised_cosine", "uniform"])
    p.add_argument("--condition", default=None, help="comma-separated descriptor values")
    p.set_defaults(fn=_cmd_bridge)

    p = sub.add_parser("eval", help="score checkpoints over a guidance sweep")
    p.add_argument("--checkpoint", action="append", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--gammas", default="0,0.5,1,1.5,2")
    p.add_argument("--samples", type=int, default=512)
    p.add_argument("--steps", type=int, default=25)
    p.add_argument("--method", default="euler", choices=["euler", "midpoint"])
    p.add_argument("--schedule", default="raised_cosine", choices=["raised_cosine", "uniform"])
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(fn=_cmd_eval)

    p = sub.add_parser("plot", help="render a CSV table to an SVG chart")
    p.add_argument("--input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--x", required=True)
    p.add_argument("--y", action="append", required=True)
    p.add_argument("--group", default=None)
    p.set_defaults(fn=_cmd_plot)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except TrainingDivergedError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except DivergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ConfigError, ValidationError, CheckpointError, CsvFormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
