"""Command-line interface: train, eval, sample, diag, render.

Every subcommand is deterministic given its flags and seeds. Structured
output goes to stdout as JSON records; human-facing errors go to stderr.
Exit codes: 0 success, 1 failed checks or I/O trouble, 2 bad
configuration or usage, 3 training divergence.
"""

from __future__ import annotations

import argparse
import json
import sys

from .config import ConfigError, apply_overrides, load_config
from .datasets import load_csv, sample_data, sample_noise, save_csv
from .diagnostics import battery
from .generator import TrainingDiverged, forward
from .rng import Stream, derive_seed
from .trainer import STREAM_METRICS, evaluate, load_checkpoint, train_run

STREAM_SAMPLE = 4
STREAM_RENDER = 5


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="driftlab",
        description="Drift-field generative training on 2D toy distributions.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="run a training loop from a config file")
    p.add_argument("--config", required=True, help="path to a JSON run config")
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                   help="override a config field, e.g. --set plan.k=1")
    p.add_argument("--resume", default=None, metavar="CKPT",
                   help="checkpoint to continue from (same config)")
    p.add_argument("--no-render", action="store_true", help="skip the end-of-run figures")

    p = sub.add_parser("eval", help="metrics for a checkpoint against fresh data")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--size", type=int, default=4096, help="samples per side")
    p.add_argument("--seed", type=int, default=0, help="evaluation seed")
    p.add_argument("--projections", type=int, default=128)
    p.add_argument("--live", action="store_true", help="use live weights instead of the EMA")
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                   help="override the checkpoint's config (e.g. dataset fields)")

    p = sub.add_parser("sample", help="draw generator samples to CSV")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--count", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output CSV path")
    p.add_argument("--live", action="store_true", help="use live weights instead of the EMA")

    p = sub.add_parser("diag", help="run the drift-identity check battery")
    p.add_argument("--seed", type=int, default=2026)
    p.add_argument("--kernel-sign", choices=("decay", "grow"), default="decay",
                   help="'grow' demonstrates the broken sign choice")

    p = sub.add_parser("render", help="scatter samples (and data) to a PNG")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--samples", help="CSV of points to plot")
    src.add_argument("--checkpoint", help="sample a checkpointed generator instead")
    p.add_argument("--data", default=None, help="optional CSV of reference points")
    p.add_argument("--out", required=True, help="output PNG path")
    p.add_argument("--bounds", default=None, metavar="X0,X1,Y0,Y1",
                   help="plot window; default fits the points")
    p.add_argument("--resolution", type=int, default=800, help="image side in pixels")
    p.add_argument("--count", type=int, default=4096, help="samples drawn from a checkpoint")
    p.add_argument("--seed", type=int, default=0)
    return parser


def _cmd_train(args) -> int:
    config = load_config(args.config)
    if args.set:
        config = apply_overrides(config, args.set)
    _, records = train_run(config, resume_from=args.resume, render=not args.no_render)
    final = records[-1] if records else {}
    print(json.dumps({"out_dir": config.out_dir, "steps": config.steps, "final": final}))
    return 0


def _eval_params(state, use_ema: bool):
    return state.ema.as_params(state.params) if use_ema else state.params


def _cmd_eval(args) -> int:
    state, config = load_checkpoint(args.checkpoint)
    overrides = list(args.set)
    overrides += [f"eval_size={args.size}", f"projections={args.projections}"]
    overrides += ["eval_use_ema=false"] if args.live else ["eval_use_ema=true"]
    config = apply_overrides(config, overrides)
    state.metrics_stream = Stream(derive_seed(args.seed, STREAM_METRICS))
    record = {"step": state.step, "seed": args.seed}
    record.update(evaluate(state, config))
    print(json.dumps(record))
    return 0


def _cmd_sample(args) -> int:
    if args.count < 1:
        raise ConfigError(f"--count must be >= 1, got {args.count}")
    state, config = load_checkpoint(args.checkpoint)
    stream = Stream(derive_seed(args.seed, STREAM_SAMPLE))
    noise = sample_noise(config.noise_dim, args.count, stream)
    points = forward(_eval_params(state, not args.live), noise)
    save_csv(args.out, points)
    print(json.dumps({"out": args.out, "count": args.count, "seed": args.seed}))
    return 0


def _cmd_diag(args) -> int:
    records = battery(args.seed, kernel_sign=args.kernel_sign)
    for rec in records:
        print(json.dumps(rec))
    failures = [r for r in records if not r["ok"]]
    if failures:
        print(
            f"{len(failures)} check(s) failed: "
            + ", ".join(f"{r['check']}[{r['detail']}] gap={r['gap']:.3e}" for r in failures),
            file=sys.stderr,
        )
        return 1
    return 0


def _parse_bounds(text: str | None):
    if text is None:
        return None
    parts = text.split(",")
    if len(parts) != 4:
        raise ConfigError(f"--bounds needs X0,X1,Y0,Y1, got {text!r}")
    return tuple(float(v) for v in parts)


def _cmd_render(args) -> int:
    from .render import render_scatter

    classes = []
    if args.checkpoint:
        state, config = load_checkpoint(args.checkpoint)
        stream = Stream(derive_seed(args.seed, STREAM_RENDER))
        noise = sample_noise(config.noise_dim, args.count, stream)
        generated = forward(_eval_params(state, True), noise)
        data = sample_data(config.dataset, args.count, stream)
        classes = [("data", data), ("generated", generated)]
    else:
        classes = [("samples", load_csv(args.samples))]
    if args.data is not None:
        classes.append(("data", load_csv(args.data)))
    footer = render_scatter(args.out, classes, _parse_bounds(args.bounds), args.resolution)
    print(json.dumps({"out": args.out, **footer}))
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    handlers = {
        "train": _cmd_train,
        "eval": _cmd_eval,
        "sample": _cmd_sample,
        "diag": _cmd_diag,
        "render": _cmd_render,
    }
    try:
        return handlers[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except TrainingDiverged as exc:
        print(f"training diverged: {exc}", file=sys.stderr)
        return 3
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
