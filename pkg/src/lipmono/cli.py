"""Command line interface: ``lipmono {train,evaluate,certify,audit,curve}``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import checkpoint, data, runner, verify
from .errors import LipmonoError
from .monotone import MonotoneModel

log = logging.getLogger("lipmono")


def _standardized(ckpt: checkpoint.Checkpoint, X: np.ndarray) -> np.ndarray:
    mean = ckpt.meta_floats("input_mean")
    scale = ckpt.meta_floats("input_scale")
    if mean is None:
        return X
    return (X - mean) / scale


def _load_data(ckpt: checkpoint.Checkpoint, ref: str, data_dir: str | None, seed: int = 0) -> data.Dataset:
    recipe = data.resolve_recipe(ref)
    ds = data.load(recipe, data_dir, seed=seed)
    names = ckpt.meta.get("feature_names")
    if names and names.split(",") != ds.feature_names:
        raise LipmonoError(f"dataset columns {ds.feature_names} differ from the checkpoint's {names.split(',')}")
    return ds


def cmd_train(args) -> int:
    cfg = runner.load_run_config(args.config)
    if args.output_dir:
        cfg.output_dir = args.output_dir
    result = runner.run(cfg)
    out = runner.write_outputs(result)
    sys.stdout.write(runner.render_metrics(result.metrics))
    log.info("wrote %s", out)
    return 0


def cmd_evaluate(args) -> int:
    ckpt = checkpoint.load(args.checkpoint)
    ds = _load_data(ckpt, args.data, args.data_dir, args.seed)
    X = _standardized(ckpt, ds.X)
    pred = runner.predictions(ckpt.model, X, ckpt.meta)
    metrics = {"n": str(len(ds))}
    metrics.update(runner.task_metrics(ds.task, pred, ds.y, "eval"))
    sys.stdout.write(runner.render_metrics(metrics))
    return 0


def cmd_certify(args) -> int:
    ckpt = checkpoint.load(args.checkpoint)
    report = verify.certify(ckpt.model)
    sys.stdout.write(report.to_text())
    return 0 if report.passed else 1


def cmd_audit(args) -> int:
    ckpt = checkpoint.load(args.checkpoint)
    if not isinstance(ckpt.model, MonotoneModel):
        raise LipmonoError("audit needs a monotone checkpoint")
    ds = _load_data(ckpt, args.data, args.data_dir, args.seed)
    box = verify.data_box(_standardized(ckpt, ds.X))
    report = verify.audit_monotonicity(ckpt.model, box, args.trials, args.seed)
    text = report.to_text()
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    sys.stdout.write(text)
    return 0 if report.passed else 1


def curve(ckpt: checkpoint.Checkpoint, feature: int, lo: float | None, hi: float | None, steps: int) -> np.ndarray:
    """Response to one raw feature with the others held at their training medians; rows ``(x, f(x))``."""
    model = ckpt.model
    dim = ckpt.core.input_dim
    if not 0 <= feature < dim:
        raise LipmonoError(f"feature index {feature} out of range [0, {dim})")
    if steps < 1:
        raise LipmonoError("steps must be at least 1")
    fmin, fmax = ckpt.meta_floats("feature_min"), ckpt.meta_floats("feature_max")
    median = ckpt.meta_floats("feature_median")
    if lo is None or hi is None:
        if fmin is None:
            raise LipmonoError("checkpoint has no feature range; pass --min and --max")
        pad = verify.BOX_EXPANSION * (fmax[feature] - fmin[feature])
        lo = fmin[feature] - pad if lo is None else lo
        hi = fmax[feature] + pad if hi is None else hi
    grid = np.linspace(lo, hi, steps)
    X = np.tile(median if median is not None else np.zeros(dim), (steps, 1))
    X[:, feature] = grid
    y = runner.predictions(model, _standardized(ckpt, X), ckpt.meta)
    return np.column_stack([grid, np.reshape(y, (steps, -1))[:, 0]])


def cmd_curve(args) -> int:
    ckpt = checkpoint.load(args.checkpoint)
    rows = curve(ckpt, args.feature, args.min, args.max, args.steps)
    text = "x,f\n" + "".join(f"{x:.17g},{y:.17g}\n" for x, y in rows)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="lipmono", description="Train and certify monotone Lipschitz networks.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    t = sub.add_parser("train", help="train a model from a config file")
    t.add_argument("config")
    t.add_argument("--output-dir")
    t.set_defaults(func=cmd_train)

    e = sub.add_parser("evaluate", help="metrics of a checkpoint on a dataset")
    e.add_argument("checkpoint")
    e.add_argument("data", help="builtin recipe name or recipe file")
    e.add_argument("--data-dir")
    e.add_argument("--seed", type=int, default=0, help="seed for synthetic recipes")
    e.set_defaults(func=cmd_evaluate)

    c = sub.add_parser("certify", help="recompute the Lipschitz certificate of a checkpoint")
    c.add_argument("checkpoint")
    c.set_defaults(func=cmd_certify)

    a = sub.add_parser("audit", help="sampled monotonicity audit")
    a.add_argument("checkpoint")
    a.add_argument("data", help="builtin recipe name or recipe file")
    a.add_argument("--data-dir")
    a.add_argument("--trials", type=int, default=10_000)
    a.add_argument("--seed", type=int, default=0)
    a.add_argument("--out")
    a.set_defaults(func=cmd_audit)

    k = sub.add_parser("curve", help="1-D response sweep as CSV")
    k.add_argument("checkpoint")
    k.add_argument("--feature", type=int, required=True)
    k.add_argument("--min", type=float)
    k.add_argument("--max", type=float)
    k.add_argument("--steps", type=int, default=101)
    k.add_argument("--out")
    k.set_defaults(func=cmd_curve)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except LipmonoError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
