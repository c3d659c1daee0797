"""End-to-end training runs driven by a flat ``key = value`` config.

Example config::

    dataset = autompg          # builtin recipe name or path to a recipe file
    data_dir = data
    hidden = 16,16
    lambda = 1.0
    epochs = 2000
    lr = 0.005
    seed = 0
    output_dir = runs/autompg

``data_seed`` fixes the train/test split (and synthetic draws) independently
of ``seed``, which then only drives initialization and shuffling; it
defaults to ``seed``.  ``monotone = column:+1`` lines replace the recipe's monotone set
(``monotone = none`` clears it).  ``LMN_SEED`` in the environment overrides
``seed``.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np

from . import checkpoint, data, verify
from .data import Dataset
from .errors import CertificationError, ConfigError
from .monotone import MonotoneMask, MonotoneModel
from .network import Network, build_network
from .optim import TrainConfig, fit, predict

DEFAULT_LOSS = {"regression": "mse", "binary": "bce", "multiclass": "scaled_ce"}


@dataclass
class RunConfig:
    dataset: str = "toy"
    data_dir: str = "data"
    hidden: tuple[int, ...] = (16, 16)
    activation: str = "groupsort"
    group_size: int = 2
    lam: float = 1.0
    scheme: str = "one_norm_columnwise"
    mode: str = "forward"
    epochs: int = 1000
    lr: float = 0.01
    batch_size: int = 0
    seed: int = 0
    data_seed: int | None = None
    loss: str = ""
    tau: float = 1.0
    shuffle: bool = True
    train_fraction: float = 0.8
    standardize_target: bool = True
    monotone: dict[str, int] | None = None
    output_dir: str = "runs/out"

    def train_config(self, task: str) -> TrainConfig:
        return TrainConfig(
            epochs=self.epochs,
            lr=self.lr,
            batch_size=self.batch_size,
            seed=self.seed,
            loss=self.loss or DEFAULT_LOSS[task],
            tau=self.tau,
            shuffle=self.shuffle,
        )


_ALIASES = {"lambda": "lam"}
_BOOL = {"true": True, "yes": True, "1": True, "false": False, "no": False, "0": False}


def parse_run_config(text: str, source: str = "<config>") -> RunConfig:
    types = {f.name: f.type for f in fields(RunConfig)}
    kw: dict = {}
    for key, val, no in data.parse_kv(text, source):
        key = _ALIASES.get(key, key)
        if key not in types:
            raise ConfigError(f"{source}:{no}: unknown key {key!r}")
        try:
            if key == "monotone":
                mono = kw.setdefault("monotone", {})
                if val.lower() != "none":
                    col, _, d = val.rpartition(":")
                    if not col or int(d) not in (-1, 1):
                        raise ValueError("expected column:+1 or column:-1")
                    mono[col.strip()] = int(d)
            elif key == "hidden":
                kw[key] = tuple(int(v) for v in val.split(",") if v.strip())
            elif key in ("shuffle", "standardize_target"):
                kw[key] = _BOOL[val.lower()]
            elif types[key] in ("int", "int | None"):
                kw[key] = int(val)
            elif types[key] == "float":
                kw[key] = float(val)
            else:
                kw[key] = val
        except (ValueError, KeyError) as exc:
            raise ConfigError(f"{source}:{no}: bad value for {key!r}: {exc}") from None
    cfg = RunConfig(**kw)
    _validate(cfg, source)
    return cfg


def _validate(cfg: RunConfig, source: str) -> None:
    if not cfg.lam > 0:
        raise ConfigError(f"{source}: lambda must be positive")
    if any(h < 1 for h in cfg.hidden):
        raise ConfigError(f"{source}: hidden widths must be positive")
    if not 0.0 < cfg.train_fraction <= 1.0:
        raise ConfigError(f"{source}: train_fraction must lie in (0, 1]")


def load_run_config(path) -> RunConfig:
    path = Path(path)
    cfg = parse_run_config(path.read_text(encoding="utf-8"), str(path))
    env_seed = os.environ.get("LMN_SEED")
    if env_seed is not None:
        cfg.seed = int(env_seed)
    return cfg


@dataclass
class RunResult:
    config: RunConfig
    model: MonotoneModel | Network
    frozen: MonotoneModel | Network
    history: list[float]
    metrics: dict[str, str]
    certify: verify.CertifyReport
    train: Dataset
    test: Dataset
    meta: dict[str, str] = field(default_factory=dict)


def _fmt(v) -> str:
    return format(float(v), ".17g")


def task_metrics(task: str, pred: np.ndarray, y: np.ndarray, prefix: str) -> dict[str, str]:
    if len(y) == 0:
        return {}
    if task == "regression":
        mse = float(np.mean((pred - y) ** 2))
        return {f"{prefix}_mse": _fmt(mse), f"{prefix}_rmse": _fmt(np.sqrt(mse))}
    if task == "binary":
        acc = float(np.mean((pred > 0.0) == (y > 0.5)))
    else:
        acc = float(np.mean(np.argmax(pred, axis=1) == y))
    return {f"{prefix}_accuracy": _fmt(acc)}


def prepare(cfg: RunConfig) -> tuple[Dataset, Dataset, dict[str, str]]:
    """Load, split and standardize the configured dataset; returns train, test and checkpoint metadata."""
    recipe = data.resolve_recipe(cfg.dataset)
    if cfg.monotone is not None:
        recipe.monotone = dict(cfg.monotone)
    data_seed = cfg.seed if cfg.data_seed is None else cfg.data_seed
    ds = data.load(recipe, cfg.data_dir, seed=data_seed)
    if cfg.monotone is not None and recipe.generator:
        # generators set their own directions
        ds.directions = np.array([cfg.monotone.get(n, 0) for n in ds.feature_names], dtype=np.int64)
    train, test = data.split(ds, cfg.train_fraction, data_seed)
    train_s = data.standardize(train)
    test_s = data.standardize(test, train_s) if len(test) else test
    if ds.task == "regression" and cfg.standardize_target:
        t_mean, t_scale = float(train.y.mean()), float(train.y.std()) or 1.0
    else:
        t_mean, t_scale = 0.0, 1.0
    meta = {
        "dataset": recipe.name,
        "task": ds.task,
        "feature_names": ",".join(ds.feature_names),
        "input_mean": checkpoint.fmt_floats(train_s.mean),
        "input_scale": checkpoint.fmt_floats(train_s.scale),
        "target_mean": _fmt(t_mean),
        "target_scale": _fmt(t_scale),
        "feature_min": checkpoint.fmt_floats(train.X.min(axis=0)),
        "feature_max": checkpoint.fmt_floats(train.X.max(axis=0)),
        "feature_median": checkpoint.fmt_floats(np.median(train.X, axis=0)),
    }
    return train_s, test_s, meta


def build_model(cfg: RunConfig, ds: Dataset) -> MonotoneModel | Network:
    n_out = int(ds.y.max()) + 1 if ds.task == "multiclass" else 1
    net = build_network(
        ds.n_features,
        cfg.hidden,
        n_out,
        activation=cfg.activation,
        group_size=cfg.group_size,
        lam=cfg.lam,
        scheme=cfg.scheme,
        mode=cfg.mode,
        seed=cfg.seed,
    )
    if ds.task == "multiclass":
        return net
    return MonotoneModel(net, MonotoneMask(ds.directions))


def predictions(model, X: np.ndarray, meta: dict[str, str]) -> np.ndarray:
    """Model output in target units (regression outputs are un-standardized)."""
    out = predict(model, X)
    if meta.get("task") == "regression":
        out = out * float(meta["target_scale"]) + float(meta["target_mean"])
    return out


def run(cfg: RunConfig) -> RunResult:
    train, test, meta = prepare(cfg)
    model = build_model(cfg, train)
    t_mean, t_scale = float(meta["target_mean"]), float(meta["target_scale"])
    y_fit = (train.y - t_mean) / t_scale if train.task == "regression" else train.y
    model, history = fit(model, train.X, y_fit, cfg.train_config(train.task))
    frozen = checkpoint.freeze(model)
    report = verify.certify(frozen)
    metrics = {
        "dataset": meta["dataset"],
        "task": train.task,
        "seed": str(cfg.seed),
        "n_train": str(len(train)),
        "n_test": str(len(test)),
        "n_parameters": str(frozen.n_parameters()),
        "epochs": str(cfg.epochs),
        "final_loss": _fmt(history[-1]),
        "lambda": _fmt(cfg.lam),
        "certificate": _fmt(report.certificate),
    }
    metrics.update(task_metrics(train.task, predictions(frozen, train.X, meta), train.y, "train"))
    if len(test):
        metrics.update(task_metrics(test.task, predictions(frozen, test.X, meta), test.y, "test"))
    return RunResult(cfg, model, frozen, history, metrics, report, train, test, meta)


def render_metrics(metrics: dict[str, str]) -> str:
    return "".join(f"{k} = {v}\n" for k, v in metrics.items())


def write_outputs(result: RunResult, output_dir=None) -> Path:
    out = Path(output_dir or result.config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    checkpoint.save(out / "checkpoint.lmn", result.frozen, result.meta)
    (out / "loss_history.csv").write_text(
        "epoch,loss\n" + "".join(f"{i},{_fmt(v)}\n" for i, v in enumerate(result.history)), encoding="utf-8"
    )
    (out / "metrics.txt").write_text(render_metrics(result.metrics), encoding="utf-8")
    (out / "certify.txt").write_text(result.certify.to_text(), encoding="utf-8")
    if not result.certify.passed:
        raise CertificationError(f"trained model fails certification (layer {result.certify.offending_layer})")
    return out
