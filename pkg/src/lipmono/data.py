"""CSV ingestion, standardization, splitting and dataset recipes.

A recipe is a flat ``key = value`` text file::

    name = autompg
    file = auto-mpg.csv
    target = mpg
    task = regression
    drop = car_name
    monotone = weight:-1
    monotone = displacement:-1

``monotone`` may repeat.  List-valued keys (``drop``, ``categorical``,
``features``) take comma-separated column names.  Datasets are not shipped
with the package; ``scripts/fetch_datasets.py`` writes the CSV files the
builtin recipes expect.
"""

from __future__ import annotations

import csv
import io
import logging
import os
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .errors import ConfigError, DataError, RecipeError
from .tensor_core import make_rng

log = logging.getLogger(__name__)

MISSING = {"", "?", "na", "nan", "null", "none"}
TASKS = ("regression", "binary", "multiclass")


@dataclass
class Dataset:
    X: np.ndarray
    y: np.ndarray
    feature_names: list[str]
    task: str = "regression"
    directions: np.ndarray | None = None
    mean: np.ndarray | None = None
    scale: np.ndarray | None = None
    dropped_rows: int = 0
    name: str = ""

    def __post_init__(self):
        self.X = np.array(self.X, dtype=np.float64, ndmin=2)
        self.y = np.asarray(self.y, dtype=np.float64).reshape(-1)
        if self.task not in TASKS:
            raise ConfigError(f"unknown task {self.task!r}")
        if self.X.shape[0] != self.y.shape[0]:
            raise DataError(f"{self.X.shape[0]} rows but {self.y.shape[0]} targets")
        if len(self.feature_names) != self.X.shape[1]:
            raise DataError("feature names do not match the number of columns")
        if self.directions is None:
            self.directions = np.zeros(self.X.shape[1], dtype=np.int64)
        self.directions = np.asarray(self.directions, dtype=np.int64)

    def __len__(self) -> int:
        return self.X.shape[0]

    @property
    def n_features(self) -> int:
        return self.X.shape[1]

    def subset(self, idx) -> "Dataset":
        return replace(self, X=self.X[idx], y=self.y[idx])

    def to_text(self) -> str:
        """Deterministic CSV rendering (features then target, 17 significant digits)."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow([*self.feature_names, "target"])
        for row, t in zip(self.X, self.y):
            w.writerow([format(v, ".17g") for v in row] + [format(t, ".17g")])
        return buf.getvalue()


# --------------------------------------------------------------------------- #
# recipes
# --------------------------------------------------------------------------- #


@dataclass
class DatasetRecipe:
    name: str
    file: str = ""
    target: str = ""
    task: str = "regression"
    monotone: dict[str, int] = field(default_factory=dict)
    categorical: list[str] = field(default_factory=list)
    drop: list[str] = field(default_factory=list)
    features: list[str] = field(default_factory=list)
    positive: str = ""
    binarize_above: float | None = None
    target_quantile: float | None = None
    header: bool = True
    expected_rows: int | None = None
    expected_columns: int | None = None
    generator: str = ""
    params: dict[str, str] = field(default_factory=dict)
    source: str = ""
    notes: str = ""

    def __post_init__(self):
        if self.task not in TASKS:
            raise RecipeError(f"recipe {self.name}: unknown task {self.task!r}")
        for col, d in self.monotone.items():
            if d not in (-1, 1):
                raise RecipeError(f"recipe {self.name}: direction of {col} must be +1 or -1")

    def to_text(self) -> str:
        lines = [f"name = {self.name}"]
        for key in ("file", "target", "task", "positive", "generator", "source", "notes"):
            val = getattr(self, key)
            if val:
                lines.append(f"{key} = {val}")
        for key in ("categorical", "drop", "features"):
            val = getattr(self, key)
            if val:
                lines.append(f"{key} = {','.join(val)}")
        for key in ("binarize_above", "target_quantile", "expected_rows", "expected_columns"):
            val = getattr(self, key)
            if val is not None:
                lines.append(f"{key} = {val}")
        if not self.header:
            lines.append("header = false")
        lines += [f"monotone = {c}:{d:+d}" for c, d in self.monotone.items()]
        lines += [f"param.{k} = {v}" for k, v in self.params.items()]
        return "\n".join(lines) + "\n"


def parse_kv(text: str, source: str = "<text>") -> list[tuple[str, str, int]]:
    """Split ``key = value`` lines into ``(key, value, line_number)``; ``#`` starts a comment."""
    out = []
    for no, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{no}: expected 'key = value', got {raw.strip()!r}")
        key, val = line.split("=", 1)
        out.append((key.strip().lower(), val.strip(), no))
    return out


def _split_list(val: str) -> list[str]:
    return [v.strip() for v in val.split(",") if v.strip()]


def parse_recipe(text: str, source: str = "<recipe>") -> DatasetRecipe:
    kw: dict = {"monotone": {}, "params": {}}
    for key, val, no in parse_kv(text, source):
        try:
            if key == "monotone":
                col, _, d = val.rpartition(":")
                if not col:
                    raise ValueError("expected column:+1 or column:-1")
                if d.strip() not in ("+1", "1", "-1"):
                    raise ValueError(f"direction of {col.strip()} must be +1 or -1")
                kw["monotone"][col.strip()] = int(d)
            elif key.startswith("param."):
                kw["params"][key[6:]] = val
            elif key in ("categorical", "drop", "features"):
                kw[key] = _split_list(val)
            elif key in ("binarize_above", "target_quantile"):
                kw[key] = float(val)
            elif key in ("expected_rows", "expected_columns"):
                kw[key] = int(val)
            elif key == "header":
                kw[key] = val.lower() in ("1", "true", "yes")
            elif key in ("name", "file", "target", "task", "positive", "generator", "source", "notes"):
                kw[key] = val
            else:
                raise ValueError(f"unknown key {key!r}")
        except ValueError as exc:
            raise RecipeError(f"{source}:{no}: {exc}") from None
    if "name" not in kw:
        raise RecipeError(f"{source}: recipe needs a name")
    return DatasetRecipe(**kw)


def load_recipe(path) -> DatasetRecipe:
    path = Path(path)
    return parse_recipe(path.read_text(encoding="utf-8"), str(path))


def builtin_recipes() -> dict[str, DatasetRecipe]:
    """Recipes for the tabular benchmarks and the two synthetic generators."""
    recipes = [
        DatasetRecipe(
            name="autompg",
            file="auto-mpg.csv",
            target="mpg",
            task="regression",
            drop=["car_name"],
            monotone={"weight": -1, "displacement": -1, "horsepower": -1},
            expected_rows=398,
            source="UCI Auto MPG (398 cars, 7 numeric features plus the model name)",
            notes="6 rows lack horsepower and are dropped; mpg falls with weight, displacement and horsepower",
        ),
        DatasetRecipe(
            name="heartdisease",
            file="heart.csv",
            target="target",
            task="binary",
            binarize_above=0.0,
            categorical=["thal"],
            monotone={"trestbps": 1, "chol": 1},
            expected_rows=303,
            source="Cleveland heart disease table as bundled with scikit-lego (13 features)",
            notes="target > 0 means disease; thal is one-hot encoded",
        ),
        DatasetRecipe(
            name="compas",
            file="compas.csv",
            target="two_year_recid",
            task="binary",
            categorical=["race"],
            monotone={"priors_count": 1, "juv_fel_count": 1, "juv_misd_count": 1, "juv_other_count": 1},
            expected_rows=6172,
            source="ProPublica compas-scores-two-years after the standard screening filter",
            notes="13 features: age, sex, charge degree, 6 race indicators and 4 monotone count features",
        ),
        DatasetRecipe(
            name="blogfeedback",
            file="blogData_train.csv",
            target="c280",
            task="regression",
            header=False,
            target_quantile=0.9,
            monotone={f"c{i}": 1 for i in (50, 51, 52, 53, 55, 56, 57, 58)},
            expected_columns=281,
            source="UCI BlogFeedback training file (no header; 280 features then the target)",
            notes="only the 90% of rows with the smallest targets are kept",
        ),
        DatasetRecipe(
            name="loandefaulter",
            file="loan.csv",
            target="loan_status",
            task="binary",
            positive="Charged Off",
            monotone={
                "pub_rec_bankruptcies": 1,
                "dti": 1,
                "fico_range_low": -1,
                "emp_length": -1,
                "annual_inc": -1,
            },
            source="Lending Club loan data (public Kaggle release)",
            notes="expects numeric emp_length in years",
        ),
        DatasetRecipe(
            name="toy",
            task="regression",
            generator="toy",
            monotone={"x": 1},
            params={"n": "100", "realization": "0"},
            notes="1-D monotone ground truth with heteroskedastic Gaussian noise",
        ),
        DatasetRecipe(
            name="goodness",
            task="binary",
            generator="goodness",
            monotone={"goodness": -1},
            params={"n": "500", "d": "20", "threshold": "0.8"},
            notes="random binary labels; label 0 whenever goodness exceeds the threshold",
        ),
    ]
    return {r.name: r for r in recipes}


def resolve_recipe(ref: str) -> DatasetRecipe:
    """A builtin recipe name or a path to a recipe file."""
    builtins = builtin_recipes()
    if ref in builtins:
        return builtins[ref]
    if os.path.exists(ref):
        return load_recipe(ref)
    raise RecipeError(f"{ref!r} is neither a builtin recipe ({', '.join(builtins)}) nor a recipe file")


def data_dir() -> Path:
    return Path(os.environ.get("LIPMONO_DATA_DIR", "data"))


# --------------------------------------------------------------------------- #
# loading
# --------------------------------------------------------------------------- #


def _read_rows(path: Path, header: bool) -> tuple[list[str], list[list[str]]]:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.reader(fh) if r]
    if not rows:
        raise RecipeError(f"{path} is empty")
    if header:
        return [c.strip() for c in rows[0]], rows[1:]
    return [f"c{i}" for i in range(len(rows[0]))], rows


def load_csv(path, recipe: DatasetRecipe) -> Dataset:
    """Parse ``path`` per ``recipe``; rows with missing or unparseable cells are dropped."""
    path = Path(path)
    names, rows = _read_rows(path, recipe.header)
    if recipe.expected_columns is not None and len(names) != recipe.expected_columns:
        raise RecipeError(f"{path}: expected {recipe.expected_columns} columns, found {len(names)}")
    if recipe.expected_rows is not None and len(rows) != recipe.expected_rows:
        raise RecipeError(f"{path}: expected {recipe.expected_rows} data rows, found {len(rows)}")
    index = {n: i for i, n in enumerate(names)}
    for col in [recipe.target, *recipe.monotone, *recipe.categorical, *recipe.drop, *recipe.features]:
        if col not in index:
            raise RecipeError(f"{path}: column {col!r} required by recipe {recipe.name} is missing")
    bad = set(recipe.monotone) & set(recipe.categorical)
    if bad:
        raise RecipeError(f"recipe {recipe.name}: categorical columns cannot be monotone: {sorted(bad)}")
    if recipe.features:
        inputs = [n for n in names if n in set(recipe.features) and n != recipe.target]
    else:
        inputs = [n for n in names if n != recipe.target and n not in set(recipe.drop)]
    categorical = set(recipe.categorical)

    kept_x: list[list] = []
    kept_y: list[float] = []
    dropped = 0
    for lineno, row in enumerate(rows, 2 if recipe.header else 1):
        if len(row) != len(names):
            log.warning("%s:%d: expected %d cells, found %d; row dropped", path, lineno, len(names), len(row))
            dropped += 1
            continue
        try:
            vals = []
            for n in inputs:
                cell = row[index[n]].strip()
                if cell.lower() in MISSING:
                    raise ValueError(f"missing value in {n}")
                vals.append(cell if n in categorical else float(cell))
            t = row[index[recipe.target]].strip()
            if t.lower() in MISSING:
                raise ValueError("missing target")
            target = float(t == recipe.positive) if recipe.positive else float(t)
        except ValueError as exc:
            log.warning("%s:%d: %s; row dropped", path, lineno, exc)
            dropped += 1
            continue
        kept_x.append(vals)
        kept_y.append(target)
    if not kept_x:
        raise DataError(f"{path}: no complete rows")

    y = np.asarray(kept_y)
    if recipe.binarize_above is not None:
        y = (y > recipe.binarize_above).astype(np.float64)
    columns, feature_names, directions = [], [], []
    for j, n in enumerate(inputs):
        col = [r[j] for r in kept_x]
        if n in categorical:
            for level in sorted(set(col)):
                columns.append(np.array([c == level for c in col], dtype=np.float64))
                feature_names.append(f"{n}={level}")
                directions.append(0)
        else:
            columns.append(np.asarray(col, dtype=np.float64))
            feature_names.append(n)
            directions.append(recipe.monotone.get(n, 0))
    X = np.column_stack(columns)
    if recipe.target_quantile is not None:
        keep = np.sort(np.argsort(y, kind="stable")[: int(np.ceil(recipe.target_quantile * len(y)))])
        X, y = X[keep], y[keep]
    if recipe.task != "regression" and not np.all(y == np.round(y)):
        raise DataError(f"{path}: classification targets must be integers")
    if dropped:
        log.info("%s: dropped %d incomplete rows", path, dropped)
    return Dataset(X, y, feature_names, recipe.task, np.asarray(directions), dropped_rows=dropped, name=recipe.name)


def load(recipe: DatasetRecipe, directory=None, seed: int = 0) -> Dataset:
    """Load a recipe's file from ``directory`` (default ``$LIPMONO_DATA_DIR`` or ``./data``), or synthesize it."""
    if recipe.generator:
        return generate(recipe, seed)
    base = Path(directory) if directory is not None else data_dir()
    path = base / recipe.file
    if not path.exists():
        raise RecipeError(f"{path} not found; run scripts/fetch_datasets.py or set LIPMONO_DATA_DIR")
    return load_csv(path, recipe)


# --------------------------------------------------------------------------- #
# transforms
# --------------------------------------------------------------------------- #


def standardize(ds: Dataset, reference: Dataset | None = None) -> Dataset:
    """Center and scale features with statistics of ``reference`` (default: ``ds`` itself).

    Scales are standard deviations, clamped to 1 for constant columns, so they
    are always positive and feature orderings survive.
    """
    ref = ds if reference is None else reference
    if ref.mean is not None and reference is not None:
        mean, scale = ref.mean, ref.scale
    else:
        mean = ref.X.mean(axis=0)
        scale = ref.X.std(axis=0)
        scale = np.where(scale > 0, scale, 1.0)
    return replace(ds, X=(ds.X - mean) / scale, mean=mean, scale=scale)


def unstandardize(X, mean, scale) -> np.ndarray:
    return np.asarray(X) * scale + mean


def split(ds: Dataset, fraction: float, seed: int = 0) -> tuple[Dataset, Dataset]:
    """Shuffled split into ``fraction`` train / rest test, stratified by class for classification."""
    if not 0.0 <= fraction <= 1.0:
        raise ConfigError(f"train fraction must lie in [0, 1], got {fraction}")
    rng = make_rng(seed, stream=4)
    n = len(ds)
    if ds.task == "regression":
        perm = rng.permutation(n)
        cut = int(round(fraction * n))
        train, test = perm[:cut], perm[cut:]
    else:
        train, test = [], []
        for cls in np.unique(ds.y):
            members = np.flatnonzero(ds.y == cls)
            members = members[rng.permutation(len(members))]
            cut = int(round(fraction * len(members)))
            train.append(members[:cut])
            test.append(members[cut:])
        train = np.sort(np.concatenate(train))
        test = np.sort(np.concatenate(test))
        train = train[rng.permutation(len(train))]
    return ds.subset(train), ds.subset(test)


# --------------------------------------------------------------------------- #
# synthetic generators
# --------------------------------------------------------------------------- #


def toy_truth(x) -> np.ndarray:
    """Monotone ground truth of the 1-D toy problem (derivative ``1 + cos(2x) >= 0``)."""
    x = np.asarray(x, dtype=np.float64)
    return x + 0.5 * np.sin(2.0 * x)


def toy_monotone(n: int = 100, realization: int = 0, seed: int = 0) -> Dataset:
    """Noisy samples of :func:`toy_truth` on ``[-1, 1]`` with noise growing toward the edges.

    Realization 1 has fewer points near the right edge and a larger noise
    level, which makes the data look non-monotone there.
    """
    rng = make_rng(seed, stream=100 + int(realization))
    if realization == 0:
        x = rng.uniform(-1.0, 1.0, n)
        sigma = 0.05 + 0.25 * np.abs(x)
    else:
        x = np.concatenate([rng.uniform(-1.0, 0.5, n - n // 5), rng.uniform(0.5, 1.0, n // 5)])
        sigma = 0.05 + 0.45 * np.abs(x) ** 2
    x = np.sort(x)
    y = toy_truth(x) + sigma * rng.standard_normal(n)
    return Dataset(x.reshape(-1, 1), y, ["x"], "regression", np.array([1]), name=f"toy{realization}")


def goodness_memorization(n: int = 500, d: int = 20, threshold: float = 0.8, seed: int = 0) -> Dataset:
    """Random binary labels on Gaussian features plus a ``goodness`` column in ``[0, 1]``.

    Samples with goodness above ``threshold`` get label 0, so the label-1
    score must be non-increasing in goodness.
    """
    rng = make_rng(seed, stream=200)
    X = rng.standard_normal((n, d))
    good = rng.random(n)
    y = rng.integers(0, 2, n).astype(np.float64)
    y[good > threshold] = 0.0
    names = [f"f{i}" for i in range(d)] + ["goodness"]
    directions = np.zeros(d + 1, dtype=np.int64)
    directions[-1] = -1
    return Dataset(np.column_stack([X, good]), y, names, "binary", directions, name="goodness")


def generate(recipe: DatasetRecipe, seed: int = 0) -> Dataset:
    p = recipe.params
    if recipe.generator == "toy":
        return toy_monotone(int(p.get("n", 100)), int(p.get("realization", 0)), seed)
    if recipe.generator == "goodness":
        return goodness_memorization(int(p.get("n", 500)), int(p.get("d", 20)), float(p.get("threshold", 0.8)), seed)
    raise RecipeError(f"unknown generator {recipe.generator!r}")
