"""Write the CSV files the builtin recipes expect into ``data/``.

The tabular benchmarks are taken from copies that ship inside PyPI wheels,
so only ``pip`` is needed:

=============  ===========================  ===========================================  ======
file           wheel                        member                                       rows
=============  ===========================  ===========================================  ======
auto-mpg.csv   vega_datasets==0.9.0         vega_datasets/_data/cars.json                398
heart.csv      scikit-lego==0.9.10          sklego/data/hearts.zip (heart.csv)           303
compas.csv     responsibly==0.1.2           responsibly/dataset/compas/                  6172
                                            compas-scores-two-years.csv
=============  ===========================  ===========================================  ======

BlogFeedback and the Lending Club loan data are not on PyPI; download them
by hand (``blogData_train.csv``, ``loan.csv``) if you need those recipes.

Usage::

    python scripts/fetch_datasets.py [--dest data] [--cache .wheels]
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import subprocess
import sys
import zipfile
from pathlib import Path

WHEELS = {
    "vega_datasets": "vega_datasets==0.9.0",
    "sklego": "scikit-lego==0.9.10",
    "responsibly": "responsibly==0.1.2",
}

ORIGIN_CODE = {"USA": 1, "Europe": 2, "Japan": 3}


def fetch_wheel(requirement: str, cache: Path) -> Path:
    name = requirement.split("==")[0].replace("-", "_").lower()
    version = requirement.split("==")[1]
    for path in cache.glob("*.whl"):
        if path.name.lower().startswith(f"{name}-{version}-"):
            return path
    cache.mkdir(parents=True, exist_ok=True)
    subprocess.run(
        [sys.executable, "-m", "pip", "download", "--no-deps", "--only-binary=:all:", "-d", str(cache), requirement],
        check=True,
    )
    return fetch_wheel(requirement, cache)


def write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
    print(f"{path}: {len(rows)} rows")


def auto_mpg(wheel: Path, dest: Path) -> None:
    """Rebuild the 398-row UCI layout; six cars keep a blank horsepower."""
    with zipfile.ZipFile(wheel) as z:
        cars = json.loads(z.read("vega_datasets/_data/cars.json"))
    rows = []
    for c in cars:
        if c["Miles_per_Gallon"] is None:
            continue
        hp = "" if c["Horsepower"] is None else c["Horsepower"]
        rows.append(
            [
                c["Miles_per_Gallon"],
                c["Cylinders"],
                c["Displacement"],
                hp,
                c["Weight_in_lbs"],
                c["Acceleration"],
                int(c["Year"][:4]) - 1900,
                ORIGIN_CODE[c["Origin"]],
                c["Name"],
            ]
        )
    header = ["mpg", "cylinders", "displacement", "horsepower", "weight", "acceleration", "model_year", "origin", "car_name"]
    write_csv(dest / "auto-mpg.csv", header, rows)


def heart(wheel: Path, dest: Path) -> None:
    with zipfile.ZipFile(wheel) as z:
        inner = zipfile.ZipFile(io.BytesIO(z.read("sklego/data/hearts.zip")))
    (dest / "heart.csv").write_bytes(inner.read("heart.csv"))
    print(f"{dest / 'heart.csv'}: copied")


def compas(wheel: Path, dest: Path) -> None:
    """Apply the usual screening filter and keep the 13 model inputs plus the label."""
    with zipfile.ZipFile(wheel) as z:
        raw = z.read("responsibly/dataset/compas/compas-scores-two-years.csv").decode("utf-8")
    counts = ["priors_count", "juv_fel_count", "juv_misd_count", "juv_other_count"]
    rows = []
    for r in csv.DictReader(io.StringIO(raw)):
        if r["days_b_screening_arrest"] == "" or abs(int(r["days_b_screening_arrest"])) > 30:
            continue
        if r["is_recid"] == "-1" or r["c_charge_degree"] == "O" or r["score_text"] == "N/A":
            continue
        rows.append(
            [
                r["age"],
                int(r["sex"] == "Male"),
                r["race"],
                int(r["c_charge_degree"] == "F"),
                *(r[c] for c in counts),
                r["two_year_recid"],
            ]
        )
    write_csv(dest / "compas.csv", ["age", "sex", "race", "c_charge_degree", *counts, "two_year_recid"], rows)


def main(argv=None) -> int:
    p = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    p.add_argument("--dest", default="data")
    p.add_argument("--cache", default=".wheels", help="directory for downloaded wheels")
    args = p.parse_args(argv)
    dest, cache = Path(args.dest), Path(args.cache)
    dest.mkdir(parents=True, exist_ok=True)
    auto_mpg(fetch_wheel(WHEELS["vega_datasets"], cache), dest)
    heart(fetch_wheel(WHEELS["sklego"], cache), dest)
    compas(fetch_wheel(WHEELS["responsibly"], cache), dest)
    return 0


if __name__ == "__main__":
    sys.exit(main())
