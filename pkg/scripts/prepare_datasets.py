"""Rebuild the wine, glass and WBC anomaly-detection CSVs under ``data/``.

The ADBench archives are not redistributable here, so the three small
datasets are rebuilt from their public UCI sources with the same outlier
definitions ADBench inherits from the ODDS / DAMI collections:

* wine  -- classes 2 and 3 are normal, 10 rows of class 1 are anomalies
           (129 rows, 13 features).
* glass -- the "tableware" class is anomalous (214 rows, 9 features).
* WBC   -- original Wisconsin breast cancer data, missing values and
           duplicate rows dropped, benign rows normal, 10 malignant rows
           anomalous (223 rows, 9 features).

Requires ``scikit-learn`` (wine) and ``rdatasets`` (MASS ``fgl`` and
``biopsy``)::

    pip install rdatasets
    python scripts/prepare_datasets.py
"""

import argparse
from pathlib import Path

import numpy as np
import pandas as pd

DOWNSAMPLE_SEED = 0
WBC_FEATURES = [
    "clump_thickness",
    "cell_size_uniformity",
    "cell_shape_uniformity",
    "marginal_adhesion",
    "epithelial_cell_size",
    "bare_nuclei",
    "bland_chromatin",
    "normal_nucleoli",
    "mitoses",
]


def _downsample(df, n, seed):
    rng = np.random.default_rng(seed)
    keep = np.sort(rng.choice(len(df), size=n, replace=False))
    return df.iloc[keep]


def build_wine():
    from sklearn.datasets import load_wine

    raw = load_wine(as_frame=True)
    df = raw.frame.rename(columns={"target": "cls"})
    df.columns = [c.replace("/", "_") for c in df.columns]
    normal = df[df["cls"] != 0]
    anomalies = _downsample(df[df["cls"] == 0], 10, DOWNSAMPLE_SEED)
    out = pd.concat([normal.assign(label=0), anomalies.assign(label=1)])
    return out.drop(columns="cls").sort_index()


def build_glass():
    import rdatasets

    df = rdatasets.data("MASS", "fgl").drop(columns="rownames")
    df["label"] = (df.pop("type") == "Tabl").astype(int)
    return df


def build_wbc():
    import rdatasets

    df = rdatasets.data("MASS", "biopsy").drop(columns=["rownames", "ID"])
    df = df.dropna()
    cols = [f"V{i}" for i in range(1, 10)]
    benign = df[df["class"] == "benign"].drop_duplicates(subset=cols)
    malignant = df[df["class"] == "malignant"].drop_duplicates(subset=cols)
    anomalies = _downsample(malignant, 10, DOWNSAMPLE_SEED)
    out = pd.concat([benign.assign(label=0), anomalies.assign(label=1)]).sort_index()
    out = out.drop(columns="class").rename(columns=dict(zip(cols, WBC_FEATURES)))
    out[WBC_FEATURES] = out[WBC_FEATURES].astype(int)
    return out


BUILDERS = {"wine": build_wine, "glass": build_glass, "wbc": build_wbc}


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out", type=Path, default=Path(__file__).resolve().parents[1] / "data")
    args = parser.parse_args(argv)
    args.out.mkdir(parents=True, exist_ok=True)
    for name, build in BUILDERS.items():
        df = build()
        path = args.out / f"{name}.csv"
        df.to_csv(path, index=False, float_format="%.10g", lineterminator="\n")
        print(f"{path}: n={len(df)} d={df.shape[1] - 1} anomalies={int(df['label'].sum())}")


if __name__ == "__main__":
    main()
