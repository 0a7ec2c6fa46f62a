"""Aggregates rebuilt from the persisted per-cell artifacts of a run directory."""

from __future__ import annotations

import itertools
import re
from pathlib import Path

import numpy as np

from ..io import dump_json, load_json, write_records_csv
from ..similarity import SimilarityMatrix
from .figures import cluster_order, emit_heatmap

_CELL = re.compile(r"^(?P<ds>.+)__split(?P<i>\d+)$")


class ReportError(ValueError):
    pass


def _mean_or_none(vals):
    vals = [v for v in vals if v is not None]
    return float(np.mean(vals)) if vals else None


def _aligned_mean(mats, ids):
    """Entry-wise mean over matrices whose model sets may differ."""
    stack = np.full((len(mats), len(ids), len(ids)), np.nan)
    for n, S in enumerate(mats):
        pos = [ids.index(m) for m in S.model_ids]
        stack[n][np.ix_(pos, pos)] = S.values
    present = ~np.all(np.isnan(stack), axis=(0, 1))
    keep = [m for m, p in zip(ids, present) if p]
    sub = stack[:, present][:, :, present]
    with np.errstate(invalid="ignore"):
        counts = (~np.isnan(sub)).sum(0)
        mean = np.where(counts > 0, np.nansum(sub, 0) / np.maximum(counts, 1), np.nan)
    return mean, tuple(keep)


def _top_pairs(values, ids, n=None):
    pairs = [(float(values[i, j]), ids[i], ids[j]) for i, j in itertools.combinations(range(len(ids)), 2)]
    pairs.sort(key=lambda t: (-t[0], t[1], t[2]))
    return [{"pair": [a, b], "similarity": s} for s, a, b in pairs[:n]]


def _mantel_summary(stats_list, alpha=0.05):
    out = {}
    for st in stats_list:
        for pair, res in st.get("mantel", {}).items():
            d = out.setdefault(pair, {"r": [], "p": []})
            d["r"].append(res["r_m"])
            d["p"].append(res["p_value"])
    return {
        pair: {
            "mean_r": float(np.mean(d["r"])),
            "n_cells": len(d["r"]),
            "n_positive_significant": int(sum(r > 0 and p <= alpha for r, p in zip(d["r"], d["p"]))),
            "n_positive": int(sum(r > 0 for r in d["r"])),
        }
        for pair, d in sorted(out.items())
    }


def _regression_summary(stats_list):
    out = {}
    for target in ("gain", "aucpr"):
        rows = [st["regression"][target] for st in stats_list if "regression" in st and "weights" in st["regression"][target]]
        if not rows:
            continue
        names = sorted(rows[0]["weights"])
        out[target] = {
            "mean_weights": {k: float(np.mean([r["weights"][k] for r in rows])) for k in names},
            "mean_ratio": _mean_or_none([r["ratio"] for r in rows]),
            "mean_r_squared": float(np.mean([r["r_squared"] for r in rows])),
            "n_cells": len(rows),
            "n_diversity_weight_positive": int(sum(r["weights"]["diversity"] > 0 for r in rows)),
        }
    return out


def _strategy_summary(stats_list, strategies):
    rows = [st["strategy_mean_aucpr"] for st in stats_list if "strategy_mean_aucpr" in st]
    return {s: _mean_or_none([r.get(s) for r in rows]) for s in strategies}, len(rows)


def _corr_summary(stats_list, strategies, kinds):
    out = {}
    for s in strategies:
        for k in kinds:
            cells = [st["diversity_correlations"][s][k] for st in stats_list if "diversity_correlations" in st]
            out.setdefault(s, {})[k] = {
                "diversity_aucpr": _mean_or_none([c["diversity_aucpr"] for c in cells]),
                "diversity_gain": _mean_or_none([c["diversity_gain"] for c in cells]),
            }
    return out


def build_aggregates(run_dir) -> dict:
    """Write mean matrices, figures, strategy comparison and ``stats/summary.json``.

    Only files produced by the per-cell stage are read, so calling this on
    a finished run directory reproduces the same bytes.
    """
    run_dir = Path(run_dir)
    if not (run_dir / "config.json").is_file():
        raise ReportError(f"not a run directory (no config.json): {run_dir}")
    meta = load_json(run_dir / "config.json")
    cfg = meta["config"]
    h = meta["config_hash"]
    ids = [d["kind"] for d in cfg["detectors"]]
    kinds = cfg["similarity_kinds"]
    strategies = cfg["strategies"]
    datasets = [d["name"] for d in cfg["datasets"]]

    stats_by_ds = {ds: [] for ds in datasets}
    for p in sorted((run_dir / "stats").glob("*__split*.json")):
        m = _CELL.match(p.stem)
        if m and m["ds"] in stats_by_ds:
            stats_by_ds[m["ds"]].append(load_json(p))
    for ds in stats_by_ds:
        stats_by_ds[ds].sort(key=lambda st: st["split"])

    summary = {"config_hash": h, "datasets": {}, "overall": {}}
    ds_means = {k: [] for k in kinds}
    for ds in datasets:
        entry = {}
        for kind in kinds:
            mats = [SimilarityMatrix.load(p) for p in sorted((run_dir / "matrices").glob(f"{ds}__split*__{kind}.csv"))]
            if not mats:
                continue
            mean, keep = _aligned_mean(mats, ids)
            S = SimilarityMatrix(mean, kind, keep, ds)
            S.save(run_dir / "matrices" / f"mean__{ds}__{kind}.csv")
            ds_means[kind].append(S)
            order = cluster_order(mean)
            emit_heatmap(S, order, run_dir / "figures" / f"mean__{ds}__{kind}.svg", f"{ds} {kind} (mean of {len(mats)} splits)")
            entry.setdefault("n_splits_with_matrices", len(mats))
            entry.setdefault("cluster_order", {})[kind] = [keep[i] for i in order]
            entry.setdefault("top_pairs", {})[kind] = _top_pairs(mean, keep)
        st = stats_by_ds[ds]
        entry["mantel"] = _mantel_summary(st)
        entry["strategy_mean_aucpr"], entry["n_splits_with_ensembles"] = _strategy_summary(st, strategies)
        entry["diversity_correlations"] = _corr_summary(st, strategies, kinds)
        entry["regression"] = _regression_summary(st)
        summary["datasets"][ds] = entry

    overall = {"cluster_order": {}, "top_pairs": {}}
    for kind in kinds:
        if not ds_means[kind]:
            continue
        mean, keep = _aligned_mean(ds_means[kind], ids)
        S = SimilarityMatrix(mean, kind, keep, "all")
        S.save(run_dir / "matrices" / f"mean__all__{kind}.csv")
        order = cluster_order(mean)
        emit_heatmap(S, order, run_dir / "figures" / f"mean__all__{kind}.svg", f"{kind} (mean over datasets)")
        overall["cluster_order"][kind] = [keep[i] for i in order]
        overall["top_pairs"][kind] = _top_pairs(mean, keep)
    every = [st for ds in datasets for st in stats_by_ds[ds]]
    overall["mantel"] = _mantel_summary(every)
    overall["strategy_mean_aucpr"], overall["n_cells_with_ensembles"] = _strategy_summary(every, strategies)
    overall["diversity_correlations"] = _corr_summary(every, strategies, kinds)
    overall["regression"] = _regression_summary(every)
    failures = load_json(run_dir / "failures.json") if (run_dir / "failures.json").is_file() else []
    overall["n_failures"] = len(failures)
    summary["overall"] = overall

    rows = []
    for ds, entry in [*summary["datasets"].items(), ("all", overall)]:
        row = {"dataset": ds, **{s: entry["strategy_mean_aucpr"].get(s) for s in strategies}}
        row["n_cells"] = entry.get("n_splits_with_ensembles", entry.get("n_cells_with_ensembles"))
        row["config_hash"] = h
        rows.append(row)
    write_records_csv(run_dir / "ensembles" / "strategy_comparison.csv", rows, ["dataset", *strategies, "n_cells", "config_hash"])
    dump_json(run_dir / "stats" / "summary.json", summary)
    return summary
