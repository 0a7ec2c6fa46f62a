"""End-to-end experiment: splits, detectors, SHAP, similarities, Mantel, ensembles."""

from __future__ import annotations

import hashlib
import logging
import os
import shutil
import traceback
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from ..data import DataError, Dataset, SplitPair, load_csv, split, standardize
from ..detectors import DetectorConfig, fit, predict, score
from ..ensemble import aucpr, evaluate_all_ensembles
from ..explain import Background, ShapMatrix, default_budget, explain_dataset, summarize_background
from ..io import dump_json, write_records_csv
from ..similarity import SimilarityMatrix, build_similarity_matrix, to_dissimilarity
from ..stats import StatsError, pairwise_matrix_correlations, standardized_regression, vif
from .config import ConfigError, ExperimentConfig
from .report import build_aggregates

log = logging.getLogger(__name__)

WORKERS_ENV = "ADSHAP_WORKERS"

INTERPRETATIONS = {
    "score_similarity": "Pearson correlation between the two full test-set score vectors",
    "shap_coalitions": "2*d + 2048 per instance unless configured; full enumeration when 2**d - 2 fits",
    "background": "k-means centroids weighted by cluster share, no rounding to data values",
    "figure_mean": "matrices averaged over splits per dataset, then over datasets",
    "diversity": "reduction over pairwise dissimilarities 1 - S among ensemble members",
    "threshold": "(1 - contamination) linear-interpolated quantile of training scores; flagged if score > threshold",
}


def derive_seed(*parts) -> int:
    """Stable 32-bit seed from a master seed and cell identifiers."""
    blob = "|".join(str(p) for p in parts).encode()
    return int.from_bytes(hashlib.sha256(blob).digest()[:4], "little")


@dataclass
class DetectorOutcome:
    dataset: str
    split: int
    kind: str
    seed: int
    shap_seed: int
    scores: np.ndarray | None = None
    flagged: frozenset[int] | None = None
    threshold: float | None = None
    shap: ShapMatrix | None = None
    error: str | None = None
    stage: str | None = None


@dataclass
class CellResult:
    dataset: str
    split: int
    model_ids: tuple[str, ...]
    matrices: dict[str, SimilarityMatrix] = field(default_factory=dict)
    mantel: object = None
    ensembles: list[dict] = field(default_factory=list)
    stats: dict = field(default_factory=dict)


@dataclass
class RunReport:
    run_dir: Path
    config_hash: str
    cells: dict[tuple[str, int], CellResult]
    summary: dict
    failures: list[dict]


def _task(args):
    pair, bg, name, i, spec, seed, shap_seed, budget = args
    out = DetectorOutcome(name, i, spec.kind, seed, shap_seed)
    stage = "fit"
    try:
        cfg = DetectorConfig(spec.kind, spec.hyperparameters, spec.contamination, seed)
        det = fit(cfg, pair.train)
        stage = "score"
        out.scores = score(det, pair.test).values
        out.flagged = predict(det, pair.test)
        out.threshold = det.threshold_
        stage = "explain"
        out.shap = explain_dataset(det, pair.test, bg, budget, shap_seed)
    except Exception as exc:  # noqa: BLE001  (cells fail independently)
        out.error = f"{type(exc).__name__}: {exc}"
        out.stage = stage
        out.scores = out.flagged = out.shap = None
        log.debug("cell failure\n%s", traceback.format_exc())
    return out


def _resolve_workers(workers):
    if workers is None:
        workers = int(os.environ.get(WORKERS_ENV, "1") or 1)
    return max(1, int(workers))


def _load_datasets(cfg: ExperimentConfig) -> dict[str, Dataset]:
    out = {}
    for spec in cfg.datasets:
        if not Path(spec.path).is_file():
            raise ConfigError(f"dataset {spec.name!r}: file not found: {spec.path}")
        try:
            out[spec.name] = load_csv(spec.path, spec.label_column, name=spec.name)
        except DataError as exc:
            raise ConfigError(f"dataset {spec.name!r}: {exc}") from None
    return out


def _prepare_cell(cfg, ds: Dataset, i: int):
    pair = split(ds, cfg.train_fraction, seed=i)
    if cfg.standardize:
        pair = standardize(pair)
    bg_seed = derive_seed(cfg.seed, ds.name, i, "background")
    bg = summarize_background(pair.train, cfg.background_k, bg_seed)
    budget = cfg.shap_coalitions or default_budget(ds.d)
    tasks = []
    for det in cfg.detectors:
        s = derive_seed(cfg.seed, ds.name, i, det.kind)
        ss = derive_seed(cfg.seed, ds.name, i, det.kind, "shap")
        tasks.append((pair, bg, ds.name, i, det, s, ss, budget))
    return pair, bg, bg_seed, tasks


def _execute(tasks, workers):
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_task, tasks, chunksize=1))
    return [_task(t) for t in tasks]


def similarity_cell(cfg: ExperimentConfig, dataset: str, split_index: int, workers: int | None = None):
    """Similarity matrices of one (dataset, split) cell, computed with the run's seeds.

    Returns ``(matrices, failures)`` where ``matrices`` maps kind to
    ``SimilarityMatrix``.
    """
    names = [d.name for d in cfg.datasets]
    if dataset not in names:
        raise ConfigError(f"dataset: {dataset!r} is not in the config (have {names})")
    if not 0 <= split_index < cfg.n_splits:
        raise ConfigError(f"split: {split_index} out of range 0..{cfg.n_splits - 1}")
    cfg_one = replace(cfg, datasets=tuple(d for d in cfg.datasets if d.name == dataset))
    ds = _load_datasets(cfg_one)[dataset]
    pair, _, _, tasks = _prepare_cell(cfg, ds, split_index)
    outs = _execute(tasks, _resolve_workers(workers))
    ok = [o for o in outs if o.error is None]
    failures = [{"detector": o.kind, "stage": o.stage, "error": o.error} for o in outs if o.error]
    if len(ok) < 2:
        return {}, failures
    ids = tuple(o.kind for o in ok)
    artifacts = {"PS": [o.shap for o in ok], "NDCG": [o.shap for o in ok],
                 "SCORES": [o.scores for o in ok], "JACCARD": [o.flagged for o in ok]}
    mats = {k: build_similarity_matrix(k, artifacts[k], ids, dataset) for k in cfg.similarity_kinds}
    return mats, failures


def run_experiment(cfg: ExperimentConfig, workers: int | None = None) -> RunReport:
    """Run every (dataset, split) cell and write the report bundle.

    Output lives in ``<output_dir>/run-<hash>`` and depends only on the
    config and dataset contents, never on ``workers``.
    """
    workers = _resolve_workers(workers)
    datasets = _load_datasets(cfg)
    h = cfg.config_hash()
    run_dir = Path(cfg.output_dir) / f"run-{h[:12]}"
    if run_dir.exists():
        shutil.rmtree(run_dir)
    run_dir.mkdir(parents=True)
    bundle_cfg = cfg.to_dict()
    bundle_cfg.pop("output_dir")
    dump_json(run_dir / "config.json", {"config": bundle_cfg, "config_hash": h, "interpretations": INTERPRETATIONS})

    prepared = {}
    tasks = []
    for spec in cfg.datasets:
        for i in range(cfg.n_splits):
            pair, bg, bg_seed, cell_tasks = _prepare_cell(cfg, datasets[spec.name], i)
            prepared[(spec.name, i)] = (pair, bg, bg_seed)
            tasks.extend(cell_tasks)

    log.info("%d detector cells, %d workers", len(tasks), workers)
    outcomes = _execute(tasks, workers)

    failures = []
    by_cell: dict[tuple[str, int], list[DetectorOutcome]] = {}
    for o in outcomes:
        by_cell.setdefault((o.dataset, o.split), []).append(o)
        if o.error:
            failures.append({"dataset": o.dataset, "split": o.split, "detector": o.kind, "stage": o.stage, "error": o.error})

    cells = {}
    for key, outs in by_cell.items():
        pair, bg, bg_seed = prepared[key]
        cell, cell_failures = _merge_cell(cfg, h, key, pair, bg_seed, outs, run_dir)
        failures.extend(cell_failures)
        cells[key] = cell
        log.info("finished %s split %d", *key)

    failures.sort(key=lambda f: (f["dataset"], f["split"], f["detector"] or "", f["stage"]))
    dump_json(run_dir / "failures.json", failures)
    summary = build_aggregates(run_dir)
    return RunReport(run_dir, h, cells, summary, failures)


def _cell_name(name, i):
    return f"{name}__split{i}"


def _merge_cell(cfg, h, key, pair: SplitPair, bg_seed, outs, run_dir):
    name, i = key
    stem = _cell_name(name, i)
    ok = [o for o in outs if o.error is None]
    ids = tuple(o.kind for o in ok)
    failures = []
    cell = CellResult(name, i, ids)
    seeds = {
        "split": i,
        "background": bg_seed,
        "detectors": {o.kind: o.seed for o in outs},
        "shap": {o.kind: o.shap_seed for o in outs},
        "mantel": derive_seed(cfg.seed, name, i, "mantel"),
    }

    labels = pair.test.labels
    score_cols = {"row": pair.test_index.tolist(), "label": labels.tolist()}
    for o in ok:
        o.shap.save(run_dir / "shap" / f"{stem}__{o.kind}.csv")
        score_cols[f"score_{o.kind}"] = o.scores.tolist()
        score_cols[f"flagged_{o.kind}"] = [int(k in o.flagged) for k in range(pair.test.n)]
    cols = list(score_cols)
    write_records_csv(run_dir / "scores" / f"{stem}.csv",
                      [{c: score_cols[c][k] for c in cols} for k in range(pair.test.n)], cols)

    stats = {
        "dataset": name,
        "split": i,
        "config_hash": h,
        "seeds": seeds,
        "model_ids": list(ids),
        "n_train": pair.train.n,
        "n_test": pair.test.n,
        "n_test_anomalies": int(labels.sum()),
        "thresholds": {o.kind: o.threshold for o in ok},
        "n_flagged": {o.kind: len(o.flagged) for o in ok},
    }

    def fail(stage, exc):
        failures.append({"dataset": name, "split": i, "detector": None, "stage": stage, "error": f"{type(exc).__name__}: {exc}"})

    if len(ok) < 2:
        fail("similarity", ValueError(f"only {len(ok)} detector(s) succeeded"))
        dump_json(run_dir / "stats" / f"{stem}.json", stats)
        return cell, failures

    artifacts = {
        "PS": [o.shap for o in ok],
        "NDCG": [o.shap for o in ok],
        "SCORES": [o.scores for o in ok],
        "JACCARD": [o.flagged for o in ok],
    }
    for kind in cfg.similarity_kinds:
        S = build_similarity_matrix(kind, artifacts[kind], ids, name)
        cell.matrices[kind] = S
        S.save(run_dir / "matrices" / f"{stem}__{kind}.csv")
    dis = {k: to_dissimilarity(S) for k, S in cell.matrices.items()}

    if len(ids) >= 3 and len(dis) >= 2:
        table = pairwise_matrix_correlations(list(dis.values()), cfg.mantel_permutations, seeds["mantel"])
        cell.mantel = table
        stats["mantel"] = table.to_dict()

    has_both = 0 < labels.sum() < labels.size
    if not has_both:
        fail("ensembles", ValueError(f"test split has {int(labels.sum())} anomalies of {labels.size}; AUCPR undefined"))
    elif len(ids) < cfg.ensemble_size:
        fail("ensembles", ValueError(f"{len(ids)} detectors < ensemble size {cfg.ensemble_size}"))
    else:
        _ensemble_stage(cfg, cell, stats, ok, pair.test, dis, h)
        write_records_csv(run_dir / "ensembles" / f"{stem}.csv", cell.ensembles, _ensemble_columns(cfg))

    cell.stats = stats
    dump_json(run_dir / "stats" / f"{stem}.json", stats)
    return cell, failures


def _ensemble_columns(cfg):
    return (
        ["members", "strategy", "aucpr", "mean_member_aucpr", "gain"]
        + [f"diversity_{k.lower()}" for k in cfg.similarity_kinds]
        + ["config_hash"]
    )


def _ensemble_stage(cfg, cell, stats, ok, test, dis, h):
    scores = {o.kind: o.scores for o in ok}
    stats["individual_aucpr"] = {k: aucpr(v, test.labels) for k, v in scores.items()}
    rows = []
    corr = {}
    strategy_means = {}
    records_for_regression = None
    for strat in cfg.strategies:
        evs = {
            kind: evaluate_all_ensembles(scores, test, D, strat, cfg.ensemble_size, cfg.normalize_scores, cfg.diversity_reduction)
            for kind, D in dis.items()
        }
        first = next(iter(evs.values()))
        strategy_means[strat] = float(np.mean([r.aucpr for r in first.records]))
        corr[strat] = {
            kind: {"diversity_aucpr": ev.diversity_aucpr_corr, "diversity_gain": ev.diversity_gain_corr}
            for kind, ev in evs.items()
        }
        for n, rec in enumerate(first.records):
            row = {
                "members": "+".join(rec.member_ids),
                "strategy": strat,
                "aucpr": rec.aucpr,
                "mean_member_aucpr": rec.mean_member_aucpr,
                "gain": rec.gain,
                "config_hash": h,
            }
            for kind, ev in evs.items():
                row[f"diversity_{kind.lower()}"] = ev.records[n].diversity
            rows.append(row)
        if strat == "RANK" or records_for_regression is None:
            records_for_regression = (strat, evs[cfg.regression_metric].records)
    cell.ensembles = rows
    stats["strategy_mean_aucpr"] = strategy_means
    stats["diversity_correlations"] = corr

    strat, recs = records_for_regression
    X = np.array([[r.mean_member_aucpr, r.diversity] for r in recs])
    reg = {"strategy": strat, "metric": cfg.regression_metric, "target": cfg.regression_target}
    for target in ("gain", "aucpr"):
        y = [r.gain if target == "gain" else r.aucpr for r in recs]
        try:
            reg[target] = standardized_regression(y, X, target=target).to_dict()
        except StatsError as exc:
            reg[target] = {"error": str(exc)}
    try:
        reg["vif"] = vif(X).to_dict()
    except StatsError as exc:
        reg["vif"] = {"error": str(exc)}
    stats["regression"] = reg
