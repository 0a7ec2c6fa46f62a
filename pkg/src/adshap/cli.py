"""Command line entry point: ``adshap run|similarity|mantel|ensembles|report``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from .data import DataError
from .detectors import DetectorError
from .explain import ExplainError
from .io import load_json, read_records_csv
from .similarity import DissimilarityMatrix, SimilarityError
from .stats import StatsError, mantel_test
from .pipeline import ConfigError, ReportError, build_aggregates, load_config, run_experiment, similarity_cell

_USER_ERRORS = (ConfigError, DataError, DetectorError, ExplainError, SimilarityError, StatsError, ReportError, FileNotFoundError)


def _run_dir(cfg):
    return Path(cfg.output_dir) / f"run-{cfg.config_hash()[:12]}"


def cmd_run(args):
    cfg = load_config(args.config)
    rep = run_experiment(cfg, workers=args.workers)
    print(f"run directory: {rep.run_dir}")
    print(f"config hash:   {rep.config_hash}")
    means = rep.summary["overall"]["strategy_mean_aucpr"]
    print("mean ensemble AUCPR: " + ", ".join(f"{k}={v:.4f}" if v is not None else f"{k}=n/a" for k, v in means.items()))
    print(f"failures: {len(rep.failures)}")
    for f in rep.failures:
        where = f"{f['dataset']} split {f['split']}" + (f" {f['detector']}" if f["detector"] else "")
        print(f"  {where} [{f['stage']}]: {f['error']}")
    return 0


def cmd_similarity(args):
    cfg = load_config(args.config)
    mats, failures = similarity_cell(cfg, args.dataset, args.split, workers=args.workers)
    for f in failures:
        print(f"failed: {f['detector']} [{f['stage']}]: {f['error']}", file=sys.stderr)
    if not mats:
        print("fewer than two detectors succeeded; no matrices", file=sys.stderr)
        return 1
    kinds = [args.kind.upper()] if args.kind else list(mats)
    for kind in kinds:
        if kind not in mats:
            raise ConfigError(f"kind: {kind} is not among similarity_kinds {list(mats)}")
        S = mats[kind]
        print(f"# {kind} {args.dataset} split {args.split}")
        width = max(len(m) for m in S.model_ids) + 1
        print(" " * width + " ".join(f"{m:>8}" for m in S.model_ids))
        for m, row in zip(S.model_ids, S.values):
            print(f"{m:<{width}}" + " ".join(f"{v:8.4f}" for v in row))
        if args.out:
            S.save(Path(args.out) / f"{args.dataset}__split{args.split}__{kind}.csv")
    return 0


def _read_square(path):
    p = Path(path)
    if not p.is_file():
        raise FileNotFoundError(f"matrix file not found: {p}")
    try:
        return DissimilarityMatrix.from_csv(p)
    except (ValueError, IndexError) as exc:
        raise StatsError(f"{p}: not a labelled square matrix CSV ({exc})") from None


def cmd_mantel(args):
    A, B = _read_square(args.a), _read_square(args.b)
    if args.similarity:
        A = DissimilarityMatrix(1.0 - A.values, A.kind, A.model_ids)
        B = DissimilarityMatrix(1.0 - B.values, B.kind, B.model_ids)
    if A.model_ids != B.model_ids:
        raise StatsError(f"model labels differ: {list(A.model_ids)} vs {list(B.model_ids)}")
    res = mantel_test(A, B, args.perms, args.seed)
    print(f"r_m={res.r_m:.6f} p={res.p_value:.6f} permutations={res.n_permutations} seed={res.seed}")
    return 0


def cmd_ensembles(args):
    cfg = load_config(args.config)
    run_dir = _run_dir(cfg)
    if not (run_dir / "stats").is_dir():
        raise ReportError(f"no run for this config at {run_dir}; run `adshap run {args.config}` first")
    metric = args.metric.upper()
    if metric not in cfg.similarity_kinds:
        raise ConfigError(f"metric: {metric} is not among similarity_kinds {list(cfg.similarity_kinds)}")
    col = f"diversity_{metric.lower()}"
    print(f"{'dataset':<10} {'split':>5} {'strategy':<8} {'n':>4} {'r(div,AUCPR)':>13} {'r(div,gain)':>12}")
    for p in sorted((run_dir / "ensembles").glob("*__split*.csv")):
        rows = read_records_csv(p)
        ds, split = p.stem.rsplit("__split", 1)
        for strat in cfg.strategies:
            sub = [r for r in rows if r["strategy"] == strat]
            div = np.array([float(r[col]) for r in sub])
            out = []
            for key in ("aucpr", "gain"):
                y = np.array([float(r[key]) for r in sub])
                ok = div.size > 1 and np.ptp(div) > 0 and np.ptp(y) > 0
                out.append(f"{np.corrcoef(div, y)[0, 1]:.4f}" if ok else "n/a")
            print(f"{ds:<10} {split:>5} {strat:<8} {len(sub):>4} {out[0]:>13} {out[1]:>12}")
    return 0


def cmd_report(args):
    run_dir = Path(args.run_dir)
    summary = build_aggregates(run_dir)
    print(f"rebuilt aggregates in {run_dir}")
    for ds, entry in [*summary["datasets"].items(), ("all", summary["overall"])]:
        means = entry["strategy_mean_aucpr"]
        print(f"{ds:<8} " + " ".join(f"{k}={v:.4f}" if v is not None else f"{k}=n/a" for k, v in means.items()))
    failures = load_json(run_dir / "failures.json") if (run_dir / "failures.json").is_file() else []
    print(f"failures: {len(failures)}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="adshap", description="SHAP-based similarity analysis of anomaly detectors.")
    ap.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run the full experiment described by a config")
    p.add_argument("config")
    p.add_argument("--workers", type=int, default=None, help="processes (default: $ADSHAP_WORKERS or 1)")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("similarity", help="print the similarity matrices of one dataset split")
    p.add_argument("config")
    p.add_argument("--dataset", required=True)
    p.add_argument("--split", type=int, default=0)
    p.add_argument("--kind", default=None, help="PS, NDCG, SCORES or JACCARD (default: all configured)")
    p.add_argument("--out", default=None, help="also write the matrices under this directory")
    p.add_argument("--workers", type=int, default=None)
    p.set_defaults(func=cmd_similarity)

    p = sub.add_parser("mantel", help="Mantel test between two dissimilarity matrix CSVs")
    p.add_argument("a")
    p.add_argument("b")
    p.add_argument("--perms", type=int, default=999)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--similarity", action="store_true", help="inputs are similarities; convert with 1 - S")
    p.set_defaults(func=cmd_mantel)

    p = sub.add_parser("ensembles", help="diversity/performance correlations from a finished run")
    p.add_argument("config")
    p.add_argument("--metric", default="ps", choices=["ps", "ndcg", "scores", "jaccard", "PS", "NDCG", "SCORES", "JACCARD"])
    p.set_defaults(func=cmd_ensembles)

    p = sub.add_parser("report", help="rebuild aggregates and figures from a run directory")
    p.add_argument("run_dir")
    p.set_defaults(func=cmd_report)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except _USER_ERRORS as exc:
        print(f"adshap {args.command}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
