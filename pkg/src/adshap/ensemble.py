"""Ensemble enumeration, score aggregation, diversity and AUCPR evaluation."""

from __future__ import annotations

import itertools
import math
from dataclasses import asdict, dataclass
from typing import Mapping, Sequence

import numpy as np
from scipy.stats import rankdata

from .data import Dataset
from .detectors import FittedDetector, ScoreVector, score
from .similarity import DissimilarityMatrix

STRATEGIES = ("RANK", "MAX", "MEAN")
REDUCTIONS = {"mean": np.mean, "min": np.min, "max": np.max}


class EnsembleError(ValueError):
    pass


@dataclass(frozen=True)
class EnsembleRecord:
    member_ids: tuple[str, ...]
    strategy: str
    diversity: float
    aucpr: float
    mean_member_aucpr: float
    gain: float

    def to_dict(self):
        d = asdict(self)
        d["member_ids"] = "+".join(self.member_ids)
        return d


@dataclass(frozen=True)
class EnsembleEvaluation:
    records: tuple[EnsembleRecord, ...]
    diversity_aucpr_corr: float | None
    diversity_gain_corr: float | None
    metric: str = ""
    strategy: str = ""


def enumerate_ensembles(model_ids: Sequence[str], size: int = 3) -> list[tuple[str, ...]]:
    """All ``C(m, size)`` member sets, lexicographic in the given order."""
    if not 1 <= size <= len(model_ids):
        raise EnsembleError(f"ensemble size {size} out of range for {len(model_ids)} models")
    return list(itertools.combinations(tuple(model_ids), size))


def _vals(s):
    return s.values if isinstance(s, ScoreVector) else np.asarray(s, dtype=float)


def aggregate(score_vectors: Sequence, strategy: str = "RANK", normalize: bool = False) -> ScoreVector:
    """Combine member scores per instance.

    RANK averages per-member average-tie ranks (1 = least anomalous); MAX
    and MEAN act on raw scores unless ``normalize`` z-scores each member first.
    """
    if not score_vectors:
        raise EnsembleError("aggregate needs at least one score vector")
    S = [_vals(s) for s in score_vectors]
    if len({s.shape for s in S}) != 1:
        raise EnsembleError("score vectors differ in length")
    S = np.vstack(S)
    strategy = strategy.upper()
    if strategy == "RANK":
        out = np.mean([rankdata(row, method="average") for row in S], axis=0)
    else:
        if normalize:
            sd = S.std(1, keepdims=True)
            S = (S - S.mean(1, keepdims=True)) / np.where(sd > 0, sd, 1.0)
        if strategy == "MAX":
            out = S.max(0)
        elif strategy == "MEAN":
            out = S.mean(0)
        else:
            raise EnsembleError(f"unknown strategy {strategy!r}; expected one of {STRATEGIES}")
    ids = [getattr(s, "detector_id", "") for s in score_vectors]
    return ScoreVector(out, "+".join(ids) if all(ids) else "")


def aucpr(scores, labels) -> float:
    """Average precision with tied scores entering the curve together."""
    s = _vals(scores).ravel()
    y = np.asarray(labels).ravel().astype(int)
    if s.shape != y.shape:
        raise EnsembleError("scores and labels differ in length")
    n_pos = int(y.sum())
    if n_pos == 0 or n_pos == y.size:
        raise EnsembleError("AUCPR needs both positive and negative labels")
    order = np.argsort(-s, kind="stable")
    s, y = s[order], y[order]
    # last index of each tie group
    ends = np.r_[np.flatnonzero(np.diff(s) != 0), s.size - 1]
    tp = np.cumsum(y)[ends]
    precision = tp / (ends + 1.0)
    recall = tp / n_pos
    return float(np.sum(np.diff(np.r_[0.0, recall]) * precision))


def ensemble_diversity(member_ids: Sequence[str], D: DissimilarityMatrix, reduction: str = "mean") -> float:
    """Reduction (mean by default) of the pairwise dissimilarities among members."""
    idx = [D.index(m) for m in member_ids]
    pairs = [D.values[i, j] for i, j in itertools.combinations(idx, 2)]
    if not pairs:
        return 0.0
    return float(REDUCTIONS[reduction](pairs))


def correlation_or_none(a, b) -> float | None:
    """Pearson r, or ``None`` when either side has zero variance."""
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    if a.size < 2 or np.ptp(a) == 0 or np.ptp(b) == 0:
        return None
    r = float(np.corrcoef(a, b)[0, 1])
    return r if math.isfinite(r) else None


def _score_map(detectors, test: Dataset) -> dict[str, np.ndarray]:
    if isinstance(detectors, Mapping):
        return {k: _vals(v) for k, v in detectors.items()}
    out = {}
    for det in detectors:
        if isinstance(det, FittedDetector):
            out[det.detector_id] = score(det, test).values
        else:
            out[det.detector_id] = _vals(det)
    return out


def evaluate_all_ensembles(
    detectors,
    test: Dataset,
    D: DissimilarityMatrix | None,
    strategy: str = "RANK",
    size: int = 3,
    normalize: bool = False,
    reduction: str = "mean",
) -> EnsembleEvaluation:
    """Score every size-``size`` ensemble and correlate diversity with AUCPR and gain.

    ``detectors`` is a list of fitted detectors, or a mapping of detector
    id to test-set scores in model order.
    """
    if test.labels is None:
        raise EnsembleError("test set has no labels")
    scores = _score_map(detectors, test)
    ids = list(scores)
    single = {k: aucpr(v, test.labels) for k, v in scores.items()}
    records = []
    for members in enumerate_ensembles(ids, size):
        agg = aggregate([scores[m] for m in members], strategy, normalize)
        ap = aucpr(agg, test.labels)
        mean_member = float(np.mean([single[m] for m in members]))
        div = ensemble_diversity(members, D, reduction) if D is not None else 0.0
        records.append(EnsembleRecord(members, strategy.upper(), div, ap, mean_member, ap - mean_member))
    div = [r.diversity for r in records]
    return EnsembleEvaluation(
        tuple(records),
        correlation_or_none(div, [r.aucpr for r in records]),
        correlation_or_none(div, [r.gain for r in records]),
        D.kind if D is not None else "",
        strategy.upper(),
    )


def compare_strategies(detectors, test: Dataset, size: int = 3, normalize: bool = False) -> dict[str, float]:
    """Mean ensemble AUCPR for each aggregation strategy."""
    scores = _score_map(detectors, test)
    out = {}
    for strat in STRATEGIES:
        ev = evaluate_all_ensembles(scores, test, None, strat, size, normalize)
        out[strat] = float(np.mean([r.aucpr for r in ev.records]))
    return out
