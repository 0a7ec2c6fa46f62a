"""Pairwise detector similarity from explanations, scores and flagged sets."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .detectors import ScoreVector
from .explain import ShapMatrix
from .io import read_matrix_csv, write_matrix_csv

KINDS = ("PS", "NDCG", "SCORES", "JACCARD")


class SimilarityError(ValueError):
    pass


def pearson(u, v) -> float:
    """Pearson correlation; 0 when either input has zero variance."""
    u = np.asarray(u, dtype=float).ravel()
    v = np.asarray(v, dtype=float).ravel()
    if u.shape != v.shape:
        raise SimilarityError(f"length mismatch: {u.size} vs {v.size}")
    if u.size < 2:
        raise SimilarityError("pearson needs at least 2 values")
    return float(_row_pearson(u[None, :], v[None, :])[0])


def _row_pearson(A, B):
    flat = (np.ptp(A, axis=1) == 0) | (np.ptp(B, axis=1) == 0)
    Ac = A - A.mean(1, keepdims=True)
    Bc = B - B.mean(1, keepdims=True)
    num = (Ac * Bc).sum(1)
    den = np.sqrt((Ac * Ac).sum(1) * (Bc * Bc).sum(1))
    with np.errstate(invalid="ignore", divide="ignore"):
        r = np.where(flat | (den == 0), 0.0, num / np.where(den == 0, 1.0, den))
    return np.clip(r, -1.0, 1.0)


def _values(m):
    return m.values if isinstance(m, (ShapMatrix, ScoreVector)) else np.asarray(m, dtype=float)


def _same_shape(A, B):
    if A.shape != B.shape:
        raise SimilarityError(f"shape mismatch: {A.shape} vs {B.shape}")


def shap_pearson_similarity(A, B) -> float:
    """Mean over instances of the Pearson correlation between SHAP rows."""
    A, B = _values(A), _values(B)
    _same_shape(A, B)
    if A.shape[0] == 0:
        raise SimilarityError("no instances to compare")
    return float(_row_pearson(A, B).mean())


def ndcg(relevance, ranking_scores) -> float:
    """NDCG of ``relevance`` under the order induced by ``ranking_scores``.

    Ties in the ranking go to the lower feature index. An all-zero relevance
    vector scores 1.
    """
    rel = np.asarray(relevance, dtype=float).ravel()
    sc = np.asarray(ranking_scores, dtype=float).ravel()
    if rel.shape != sc.shape or rel.size < 1:
        raise SimilarityError("ndcg needs two equal-length, non-empty vectors")
    if np.any(rel < 0) or np.any(sc < 0):
        raise SimilarityError("ndcg inputs must be non-negative")
    discount = 1.0 / np.log2(np.arange(2, rel.size + 2))
    order = np.lexsort((np.arange(sc.size), -sc))
    idcg = np.sort(rel)[::-1] @ discount
    if idcg == 0:
        return 1.0
    return float(min(1.0, (rel[order] @ discount) / idcg))


def shap_ndcg_similarity(A, B) -> float:
    """Symmetrized mean NDCG agreement of absolute SHAP rankings."""
    A, B = np.abs(_values(A)), np.abs(_values(B))
    _same_shape(A, B)
    if A.shape[0] == 0:
        raise SimilarityError("no instances to compare")
    total = sum(ndcg(a, b) + ndcg(b, a) for a, b in zip(A, B))
    return float(total / (2 * A.shape[0]))


def score_similarity(s_i, s_j) -> float:
    """Pearson correlation between two full score vectors."""
    return pearson(_values(s_i), _values(s_j))


def jaccard(a, b) -> float:
    a, b = set(a), set(b)
    union = a | b
    if not union:
        return 1.0
    return len(a & b) / len(union)


_PAIRWISE = {
    "PS": shap_pearson_similarity,
    "NDCG": shap_ndcg_similarity,
    "SCORES": score_similarity,
    "JACCARD": jaccard,
}


@dataclass(frozen=True, eq=False)
class SimilarityMatrix:
    values: np.ndarray
    kind: str
    model_ids: tuple[str, ...]
    dataset_id: str = ""

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        m = len(self.model_ids)
        if v.shape != (m, m):
            raise SimilarityError(f"matrix shape {v.shape} does not match {m} model ids")
        if not np.allclose(v, v.T, atol=1e-9, rtol=0):
            raise SimilarityError("similarity matrix is not symmetric")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "model_ids", tuple(self.model_ids))

    def save(self, path):
        path = Path(path)
        write_matrix_csv(path, self.values, self.model_ids, index=self.model_ids)
        meta = {"kind": self.kind, "dataset_id": self.dataset_id}
        path.with_suffix(path.suffix + ".json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")

    @classmethod
    def load(cls, path):
        path = Path(path)
        header, _, values = read_matrix_csv(path, has_index=True)
        sidecar = path.with_suffix(path.suffix + ".json")
        meta = json.loads(sidecar.read_text()) if sidecar.exists() else {"kind": "", "dataset_id": ""}
        return cls(values, meta["kind"], tuple(header), meta["dataset_id"])


@dataclass(frozen=True, eq=False)
class DissimilarityMatrix:
    values: np.ndarray
    kind: str
    model_ids: tuple[str, ...]
    dataset_id: str = ""

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.ndim != 2 or v.shape[0] != v.shape[1] or v.shape[0] != len(self.model_ids):
            raise SimilarityError(f"dissimilarity shape {v.shape} does not match {len(self.model_ids)} ids")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "model_ids", tuple(self.model_ids))

    def is_symmetric(self, atol=1e-9) -> bool:
        return bool(np.allclose(self.values, self.values.T, atol=atol, rtol=0))

    def index(self, model_id) -> int:
        try:
            return self.model_ids.index(model_id)
        except ValueError:
            raise SimilarityError(f"unknown model id {model_id!r}") from None

    @classmethod
    def from_csv(cls, path, kind=""):
        header, _, values = read_matrix_csv(path, has_index=True)
        return cls(values, kind, tuple(header))


def build_similarity_matrix(
    kind: str,
    artifacts: Sequence,
    model_ids: Sequence[str] | None = None,
    dataset_id: str = "",
) -> SimilarityMatrix:
    """Pairwise matrix for one metric; the diagonal is each model against itself.

    Artifacts are ``ShapMatrix`` objects for PS/NDCG, ``ScoreVector`` for
    SCORES and index sets for JACCARD.
    """
    kind = kind.upper()
    if kind not in _PAIRWISE:
        raise SimilarityError(f"unknown similarity kind {kind!r}")
    m = len(artifacts)
    if m < 2:
        raise SimilarityError("need at least two models")
    if model_ids is None:
        model_ids = [getattr(a, "detector_id", "") or f"m{i}" for i, a in enumerate(artifacts)]
    if kind != "JACCARD":
        shapes = {np.shape(_values(a)) for a in artifacts}
        if len(shapes) != 1:
            raise SimilarityError(f"artifacts have mismatched shapes {sorted(shapes)}")
    f = _PAIRWISE[kind]
    S = np.empty((m, m))
    for i in range(m):
        S[i, i] = f(artifacts[i], artifacts[i])
        for j in range(i + 1, m):
            S[i, j] = S[j, i] = f(artifacts[i], artifacts[j])
    return SimilarityMatrix(S, kind, tuple(model_ids), dataset_id)


def to_dissimilarity(S: SimilarityMatrix) -> DissimilarityMatrix:
    return DissimilarityMatrix(1.0 - S.values, S.kind, S.model_ids, S.dataset_id)
