"""Instance-based source selection for the transfer step.

A source item is kept when its average cosine similarity to all target
document vectors strictly exceeds the threshold z; manually labeled target
samples may then be merged into the selected set.
"""

import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .embed import DocMatrix, DocVector
from .errors import (
    ConfigError,
    DataError,
    DuplicateKeyError,
    EmptySelectionError,
    ShapeError,
)

logger = logging.getLogger(__name__)

PROVENANCES = ("source", "manual_target")
METRICS = ("cosine",)
DEFAULT_SIMILARITY_THRESHOLD = 0.25


@dataclass(frozen=True)
class SimilarityConfig:
    threshold: float = DEFAULT_SIMILARITY_THRESHOLD
    metric: str = "cosine"

    def __post_init__(self):
        if not 0.0 < self.threshold < 1.0:
            raise ConfigError(f"similarity threshold must be in (0, 1), "
                              f"got {self.threshold}")
        if self.metric not in METRICS:
            raise ConfigError(f"metric must be one of {METRICS}, "
                              f"got {self.metric!r}")


@dataclass(frozen=True)
class LabeledItem:
    item_id: str
    matrix: DocMatrix
    vector: DocVector
    polarity: str
    provenance: str = "source"


@dataclass(frozen=True)
class LabeledDomainSet:
    items: tuple[LabeledItem, ...]

    def __len__(self) -> int:
        return len(self.items)

    def matrix_shape(self):
        return self.items[0].matrix.values.shape if self.items else None

    def validate(self) -> None:
        shape = self.matrix_shape()
        for item in self.items:
            if item.polarity not in ("positive", "negative"):
                raise DataError(f"item {item.item_id!r} has no valid polarity")
            if item.provenance not in PROVENANCES:
                raise DataError(f"item {item.item_id!r} has unknown provenance "
                                f"{item.provenance!r}")
            if item.matrix.values.shape != shape:
                raise ShapeError(f"item {item.item_id!r} matrix shape "
                                 f"{item.matrix.values.shape} differs from {shape}")


def cosine(u: np.ndarray, v: np.ndarray) -> float:
    """Cosine similarity, defined as 0.0 when either vector has norm 0."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape or u.ndim != 1:
        raise ShapeError(f"cosine needs equal-length vectors, got {u.shape} "
                         f"and {v.shape}")
    nu = np.linalg.norm(u)
    nv = np.linalg.norm(v)
    if nu == 0.0 or nv == 0.0:
        return 0.0
    return float(np.dot(u, v) / (nu * nv))


def _normalized_rows(vectors: Sequence[DocVector]) -> np.ndarray:
    mat = np.stack([np.asarray(v.values, dtype=np.float64) for v in vectors])
    norms = np.linalg.norm(mat, axis=1, keepdims=True)
    safe = np.where(norms == 0.0, 1.0, norms)
    return mat / safe


def avg_similarity(source_vec: DocVector, target_vecs: Sequence[DocVector]) -> float:
    """Mean cosine similarity of one source vector to every target vector."""
    if not target_vecs:
        raise DataError("average similarity needs at least one target vector")
    values = np.asarray(source_vec.values, dtype=np.float64)
    norm = np.linalg.norm(values)
    if norm == 0.0:
        return 0.0
    targets = _normalized_rows(target_vecs)
    if targets.shape[1] != values.shape[0]:
        raise ShapeError(f"source vector length {values.shape[0]} does not match "
                         f"target vector length {targets.shape[1]}")
    return float((targets @ (values / norm)).sum() / len(target_vecs))


def select_source(source: LabeledDomainSet, target_vecs: Sequence[DocVector],
                  z: "float | SimilarityConfig") -> LabeledDomainSet:
    """Keep the items whose average similarity strictly exceeds z."""
    config = z if isinstance(z, SimilarityConfig) else SimilarityConfig(threshold=z)
    z = config.threshold
    kept = tuple(item for item in source.items
                 if avg_similarity(item.vector, target_vecs) > z)
    logger.info("similarity selection kept %d of %d source items (z=%g)",
                len(kept), len(source), z)
    if not kept:
        raise EmptySelectionError(
            f"no source item has average similarity above z={z}; try a lower "
            "threshold")
    return LabeledDomainSet(items=kept)


def augment_with_manual(source: LabeledDomainSet,
                        manual: LabeledDomainSet) -> LabeledDomainSet:
    """Union of the source set with manually labeled target samples."""
    for item in manual.items:
        if item.provenance != "manual_target":
            raise DataError(f"manual item {item.item_id!r} has provenance "
                            f"{item.provenance!r}, expected 'manual_target'")
    if source.items and manual.items:
        if source.matrix_shape() != manual.matrix_shape():
            raise ShapeError(f"matrix shapes differ between sets: "
                             f"{source.matrix_shape()} vs {manual.matrix_shape()}")
    source_ids = {item.item_id for item in source.items}
    for item in manual.items:
        if item.item_id in source_ids:
            raise DuplicateKeyError(f"manual item {item.item_id!r} duplicates a "
                                    "source item")
    return LabeledDomainSet(items=source.items + manual.items)
