"""Gender classification head.

Features are the user's document vector optionally concatenated with a
sentiment representation (or the two polarity features). The classifier is
a fixed MLP: dense(in -> 50, relu), dropout(0.4), dense(50 -> 10, relu),
dense(10 -> 2, softmax).
"""

import hashlib
import json
import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DataError, ParseError, SchemaError, ShapeError
from .nn import (
    DenseLayer,
    DropoutLayer,
    Network,
    TrainConfig,
    categorical_cross_entropy,
    make_optimizer,
    register_model,
)

logger = logging.getLogger(__name__)

CLASSES = ("male", "female")
DEFAULT_HIDDEN = (50, 10)
DEFAULT_DROPOUT = 0.4


@dataclass
class FeatureVector:
    values: np.ndarray
    layout: tuple[str, ...]
    segment_lengths: tuple[int, ...] | None = None


def concat_features(v, h=None) -> FeatureVector:
    """Concatenate the document vector with an optional sentiment part.

    `v` and `h` may be arrays or objects exposing `.values`; `h` may also
    be a (doc_polarity, positive_rate) pair. Without `h` the layout is the
    plain document-vector baseline.
    """
    v_values = np.asarray(getattr(v, "values", v), dtype=np.float64).reshape(-1)
    if h is None:
        return FeatureVector(values=v_values, layout=("doc_vector",),
                             segment_lengths=(v_values.size,))
    h_values = np.asarray(getattr(h, "values", h), dtype=np.float64).reshape(-1)
    return FeatureVector(values=np.concatenate([v_values, h_values]),
                         layout=("doc_vector", "sentiment"),
                         segment_lengths=(v_values.size, h_values.size))


def stack_features(features: Sequence[FeatureVector]) -> np.ndarray:
    """Stack feature vectors into one matrix, rejecting mixed lengths."""
    if not features:
        raise DataError("no feature vectors")
    width = features[0].values.size
    layout = features[0].layout
    for f in features[1:]:
        if f.values.size != width:
            raise ShapeError(f"feature length {f.values.size} differs from "
                             f"{width}; sentiment parts are inconsistent")
        if f.layout != layout:
            raise ShapeError(f"feature layout {f.layout} differs from {layout}")
    return np.stack([f.values for f in features])


def build_mlp(input_dim: int, hidden: tuple[int, int] = DEFAULT_HIDDEN,
              dropout_rate: float = DEFAULT_DROPOUT, n_classes: int = 2,
              seed: int = 0) -> Network:
    rng = np.random.default_rng(seed)
    layers = [DenseLayer(input_dim, hidden[0], activation="relu", rng=rng),
              DropoutLayer(dropout_rate),
              DenseLayer(hidden[0], hidden[1], activation="relu", rng=rng),
              DenseLayer(hidden[1], n_classes, activation="softmax", rng=rng)]
    return Network(layers, seed=seed)


class GenderModel:
    checkpoint_kind = "gender"

    def __init__(self, input_dim: int, hidden: tuple[int, int] = DEFAULT_HIDDEN,
                 dropout_rate: float = DEFAULT_DROPOUT, seed: int = 0,
                 layout: tuple[str, ...] = ("doc_vector",)):
        self.input_dim = input_dim
        self.hidden = tuple(hidden)
        self.dropout_rate = dropout_rate
        self.seed = seed
        self.layout = tuple(layout)
        self.network = build_mlp(input_dim, self.hidden, dropout_rate,
                                 len(CLASSES), seed)
        self.history: list[dict] = []

    # shared classifier-fitting protocol -------------------------------
    def forward_batch(self, inputs: tuple, training: bool = False) -> np.ndarray:
        return self.network.forward(inputs[0], training=training)

    def backward(self, d_probs: np.ndarray) -> None:
        self.network.backward(d_probs)

    def parameters(self):
        return self.network.parameters()

    def gradients(self):
        return self.network.gradients()

    def dropout_layers(self):
        return self.network.dropout_layers()

    def lr_scales(self):
        return None

    # -------------------------------------------------------------------
    def predict_proba(self, features: np.ndarray) -> np.ndarray:
        features = np.asarray(features, dtype=np.float64)
        if features.ndim == 1:
            features = features[None, :]
        if features.shape[1] != self.input_dim:
            raise ShapeError(f"model expects features of length {self.input_dim}, "
                             f"got {features.shape[1]}")
        return self.network.forward(features, training=False)

    def checksum(self) -> str:
        digest = hashlib.sha256()
        for name, value in self.parameters().items():
            digest.update(name.encode())
            digest.update(np.ascontiguousarray(value, dtype="<f8").tobytes())
        return digest.hexdigest()

    def checkpoint_meta(self) -> dict:
        return {"input_dim": self.input_dim, "hidden": list(self.hidden),
                "dropout_rate": self.dropout_rate, "seed": self.seed,
                "layout": list(self.layout)}

    @classmethod
    def from_checkpoint(cls, meta: dict, params) -> "GenderModel":
        model = cls(meta["input_dim"], tuple(meta["hidden"]),
                    meta["dropout_rate"], meta.get("seed", 0),
                    tuple(meta.get("layout", ("doc_vector",))))
        model.network.load_parameters(params)
        return model


register_model(GenderModel.checkpoint_kind, GenderModel)


def fit_softmax_classifier(model, inputs: tuple, labels: np.ndarray,
                           config: TrainConfig, lr_scales=None) -> list[dict]:
    """Mini-batch training of any model following the classifier protocol.

    inputs: tuple of arrays sharing axis 0 with labels (class indices).
    Batch order and dropout masks derive from config.seed, so identical
    calls reproduce identical parameters.
    """
    n = labels.shape[0]
    for arr in inputs:
        if arr.shape[0] != n:
            raise ShapeError("all input arrays must align with the labels")
    n_classes = model.forward_batch(tuple(a[:1] for a in inputs)).shape[1]
    onehot = np.eye(n_classes)[labels]
    seq = np.random.SeedSequence(config.seed)
    batch_rng_seed, dropout_seed = seq.spawn(2)
    rng = np.random.default_rng(batch_rng_seed)
    for layer, child in zip(model.dropout_layers(),
                            dropout_seed.spawn(max(1, len(model.dropout_layers())))):
        layer.rng = np.random.default_rng(child)
    optimizer = make_optimizer(config)
    if lr_scales is None:
        lr_scales = model.lr_scales()
    history = []
    for epoch in range(config.epochs):
        perm = rng.permutation(n)
        losses = []
        for start in range(0, n, config.batch_size):
            idx = perm[start:start + config.batch_size]
            batch = tuple(a[idx] for a in inputs)
            probs = model.forward_batch(batch, training=True)
            loss, d_probs = categorical_cross_entropy(probs, onehot[idx])
            model.backward(d_probs)
            optimizer.step(model.parameters(), model.gradients(), lr_scales)
            losses.append(loss)
        probs = model.forward_batch(inputs, training=False)
        accuracy = float((probs.argmax(axis=1) == labels).mean())
        history.append({"epoch": epoch + 1,
                        "train_loss": float(np.mean(losses)),
                        "train_accuracy": accuracy})
    return history


def train_gender(features, labels: Sequence[str], config: TrainConfig,
                 hidden: tuple[int, int] = DEFAULT_HIDDEN,
                 dropout_rate: float = DEFAULT_DROPOUT) -> GenderModel:
    """Train the MLP on feature vectors with string labels."""
    if isinstance(features, np.ndarray):
        matrix = np.asarray(features, dtype=np.float64)
        layout = ("doc_vector",)
    else:
        matrix = stack_features(features)
        layout = features[0].layout
    unknown = set(labels) - set(CLASSES)
    if unknown:
        raise DataError(f"unknown class labels: {sorted(unknown)}")
    label_idx = np.array([CLASSES.index(l) for l in labels])
    if len(set(labels)) < 2:
        raise DataError("training data holds a single class")
    if matrix.shape[0] != label_idx.shape[0]:
        raise ShapeError("features and labels must align")
    model = GenderModel(matrix.shape[1], hidden, dropout_rate,
                        seed=config.seed, layout=layout)
    model.history = fit_softmax_classifier(model, (matrix,), label_idx, config)
    return model


@dataclass
class GenderPrediction:
    label: str
    probabilities: np.ndarray  # (2,) aligned with CLASSES


def predict_gender(model: GenderModel, features) -> GenderPrediction:
    """Argmax prediction; exact ties go to the first class (male)."""
    values = np.asarray(getattr(features, "values", features), dtype=np.float64)
    probs = model.predict_proba(values.reshape(1, -1))[0]
    return GenderPrediction(label=CLASSES[int(np.argmax(probs))],
                            probabilities=probs)


def write_features(path, rows: Sequence[tuple[str, str, FeatureVector]]) -> None:
    """rows: (user_id, label, feature). JSONL with layout names echoed."""
    with open(path, "w", encoding="utf-8") as fh:
        for user_id, label, feature in rows:
            fh.write(json.dumps({"user_id": user_id, "label": label,
                                 "layout": list(feature.layout),
                                 "values": [float(x) for x in feature.values]})
                     + "\n")


def read_features(path) -> list[tuple[str, str, FeatureVector]]:
    rows = []
    with open(path, encoding="utf-8") as fh:
        for number, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"invalid JSON ({exc.msg})", number)
            for field in ("user_id", "label", "layout", "values"):
                if field not in record:
                    raise SchemaError(f"missing field {field!r}", number)
            if record["label"] not in CLASSES:
                raise SchemaError(f"unknown label {record['label']!r}", number)
            values = np.asarray(record["values"], dtype=np.float64)
            layout = tuple(record["layout"])
            lengths = (values.size,) if len(layout) == 1 else None
            rows.append((record["user_id"], record["label"],
                         FeatureVector(values=values, layout=layout,
                                       segment_lengths=lengths)))
    return rows
