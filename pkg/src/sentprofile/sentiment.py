"""Sentiment model training, representation extraction and polarity features.

The sentiment classifier is one LSTM layer, a dropout layer on its final
hidden state and a single sigmoid unit. After training on the (selected or
augmented) source domain it serves three purposes: predicting polarity,
exposing its middle-layer activations as transferable representations, and
scoring per-post polarity rates for the two-dimensional polarity features.
"""

import copy
import hashlib
import logging
from dataclasses import dataclass

import numpy as np

from .corpus import TokenDocument, UserRecord, clean_tokens
from .domainsel import LabeledDomainSet
from .embed import DocMatrix, EmbeddingTable, doc_matrix
from .errors import AllOovError, ConfigError, DataError, ShapeError
from .gender import build_mlp, fit_softmax_classifier
from .nn import (
    DenseLayer,
    DropoutLayer,
    LSTMLayer,
    TrainConfig,
    binary_cross_entropy,
    make_optimizer,
    register_model,
)

logger = logging.getLogger(__name__)

REPRESENTATION_LAYERS = ("frozen_lstm", "frozen_dense")


@dataclass
class SentimentConfig:
    hidden_size: int = 64
    dropout_rate: float = 0.4

    def __post_init__(self):
        if self.hidden_size < 1:
            raise ConfigError("hidden_size must be >= 1")
        if not 0.0 <= self.dropout_rate < 1.0:
            raise ConfigError("dropout_rate must be in [0, 1)")


class SentimentModel:
    checkpoint_kind = "sentiment"

    def __init__(self, input_dim: int, hidden_size: int = 64,
                 dropout_rate: float = 0.4, seed: int = 0):
        rng = np.random.default_rng(seed)
        self.input_dim = input_dim
        self.hidden_size = hidden_size
        self.dropout_rate = dropout_rate
        self.seed = seed
        self.lstm = LSTMLayer(input_dim, hidden_size, rng=rng)
        self.dropout = DropoutLayer(dropout_rate)
        self.head = DenseLayer(hidden_size, 1, activation="sigmoid", rng=rng)
        self.trained = False
        self._final_hidden = None
        self._dense_preact = None

    def forward(self, mats: np.ndarray, lengths: np.ndarray,
                training: bool = False) -> np.ndarray:
        """mats: (B, T, d) sequences; returns polarity probabilities (B, 1).

        Caches the final hidden state and the pre-sigmoid head activation
        of the call for representation extraction.
        """
        h = self.lstm.forward(mats, lengths, training=training)
        hd = self.dropout.forward(h, training=training)
        probs = self.head.forward(hd, training=training)
        self._final_hidden = h
        self._dense_preact = self.head._cache[1]
        return probs

    def backward(self, d_probs: np.ndarray) -> None:
        grad = self.head.backward(d_probs)
        grad = self.dropout.backward(grad)
        self.lstm.backward(grad)

    def parameters(self):
        out = {}
        for name, value in self.lstm.params().items():
            out[f"lstm.{name}"] = value
        for name, value in self.head.params().items():
            out[f"head.{name}"] = value
        return out

    def gradients(self):
        out = {}
        for name in self.lstm.params():
            out[f"lstm.{name}"] = self.lstm.grads[name]
        for name in self.head.params():
            out[f"head.{name}"] = self.head.grads[name]
        return out

    def checksum(self) -> str:
        digest = hashlib.sha256()
        for name, value in sorted(self.parameters().items()):
            digest.update(name.encode())
            digest.update(np.ascontiguousarray(value, dtype="<f8").tobytes())
        return digest.hexdigest()

    def checkpoint_meta(self) -> dict:
        return {"input_dim": self.input_dim, "hidden_size": self.hidden_size,
                "dropout_rate": self.dropout_rate, "seed": self.seed,
                "trained": self.trained}

    @classmethod
    def from_checkpoint(cls, meta: dict, params) -> "SentimentModel":
        model = cls(meta["input_dim"], meta["hidden_size"],
                    meta["dropout_rate"], meta.get("seed", 0))
        own = model.parameters()
        for name, value in own.items():
            if name not in params or params[name].shape != value.shape:
                raise ShapeError(f"checkpoint parameter {name!r} missing or "
                                 "mis-shaped")
            value[...] = params[name]
        model.trained = bool(meta.get("trained", False))
        return model


register_model(SentimentModel.checkpoint_kind, SentimentModel)


@dataclass
class EpochStats:
    epoch: int
    train_loss: float
    heldout_loss: float
    heldout_accuracy: float


def _stack_items(items) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    mats = np.stack([item.matrix.values.T for item in items])
    lengths = np.array([item.matrix.effective_length for item in items])
    # padding past the longest effective length never changes anything;
    # dropping it just saves recurrence steps
    mats = mats[:, :int(lengths.max()), :]
    targets = np.array([[1.0 if item.polarity == "positive" else 0.0]
                        for item in items])
    return mats, lengths, targets


def _heldout_split(labels: np.ndarray, rng: np.random.Generator,
                   fraction: float = 0.1) -> tuple[np.ndarray, np.ndarray]:
    """Per-class split so both partitions keep both classes."""
    train_idx, held_idx = [], []
    for cls in (0.0, 1.0):
        members = np.flatnonzero(labels[:, 0] == cls)
        members = members[rng.permutation(len(members))]
        n_held = max(1, int(fraction * len(members))) if len(members) > 1 else 0
        held_idx.extend(members[:n_held])
        train_idx.extend(members[n_held:])
    return np.sort(np.array(train_idx)), np.sort(np.array(held_idx))


def train_sentiment(data: LabeledDomainSet, model_config: SentimentConfig | None,
                    train_config: TrainConfig):
    """Train the polarity classifier on a labeled domain set.

    Returns (model, per-epoch curve) where the curve tracks the loss and
    accuracy on a held-out tenth of the data. With `patience` set, training
    stops once the held-out loss has not improved for that many epochs.
    """
    model_config = model_config or SentimentConfig()
    items = data.items
    per_class = {"positive": 0, "negative": 0}
    for item in items:
        per_class[item.polarity] += 1
    if min(per_class.values()) < 2:
        raise DataError(f"need at least 2 items per polarity class, got "
                        f"{per_class}")
    data.validate()

    mats, lengths, targets = _stack_items(items)
    seq = np.random.SeedSequence(train_config.seed)
    split_seed, batch_seed, dropout_seed = seq.spawn(3)
    train_idx, held_idx = _heldout_split(targets,
                                         np.random.default_rng(split_seed))
    model = SentimentModel(input_dim=mats.shape[2],
                           hidden_size=model_config.hidden_size,
                           dropout_rate=model_config.dropout_rate,
                           seed=train_config.seed)
    model.dropout.rng = np.random.default_rng(dropout_seed)
    optimizer = make_optimizer(train_config)
    rng = np.random.default_rng(batch_seed)

    curve: list[EpochStats] = []
    best_loss = np.inf
    stale = 0
    for epoch in range(train_config.epochs):
        perm = rng.permutation(len(train_idx))
        order = train_idx[perm]
        batch_losses = []
        for start in range(0, len(order), train_config.batch_size):
            idx = order[start:start + train_config.batch_size]
            probs = model.forward(mats[idx], lengths[idx], training=True)
            loss, d_probs = binary_cross_entropy(probs, targets[idx])
            model.backward(d_probs)
            optimizer.step(model.parameters(), model.gradients())
            batch_losses.append(loss)
        held_probs = model.forward(mats[held_idx], lengths[held_idx],
                                   training=False)
        held_loss, _ = binary_cross_entropy(held_probs, targets[held_idx])
        held_acc = float(((held_probs > 0.5) == (targets[held_idx] > 0.5)).mean())
        curve.append(EpochStats(epoch=epoch + 1,
                                train_loss=float(np.mean(batch_losses)),
                                heldout_loss=float(held_loss),
                                heldout_accuracy=held_acc))
        if train_config.patience is not None:
            if held_loss < best_loss - 1e-9:
                best_loss = held_loss
                stale = 0
            else:
                stale += 1
                if stale >= train_config.patience:
                    logger.info("early stop after epoch %d", epoch + 1)
                    break
    model.trained = True
    return model, curve


def predict_polarity(model: SentimentModel, doc: DocMatrix) -> float:
    """Probability that the document is positive; dropout off."""
    if doc.values.shape[0] != model.input_dim:
        raise ShapeError(f"matrix rows {doc.values.shape[0]} do not match model "
                         f"input dim {model.input_dim}")
    probs = model.forward(doc.values.T[None, :, :],
                          np.array([doc.effective_length]), training=False)
    return float(probs[0, 0])


@dataclass
class SentimentRepresentation:
    values: np.ndarray
    layer_source: str


def extract_representation(model: SentimentModel, doc: DocMatrix,
                           layer: str = "frozen_lstm") -> SentimentRepresentation:
    """Middle-layer activations for one document, parameters untouched.

    frozen_lstm: the final hidden state (length H). frozen_dense: the
    pre-sigmoid activation of the head (length 1).
    """
    if layer not in REPRESENTATION_LAYERS:
        raise ConfigError(f"layer must be one of {REPRESENTATION_LAYERS}, "
                          f"got {layer!r}")
    if not model.trained:
        raise DataError("cannot extract representations from an untrained model")
    model.forward(doc.values.T[None, :, :], np.array([doc.effective_length]),
                  training=False)
    if layer == "frozen_lstm":
        values = model._final_hidden[0].copy()
    else:
        values = model._dense_preact[0].copy()
    return SentimentRepresentation(values=values, layer_source=layer)


def extract_representations(model: SentimentModel, mats: np.ndarray,
                            lengths: np.ndarray, layer: str = "frozen_lstm",
                            batch_size: int = 256) -> np.ndarray:
    """Batched extraction over many documents; rows align with the input."""
    if layer not in REPRESENTATION_LAYERS:
        raise ConfigError(f"layer must be one of {REPRESENTATION_LAYERS}, "
                          f"got {layer!r}")
    if not model.trained:
        raise DataError("cannot extract representations from an untrained model")
    chunks = []
    for start in range(0, mats.shape[0], batch_size):
        model.forward(mats[start:start + batch_size],
                      lengths[start:start + batch_size], training=False)
        chunks.append((model._final_hidden if layer == "frozen_lstm"
                       else model._dense_preact).copy())
    return np.concatenate(chunks)


@dataclass
class PolarityFeatures:
    doc_polarity: float
    positive_rate: float
    post_count: int

    @property
    def values(self) -> np.ndarray:
        return np.array([self.doc_polarity, self.positive_rate])


def polarity_features(model: SentimentModel, user: UserRecord,
                      table: EmbeddingTable, r: int,
                      stopwords=frozenset(), patterns=()) -> PolarityFeatures:
    """Document polarity plus the fraction of the user's posts predicted
    positive (probability > 0.5).

    Posts whose cleaned tokens are all out of vocabulary cannot be scored
    and are excluded from the rate's denominator; if every post is
    unscoreable this is an error.
    """
    post_matrices = []
    all_tokens: list[str] = []
    for j, post in enumerate(user.posts):
        tokens = clean_tokens(post, stopwords, patterns)
        all_tokens.extend(tokens)
        try:
            post_matrices.append(doc_matrix(
                TokenDocument(doc_id=f"{user.user_id}/post{j}",
                              tokens=tuple(tokens)), table, r))
        except AllOovError:
            continue
    if not post_matrices:
        raise AllOovError(f"every post of user {user.user_id!r} is out of "
                          "vocabulary")
    positives = sum(1 for m in post_matrices if predict_polarity(model, m) > 0.5)
    doc = doc_matrix(TokenDocument(doc_id=user.user_id, tokens=tuple(all_tokens)),
                     table, r)
    return PolarityFeatures(doc_polarity=predict_polarity(model, doc),
                            positive_rate=positives / len(post_matrices),
                            post_count=len(post_matrices))


class FinetuneModel:
    """Two-input composite for finetuned transfer.

    Input A is the document vector, input B the document matrix run through
    a trainable copy of the sentiment LSTM (the sentiment head is
    discarded); the concatenation feeds the gender MLP. The gender loss
    backpropagates into the LSTM, scaled by lstm_lr_scale (0 recovers the
    frozen pipeline exactly).
    """

    def __init__(self, lstm: LSTMLayer, vec_dim: int,
                 hidden=(50, 10), dropout_rate: float = 0.4, seed: int = 0,
                 lstm_lr_scale: float = 1.0):
        self.lstm = lstm
        self.vec_dim = vec_dim
        self.mlp = build_mlp(vec_dim + lstm.hidden_dim, tuple(hidden),
                             dropout_rate, n_classes=2, seed=seed)
        self.lstm_lr_scale = lstm_lr_scale
        self.history: list[dict] = []

    def forward_batch(self, inputs: tuple, training: bool = False) -> np.ndarray:
        vecs, mats, lengths = inputs
        h = self.lstm.forward(mats, lengths, training=training)
        features = np.concatenate([vecs, h], axis=1)
        return self.mlp.forward(features, training=training)

    def backward(self, d_probs: np.ndarray) -> None:
        d_features = self.mlp.backward(d_probs)
        self.lstm.backward(d_features[:, self.vec_dim:])

    def parameters(self):
        out = {f"mlp.{k}": v for k, v in self.mlp.parameters().items()}
        for name, value in self.lstm.params().items():
            out[f"lstm.{name}"] = value
        return out

    def gradients(self):
        out = {f"mlp.{k}": v for k, v in self.mlp.gradients().items()}
        for name in self.lstm.params():
            out[f"lstm.{name}"] = self.lstm.grads[name]
        return out

    def dropout_layers(self):
        return self.mlp.dropout_layers()

    def lr_scales(self):
        if self.lstm_lr_scale == 1.0:
            return None
        return {f"lstm.{name}": self.lstm_lr_scale for name in self.lstm.params()}

    def predict_proba(self, vecs, mats, lengths) -> np.ndarray:
        return self.forward_batch((vecs, mats, lengths), training=False)


def build_finetune_model(model: SentimentModel, vec_dim: int,
                         hidden=(50, 10), dropout_rate: float = 0.4,
                         seed: int = 0, lstm_lr_scale: float = 1.0) -> FinetuneModel:
    """Composite of a trainable copy of the trained LSTM and a fresh MLP."""
    if not model.trained:
        raise DataError("finetuning needs a trained sentiment model")
    return FinetuneModel(lstm=copy.deepcopy(model.lstm), vec_dim=vec_dim,
                         hidden=hidden, dropout_rate=dropout_rate, seed=seed,
                         lstm_lr_scale=lstm_lr_scale)


def train_finetune(model: FinetuneModel, vecs: np.ndarray, mats: np.ndarray,
                   lengths: np.ndarray, labels: np.ndarray,
                   config: TrainConfig) -> FinetuneModel:
    """Train the composite with the same loop as the plain gender MLP."""
    model.history = fit_softmax_classifier(model, (vecs, mats, lengths),
                                           labels, config)
    return model
