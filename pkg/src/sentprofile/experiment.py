"""Cross-validated experiment orchestration.

One experiment fixes a document representation, a sentiment mode and a
source-selection mode, then runs stratified k-fold cross validation: word
embeddings and document representations are fit once on the whole corpus
(they use no gender labels), the sentiment model is trained per fold on
the configured source data, minority oversampling touches only the
training partition, and the gender classifier is trained and scored per
fold for every entry of the epoch grid.
"""

import csv
import hashlib
import io
import json
import logging
import time
from dataclasses import dataclass, fields, replace
from pathlib import Path

import numpy as np

from .corpus import (
    SourceReview,
    TokenDocument,
    build_virtual_documents,
    clean_tokens,
    load_manual_records,
    load_source_reviews,
    load_stopwords,
    load_user_records,
)
from .domainsel import LabeledDomainSet, LabeledItem, augment_with_manual, select_source
from .embed import (
    AllOovError,
    EmbedConfig,
    doc_matrix,
    doc_vector,
    gender_keywords,
    load_embeddings,
    tfidf_representation,
    train_skipgram,
)
from .errors import ConfigError, DataError, FormatError, PipelineError, TrainingError
from .folds import stratified_kfold
from .gender import CLASSES, train_gender
from .nn import TrainConfig
from .resample import ResampleConfig, _smote_core, smote
from .sentiment import (
    SentimentConfig,
    build_finetune_model,
    extract_representations,
    polarity_features,
    train_finetune,
    train_sentiment,
)

logger = logging.getLogger(__name__)

REPRESENTATIONS = ("avg_vector", "tfidf", "keyword_tfidf")
SENTIMENT_MODES = ("none", "polarity_features", "frozen_lstm", "frozen_dense",
                   "finetuned_lstm")
SOURCE_MODES = ("entire", "high_similarity", "entire_plus_manual",
                "high_similarity_plus_manual")


@dataclass
class ExperimentConfig:
    representation: str = "avg_vector"
    sentiment_mode: str = "none"
    source_mode: str = "entire"
    smote: bool = False
    smote_k: int = 5
    smote_ratio: float = 1.0
    smote_variant: str = "paper"
    z: float = 0.25
    epochs: tuple[int, ...] = (100,)
    seed: int = 0
    folds: int = 5
    # preprocessing / embedding
    dimension: int = 100
    window: int = 5
    negatives: int = 5
    embed_epochs: int = 5
    min_count: int = 2
    r: int = 500
    keyword_top_n: int = 500
    # sentiment model
    hidden_size: int = 64
    sentiment_dropout: float = 0.4
    sentiment_epochs: int = 30
    # shared training
    batch_size: int = 32
    learning_rate: float = 1e-3
    optimizer: str = "adam"
    mlp_dropout: float = 0.4

    def validate(self) -> None:
        if self.representation not in REPRESENTATIONS:
            raise ConfigError(f"representation must be one of {REPRESENTATIONS}, "
                              f"got {self.representation!r}")
        if self.sentiment_mode not in SENTIMENT_MODES:
            raise ConfigError(f"sentiment_mode must be one of {SENTIMENT_MODES}, "
                              f"got {self.sentiment_mode!r}")
        if self.source_mode not in SOURCE_MODES:
            raise ConfigError(f"source_mode must be one of {SOURCE_MODES}, "
                              f"got {self.source_mode!r}")
        if not self.epochs:
            raise ConfigError("epochs grid must not be empty")
        if any(e < 1 for e in self.epochs):
            raise ConfigError("every epochs entry must be >= 1")
        if self.folds < 2:
            raise ConfigError("folds must be >= 2")
        if "high_similarity" in self.source_mode and not 0.0 < self.z < 1.0:
            raise ConfigError(f"z must be in (0, 1), got {self.z}")
        ResampleConfig(k=self.smote_k, target_ratio=self.smote_ratio,
                       seed=self.seed, variant=self.smote_variant)
        EmbedConfig(dimension=self.dimension, window=self.window,
                    negatives=self.negatives, epochs=self.embed_epochs,
                    min_count=self.min_count, seed=self.seed)
        TrainConfig(epochs=min(self.epochs), batch_size=self.batch_size,
                    learning_rate=self.learning_rate, optimizer=self.optimizer)

    def to_dict(self) -> dict:
        out = {}
        for f in fields(self):
            value = getattr(self, f.name)
            out[f.name] = list(value) if isinstance(value, tuple) else value
        return out

    @classmethod
    def from_dict(cls, raw: dict) -> "ExperimentConfig":
        known = {f.name: f for f in fields(cls)}
        kwargs = {}
        for key, value in raw.items():
            if key not in known:
                raise ConfigError(f"unknown config key {key!r}")
            if key == "epochs":
                value = tuple(int(v) for v in value)
            kwargs[key] = value
        return cls(**kwargs)

    def config_hash(self) -> str:
        text = json.dumps(self.to_dict(), sort_keys=True)
        return hashlib.sha256(text.encode("utf-8")).hexdigest()[:12]


_BOOL_VALUES = {"true": True, "false": False, "1": True, "0": False,
                "yes": True, "no": False}


def parse_config_text(text: str) -> dict:
    """Flat key=value configuration, '#' comments, values typed per field."""
    types = {f.name: f.type for f in fields(ExperimentConfig)}
    raw: dict = {}
    for number, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"config line {number}: expected key=value, "
                              f"got {line!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if key not in types:
            raise ConfigError(f"config line {number}: unknown key {key!r}")
        try:
            if key == "epochs":
                raw[key] = tuple(int(v) for v in value.split(",") if v.strip())
            elif types[key] is bool:
                if value.lower() not in _BOOL_VALUES:
                    raise ValueError(value)
                raw[key] = _BOOL_VALUES[value.lower()]
            elif types[key] is int:
                raw[key] = int(value)
            elif types[key] is float:
                raw[key] = float(value)
            else:
                raw[key] = value
        except ValueError:
            raise ConfigError(f"config line {number}: cannot parse {value!r} "
                              f"for key {key!r}")
    return raw


def load_config_file(path) -> dict:
    with open(path, encoding="utf-8") as fh:
        return parse_config_text(fh.read())


@dataclass
class DataPaths:
    users: str
    reviews: str | None = None
    stopwords: str | None = None
    manual: str | None = None
    embeddings: str | None = None


@dataclass
class EpochColumn:
    epochs: int
    fold_accuracies: list[float]

    @property
    def mean_accuracy(self) -> float:
        return float(np.mean(self.fold_accuracies))


@dataclass
class EvalReport:
    config: dict
    config_hash: str
    seed: int
    columns: list[EpochColumn]
    timing_seconds: float | None = None
    selection: dict | None = None

    def to_json(self) -> str:
        """Canonical serialization; wall-clock timing is intentionally left
        out so identical runs produce identical bytes."""
        payload = {
            "config": self.config,
            "config_hash": self.config_hash,
            "seed": self.seed,
            "results": [{"epochs": col.epochs,
                         "folds": [float(a) for a in col.fold_accuracies],
                         "mean": col.mean_accuracy}
                        for col in self.columns],
        }
        if self.selection is not None:
            payload["selection"] = self.selection
        return json.dumps(payload, sort_keys=True, indent=2) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "EvalReport":
        try:
            payload = json.loads(text)
        except json.JSONDecodeError as exc:
            raise FormatError(f"invalid report JSON: {exc.msg}")
        columns = [EpochColumn(epochs=entry["epochs"],
                               fold_accuracies=list(entry["folds"]))
                   for entry in payload["results"]]
        return cls(config=payload["config"], config_hash=payload["config_hash"],
                   seed=payload["seed"], columns=columns,
                   selection=payload.get("selection"))

    def best_mean(self) -> float:
        return max(col.mean_accuracy for col in self.columns)


def emit_report(report: EvalReport, fmt: str = "json", out=None) -> str:
    """Render a report as canonical json, per-cell csv, or a fold-by-epoch
    text table; writes to `out` when given, otherwise returns the string."""
    if fmt == "json":
        text = report.to_json()
    elif fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf)
        writer.writerow(["fold", "accuracy", "epochs", "config_hash"])
        for col in report.columns:
            for i, acc in enumerate(col.fold_accuracies):
                writer.writerow([f"D{i + 1}", f"{acc:.6f}", col.epochs,
                                 report.config_hash])
        text = buf.getvalue()
    elif fmt == "table":
        header = ["fold"] + [str(col.epochs) for col in report.columns]
        rows = []
        n_folds = len(report.columns[0].fold_accuracies)
        for i in range(n_folds):
            rows.append([f"D{i + 1}"] + [f"{col.fold_accuracies[i] * 100:.2f}"
                                         for col in report.columns])
        rows.append(["avg"] + [f"{col.mean_accuracy * 100:.2f}"
                               for col in report.columns])
        widths = [max(len(r[j]) for r in [header] + rows)
                  for j in range(len(header))]
        lines = ["  ".join(cell.rjust(widths[j]) for j, cell in enumerate(row))
                 for row in [header] + rows]
        text = "\n".join(lines) + "\n"
    else:
        raise ConfigError(f"unknown report format {fmt!r}")
    if out is not None:
        Path(out).write_text(text, encoding="utf-8")
    return text


def _fold_seed(seed: int, fold_index: int, salt: int) -> int:
    return int(np.random.SeedSequence((seed, fold_index, salt))
               .generate_state(1)[0])


def load_corpora(paths: DataPaths):
    """Load, clean and assemble both corpora."""
    users = load_user_records(paths.users)
    stopwords = load_stopwords(paths.stopwords) if paths.stopwords else frozenset()
    docs = build_virtual_documents(users, stopwords, on_empty="drop")
    reviews = []
    if paths.reviews:
        for review in load_source_reviews(paths.reviews):
            tokens = clean_tokens(review.tokens, stopwords)
            if tokens:
                reviews.append(SourceReview(review_id=review.review_id,
                                            tokens=tuple(tokens),
                                            polarity=review.polarity))
            else:
                logger.warning("dropping review %s: emptied by cleaning",
                               review.review_id)
    return users, docs, reviews, stopwords


def fit_embeddings(config: ExperimentConfig, docs, reviews):
    """One shared table trained on the union of both token streams."""
    embed_config = EmbedConfig(dimension=config.dimension, window=config.window,
                               negatives=config.negatives,
                               epochs=config.embed_epochs,
                               min_count=config.min_count, seed=config.seed)
    return train_skipgram(list(docs) + list(reviews), embed_config)


def build_source_items(reviews, table, r: int,
                       provenance: str = "source") -> LabeledDomainSet:
    items = []
    for review in reviews:
        try:
            items.append(LabeledItem(item_id=review.review_id,
                                     matrix=doc_matrix(review, table, r),
                                     vector=doc_vector(review, table),
                                     polarity=review.polarity,
                                     provenance=provenance))
        except AllOovError:
            logger.warning("dropping review %s: all tokens out of vocabulary",
                           review.review_id)
    return LabeledDomainSet(items=tuple(items))


def build_manual_items(manual_records, table, r: int, stopwords) -> LabeledDomainSet:
    items = []
    for record, polarity in manual_records:
        tokens = []
        for post in record.posts:
            tokens.extend(clean_tokens(post, stopwords))
        doc = TokenDocument(doc_id=f"manual:{record.user_id}",
                            tokens=tuple(tokens))
        try:
            items.append(LabeledItem(item_id=doc.doc_id,
                                     matrix=doc_matrix(doc, table, r),
                                     vector=doc_vector(doc, table),
                                     polarity=polarity,
                                     provenance="manual_target"))
        except AllOovError:
            logger.warning("dropping manual sample %s: out of vocabulary",
                           record.user_id)
    return LabeledDomainSet(items=tuple(items))


def base_representations(config: ExperimentConfig, docs, table):
    """Per-user base feature vectors for the chosen representation.

    Users whose every token is out of vocabulary get no entry (logged)."""
    if config.representation == "avg_vector":
        out = {}
        for doc in docs:
            try:
                out[doc.user_id] = doc_vector(doc, table).values
            except AllOovError:
                logger.warning("dropping user %s: all tokens out of vocabulary",
                               doc.user_id)
        if not out:
            raise DataError("every user is out of the embedding vocabulary")
        return out
    if config.representation == "tfidf":
        vectors = tfidf_representation(docs)
    else:
        keywords = gender_keywords(docs, config.keyword_top_n)
        if not keywords:
            raise DataError("gender keyword set is empty; corpora are "
                            "indistinguishable by frequency")
        vectors = tfidf_representation(docs, vocabulary=keywords)
    dense = vectors.dense()
    return {doc.user_id: dense[i] for i, doc in enumerate(docs)}


def _sentiment_training_set(config: ExperimentConfig, source_set, selected_set,
                            manual_items, train_ids):
    base = selected_set if "high_similarity" in config.source_mode else source_set
    if config.source_mode.endswith("plus_manual"):
        allowed = {f"manual:{uid}" for uid in train_ids}
        usable = LabeledDomainSet(items=tuple(
            item for item in manual_items.items if item.item_id in allowed))
        return augment_with_manual(base, usable)
    return base


def run_experiment(config: ExperimentConfig, paths: DataPaths) -> EvalReport:
    started = time.perf_counter()
    config.validate()
    if config.sentiment_mode == "none" and config.source_mode != "entire":
        logger.info("sentiment_mode is 'none'; source_mode %r is ignored",
                    config.source_mode)
    users, docs, reviews, stopwords = load_corpora(paths)
    if len(docs) < config.folds:
        raise DataError(f"only {len(docs)} usable users for {config.folds} folds")
    users_by_id = {u.user_id: u for u in users}

    use_sentiment = config.sentiment_mode != "none"
    needs_table = use_sentiment or config.representation == "avg_vector"
    table = None
    if needs_table:
        if paths.embeddings:
            table = load_embeddings(paths.embeddings)
        else:
            table = fit_embeddings(config, docs, reviews)

    base = base_representations(config, docs, table)
    # users whose every token is out of vocabulary cannot be represented
    docs = [d for d in docs if d.user_id in base]

    user_mats = user_lengths = None
    source_set = selected_set = manual_items = None
    selection_info = None
    if use_sentiment:
        if not reviews:
            raise DataError(f"sentiment_mode {config.sentiment_mode!r} needs "
                            "source-domain reviews")
        mats = {}
        for doc in docs:
            try:
                mats[doc.user_id] = doc_matrix(doc, table, config.r)
            except AllOovError:
                logger.warning("dropping user %s: all tokens out of vocabulary",
                               doc.user_id)
        docs = [d for d in docs if d.user_id in mats]
        user_mats = np.stack([mats[d.user_id].values.T for d in docs])
        user_lengths = np.array([mats[d.user_id].effective_length for d in docs])
        # padded steps past the longest document are inert; drop them
        user_mats = user_mats[:, :int(user_lengths.max()), :]
        source_set = build_source_items(reviews, table, config.r)
        if "high_similarity" in config.source_mode:
            target_vecs = [doc_vector(d, table) for d in docs]
            selected_set = select_source(source_set, target_vecs, config.z)
            selection_info = {"kept": len(selected_set), "total": len(source_set),
                              "z": config.z}
        if config.source_mode.endswith("plus_manual"):
            if not paths.manual:
                raise DataError(f"source_mode {config.source_mode!r} needs "
                                "--manual labels")
            manual_items = build_manual_items(load_manual_records(paths.manual),
                                              table, config.r, stopwords)

    plan = stratified_kfold(docs, config.folds, config.seed)
    index_of = {d.user_id: i for i, d in enumerate(docs)}
    labels = {d.user_id: d.gender for d in docs}

    columns = [EpochColumn(epochs=e, fold_accuracies=[]) for e in config.epochs]
    for fold_index in range(plan.k):
        train_ids, test_ids = plan.split(fold_index)
        try:
            _run_fold(config, fold_index, train_ids, test_ids, base, labels,
                      users_by_id, table, stopwords, user_mats, user_lengths,
                      index_of, source_set, selected_set, manual_items, columns)
        except PipelineError as exc:
            # keep the error category (and hence the exit code) while
            # pointing at the failing fold
            for category in (ConfigError, TrainingError, DataError):
                if isinstance(exc, category):
                    raise category(f"fold {fold_index + 1}: {exc}") from exc
            raise PipelineError(f"fold {fold_index + 1}: {exc}") from exc
    report = EvalReport(config=config.to_dict(), config_hash=config.config_hash(),
                        seed=config.seed, columns=columns,
                        timing_seconds=time.perf_counter() - started,
                        selection=selection_info)
    logger.info("experiment %s finished in %.1fs (best mean accuracy %.4f)",
                report.config_hash, report.timing_seconds, report.best_mean())
    return report


def _run_fold(config, fold_index, train_ids, test_ids, base, labels, users_by_id,
              table, stopwords, user_mats, user_lengths, index_of,
              source_set, selected_set, manual_items, columns):
    fold_seed = _fold_seed(config.seed, fold_index, 1)
    label_idx = {uid: CLASSES.index(labels[uid]) for uid in (*train_ids, *test_ids)}

    sentiment_model = None
    if config.sentiment_mode != "none":
        training_set = _sentiment_training_set(config, source_set, selected_set,
                                               manual_items, train_ids)
        sentiment_model, _ = train_sentiment(
            training_set,
            SentimentConfig(hidden_size=config.hidden_size,
                            dropout_rate=config.sentiment_dropout),
            TrainConfig(epochs=config.sentiment_epochs,
                        batch_size=config.batch_size,
                        learning_rate=config.learning_rate,
                        optimizer=config.optimizer, seed=fold_seed))

    if config.sentiment_mode == "finetuned_lstm":
        _run_finetuned_fold(config, fold_seed, sentiment_model, train_ids,
                            test_ids, base, label_idx, user_mats, user_lengths,
                            index_of, columns)
        return

    features = dict(base)
    if config.sentiment_mode in ("frozen_lstm", "frozen_dense"):
        layer = config.sentiment_mode
        reps = extract_representations(sentiment_model, user_mats, user_lengths,
                                       layer=layer)
        features = {uid: np.concatenate([base[uid], reps[row]])
                    for uid, row in index_of.items()}
    elif config.sentiment_mode == "polarity_features":
        features = {}
        for uid in index_of:
            pf = polarity_features(sentiment_model, users_by_id[uid], table,
                                   config.r, stopwords)
            features[uid] = np.concatenate([base[uid], pf.values])

    x_train = np.stack([features[uid] for uid in train_ids])
    y_train = np.array([label_idx[uid] for uid in train_ids])
    x_test = np.stack([features[uid] for uid in test_ids])
    y_test = np.array([label_idx[uid] for uid in test_ids])
    if config.smote:
        x_train, y_train = smote(x_train, y_train,
                                 ResampleConfig(k=config.smote_k,
                                                target_ratio=config.smote_ratio,
                                                seed=fold_seed,
                                                variant=config.smote_variant))
    train_labels = [CLASSES[i] for i in y_train]
    for col in columns:
        model = train_gender(x_train, train_labels,
                             TrainConfig(epochs=col.epochs,
                                         batch_size=config.batch_size,
                                         learning_rate=config.learning_rate,
                                         optimizer=config.optimizer,
                                         seed=fold_seed),
                             dropout_rate=config.mlp_dropout)
        probs = model.predict_proba(x_test)
        accuracy = float((probs.argmax(axis=1) == y_test).mean())
        col.fold_accuracies.append(accuracy)


def _run_finetuned_fold(config, fold_seed, sentiment_model, train_ids, test_ids,
                        base, label_idx, user_mats, user_lengths, index_of,
                        columns):
    """Composite training: oversampling happens in the joint space of the
    base vector and the flattened matrix so synthetic pairs stay aligned."""
    def gather(ids):
        rows = [index_of[uid] for uid in ids]
        vecs = np.stack([base[uid] for uid in ids])
        return (vecs, user_mats[rows], user_lengths[rows],
                np.array([label_idx[uid] for uid in ids]))

    vecs_tr, mats_tr, lens_tr, y_tr = gather(train_ids)
    vecs_te, mats_te, lens_te, y_te = gather(test_ids)
    if config.smote:
        vec_dim = vecs_tr.shape[1]
        flat = np.concatenate([vecs_tr, mats_tr.reshape(len(y_tr), -1)], axis=1)
        synth = _smote_core(flat, y_tr,
                            ResampleConfig(k=config.smote_k,
                                           target_ratio=config.smote_ratio,
                                           seed=fold_seed,
                                           variant=config.smote_variant))
        if synth:
            classes, counts = np.unique(y_tr, return_counts=True)
            minority = classes[np.argmin(counts)]
            minority_rows = np.flatnonzero(y_tr == minority)
            eff = lens_tr[minority_rows]
            new_flat = np.stack([s.values for s in synth])
            new_vecs = new_flat[:, :vec_dim]
            new_mats = new_flat[:, vec_dim:].reshape(-1, *mats_tr.shape[1:])
            new_lens = np.array([int(eff[list((s.old_index,) + s.neighbor_indices)].max())
                                 for s in synth])
            vecs_tr = np.concatenate([vecs_tr, new_vecs])
            mats_tr = np.concatenate([mats_tr, new_mats])
            lens_tr = np.concatenate([lens_tr, new_lens])
            y_tr = np.concatenate([y_tr, np.full(len(synth), minority)])

    for col in columns:
        model = build_finetune_model(sentiment_model, vec_dim=vecs_tr.shape[1],
                                     dropout_rate=config.mlp_dropout,
                                     seed=fold_seed)
        train_finetune(model, vecs_tr, mats_tr, lens_tr, y_tr,
                       TrainConfig(epochs=col.epochs,
                                   batch_size=config.batch_size,
                                   learning_rate=config.learning_rate,
                                   optimizer=config.optimizer, seed=fold_seed))
        probs = model.predict_proba(vecs_te, mats_te, lens_te)
        accuracy = float((probs.argmax(axis=1) == y_te).mean())
        col.fold_accuracies.append(accuracy)


GRID_LAYERS = ("frozen_lstm", "frozen_dense", "finetuned_lstm")


def run_grid(config: ExperimentConfig, paths: DataPaths):
    """Sweep source modes against extraction layers (the 4 x 3 grid)."""
    results = []
    for source_mode in SOURCE_MODES:
        if source_mode.endswith("plus_manual") and not paths.manual:
            logger.info("skipping %s: no manual labels supplied", source_mode)
            continue
        for layer in GRID_LAYERS:
            cell = replace(config, sentiment_mode=layer, source_mode=source_mode)
            logger.info("grid cell: source=%s layer=%s", source_mode, layer)
            results.append(((source_mode, layer), run_experiment(cell, paths)))
    return results
