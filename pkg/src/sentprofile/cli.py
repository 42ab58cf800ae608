"""Command-line entry point.

Subcommands mirror the pipeline stages (prepare, embed, select-source,
sentiment-train, extract, smote, gender-train) plus the orchestrated
`evaluate` and `grid` runs and the bundled `synth-data` generator. Flags
can come from a flat key=value config file via --config; explicit flags
win. Exit codes: 0 success, 2 configuration error, 3 data error.
"""

import argparse
import json
import logging
import sys
from dataclasses import fields
from pathlib import Path

import numpy as np

from . import __version__
from .corpus import (
    build_virtual_documents,
    load_stopwords,
    load_user_records,
    save_virtual_documents,
)
from .embed import doc_matrix, doc_vector, load_embeddings, save_embeddings
from .errors import ConfigError, DataError, PipelineError
from .experiment import (
    DataPaths,
    ExperimentConfig,
    emit_report,
    load_config_file,
    run_experiment,
    run_grid,
)
from .gender import (
    FeatureVector,
    concat_features,
    read_features,
    stack_features,
    train_gender,
    write_features,
)
from .nn import TrainConfig, load_model, save_model
from .resample import ResampleConfig, smote
from .sentiment import SentimentConfig, extract_representations, train_sentiment
from .synth import SynthConfig, generate_dataset, marker_frequency_correlation, write_dataset

logger = logging.getLogger(__name__)


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--seed", type=int, default=None, help="global RNG seed")
    parser.add_argument("--config", default=None,
                        help="key=value config file; explicit flags override it")
    parser.add_argument("--verbose", action="store_true")


def _experiment_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--users", required=True)
    parser.add_argument("--reviews", default=None)
    parser.add_argument("--stopwords", default=None)
    parser.add_argument("--manual-labels", dest="manual", default=None)
    parser.add_argument("--embeddings", default=None,
                        help="reuse a saved embedding table instead of training")
    parser.add_argument("--representation", choices=("avg_vector", "tfidf",
                                                     "keyword_tfidf"), default=None)
    parser.add_argument("--sentiment-mode", choices=("none", "polarity_features",
                                                     "frozen_lstm", "frozen_dense",
                                                     "finetuned_lstm"), default=None)
    parser.add_argument("--source-mode", choices=("entire", "high_similarity",
                                                  "entire_plus_manual",
                                                  "high_similarity_plus_manual"),
                        default=None)
    parser.add_argument("--similarity-threshold", dest="z", type=float, default=None)
    parser.add_argument("--smote", action="store_true", default=None)
    parser.add_argument("--smote-k", type=int, default=None)
    parser.add_argument("--smote-ratio", type=float, default=None)
    parser.add_argument("--smote-variant", choices=("paper", "classic"), default=None)
    parser.add_argument("--epochs", default=None,
                        help="comma-separated epoch grid, e.g. 60,80,100")
    parser.add_argument("--folds", type=int, default=None)
    parser.add_argument("--dimension", type=int, default=None)
    parser.add_argument("--window", type=int, default=None)
    parser.add_argument("--negatives", type=int, default=None)
    parser.add_argument("--embed-epochs", type=int, default=None)
    parser.add_argument("--min-count", type=int, default=None)
    parser.add_argument("--r", type=int, default=None,
                        help="document matrix column count")
    parser.add_argument("--keyword-top-n", type=int, default=None)
    parser.add_argument("--hidden-size", type=int, default=None)
    parser.add_argument("--sentiment-dropout", type=float, default=None)
    parser.add_argument("--sentiment-epochs", type=int, default=None)
    parser.add_argument("--batch-size", type=int, default=None)
    parser.add_argument("--learning-rate", type=float, default=None)
    parser.add_argument("--optimizer", choices=("sgd", "adam"), default=None)
    parser.add_argument("--mlp-dropout", type=float, default=None)


def _experiment_config(args) -> ExperimentConfig:
    raw = {}
    if args.config:
        raw.update(load_config_file(args.config))
    field_names = {f.name for f in fields(ExperimentConfig)}
    for name in field_names:
        value = getattr(args, name, None)
        if value is None:
            continue
        if name == "epochs" and isinstance(value, str):
            value = tuple(int(v) for v in value.split(",") if v.strip())
        raw[name] = value
    if getattr(args, "smote", None):
        raw["smote"] = True
    config = ExperimentConfig.from_dict(raw)
    config.validate()
    return config


def _data_paths(args) -> DataPaths:
    return DataPaths(users=args.users, reviews=args.reviews,
                     stopwords=args.stopwords, manual=args.manual,
                     embeddings=args.embeddings)


def _train_config(args, epochs: int) -> TrainConfig:
    return TrainConfig(epochs=epochs,
                       batch_size=args.batch_size or 32,
                       learning_rate=args.learning_rate or 1e-3,
                       optimizer=args.optimizer or "adam",
                       seed=args.seed or 0)


def _cmd_prepare(args) -> int:
    stopwords = load_stopwords(args.stopwords) if args.stopwords else frozenset()
    users = load_user_records(args.users)
    docs = build_virtual_documents(users, stopwords, on_empty="drop")
    save_virtual_documents(docs, args.out)
    print(f"wrote {len(docs)} virtual documents to {args.out} "
          f"({len(users) - len(docs)} dropped)")
    return 0


def _cmd_embed(args) -> int:
    from .experiment import fit_embeddings, load_corpora

    config = _experiment_config(args)
    _, docs, reviews, _ = load_corpora(_data_paths(args))
    table = fit_embeddings(config, docs, reviews)
    save_embeddings(table, args.out)
    print(f"trained {len(table)} vectors of dimension {table.dimension}; "
          f"saved to {args.out}")
    return 0


def _cmd_select_source(args) -> int:
    from .domainsel import select_source
    from .experiment import build_source_items, load_corpora

    config = _experiment_config(args)
    _, docs, reviews, _ = load_corpora(_data_paths(args))
    table = load_embeddings(args.embeddings)
    source = build_source_items(reviews, table, config.r)
    target_vecs = []
    kept_docs = []
    for doc in docs:
        try:
            target_vecs.append(doc_vector(doc, table))
            kept_docs.append(doc)
        except DataError:
            continue
    z = config.z
    selected = select_source(source, target_vecs, z)
    kept_ids = {item.item_id for item in selected.items}
    with open(args.out, "w", encoding="utf-8") as fh:
        for review in reviews:
            if review.review_id in kept_ids:
                fh.write(json.dumps({"review_id": review.review_id,
                                     "polarity": review.polarity,
                                     "tokens": list(review.tokens)}) + "\n")
    print(f"kept {len(selected)} of {len(source)} reviews at z={z}; "
          f"wrote {args.out}")
    return 0


def _cmd_sentiment_train(args) -> int:
    from .domainsel import select_source
    from .experiment import (
        build_manual_items,
        build_source_items,
        load_corpora,
    )
    from .corpus import load_manual_records

    config = _experiment_config(args)
    paths = _data_paths(args)
    _, docs, reviews, stopwords = load_corpora(paths)
    table = (load_embeddings(args.embeddings) if args.embeddings
             else None)
    if table is None:
        from .experiment import fit_embeddings
        table = fit_embeddings(config, docs, reviews)
    source = build_source_items(reviews, table, config.r)
    if args.select_z is not None:
        target_vecs = [doc_vector(d, table) for d in docs]
        source = select_source(source, target_vecs, args.select_z)
    if args.manual:
        from .domainsel import augment_with_manual
        manual = build_manual_items(load_manual_records(args.manual), table,
                                    config.r, stopwords)
        source = augment_with_manual(source, manual)
    model, curve = train_sentiment(
        source,
        SentimentConfig(hidden_size=config.hidden_size,
                        dropout_rate=config.sentiment_dropout),
        _train_config(args, config.sentiment_epochs))
    save_model(model, args.out)
    last = curve[-1]
    print(f"trained on {len(source)} items; held-out accuracy "
          f"{last.heldout_accuracy:.4f} after {last.epoch} epochs; "
          f"saved to {args.out}")
    return 0


def _cmd_extract(args) -> int:
    stopwords = load_stopwords(args.stopwords) if args.stopwords else frozenset()
    users = load_user_records(args.infile)
    docs = build_virtual_documents(users, stopwords, on_empty="drop")
    table = load_embeddings(args.embeddings)
    model = load_model(args.model)
    rows = []
    mats, lengths, kept = [], [], []
    for doc in docs:
        try:
            matrix = doc_matrix(doc, table, args.r)
        except DataError:
            logger.warning("skipping %s: out of vocabulary", doc.user_id)
            continue
        mats.append(matrix.values.T)
        lengths.append(matrix.effective_length)
        kept.append(doc)
    if not kept:
        raise DataError("no user has in-vocabulary tokens")
    reps = extract_representations(model, np.stack(mats), np.array(lengths),
                                   layer=args.layer)
    for i, doc in enumerate(kept):
        if args.concat_doc_vector:
            feature = concat_features(doc_vector(doc, table), reps[i])
        else:
            feature = FeatureVector(values=reps[i], layout=("sentiment",),
                                    segment_lengths=(reps[i].size,))
        rows.append((doc.user_id, doc.gender, feature))
    write_features(args.out, rows)
    print(f"wrote {len(rows)} feature rows ({args.layer}) to {args.out}")
    return 0


def _cmd_smote(args) -> int:
    rows = read_features(args.infile)
    features = stack_features([f for _, _, f in rows])
    labels = np.array([label for _, label, _ in rows])
    config = ResampleConfig(k=args.smote_k, target_ratio=args.smote_ratio,
                            seed=args.seed or 0, variant=args.smote_variant)
    out_x, out_y = smote(features, labels, config)
    layout = rows[0][2].layout
    out_rows = []
    for i in range(out_x.shape[0]):
        if i < len(rows):
            out_rows.append((rows[i][0], rows[i][1], rows[i][2]))
        else:
            feature = FeatureVector(values=out_x[i], layout=layout)
            out_rows.append((f"smote-{i - len(rows)}", str(out_y[i]), feature))
    write_features(args.out, out_rows)
    print(f"{len(rows)} rows in, {len(out_rows)} rows out "
          f"({len(out_rows) - len(rows)} synthetic); wrote {args.out}")
    return 0


def _cmd_gender_train(args) -> int:
    rows = read_features(args.infile)
    features = [f for _, _, f in rows]
    labels = [label for _, label, _ in rows]
    model = train_gender(features, labels, _train_config(args, args.epochs),
                         dropout_rate=args.mlp_dropout or 0.4)
    save_model(model, args.out)
    last = model.history[-1]
    print(f"trained on {len(rows)} rows; final train accuracy "
          f"{last['train_accuracy']:.4f}; saved to {args.out}")
    return 0


def _cmd_evaluate(args) -> int:
    config = _experiment_config(args)
    report = run_experiment(config, _data_paths(args))
    text = emit_report(report, fmt=args.format, out=args.out)
    if args.out:
        print(f"report written to {args.out}")
    else:
        print(text, end="")
    return 0


def _cmd_grid(args) -> int:
    config = _experiment_config(args)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    results = run_grid(config, _data_paths(args))
    summary = []
    for (source_mode, layer), report in results:
        name = f"{source_mode}__{layer}.json"
        emit_report(report, fmt="json", out=out_dir / name)
        summary.append((source_mode, layer, report.best_mean()))
    width = max(len(s) for s, _, _ in summary)
    print(f"{'source mode'.ljust(width)}  layer           best mean acc")
    for source_mode, layer, best in summary:
        print(f"{source_mode.ljust(width)}  {layer.ljust(15)} {best * 100:8.2f}%")
    print(f"reports in {out_dir}")
    return 0


def _cmd_synth_data(args) -> int:
    config = SynthConfig(n_users=args.users, n_reviews=args.reviews,
                         seed=args.seed or 0,
                         marker_correlation=args.marker_correlation)
    dataset = generate_dataset(config)
    paths = write_dataset(dataset, args.out_dir)
    corr = marker_frequency_correlation(dataset)
    print(f"wrote {len(dataset.users)} users, {len(dataset.reviews)} reviews, "
          f"{len(dataset.manual)} manual labels to {args.out_dir}")
    print(f"gender/marker-frequency correlation: {corr:.3f}")
    for name, path in paths.items():
        print(f"  {name}: {path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sentprofile",
        description="Sentiment representation transfer for micro-blog "
                    "gender classification")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("prepare", help="clean posts into virtual documents")
    _add_common(p)
    p.add_argument("--users", required=True)
    p.add_argument("--stopwords", default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_prepare)

    p = sub.add_parser("embed", help="train word embeddings on both corpora")
    _add_common(p)
    _experiment_flags(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_embed)

    p = sub.add_parser("select-source",
                       help="keep source reviews similar to the target domain")
    _add_common(p)
    _experiment_flags(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_select_source)

    p = sub.add_parser("sentiment-train", help="train the polarity classifier")
    _add_common(p)
    _experiment_flags(p)
    p.add_argument("--source", dest="reviews", required=True)
    p.add_argument("--select-z", type=float, default=None,
                   help="similarity threshold; omit to train on everything")
    p.add_argument("--manual", default=None,
                   help="manually labeled target samples to add")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_sentiment_train)

    p = sub.add_parser("extract", help="extract sentiment representations")
    _add_common(p)
    p.add_argument("--model", required=True)
    p.add_argument("--layer", choices=("frozen_lstm", "frozen_dense"),
                   default="frozen_lstm")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--embeddings", required=True)
    p.add_argument("--stopwords", default=None)
    p.add_argument("--r", type=int, default=500)
    p.add_argument("--concat-doc-vector", action=argparse.BooleanOptionalAction,
                   default=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_extract)

    p = sub.add_parser("smote", help="oversample a feature file")
    _add_common(p)
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--smote-k", type=int, default=5)
    p.add_argument("--smote-ratio", type=float, default=1.0)
    p.add_argument("--smote-variant", choices=("paper", "classic"),
                   default="paper")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_smote)

    p = sub.add_parser("gender-train", help="train the gender classifier")
    _add_common(p)
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--epochs", type=int, default=100)
    p.add_argument("--batch-size", type=int, default=None)
    p.add_argument("--learning-rate", type=float, default=None)
    p.add_argument("--optimizer", choices=("sgd", "adam"), default=None)
    p.add_argument("--mlp-dropout", type=float, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_gender_train)

    p = sub.add_parser("evaluate", help="run one cross-validated experiment")
    _add_common(p)
    _experiment_flags(p)
    p.add_argument("--format", choices=("json", "csv", "table"), default="json")
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("grid",
                       help="sweep source modes against extraction layers")
    _add_common(p)
    _experiment_flags(p)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=_cmd_grid)

    p = sub.add_parser("synth-data", help="generate a synthetic dataset")
    _add_common(p)
    p.add_argument("--users", type=int, default=1000)
    p.add_argument("--reviews", type=int, default=2000)
    p.add_argument("--marker-correlation", type=float, default=0.6)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=_cmd_synth_data)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if getattr(args, "verbose", False) else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except (DataError, OSError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 3
    except PipelineError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
