import numpy as np
import pytest

from sentprofile.embed import EmbeddingTable
from sentprofile.experiment import DataPaths
from sentprofile.synth import SynthConfig, generate_dataset, write_dataset


@pytest.fixture(scope="session")
def small_dataset(tmp_path_factory):
    """Desk-size corpus shared by the pipeline-level tests."""
    config = SynthConfig(n_users=90, n_reviews=160, seed=5, n_manual=20,
                         posts_per_user=(2, 4), tokens_per_post=(6, 12),
                         review_tokens=(6, 20), n_topics=4, tokens_per_topic=15)
    dataset = generate_dataset(config)
    out = tmp_path_factory.mktemp("smalldata")
    paths = write_dataset(dataset, out)
    return DataPaths(users=str(paths["users"]), reviews=str(paths["reviews"]),
                     stopwords=str(paths["stopwords"]),
                     manual=str(paths["manual"]))


SMALL_CONFIG = dict(folds=3, dimension=8, window=2, negatives=2,
                    embed_epochs=2, min_count=2, r=16, hidden_size=6,
                    sentiment_epochs=2, batch_size=16, learning_rate=3e-3,
                    epochs=(3,), keyword_top_n=30)


@pytest.fixture
def tiny_table():
    """Hand-built 2-dimensional embedding table."""
    return EmbeddingTable(2, {
        "a": np.array([1.0, 2.0]),
        "b": np.array([3.0, 4.0]),
        "c": np.array([-1.0, 0.5]),
    })


def make_table(tokens, dimension=2, seed=0):
    rng = np.random.default_rng(seed)
    return EmbeddingTable(dimension,
                          {t: rng.normal(size=dimension) for t in tokens})


@pytest.fixture
def polarity_table():
    """First embedding coordinate carries the sign a hand-built integrator
    model keys on: 'pos*' tokens positive, 'neg*' negative, others zero."""
    vectors = {}
    for i in range(4):
        vectors[f"pos{i}"] = np.array([1.0, 0.1 * i])
        vectors[f"neg{i}"] = np.array([-1.0, 0.1 * i])
        vectors[f"neu{i}"] = np.array([0.0, 0.2 + 0.1 * i])
    return EmbeddingTable(2, vectors)
