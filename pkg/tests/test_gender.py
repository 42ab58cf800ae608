import numpy as np
import pytest

from sentprofile.errors import DataError, SchemaError, ShapeError
from sentprofile.gender import (
    CLASSES,
    GenderModel,
    concat_features,
    predict_gender,
    read_features,
    stack_features,
    train_gender,
    write_features,
)
from sentprofile.nn import TrainConfig, load_model, save_model
from sentprofile.sentiment import PolarityFeatures, SentimentRepresentation


class TestConcatFeatures:
    def test_doc_vector_plus_hidden(self):
        v = np.zeros(100)
        h = SentimentRepresentation(values=np.ones(64), layer_source="frozen_lstm")
        f = concat_features(v, h)
        assert f.values.shape == (164,)
        assert f.layout == ("doc_vector", "sentiment")
        assert f.segment_lengths == (100, 64)

    def test_baseline_without_sentiment(self):
        f = concat_features(np.zeros(100))
        assert f.values.shape == (100,)
        assert f.layout == ("doc_vector",)

    def test_polarity_features_variant(self):
        pf = PolarityFeatures(doc_polarity=0.7, positive_rate=0.5, post_count=4)
        f = concat_features(np.zeros(100), pf)
        assert f.values.shape == (102,)
        assert f.values[100] == 0.7
        assert f.values[101] == 0.5

    def test_stack_rejects_mixed_lengths(self):
        f1 = concat_features(np.zeros(4))
        f2 = concat_features(np.zeros(5))
        with pytest.raises(ShapeError, match="inconsistent|differs"):
            stack_features([f1, f2])


def separable_features(n=60, seed=0):
    rng = np.random.default_rng(seed)
    labels = ["male" if i % 2 == 0 else "female" for i in range(n)]
    offset = np.array([3.0, -3.0])
    rows = [rng.normal(size=2) + (offset if l == "male" else -offset)
            for l in labels]
    return np.stack(rows), labels


class TestTrainGender:
    def test_learns_separable_data(self):
        features, labels = separable_features()
        model = train_gender(features, labels,
                             TrainConfig(epochs=200, batch_size=16,
                                         learning_rate=3e-3, seed=0))
        assert model.history[-1]["train_accuracy"] >= 0.99

    def test_single_class_rejected(self):
        features = np.zeros((4, 2))
        with pytest.raises(DataError):
            train_gender(features, ["male"] * 4, TrainConfig(epochs=1))

    def test_unknown_label_rejected(self):
        features = np.zeros((2, 2))
        with pytest.raises(DataError):
            train_gender(features, ["male", "robot"], TrainConfig(epochs=1))

    def test_same_seed_same_checksum(self):
        features, labels = separable_features(n=20)
        config = TrainConfig(epochs=5, batch_size=8, seed=3)
        m1 = train_gender(features, labels, config)
        m2 = train_gender(features, labels, config)
        assert m1.checksum() == m2.checksum()

    def test_architecture_shapes(self):
        features, labels = separable_features(n=12)
        model = train_gender(features, labels, TrainConfig(epochs=1, seed=0))
        dims = [(l.in_dim, l.out_dim) for l in model.network.layers
                if hasattr(l, "in_dim")]
        assert dims == [(2, 50), (50, 10), (10, 2)]
        dropouts = model.network.dropout_layers()
        assert len(dropouts) == 1 and dropouts[0].rate == 0.4
        # dropout sits right after the first hidden layer
        assert model.network.layers[1] is dropouts[0]


class TestPredictGender:
    def test_probabilities_sum_to_one(self):
        features, labels = separable_features(n=20)
        model = train_gender(features, labels, TrainConfig(epochs=3, seed=0))
        pred = predict_gender(model, features[0])
        assert pred.probabilities.sum() == pytest.approx(1.0, abs=1e-12)
        assert pred.label in CLASSES

    def test_argmax_shift_invariance(self):
        # adding a constant to both logits leaves the label unchanged
        model = GenderModel(input_dim=2, seed=0)
        final = model.network.layers[-1]
        x = np.random.default_rng(0).normal(size=(5, 2))
        before = [predict_gender(model, row).label for row in x]
        final.bias[...] += 7.3
        after = [predict_gender(model, row).label for row in x]
        assert before == after

    def test_zero_parameter_model_ties_to_first_class(self):
        model = GenderModel(input_dim=3, seed=0)
        for value in model.parameters().values():
            value[...] = 0.0
        pred = predict_gender(model, np.ones(3))
        assert np.allclose(pred.probabilities, [0.5, 0.5])
        assert pred.label == "male"

    def test_wrong_length_rejected(self):
        model = GenderModel(input_dim=4, seed=0)
        with pytest.raises(ShapeError):
            predict_gender(model, np.ones(5))


class TestFeatureFiles:
    def test_round_trip(self, tmp_path):
        rows = [("u1", "male", concat_features(np.array([1.0, 2.0]),
                                               np.array([3.0]))),
                ("u2", "female", concat_features(np.array([0.5, -1.0]),
                                                 np.array([0.25])))]
        path = tmp_path / "features.jsonl"
        write_features(path, rows)
        loaded = read_features(path)
        assert [(uid, label) for uid, label, _ in loaded] == \
            [("u1", "male"), ("u2", "female")]
        for (_, _, original), (_, _, parsed) in zip(rows, loaded):
            assert parsed.layout == original.layout
            assert np.allclose(parsed.values, original.values)

    def test_bad_label_rejected(self, tmp_path):
        path = tmp_path / "features.jsonl"
        path.write_text('{"user_id": "u", "label": "x", "layout": ["doc_vector"], '
                        '"values": [1.0]}\n', encoding="utf-8")
        with pytest.raises(SchemaError):
            read_features(path)

    def test_missing_field_rejected(self, tmp_path):
        path = tmp_path / "features.jsonl"
        path.write_text('{"user_id": "u", "label": "male"}\n', encoding="utf-8")
        with pytest.raises(SchemaError, match="layout|values"):
            read_features(path)


def test_gender_model_checkpoint_round_trip(tmp_path):
    features, labels = separable_features(n=20)
    model = train_gender(features, labels, TrainConfig(epochs=3, seed=1))
    path = tmp_path / "gender.bin"
    save_model(model, path)
    loaded = load_model(path)
    assert isinstance(loaded, GenderModel)
    assert np.array_equal(model.predict_proba(features),
                          loaded.predict_proba(features))
    assert loaded.layout == model.layout
