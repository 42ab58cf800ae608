import numpy as np
import pytest

from sentprofile.domainsel import (
    DEFAULT_SIMILARITY_THRESHOLD,
    LabeledDomainSet,
    LabeledItem,
    SimilarityConfig,
    augment_with_manual,
    avg_similarity,
    cosine,
    select_source,
)
from sentprofile.embed import DocMatrix, DocVector
from sentprofile.errors import (
    ConfigError,
    DataError,
    DuplicateKeyError,
    EmptySelectionError,
    ShapeError,
)


def vec(doc_id, values):
    return DocVector(doc_id=doc_id, values=np.asarray(values, dtype=float))


def item(item_id, values, polarity="positive", provenance="source", shape=None):
    values = np.asarray(values, dtype=float)
    if shape is None:
        shape = (values.size, 3)
    matrix = np.zeros(shape)
    matrix[:, 0] = values
    return LabeledItem(item_id=item_id,
                       matrix=DocMatrix(doc_id=item_id, values=matrix,
                                        effective_length=1),
                       vector=vec(item_id, values),
                       polarity=polarity, provenance=provenance)


class TestCosine:
    def test_self_similarity_is_one(self):
        rng = np.random.default_rng(0)
        for _ in range(10):
            v = rng.normal(size=5)
            assert cosine(v, v) == pytest.approx(1.0)

    def test_orthogonal(self):
        assert cosine(np.array([1.0, 0.0]), np.array([0.0, 1.0])) == 0.0

    def test_45_degrees(self):
        value = cosine(np.array([1.0, 0.0]), np.array([1.0, 1.0]))
        assert value == pytest.approx(1 / np.sqrt(2), abs=1e-12)
        assert value == pytest.approx(0.70711, abs=1e-5)

    def test_zero_norm_convention(self):
        assert cosine(np.zeros(3), np.ones(3)) == 0.0

    def test_length_mismatch(self):
        with pytest.raises(ShapeError):
            cosine(np.ones(2), np.ones(3))

    def test_range(self):
        rng = np.random.default_rng(1)
        for _ in range(100):
            value = cosine(rng.normal(size=4), rng.normal(size=4))
            assert -1.0 - 1e-12 <= value <= 1.0 + 1e-12


class TestAvgSimilarity:
    def test_identical_single_target(self):
        v = vec("s", [0.3, 0.4])
        assert avg_similarity(v, [vec("t", [0.3, 0.4])]) == pytest.approx(1.0)

    def test_mixed_targets(self):
        source = vec("s", [1.0, 0.0])
        targets = [vec("t1", [1.0, 0.0]), vec("t2", [0.0, 1.0])]
        assert avg_similarity(source, targets) == pytest.approx(0.5)

    def test_zero_source(self):
        assert avg_similarity(vec("s", [0.0, 0.0]), [vec("t", [1.0, 0.0])]) == 0.0

    def test_empty_targets(self):
        with pytest.raises(DataError):
            avg_similarity(vec("s", [1.0]), [])

    def test_matches_elementwise_cosine_mean(self):
        rng = np.random.default_rng(2)
        source = vec("s", rng.normal(size=4))
        targets = [vec(f"t{i}", rng.normal(size=4)) for i in range(7)]
        expected = np.mean([cosine(source.values, t.values) for t in targets])
        assert avg_similarity(source, targets) == pytest.approx(expected, abs=1e-12)


class TestSelectSource:
    def make_set(self, vectors):
        return LabeledDomainSet(items=tuple(
            item(f"i{k}", v) for k, v in enumerate(vectors)))

    def test_low_threshold_keeps_all(self):
        source = self.make_set([[1.0, 0.0], [0.9, 0.1], [0.8, 0.3]])
        targets = [vec("t", [1.0, 0.05])]
        kept = select_source(source, targets, z=0.01)
        assert len(kept) == 3
        assert [i.item_id for i in kept.items] == ["i0", "i1", "i2"]

    def test_high_threshold_empty_error(self):
        source = self.make_set([[1.0, 0.0]])
        targets = [vec("t", [0.0, 1.0])]
        with pytest.raises(EmptySelectionError, match="lower"):
            select_source(source, targets, z=0.9)

    def test_strict_inequality(self):
        # average similarity exactly z must NOT be kept
        source = self.make_set([[1.0, 0.0]])
        targets = [vec("t1", [1.0, 0.0]), vec("t2", [-1.0, 0.0])]
        # avg = (1 - 1) / 2 = 0 < any z; with orthogonal second target avg = 0.5
        targets = [vec("t1", [1.0, 0.0]), vec("t2", [0.0, 1.0])]
        with pytest.raises(EmptySelectionError):
            select_source(source, targets, z=0.5)

    def test_z_validated(self):
        source = self.make_set([[1.0, 0.0]])
        for z in (0.0, 1.0, -0.1, 1.5):
            with pytest.raises(ConfigError):
                select_source(source, [vec("t", [1.0, 0.0])], z=z)

    def test_default_threshold_constant(self):
        assert DEFAULT_SIMILARITY_THRESHOLD == 0.25
        assert SimilarityConfig().threshold == 0.25
        assert SimilarityConfig().metric == "cosine"

    def test_similarity_config_validation(self):
        with pytest.raises(ConfigError):
            SimilarityConfig(threshold=1.0)
        with pytest.raises(ConfigError):
            SimilarityConfig(metric="euclidean")

    def test_select_accepts_config_object(self):
        source = self.make_set([[1.0, 0.0]])
        targets = [vec("t", [1.0, 0.0])]
        kept = select_source(source, targets, SimilarityConfig(threshold=0.5))
        assert len(kept) == 1

    def test_monotonicity_in_z(self):
        rng = np.random.default_rng(3)
        source = self.make_set(rng.normal(size=(20, 3)))
        targets = [vec(f"t{i}", rng.normal(size=3)) for i in range(5)]
        kept_ids = []
        for z in (0.05, 0.2, 0.5):
            try:
                kept = select_source(source, targets, z)
                kept_ids.append({i.item_id for i in kept.items})
            except EmptySelectionError:
                kept_ids.append(set())
        assert kept_ids[2] <= kept_ids[1] <= kept_ids[0]

    def test_scale_invariance(self):
        rng = np.random.default_rng(4)
        vectors = rng.normal(size=(10, 3))
        targets = [vec(f"t{i}", rng.normal(size=3)) for i in range(4)]
        base = select_source(self.make_set(vectors), targets, z=0.05)
        base_ids = {i.item_id for i in base.items}
        for c in (0.5, 2.0, 10.0):
            scaled = vectors.copy()
            scaled[3] *= c
            kept = select_source(self.make_set(scaled), targets, z=0.05)
            assert {i.item_id for i in kept.items} == base_ids


class TestAugmentWithManual:
    def test_empty_manual_is_identity(self):
        source = LabeledDomainSet(items=(item("a", [1.0, 0.0]),))
        out = augment_with_manual(source, LabeledDomainSet(items=()))
        assert out.items == source.items

    def test_cardinality_and_provenance(self):
        source = LabeledDomainSet(items=tuple(
            item(f"s{i}", [1.0, float(i)]) for i in range(10)))
        manual = LabeledDomainSet(items=tuple(
            item(f"m{i}", [0.0, float(i)], provenance="manual_target")
            for i in range(3)))
        out = augment_with_manual(source, manual)
        assert len(out) == 13
        flagged = [i for i in out.items if i.provenance == "manual_target"]
        assert len(flagged) == 3

    def test_duplicate_id_rejected(self):
        source = LabeledDomainSet(items=(item("x", [1.0, 0.0]),))
        manual = LabeledDomainSet(items=(
            item("x", [0.0, 1.0], provenance="manual_target"),))
        with pytest.raises(DuplicateKeyError):
            augment_with_manual(source, manual)

    def test_shape_mismatch_rejected(self):
        source = LabeledDomainSet(items=(item("a", [1.0, 0.0], shape=(2, 3)),))
        manual = LabeledDomainSet(items=(
            item("m", [1.0, 0.0], provenance="manual_target", shape=(2, 4)),))
        with pytest.raises(ShapeError):
            augment_with_manual(source, manual)

    def test_wrong_provenance_rejected(self):
        source = LabeledDomainSet(items=(item("a", [1.0, 0.0]),))
        manual = LabeledDomainSet(items=(item("m", [1.0, 0.0]),))
        with pytest.raises(DataError, match="provenance"):
            augment_with_manual(source, manual)

    def test_never_removes_items(self):
        rng = np.random.default_rng(5)
        for trial in range(10):
            n_s, n_m = rng.integers(1, 8, size=2)
            source = LabeledDomainSet(items=tuple(
                item(f"s{i}", rng.normal(size=2)) for i in range(n_s)))
            manual = LabeledDomainSet(items=tuple(
                item(f"m{i}", rng.normal(size=2), provenance="manual_target")
                for i in range(n_m)))
            assert len(augment_with_manual(source, manual)) == n_s + n_m
