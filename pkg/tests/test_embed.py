import math

import numpy as np
import pytest

from sentprofile.corpus import TokenDocument, VirtualDocument
from sentprofile.domainsel import cosine
from sentprofile.embed import (
    DocMatrix,
    EmbedConfig,
    EmbeddingTable,
    doc_matrix,
    doc_vector,
    gender_keywords,
    load_embeddings,
    save_embeddings,
    tfidf_representation,
    train_skipgram,
)
from sentprofile.errors import AllOovError, ConfigError, DataError, FormatError


def vdoc(user_id, tokens, gender="male"):
    return VirtualDocument(user_id=user_id, gender=gender, tokens=tuple(tokens),
                           token_count=len(tokens))


class TestTrainSkipgram:
    def test_cooccurrence_structure(self):
        docs = []
        for i in range(200):
            docs.append(["p1", "p2"] * 4 if i % 2 == 0 else ["q1", "q2"] * 4)
        table = train_skipgram(docs, EmbedConfig(dimension=16, window=2,
                                                 negatives=4, epochs=4,
                                                 min_count=1, seed=3))
        assert cosine(table["p1"], table["p2"]) > cosine(table["p1"], table["q1"])
        assert cosine(table["q1"], table["q2"]) > cosine(table["q1"], table["p2"])

    def test_min_count_filters_and_empty_table(self):
        docs = [["a", "b", "a"]]
        table = train_skipgram(docs, EmbedConfig(dimension=4, min_count=2,
                                                 epochs=1, seed=0))
        assert "a" in table and "b" not in table
        with pytest.raises(DataError, match="empty"):
            train_skipgram(docs, EmbedConfig(dimension=4, min_count=10,
                                             epochs=1, seed=0))

    def test_empty_corpus(self):
        with pytest.raises(DataError):
            train_skipgram([], EmbedConfig(dimension=4))

    def test_deterministic_bitwise(self):
        docs = [["a", "b", "c", "a"], ["b", "c", "b", "a"]]
        config = EmbedConfig(dimension=8, window=2, negatives=3, epochs=3,
                             min_count=1, seed=11)
        t1 = train_skipgram(docs, config)
        t2 = train_skipgram(docs, config)
        assert set(t1.tokens()) == set(t2.tokens())
        for token in t1.tokens():
            assert np.array_equal(t1[token], t2[token])


class TestEmbeddingIO:
    def test_round_trip_exact(self, tmp_path):
        rng = np.random.default_rng(0)
        table = EmbeddingTable(3, {f"t{i}": rng.normal(size=3) for i in range(5)})
        path = tmp_path / "emb.txt"
        save_embeddings(table, path)
        loaded = load_embeddings(path)
        assert loaded.dimension == 3
        assert set(loaded.tokens()) == set(table.tokens())
        for token in table.tokens():
            assert np.array_equal(loaded[token], table[token])

    def test_dimension_mismatch_line_number(self, tmp_path):
        path = tmp_path / "emb.txt"
        path.write_text("2 2\na 1.0 2.0\nb 1.0\n", encoding="utf-8")
        with pytest.raises(FormatError, match="line 3"):
            load_embeddings(path)

    def test_header_parse(self, tmp_path):
        path = tmp_path / "emb.txt"
        path.write_text("1 2\na 1.0 2.0\n", encoding="utf-8")
        table = load_embeddings(path)
        assert np.array_equal(table["a"], np.array([1.0, 2.0]))

    def test_non_finite_rejected(self):
        with pytest.raises(FormatError):
            EmbeddingTable(2, {"a": np.array([np.nan, 1.0])})


class TestDocVector:
    def test_mean_of_two(self, tiny_table):
        vec = doc_vector(TokenDocument("d", ("a", "b")), tiny_table)
        assert np.allclose(vec.values, [2.0, 3.0])

    def test_identical_tokens(self, tiny_table):
        vec = doc_vector(TokenDocument("d", ("a", "a")), tiny_table)
        assert np.allclose(vec.values, [1.0, 2.0])

    def test_oov_skipped_in_divisor(self, tiny_table):
        vec = doc_vector(TokenDocument("d", ("a", "missing", "b")), tiny_table)
        assert np.allclose(vec.values, [2.0, 3.0])

    def test_all_oov(self, tiny_table):
        with pytest.raises(AllOovError):
            doc_vector(TokenDocument("d", ("x", "y")), tiny_table)


class TestDocMatrix:
    def test_zero_padding(self, tiny_table):
        m = doc_matrix(TokenDocument("d", ("a", "b")), tiny_table, r=4)
        assert m.values.shape == (2, 4)
        assert m.effective_length == 2
        assert np.all(m.values[:, 2:] == 0.0)

    def test_truncation(self, tiny_table):
        m = doc_matrix(TokenDocument("d", ("a", "b", "a", "b", "a", "b")),
                       tiny_table, r=4)
        assert m.effective_length == 4
        assert np.array_equal(m.values[:, 3], tiny_table["b"])

    def test_single_token_layout(self, tiny_table):
        m = doc_matrix(TokenDocument("d", ("a",)), tiny_table, r=2)
        assert np.array_equal(m.values, np.array([[1.0, 0.0], [2.0, 0.0]]))

    def test_oov_columns_skipped(self, tiny_table):
        m = doc_matrix(TokenDocument("d", ("x", "a", "y", "b")), tiny_table, r=3)
        assert m.effective_length == 2
        assert np.array_equal(m.values[:, 0], tiny_table["a"])

    def test_r_must_be_positive(self, tiny_table):
        with pytest.raises(ConfigError):
            doc_matrix(TokenDocument("d", ("a",)), tiny_table, r=0)

    def test_vector_is_column_mean_of_unpadded_matrix(self, tiny_table):
        rng = np.random.default_rng(2)
        pool = ["a", "b", "c", "oov"]
        for i in range(20):
            tokens = tuple(pool[j] for j in rng.integers(0, 4, size=6))
            doc = TokenDocument(f"d{i}", tokens)
            try:
                vec = doc_vector(doc, tiny_table)
            except AllOovError:
                continue
            m = doc_matrix(doc, tiny_table, r=10)
            mean = m.values[:, :m.effective_length].mean(axis=1)
            assert np.allclose(vec.values, mean)


class TestTfidf:
    def test_everywhere_term_weight_zero(self):
        docs = [["shared", "one"], ["shared", "two"]]
        result = tfidf_representation(docs)
        col = result.vocabulary.index("shared")
        dense = result.dense()
        assert np.all(dense[:, col] == 0.0)

    def test_single_document_zero_and_warns(self, caplog):
        with caplog.at_level("WARNING"):
            result = tfidf_representation([["a", "b"]])
        assert result.rows == ({},)
        assert any("all-zero" in m for m in caplog.messages)

    def test_idf_ln2(self):
        docs = [["rare", "both"], ["both"]]
        result = tfidf_representation(docs)
        row = result.rows[0]
        col = result.vocabulary.index("rare")
        # single occurrence, idf ln 2, and the row L2-normalizes to 1
        assert row[col] == pytest.approx(1.0)
        pre_norm = 1 * math.log(2)
        assert pre_norm == pytest.approx(0.6931, abs=1e-4)

    def test_rows_unit_norm_or_zero(self):
        rng = np.random.default_rng(3)
        vocab = [f"w{i}" for i in range(12)]
        docs = [[vocab[j] for j in rng.integers(0, 12, size=rng.integers(1, 9))]
                for _ in range(15)]
        dense = tfidf_representation(docs).dense()
        norms = np.linalg.norm(dense, axis=1)
        assert np.all((np.abs(norms - 1.0) < 1e-12) | (norms == 0.0))

    def test_restricted_vocabulary(self):
        docs = [["a", "b"], ["a", "c"]]
        result = tfidf_representation(docs, vocabulary={"b", "c"})
        assert result.vocabulary == ("b", "c")


class TestGenderKeywords:
    def test_set_arithmetic(self):
        docs = [vdoc("m", ["a", "a", "b"], "male"),
                vdoc("f", ["b", "c", "c"], "female")]
        assert gender_keywords(docs, top_n=2) == {"a", "c"}

    def test_identical_corpora_empty(self):
        docs = [vdoc("m", ["a", "b"], "male"), vdoc("f", ["a", "b"], "female")]
        assert gender_keywords(docs, top_n=2) == set()

    def test_missing_gender_errors(self):
        docs = [vdoc("m", ["a"], "male")]
        with pytest.raises(DataError, match="female"):
            gender_keywords(docs, top_n=2)

    def test_result_bounded_by_two_top_n(self):
        rng = np.random.default_rng(4)
        vocab = [f"w{i}" for i in range(30)]
        docs = [vdoc(f"u{i}", [vocab[j] for j in rng.integers(0, 30, size=20)],
                     "male" if i % 2 else "female") for i in range(10)]
        for top_n in (3, 5, 10):
            assert len(gender_keywords(docs, top_n)) <= 2 * top_n
