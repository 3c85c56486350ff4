import math

import pytest

from lexbridge.errors import CorpusFormatError, ValidationError
from lexbridge.taskgen import extract_span, gen_keyword_queries, gen_pop_queries
from lexbridge.types import Passage


class TestSpanExtraction:
    def test_window_from_start(self):
        words = [f"w{i}" for i in range(300)]
        assert extract_span(words, 0, 16) == " ".join(words[:16])

    def test_out_of_range(self):
        with pytest.raises(ValidationError):
            extract_span(["a", "b"], 1, 2)


class TestPopGeneration:
    def test_short_passage_skipped(self):
        corpus = [Passage(id="p1", text=" ".join(["w"] * 10))]
        result = gen_pop_queries(corpus, [16], seed=0)
        assert result.queries == []
        assert result.skipped["pop16"] == 1

    def test_all_lengths_on_long_corpus(self, small_corpus):
        passages, _, _ = small_corpus
        result = gen_pop_queries(passages, [16, 32, 64, 128, 256], seed=5)
        assert len(result.queries) == 500
        by_source = {}
        for q in result.queries:
            src = next(p for p in passages if p.id == q.relevant_ids[0])
            assert len(q.text.split()) == q.span_length
            # exact substring modulo whitespace normalization
            assert q.text in " ".join(src.text.split())
            start = result.extras[q.id]["start"]
            words = src.text.split()
            assert q.text == " ".join(words[start:start + q.span_length])
            by_source.setdefault(src.id, []).append(q.span_length)
        assert all(sorted(v) == [16, 32, 64, 128, 256] for v in by_source.values())

    def test_single_relevant_per_query(self, small_corpus):
        passages, _, _ = small_corpus
        result = gen_pop_queries(passages, [16], seed=5)
        assert all(len(q.relevant_ids) == 1 for q in result.queries)
        assert all(result.qrels[q.id] == {q.relevant_ids[0]} for q in result.queries)

    def test_deterministic(self, small_corpus):
        passages, _, _ = small_corpus
        a = gen_pop_queries(passages, [16, 64], seed=9)
        b = gen_pop_queries(passages, [16, 64], seed=9)
        assert [(q.id, q.text) for q in a.queries] == [(q.id, q.text) for q in b.queries]

    def test_ordering_by_passage_then_length(self, small_corpus):
        passages, _, _ = small_corpus
        result = gen_pop_queries(passages, [64, 16], seed=1)
        keys = [(q.relevant_ids[0], q.span_length) for q in result.queries]
        assert keys == sorted(keys)

    def test_unsupported_length_rejected(self, small_corpus):
        with pytest.raises(ValidationError):
            gen_pop_queries(small_corpus[0], [17], seed=0)

    def test_empty_lengths_rejected(self, small_corpus):
        with pytest.raises(ValidationError):
            gen_pop_queries(small_corpus[0], [], seed=0)


class TestKeywordGeneration:
    def test_hand_computed_tfidf_two_docs(self):
        # doc1: a(2) b(1) c(1); doc2: a d e. idf(a)=ln(1)=0, idf(b|c)=ln 2
        corpus = [
            Passage(id="p1", text="a a b c"),
            Passage(id="p2", text="a d e"),
        ]
        result = gen_keyword_queries(corpus, k_range=(3, 3), seed=0)
        q1 = next(q for q in result.queries if q.relevant_ids == ("p1",))
        words = q1.text.split()
        assert len(words) == 3
        # b and c outscore corpus-common a (score 0); ties break alphabetically
        assert words[0] == "b" and words[1] == "c" and words[2] == "a"

    def test_one_distinct_word_skipped(self):
        corpus = [Passage(id="p1", text="x x x"), Passage(id="p2", text="q r s t")]
        result = gen_keyword_queries(corpus, seed=0)
        assert [q.relevant_ids[0] for q in result.queries] == ["p2"]
        assert result.skipped["keyword"] == 1

    def test_keywords_verbatim_and_bounded(self, small_corpus):
        passages, _, _ = small_corpus
        result = gen_keyword_queries(passages, seed=3)
        assert len(result.queries) == len(passages)
        by_id = {p.id: p for p in passages}
        for q in result.queries:
            words = q.text.split()
            assert 3 <= len(words) <= 8
            source_tokens = set(by_id[q.relevant_ids[0]].text.split())
            assert all(w in source_tokens for w in words)

    def test_surface_form_restored_on_mixed_case(self):
        corpus = [
            Passage(id="p1", text="Apple Apple banana CHERRY"),
            Passage(id="p2", text="dog emu fox"),
        ]
        result = gen_keyword_queries(corpus, k_range=(3, 3), seed=0)
        q1 = next(q for q in result.queries if q.relevant_ids == ("p1",))
        source_tokens = set(corpus[0].text.split())
        assert all(w in source_tokens for w in q1.text.split())

    def test_deterministic(self, small_corpus):
        passages, _, _ = small_corpus
        a = gen_keyword_queries(passages, seed=4)
        b = gen_keyword_queries(passages, seed=4)
        assert [(q.id, q.text) for q in a.queries] == [(q.id, q.text) for q in b.queries]

    def test_import_mode(self, tmp_path):
        corpus = [Passage(id="p1", text="alpha beta gamma delta")]
        path = tmp_path / "kw.tsv"
        path.write_text("p1\talpha beta gamma\n")
        result = gen_keyword_queries(corpus, mode="import", import_path=path)
        assert result.queries[0].text == "alpha beta gamma"
        assert result.queries[0].relevant_ids == ("p1",)

    def test_import_mode_malformed_line(self, tmp_path):
        corpus = [Passage(id="p1", text="alpha beta")]
        path = tmp_path / "kw.tsv"
        path.write_text("p1\talpha\np1 beta gamma\n")
        with pytest.raises(CorpusFormatError, match=":2"):
            gen_keyword_queries(corpus, mode="import", import_path=path)

    def test_import_mode_unknown_passage(self, tmp_path):
        corpus = [Passage(id="p1", text="alpha beta")]
        path = tmp_path / "kw.tsv"
        path.write_text("zz\talpha\n")
        with pytest.raises(CorpusFormatError, match=":1"):
            gen_keyword_queries(corpus, mode="import", import_path=path)

    def test_bad_k_range(self, small_corpus):
        with pytest.raises(ValidationError):
            gen_keyword_queries(small_corpus[0], k_range=(2, 8), seed=0)
