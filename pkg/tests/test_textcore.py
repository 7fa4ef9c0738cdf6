import json

import pytest

from stdqa.textcore import (
    PAD_ID,
    PAD_TOKEN,
    UNK_ID,
    UNK_TOKEN,
    SegmenterConfig,
    TokenizedSentence,
    Tokenizer,
    Vocabulary,
    build_vocab,
    decode,
    encode,
    load_lexicon,
    segment,
)

FIVE_WORDS = frozenset({"标准", "适用", "最大", "多少", "压力"})


class TestSegment:
    def test_lexicon_splits_example_sentence(self):
        config = SegmenterConfig(mode="maxmatch", lexicon=FIVE_WORDS)
        assert segment("标准适用最大多少压力", config) == ["标准", "适用", "最大", "多少", "压力"]

    def test_empty_text(self):
        assert segment("", SegmenterConfig()) == []
        assert segment("", SegmenterConfig(mode="maxmatch", lexicon=FIVE_WORDS)) == []

    def test_maxmatch_vs_char_mode(self):
        lex = frozenset({"标准", "适用"})
        assert segment("标准适用", SegmenterConfig(mode="maxmatch", lexicon=lex)) == ["标准", "适用"]
        assert segment("标准适用", SegmenterConfig(mode="char")) == ["标", "准", "适", "用"]

    def test_greedy_longest_match_wins(self):
        lex = frozenset({"标准", "标准适用", "压力"})
        config = SegmenterConfig(mode="maxmatch", lexicon=lex)
        assert segment("标准适用压力", config) == ["标准适用", "压力"]

    def test_unmatched_chars_fall_back_to_singles(self):
        config = SegmenterConfig(mode="maxmatch", lexicon=frozenset({"压力"}))
        assert segment("最大压力", config) == ["最", "大", "压力"]

    def test_whitespace_never_tokenized(self):
        assert segment("标 准\n适用", SegmenterConfig()) == ["标", "准", "适", "用"]

    def test_punctuation_kept_as_single_tokens(self):
        assert segment("压力?", SegmenterConfig())[-1] == "?"

    @pytest.mark.parametrize("text", ["", "a b c", "设计 压力。", "x\ty\nz"])
    def test_char_mode_join_reproduces_text_sans_whitespace(self, text):
        tokens = segment(text, SegmenterConfig())
        assert "".join(tokens) == "".join(text.split())

    def test_unknown_mode_rejected(self):
        with pytest.raises(ValueError):
            SegmenterConfig(mode="bpe")

    def test_maxmatch_requires_lexicon(self):
        with pytest.raises(ValueError):
            SegmenterConfig(mode="maxmatch")


class TestBuildVocab:
    def test_counts_and_order(self):
        vocab = build_vocab([["a", "b"], ["b", "c"]], min_count=1)
        # b first (count 2), then a, c lexicographic
        assert vocab.content_tokens == ["b", "a", "c"]
        assert vocab.id_of("b") == 2
        assert vocab.size == 5

    def test_min_count_filters(self):
        vocab = build_vocab([["a", "b"], ["b", "c"]], min_count=2)
        assert vocab.content_tokens == ["b"]

    def test_empty_corpus(self):
        vocab = build_vocab([], min_count=1)
        assert vocab.size == 2
        assert vocab.token_of(PAD_ID) == PAD_TOKEN
        assert vocab.token_of(UNK_ID) == UNK_TOKEN

    def test_deterministic(self):
        corpus = [["x", "y", "z"], ["y", "x"], ["q"]]
        v1 = build_vocab(corpus, min_count=1)
        v2 = build_vocab(corpus, min_count=1)
        assert v1.content_tokens == v2.content_tokens

    def test_min_count_validated(self):
        with pytest.raises(ValueError):
            build_vocab([], min_count=0)


class TestEncode:
    @pytest.fixture
    def vocab(self):
        return build_vocab([["a", "b"], ["b", "c"]], min_count=1)

    def test_padding(self, vocab):
        ids, true_len = encode(["b"], vocab, max_len=3)
        assert ids == [vocab.id_of("b"), PAD_ID, PAD_ID]
        assert true_len == 1

    def test_unknown_token(self, vocab):
        ids, true_len = encode(["z"], vocab, max_len=1)
        assert ids == [UNK_ID]
        assert true_len == 1

    def test_truncation(self, vocab):
        ids, true_len = encode(["a", "b", "c", "a", "b"], vocab, max_len=3)
        assert len(ids) == 3
        assert true_len == 3
        assert ids == [vocab.id_of(t) for t in ["a", "b", "c"]]

    def test_round_trip_with_unk_marker(self, vocab):
        tokens = ["a", "z", "c"]
        ids, true_len = encode(tokens, vocab, max_len=5)
        assert decode(ids, vocab, true_len) == ["a", UNK_TOKEN, "c"]

    def test_max_len_validated(self, vocab):
        with pytest.raises(ValueError):
            encode(["a"], vocab, max_len=0)


class TestVocabularyFile:
    def test_round_trip(self, tmp_path):
        vocab = build_vocab([["甲", "乙"], ["乙"]], min_count=1)
        path = tmp_path / "vocab.json"
        vocab.save(path)
        loaded = Vocabulary.load(path)
        assert loaded.content_tokens == vocab.content_tokens
        assert loaded.min_count == vocab.min_count
        # file schema: index in list = id - 2
        payload = json.loads(path.read_text(encoding="utf-8"))
        for k, token in enumerate(payload["tokens"]):
            assert vocab.id_of(token) == k + 2


class TestTokenizer:
    def test_produces_matched_tokens_and_ids(self):
        vocab = build_vocab([["标", "准"]], min_count=1)
        tokenizer = Tokenizer(vocab=vocab)
        ts = tokenizer("标准X")
        assert ts.tokens == ("标", "准", "X")
        assert ts.ids == (vocab.id_of("标"), vocab.id_of("准"), UNK_ID)
        assert ts.text == "标准X"

    def test_dict_round_trip(self):
        vocab = build_vocab([["标", "准"]], min_count=1)
        tokenizer = Tokenizer(vocab=vocab, segmenter=SegmenterConfig())
        clone = Tokenizer.from_dict(tokenizer.to_dict())
        assert clone("标准").ids == tokenizer("标准").ids

    def test_tokenized_sentence_length_invariant(self):
        with pytest.raises(ValueError):
            TokenizedSentence(("a",), (1, 2))


def test_load_lexicon(tmp_path):
    path = tmp_path / "lex.txt"
    path.write_text("标准\n适用\n\n压力\n", encoding="utf-8")
    assert load_lexicon(path) == frozenset({"标准", "适用", "压力"})
