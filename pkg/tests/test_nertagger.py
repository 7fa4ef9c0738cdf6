import math

import numpy as np
import pytest

from oracles import brute_log_partition, brute_viterbi
from synth import ner_fixture
from stdqa.nertagger import (
    CrfParams,
    EntitySpan,
    InfeasiblePathError,
    NerConfig,
    NerModel,
    TaggedSentence,
    TagSet,
    crf_gold_score,
    crf_log_partition,
    extract_entities,
    load_ner_file,
    sentence_nll,
    spans_to_tags,
    tag_text,
    train_ner,
    viterbi_decode,
)

TABLE2_SENTENCE = "本规定不适用于对焊法兰的颈部过渡段"
TABLE2_TAGS = ("O",) * 7 + ("B-CAT", "I-CAT") + ("O",) * 8


def zero_crf(T):
    return CrfParams.from_arrays(np.zeros((T, T)), np.zeros(T), np.zeros(T))


def random_crf(rng, T):
    return CrfParams.from_arrays(
        rng.normal(size=(T, T)), rng.normal(size=T), rng.normal(size=T))


class TestTagSet:
    def test_default_has_thirteen_dense_tags(self):
        ts = TagSet.default()
        assert ts.size == 13
        assert ts.tags[0] == "O"
        assert ts.index("B-PRO") == 1
        assert sorted(ts.index(t) for t in ts.tags) == list(range(13))

    def test_bio_masks(self):
        ts = TagSet.from_entity_types(("CAT", "MAT"))
        allowed_start, allowed = ts.bio_masks()
        i_cat = ts.index("I-CAT")
        assert allowed_start[i_cat] == 0
        assert allowed_start[ts.index("O")] == 1
        assert allowed[ts.index("B-CAT"), i_cat] == 1
        assert allowed[i_cat, i_cat] == 1
        assert allowed[ts.index("O"), i_cat] == 0
        assert allowed[ts.index("B-MAT"), i_cat] == 0

    def test_requires_single_o(self):
        with pytest.raises(ValueError):
            TagSet(("B-CAT", "I-CAT"))


class TestCrfGoldScore:
    def test_zero_crf_reduces_to_emission_sum(self):
        rng = np.random.default_rng(61)
        em = rng.normal(size=(4, 3))
        tags = [2, 0, 1, 2]
        got = crf_gold_score(em, tags, zero_crf(3))
        assert got == pytest.approx(sum(em[t, y] for t, y in enumerate(tags)), abs=1e-12)

    def test_single_position(self):
        rng = np.random.default_rng(67)
        em = rng.normal(size=(1, 3))
        crf = random_crf(rng, 3)
        got = crf_gold_score(em, [2], crf)
        want = crf.start.value[2] + em[0, 2] + crf.end.value[2]
        assert got == pytest.approx(want, abs=1e-12)

    def test_matches_hand_summed_path(self):
        rng = np.random.default_rng(71)
        em = rng.normal(size=(4, 3))
        crf = random_crf(rng, 3)
        tags = [1, 0, 2, 2]
        want = crf.start.value[1] + crf.end.value[2]
        for t, y in enumerate(tags):
            want += em[t, y]
        for t in range(1, 4):
            want += crf.trans.value[tags[t - 1], tags[t]]
        assert crf_gold_score(em, tags, crf) == pytest.approx(want, abs=1e-12)

    def test_tag_out_of_range(self):
        with pytest.raises(IndexError):
            crf_gold_score(np.zeros((2, 3)), [0, 3], zero_crf(3))


class TestCrfLogPartition:
    def test_all_zero_single_step(self):
        assert crf_log_partition(np.zeros((1, 3)), zero_crf(3)) == pytest.approx(
            math.log(3), abs=1e-12)

    def test_constant_emission_shift(self):
        rng = np.random.default_rng(73)
        em = rng.normal(size=(4, 3))
        crf = random_crf(rng, 3)
        base = crf_log_partition(em, crf)
        shifted = crf_log_partition(em + 0.7, crf)
        assert shifted == pytest.approx(base + 4 * 0.7, abs=1e-9)

    def test_matches_exhaustive_enumeration(self):
        rng = np.random.default_rng(79)
        em = rng.normal(size=(5, 4))
        crf = random_crf(rng, 4)
        want = brute_log_partition(em, crf.trans.value, crf.start.value, crf.end.value)
        assert crf_log_partition(em, crf) == pytest.approx(want, abs=1e-9)

    def test_gold_path_probability_valid(self):
        rng = np.random.default_rng(83)
        for _ in range(10):
            em = rng.normal(size=(4, 3))
            crf = random_crf(rng, 3)
            tags = rng.integers(0, 3, size=4)
            p = math.exp(crf_gold_score(em, tags, crf) - crf_log_partition(em, crf))
            assert 0.0 < p <= 1.0


class TestViterbi:
    def test_zero_transitions_decouple_positions(self):
        rng = np.random.default_rng(89)
        em = rng.normal(size=(5, 4))
        path, score = viterbi_decode(em, zero_crf(4))
        assert path == list(em.argmax(axis=1))
        assert score == pytest.approx(em.max(axis=1).sum(), abs=1e-12)

    def test_matches_exhaustive_argmax(self):
        rng = np.random.default_rng(97)
        em = rng.normal(size=(5, 4))
        crf = random_crf(rng, 4)
        path, score = viterbi_decode(em, crf)
        want_path, want_score = brute_viterbi(
            em, crf.trans.value, crf.start.value, crf.end.value)
        assert path == want_path
        assert score == pytest.approx(want_score, abs=1e-9)

    def test_bio_mask_blocks_dangling_inside_tag(self):
        ts = TagSet.from_entity_types(("CAT",))  # O, B-CAT, I-CAT
        rng = np.random.default_rng(101)
        em = rng.normal(size=(4, 3))
        em[0, ts.index("I-CAT")] = 50.0  # strongly favored but illegal start
        crf = random_crf(rng, 3)
        path, score = viterbi_decode(em, crf, bio_mask=True, tagset=ts)
        assert path[0] != ts.index("I-CAT")
        allowed_start, allowed_trans = ts.bio_masks()
        want_path, want_score = brute_viterbi(
            em, crf.trans.value, crf.start.value, crf.end.value,
            allowed_start, allowed_trans)
        assert path == want_path
        assert score == pytest.approx(want_score, abs=1e-9)

    def test_bio_mask_requires_tagset(self):
        with pytest.raises(ValueError):
            viterbi_decode(np.zeros((2, 3)), zero_crf(3), bio_mask=True)

    def test_overmasked_paths_rejected(self):
        from stdqa.nncore import kernels

        em = np.zeros((2, 2))
        crf = zero_crf(2)
        path, score = kernels.viterbi_kernel(
            em, crf.trans.value, crf.start.value, crf.end.value,
            np.zeros(2, dtype=np.uint8), np.ones((2, 2), dtype=np.uint8))
        assert score == -np.inf
        # the decoder surfaces this as an infeasibility error
        masked = TagSet.from_entity_types(("CAT",))

        class Degenerate(TagSet):
            def bio_masks(self):
                T = self.size
                return np.zeros(T, dtype=np.uint8), np.ones((T, T), dtype=np.uint8)

        degenerate = Degenerate(masked.tags)
        with pytest.raises(InfeasiblePathError):
            viterbi_decode(np.zeros((2, 3)), zero_crf(3), bio_mask=True, tagset=degenerate)


class TestExtractEntities:
    def test_table_two_golden_span(self):
        sentence = TaggedSentence(tuple(TABLE2_SENTENCE), TABLE2_TAGS)
        spans = extract_entities(sentence)
        assert spans == [EntitySpan(start=7, end=9, entity_type="CAT", surface="对焊")]

    def test_all_outside(self):
        sentence = TaggedSentence(tuple("设计压力"), ("O",) * 4)
        assert extract_entities(sentence) == []

    def test_dangling_inside_repaired_to_begin(self):
        sentence = TaggedSentence(("钢", "材", "。"), ("I-MAT", "I-MAT", "O"))
        spans = extract_entities(sentence)
        assert spans == [EntitySpan(start=0, end=2, entity_type="MAT", surface="钢材")]

    def test_adjacent_entities_split_on_begin(self):
        sentence = TaggedSentence(("甲", "乙", "丙"), ("B-CAT", "B-CAT", "I-CAT"))
        spans = extract_entities(sentence)
        assert [(s.start, s.end) for s in spans] == [(0, 1), (1, 3)]

    def test_type_switch_inside_run_repairs(self):
        sentence = TaggedSentence(("甲", "乙"), ("B-CAT", "I-MAT"))
        spans = extract_entities(sentence)
        assert [(s.entity_type, s.start, s.end) for s in spans] == [
            ("CAT", 0, 1), ("MAT", 1, 2)]

    def test_round_trip_reproduces_repaired_tags(self):
        rng = np.random.default_rng(103)
        ts = TagSet.default()
        for _ in range(50):
            tags = [ts.tag_of(i) for i in rng.integers(0, 13, size=8)]
            sentence = TaggedSentence(tuple("一二三四五六七八"), tuple(tags))
            spans = extract_entities(sentence)
            rendered = spans_to_tags(spans, 8)
            # a second pass over the rendered tags is a fixed point
            assert spans_to_tags(extract_entities(
                TaggedSentence(sentence.tokens, tuple(rendered))), 8) == rendered

    def test_mismatched_lengths_rejected(self):
        with pytest.raises(ValueError):
            TaggedSentence(("a",), ("O", "O"))


class TestSentenceNll:
    def test_nonnegative_on_random_fixtures(self):
        rng = np.random.default_rng(107)
        ts = TagSet.default()
        model = NerModel.init(NerConfig(embed_dim=8, hidden_dim=8, seed=0),
                              vocab_size=12, tagset=ts)
        for _ in range(10):
            ids = rng.integers(2, 12, size=rng.integers(1, 6)).tolist()
            tags = rng.integers(0, 13, size=len(ids))
            assert sentence_nll(model, ids, tags, accumulate_grads=False) >= 0.0


class TestTrainNer:
    def test_deterministic_histories(self):
        dataset = ner_fixture()
        config = NerConfig(embed_dim=8, hidden_dim=8, lr=1e-2, batch_size=8, seed=3)
        _, h1 = train_ner(dataset, config, epochs=3)
        _, h2 = train_ner(dataset, config, epochs=3)
        assert h1 == h2

    def test_losses_nonnegative(self):
        dataset = ner_fixture()
        config = NerConfig(embed_dim=8, hidden_dim=8, lr=1e-2, batch_size=8, seed=0)
        _, history = train_ner(dataset, config, epochs=3)
        assert all(h["loss"] >= 0.0 for h in history)

    def test_empty_dataset_rejected(self):
        with pytest.raises(ValueError):
            train_ner([], NerConfig(), epochs=1)


class TestNerFileAndCheckpoint:
    def test_jsonl_round_trip(self, tmp_path):
        path = tmp_path / "ner.jsonl"
        dataset = ner_fixture()
        with open(path, "w", encoding="utf-8") as fh:
            import json

            for s in dataset:
                fh.write(json.dumps({"text": list(s.tokens), "tags": list(s.tags)},
                                    ensure_ascii=False) + "\n")
        loaded = load_ner_file(path)
        assert loaded == dataset

    def test_checkpoint_preserves_decoding(self, tmp_path, memorized_ner):
        from stdqa.nertagger import load_ner_checkpoint, save_ner_checkpoint

        model, _, dataset = memorized_ner
        path = tmp_path / "ner.ckpt"
        save_ner_checkpoint(path, model)
        reloaded = load_ner_checkpoint(path)
        for s in dataset:
            assert tag_text(reloaded, s.text).tags == tag_text(model, s.text).tags
