import json
import random

import pytest

from trialscreen.errors import EmptyGoldError
from trialscreen.keywords import (
    CriterionId,
    ExtractedCandidate,
    KeywordSet,
    default_keyword_bank,
    extract_candidates,
    extraction_metrics,
    keyword_frequency,
    load_keyword_bank,
    match_sentence,
)
from trialscreen.parsing import sentences_for_trial


class TestBank:
    def test_covers_all_seven_criteria(self):
        bank = default_keyword_bank()
        assert set(bank) == set(CriterionId)

    def test_known_entries(self):
        bank = default_keyword_bank()
        assert bank[CriterionId.HCV].phrases == ("hcv", "hepatitis")
        assert bank[CriterionId.AUTOIMMUNE].phrases == ("uncontrolled systemic", "autoimmune")
        assert "human immunodeficiency virus" in bank[CriterionId.HIV].phrases
        assert "in-situ" in bank[CriterionId.PRIOR_MALIGNANCY].phrases

    def test_phrases_unique_and_lowercase(self):
        for keyword_set in default_keyword_bank().values():
            assert len(set(keyword_set.phrases)) == len(keyword_set.phrases)
            assert all(p == p.lower() == p.strip() for p in keyword_set.phrases)

    def test_custom_file_dedupes_and_lowercases(self, tmp_path):
        path = tmp_path / "bank.json"
        path.write_text(
            json.dumps({"hiv": ["HIV", "hiv", "  Aids-Related   Illness "]}),
            encoding="utf-8",
        )
        bank = load_keyword_bank(path)
        assert bank[CriterionId.HIV].phrases == ("hiv", "aids-related illness")

    def test_unknown_criterion_rejected(self, tmp_path):
        path = tmp_path / "bank.json"
        path.write_text(json.dumps({"not_a_criterion": ["x"]}), encoding="utf-8")
        with pytest.raises(ValueError):
            load_keyword_bank(path)

    def test_empty_bank_rejected(self):
        with pytest.raises(ValueError):
            KeywordSet(criterion=CriterionId.HIV, phrases=())


class TestMatchSentence:
    def setup_method(self):
        self.bank = default_keyword_bank()

    def test_no_partial_word_match(self):
        assert match_sentence("exclusion:archived tissue required", self.bank[CriterionId.HIV]) == []

    def test_case_insensitive(self):
        assert match_sentence("exclusion:Known HIV infection", self.bank[CriterionId.HIV]) == ["hiv"]

    def test_punctuation_is_a_boundary(self):
        assert match_sentence("exclusion:seropositive (HIV).", self.bank[CriterionId.HIV]) == ["hiv"]

    def test_multiword_phrase(self):
        matched = match_sentence(
            "exclusion:history of human immunodeficiency virus",
            self.bank[CriterionId.HIV],
        )
        assert matched == ["human immunodeficiency virus"]

    def test_plural_not_conflated(self):
        subset = self.bank[CriterionId.SUB_DRUG_ALC]
        assert match_sentence("exclusion:drugstore purchases allowed", subset) == []
        assert "drugs" in match_sentence("exclusion:illicit drugs prohibited", subset)
        assert "drug" not in match_sentence("exclusion:illicit drugs prohibited", subset)

    def test_matches_reported_in_bank_order(self):
        matched = match_sentence(
            "inclusion:No other invasive malignancy within the past 5 years except"
            " nonmelanoma skin cancer",
            self.bank[CriterionId.PRIOR_MALIGNANCY],
        )
        assert matched == ["5 years", "cancer"]

    def test_hyphenated_phrase(self):
        matched = match_sentence(
            "exclusion:carcinoma in-situ of the cervix",
            self.bank[CriterionId.PRIOR_MALIGNANCY],
        )
        assert matched == ["in-situ"]

    def test_embedded_random_phrases_always_match(self):
        rng = random.Random(505)
        all_sets = list(self.bank.values())
        for _ in range(200):
            keyword_set = rng.choice(all_sets)
            phrase = rng.choice(keyword_set.phrases)
            casing = phrase.upper() if rng.random() < 0.5 else phrase
            sentence = f"exclusion:patients with {casing} are excluded"
            assert phrase in match_sentence(sentence, keyword_set)


class TestExtractCandidates:
    def test_hepatitis_hits_both_viral_criteria(self):
        sentences = sentences_for_trial("NCT00000001", "Active hepatitis requiring therapy")
        criteria = {c.criterion for c in extract_candidates(sentences, default_keyword_bank())}
        assert criteria == {CriterionId.HBV, CriterionId.HCV}

    def test_keyword_free_sentence_yields_nothing(self):
        sentences = sentences_for_trial("NCT00000001", "Age 18 or older required")
        assert extract_candidates(sentences, default_keyword_bank()) == []

    def test_candidate_carries_sentence_key_and_phrases(self):
        sentences = sentences_for_trial(
            "NCT00048997", "No other malignancy within the past 3 years"
        )
        candidates = extract_candidates(sentences, default_keyword_bank())
        pm = [c for c in candidates if c.criterion == CriterionId.PRIOR_MALIGNANCY]
        assert len(pm) == 1
        assert pm[0].trial_id == "NCT00048997"
        assert pm[0].sentence_index == 0
        assert "3 years" in pm[0].matched_phrases
        assert "other malignancy" in pm[0].matched_phrases

    def test_adding_phrase_only_adds_candidates(self):
        rng = random.Random(606)
        words = ["alpha", "beta", "gamma", "delta", "zeta"]
        for _ in range(50):
            corpus_text = "\n".join(
                "- " + " ".join(rng.choice(words) for _ in range(4))
                for _ in range(rng.randint(2, 6))
            )
            sentences = sentences_for_trial("NCT00000009", corpus_text)
            small = {
                CriterionId.HIV: KeywordSet(criterion=CriterionId.HIV, phrases=("alpha",))
            }
            bigger = {
                CriterionId.HIV: KeywordSet(
                    criterion=CriterionId.HIV, phrases=("alpha", "beta")
                )
            }
            got_small = {
                (c.trial_id, c.sentence_index) for c in extract_candidates(sentences, small)
            }
            got_bigger = {
                (c.trial_id, c.sentence_index) for c in extract_candidates(sentences, bigger)
            }
            assert got_small <= got_bigger


def candidate(trial, criterion=CriterionId.HIV, index=0, phrases=("hiv",)):
    return ExtractedCandidate(
        trial_id=trial,
        sentence_index=index,
        criterion=criterion,
        prefixed_text="exclusion:known hiv infection",
        matched_phrases=tuple(phrases),
    )


class TestExtractionMetrics:
    def test_worked_example(self):
        captured = [candidate(f"NCT{10000000 + i:08d}") for i in range(1, 9)]
        gold = {
            CriterionId.HIV: {f"NCT{10000000 + i:08d}" for i in [1, 2, 3, 4, 5, 6, 7, 9]}
        }
        universe = [f"NCT{10000000 + i:08d}" for i in range(1, 11)]
        result = extraction_metrics(captured, gold, universe)[CriterionId.HIV]
        assert result.precision == pytest.approx(7 / 8, abs=1e-12)
        assert result.recall == pytest.approx(7 / 8, abs=1e-12)
        assert result.accuracy == pytest.approx(0.8, abs=1e-12)

    def test_perfect_capture(self):
        captured = [candidate("NCT10000001"), candidate("NCT10000002")]
        gold = {CriterionId.HIV: {"NCT10000001", "NCT10000002"}}
        result = extraction_metrics(captured, gold, ["NCT10000001", "NCT10000002"])[
            CriterionId.HIV
        ]
        assert (result.precision, result.recall, result.accuracy) == (1.0, 1.0, 1.0)

    def test_nothing_captured_leaves_precision_undefined(self):
        gold = {CriterionId.HIV: {"NCT10000001"}}
        result = extraction_metrics([], gold, ["NCT10000001", "NCT10000002"])[CriterionId.HIV]
        assert result.precision is None
        assert result.recall == 0.0

    def test_empty_gold_raises(self):
        with pytest.raises(EmptyGoldError):
            extraction_metrics([], {CriterionId.HIV: set()}, ["NCT10000001"])

    def test_matches_brute_force_oracle(self):
        rng = random.Random(707)
        for _ in range(200):
            universe = [f"NCT{20000000 + i:08d}" for i in range(rng.randint(2, 12))]
            captured_ids = {t for t in universe if rng.random() < 0.5}
            gold_ids = {t for t in universe if rng.random() < 0.5}
            if not gold_ids:
                gold_ids = {rng.choice(universe)}
            candidates = [candidate(t) for t in sorted(captured_ids)]
            result = extraction_metrics(
                candidates, {CriterionId.HIV: gold_ids}, universe
            )[CriterionId.HIV]

            # oracle: count trial-level confusion cells directly
            tp = sum(1 for t in universe if t in captured_ids and t in gold_ids)
            fp = sum(1 for t in universe if t in captured_ids and t not in gold_ids)
            fn = sum(1 for t in universe if t not in captured_ids and t in gold_ids)
            tn = sum(1 for t in universe if t not in captured_ids and t not in gold_ids)
            if captured_ids:
                assert result.precision == pytest.approx(tp / (tp + fp), abs=1e-12)
            else:
                assert result.precision is None
            assert result.recall == pytest.approx(tp / (tp + fn), abs=1e-12)
            assert result.accuracy == pytest.approx((tp + tn) / len(universe), abs=1e-12)


class TestKeywordFrequency:
    def test_counts_every_firing(self):
        candidates = [
            candidate("NCT10000001", phrases=("hiv",)),
            candidate("NCT10000002", phrases=("hiv", "aids-related illness")),
        ]
        counts, precision = keyword_frequency(candidates)
        assert counts == {"hiv": 2, "aids-related illness": 1}
        assert precision == {}

    def test_precision_over_labeled_firings(self):
        candidates = [
            candidate("NCT10000001", index=0),
            candidate("NCT10000002", index=0),
            candidate("NCT10000003", index=0),
        ]
        gold = {
            ("NCT10000001", 0, CriterionId.HIV): 1,
            ("NCT10000002", 0, CriterionId.HIV): 0,
        }
        counts, precision = keyword_frequency(candidates, gold)
        assert counts["hiv"] == 3
        # only the two labeled firings contribute
        assert precision["hiv"] == pytest.approx(0.5)
