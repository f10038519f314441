"""Acceptance gate: one test per release criterion, at its stated tolerance.

Run with `pytest tests/test_acceptance.py -v` for one pass/fail line per
criterion.  The two dataset-reproduction criteria need the public PLABA
question/pmid JSON and are skipped unless the PLABA_DATA_JSON environment
variable points at it; everything else runs fully offline.
"""

import hashlib
import json
import logging
import os
import random
import statistics
import time
import zlib
from pathlib import Path

import pytest
import scipy.stats as sstats
from hypothesis import given, settings
from hypothesis import strategies as st

from plainbench import prompts
from plainbench.adapters import adapt_baseline, adapt_two_agents, run_strategy
from plainbench.corpus import load_corpus, split_corpus, synthetic_corpus
from plainbench.evaluation import (
    TREC_CATEGORIES,
    LikertRating,
    TrecSentenceRating,
    aggregate_likert,
    gold_documents,
    replicate_onto_gold,
    score_run,
    source_documents,
    trec_score,
)
from plainbench.finetune import (
    FinetuneConfig,
    build_finetune_job,
    export_finetune_jsonl,
    validate_finetune_jsonl,
)
from plainbench.gateway import ChatGateway, MockBackend
from plainbench.readability import (
    TextStats,
    count_syllables,
    fk_grade,
    smog_index,
    text_statistics,
)
from plainbench.stats import mean_sd, paired_t_test

DATA_DIR = Path(__file__).parent / "data"

FORMULA_TOL = 1e-9           # FK/SMOG are exact arithmetic given counts
SYLLABLE_AGREEMENT_FLOOR = 0.95
STATS_ORACLE_TOL = 1e-6      # vs scipy reference, 100 randomized instances
FK_TOL = 1.0                 # PLABA reference FK means; tokenizer unspecified
SMOG_TOL = 1.5               # PLABA reference SMOG means
PLABA_RUNTIME_LIMIT = 120.0
ORCHESTRATION_RUNTIME_LIMIT = 30.0

PLABA_SOURCE_FK = 13.67
PLABA_GOLD_FK = 11.64
PLABA_SOURCE_SMOG = 15.3
PLABA_GOLD_SMOG = 13.35

PLABA_ENV = "PLABA_DATA_JSON"
needs_plaba = pytest.mark.skipif(
    not os.environ.get(PLABA_ENV),
    reason=f"set {PLABA_ENV} to the PLABA question/pmid JSON to enable")


def plaba_corpus():
    return load_corpus(os.environ[PLABA_ENV])


# --- criterion: readability formula oracle ---------------------------------

def test_readability_formula_oracle_within_1e9():
    fixtures = json.loads(
        (DATA_DIR / "readability_fixtures.json").read_text(encoding="utf-8"))
    assert len(fixtures) >= 10
    for fixture in fixtures:
        stats = TextStats(
            sentence_count=fixture["sentences"],
            word_count=fixture["words"],
            syllable_count=fixture["syllables"],
            polysyllable_count=fixture["polysyllables"],
        )
        assert abs(fk_grade(stats) - fixture["fk"]) < FORMULA_TOL, \
            fixture["name"]
        smog, low = smog_index(stats)
        assert abs(smog - fixture["smog"]) < FORMULA_TOL, fixture["name"]
        assert low is fixture["smog_low_confidence"], fixture["name"]
        # the tokenizer reproduces the pre-counted tokens on these texts
        counted = text_statistics(fixture["text"])
        assert counted == stats, fixture["name"]


# --- criterion: syllable counter vs frozen oracle --------------------------

def test_syllable_oracle_agreement_at_least_95_percent():
    oracle = json.loads(
        (DATA_DIR / "syllable_oracle.json").read_text(encoding="utf-8"))
    assert len(oracle) == 200
    documented_path = DATA_DIR / "syllable_disagreements.json"
    documented = set()
    if documented_path.exists():
        documented = set(json.loads(documented_path.read_text()))
    disagreements = {
        entry["word"] for entry in oracle
        if count_syllables(entry["word"]) != entry["syllables"]
    }
    agreement = 1.0 - len(disagreements) / len(oracle)
    assert agreement >= SYLLABLE_AGREEMENT_FLOOR, sorted(disagreements)
    assert disagreements == documented, (
        "every disagreement must be documented: "
        f"undocumented={sorted(disagreements - documented)} "
        f"stale={sorted(documented - disagreements)}")


# --- criterion: PLABA readability means (conditional on the dataset) -------

@needs_plaba
def test_plaba_readability_means_within_tolerance():
    started = time.monotonic()
    corpus = plaba_corpus()
    split = split_corpus(corpus, train_ratio=0.8, seed=13)
    pmids = split.validation_pmids

    source = score_run("source", replicate_onto_gold(
        corpus, source_documents(corpus, pmids), pmids), corpus)
    gold = score_run("ground_truth", gold_documents(corpus, pmids), corpus)

    assert abs(source.summary["fk_grade"].mean - PLABA_SOURCE_FK) <= FK_TOL
    assert abs(gold.summary["fk_grade"].mean - PLABA_GOLD_FK) <= FK_TOL
    assert abs(source.summary["smog_index"].mean - PLABA_SOURCE_SMOG) <= SMOG_TOL
    assert abs(gold.summary["smog_index"].mean - PLABA_GOLD_SMOG) <= SMOG_TOL
    # abstracts average ~11 sentences, far below SMOG's 30-sentence norm
    assert source.low_confidence_count == len(source.per_document)
    assert time.monotonic() - started < PLABA_RUNTIME_LIMIT


# --- criterion: split integrity --------------------------------------------

@needs_plaba
def test_split_integrity_on_plaba():
    corpus = plaba_corpus()
    split = split_corpus(corpus, train_ratio=0.8, seed=13)
    assert len(split.train_pmids) == 600
    assert len(split.validation_pmids) == 150
    assert not split.train_pmids & split.validation_pmids
    assert len(split.train_sample_ids) + len(split.validation_sample_ids) == 917
    again = split_corpus(corpus, train_ratio=0.8, seed=13)
    assert again.train_pmids == split.train_pmids
    assert again.validation_sample_ids == split.validation_sample_ids


def test_split_integrity_on_synthetic_plaba_shape():
    corpus = synthetic_corpus(n_questions=75, pmids_per_question=10,
                              total_samples=917, seed=13)
    split = split_corpus(corpus, train_ratio=0.8, seed=13)
    assert len(split.train_pmids) == 600
    assert len(split.validation_pmids) == 150
    assert not split.train_pmids & split.validation_pmids
    assert len(split.train_sample_ids) + len(split.validation_sample_ids) == 917
    assert split_corpus(corpus, train_ratio=0.8, seed=13) == split


# --- criterion: statistics oracle ------------------------------------------

def test_statistics_oracle_against_reference_within_1e6():
    rng = random.Random(20240815)
    for _ in range(100):
        n = rng.randint(2, 40)
        a = [rng.gauss(10, 3) for _ in range(n)]
        b = [a[i] + rng.gauss(1, 2) for i in range(n)]
        if all(x - y == a[0] - b[0] for x, y in zip(a, b)):
            continue  # degenerate by construction; contract rejects these
        ours = paired_t_test(a, b)
        ref = sstats.ttest_rel(a, b)
        assert abs(ours.t - ref.statistic) < STATS_ORACLE_TOL
        assert abs(ours.p_two_sided - ref.pvalue) < STATS_ORACLE_TOL
        summary = mean_sd(a)
        assert abs(summary.mean - statistics.fmean(a)) < STATS_ORACLE_TOL
        assert abs(summary.sd - statistics.stdev(a)) < STATS_ORACLE_TOL


# --- criterion: offline orchestration --------------------------------------

def _randomized_reply(messages):
    """Pure pseudo-random backend: output depends only on the messages."""
    rng = random.Random(zlib.crc32(
        "\x1e".join(m.content for m in messages).encode("utf-8")))
    system = messages[0].content
    if system == prompts.asset_text("student_persona"):
        return "\n".join(f"Question {i}?" for i in range(rng.randint(0, 5)))
    if system == prompts.asset_text("integration"):
        source = json.loads(messages[1].content)
    else:
        source = json.loads(
            [m for m in messages if m.role == "user"][-1].content)
    words = ["plain", "simple", "short", "clear", "easy"]
    return json.dumps([f"{rng.choice(words)} take: {s}" for s in source])


def test_orchestration_offline_mock_runs(caplog):
    started = time.monotonic()
    corpus = synthetic_corpus(n_questions=25, pmids_per_question=5,
                              total_samples=130, seed=41)
    split = split_corpus(corpus, train_ratio=0.8, seed=7)
    assert len(split.train_pmids) == 100
    lengths = {f"{a.question_id}/{a.pmid}": len(a.source_sentences)
               for a in corpus.abstracts}

    for strategy in ("baseline", "two_agents", "finetuned"):
        gateway = ChatGateway(MockBackend(_randomized_reply))
        run = run_strategy(corpus, split, "train", strategy, "mock-model",
                           gateway, rounds=1, max_repairs=2)
        assert len(run.results) == 100
        for result in run.results:
            assert len(result.adapted_sentences) == lengths[result.sample_id]
        if strategy == "two_agents":
            assert len(run.threads) == 100
            for thread in run.threads:
                assert [s.stage for s in thread.stages] == \
                    ["draft", "questions", "revision"]

    sample = next(a for a in corpus.abstracts if a.pmid in split.train_pmids)

    # scripted over-long critic: truncated to 5 questions, with a warning
    def chatty(messages):
        if messages[0].content == prompts.asset_text("student_persona"):
            return "\n".join(f"Question {i}?" for i in range(1, 8))
        return _randomized_reply(messages)

    with caplog.at_level(logging.WARNING):
        _, thread = adapt_two_agents(sample, "mock-model",
                                     ChatGateway(MockBackend(chatty)))
    assert "truncating" in caplog.text
    revision_ask = thread.stages[2].messages[-2]
    assert len(revision_ask.content.splitlines()) == 5

    # scripted malformed-then-valid reply: one repair, then success
    reminder = prompts.asset_text("repair_reminder")

    def flaky(messages):
        if any(m.role == "user" and m.content == reminder for m in messages):
            return json.dumps(list(sample.source_sentences))
        return "Here is prose, not a JSON list."

    repaired = adapt_baseline(sample, "mock-model",
                              ChatGateway(MockBackend(flaky)))
    assert repaired.retry_count == 1
    assert time.monotonic() - started < ORCHESTRATION_RUNTIME_LIMIT


# --- criterion: fine-tune export contract ----------------------------------

def test_ft_export_round_trip_and_job_defaults(tmp_path):
    corpus = synthetic_corpus(n_questions=6, pmids_per_question=4,
                              total_samples=30, seed=3)
    split = split_corpus(corpus, train_ratio=0.8, seed=3)
    out = tmp_path / "train.jsonl"
    result = export_finetune_jsonl(corpus, split, "train", out)
    assert result.record_count > 0
    assert validate_finetune_jsonl(out) == result.record_count

    system_pin = prompts.pinned_checksums()["system"]
    with open(out, encoding="utf-8") as f:
        for line in f:
            record = json.loads(line)
            roles = [m["role"] for m in record["messages"]]
            assert roles == ["system", "user", "assistant"]
            digest = hashlib.sha256(
                record["messages"][0]["content"].encode("utf-8")).hexdigest()
            assert digest == system_pin
            assert isinstance(json.loads(record["messages"][1]["content"]), list)
            assert isinstance(json.loads(record["messages"][2]["content"]), list)

    again = tmp_path / "again.jsonl"
    export_finetune_jsonl(corpus, split, "train", again)
    assert again.read_bytes() == out.read_bytes()

    payload = build_finetune_job(FinetuneConfig(training_file=out))
    assert payload["hyperparameters"]["n_epochs"] == 3
    assert payload["hyperparameters"]["batch_size"] == 1
    assert payload["hyperparameters"]["learning_rate_multiplier"] == 2.0
    assert payload["seed"] == 741667963


# --- criterion: evaluation arithmetic --------------------------------------

def test_evaluation_arithmetic_likert_and_trec():
    # Consistency check: engineered ratings hit the reference dimension
    # means, and their total aggregates to 16.73 with no tolerance
    fives = {"simplicity": 8, "accuracy": 20, "completeness": 42, "brevity": 3}
    ratings = [
        LikertRating(rater_id=f"r{i}", sample_id="s", system_id_hidden="x",
                     **{dim: 5 if i < fives[dim] else 4
                        for dim in ("simplicity", "accuracy",
                                    "completeness", "brevity")})
        for i in range(100)
    ]
    summary = aggregate_likert(ratings)
    assert (summary.dimensions["simplicity"].mean,
            summary.dimensions["accuracy"].mean,
            summary.dimensions["completeness"].mean,
            summary.dimensions["brevity"].mean) == (4.08, 4.20, 4.42, 4.03)
    assert summary.total_score.mean == 16.73

    for value, expected in ((-1, 0.0), (0, 0.5), (1, 1.0)):
        score = trec_score([TrecSentenceRating("s", i, category, value)
                            for category in TREC_CATEGORIES
                            for i in range(3)])
        assert all(v == expected for v in score.category_scores.values())
        assert score.final_avg == expected


@settings(max_examples=50, deadline=None)
@given(
    values=st.lists(
        st.tuples(st.sampled_from(TREC_CATEGORIES),
                  st.sampled_from([-1, 0, 1])),
        min_size=4, max_size=24).filter(
            lambda vs: {c for c, _ in vs} == set(TREC_CATEGORIES)),
    bump=st.integers(min_value=0, max_value=23),
)
def test_evaluation_trec_monotonicity_property(values, bump):
    bump %= len(values)
    category, value = values[bump]
    if value == 1:
        return
    ratings = [TrecSentenceRating("s", i, c, v)
               for i, (c, v) in enumerate(values)]
    raised = list(ratings)
    raised[bump] = TrecSentenceRating("s", bump, category, value + 1)
    before, after = trec_score(ratings), trec_score(raised)
    assert after.final_avg >= before.final_avg - 1e-12
    for c in TREC_CATEGORIES:
        assert after.category_scores[c] >= before.category_scores[c] - 1e-12


# --- criterion: adaptation layer rests on prompt fidelity ------------------

def test_adaptation_prompt_fidelity_hashes():
    """Live model quality is out of desk-scale scope; what is pinned instead
    is that every outbound prompt carries the canonical asset text."""
    corpus = synthetic_corpus(n_questions=2, pmids_per_question=2,
                              total_samples=5, seed=5)
    sample = corpus.abstracts[0]
    pins = prompts.pinned_checksums()
    seen = []

    def recording(messages):
        seen.append(messages)
        return _randomized_reply(messages)

    adapt_two_agents(sample, "mock-model",
                     ChatGateway(MockBackend(recording)), rounds=1)
    draft_messages = seen[0]
    assert hashlib.sha256(draft_messages[0].content.encode()).hexdigest() \
        == pins["system"]
    rendered = draft_messages[1].content
    assert prompts.asset_text("guidelines") in rendered
    assert rendered == prompts.render_baseline_prompt()
    critic_messages = seen[1]
    assert hashlib.sha256(critic_messages[0].content.encode()).hexdigest() \
        == pins["student_persona"]
    revision_messages = seen[2]
    assert hashlib.sha256(revision_messages[0].content.encode()).hexdigest() \
        == pins["integration"]
