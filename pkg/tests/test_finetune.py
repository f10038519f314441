"""Fine-tune export format, determinism, and job payloads."""

import json

import httpx
import pytest

from plainbench import prompts
from plainbench.corpus import load_corpus, split_corpus, synthetic_corpus
from plainbench.finetune import (
    FinetuneConfig,
    FinetuneOutcome,
    build_finetune_job,
    export_finetune_jsonl,
    parse_finetune_job,
    read_job_status,
    serialize_sentences,
    submit_finetune_job,
    validate_finetune_jsonl,
)
from plainbench.gateway import AuthenticationError
from tests.conftest import DATA_DIR


@pytest.fixture(scope="module")
def small_split():
    corpus = load_corpus(DATA_DIR / "corpus_small.json")
    # both pmids land in train at ratio 0.8 on a 2-pmid group
    return corpus, split_corpus(corpus, 0.8, seed=3)


def test_export_structure(tmp_path, small_split):
    corpus, split = small_split
    out = tmp_path / "train.jsonl"
    result = export_finetune_jsonl(corpus, split, "train", out)
    assert result.record_count == 2
    assert result.skipped_unaligned == 1
    lines = [json.loads(l) for l in out.read_text().splitlines()]
    assert len(lines) == 2
    for line in lines:
        roles = [m["role"] for m in line["messages"]]
        assert roles == ["system", "user", "assistant"]
        assert line["messages"][0]["content"] == prompts.asset_text("system")
        source = json.loads(line["messages"][1]["content"])
        gold = json.loads(line["messages"][2]["content"])
        assert isinstance(source, list) and isinstance(gold, list)
        assert len(source) == len(gold)


def test_export_round_trip_matches_corpus(tmp_path, small_split):
    corpus, split = small_split
    out = tmp_path / "train.jsonl"
    export_finetune_jsonl(corpus, split, "train", out)
    first = json.loads(out.read_text().splitlines()[0])
    sample = corpus.get("q1", "111")
    assert json.loads(first["messages"][1]["content"]) == \
        list(sample.source_sentences)
    assert json.loads(first["messages"][2]["content"]) == \
        list(sample.adaptations[0].target_sentences)


def test_export_byte_identical(tmp_path, small_split):
    corpus, split = small_split
    a, b = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
    export_finetune_jsonl(corpus, split, "train", a)
    export_finetune_jsonl(corpus, split, "train", b)
    assert a.read_bytes() == b.read_bytes()


def test_export_ordering_is_stable(tmp_path):
    corpus = synthetic_corpus(n_questions=3, pmids_per_question=4,
                              total_samples=15, seed=5)
    split = split_corpus(corpus, 0.5, seed=1)
    out = tmp_path / "train.jsonl"
    export_finetune_jsonl(corpus, split, "train", out)
    keys = []
    for line in out.read_text().splitlines():
        source = json.loads(json.loads(line)["messages"][1]["content"])
        keys.append(tuple(source))
    # stable ordering is by (question_id, pmid, adaptation_id); spot-check
    # determinism against a second pass over a reloaded corpus
    out2 = tmp_path / "again.jsonl"
    export_finetune_jsonl(corpus, split, "train", out2)
    assert out.read_bytes() == out2.read_bytes()


def test_export_counts_match_split(tmp_path):
    corpus = synthetic_corpus(n_questions=5, pmids_per_question=10,
                              total_samples=60, seed=2)
    split = split_corpus(corpus, 0.8, seed=9)
    train = export_finetune_jsonl(corpus, split, "train", tmp_path / "tr.jsonl")
    val = export_finetune_jsonl(corpus, split, "validation", tmp_path / "va.jsonl")
    assert train.record_count == len(split.train_sample_ids)
    assert val.record_count == len(split.validation_sample_ids)


def test_export_validation_side_empty_errors(tmp_path, small_split):
    corpus, split = small_split
    with pytest.raises(ValueError, match="no eligible"):
        export_finetune_jsonl(corpus, split, "validation", tmp_path / "v.jsonl")


def test_export_bad_side(tmp_path, small_split):
    corpus, split = small_split
    with pytest.raises(ValueError, match="side"):
        export_finetune_jsonl(corpus, split, "test", tmp_path / "x.jsonl")


def test_serialize_sentences_shape():
    assert serialize_sentences(["A", ""]) == '["A", ""]'


# --- job config ------------------------------------------------------------

def _training_file(tmp_path):
    path = tmp_path / "train.jsonl"
    record = {"messages": [
        {"role": "system", "content": "s"},
        {"role": "user", "content": "[\"x\"]"},
        {"role": "assistant", "content": "[\"y\"]"},
    ]}
    path.write_text(json.dumps(record) + "\n")
    return path


def test_default_config_payload(tmp_path):
    config = FinetuneConfig(training_file=_training_file(tmp_path))
    payload = build_finetune_job(config)
    assert payload["hyperparameters"] == {
        "n_epochs": 3, "batch_size": 1, "learning_rate_multiplier": 2.0}
    assert payload["seed"] == 741667963
    assert "validation_file" not in payload


def test_payload_round_trip(tmp_path):
    config = FinetuneConfig(epochs=5, batch_size=2, lr_multiplier=0.5,
                            random_seed=11,
                            training_file=_training_file(tmp_path),
                            validation_file=tmp_path / "val.jsonl")
    assert parse_finetune_job(build_finetune_job(config)) == config


def test_invalid_hyperparameters_rejected():
    with pytest.raises(ValueError):
        FinetuneConfig(epochs=0)
    with pytest.raises(ValueError):
        FinetuneConfig(batch_size=0)
    with pytest.raises(ValueError):
        FinetuneConfig(lr_multiplier=0)


def test_missing_training_file(tmp_path):
    with pytest.raises(FileNotFoundError):
        build_finetune_job(FinetuneConfig(training_file=tmp_path / "nope.jsonl"))
    with pytest.raises(ValueError, match="training_file"):
        build_finetune_job(FinetuneConfig())


def test_invalid_jsonl_names_line(tmp_path):
    path = tmp_path / "bad.jsonl"
    path.write_text('{"messages": [{"role": "system", "content": "ok"}]}\n'
                    'not json\n')
    with pytest.raises(ValueError, match=":2:"):
        validate_finetune_jsonl(path)


def test_jsonl_missing_messages(tmp_path):
    path = tmp_path / "bad.jsonl"
    path.write_text('{"foo": 1}\n')
    with pytest.raises(ValueError, match="messages"):
        validate_finetune_jsonl(path)


def test_outcome_rejects_negative_loss():
    FinetuneOutcome(job_id="j", training_loss=0.5)
    with pytest.raises(ValueError):
        FinetuneOutcome(job_id="j", training_loss=-0.1)


def test_submit_and_status(tmp_path, monkeypatch):
    monkeypatch.setenv("PLAINBENCH_API_KEY", "k")
    config = FinetuneConfig(training_file=_training_file(tmp_path))
    payload = build_finetune_job(config)

    def handler(request):
        if request.method == "POST":
            assert json.loads(request.content)["seed"] == 741667963
            return httpx.Response(200, json={"id": "ftjob-1"})
        return httpx.Response(200, json={"id": "ftjob-1", "status": "running"})

    client = httpx.Client(transport=httpx.MockTransport(handler))
    job_id = submit_finetune_job(payload, "https://llm.example/v1", client=client)
    assert job_id == "ftjob-1"
    status = read_job_status(job_id, "https://llm.example/v1", client=client)
    assert status["status"] == "running"


def test_submit_without_credential(tmp_path, monkeypatch):
    monkeypatch.delenv("PLAINBENCH_API_KEY", raising=False)
    with pytest.raises(AuthenticationError):
        submit_finetune_job({}, "https://llm.example/v1")
