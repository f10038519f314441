"""Fine-tune dataset export and job configuration.

The export format is hosted-provider JSONL: one line per (abstract,
adaptation) sample, each line {"messages": [system, user, assistant]} where
the system message is the canonical system prompt, the user message is the
JSON array of source sentences and the assistant message the JSON array of
gold adapted sentences.
"""

from __future__ import annotations

import json
import logging
import os
from dataclasses import dataclass
from pathlib import Path

import httpx

from . import prompts
from .corpus import Corpus, SplitAssignment
from .gateway import API_KEY_ENV, AuthenticationError, GatewayError

log = logging.getLogger(__name__)

SIDES = ("train", "validation")

FT_DEFAULT_EPOCHS = 3
FT_DEFAULT_BATCH_SIZE = 1
FT_DEFAULT_LR_MULTIPLIER = 2.0
FT_DEFAULT_SEED = 741667963


def serialize_sentences(sentences) -> str:
    """The JSON-array-of-strings shape the prompts describe."""
    return json.dumps(list(sentences), ensure_ascii=False)


@dataclass(frozen=True)
class ExportResult:
    path: Path
    record_count: int
    skipped_unaligned: int


@dataclass(frozen=True)
class FinetuneConfig:
    epochs: int = FT_DEFAULT_EPOCHS
    batch_size: int = FT_DEFAULT_BATCH_SIZE
    lr_multiplier: float = FT_DEFAULT_LR_MULTIPLIER
    random_seed: int = FT_DEFAULT_SEED
    training_file: Path | None = None
    validation_file: Path | None = None
    model: str = "gpt-4o-mini"

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError("epochs must be positive")
        if self.batch_size < 1:
            raise ValueError("batch_size must be positive")
        if self.lr_multiplier <= 0:
            raise ValueError("lr_multiplier must be positive")
        if self.random_seed < 0:
            raise ValueError("random_seed must be non-negative")


@dataclass(frozen=True)
class FinetuneOutcome:
    job_id: str
    training_loss: float | None = None
    full_validation_loss: float | None = None

    def __post_init__(self):
        for name in ("training_loss", "full_validation_loss"):
            value = getattr(self, name)
            if value is not None and value < 0:
                raise ValueError(f"{name} must be >= 0 when present")


def export_finetune_jsonl(corpus: Corpus, split: SplitAssignment, side: str,
                          out: str | Path) -> ExportResult:
    """Write the chat-format JSONL for one split side.

    Unaligned adaptations are skipped (with a warning count); ordering is
    stable by (question_id, pmid, adaptation_id) so re-export is
    byte-identical.
    """
    if side not in SIDES:
        raise ValueError(f"side must be one of {SIDES}, got {side!r}")
    pmids = split.train_pmids if side == "train" else split.validation_pmids
    system_text = prompts.asset_text("system")
    rows = []
    skipped = 0
    for sample in sorted(corpus.abstracts, key=lambda a: (a.question_id, a.pmid)):
        if sample.pmid not in pmids:
            continue
        for ref in sorted(sample.adaptations, key=lambda r: r.adaptation_id):
            if not ref.aligned:
                skipped += 1
                continue
            rows.append({"messages": [
                {"role": "system", "content": system_text},
                {"role": "user",
                 "content": serialize_sentences(sample.source_sentences)},
                {"role": "assistant",
                 "content": serialize_sentences(ref.target_sentences)},
            ]})
    if not rows:
        raise ValueError(f"no eligible aligned samples on side {side!r}")
    if skipped:
        log.warning("skipped %d unaligned adaptation(s) during %s export",
                    skipped, side)
    out = Path(out)
    with open(out, "w", encoding="utf-8") as f:
        for row in rows:
            f.write(json.dumps(row, ensure_ascii=False) + "\n")
    return ExportResult(path=out, record_count=len(rows), skipped_unaligned=skipped)


def validate_finetune_jsonl(path: str | Path) -> int:
    """Check every line parses as a chat record; returns the line count."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"training file not found: {path}")
    count = 0
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValueError(f"{path}:{lineno}: invalid JSON: {exc}") from exc
            messages = record.get("messages") if isinstance(record, dict) else None
            if not isinstance(messages, list) or not messages:
                raise ValueError(f"{path}:{lineno}: missing messages list")
            for m in messages:
                if (not isinstance(m, dict) or not isinstance(m.get("role"), str)
                        or not isinstance(m.get("content"), str)):
                    raise ValueError(
                        f"{path}:{lineno}: malformed message entry")
            count += 1
    if count == 0:
        raise ValueError(f"{path}: no records")
    return count


def build_finetune_job(config: FinetuneConfig) -> dict:
    """Provider job payload embedding the pinned hyperparameters."""
    if config.training_file is None:
        raise ValueError("config.training_file is required")
    validate_finetune_jsonl(config.training_file)
    payload = {
        "model": config.model,
        "training_file": str(config.training_file),
        "seed": config.random_seed,
        "hyperparameters": {
            "n_epochs": config.epochs,
            "batch_size": config.batch_size,
            "learning_rate_multiplier": config.lr_multiplier,
        },
    }
    if config.validation_file is not None:
        payload["validation_file"] = str(config.validation_file)
    return payload


def parse_finetune_job(payload: dict) -> FinetuneConfig:
    """Inverse of build_finetune_job (for round-trip verification)."""
    hp = payload["hyperparameters"]
    return FinetuneConfig(
        epochs=hp["n_epochs"],
        batch_size=hp["batch_size"],
        lr_multiplier=hp["learning_rate_multiplier"],
        random_seed=payload["seed"],
        training_file=Path(payload["training_file"]),
        validation_file=(Path(payload["validation_file"])
                         if "validation_file" in payload else None),
        model=payload["model"],
    )


def _auth_header(api_key_env: str) -> dict:
    api_key = os.environ.get(api_key_env)
    if not api_key:
        raise AuthenticationError(
            f"no credential in environment variable {api_key_env}")
    return {"Authorization": f"Bearer {api_key}"}


def submit_finetune_job(payload: dict, base_url: str,
                        api_key_env: str = API_KEY_ENV,
                        client: httpx.Client | None = None) -> str:
    """Thin submission call; returns the provider job id."""
    client = client or httpx.Client()
    resp = client.post(f"{base_url.rstrip('/')}/fine_tuning/jobs",
                       json=payload, headers=_auth_header(api_key_env))
    if resp.status_code in (401, 403):
        raise AuthenticationError(f"provider rejected credentials "
                                  f"(HTTP {resp.status_code})")
    if resp.status_code != 200:
        raise GatewayError(f"job submission failed: HTTP {resp.status_code}")
    job_id = resp.json().get("id")
    if not job_id:
        raise GatewayError("provider response carries no job id")
    return job_id


def read_job_status(job_id: str, base_url: str,
                    api_key_env: str = API_KEY_ENV,
                    client: httpx.Client | None = None) -> dict:
    """Single status read; no polling loop."""
    client = client or httpx.Client()
    resp = client.get(f"{base_url.rstrip('/')}/fine_tuning/jobs/{job_id}",
                      headers=_auth_header(api_key_env))
    if resp.status_code != 200:
        raise GatewayError(f"status read failed: HTTP {resp.status_code}")
    return resp.json()
