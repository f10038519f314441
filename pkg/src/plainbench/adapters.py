"""Adaptation strategies over the gateway.

Three strategies produce one adapted sentence list per abstract:

- baseline: system prompt + task prompt (guidelines injected) + sentence list
- two_agents: baseline draft, then per round a student-persona critic asks
  up to five questions and an integration call revises the draft
- finetuned: system prompt + sentence list only (the tuned model carries the
  task knowledge)

Replies must be a JSON array of strings of the same length as the source;
anything else triggers a bounded repair loop that re-asks with a corrective
reminder appended to the conversation.
"""

from __future__ import annotations

import json
import logging
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

from . import prompts
from .corpus import AbstractSample, Corpus, SplitAssignment
from .finetune import serialize_sentences
from .gateway import ChatGateway, ChatMessage, ChatRequest

log = logging.getLogger(__name__)

STRATEGIES = ("baseline", "two_agents", "finetuned")

DEFAULT_REPAIR_RETRIES = 2
DEFAULT_ROUNDS = 1
MAX_CRITIC_QUESTIONS = 5

_STAGE_ORDER = ("draft", "questions", "revision")


class AdaptationParseError(ValueError):
    """Reply was not a usable adaptation list; repairable by re-asking."""


class AdaptationRepairError(RuntimeError):
    """Repair retries exhausted without a valid adaptation list."""


@dataclass(frozen=True)
class AdaptationResult:
    sample_id: str          # "<question_id>/<pmid>" — one result per abstract
    strategy: str
    model: str
    adapted_sentences: tuple[str, ...]
    transcript_ref: str
    retry_count: int        # repair re-asks, not transport retries

    def __post_init__(self):
        if self.strategy not in STRATEGIES:
            raise ValueError(f"unknown strategy {self.strategy!r}")
        if self.retry_count < 0:
            raise ValueError("retry_count must be >= 0")


@dataclass(frozen=True)
class ThreadStage:
    stage: str
    messages: tuple[ChatMessage, ...]  # outbound messages + assistant reply

    def __post_init__(self):
        if self.stage not in _STAGE_ORDER:
            raise ValueError(f"unknown stage {self.stage!r}")


@dataclass(frozen=True)
class AgentThread:
    thread_id: str
    stages: tuple[ThreadStage, ...]

    def __post_init__(self):
        names = [s.stage for s in self.stages]
        if names and not _valid_stage_sequence(names):
            raise ValueError(f"malformed stage sequence: {names}")


def _valid_stage_sequence(names: list[str]) -> bool:
    """draft alone (rounds=0), or (draft questions revision)^rounds."""
    if names == ["draft"]:
        return True
    if len(names) % 3 != 0:
        return False
    return all(names[i:i + 3] == list(_STAGE_ORDER)
               for i in range(0, len(names), 3))


def abstract_run_id(sample: AbstractSample) -> str:
    return f"{sample.question_id}/{sample.pmid}"


# --- reply parsing ---------------------------------------------------------

_FENCE = re.compile(r"```[a-zA-Z]*\n?(.*?)```", re.DOTALL)


def parse_adaptation_list(raw: str, expected_len: int) -> list[str]:
    """Strict parse of a JSON array of strings, tolerating code fences and
    surrounding prose.  Length must equal expected_len; "" entries pass.
    """
    if expected_len < 1:
        raise ValueError("expected_len must be positive")
    candidates = [raw.strip()]
    for fenced in _FENCE.findall(raw):
        candidates.append(fenced.strip())
    for text in list(candidates):
        start, end = text.find("["), text.rfind("]")
        if start != -1 and end > start:
            candidates.append(text[start:end + 1])
    parsed = None
    for text in candidates:
        if not text:
            continue
        try:
            value = json.loads(text)
        except json.JSONDecodeError:
            continue
        if isinstance(value, list) and all(isinstance(s, str) for s in value):
            parsed = value
            break
    if parsed is None:
        raise AdaptationParseError("reply does not contain a JSON array of strings")
    if len(parsed) != expected_len:
        raise AdaptationParseError(
            f"expected {expected_len} adaptations, got {len(parsed)}")
    return parsed


def parse_questions(raw: str) -> list[str]:
    """Line-wise question extraction: strip bullets/numbering, keep non-empty
    lines, truncate to the 5-question contract with a warning.
    """
    questions = []
    for line in raw.splitlines():
        text = re.sub(r"^\s*(?:[-*•]|\d+[.)])?\s*", "", line).strip()
        if text:
            questions.append(text)
    if len(questions) > MAX_CRITIC_QUESTIONS:
        log.warning("critic produced %d questions; truncating to %d",
                    len(questions), MAX_CRITIC_QUESTIONS)
        questions = questions[:MAX_CRITIC_QUESTIONS]
    return questions


# --- strategy flows --------------------------------------------------------

def _ask_for_list(gateway: ChatGateway, model: str,
                  messages: list[ChatMessage], expected_len: int,
                  max_repairs: int) -> tuple[list[str], int, list[ChatMessage]]:
    """Chat until the reply parses as a valid adaptation list.

    Returns (sentences, repair_count, full_conversation_with_reply).  Each
    repair appends the failed reply and a corrective reminder, so the mock
    backend stays a pure function of the message list.
    """
    conversation = list(messages)
    reminder = prompts.asset_text("repair_reminder")
    for attempt in range(max_repairs + 1):
        response = gateway.chat(ChatRequest(model=model,
                                            messages=tuple(conversation)))
        try:
            sentences = parse_adaptation_list(response.content, expected_len)
        except AdaptationParseError as exc:
            if attempt == max_repairs:
                raise AdaptationRepairError(
                    f"no valid adaptation list after {max_repairs} repair "
                    f"attempt(s): {exc}") from exc
            conversation.append(ChatMessage("assistant", response.content))
            conversation.append(ChatMessage("user", reminder))
            continue
        conversation.append(ChatMessage("assistant", response.content))
        return sentences, attempt, conversation
    raise AssertionError("unreachable")


def _baseline_messages(sample: AbstractSample) -> list[ChatMessage]:
    return [
        ChatMessage("system", prompts.asset_text("system")),
        ChatMessage("user", prompts.render_baseline_prompt()),
        ChatMessage("user", serialize_sentences(sample.source_sentences)),
    ]


def adapt_baseline(sample: AbstractSample, model: str, gateway: ChatGateway,
                   max_repairs: int = DEFAULT_REPAIR_RETRIES) -> AdaptationResult:
    sentences, repairs, _ = _ask_for_list(
        gateway, model, _baseline_messages(sample),
        len(sample.source_sentences), max_repairs)
    return AdaptationResult(
        sample_id=abstract_run_id(sample),
        strategy="baseline",
        model=model,
        adapted_sentences=tuple(sentences),
        transcript_ref=f"baseline:{abstract_run_id(sample)}",
        retry_count=repairs,
    )


def adapt_finetuned(sample: AbstractSample, ft_model: str, gateway: ChatGateway,
                    max_repairs: int = DEFAULT_REPAIR_RETRIES) -> AdaptationResult:
    """System prompt + sentence list only; no task prompt, no guidelines."""
    messages = [
        ChatMessage("system", prompts.asset_text("system")),
        ChatMessage("user", serialize_sentences(sample.source_sentences)),
    ]
    sentences, repairs, _ = _ask_for_list(
        gateway, ft_model, messages, len(sample.source_sentences), max_repairs)
    return AdaptationResult(
        sample_id=abstract_run_id(sample),
        strategy="finetuned",
        model=ft_model,
        adapted_sentences=tuple(sentences),
        transcript_ref=f"finetuned:{abstract_run_id(sample)}",
        retry_count=repairs,
    )


def adapt_two_agents(sample: AbstractSample, model: str, gateway: ChatGateway,
                     rounds: int = DEFAULT_ROUNDS,
                     max_repairs: int = DEFAULT_REPAIR_RETRIES,
                     ) -> tuple[AdaptationResult, AgentThread]:
    """Draft, then per round: critic questions and an integration revision.

    Round 1 drafts via the baseline flow; later rounds treat the previous
    revision as their draft (no extra model call), so refinement compounds.
    rounds=0 degenerates to the baseline strategy.
    """
    if rounds < 0:
        raise ValueError("rounds must be >= 0")
    expected_len = len(sample.source_sentences)
    total_repairs = 0
    stages: list[ThreadStage] = []

    draft, repairs, draft_conv = _ask_for_list(
        gateway, model, _baseline_messages(sample), expected_len, max_repairs)
    total_repairs += repairs
    stages.append(ThreadStage("draft", tuple(draft_conv)))
    current = draft

    for round_no in range(rounds):
        if round_no > 0:
            # carried-forward draft: the previous revision under review
            stages.append(ThreadStage("draft", (
                ChatMessage("assistant", serialize_sentences(current)),)))
        critic_messages = [
            ChatMessage("system", prompts.asset_text("student_persona")),
            ChatMessage("user", serialize_sentences(current)),
        ]
        critic_reply = gateway.chat(ChatRequest(model=model,
                                                messages=tuple(critic_messages)))
        questions = parse_questions(critic_reply.content)
        stages.append(ThreadStage("questions", tuple(
            critic_messages + [ChatMessage("assistant", critic_reply.content)])))

        revision_messages = [
            ChatMessage("system", prompts.asset_text("integration")),
            ChatMessage("user", serialize_sentences(sample.source_sentences)),
            ChatMessage("assistant", serialize_sentences(current)),
            ChatMessage("user", "\n".join(questions) if questions
                        else "No questions; finalize the adaptations."),
        ]
        revised, repairs, revision_conv = _ask_for_list(
            gateway, model, revision_messages, expected_len, max_repairs)
        total_repairs += repairs
        stages.append(ThreadStage("revision", tuple(revision_conv)))
        current = revised

    result = AdaptationResult(
        sample_id=abstract_run_id(sample),
        strategy="two_agents",
        model=model,
        adapted_sentences=tuple(current),
        transcript_ref=f"two_agents:{abstract_run_id(sample)}",
        retry_count=total_repairs,
    )
    thread = AgentThread(thread_id=abstract_run_id(sample), stages=tuple(stages))
    return result, thread


# --- run orchestration -----------------------------------------------------

@dataclass(frozen=True)
class AdaptationRun:
    strategy: str
    model: str
    side: str
    results: tuple[AdaptationResult, ...]
    threads: tuple[AgentThread, ...] = field(default=())


def run_strategy(corpus: Corpus, split: SplitAssignment, side: str,
                 strategy: str, model: str, gateway: ChatGateway,
                 rounds: int = DEFAULT_ROUNDS,
                 max_repairs: int = DEFAULT_REPAIR_RETRIES,
                 max_workers: int = 4) -> AdaptationRun:
    """Adapt every abstract on one split side; workers run concurrently and
    results merge deterministically by sample id.
    """
    if strategy not in STRATEGIES:
        raise ValueError(f"unknown strategy {strategy!r}")
    if side == "train":
        pmids = split.train_pmids
    elif side == "validation":
        pmids = split.validation_pmids
    else:
        raise ValueError(f"side must be train or validation, got {side!r}")
    samples = [a for a in corpus.abstracts if a.pmid in pmids]
    if not samples:
        raise ValueError(f"no abstracts on side {side!r}")

    def work(sample: AbstractSample):
        if strategy == "baseline":
            return adapt_baseline(sample, model, gateway, max_repairs), None
        if strategy == "finetuned":
            return adapt_finetuned(sample, model, gateway, max_repairs), None
        return adapt_two_agents(sample, model, gateway, rounds, max_repairs)

    with ThreadPoolExecutor(max_workers=max_workers) as pool:
        outcomes = list(pool.map(work, samples))
    results = sorted((r for r, _ in outcomes), key=lambda r: r.sample_id)
    threads = sorted((t for _, t in outcomes if t is not None),
                     key=lambda t: t.thread_id)
    return AdaptationRun(strategy=strategy, model=model, side=side,
                         results=tuple(results), threads=tuple(threads))


def write_run_jsonl(run: AdaptationRun, path: str | Path) -> None:
    """One AdaptationResult per line, in sample-id order."""
    with open(path, "w", encoding="utf-8") as f:
        for r in run.results:
            f.write(json.dumps({
                "sample_id": r.sample_id,
                "strategy": r.strategy,
                "model": r.model,
                "adapted_sentences": list(r.adapted_sentences),
                "transcript_ref": r.transcript_ref,
                "retry_count": r.retry_count,
            }, ensure_ascii=False) + "\n")


def run_manifest(run: AdaptationRun, config: dict | None = None) -> dict:
    """Reproducibility record for one run; everything but created_at is a
    pure function of the run and config.
    """
    return {
        "strategy": run.strategy,
        "model": run.model,
        "side": run.side,
        "sample_count": len(run.results),
        "total_repairs": sum(r.retry_count for r in run.results),
        "prompt_assets": dict(prompts.pinned_checksums()),
        "config": dict(config or {}),
        "created_at": datetime.now(timezone.utc).isoformat(),
    }


def load_run_jsonl(path: str | Path) -> list[AdaptationResult]:
    results = []
    with open(path, encoding="utf-8") as f:
        for line in f:
            if not line.strip():
                continue
            row = json.loads(line)
            results.append(AdaptationResult(
                sample_id=row["sample_id"],
                strategy=row["strategy"],
                model=row["model"],
                adapted_sentences=tuple(row["adapted_sentences"]),
                transcript_ref=row["transcript_ref"],
                retry_count=row["retry_count"],
            ))
    return results
