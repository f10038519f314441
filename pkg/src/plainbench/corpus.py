"""Sentence-aligned adaptation corpus: loading, validation and grouped splits.

Expected dataset file shape (JSON):

    {
      "<question_id>": {
        "<pmid>": {
          "<source_key>": ["source sentence", ...],
          "<adaptation_id>": ["adapted sentence", ...],
          ...
        },
        ...
      },
      ...
    }

The source key defaults to "abstract"; every other key whose value is a list
of strings is treated as one gold adaptation of that abstract.  An empty
string inside an adaptation marks a deliberately omitted sentence.  An
adaptation whose length differs from the source is kept but flagged
unaligned.
"""

from __future__ import annotations

import json
import logging
import random
from dataclasses import dataclass, field
from pathlib import Path

log = logging.getLogger(__name__)

DEFAULT_SOURCE_KEY = "abstract"


class CorpusFormatError(ValueError):
    """The dataset file does not match the documented schema."""


@dataclass(frozen=True)
class AdaptationReference:
    adaptation_id: str
    target_sentences: tuple[str, ...]
    aligned: bool


@dataclass(frozen=True)
class AbstractSample:
    pmid: str
    question_id: str
    source_sentences: tuple[str, ...]
    adaptations: tuple[AdaptationReference, ...]

    def sample_ids(self) -> list[str]:
        return [make_sample_id(self.question_id, self.pmid, a.adaptation_id)
                for a in self.adaptations]


def make_sample_id(question_id: str, pmid: str, adaptation_id: str) -> str:
    return f"{question_id}/{pmid}/{adaptation_id}"


def parse_sample_id(sample_id: str) -> tuple[str, str, str]:
    parts = sample_id.split("/")
    if len(parts) != 3:
        raise ValueError(f"malformed sample id: {sample_id!r}")
    return parts[0], parts[1], parts[2]


@dataclass(frozen=True)
class Corpus:
    abstracts: tuple[AbstractSample, ...]
    source_key: str = DEFAULT_SOURCE_KEY

    def __len__(self) -> int:
        return len(self.abstracts)

    @property
    def sample_count(self) -> int:
        return sum(len(a.adaptations) for a in self.abstracts)

    def by_question(self) -> dict[str, list[AbstractSample]]:
        grouped: dict[str, list[AbstractSample]] = {}
        for a in self.abstracts:
            grouped.setdefault(a.question_id, []).append(a)
        return grouped

    def get(self, question_id: str, pmid: str) -> AbstractSample:
        for a in self.abstracts:
            if a.question_id == question_id and a.pmid == pmid:
                return a
        raise KeyError(f"no abstract {question_id}/{pmid}")


@dataclass(frozen=True)
class AlignmentViolation:
    question_id: str
    pmid: str
    adaptation_id: str
    source_length: int
    target_length: int


@dataclass(frozen=True)
class AlignmentReport:
    total_adaptations: int
    violations: tuple[AlignmentViolation, ...]

    @property
    def violation_count(self) -> int:
        return len(self.violations)


@dataclass(frozen=True)
class SplitAssignment:
    seed: int
    train_ratio: float
    train_pmids: frozenset[str]
    validation_pmids: frozenset[str]
    train_sample_ids: tuple[str, ...]
    validation_sample_ids: tuple[str, ...]
    question_assignment: dict[str, dict[str, list[str]]] = field(repr=False)

    def side_of(self, pmid: str) -> str:
        if pmid in self.train_pmids:
            return "train"
        if pmid in self.validation_pmids:
            return "validation"
        raise KeyError(f"pmid {pmid!r} not in this split")

    def to_manifest(self) -> dict:
        return {
            "seed": self.seed,
            "train_ratio": self.train_ratio,
            "train_pmid_count": len(self.train_pmids),
            "validation_pmid_count": len(self.validation_pmids),
            "train_sample_count": len(self.train_sample_ids),
            "validation_sample_count": len(self.validation_sample_ids),
            "question_assignment": self.question_assignment,
        }


def _reject_duplicate_keys(pairs):
    seen = set()
    for key, _ in pairs:
        if key in seen:
            raise CorpusFormatError(f"duplicate key {key!r} in dataset file")
        seen.add(key)
    return dict(pairs)


def _string_list(value) -> bool:
    return isinstance(value, list) and all(isinstance(s, str) for s in value)


def load_corpus(path: str | Path, source_key: str = DEFAULT_SOURCE_KEY) -> Corpus:
    """Load and normalize the dataset file.  See module docstring for shape."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"dataset file not found: {path}")
    with open(path, encoding="utf-8") as f:
        try:
            raw = json.load(f, object_pairs_hook=_reject_duplicate_keys)
        except json.JSONDecodeError as exc:
            raise CorpusFormatError(f"{path}: not valid JSON: {exc}") from exc
    return corpus_from_mapping(raw, source_key=source_key)


def corpus_from_mapping(raw, source_key: str = DEFAULT_SOURCE_KEY) -> Corpus:
    if not isinstance(raw, dict) or not raw:
        raise CorpusFormatError("dataset root must be a non-empty JSON object")
    abstracts: list[AbstractSample] = []
    seen_pmids: dict[str, str] = {}
    for question_id, group in raw.items():
        if not isinstance(group, dict) or not group:
            raise CorpusFormatError(
                f"question {question_id!r}: expected a non-empty object of pmids")
        for pmid, record in group.items():
            where = f"question {question_id!r}, pmid {pmid!r}"
            if pmid in seen_pmids:
                raise CorpusFormatError(
                    f"{where}: pmid already used by question {seen_pmids[pmid]!r}")
            seen_pmids[pmid] = question_id
            if not isinstance(record, dict):
                raise CorpusFormatError(f"{where}: expected an object")
            if source_key not in record:
                raise CorpusFormatError(f"{where}: missing source key {source_key!r}")
            source = record[source_key]
            if not _string_list(source) or not source:
                raise CorpusFormatError(
                    f"{where}: source must be a non-empty list of strings")
            if any(not s for s in source):
                raise CorpusFormatError(f"{where}: source sentences must be non-empty")
            adaptations = []
            for key, value in record.items():
                if key == source_key:
                    continue
                if not _string_list(value):
                    raise CorpusFormatError(
                        f"{where}: adaptation {key!r} must be a list of strings")
                aligned = len(value) == len(source)
                if not aligned:
                    log.warning("%s: adaptation %r has %d sentences against %d "
                                "source sentences; flagged unaligned",
                                where, key, len(value), len(source))
                adaptations.append(AdaptationReference(
                    adaptation_id=key,
                    target_sentences=tuple(value),
                    aligned=aligned,
                ))
            abstracts.append(AbstractSample(
                pmid=pmid,
                question_id=question_id,
                source_sentences=tuple(source),
                adaptations=tuple(adaptations),
            ))
    return Corpus(abstracts=tuple(abstracts), source_key=source_key)


def validate_alignment(corpus: Corpus) -> AlignmentReport:
    """List every adaptation whose length differs from its source."""
    violations = []
    total = 0
    for a in corpus.abstracts:
        for ref in a.adaptations:
            total += 1
            if len(ref.target_sentences) != len(a.source_sentences):
                violations.append(AlignmentViolation(
                    question_id=a.question_id,
                    pmid=a.pmid,
                    adaptation_id=ref.adaptation_id,
                    source_length=len(a.source_sentences),
                    target_length=len(ref.target_sentences),
                ))
    return AlignmentReport(total_adaptations=total, violations=tuple(violations))


def split_corpus(corpus: Corpus, train_ratio: float, seed: int) -> SplitAssignment:
    """Grouped split: within each question, shuffle pmids by seed and send
    the first round(train_ratio * group size) to train.  Samples follow
    their pmid, so no abstract leaks across the boundary.
    """
    if not 0.0 < train_ratio < 1.0:
        raise ValueError(f"train_ratio must be in (0, 1), got {train_ratio}")
    if not corpus.abstracts:
        raise ValueError("cannot split an empty corpus")
    rng = random.Random(seed)
    grouped = corpus.by_question()
    train_pmids: set[str] = set()
    validation_pmids: set[str] = set()
    question_assignment: dict[str, dict[str, list[str]]] = {}
    for question_id in sorted(grouped):
        pmids = sorted(a.pmid for a in grouped[question_id])
        if len(pmids) < 2:
            log.warning("question %r has %d pmid(s); whole group goes to train",
                        question_id, len(pmids))
            n_train = len(pmids)
        else:
            rng.shuffle(pmids)
            n_train = round(train_ratio * len(pmids))
        question_assignment[question_id] = {
            "train": sorted(pmids[:n_train]),
            "validation": sorted(pmids[n_train:]),
        }
        train_pmids.update(pmids[:n_train])
        validation_pmids.update(pmids[n_train:])
    train_sample_ids: list[str] = []
    validation_sample_ids: list[str] = []
    for a in sorted(corpus.abstracts, key=lambda s: (s.question_id, s.pmid)):
        bucket = train_sample_ids if a.pmid in train_pmids else validation_sample_ids
        bucket.extend(a.sample_ids())
    return SplitAssignment(
        seed=seed,
        train_ratio=train_ratio,
        train_pmids=frozenset(train_pmids),
        validation_pmids=frozenset(validation_pmids),
        train_sample_ids=tuple(train_sample_ids),
        validation_sample_ids=tuple(validation_sample_ids),
        question_assignment=question_assignment,
    )


def write_corpus_jsonl(corpus: Corpus, path: str | Path) -> None:
    """Normalized corpus as JSON-lines, one abstract per line."""
    with open(path, "w", encoding="utf-8") as f:
        for a in corpus.abstracts:
            f.write(json.dumps({
                "question_id": a.question_id,
                "pmid": a.pmid,
                "source_sentences": list(a.source_sentences),
                "adaptations": [
                    {
                        "adaptation_id": ref.adaptation_id,
                        "target_sentences": list(ref.target_sentences),
                        "aligned": ref.aligned,
                    }
                    for ref in a.adaptations
                ],
            }, ensure_ascii=False) + "\n")


def read_corpus_jsonl(path: str | Path,
                      source_key: str = DEFAULT_SOURCE_KEY) -> Corpus:
    """Inverse of write_corpus_jsonl."""
    abstracts = []
    with open(path, encoding="utf-8") as f:
        for number, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                row = json.loads(line)
                abstracts.append(AbstractSample(
                    pmid=row["pmid"],
                    question_id=row["question_id"],
                    source_sentences=tuple(row["source_sentences"]),
                    adaptations=tuple(
                        AdaptationReference(
                            adaptation_id=ref["adaptation_id"],
                            target_sentences=tuple(ref["target_sentences"]),
                            aligned=ref["aligned"],
                        )
                        for ref in row["adaptations"]),
                ))
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                raise CorpusFormatError(f"{path}:{number}: {exc}") from exc
    if not abstracts:
        raise CorpusFormatError(f"{path}: no abstracts")
    return Corpus(abstracts=tuple(abstracts), source_key=source_key)


def split_from_manifest(corpus: Corpus, manifest: dict) -> SplitAssignment:
    """Rebuild a SplitAssignment from its manifest against the same corpus;
    stored counts are checked so a drifted corpus cannot pass silently.
    """
    assignment = manifest["question_assignment"]
    train_pmids: set[str] = set()
    validation_pmids: set[str] = set()
    for sides in assignment.values():
        train_pmids.update(sides["train"])
        validation_pmids.update(sides["validation"])
    corpus_pmids = {a.pmid for a in corpus.abstracts}
    if corpus_pmids != train_pmids | validation_pmids:
        raise CorpusFormatError(
            "split manifest does not cover exactly the corpus pmids")
    train_sample_ids: list[str] = []
    validation_sample_ids: list[str] = []
    for a in sorted(corpus.abstracts, key=lambda s: (s.question_id, s.pmid)):
        bucket = train_sample_ids if a.pmid in train_pmids else validation_sample_ids
        bucket.extend(a.sample_ids())
    split = SplitAssignment(
        seed=manifest["seed"],
        train_ratio=manifest["train_ratio"],
        train_pmids=frozenset(train_pmids),
        validation_pmids=frozenset(validation_pmids),
        train_sample_ids=tuple(train_sample_ids),
        validation_sample_ids=tuple(validation_sample_ids),
        question_assignment={q: {side: list(p) for side, p in sides.items()}
                             for q, sides in assignment.items()},
    )
    for key, actual in (
            ("train_pmid_count", len(split.train_pmids)),
            ("validation_pmid_count", len(split.validation_pmids)),
            ("train_sample_count", len(split.train_sample_ids)),
            ("validation_sample_count", len(split.validation_sample_ids))):
        if key in manifest and manifest[key] != actual:
            raise CorpusFormatError(
                f"split manifest {key} is {manifest[key]} but the corpus "
                f"yields {actual}")
    return split


_SENTENCE_BANK = [
    "Cardiovascular disease remains the leading cause of mortality worldwide.",
    "Researchers documented unexpected complications after treatment.",
    "The medication reduced inflammation in the majority of participants.",
    "Patients reported improvement within two weeks of therapy.",
    "Chemotherapy outcomes depended on early diagnosis.",
    "The study evaluated readability of published abstracts.",
    "Doctors recommended physical therapy for recovery.",
    "Blood pressure decreased after consistent exercise.",
]


def synthetic_corpus(n_questions: int = 75, pmids_per_question: int = 10,
                     total_samples: int = 917, seed: int = 13) -> Corpus:
    """Build a corpus with the same shape as the real dataset: fixed question
    and pmid counts, with extra adaptations spread over abstracts until the
    requested total sample count is reached.  Used by tests and demos.
    """
    n_abstracts = n_questions * pmids_per_question
    if total_samples < n_abstracts:
        raise ValueError("need at least one adaptation per abstract")
    rng = random.Random(seed)
    extras = total_samples - n_abstracts
    extra_slots = sorted(rng.sample(range(n_abstracts), extras))
    raw: dict[str, dict] = {}
    index = 0
    slot = 0
    for q in range(1, n_questions + 1):
        question: dict[str, dict] = {}
        for p in range(pmids_per_question):
            pmid = f"{10_000_000 + index}"
            n_sentences = rng.randint(3, 6)
            sentences = [rng.choice(_SENTENCE_BANK) for _ in range(n_sentences)]
            record = {DEFAULT_SOURCE_KEY: sentences,
                      f"{pmid}_1": [s.lower() for s in sentences]}
            if slot < len(extra_slots) and extra_slots[slot] == index:
                record[f"{pmid}_2"] = [s.upper() for s in sentences]
                slot += 1
            question[pmid] = record
            index += 1
        raw[f"q{q}"] = question
    return corpus_from_mapping(raw)
