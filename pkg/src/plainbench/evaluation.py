"""Scoring of adaptation runs: readability reports with paired significance
tests against ground truth, Likert aggregation for human ratings, and the
per-sentence 3-point category scoring mapped onto [0, 1].

Documents are rebuilt from sentence lists by joining non-empty entries with
single spaces; "" marks an omitted sentence.  A sample whose sentences are all
"" is excluded from scoring and surfaced as a count, never silently dropped.
"""

from __future__ import annotations

import csv
import json
import math
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field
from pathlib import Path

from .corpus import Corpus, make_sample_id
from .readability import score_text
from .stats import SummaryStat, TTestResult, mean_sd, paired_t_test

GRADE8_REFERENCE = 8.0  # target reading level marked on grade-level plots

LIKERT_DIMENSIONS = ("simplicity", "accuracy", "completeness", "brevity")
LIKERT_MIN, LIKERT_MAX = 1, 5

TREC_CATEGORIES = ("accuracy", "completeness", "simplicity", "brevity")
TREC_VALUES = (-1, 0, 1)
TREC_MAPPING_NOTE = "linear: category score = (mean sentence value + 1) / 2"

_CONSISTENCY_TOL = 1e-9


class EvaluationError(ValueError):
    pass


# --- readability reports ---------------------------------------------------

@dataclass(frozen=True)
class DocumentScore:
    sample_id: str
    fk_grade: float
    smog_index: float
    smog_low_confidence: bool


@dataclass(frozen=True)
class ReadabilityReport:
    system_id: str
    per_document: tuple[DocumentScore, ...]
    summary: dict[str, SummaryStat]
    excluded_sample_ids: tuple[str, ...] = ()

    def __post_init__(self):
        recomputed = summarize_documents(self.per_document)
        for metric, stat in recomputed.items():
            stored = self.summary.get(metric)
            if stored is None or stored.n != stat.n \
                    or abs(stored.mean - stat.mean) > _CONSISTENCY_TOL \
                    or abs(stored.sd - stat.sd) > _CONSISTENCY_TOL:
                raise EvaluationError(
                    f"report summary for {metric!r} does not match its rows")

    @property
    def low_confidence_count(self) -> int:
        return sum(1 for d in self.per_document if d.smog_low_confidence)


def summarize_documents(
        per_document: Sequence[DocumentScore]) -> dict[str, SummaryStat]:
    if not per_document:
        raise EvaluationError("cannot summarize an empty document list")
    return {
        "fk_grade": mean_sd([d.fk_grade for d in per_document]),
        "smog_index": mean_sd([d.smog_index for d in per_document]),
    }


def reconstruct_document(sentences: Sequence[str]) -> str:
    """Join adapted sentences into one document, skipping "" omissions."""
    return " ".join(s for s in sentences if s != "")


def score_run(system_id: str,
              documents: Mapping[str, Sequence[str] | str],
              corpus: Corpus | None = None) -> ReadabilityReport:
    """Score one system's documents.  Values may be sentence lists (joined
    here) or pre-joined text.  With a corpus, every key must resolve to an
    abstract or adaptation sample id.
    """
    if not documents:
        raise EvaluationError("no documents to score")
    if corpus is not None:
        known = set()
        for a in corpus.abstracts:
            known.add(f"{a.question_id}/{a.pmid}")
            known.update(a.sample_ids())
        unknown = sorted(set(documents) - known)
        if unknown:
            raise EvaluationError(
                f"{len(unknown)} sample id(s) not in corpus, "
                f"first: {unknown[0]!r}")
    rows: list[DocumentScore] = []
    excluded: list[str] = []
    for sample_id in sorted(documents):
        value = documents[sample_id]
        text = value if isinstance(value, str) else reconstruct_document(value)
        if not text.strip():
            excluded.append(sample_id)
            continue
        score = score_text(text)
        rows.append(DocumentScore(
            sample_id=sample_id,
            fk_grade=score.fk_grade,
            smog_index=score.smog_index,
            smog_low_confidence=score.smog_low_confidence,
        ))
    if not rows:
        raise EvaluationError("every document was empty after omissions")
    return ReadabilityReport(
        system_id=system_id,
        per_document=tuple(rows),
        summary=summarize_documents(rows),
        excluded_sample_ids=tuple(excluded),
    )


def source_documents(corpus: Corpus,
                     pmids: frozenset[str] | set[str] | None = None,
                     ) -> dict[str, str]:
    """Abstract-id keyed source texts, optionally restricted to a pmid set."""
    docs = {}
    for a in corpus.abstracts:
        if pmids is not None and a.pmid not in pmids:
            continue
        docs[f"{a.question_id}/{a.pmid}"] = reconstruct_document(a.source_sentences)
    return docs


def gold_documents(corpus: Corpus,
                   pmids: frozenset[str] | set[str] | None = None,
                   ) -> dict[str, str]:
    """Sample-id keyed ground-truth adaptation texts."""
    docs = {}
    for a in corpus.abstracts:
        if pmids is not None and a.pmid not in pmids:
            continue
        for ref in a.adaptations:
            sample_id = make_sample_id(a.question_id, a.pmid, ref.adaptation_id)
            docs[sample_id] = reconstruct_document(ref.target_sentences)
    return docs


def replicate_onto_gold(corpus: Corpus, by_abstract: Mapping[str, str],
                        pmids: frozenset[str] | set[str] | None = None,
                        ) -> dict[str, str]:
    """Spread per-abstract texts onto the gold sample ids so system output
    pairs one-to-one with each ground-truth adaptation of the same abstract.
    """
    docs = {}
    for a in corpus.abstracts:
        if pmids is not None and a.pmid not in pmids:
            continue
        abstract_id = f"{a.question_id}/{a.pmid}"
        if abstract_id not in by_abstract:
            raise EvaluationError(f"no text for abstract {abstract_id!r}")
        for sample_id in a.sample_ids():
            docs[sample_id] = by_abstract[abstract_id]
    return docs


@dataclass(frozen=True)
class MetricComparison:
    metric: str
    delta_mean: float  # system minus ground truth
    test: TTestResult


@dataclass(frozen=True)
class GroundTruthComparison:
    system_id: str
    ground_truth_id: str
    n_pairs: int
    metrics: dict[str, MetricComparison]


def compare_to_ground_truth(system_report: ReadabilityReport,
                            gt_report: ReadabilityReport,
                            ) -> GroundTruthComparison:
    """Paired t-test per metric over documents matched by sample id."""
    system_rows = {d.sample_id: d for d in system_report.per_document}
    gt_rows = {d.sample_id: d for d in gt_report.per_document}
    if set(system_rows) != set(gt_rows):
        only_system = len(set(system_rows) - set(gt_rows))
        only_gt = len(set(gt_rows) - set(system_rows))
        raise EvaluationError(
            f"sample ids do not pair: {only_system} only in "
            f"{system_report.system_id!r}, {only_gt} only in "
            f"{gt_report.system_id!r}")
    ids = sorted(system_rows)
    if len(ids) < 2:
        raise EvaluationError("need at least 2 matched pairs")
    metrics = {}
    for metric in ("fk_grade", "smog_index"):
        a = [getattr(system_rows[i], metric) for i in ids]
        b = [getattr(gt_rows[i], metric) for i in ids]
        test = paired_t_test(a, b)
        metrics[metric] = MetricComparison(
            metric=metric,
            delta_mean=(system_report.summary[metric].mean
                        - gt_report.summary[metric].mean),
            test=test,
        )
    return GroundTruthComparison(
        system_id=system_report.system_id,
        ground_truth_id=gt_report.system_id,
        n_pairs=len(ids),
        metrics=metrics,
    )


# --- Likert aggregation ----------------------------------------------------

@dataclass(frozen=True)
class LikertRating:
    rater_id: str
    sample_id: str
    system_id_hidden: str
    simplicity: int
    accuracy: int
    completeness: int
    brevity: int
    timestamp: str = ""

    def __post_init__(self):
        for dim in LIKERT_DIMENSIONS:
            value = getattr(self, dim)
            if not isinstance(value, int) or isinstance(value, bool) \
                    or not LIKERT_MIN <= value <= LIKERT_MAX:
                raise EvaluationError(
                    f"{dim} must be an integer in "
                    f"[{LIKERT_MIN}, {LIKERT_MAX}], got {value!r}")

    def total(self) -> int:
        return sum(getattr(self, dim) for dim in LIKERT_DIMENSIONS)


@dataclass(frozen=True)
class LikertSummary:
    system_id: str
    n_ratings: int
    dimensions: dict[str, SummaryStat]
    total_score: SummaryStat

    def __post_init__(self):
        dim_sum = sum(stat.mean for stat in self.dimensions.values())
        if not math.isclose(dim_sum, self.total_score.mean,
                            rel_tol=0.0, abs_tol=_CONSISTENCY_TOL):
            raise EvaluationError(
                "total mean must equal the sum of dimension means")


def aggregate_likert(ratings: Sequence[LikertRating],
                     system_id: str | None = None) -> LikertSummary:
    """Per-dimension mean/SD plus the per-rating total; SD of the total comes
    from the per-rating sums, never from combining dimension SDs.
    """
    if system_id is not None:
        ratings = [r for r in ratings if r.system_id_hidden == system_id]
    if not ratings:
        raise EvaluationError(
            "no ratings" + (f" for system {system_id!r}" if system_id else ""))
    dimensions = {
        dim: mean_sd([getattr(r, dim) for r in ratings])
        for dim in LIKERT_DIMENSIONS
    }
    return LikertSummary(
        system_id=system_id if system_id is not None else "all",
        n_ratings=len(ratings),
        dimensions=dimensions,
        total_score=mean_sd([r.total() for r in ratings]),
    )


def likert_to_dict(rating: LikertRating) -> dict:
    return {
        "rater_id": rating.rater_id,
        "sample_id": rating.sample_id,
        "system_id_hidden": rating.system_id_hidden,
        "simplicity": rating.simplicity,
        "accuracy": rating.accuracy,
        "completeness": rating.completeness,
        "brevity": rating.brevity,
        "timestamp": rating.timestamp,
    }


def likert_from_dict(row: Mapping) -> LikertRating:
    missing = [d for d in LIKERT_DIMENSIONS if d not in row]
    if missing:
        raise EvaluationError(f"rating is missing dimension {missing[0]!r}")
    return LikertRating(
        rater_id=row["rater_id"],
        sample_id=row["sample_id"],
        system_id_hidden=row.get("system_id_hidden", ""),
        simplicity=row["simplicity"],
        accuracy=row["accuracy"],
        completeness=row["completeness"],
        brevity=row["brevity"],
        timestamp=row.get("timestamp", ""),
    )


def read_likert_jsonl(path: str | Path) -> list[LikertRating]:
    """Ratings ingest: the JSON-lines file the rating service appends to."""
    ratings = []
    with open(path, encoding="utf-8") as f:
        for number, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                ratings.append(likert_from_dict(json.loads(line)))
            except (json.JSONDecodeError, KeyError, EvaluationError) as exc:
                raise EvaluationError(f"{path}:{number}: {exc}") from exc
    return ratings


# --- TREC-style sentence scoring -------------------------------------------

@dataclass(frozen=True)
class TrecSentenceRating:
    sample_id: str
    sentence_index: int
    category: str
    value: int

    def __post_init__(self):
        if self.category not in TREC_CATEGORIES:
            raise EvaluationError(f"unknown category {self.category!r}")
        if self.value not in TREC_VALUES:
            raise EvaluationError(
                f"value must be one of {TREC_VALUES}, got {self.value!r}")
        if self.sentence_index < 0:
            raise EvaluationError("sentence_index must be >= 0")


@dataclass(frozen=True)
class TrecScore:
    category_scores: dict[str, float]
    final_avg: float
    mapping: str = field(default=TREC_MAPPING_NOTE)

    def __post_init__(self):
        if set(self.category_scores) != set(TREC_CATEGORIES):
            raise EvaluationError(
                f"category scores must cover exactly {TREC_CATEGORIES}")
        for category, score in self.category_scores.items():
            if not 0.0 <= score <= 1.0:
                raise EvaluationError(
                    f"category {category!r} score out of [0, 1]: {score}")
        recomputed = sum(self.category_scores.values()) / len(self.category_scores)
        if abs(recomputed - self.final_avg) > _CONSISTENCY_TOL:
            raise EvaluationError(
                "final_avg must be the mean of the category scores")


def trec_score(ratings: Sequence[TrecSentenceRating]) -> TrecScore:
    """(mean sentence value + 1)/2 per category, averaged across categories."""
    by_category: dict[str, list[int]] = {c: [] for c in TREC_CATEGORIES}
    for rating in ratings:
        by_category[rating.category].append(rating.value)
    missing = [c for c, values in by_category.items() if not values]
    if missing:
        raise EvaluationError(f"no ratings for category {missing[0]!r}")
    scores = {
        category: (sum(values) / len(values) + 1.0) / 2.0
        for category, values in by_category.items()
    }
    return TrecScore(
        category_scores=scores,
        final_avg=sum(scores.values()) / len(scores),
    )


# --- report persistence ----------------------------------------------------

def report_to_dict(report: ReadabilityReport) -> dict:
    return {
        "system_id": report.system_id,
        "per_document": [
            {"sample_id": d.sample_id, "fk_grade": d.fk_grade,
             "smog_index": d.smog_index,
             "smog_low_confidence": d.smog_low_confidence}
            for d in report.per_document
        ],
        "summary": {
            metric: {"n": stat.n, "mean": stat.mean, "sd": stat.sd}
            for metric, stat in report.summary.items()
        },
        "excluded_sample_ids": list(report.excluded_sample_ids),
    }


def report_from_dict(row: Mapping) -> ReadabilityReport:
    return ReadabilityReport(
        system_id=row["system_id"],
        per_document=tuple(
            DocumentScore(sample_id=d["sample_id"], fk_grade=d["fk_grade"],
                          smog_index=d["smog_index"],
                          smog_low_confidence=d["smog_low_confidence"])
            for d in row["per_document"]),
        summary={metric: SummaryStat(n=s["n"], mean=s["mean"], sd=s["sd"])
                 for metric, s in row["summary"].items()},
        excluded_sample_ids=tuple(row.get("excluded_sample_ids", ())),
    )


def write_report_json(report: ReadabilityReport, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        json.dump(report_to_dict(report), f, indent=2, sort_keys=True)
        f.write("\n")


def read_report_json(path: str | Path) -> ReadabilityReport:
    with open(path, encoding="utf-8") as f:
        try:
            return report_from_dict(json.load(f))
        except (json.JSONDecodeError, KeyError, TypeError) as exc:
            raise EvaluationError(f"{path}: {exc}") from exc


# --- report emission -------------------------------------------------------

def _summary_entry(report: ReadabilityReport) -> dict:
    entry = {
        "system_id": report.system_id,
        "n_documents": len(report.per_document),
        "excluded_empty": len(report.excluded_sample_ids),
        "smog_low_confidence_count": report.low_confidence_count,
    }
    for metric, stat in report.summary.items():
        entry[metric] = {"n": stat.n, "mean": stat.mean, "sd": stat.sd}
    return entry


def emit_report(reports: Sequence[ReadabilityReport], fmt: str,
                out: str | Path) -> Path:
    """Write per-document rows (csv) or summary tables (json).  Output is a
    pure function of the reports, so re-emitting is byte-identical.
    """
    if not reports:
        raise EvaluationError("no reports to emit")
    out = Path(out)
    if fmt == "csv":
        with open(out, "w", encoding="utf-8", newline="") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(["system_id", "sample_id", "fk_grade",
                             "smog_index", "smog_low_confidence"])
            for report in reports:
                for d in report.per_document:
                    writer.writerow([
                        report.system_id, d.sample_id,
                        repr(d.fk_grade), repr(d.smog_index),
                        int(d.smog_low_confidence),
                    ])
    elif fmt == "json":
        payload = {
            "grade8_reference": GRADE8_REFERENCE,
            "systems": [_summary_entry(r) for r in reports],
        }
        with open(out, "w", encoding="utf-8") as f:
            json.dump(payload, f, indent=2, sort_keys=True)
            f.write("\n")
    else:
        raise EvaluationError(f"format must be csv or json, got {fmt!r}")
    return out
