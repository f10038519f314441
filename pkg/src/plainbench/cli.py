"""Command-line entry point wiring the pipeline stages.

Every artifact-producing subcommand writes exactly one manifest next to its
primary output (`<out>.manifest.json`) recording the command, effective
config, input hashes, prompt asset pins, seeds and output paths.  Timestamps
live only in manifests, so re-running a command with the same inputs and
seeds reproduces every artifact byte for byte.

Options may come from a JSON config file (--config): a flat object whose keys
are the long option names with dashes as underscores.  Explicit flags win
over config values; boolean switches are flag-only.

Exit codes: 0 ok, 2 usage, 3 input, 4 network, 5 internal.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import sys
from datetime import datetime, timezone
from pathlib import Path

import httpx

from . import prompts
from .adapters import (
    DEFAULT_REPAIR_RETRIES,
    DEFAULT_ROUNDS,
    AdaptationRun,
    load_run_jsonl,
    run_strategy,
    write_run_jsonl,
)
from .corpus import (
    CorpusFormatError,
    load_corpus,
    read_corpus_jsonl,
    split_corpus,
    split_from_manifest,
    validate_alignment,
    write_corpus_jsonl,
)
from .evaluation import (
    EvaluationError,
    compare_to_ground_truth,
    emit_report,
    gold_documents,
    read_report_json,
    reconstruct_document,
    replicate_onto_gold,
    score_run,
    source_documents,
    write_report_json,
)
from .finetune import (
    FT_DEFAULT_BATCH_SIZE,
    FT_DEFAULT_EPOCHS,
    FT_DEFAULT_LR_MULTIPLIER,
    FT_DEFAULT_SEED,
    FinetuneConfig,
    build_finetune_job,
    export_finetune_jsonl,
    read_job_status,
    submit_finetune_job,
)
from .gateway import (
    DEFAULT_MAX_CONCURRENCY,
    ChatGateway,
    GatewayError,
    HTTPBackend,
    MockBackend,
)
from .rating_service import RatingService, RatingStore, build_pool, create_app
from .stats import format_p

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_INPUT = 3
EXIT_NETWORK = 4
EXIT_INTERNAL = 5

DEFAULT_MODEL = "gpt-4o-mini"
DEFAULT_SPLIT_RATIO = 0.8
DEFAULT_SPLIT_SEED = 13


class UsageError(Exception):
    pass


class Settings:
    """Flag/config merge: an explicitly passed flag beats the config file."""

    def __init__(self, args: argparse.Namespace, config: dict):
        self._args = vars(args)
        self._config = config

    def get(self, name: str, default=None):
        value = self._args.get(name)
        if value is not None:
            return value
        if name in self._config:
            return self._config[name]
        return default

    def require(self, name: str):
        value = self.get(name)
        if value is None:
            raise UsageError(
                f"missing required option --{name.replace('_', '-')}")
        return value

    def snapshot(self, **effective) -> dict:
        return {k: (str(v) if isinstance(v, Path) else v)
                for k, v in effective.items()}


def _load_config(path: str | None) -> dict:
    if not path:
        return {}
    with open(path, encoding="utf-8") as f:
        config = json.load(f)
    if not isinstance(config, dict):
        raise CorpusFormatError(f"{path}: config must be a JSON object")
    return config


def _sha256_file(path: str | Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _write_manifest(command: str, out: Path, config: dict,
                    inputs: list[Path], seeds: dict,
                    outputs: list[Path], logs: list[Path] | None = None) -> Path:
    manifest = {
        "command": command,
        "config": config,
        "inputs": {str(p): _sha256_file(p) for p in inputs},
        "prompt_assets": prompts.pinned_checksums(),
        "seeds": seeds,
        "outputs": [str(p) for p in outputs],
        "logs": [str(p) for p in (logs or [])],
        "created_at": datetime.now(timezone.utc).isoformat(),
    }
    path = Path(str(out) + ".manifest.json")
    with open(path, "w", encoding="utf-8") as f:
        json.dump(manifest, f, indent=2, sort_keys=True)
        f.write("\n")
    return path


def _read_split(corpus, path: Path):
    with open(path, encoding="utf-8") as f:
        return split_from_manifest(corpus, json.load(f))


def _side_pmids(split, side: str) -> frozenset[str]:
    if side == "train":
        return split.train_pmids
    if side == "validation":
        return split.validation_pmids
    raise UsageError(f"--side must be train or validation, got {side!r}")


# --- subcommands -----------------------------------------------------------

def cmd_ingest(args, config) -> int:
    settings = Settings(args, config)
    source = Path(settings.require("input"))
    out = Path(settings.require("out"))
    source_key = settings.get("source_key", "abstract")
    corpus = load_corpus(source, source_key=source_key)
    report = validate_alignment(corpus)
    write_corpus_jsonl(corpus, out)
    _write_manifest("ingest", out,
                    settings.snapshot(input=source, out=out,
                                      source_key=source_key),
                    inputs=[source], seeds={}, outputs=[out])
    print(f"ingested {len(corpus)} abstracts, {corpus.sample_count} samples "
          f"({len(report.violations)} unaligned) -> {out}")
    return EXIT_OK


def cmd_split(args, config) -> int:
    settings = Settings(args, config)
    corpus_path = Path(settings.require("corpus"))
    out = Path(settings.require("out"))
    ratio = float(settings.get("ratio", DEFAULT_SPLIT_RATIO))
    seed = int(settings.get("seed", DEFAULT_SPLIT_SEED))
    corpus = read_corpus_jsonl(corpus_path)
    split = split_corpus(corpus, train_ratio=ratio, seed=seed)
    with open(out, "w", encoding="utf-8") as f:
        json.dump(split.to_manifest(), f, indent=2, sort_keys=True)
        f.write("\n")
    _write_manifest("split", out,
                    settings.snapshot(corpus=corpus_path, out=out,
                                      ratio=ratio, seed=seed),
                    inputs=[corpus_path], seeds={"split": seed},
                    outputs=[out])
    print(f"split {len(split.train_pmids)}/{len(split.validation_pmids)} "
          f"train/validation pmids, "
          f"{len(split.train_sample_ids)}/{len(split.validation_sample_ids)} "
          f"samples -> {out}")
    return EXIT_OK


def _mock_simplify(sentence: str) -> str:
    return f"Put simply: {sentence}"


def _mock_reply(messages) -> str:
    """Offline deterministic backend for smoke runs: identity-style
    adaptations, a fixed pair of critic questions."""
    system = messages[0].content
    if system == prompts.asset_text("student_persona"):
        return "What does the treatment do?\nAre there any side effects?"
    if system == prompts.asset_text("integration"):
        source = json.loads(messages[1].content)
        return json.dumps([_mock_simplify(s) for s in source])
    payload = [m for m in messages if m.role == "user"][-1].content
    return json.dumps([_mock_simplify(s) for s in json.loads(payload)])


def cmd_adapt(args, config) -> int:
    settings = Settings(args, config)
    corpus_path = Path(settings.require("corpus"))
    split_path = Path(settings.require("split"))
    out = Path(settings.require("out"))
    strategy = settings.require("strategy").replace("-", "_")
    side = settings.get("side", "validation")
    model = settings.get("model", DEFAULT_MODEL)
    backend_name = settings.get("backend", "mock")
    rounds = int(settings.get("rounds", DEFAULT_ROUNDS))
    max_repairs = int(settings.get("max_repairs", DEFAULT_REPAIR_RETRIES))
    concurrency = int(settings.get("concurrency", DEFAULT_MAX_CONCURRENCY))
    transcript = Path(settings.get(
        "transcript", out.with_suffix(".transcript.jsonl")))

    corpus = read_corpus_jsonl(corpus_path)
    split = _read_split(corpus, split_path)
    _side_pmids(split, side)
    if backend_name == "mock":
        backend = MockBackend(_mock_reply)
    elif backend_name == "http":
        backend = HTTPBackend(settings.require("base_url"))
    else:
        raise UsageError(f"--backend must be mock or http, got {backend_name!r}")
    gateway = ChatGateway(backend, transcript_path=transcript,
                          max_concurrency=concurrency)
    run = run_strategy(corpus, split, side, strategy, model, gateway,
                       rounds=rounds, max_repairs=max_repairs,
                       max_workers=concurrency)
    write_run_jsonl(run, out)
    _write_manifest("adapt", out,
                    settings.snapshot(corpus=corpus_path, split=split_path,
                                      out=out, strategy=strategy, side=side,
                                      model=model, backend=backend_name,
                                      rounds=rounds, max_repairs=max_repairs,
                                      concurrency=concurrency),
                    inputs=[corpus_path, split_path],
                    seeds={"split": split.seed},
                    outputs=[out], logs=[transcript])
    repairs = sum(r.retry_count for r in run.results)
    print(f"adapted {len(run.results)} abstracts with {strategy} "
          f"({repairs} repairs, {gateway.call_count} calls) -> {out}")
    return EXIT_OK


def cmd_export_ft(args, config) -> int:
    settings = Settings(args, config)
    corpus_path = Path(settings.require("corpus"))
    split_path = Path(settings.require("split"))
    out = Path(settings.require("out"))
    side = settings.get("side", "train")
    corpus = read_corpus_jsonl(corpus_path)
    split = _read_split(corpus, split_path)
    result = export_finetune_jsonl(corpus, split, side, out)
    _write_manifest("export-ft", out,
                    settings.snapshot(corpus=corpus_path, split=split_path,
                                      out=out, side=side),
                    inputs=[corpus_path, split_path],
                    seeds={"split": split.seed}, outputs=[out])
    print(f"exported {result.record_count} chat records "
          f"({result.skipped_unaligned} unaligned skipped) -> {out}")
    return EXIT_OK


def cmd_ft_job(args, config) -> int:
    settings = Settings(args, config)
    status_id = settings.get("status")
    if status_id:
        status = read_job_status(status_id, settings.require("base_url"))
        print(json.dumps(status, indent=2, sort_keys=True))
        return EXIT_OK
    training = Path(settings.require("training_file"))
    validation = settings.get("validation_file")
    out = Path(settings.require("out"))
    ft_config = FinetuneConfig(
        epochs=int(settings.get("epochs", FT_DEFAULT_EPOCHS)),
        batch_size=int(settings.get("batch_size", FT_DEFAULT_BATCH_SIZE)),
        lr_multiplier=float(settings.get("lr_multiplier",
                                         FT_DEFAULT_LR_MULTIPLIER)),
        random_seed=int(settings.get("seed", FT_DEFAULT_SEED)),
        training_file=training,
        validation_file=Path(validation) if validation else None,
        model=settings.get("model", DEFAULT_MODEL),
    )
    payload = build_finetune_job(ft_config)
    with open(out, "w", encoding="utf-8") as f:
        json.dump(payload, f, indent=2, sort_keys=True)
        f.write("\n")
    inputs = [training] + ([Path(validation)] if validation else [])
    _write_manifest("ft-job", out,
                    settings.snapshot(training_file=training,
                                      validation_file=validation, out=out,
                                      model=ft_config.model,
                                      epochs=ft_config.epochs,
                                      batch_size=ft_config.batch_size,
                                      lr_multiplier=ft_config.lr_multiplier,
                                      seed=ft_config.random_seed),
                    inputs=inputs, seeds={"finetune": ft_config.random_seed},
                    outputs=[out])
    print(f"job payload -> {out}")
    if args.submit:
        job_id = submit_finetune_job(payload, settings.require("base_url"))
        print(f"submitted: {job_id}")
    return EXIT_OK


def cmd_score(args, config) -> int:
    settings = Settings(args, config)
    corpus_path = Path(settings.require("corpus"))
    out = Path(settings.require("out"))
    run_path = settings.get("run")
    reference = settings.get("reference")
    if (run_path is None) == (reference is None):
        raise UsageError("exactly one of --run or --reference is required")
    corpus = read_corpus_jsonl(corpus_path)
    split_path = settings.get("split")
    pmids = None
    seeds: dict = {}
    inputs = [corpus_path]
    if split_path is not None:
        split = _read_split(corpus, Path(split_path))
        pmids = _side_pmids(split, settings.get("side", "validation"))
        seeds["split"] = split.seed
        inputs.append(Path(split_path))
    if run_path is not None:
        results = load_run_jsonl(run_path)
        inputs.append(Path(run_path))
        by_abstract = {r.sample_id: reconstruct_document(r.adapted_sentences)
                       for r in results}
        if pmids is not None:
            covered = {a.pmid for a in corpus.abstracts
                       if f"{a.question_id}/{a.pmid}" in by_abstract}
            missing = pmids - covered
            if missing:
                raise EvaluationError(
                    f"run covers {len(covered & pmids)} of {len(pmids)} "
                    f"{settings.get('side', 'validation')} abstracts")
        documents = replicate_onto_gold(corpus, by_abstract, pmids)
        system_id = settings.get("system_id", results[0].strategy)
    elif reference == "gold":
        documents = gold_documents(corpus, pmids)
        system_id = settings.get("system_id", "ground_truth")
    elif reference == "source":
        documents = replicate_onto_gold(
            corpus, source_documents(corpus, pmids), pmids)
        system_id = settings.get("system_id", "source")
    else:
        raise UsageError(f"--reference must be gold or source, got {reference!r}")
    report = score_run(system_id, documents, corpus)
    write_report_json(report, out)
    _write_manifest("score", out,
                    settings.snapshot(corpus=corpus_path, split=split_path,
                                      run=run_path, reference=reference,
                                      side=settings.get("side", "validation"),
                                      system_id=system_id, out=out),
                    inputs=inputs, seeds=seeds, outputs=[out])
    fk = report.summary["fk_grade"]
    smog = report.summary["smog_index"]
    print(f"{system_id}: n={fk.n} FK {fk.mean:.2f} (SD {fk.sd:.2f}), "
          f"SMOG {smog.mean:.2f} (SD {smog.sd:.2f}), "
          f"{report.low_confidence_count} low-confidence, "
          f"{len(report.excluded_sample_ids)} excluded -> {out}")
    return EXIT_OK


def cmd_evaluate(args, config) -> int:
    settings = Settings(args, config)
    report_path = Path(settings.require("report"))
    against_path = Path(settings.require("against"))
    out = Path(settings.require("out"))
    system = read_report_json(report_path)
    ground_truth = read_report_json(against_path)
    comparison = compare_to_ground_truth(system, ground_truth)
    payload = {
        "system_id": comparison.system_id,
        "ground_truth_id": comparison.ground_truth_id,
        "n_pairs": comparison.n_pairs,
        "metrics": {
            metric: {
                "delta_mean": m.delta_mean,
                "t": m.test.t,
                "df": m.test.df,
                "p_two_sided": m.test.p_two_sided,
                "p_formatted": format_p(m.test.p_two_sided),
                "n": m.test.n,
            }
            for metric, m in comparison.metrics.items()
        },
    }
    with open(out, "w", encoding="utf-8") as f:
        json.dump(payload, f, indent=2, sort_keys=True)
        f.write("\n")
    _write_manifest("evaluate", out,
                    settings.snapshot(report=report_path, against=against_path,
                                      out=out),
                    inputs=[report_path, against_path], seeds={},
                    outputs=[out])
    for metric, m in comparison.metrics.items():
        print(f"{metric}: delta {m.delta_mean:+.3f}, t={m.test.t:.3f} "
              f"(df={m.test.df}), p={format_p(m.test.p_two_sided)}")
    print(f"comparison -> {out}")
    return EXIT_OK


def cmd_rate_serve(args, config) -> int:
    settings = Settings(args, config)
    corpus_path = Path(settings.require("corpus"))
    run_paths = settings.get("run") or []
    if not run_paths and not args.include_gold:
        raise UsageError("need at least one --run or --include-gold")
    corpus = read_corpus_jsonl(corpus_path)
    runs = []
    for path in run_paths:
        results = load_run_jsonl(path)
        runs.append(AdaptationRun(
            strategy=results[0].strategy, model=results[0].model,
            side="", results=tuple(results)))
    pool = build_pool(runs, corpus, include_gold=args.include_gold)
    store = RatingStore(Path(settings.get("ratings", "ratings.jsonl")))
    service = RatingService(
        pool, store,
        sessions_path=Path(settings.get("sessions", "sessions.jsonl")))
    static_dir = settings.get("static")
    app = create_app(service,
                     static_dir=Path(static_dir) if static_dir else None)
    host = settings.get("host", "127.0.0.1")
    port = int(settings.get("port", 8321))
    print(f"serving {len(pool)} pool samples on http://{host}:{port}")
    import uvicorn
    uvicorn.run(app, host=host, port=port, log_level="warning")
    return EXIT_OK


def cmd_report(args, config) -> int:
    settings = Settings(args, config)
    report_paths = settings.get("report") or []
    if not report_paths:
        raise UsageError("need at least one --report")
    fmt = settings.get("format", "json")
    out = Path(settings.require("out"))
    reports = [read_report_json(p) for p in report_paths]
    emit_report(reports, fmt, out)
    _write_manifest("report", out,
                    settings.snapshot(report=[str(p) for p in report_paths],
                                      format=fmt, out=out),
                    inputs=[Path(p) for p in report_paths], seeds={},
                    outputs=[out])
    print(f"{fmt} report for {len(reports)} system(s) -> {out}")
    return EXIT_OK


# --- parser / dispatch -----------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config file; flags win")

    parser = argparse.ArgumentParser(
        prog="plainbench",
        description="Plain-language adaptation workbench for biomedical "
                    "abstracts: ingest, split, adapt, fine-tune export, "
                    "scoring, human rating.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", parents=[common],
                       help="normalize a question/pmid dataset into corpus "
                            "JSON-lines")
    p.add_argument("--input")
    p.add_argument("--out")
    p.add_argument("--source-key", dest="source_key")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("split", parents=[common],
                       help="pmid-grouped train/validation split")
    p.add_argument("--corpus")
    p.add_argument("--ratio", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--out")
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("adapt", parents=[common],
                       help="run an adaptation strategy over one split side")
    p.add_argument("--corpus")
    p.add_argument("--split")
    p.add_argument("--side", choices=["train", "validation"])
    p.add_argument("--strategy",
                   choices=["baseline", "two-agents", "finetuned"])
    p.add_argument("--model")
    p.add_argument("--backend", choices=["mock", "http"])
    p.add_argument("--base-url", dest="base_url")
    p.add_argument("--rounds", type=int)
    p.add_argument("--max-repairs", dest="max_repairs", type=int)
    p.add_argument("--concurrency", type=int)
    p.add_argument("--transcript")
    p.add_argument("--out")
    p.set_defaults(func=cmd_adapt)

    p = sub.add_parser("export-ft", parents=[common],
                       help="export fine-tuning chat JSONL for a split side")
    p.add_argument("--corpus")
    p.add_argument("--split")
    p.add_argument("--side", choices=["train", "validation"])
    p.add_argument("--out")
    p.set_defaults(func=cmd_export_ft)

    p = sub.add_parser("ft-job", parents=[common],
                       help="build (and optionally submit) a fine-tune job "
                            "payload, or query one with --status")
    p.add_argument("--training-file", dest="training_file")
    p.add_argument("--validation-file", dest="validation_file")
    p.add_argument("--model")
    p.add_argument("--epochs", type=int)
    p.add_argument("--batch-size", dest="batch_size", type=int)
    p.add_argument("--lr-multiplier", dest="lr_multiplier", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--out")
    p.add_argument("--submit", action="store_true")
    p.add_argument("--status")
    p.add_argument("--base-url", dest="base_url")
    p.set_defaults(func=cmd_ft_job)

    p = sub.add_parser("score", parents=[common],
                       help="readability report for a run or a corpus "
                            "reference (gold/source)")
    p.add_argument("--corpus")
    p.add_argument("--split")
    p.add_argument("--side", choices=["train", "validation"])
    p.add_argument("--run")
    p.add_argument("--reference", choices=["gold", "source"])
    p.add_argument("--system-id", dest="system_id")
    p.add_argument("--out")
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("evaluate", parents=[common],
                       help="paired t-test comparison of two score reports")
    p.add_argument("--report")
    p.add_argument("--against")
    p.add_argument("--out")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("rate-serve", parents=[common],
                       help="serve the blinded rating API (and UI, with "
                            "--static)")
    p.add_argument("--corpus")
    p.add_argument("--run", action="append")
    p.add_argument("--include-gold", dest="include_gold",
                   action="store_true")
    p.add_argument("--ratings")
    p.add_argument("--sessions")
    p.add_argument("--static")
    p.add_argument("--host")
    p.add_argument("--port", type=int)
    p.set_defaults(func=cmd_rate_serve)

    p = sub.add_parser("report", parents=[common],
                       help="emit CSV rows or JSON summaries from score "
                            "reports")
    p.add_argument("--report", action="append")
    p.add_argument("--format", choices=["csv", "json"])
    p.add_argument("--out")
    p.set_defaults(func=cmd_report)

    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = _load_config(getattr(args, "config", None))
        return args.func(args, config)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (FileNotFoundError, IsADirectoryError, PermissionError,
            CorpusFormatError, EvaluationError, json.JSONDecodeError,
            ValueError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (GatewayError, httpx.HTTPError) as exc:
        print(f"network error: {exc}", file=sys.stderr)
        return EXIT_NETWORK
    except Exception as exc:  # noqa: BLE001 - last-resort categorization
        log.exception("internal error")
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
