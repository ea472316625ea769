"""Command-line interface.

Subcommands mirror the pipeline stages: ``corpus build``, ``dataset
transpose``, ``eval qa|nli|clams``, ``stats bootstrap``, ``plan``,
``validate``, and ``report``.  Exit codes: 0 ok, 2 validation failure,
3 missing artifacts.
"""

from __future__ import annotations

import argparse
import json
import sys
from collections import defaultdict
from pathlib import Path

from . import bootstrap as bootstrap_mod
from . import corpus as corpus_mod
from . import evaluation as eval_mod
from . import experiments as exp_mod
from . import report as report_mod
from . import transpose as transpose_mod
from .errors import ForgeError, PartialRunError, ValidationError
from .providers import ProviderConfig

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_MISSING = 3


def _cmd_corpus_build(args: argparse.Namespace) -> int:
    spec_data = json.loads(Path(args.spec).read_text(encoding="utf-8"))
    spec = corpus_mod.CorpusSpec.from_dict(spec_data, seed=args.seed)
    pools = corpus_mod.read_sources(args.sources)

    fractions = dict(spec.language_mix)
    per_language: dict[str, tuple[list, corpus_mod.CorpusManifest]] = {}
    for language, fraction in spec.language_mix:
        if fraction <= 0:
            continue
        language_pools = pools.get(language)
        if not language_pools:
            print(f"error: no sources for language {language!r}", file=sys.stderr)
            return EXIT_MISSING
        sub_spec = corpus_mod.CorpusSpec(
            total_budget_words=int(fraction * spec.total_budget_words),
            language_mix=((language, 1.0),),
            domain_quotas=spec.domain_quotas,
            seed=spec.seed,
            order_policy=spec.order_policy,
        )
        per_language[language] = corpus_mod.sample_corpus(
            sub_spec, language_pools, max_workers=args.workers
        )

    if len(per_language) == 1:
        records, manifest = next(iter(per_language.values()))
        # Re-derive the manifest against the full spec so the echo is faithful.
        manifest = corpus_mod.build_manifest(records, spec, warnings=manifest.warnings)
    else:
        en_records = per_language.get("en", ([], None))[0]
        fr_records = per_language.get("fr", ([], None))[0]
        records, manifest = corpus_mod.mix_bilingual(en_records, fr_records, spec)

    corpus_path, manifest_path = corpus_mod.write_corpus(args.out, records, manifest)
    print(f"wrote {corpus_path} ({manifest.total_words} words, {manifest.total_sentences} sentences)")
    print(f"wrote {manifest_path} (digest {manifest.content_digest[:12]}...)")
    for warning in manifest.warnings:
        print(f"warning: {warning}", file=sys.stderr)
    return EXIT_OK


def _cmd_dataset_transpose(args: argparse.Namespace) -> int:
    providers_data = {}
    if args.providers:
        providers_data = json.loads(Path(args.providers).read_text(encoding="utf-8"))
    cfg = ProviderConfig.from_dict(
        providers_data,
        translate_endpoint=args.translate_endpoint,
        embed_endpoint=args.embed_endpoint,
    )
    examples = transpose_mod.read_squad(args.infile, language=args.source_lang)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    try:
        result = transpose_mod.build_translated_dataset(
            examples,
            cfg,
            target_language=args.target_lang,
            align_threshold=args.align_threshold,
            filter_threshold=args.filter_threshold,
        )
    except PartialRunError as exc:
        partial = exc.partial
        (out_dir / "cursor.json").write_text(
            json.dumps({"cursor": exc.cursor, "error": str(exc)}) + "\n", encoding="utf-8"
        )
        if partial is not None:
            transpose_mod.write_squad(out_dir / "partial.json", partial.examples)
        print(f"error: {exc} (cursor saved)", file=sys.stderr)
        return EXIT_MISSING

    train, dev, test = transpose_mod.split_dataset(result.examples, seed=args.seed)
    for name, subset in (("train", train), ("dev", dev), ("test", test)):
        transpose_mod.write_squad(out_dir / f"{name}.json", subset)
    transpose_mod.write_jsonl(out_dir / "alignments.jsonl", [r.to_dict() for r in result.alignment_reports])
    transpose_mod.write_jsonl(out_dir / "filters.jsonl", [d.to_dict() for d in result.filter_decisions])
    counts = result.counts()
    counts["input"] = len(examples)
    counts["splits"] = {"train": len(train), "dev": len(dev), "test": len(test)}
    (out_dir / "summary.json").write_text(json.dumps(counts, indent=2) + "\n", encoding="utf-8")
    print(
        f"kept {counts['emitted']}/{counts['input']} examples "
        f"({counts['alignment_rejected']} alignment-rejected, "
        f"{counts['filter_rejected']} filter-rejected)"
    )
    return EXIT_OK


def _result_metadata(args: argparse.Namespace, default_task: str) -> dict:
    return {
        "task": args.task or default_task,
        "setup": args.setup,
        "pretrain_corpus": args.corpus,
        "test_language": args.lang,
        "seed": args.seed,
    }


def _write_result(result: eval_mod.EvalResult, out: str) -> None:
    Path(out).write_text(json.dumps(result.to_dict(), indent=2) + "\n", encoding="utf-8")
    print(f"{result.task} {result.metric} = {result.value:.2f} -> {out}")


def _cmd_eval_qa(args: argparse.Namespace) -> int:
    gold_examples = transpose_mod.read_squad(args.gold, language=args.lang)
    golds = {e.id: [a.text for a in e.answers] for e in gold_examples}
    predictions = {
        str(row["id"]): row["prediction"] for row in transpose_mod.read_jsonl(args.pred)
    }
    per_example = eval_mod.qa_per_example(golds, predictions, args.lang, metric=args.metric)
    meta = _result_metadata(args, default_task="squad")
    result = eval_mod.EvalResult.from_per_example(
        metric=args.metric, per_example=per_example, **meta
    )
    _write_result(result, args.out)
    return EXIT_OK


def _cmd_eval_nli(args: argparse.Namespace) -> int:
    golds = {str(r["id"]): r["label"] for r in transpose_mod.read_jsonl(args.gold)}
    predictions = {str(r["id"]): r["label"] for r in transpose_mod.read_jsonl(args.pred)}
    per_example = eval_mod.nli_per_example(golds, predictions)
    meta = _result_metadata(args, default_task="xnli")
    result = eval_mod.EvalResult.from_per_example(
        metric="accuracy", per_example=per_example, **meta
    )
    _write_result(result, args.out)
    return EXIT_OK


def _cmd_eval_clams(args: argparse.Namespace) -> int:
    pairs = [eval_mod.parse_minimal_pair(r) for r in transpose_mod.read_jsonl(args.gold)]
    scores = [eval_mod.parse_sentence_score(r) for r in transpose_mod.read_jsonl(args.pred)]
    per_example, breakdown = eval_mod.clams_per_example(pairs, scores)
    meta = _result_metadata(args, default_task="clams")
    result = eval_mod.EvalResult.from_per_example(
        metric="accuracy", per_example=per_example,
        per_phenomenon={k: 100.0 * v for k, v in breakdown.items()}, **meta,
    )
    _write_result(result, args.out)
    return EXIT_OK


def _cmd_stats_bootstrap(args: argparse.Namespace) -> int:
    result_a = eval_mod.EvalResult.from_dict(json.loads(Path(args.a).read_text(encoding="utf-8")))
    result_b = eval_mod.EvalResult.from_dict(json.loads(Path(args.b).read_text(encoding="utf-8")))
    pairing = None
    if args.pairing:
        pairing = json.loads(Path(args.pairing).read_text(encoding="utf-8"))
    samples = bootstrap_mod.paired_samples_from_results(result_a, result_b, pairing)
    report = bootstrap_mod.paired_bootstrap(samples, iterations=args.iterations, rng_seed=args.seed)
    out = args.out or "bootstrap.json"
    Path(out).write_text(json.dumps(report.to_dict(), indent=2) + "\n", encoding="utf-8")
    star = " *" if report.significant else ""
    print(
        f"delta {report.observed_delta:+.4f}, p = {report.p_value:.4f}{star} "
        f"({report.n_examples} samples, {report.n_seeds} seeds) -> {out}"
    )
    return EXIT_OK


def _cmd_plan(args: argparse.Namespace) -> int:
    plan = exp_mod.plan_runs(args.config)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "plan.json").write_text(json.dumps(plan.to_dict(), indent=2) + "\n", encoding="utf-8")
    registry = exp_mod.RunRegistry(out_dir / "registry.jsonl")
    registry.record_plan(plan)
    print(f"planned {len(plan.runs)} runs -> {out_dir / 'plan.json'}")
    return EXIT_OK


def _cmd_validate(args: argparse.Namespace) -> int:
    path = Path(args.path)
    if not path.exists():
        print(f"error: {path} does not exist", file=sys.stderr)
        return EXIT_MISSING
    problems = exp_mod.validate_interchange(path, args.kind)
    if problems:
        for problem in problems:
            print(f"violation: {problem}", file=sys.stderr)
        return EXIT_VALIDATION
    print(f"{path}: ok ({args.kind})")
    return EXIT_OK


def _cmd_report(args: argparse.Namespace) -> int:
    results_dir = Path(args.results)
    if not results_dir.exists():
        print(f"error: {results_dir} does not exist", file=sys.stderr)
        return EXIT_MISSING
    raw: list[eval_mod.EvalResult] = []
    for path in sorted(results_dir.glob("*.json")):
        data = json.loads(path.read_text(encoding="utf-8"))
        if not isinstance(data, dict) or "task" not in data:
            continue
        raw.append(eval_mod.EvalResult.from_dict(data))
    if not raw:
        print(f"error: no result files under {results_dir}", file=sys.stderr)
        return EXIT_MISSING

    grouped: dict[tuple, list[eval_mod.EvalResult]] = defaultdict(list)
    for result in raw:
        grouped[(result.pretrain_corpus, result.test_language, result.task)].append(result)
    results = [eval_mod.aggregate_seeds(group) for group in grouped.values()]

    baselines = report_mod.infer_baselines(results)
    cells = {(r.pretrain_corpus, r.test_language, r.task): r for r in results}
    bootstraps: dict[tuple, bootstrap_mod.BootstrapReport] = {}
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    bootstrap_rows = []
    for result in results:
        if result.setup == "monolingual" or not result.per_example:
            continue
        baseline_row = baselines.get((result.pretrain_corpus, result.test_language))
        if baseline_row is None:
            continue
        baseline = cells.get((baseline_row[0], baseline_row[1], result.task))
        if baseline is None or not baseline.per_example:
            continue
        samples = bootstrap_mod.paired_samples_from_results(result, baseline)
        report = bootstrap_mod.paired_bootstrap(
            samples, iterations=args.iterations, rng_seed=args.seed
        )
        key = (result.pretrain_corpus, result.test_language, result.task)
        bootstraps[key] = report
        bootstrap_rows.append({"cell": list(key), "baseline": list(baseline_row), **report.to_dict()})

    document = report_mod.emit_report(results, baselines, bootstraps)
    md_path, csv_path = document.write(out_dir)
    transpose_mod.write_jsonl(out_dir / "bootstraps.jsonl", bootstrap_rows)
    written = [md_path, csv_path]
    if not args.no_figures:
        written.extend(report_mod.render_figures(results, bootstraps, out_dir / "figures"))
    if args.registry:
        registry = exp_mod.RunRegistry(args.registry)
        known = registry.snapshot()
        for result in results:
            seeds = result.seed if isinstance(result.seed, tuple) else (result.seed,)
            for seed in seeds:
                run_id = f"{result.pretrain_corpus}__{result.test_language}__{result.task}__s{seed}"
                if run_id in known:
                    registry.mark_reported(run_id)
    for path in written:
        print(f"wrote {path}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="forge", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    corpus_parser = sub.add_parser("corpus", help="corpus construction")
    corpus_sub = corpus_parser.add_subparsers(dest="subcommand", required=True)
    build = corpus_sub.add_parser("build", help="build a corpus from labeled sources")
    build.add_argument("--spec", required=True, help="corpus spec JSON")
    build.add_argument("--sources", required=True, help="directory of .txt files plus sources.json")
    build.add_argument("--out", required=True, help="output directory")
    build.add_argument("--seed", required=True, type=int)
    build.add_argument("--workers", type=int, default=None, help="parallel domain sampling")
    build.set_defaults(func=_cmd_corpus_build)

    dataset_parser = sub.add_parser("dataset", help="dataset construction")
    dataset_sub = dataset_parser.add_subparsers(dest="subcommand", required=True)
    trans = dataset_sub.add_parser("transpose", help="translate + realign + filter a QA dataset")
    trans.add_argument("--in", dest="infile", required=True, help="SQuAD-shaped input JSON")
    trans.add_argument("--out", required=True, help="output directory")
    trans.add_argument("--providers", help="provider config JSON")
    trans.add_argument("--translate-endpoint")
    trans.add_argument("--embed-endpoint")
    trans.add_argument("--source-lang", default="en")
    trans.add_argument("--target-lang", default="fr")
    trans.add_argument("--align-threshold", type=float, default=0.80)
    trans.add_argument("--filter-threshold", type=float, default=0.75)
    trans.add_argument("--seed", type=int, default=0)
    trans.set_defaults(func=_cmd_dataset_transpose)

    eval_parser = sub.add_parser("eval", help="score prediction files")
    eval_sub = eval_parser.add_subparsers(dest="subcommand", required=True)
    for name, func, default_metric in (
        ("qa", _cmd_eval_qa, "f1"),
        ("nli", _cmd_eval_nli, "accuracy"),
        ("clams", _cmd_eval_clams, "accuracy"),
    ):
        ev = eval_sub.add_parser(name)
        ev.add_argument("--gold", required=True)
        ev.add_argument("--pred", required=True)
        ev.add_argument("--lang", required=True, choices=["en", "fr"])
        ev.add_argument("--out", required=True)
        ev.add_argument("--task", choices=list(eval_mod.TASKS))
        ev.add_argument("--setup", default="monolingual", choices=list(eval_mod.SETUPS))
        ev.add_argument("--corpus", default="unspecified", help="pretrain corpus label")
        ev.add_argument("--seed", type=int, default=0)
        if name == "qa":
            ev.add_argument("--metric", default=default_metric, choices=["f1", "em"])
        ev.set_defaults(func=func)

    stats_parser = sub.add_parser("stats", help="significance testing")
    stats_sub = stats_parser.add_subparsers(dest="subcommand", required=True)
    boot = stats_sub.add_parser("bootstrap", help="paired bootstrap between two results")
    boot.add_argument("--a", required=True, help="result.json for the candidate system")
    boot.add_argument("--b", required=True, help="result.json for the baseline system")
    boot.add_argument("--iterations", type=int, default=bootstrap_mod.DEFAULT_ITERATIONS)
    boot.add_argument("--seed", type=int, default=0)
    boot.add_argument("--pairing", help="optional JSON mapping of a-side ids to b-side ids")
    boot.add_argument("--out")
    boot.set_defaults(func=_cmd_stats_bootstrap)

    plan = sub.add_parser("plan", help="expand an experiment config into runs")
    plan.add_argument("--config", required=True)
    plan.add_argument("--out", required=True, help="output directory")
    plan.set_defaults(func=_cmd_plan)

    validate = sub.add_parser("validate", help="check an interchange file")
    validate.add_argument("--path", required=True)
    validate.add_argument("--kind", required=True, choices=list(exp_mod.INTERCHANGE_KINDS))
    validate.set_defaults(func=_cmd_validate)

    report = sub.add_parser("report", help="emit result tables and figures")
    report.add_argument("--results", required=True, help="directory of result.json files")
    report.add_argument("--out", required=True, help="output directory")
    report.add_argument("--iterations", type=int, default=bootstrap_mod.DEFAULT_ITERATIONS)
    report.add_argument("--seed", type=int, default=0)
    report.add_argument("--registry", help="registry journal to mark runs reported")
    report.add_argument("--no-figures", action="store_true")
    report.set_defaults(func=_cmd_report)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ValidationError as exc:
        for violation in exc.violations:
            print(f"validation error: {violation}", file=sys.stderr)
        return EXIT_VALIDATION
    except FileNotFoundError as exc:
        print(f"error: missing file: {exc}", file=sys.stderr)
        return EXIT_MISSING
    except ForgeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    raise SystemExit(main())
