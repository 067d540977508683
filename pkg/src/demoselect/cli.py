"""Command-line pipeline.

Stages hand off through JSONL files so that runs around a slow endpoint can
be inspected and resumed::

    demoselect gen-fixture --out-dir work/fixture --split held-out-ls
    demoselect index --corpus work/fixture/train.jsonl --corpus work/fixture/test.jsonl --out work/index.json
    demoselect run --index work/index.json --strategy cover-ls --oracle --k 4 --mock --workdir work/run

Exit codes: 0 success, 1 evaluation found wrong predictions (report still
written), 2 usage/config/data errors, 3 transport errors.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from .corpus import Example, IndexBundle, build_indexes, load_examples, load_predictions
from .errors import (
    ApiError,
    ConfigError,
    CorpusError,
    DemoselectError,
    GenerationError,
    IndexVersionError,
    IoError,
    TransportError,
)
from .evaluation import aggregate, evaluate_record
from .fixtures import GrammarConfig, gen_fixture, write_fixture
from .gateway import (
    CompletionRequest,
    EndpointConfig,
    MockOracleConfig,
    complete,
    mock_complete,
)
from .programs import DialectConfig
from .prompting import format_prompt, order_demonstrations, truncate_prompt
from .retrieval import RETRIEVER_VARIANTS, random_scores, tokenize_utterance
from .selection import (
    cover_ls,
    cover_utt,
    dpp_select,
    oracle_elements,
    select_random,
    select_top_k,
    training_mode_select,
)
from .structures import ls_size

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_EVAL_FAILURES = 1
EXIT_USAGE = 2
EXIT_TRANSPORT = 3

STRATEGIES = ("top-k", "random", "cover-ls", "cover-utt", "dpp")


@dataclass
class RunConfig:
    strategy: str = "cover-ls"
    k: int = 24
    retriever: str = "bm25-utterance"
    beam_limit: int | None = None
    max_ls_size: int | None = None
    seed: int = 0
    candidate_pool_size: int = 200
    oracle: bool = False
    train_mode: bool = False
    fallback: str = "cover-utt"
    order: str = "ascending-score"
    programs_only: bool = False
    budget: int | None = None
    mock: bool = False
    mock_threshold: int = 2
    jobs: int = 1

    def __post_init__(self):
        if self.k < 1:
            raise ConfigError("k must be >= 1")
        if self.beam_limit is not None and self.beam_limit < 1:
            raise ConfigError("beam limit must be >= 1")
        if self.strategy not in STRATEGIES:
            raise ConfigError(f"unknown strategy {self.strategy!r}")
        if self.retriever not in RETRIEVER_VARIANTS:
            raise ConfigError(f"unknown retriever {self.retriever!r}")


def _example_seed(seed: int, example_id: str) -> int:
    return zlib.crc32(f"{seed}:{example_id}".encode("utf-8"))


def _write_jsonl(path: str | Path, records: list[dict]) -> None:
    text = "\n".join(json.dumps(r, sort_keys=True) for r in records)
    Path(path).write_text(text + ("\n" if records else ""), encoding="utf-8")


def _read_jsonl(path: str | Path) -> list[dict]:
    try:
        raw = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc
    return [json.loads(line) for line in raw.splitlines() if line.strip()]


def _load_tests(bundle: IndexBundle, test_path: str | None) -> list[Example]:
    if test_path:
        corpus = load_examples(test_path, bundle.corpus.dialect, default_split="test")
        return list(corpus.examples)
    tests = bundle.corpus.split("test")
    if not tests:
        raise ConfigError("no test examples: pass --test or index a test split")
    return tests


# --- selection stage -------------------------------------------------------


def _retriever_scores(bundle, example, cfg: RunConfig, bundles) -> dict[str, float]:
    if cfg.retriever == "bm25-utterance":
        return bundle.bm25_utterance.scores(tokenize_utterance(example.utterance))
    if cfg.retriever == "random":
        return random_scores(bundle.pool, _example_seed(cfg.seed, example.id))
    if cfg.retriever == "oracle-bm25-gold-symbols":
        return bundle.bm25_symbols.scores(sorted(set(example.symbol_seq)))
    # bm25-symbols: predicted symbols, or gold symbols in oracle mode
    if cfg.oracle:
        return bundle.bm25_symbols.scores(sorted(set(example.symbol_seq)))
    bundle_for_id = bundles.get(example.id)
    symbols = (
        sorted(c for c in bundle_for_id.ls_union if ls_size(c) == 1)
        if bundle_for_id
        else []
    )
    return bundle.bm25_symbols.scores(symbols)


def _select_one(bundle, example, cfg: RunConfig, bundles) -> dict:
    pool = bundle.pool
    scores = _retriever_scores(bundle, example, cfg, bundles)
    if cfg.strategy == "top-k":
        result = select_top_k(pool, scores, cfg.k)
    elif cfg.strategy == "random":
        result = select_random(pool, cfg.k, seed=_example_seed(cfg.seed, example.id))
    elif cfg.strategy == "cover-utt":
        result = cover_utt(
            example.utterance,
            pool,
            scores,
            cfg.k,
            idf=bundle.bm25_utterance.idf,
            postings=bundle.token_postings,
        )
    elif cfg.strategy == "dpp":
        result = dpp_select(scores, bundle.tfidf, cfg.k, cfg.candidate_pool_size)
    else:  # cover-ls
        if cfg.oracle:
            elements = oracle_elements(example.program, bundle.corpus.dialect)
        else:
            pred = bundles.get(example.id)
            elements = set(pred.ls_union) if pred else set()
        if not elements and cfg.fallback == "cover-utt":
            result = cover_utt(
                example.utterance,
                pool,
                scores,
                cfg.k,
                idf=bundle.bm25_utterance.idf,
                postings=bundle.token_postings,
            )
        else:
            result = cover_ls(
                elements,
                pool,
                scores,
                cfg.k,
                max_ls_size=cfg.max_ls_size,
                postings=bundle.ls_postings,
            )
    return {
        "id": example.id,
        "strategy": result.strategy,
        "k": result.k,
        "items": [[i, s] for i, s in result.items],
        "coverage_trace": [[p, e] for p, e in result.coverage_trace],
        "underfilled": result.underfilled,
    }


def _select_train_one(bundle, example, cfg: RunConfig) -> dict:
    pool = {i: ex for i, ex in bundle.pool.items() if i != example.id}
    result = training_mode_select(
        example.program,
        pool,
        cfg.k,
        seed=_example_seed(cfg.seed, example.id),
        dialect=bundle.corpus.dialect,
    )
    return {
        "id": example.id,
        "strategy": result.strategy,
        "k": result.k,
        "items": [[i, s] for i, s in result.items],
        "coverage_trace": [[p, e] for p, e in result.coverage_trace],
        "underfilled": result.underfilled,
    }


def stage_select(bundle, tests, cfg: RunConfig, bundles) -> list[dict]:
    if cfg.train_mode:
        targets = sorted(bundle.pool.values(), key=lambda e: e.id)
        worker = lambda ex: _select_train_one(bundle, ex, cfg)  # noqa: E731
    else:
        targets = tests
        worker = lambda ex: _select_one(bundle, ex, cfg, bundles)  # noqa: E731
    if cfg.jobs > 1:
        with ThreadPoolExecutor(max_workers=cfg.jobs) as pool_exec:
            return list(pool_exec.map(worker, targets))
    return [worker(ex) for ex in targets]


# --- prompt stage ----------------------------------------------------------


def stage_prompt(bundle, tests, selections: list[dict], cfg: RunConfig) -> list[dict]:
    by_id = {ex.id: ex for ex in tests}
    if cfg.train_mode:
        by_id = dict(bundle.pool)
    out = []
    for record in selections:
        example = by_id.get(record["id"])
        if example is None:
            raise ConfigError(f"selection id {record['id']} not among targets")
        mode = "shuffled" if cfg.train_mode or cfg.order == "shuffled" else cfg.order
        ordered = order_demonstrations(
            [(i, s) for i, s in record["items"]],
            mode=mode,
            seed=_example_seed(cfg.seed, example.id),
        )
        demos = []
        for demo_id, _ in ordered:
            demo = bundle.pool.get(demo_id) or bundle.corpus.by_id.get(demo_id)
            if demo is None:
                raise ConfigError(f"unknown demonstration id {demo_id}")
            demos.append((demo.id, demo.utterance, demo.program))
        prompt = format_prompt(
            demos, example.utterance, include_utterances=not cfg.programs_only
        )
        if cfg.budget is not None:
            prompt = truncate_prompt(prompt, cfg.budget)
        row = {
            "id": example.id,
            "prompt": prompt.text,
            "demo_ids": prompt.demo_ids,
            "truncated": prompt.truncated_count,
        }
        if cfg.train_mode:
            row["target"] = example.program
        out.append(row)
    return out


# --- inference stage -------------------------------------------------------


def stage_infer(
    bundle,
    tests,
    prompts: list[dict],
    cfg: RunConfig,
    endpoint: EndpointConfig | None = None,
    request_defaults: CompletionRequest | None = None,
) -> list[dict]:
    by_id = {ex.id: ex for ex in tests}

    def mock_one(row: dict) -> dict:
        example = by_id.get(row["id"])
        if example is None:
            raise ConfigError(f"prompt id {row['id']} has no test example")
        demo_programs = [
            bundle.corpus.by_id[d].program for d in row["demo_ids"]
        ]
        text = mock_complete(
            demo_programs,
            example.program,
            MockOracleConfig(compose_threshold_size=cfg.mock_threshold),
            bundle.corpus.dialect,
        )
        return {"id": row["id"], "prediction": text}

    def endpoint_one(row: dict) -> dict:
        base = request_defaults or CompletionRequest(prompt="")
        request = CompletionRequest(
            prompt=row["prompt"],
            max_tokens=base.max_tokens,
            temperature=base.temperature,
            stop=base.stop,
        )
        result = complete(request, endpoint)
        return {"id": row["id"], "prediction": result.text.strip()}

    worker = mock_one if cfg.mock else endpoint_one
    if not cfg.mock and endpoint is None:
        raise ConfigError("no endpoint configured; use --mock or --base-url")
    if cfg.jobs > 1:
        with ThreadPoolExecutor(max_workers=cfg.jobs) as pool_exec:
            return list(pool_exec.map(worker, prompts))
    return [worker(row) for row in prompts]


# --- eval stage ------------------------------------------------------------


def stage_eval(
    bundle, tests, prompts: list[dict], predictions: list[dict], cfg: RunConfig
) -> tuple[dict, list]:
    by_id = {ex.id: ex for ex in tests}
    prompt_by_id = {row["id"]: row for row in prompts}
    training_union = bundle.training_ls_union()
    records = []
    for row in predictions:
        example = by_id.get(row["id"])
        if example is None:
            logger.warning("prediction id %s is not a test example", row["id"])
            continue
        prompt_row = prompt_by_id.get(row["id"], {"demo_ids": []})
        demo_examples = [bundle.corpus.by_id[d] for d in prompt_row["demo_ids"]]
        records.append(
            evaluate_record(
                example_id=example.id,
                pred=row["prediction"],
                gold=example.program,
                demo_programs=[d.program for d in demo_examples],
                demo_ls_sets=[d.ls_set for d in demo_examples],
                gold_ls_set=example.ls_set,
                training_ls_union=training_union,
                dialect=bundle.corpus.dialect,
                strategy=cfg.strategy,
            )
        )
    report = aggregate(records, by_strategy=False)
    return report, records


def _write_csv(path: str | Path, records) -> None:
    import csv

    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(
            [
                "id",
                "exact_match",
                "symbol_coverage",
                "ls_coverage",
                "unique_ls_count",
                "error_labels",
                "unobserved_ls",
                "strategy",
            ]
        )
        for record in records:
            row = record.to_dict()
            writer.writerow(
                [
                    row["id"],
                    int(row["exact_match"]),
                    f"{row['symbol_coverage']:.6f}",
                    f"{row['ls_coverage']:.6f}",
                    row["unique_ls_count"],
                    "|".join(row["error_labels"]),
                    int(row["unobserved_ls"]),
                    row["strategy"],
                ]
            )


# --- commands --------------------------------------------------------------


def _dialect_from_args(args) -> DialectConfig:
    value_parents = frozenset(
        s for s in (args.value_parents or "").split(",") if s
    )
    return DialectConfig(name=args.dialect, value_parents=value_parents)


def cmd_index(args) -> int:
    dialect = _dialect_from_args(args)
    examples = []
    failures = 0
    for path in args.corpus:
        corpus = load_examples(path, dialect)
        examples.extend(corpus.examples)
        failures += len(corpus.failures)
    from .corpus import Corpus

    bundle = build_indexes(Corpus(examples=examples, dialect=dialect))
    bundle.save(args.out)
    stats = bundle.stats()
    print(
        "indexed {examples} examples ({train} train / {test} test), "
        "{unique_templates} templates, {unique_ls} local structures".format(**stats)
    )
    if failures:
        print(f"warning: {failures} corpus lines skipped")
    return EXIT_OK


def _run_config_from_args(args, config_file: dict) -> RunConfig:
    def pick(name, default):
        value = getattr(args, name, None)
        if value is None:
            return config_file.get(name.replace("_", "-"), config_file.get(name, default))
        return value

    return RunConfig(
        strategy=pick("strategy", "cover-ls"),
        k=int(pick("k", 24)),
        retriever=pick("retriever", "bm25-utterance"),
        beam_limit=pick("beam_limit", None),
        max_ls_size=pick("max_ls_size", None),
        seed=int(pick("seed", 0)),
        candidate_pool_size=int(pick("candidate_pool_size", 200)),
        oracle=bool(pick("oracle", False)),
        train_mode=bool(pick("train_mode", False)),
        fallback=pick("fallback", "cover-utt"),
        order=pick("order", "ascending-score"),
        programs_only=bool(pick("programs_only", False)),
        budget=pick("budget", None),
        mock=bool(pick("mock", False)),
        mock_threshold=int(pick("mock_threshold", 2)),
        jobs=int(pick("jobs", 1)),
    )


def _load_config_file(args) -> dict:
    if getattr(args, "config", None):
        return json.loads(Path(args.config).read_text(encoding="utf-8"))
    return {}


def _validate_select_inputs(cfg: RunConfig, args) -> None:
    needs_predictions = (
        cfg.strategy == "cover-ls" or cfg.retriever == "bm25-symbols"
    ) and not cfg.oracle and not cfg.train_mode
    if needs_predictions and not getattr(args, "predictions", None):
        raise ConfigError(
            f"strategy/retriever {cfg.strategy}/{cfg.retriever} needs --predictions "
            "or --oracle"
        )


def cmd_select(args) -> int:
    cfg = _run_config_from_args(args, _load_config_file(args))
    _validate_select_inputs(cfg, args)
    bundle = IndexBundle.load(args.index)
    tests = [] if cfg.train_mode else _load_tests(bundle, args.test)
    bundles = (
        load_predictions(args.predictions, bundle.corpus.dialect)
        if getattr(args, "predictions", None)
        else {}
    )
    if cfg.beam_limit is not None:
        bundles = _limit_beams(bundles, cfg.beam_limit, bundle.corpus.dialect)
    known = {ex.id for ex in tests}
    for example_id in sorted(set(bundles) - known):
        logger.warning("prediction id %s is not a test example; kept", example_id)
    selections = stage_select(bundle, tests, cfg, bundles)
    _write_jsonl(args.out, selections)
    print(f"selected demonstrations for {len(selections)} examples -> {args.out}")
    return EXIT_OK


def _limit_beams(bundles, beam_limit, dialect):
    from .corpus import PredictionBundle
    from .programs import anonymize, parse_program
    from .structures import build_structure_graph, count_local_structures

    limited = {}
    for example_id, bundle in bundles.items():
        beams = bundle.beams[:beam_limit]
        union: set[str] = set()
        for beam in beams:
            anon = anonymize(parse_program(beam, dialect))
            union |= set(count_local_structures(build_structure_graph(anon)))
        limited[example_id] = PredictionBundle(
            example_id=example_id,
            beams=beams,
            repaired=bundle.repaired[:beam_limit],
            ls_union=union,
        )
    return limited


def cmd_prompt(args) -> int:
    cfg = _run_config_from_args(args, _load_config_file(args))
    bundle = IndexBundle.load(args.index)
    tests = [] if cfg.train_mode else _load_tests(bundle, args.test)
    selections = _read_jsonl(args.selections)
    prompts = stage_prompt(bundle, tests, selections, cfg)
    _write_jsonl(args.out, prompts)
    print(f"formatted {len(prompts)} prompts -> {args.out}")
    return EXIT_OK


def cmd_infer(args) -> int:
    cfg = _run_config_from_args(args, _load_config_file(args))
    bundle = IndexBundle.load(args.index)
    tests = _load_tests(bundle, args.test) if cfg.mock else []
    prompts = _read_jsonl(args.prompts)
    endpoint = None
    if not cfg.mock:
        endpoint = EndpointConfig(
            base_url=args.base_url or "",
            model=args.model or "",
            max_retries=args.max_retries,
            timeout=args.timeout,
        )
    request_defaults = CompletionRequest(
        prompt="",
        max_tokens=args.max_tokens,
        temperature=args.temperature,
        stop=tuple(args.stop) if args.stop else CompletionRequest(prompt="").stop,
    )
    predictions = stage_infer(bundle, tests, prompts, cfg, endpoint, request_defaults)
    _write_jsonl(args.out, predictions)
    print(f"inferred {len(predictions)} predictions -> {args.out}")
    return EXIT_OK


def cmd_eval(args) -> int:
    cfg = _run_config_from_args(args, _load_config_file(args))
    bundle = IndexBundle.load(args.index)
    tests = _load_tests(bundle, args.test)
    prompts = _read_jsonl(args.prompts)
    predictions = _read_jsonl(args.predictions)
    report, records = stage_eval(bundle, tests, prompts, predictions, cfg)
    Path(args.out).write_text(
        json.dumps(report, sort_keys=True, indent=2), encoding="utf-8"
    )
    if args.csv:
        _write_csv(args.csv, records)
    if args.per_record:
        _write_jsonl(args.per_record, [r.to_dict() for r in records])
    accuracy = report.get("accuracy", 0.0)
    print(f"evaluated {report.get('count', 0)} predictions, accuracy {accuracy:.3f}")
    return EXIT_OK if accuracy >= 1.0 else EXIT_EVAL_FAILURES


def cmd_run(args) -> int:
    cfg = _run_config_from_args(args, _load_config_file(args))
    _validate_select_inputs(cfg, args)
    workdir = Path(args.workdir)
    workdir.mkdir(parents=True, exist_ok=True)
    bundle = IndexBundle.load(args.index)
    tests = [] if cfg.train_mode else _load_tests(bundle, args.test)
    bundles = (
        load_predictions(args.predictions, bundle.corpus.dialect)
        if getattr(args, "predictions", None)
        else {}
    )
    if cfg.beam_limit is not None:
        bundles = _limit_beams(bundles, cfg.beam_limit, bundle.corpus.dialect)

    selections = stage_select(bundle, tests, cfg, bundles)
    _write_jsonl(workdir / "selections.jsonl", selections)
    prompts = stage_prompt(bundle, tests, selections, cfg)
    _write_jsonl(workdir / "prompts.jsonl", prompts)
    if cfg.train_mode:
        print(f"wrote training prompts -> {workdir / 'prompts.jsonl'}")
        return EXIT_OK
    endpoint = None
    if not cfg.mock:
        endpoint = EndpointConfig(
            base_url=args.base_url or "",
            model=args.model or "",
            max_retries=args.max_retries,
            timeout=args.timeout,
        )
    predictions = stage_infer(bundle, tests, prompts, cfg, endpoint)
    _write_jsonl(workdir / "predictions.jsonl", predictions)
    report, records = stage_eval(bundle, tests, prompts, predictions, cfg)
    (workdir / "report.json").write_text(
        json.dumps(report, sort_keys=True, indent=2), encoding="utf-8"
    )
    _write_jsonl(workdir / "records.jsonl", [r.to_dict() for r in records])
    accuracy = report.get("accuracy", 0.0)
    print(
        f"run complete: accuracy {accuracy:.3f} over {report.get('count', 0)} "
        f"examples -> {workdir / 'report.json'}"
    )
    return EXIT_OK if accuracy >= 1.0 else EXIT_EVAL_FAILURES


def cmd_gen_fixture(args) -> int:
    grammar = GrammarConfig.from_json(args.grammar) if args.grammar else None
    fixture = gen_fixture(
        grammar=grammar,
        n_train=args.n_train,
        n_test=args.n_test,
        split=args.split,
        seed=args.seed,
    )
    paths = write_fixture(fixture, args.out_dir)
    print(
        f"generated {args.n_train} train / {args.n_test} test examples "
        f"({args.split} split) -> {paths['train'].parent}"
    )
    return EXIT_OK


# --- argument parsing ------------------------------------------------------


def _add_shared_args(parser):
    parser.add_argument("--strategy", choices=STRATEGIES, default=None)
    parser.add_argument("--k", type=int, default=None)
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--jobs", type=int, default=None)


def _add_pool_args(parser):
    parser.add_argument("--retriever", default=None)
    parser.add_argument("--predictions", default=None)
    parser.add_argument("--oracle", action="store_const", const=True, default=None)
    parser.add_argument("--max-ls-size", dest="max_ls_size", type=int, default=None)
    parser.add_argument("--beam-limit", dest="beam_limit", type=int, default=None)
    parser.add_argument(
        "--candidate-pool-size", dest="candidate_pool_size", type=int, default=None
    )
    parser.add_argument(
        "--train-mode", dest="train_mode", action="store_const", const=True, default=None
    )
    parser.add_argument("--fallback", choices=("cover-utt", "none"), default=None)


def _add_prompt_args(parser):
    parser.add_argument(
        "--order", choices=("ascending-score", "shuffled"), default=None
    )
    parser.add_argument(
        "--programs-only",
        dest="programs_only",
        action="store_const",
        const=True,
        default=None,
    )
    parser.add_argument("--budget", type=int, default=None)


def _add_infer_args(parser):
    parser.add_argument("--mock", action="store_const", const=True, default=None)
    parser.add_argument(
        "--mock-threshold", dest="mock_threshold", type=int, default=None
    )
    parser.add_argument("--base-url", dest="base_url", default=None)
    parser.add_argument("--model", default=None)
    parser.add_argument("--max-tokens", dest="max_tokens", type=int, default=256)
    parser.add_argument("--temperature", type=float, default=0.0)
    parser.add_argument("--stop", action="append", default=None)
    parser.add_argument("--max-retries", dest="max_retries", type=int, default=5)
    parser.add_argument("--timeout", type=float, default=30.0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="demoselect",
        description="Select diverse demonstrations for in-context semantic parsing.",
    )
    parser.add_argument("--config", default=None, help="JSON config file of defaults")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("index", help="preprocess corpora and build retrieval indexes")
    p.add_argument("--corpus", action="append", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--dialect", default="default")
    p.add_argument("--value-parents", dest="value_parents", default="")
    p.set_defaults(func=cmd_index)

    p = sub.add_parser("gen-fixture", help="generate a synthetic corpus")
    p.add_argument("--out-dir", dest="out_dir", required=True)
    p.add_argument("--n-train", dest="n_train", type=int, default=200)
    p.add_argument("--n-test", dest="n_test", type=int, default=50)
    p.add_argument("--split", choices=("iid", "template", "held-out-ls"),
                   default="held-out-ls")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--grammar", default=None)
    p.set_defaults(func=cmd_gen_fixture)

    p = sub.add_parser("select", help="choose demonstrations per test example")
    p.add_argument("--index", required=True)
    p.add_argument("--test", default=None)
    p.add_argument("--out", required=True)
    _add_shared_args(p)
    _add_pool_args(p)
    p.set_defaults(func=cmd_select)

    p = sub.add_parser("prompt", help="render prompts from selections")
    p.add_argument("--index", required=True)
    p.add_argument("--test", default=None)
    p.add_argument("--selections", required=True)
    p.add_argument("--out", required=True)
    _add_shared_args(p)
    _add_pool_args(p)
    _add_prompt_args(p)
    p.set_defaults(func=cmd_prompt)

    p = sub.add_parser("infer", help="complete prompts via endpoint or mock")
    p.add_argument("--index", required=True)
    p.add_argument("--test", default=None)
    p.add_argument("--prompts", required=True)
    p.add_argument("--out", required=True)
    _add_shared_args(p)
    _add_infer_args(p)
    p.set_defaults(func=cmd_infer)

    p = sub.add_parser("eval", help="score predictions and write a report")
    p.add_argument("--index", required=True)
    p.add_argument("--test", default=None)
    p.add_argument("--prompts", required=True)
    p.add_argument("--predictions", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--csv", default=None)
    p.add_argument("--per-record", dest="per_record", default=None)
    _add_shared_args(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("run", help="select, prompt, infer and eval in one go")
    p.add_argument("--index", required=True)
    p.add_argument("--test", default=None)
    p.add_argument("--workdir", required=True)
    _add_shared_args(p)
    _add_pool_args(p)
    _add_prompt_args(p)
    _add_infer_args(p)
    p.set_defaults(func=cmd_run)

    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (TransportError, ApiError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_TRANSPORT
    except (
        ConfigError,
        CorpusError,
        IoError,
        IndexVersionError,
        GenerationError,
    ) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DemoselectError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
