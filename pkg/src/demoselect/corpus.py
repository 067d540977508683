"""Dataset ingestion, cached structure sets, retrieval indexes, persistence.

Corpora are JSONL files with ``{"id"?, "utterance", "program", "split"?}``
lines. Every loaded example caches its anonymized program, template, token
list, symbol sequence, and local-structure counts so that selection and
evaluation never re-derive them.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

from .errors import CorpusError, IndexVersionError, IoError, ParseError
from .programs import (
    DEFAULT_DIALECT,
    DialectConfig,
    anonymize,
    parse_program,
    render,
    repair_parentheses,
    to_template,
)
from .retrieval import Bm25Index, LsTfidfVector, ls_tfidf_vectors, tokenize_utterance
from .structures import build_structure_graph, count_local_structures, ls_size

logger = logging.getLogger(__name__)

INDEX_MAGIC = "demoselect-index"
INDEX_VERSION = 1


@dataclass
class Example:
    id: str
    utterance: str
    program: str
    anonymized: str
    template: str
    ls_counts: dict[str, int]
    split: str = "train"
    utt_tokens: list[str] = field(default_factory=list)
    symbol_seq: list[str] = field(default_factory=list)

    @property
    def ls_set(self) -> set[str]:
        return set(self.ls_counts)


def make_example(
    example_id: str,
    utterance: str,
    program: str,
    split: str = "train",
    dialect: DialectConfig = DEFAULT_DIALECT,
) -> Example:
    ast = parse_program(program, dialect)
    anon = anonymize(ast)
    counts = count_local_structures(build_structure_graph(anon))
    return Example(
        id=example_id,
        utterance=utterance,
        program=program,
        anonymized=render(anon),
        template=to_template(ast).text,
        ls_counts=dict(counts),
        split=split,
        utt_tokens=tokenize_utterance(utterance),
        symbol_seq=anon.symbol_sequence(),
    )


@dataclass
class Corpus:
    examples: list[Example]
    dialect: DialectConfig = DEFAULT_DIALECT
    failures: list[dict] = field(default_factory=list)

    def __post_init__(self):
        self.by_id = {ex.id: ex for ex in self.examples}

    def __len__(self) -> int:
        return len(self.examples)

    def split(self, name: str) -> list[Example]:
        return [ex for ex in self.examples if ex.split == name]


def load_examples(
    path: str | Path,
    dialect: DialectConfig = DEFAULT_DIALECT,
    default_split: str = "train",
) -> Corpus:
    """Load and preprocess a JSONL corpus.

    Individual bad lines are collected, not fatal; more than 10% bad lines
    raises :class:`CorpusError`.
    """
    path = Path(path)
    try:
        raw = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise IoError(f"cannot read corpus file {path}: {exc}") from exc
    examples: list[Example] = []
    failures: list[dict] = []
    seen_ids: set[str] = set()
    lines = [ln for ln in raw.splitlines() if ln.strip()]
    for lineno, line in enumerate(lines, start=1):
        try:
            record = json.loads(line)
            utterance = record["utterance"]
            program = record["program"]
            example_id = str(record.get("id") or f"ex{lineno:05d}")
            if example_id in seen_ids:
                raise ValueError(f"duplicate example id {example_id!r}")
            example = make_example(
                example_id,
                utterance,
                program,
                split=record.get("split", default_split),
                dialect=dialect,
            )
        except (ValueError, KeyError, ParseError) as exc:
            failures.append({"line": lineno, "error": str(exc)})
            continue
        seen_ids.add(example_id)
        examples.append(example)
    if not lines:
        logger.warning("corpus file %s is empty", path)
    if lines and len(failures) > 0.1 * len(lines):
        raise CorpusError(
            f"{len(failures)} of {len(lines)} corpus lines failed to load",
            failures=failures,
        )
    return Corpus(examples=examples, dialect=dialect, failures=failures)


@dataclass
class PredictionBundle:
    """Beam candidates for one test example, repaired and structure-cached."""

    example_id: str
    beams: list[str]
    repaired: list[bool]
    ls_union: set[str] = field(default_factory=set)

    @property
    def beam_count(self) -> int:
        return len(self.beams)


def load_predictions(
    path: str | Path, dialect: DialectConfig = DEFAULT_DIALECT
) -> dict[str, PredictionBundle]:
    """Load beam-candidate JSONL ``{"id": ..., "beams": [...]}``.

    Beams get their trailing parentheses repaired; unrepairable beams are
    dropped, possibly leaving an empty bundle (empty structure set).
    """
    path = Path(path)
    try:
        raw = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise IoError(f"cannot read predictions file {path}: {exc}") from exc
    bundles: dict[str, PredictionBundle] = {}
    for lineno, line in enumerate(raw.splitlines(), start=1):
        if not line.strip():
            continue
        record = json.loads(line)
        example_id = str(record["id"])
        beams: list[str] = []
        repaired: list[bool] = []
        union: set[str] = set()
        for beam in record.get("beams", []):
            result = repair_parentheses(beam, dialect)
            if not result.ok:
                logger.warning(
                    "dropping unrepairable beam for %s (line %d)", example_id, lineno
                )
                continue
            anon = anonymize(parse_program(result.text, dialect))
            counts = count_local_structures(build_structure_graph(anon))
            beams.append(result.text)
            repaired.append(result.repaired)
            union |= set(counts)
        bundles[example_id] = PredictionBundle(
            example_id=example_id, beams=beams, repaired=repaired, ls_union=union
        )
    return bundles


class IndexBundle:
    """All retrieval state for a corpus: posting lists, BM25, tf-idf vectors.

    Only the training split is indexed as the selection pool; queries come
    from test utterances or predicted symbols. The bundle persists to a
    versioned JSON file and is rebuilt deterministically on load.
    """

    def __init__(self, corpus: Corpus, k1: float = 1.2, b: float = 0.75):
        self.corpus = corpus
        self.k1 = k1
        self.b = b
        self.pool = {ex.id: ex for ex in corpus.split("train")}
        self.ls_postings: dict[str, list[str]] = {}
        self.token_postings: dict[str, list[str]] = {}
        for ex in sorted(self.pool.values(), key=lambda e: e.id):
            for canonical in ex.ls_counts:
                self.ls_postings.setdefault(canonical, []).append(ex.id)
            for token in set(ex.utt_tokens):
                self.token_postings.setdefault(token, []).append(ex.id)
        self.bm25_utterance = Bm25Index(
            {ex.id: ex.utt_tokens for ex in self.pool.values()}, k1=k1, b=b
        )
        self.bm25_symbols = Bm25Index(
            {ex.id: ex.symbol_seq for ex in self.pool.values()}, k1=k1, b=b
        )
        self.tfidf: dict[str, LsTfidfVector] = ls_tfidf_vectors(
            {ex.id: ex.ls_counts for ex in self.pool.values()}
        )

    def training_ls_union(self, max_size: int | None = None) -> set[str]:
        union: set[str] = set()
        for ex in self.pool.values():
            if max_size is None:
                union |= ex.ls_set
            else:
                union |= {c for c in ex.ls_counts if ls_size(c) <= max_size}
        return union

    def stats(self) -> dict:
        pool = list(self.pool.values())
        return {
            "examples": len(self.corpus),
            "train": len(pool),
            "test": len(self.corpus.split("test")),
            "unique_templates": len({ex.template for ex in pool}),
            "unique_ls": len(self.ls_postings),
        }

    def save(self, path: str | Path) -> None:
        payload = {
            "magic": INDEX_MAGIC,
            "version": INDEX_VERSION,
            "k1": self.k1,
            "b": self.b,
            "dialect": self.corpus.dialect.to_dict(),
            "examples": [
                {
                    "id": ex.id,
                    "utterance": ex.utterance,
                    "program": ex.program,
                    "anonymized": ex.anonymized,
                    "template": ex.template,
                    "ls_counts": ex.ls_counts,
                    "split": ex.split,
                }
                for ex in self.corpus.examples
            ],
        }
        try:
            Path(path).write_text(
                json.dumps(payload, sort_keys=True), encoding="utf-8"
            )
        except OSError as exc:
            raise IoError(f"cannot write index file {path}: {exc}") from exc

    @classmethod
    def load(cls, path: str | Path) -> "IndexBundle":
        try:
            raw = Path(path).read_text(encoding="utf-8")
        except OSError as exc:
            raise IoError(f"cannot read index file {path}: {exc}") from exc
        try:
            payload = json.loads(raw)
        except ValueError as exc:
            raise IoError(f"index file {path} is not valid JSON: {exc}") from exc
        if payload.get("magic") != INDEX_MAGIC:
            raise IndexVersionError(f"{path} is not an index file")
        if payload.get("version") != INDEX_VERSION:
            raise IndexVersionError(
                f"index version {payload.get('version')} unsupported"
            )
        dialect = DialectConfig.from_dict(payload["dialect"])
        examples = [
            Example(
                id=rec["id"],
                utterance=rec["utterance"],
                program=rec["program"],
                anonymized=rec["anonymized"],
                template=rec["template"],
                ls_counts=rec["ls_counts"],
                split=rec["split"],
                utt_tokens=tokenize_utterance(rec["utterance"]),
                symbol_seq=anonymize(
                    parse_program(rec["program"], dialect)
                ).symbol_sequence(),
            )
            for rec in payload["examples"]
        ]
        corpus = Corpus(examples=examples, dialect=dialect)
        return cls(corpus, k1=payload["k1"], b=payload["b"])


def build_indexes(corpus: Corpus, k1: float = 1.2, b: float = 0.75) -> IndexBundle:
    return IndexBundle(corpus, k1=k1, b=b)
