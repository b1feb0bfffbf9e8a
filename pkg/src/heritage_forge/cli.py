"""``heritage-forge`` command line: convert, annotate, validate, query, stats.

Data goes to files or standard output, logs to standard error. Exit status
is 0 when no error-level event occurred, 1 when validation found errors (or
warnings under ``--strict``) and 2 for unreadable or malformed input.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import sys
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from . import __version__
from .enrich import default_policy, enrich_graph, load_thesaurus
from .errors import HeritageForgeError
from .mapping import HASH_ALGORITHM, RuleSet, load_rules, map_records
from .ontology import Ontology, ValidationReport, load_ontology, validate_graph
from .provenance import REIFICATION, annotate_all, parse_predictions
from .records import Record, load_records
from .store import Graph, execute, parse_ntriples, parse_query, serialize_ntriples, serialize_turtle
from .store.query import QueryError
from .terms import RDF_TYPE, REPLACED_TERM

logger = logging.getLogger("heritage_forge")

DEFAULT_BASE = "https://example.org/heritage/"
BASE_ENV = "HERITAGE_FORGE_BASE"
DATA_DIR = Path(__file__).parent / "data"

EXIT_OK, EXIT_INVALID, EXIT_INPUT = 0, 1, 2


@dataclass
class PipelineConfig:
    base_namespace: str = DEFAULT_BASE
    ontology_path: str | None = None
    rule_paths: list[str] = field(default_factory=list)
    thesaurus_path: str | None = None
    default_institution: str | None = None
    language: str | None = None
    workers: int = 1

    def __post_init__(self) -> None:
        if not self.base_namespace.endswith("/"):
            raise ValueError(f"base namespace must end with '/': {self.base_namespace!r}")
        if self.workers < 1:
            raise ValueError("workers must be at least 1")


_CONFIG_KEYS = {f for f in PipelineConfig.__dataclass_fields__}


def resolve_config(args: argparse.Namespace, environ: dict[str, str] | None = None) -> PipelineConfig:
    """Command-line flags win over the environment, which wins over the config file."""
    environ = os.environ if environ is None else environ
    values: dict = {}
    if args.config:
        with open(args.config, encoding="utf-8") as fh:
            try:
                doc = json.load(fh)
            except json.JSONDecodeError as exc:
                raise HeritageForgeError(f"{args.config}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
        if not isinstance(doc, dict):
            raise HeritageForgeError(f"{args.config}: config must be a JSON object")
        unknown = set(doc) - _CONFIG_KEYS
        if unknown:
            raise HeritageForgeError(f"{args.config}: unknown config keys {sorted(unknown)}")
        values.update(doc)
    if environ.get(BASE_ENV):
        values["base_namespace"] = environ[BASE_ENV]
    for key, attr in (("base_namespace", "base"), ("ontology_path", "ontology"),
                      ("default_institution", "institution"), ("workers", "workers"),
                      ("thesaurus_path", "thesaurus"), ("language", "language")):
        val = getattr(args, attr, None)
        if val is not None:
            values[key] = val
    if getattr(args, "rules", None):
        values["rule_paths"] = list(args.rules)
    try:
        return PipelineConfig(**values)
    except (TypeError, ValueError) as exc:
        raise HeritageForgeError(f"configuration: {exc}") from exc


def resolve_data_path(name: str, suffixes: Sequence[str] = ("",)) -> Path:
    """A path as given, else a file shipped with the package (e.g. ``versailles``)."""
    p = Path(name)
    if p.exists():
        return p
    for suffix in suffixes:
        shipped = DATA_DIR / f"{name}{suffix}"
        if shipped.is_file():
            return shipped
    raise HeritageForgeError(f"{name}: no such file (nor a shipped data file of that name)")


def _digest(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def export_header(base: str, inputs: Sequence[Path]) -> str:
    lines = [
        f"# generator: heritage-forge {__version__}",
        f"# hash: {HASH_ALGORITHM}",
        f"# base: {base}",
        *(f"# input: {p.name} sha256:{_digest(p)}" for p in inputs),
        f"# traceability-marker: <{REPLACED_TERM}>",
        f"# predictions: {REIFICATION}",
    ]
    return "\n".join(lines) + "\n"


def _write(text: str, out: str | None) -> None:
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        Path(out).write_text(text, encoding="utf-8")


def _read_graph(path: str) -> Graph:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except UnicodeDecodeError as exc:
        raise HeritageForgeError(f"{path}: not UTF-8 ({exc.reason} at byte {exc.start})") from exc
    return parse_ntriples(text, source=path)


def _prefixes(ont: Ontology) -> dict[str, str]:
    return {k: v for k, v in ont.namespaces.items() if k.isidentifier()}


def _serialize(g: Graph, fmt: str, header: str, ont: Ontology) -> str:
    if fmt == "ttl":
        return header + "\n" + serialize_turtle(g, _prefixes(ont))
    return header + serialize_ntriples(g)


def _report(report: ValidationReport, strict: bool, stream=None) -> int:
    stream = stream or sys.stderr
    for v in report.violations:
        print(f"{v.severity}\t{v.kind.value}\t{v.message}", file=stream)
    print(report.summary(), file=stream)
    if report.errors or (strict and report.warnings):
        return EXIT_INVALID
    return EXIT_OK


def _map_chunk(args: tuple[RuleSet, list[Record], str, Ontology]) -> Graph:
    rules, records, base, ont = args
    return map_records(rules, records, base, ont)[0]


def _map_parallel(rules: RuleSet, records: list[Record], base: str, ont: Ontology,
                  workers: int) -> Graph:
    if workers <= 1 or len(records) < 2 * workers:
        g, logs = map_records(rules, records, base, ont)
        for log in logs:
            for entry in log.fallbacks:
                logger.info("record %s: field %r has no rule; kept as an observation note",
                            log.record[1], entry.label)
        return g
    size = -(-len(records) // workers)
    chunks = [(rules, records[i:i + size], base, ont) for i in range(0, len(records), size)]
    out = Graph()
    with ProcessPoolExecutor(max_workers=workers) as pool:
        for part in pool.map(_map_chunk, chunks):
            out.update(part)
    return out


def cmd_convert(args: argparse.Namespace, cfg: PipelineConfig) -> int:
    ont = load_ontology(cfg.ontology_path)
    if not cfg.rule_paths:
        raise HeritageForgeError("convert needs at least one rule file (-r)")
    rule_files = [resolve_data_path(r, (".rules.json", ".json")) for r in cfg.rule_paths]
    rules = load_rules(rule_files, ont)
    inputs = [Path(p) for p in args.records]
    records: list[Record] = []
    for p in inputs:
        records.extend(load_records(p, cfg.default_institution))
    logger.info("mapping %d record(s) with %d rule(s)", len(records), len(rules))
    g = _map_parallel(rules, records, cfg.base_namespace, ont, cfg.workers)

    used = inputs + rule_files
    if cfg.thesaurus_path:
        th_path = resolve_data_path(cfg.thesaurus_path, (".json",))
        used.append(th_path)
        g, elog = enrich_graph(g, load_thesaurus(th_path), default_policy(ont))
        logger.info("enrichment: %d matched, %d ambiguous, %d unmatched",
                    len(elog.matched), len(elog.ambiguous), len(elog.unmatched))
    status = _report(validate_graph(ont, g), args.strict)
    _write(_serialize(g, args.format, export_header(cfg.base_namespace, used), ont), args.output)
    return status


def cmd_annotate(args: argparse.Namespace, cfg: PipelineConfig) -> int:
    ont = load_ontology(cfg.ontology_path)
    g = _read_graph(args.graph)
    preds = parse_predictions(Path(args.predictions))
    used = [Path(args.graph), Path(args.predictions)]
    th = None
    if cfg.thesaurus_path:
        th_path = resolve_data_path(cfg.thesaurus_path, (".json",))
        used.append(th_path)
        th = load_thesaurus(th_path)
    out, frags = annotate_all(g, preds, cfg.base_namespace, th, ont)
    logger.info("annotated %d prediction(s) in %d activit(ies)", len(frags),
                len({f.activity for f in frags}))
    status = _report(validate_graph(ont, out), args.strict)
    _write(_serialize(out, args.format, export_header(cfg.base_namespace, used), ont), args.output)
    return status


def cmd_validate(args: argparse.Namespace, cfg: PipelineConfig) -> int:
    ont = load_ontology(cfg.ontology_path)
    return _report(validate_graph(ont, _read_graph(args.graph)), args.strict, sys.stdout)


def cmd_query(args: argparse.Namespace, cfg: PipelineConfig) -> int:
    g = _read_graph(args.graph)
    text = Path(args.query).read_text(encoding="utf-8")
    try:
        q = parse_query(text)
    except QueryError as exc:
        raise HeritageForgeError(f"{args.query}:{exc}", code=exc.code) from exc
    sys.stdout.write(execute(g, q).to_tsv())
    return EXIT_OK


def graph_stats(g: Graph) -> dict:
    triples = g.snapshot()
    per_class = Counter(o for _, p, o in triples if p == RDF_TYPE)
    return {
        "triples": len(triples),
        "subjects": len({t.subject for t in triples}),
        "predicates": len({t.predicate for t in triples}),
        "objects": len({t.object for t in triples}),
        "classes": {str(c): n for c, n in sorted(per_class.items(), key=lambda kv: (-kv[1], kv[0]))},
    }


def cmd_stats(args: argparse.Namespace, cfg: PipelineConfig) -> int:
    s = graph_stats(_read_graph(args.graph))
    if args.json:
        print(json.dumps(s, indent=2, ensure_ascii=False))
        return EXIT_OK
    for key in ("triples", "subjects", "predicates", "objects"):
        print(f"{key}\t{s[key]}")
    for cls, n in s["classes"].items():
        print(f"class\t{cls}\t{n}")
    return EXIT_OK


class _JsonFormatter(logging.Formatter):
    def format(self, record: logging.LogRecord) -> str:
        return json.dumps({"level": record.levelname, "logger": record.name,
                           "message": record.getMessage()}, ensure_ascii=False)


def _setup_logging(json_mode: bool, verbose: int) -> None:
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(_JsonFormatter() if json_mode else logging.Formatter("%(levelname)s: %(message)s"))
    root = logging.getLogger("heritage_forge")
    root.handlers[:] = [handler]
    root.setLevel(logging.DEBUG if verbose > 1 else logging.INFO if verbose else logging.WARNING)
    root.propagate = False


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--base", help=f"base namespace for minted IRIs (env {BASE_ENV})")
    common.add_argument("--ontology", help="ontology definition JSON (default: built-in)")
    common.add_argument("--config", help="JSON config file with PipelineConfig keys")
    common.add_argument("--strict", action="store_true", help="treat warnings as errors")
    common.add_argument("--log-json", action="store_true", help="JSON log lines on standard error")
    common.add_argument("-v", "--verbose", action="count", default=0)

    out_fmt = argparse.ArgumentParser(add_help=False)
    out_fmt.add_argument("-o", "--output", help="output file (default: standard output)")
    out_fmt.add_argument("--format", choices=("nt", "ttl"), default="nt")

    parser = argparse.ArgumentParser(prog="heritage-forge", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("convert", parents=[common, out_fmt], help="map records to RDF")
    p.add_argument("records", nargs="+")
    p.add_argument("-r", "--rules", action="append", help="rule file or shipped rule name (repeatable)")
    p.add_argument("-t", "--thesaurus", help="thesaurus JSON for enrichment")
    p.add_argument("--institution", help="institution id for records that lack one")
    p.add_argument("--language", help="(reserved) default language tag")
    p.add_argument("--workers", type=int, help="parallel mapping processes")
    p.set_defaults(func=cmd_convert)

    p = sub.add_parser("annotate", parents=[common, out_fmt], help="add prediction provenance")
    p.add_argument("graph")
    p.add_argument("predictions")
    p.add_argument("-t", "--thesaurus", help="thesaurus JSON for resolving predicted values")
    p.set_defaults(func=cmd_annotate)

    p = sub.add_parser("validate", parents=[common], help="check a graph against the ontology")
    p.add_argument("graph")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("query", parents=[common], help="run a conjunctive query, print TSV")
    p.add_argument("graph")
    p.add_argument("-q", "--query", required=True, help="query file")
    p.set_defaults(func=cmd_query)

    p = sub.add_parser("stats", parents=[common], help="graph statistics")
    p.add_argument("graph")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_stats)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    _setup_logging(args.log_json, args.verbose)
    try:
        cfg = resolve_config(args)
        return args.func(args, cfg)
    except HeritageForgeError as exc:
        logger.error("%s", exc)
        for prob in exc.problems[1:]:
            logger.error("  %s", prob)
        return EXIT_INPUT
    except OSError as exc:
        logger.error("%s: %s", exc.filename or "", exc.strerror or exc)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
