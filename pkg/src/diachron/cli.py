"""Command-line front end: archive lifecycle, querying, and benchmarks.

The archive lives in one N-Quads file named by ``--archive``; every
mutating subcommand rewrites it on success.  Data goes to stdout,
diagnostics to stderr.  Exit codes: 0 ok, 1 user error, 2 internal.
"""

from __future__ import annotations

import argparse
import json
import sys
from typing import Dict, List, Optional

from .archive import Archive, DELTA, FULL
from .changes import compute_change_set, serialize_change_set
from .evaluator import evaluate
from .ntriples import parse_ntriples, parse_term, serialize_ntriples
from .ql import has_errors, parse_query, validate
from .store import QuadStore, load, persist
from .terms import Term, iri
from .translate import translate
from .vocab import BUILTIN_PREFIXES


class _ArgumentParser(argparse.ArgumentParser):
    # argparse exits 2 on usage problems; those are user errors here.
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _build_parser() -> _ArgumentParser:
    p = _ArgumentParser(prog="diachron", description=__doc__.splitlines()[0])
    p.add_argument("--archive", default="archive.nq", metavar="PATH",
                   help="archive file (N-Quads), default %(default)s")
    p.add_argument("--prefix", action="append", default=[], metavar="PFX=IRI",
                   help="extra prefix binding; may repeat")
    sub = p.add_subparsers(dest="command", metavar="COMMAND")

    sp = sub.add_parser("init", help="create an empty archive file")
    sp.set_defaults(func=_cmd_init)

    sp = sub.add_parser("load", help="ingest one version from an N-Triples file")
    sp.add_argument("--dataset", required=True, metavar="IRI")
    sp.add_argument("--version", metavar="IRI", help="minted from the ordinal if omitted")
    sp.add_argument("--date", metavar="YYYY-MM-DD")
    sp.add_argument("--policy", choices=("full", "delta"), default="full")
    sp.add_argument("file", metavar="FILE")
    sp.set_defaults(func=_cmd_load)

    sp = sub.add_parser("list", help="list datasets or versions")
    sp.add_argument("what", nargs="?", choices=("datasets", "versions"),
                    default="datasets")
    sp.add_argument("--dataset", metavar="IRI",
                    help="required for versions unless only one dataset exists")
    sp.set_defaults(func=_cmd_list)

    sp = sub.add_parser("export", help="write one version as N-Triples")
    sp.add_argument("--version", required=True, metavar="IRI")
    sp.set_defaults(func=_cmd_export)

    sp = sub.add_parser("diff", help="change set between two versions of a dataset")
    sp.add_argument("--old", required=True, metavar="IRI")
    sp.add_argument("--new", required=True, metavar="IRI")
    sp.set_defaults(func=_cmd_diff)

    sp = sub.add_parser("query", help="evaluate a query against the archive")
    _query_text_flags(sp)
    sp.add_argument("--format", choices=("tsv", "json"), default="tsv")
    sp.set_defaults(func=_cmd_query)

    sp = sub.add_parser("translate", help="rewrite a query to plain SPARQL")
    _query_text_flags(sp)
    sp.set_defaults(func=_cmd_translate)

    sp = sub.add_parser("resource", help="named query definitions")
    sp.add_argument("action", choices=("define", "materialize"))
    sp.add_argument("name", metavar="IRI")
    _query_text_flags(sp, required=False)
    sp.set_defaults(func=_cmd_resource)

    sp = sub.add_parser("bench", help="run the timing suite")
    sp.add_argument("--profile", required=True, metavar="NAME")
    sp.add_argument("--reps", type=int, default=10)
    sp.add_argument("--out", metavar="CSV", help="write records here instead of stdout")
    sp.add_argument("--operations", metavar="OP,OP",
                    help="subset of load,retrieve,query-suite,preprocess")
    sp.set_defaults(func=_cmd_bench)
    return p


def _query_text_flags(sp, required: bool = True) -> None:
    group = sp.add_mutually_exclusive_group(required=required)
    group.add_argument("-e", "--expression", metavar="TEXT", help="query text inline")
    group.add_argument("-f", "--file", dest="query_file", metavar="FILE",
                       help="read query text from a file")


def _prefixes(args) -> Dict[str, str]:
    out = dict(BUILTIN_PREFIXES)
    for binding in args.prefix:
        pfx, sep, base = binding.partition("=")
        if not sep or not pfx:
            raise ValueError(f"--prefix wants PFX=IRI, got {binding!r}")
        out[pfx] = base.strip("<>")
    return out


def _term(text: str, prefixes: Dict[str, str]) -> Term:
    """IRI from CLI text: <bracketed>, a known pname, or a bare name."""
    if text.startswith("<") and text.endswith(">"):
        return parse_term(text)
    head, sep, tail = text.partition(":")
    if sep and head in prefixes:
        return iri(prefixes[head] + tail)
    return iri(text)


def _query_text(args) -> str:
    if args.expression is not None:
        return args.expression
    if args.query_file is None:
        raise ValueError("give the query with -e TEXT or -f FILE")
    with open(args.query_file, "r", encoding="utf-8") as fh:
        return fh.read()


def _open(args) -> Archive:
    import os

    if not os.path.exists(args.archive):
        raise ValueError(f"no archive at {args.archive!r}; run init first")
    return Archive(load(args.archive))


def _parsed(args, archive: Optional[Archive]):
    q = parse_query(_query_text(args), prefixes=_prefixes(args))
    diags = validate(q, archive)
    for d in diags:
        print(d.render(), file=sys.stderr)
    if has_errors(diags):
        raise SystemExit(1)
    return q


def _cmd_init(args) -> int:
    import os

    if os.path.exists(args.archive):
        raise ValueError(f"{args.archive!r} already exists")
    persist(QuadStore(), args.archive)
    return 0


def _cmd_load(args) -> int:
    import os

    prefixes = _prefixes(args)
    store = load(args.archive) if os.path.exists(args.archive) else QuadStore()
    archive = Archive(store)
    with open(args.file, "r", encoding="utf-8") as fh:
        source = parse_ntriples(fh.read())
    version = archive.ingest_version(
        _term(args.dataset, prefixes),
        source,
        version=None if args.version is None else _term(args.version, prefixes),
        date=args.date,
        policy=FULL if args.policy == "full" else DELTA,
    )
    persist(store, args.archive)
    print(version.iri.ntriples())
    return 0


def _cmd_list(args) -> int:
    archive = _open(args)
    if args.what == "datasets":
        print("dataset\tversions")
        for ds in archive.datasets():
            print(f"{ds.ntriples()}\t{len(archive.versions(ds))}")
        return 0
    prefixes = _prefixes(args)
    if args.dataset is not None:
        ds = _term(args.dataset, prefixes)
    else:
        candidates = archive.datasets()
        if len(candidates) != 1:
            raise ValueError("--dataset is required when several datasets exist")
        ds = candidates[0]
    print("version\tordinal\tpolicy\tdate\trecords\tattributes")
    for vi in archive.versions(ds):
        date = "" if vi.date is None else vi.date
        print(f"{vi.iri.ntriples()}\t{vi.ordinal}\t{vi.policy}\t{date}"
              f"\t{vi.record_count}\t{vi.attribute_count}")
    return 0


def _cmd_export(args) -> int:
    archive = _open(args)
    version = _term(args.version, _prefixes(args))
    sys.stdout.write(serialize_ntriples(archive.export_version(version)))
    return 0


def _cmd_diff(args) -> int:
    archive = _open(args)
    prefixes = _prefixes(args)
    old = _term(args.old, prefixes)
    new = _term(args.new, prefixes)
    if archive.version_info(old).dataset != archive.version_info(new).dataset:
        raise ValueError("diff wants two versions of the same dataset")
    old_rs, old_ss = archive.materialize_sets(old)
    new_rs, new_ss = archive.materialize_sets(new)
    cs = compute_change_set(old_rs.union(old_ss), new_rs.union(new_ss), old, new)
    sys.stdout.write(serialize_ntriples(serialize_change_set(cs)))
    return 0


def _cmd_query(args) -> int:
    archive = _open(args)
    table = evaluate(_parsed(args, archive), archive)
    if args.format == "tsv":
        sys.stdout.write(table.tsv())
    else:
        json.dump(table.json_obj(), sys.stdout, indent=2)
        sys.stdout.write("\n")
    return 0


def _cmd_translate(args) -> int:
    archive = _open(args)
    st = translate(_parsed(args, archive), archive)
    for version in st.materialize:
        # comment lines keep the output a single valid SPARQL document
        print(f"# materialize {version.ntriples()}")
    sys.stdout.write(st.text)
    return 0


def _cmd_resource(args) -> int:
    archive = _open(args)
    name = _term(args.name, _prefixes(args))
    if args.action == "define":
        text = _query_text(args)
        _parsed(args, archive)
        archive.define_resource(name, text)
        persist(archive.store, args.archive)
        return 0
    q = parse_query(archive.resource_query(name), prefixes=_prefixes(args))
    sys.stdout.write(evaluate(q, archive).tsv())
    return 0


def _cmd_bench(args) -> int:
    from .bench import run_bench

    operations = None
    if args.operations:
        operations = tuple(op.strip() for op in args.operations.split(","))
    report = run_bench(args.profile, reps=args.reps, operations=operations)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(report.to_csv())
    else:
        sys.stdout.write(report.to_csv())
    for line in report.summary_lines():
        print(line, file=sys.stderr)
    return 0


def main(argv: Optional[List[str]] = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    if not hasattr(args, "func"):
        parser.print_usage(sys.stderr)
        return 1
    try:
        return args.func(args)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 1
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # pragma: no cover - defensive
        print(f"internal error: {exc.__class__.__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
