"""Embedded multi-version RDF archive with the DIACHRON query language."""

from .terms import Graph, Term, Triple, TriplePattern, Variable, blank, iri, literal, typed
from .ntriples import parse_ntriples, serialize_ntriples
from .algebra import Mapping, algebra_combine, eval_filter, match_bgp
from .store import Quad, QuadStore, load, persist
from .reify import dereify, reify
from .changes import apply_change_set, diff_record_sets
from .archive import Archive, DELTA, FULL

__version__ = "0.1.0"

__all__ = [
    "Archive",
    "DELTA",
    "FULL",
    "Graph",
    "Mapping",
    "Quad",
    "QuadStore",
    "Term",
    "Triple",
    "TriplePattern",
    "Variable",
    "algebra_combine",
    "apply_change_set",
    "blank",
    "dereify",
    "diff_record_sets",
    "eval_filter",
    "iri",
    "literal",
    "load",
    "match_bgp",
    "parse_ntriples",
    "persist",
    "reify",
    "serialize_ntriples",
    "typed",
]
