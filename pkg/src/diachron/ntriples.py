"""Line-oriented N-Triples parsing and canonical serialization.

Parsing is strict about term shape but tolerant of surrounding
whitespace, blank lines, and full-line ``#`` comments.  Serialization is
canonical: one triple per line, lines sorted bytewise, so equal graphs
always produce identical bytes.
"""

from __future__ import annotations

import re
from typing import Iterator, Optional, Tuple

from .terms import (
    Graph,
    Term,
    TermError,
    Triple,
    blank,
    iri,
    literal,
)


class NTriplesError(ValueError):
    """Parse failure; carries the 1-based line number."""

    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


_IRIREF = re.compile(r'<([^\x00-\x20<>"{}|^`\\]*)>')
_BLANK = re.compile(r"_:([A-Za-z0-9_][A-Za-z0-9_.-]*)")
_STRING = re.compile(r'"((?:[^"\\\n\r]|\\.)*)"')
_LANG = re.compile(r"@([A-Za-z]+(?:-[A-Za-z0-9]+)*)")
_UNESCAPE = re.compile(r"\\(?:u([0-9A-Fa-f]{4})|U([0-9A-Fa-f]{8})|(.))")
_SIMPLE_ESCAPES = {"t": "\t", "b": "\b", "n": "\n", "r": "\r", "f": "\f", '"': '"', "'": "'", "\\": "\\"}


def _unescape(raw: str, line: int) -> str:
    def sub(m: re.Match) -> str:
        if m.group(1):
            return chr(int(m.group(1), 16))
        if m.group(2):
            cp = int(m.group(2), 16)
            if cp > 0x10FFFF:
                raise NTriplesError(f"escape out of range: \\U{m.group(2)}", line)
            return chr(cp)
        ch = m.group(3)
        if ch not in _SIMPLE_ESCAPES:
            raise NTriplesError(f"bad escape: \\{ch}", line)
        return _SIMPLE_ESCAPES[ch]

    return _UNESCAPE.sub(sub, raw)


class _LineScanner:
    """Pulls one term at a time off a single N-Triples/N-Quads line."""

    def __init__(self, text: str, line: int):
        self.text = text
        self.pos = 0
        self.line = line

    def skip_ws(self) -> None:
        while self.pos < len(self.text) and self.text[self.pos] in " \t":
            self.pos += 1

    def at_end(self) -> bool:
        self.skip_ws()
        return self.pos >= len(self.text)

    def expect_dot(self) -> None:
        self.skip_ws()
        if self.pos >= len(self.text) or self.text[self.pos] != ".":
            raise NTriplesError("expected terminating '.'", self.line)
        self.pos += 1
        self.skip_ws()
        if self.pos < len(self.text):
            raise NTriplesError("trailing content after '.'", self.line)

    def term(self) -> Term:
        self.skip_ws()
        if self.pos >= len(self.text):
            raise NTriplesError("unexpected end of line", self.line)
        ch = self.text[self.pos]
        if ch == "<":
            m = _IRIREF.match(self.text, self.pos)
            if not m:
                raise NTriplesError("malformed IRI", self.line)
            self.pos = m.end()
            try:
                return iri(_unescape(m.group(1), self.line))
            except TermError as exc:
                raise NTriplesError(str(exc), self.line) from exc
        if ch == "_":
            m = _BLANK.match(self.text, self.pos)
            if not m:
                raise NTriplesError("malformed blank node label", self.line)
            self.pos = m.end()
            return blank(m.group(1))
        if ch == '"':
            m = _STRING.match(self.text, self.pos)
            if not m:
                raise NTriplesError("malformed string literal", self.line)
            self.pos = m.end()
            lex = _unescape(m.group(1), self.line)
            if self.text.startswith("@", self.pos):
                lm = _LANG.match(self.text, self.pos)
                if not lm:
                    raise NTriplesError("malformed language tag", self.line)
                self.pos = lm.end()
                return literal(lex, lang=lm.group(1))
            if self.text.startswith("^^", self.pos):
                self.pos += 2
                dm = _IRIREF.match(self.text, self.pos)
                if not dm:
                    raise NTriplesError("malformed datatype IRI", self.line)
                self.pos = dm.end()
                try:
                    return literal(lex, datatype=_unescape(dm.group(1), self.line))
                except TermError as exc:
                    raise NTriplesError(str(exc), self.line) from exc
            return literal(lex)
        raise NTriplesError(f"unexpected character {ch!r}", self.line)


def _content_lines(text: str) -> Iterator[Tuple[int, str]]:
    for i, raw in enumerate(text.split("\n"), start=1):
        stripped = raw.strip()
        if not stripped or stripped.startswith("#"):
            continue
        yield i, stripped


def parse_ntriples(text: str) -> Graph:
    """Parse N-Triples text into a Graph.

    Raises NTriplesError with the offending line number on any syntax or
    term-shape problem (e.g. a literal in subject position).
    """
    triples = []
    for lineno, line in _content_lines(text):
        sc = _LineScanner(line, lineno)
        s = sc.term()
        p = sc.term()
        o = sc.term()
        sc.expect_dot()
        try:
            triples.append(Triple(s, p, o))
        except TermError as exc:
            raise NTriplesError(str(exc), lineno) from exc
    return Graph.of(triples)


def serialize_ntriples(g: Graph) -> str:
    """Canonical N-Triples text: sorted lines, trailing newline when non-empty."""
    lines = [t.ntriples() for t in g]
    lines.sort(key=lambda s: s.encode("utf-8"))
    return "".join(line + "\n" for line in lines)


def parse_term(token: str) -> Term:
    """Parse a single N-Triples term token (used for manifests and CLI args)."""
    sc = _LineScanner(token.strip(), 1)
    t = sc.term()
    if not sc.at_end():
        raise NTriplesError("trailing content after term", 1)
    return t


def parse_quad_line(line: str, lineno: int) -> Tuple[Term, Term, Term, Optional[Term]]:
    """Parse one N-Quads line into (s, p, o, graph); graph is None for triples."""
    sc = _LineScanner(line, lineno)
    s = sc.term()
    p = sc.term()
    o = sc.term()
    sc.skip_ws()
    g: Optional[Term] = None
    if sc.pos < len(sc.text) and sc.text[sc.pos] != ".":
        g = sc.term()
        if not g.is_iri:
            raise NTriplesError("graph label must be an IRI", lineno)
    sc.expect_dot()
    return s, p, o, g
