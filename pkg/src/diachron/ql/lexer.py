"""Tokenizer shared by the query parser and the SPARQL-subset parser.

Keywords are case-insensitive except the lone ``a`` shorthand for
rdf:type, which is lowercase only.  Prefixed-name locals may contain
inner dots but never end with one, so a statement-terminating ``.``
right after a name lexes as punctuation.
"""

from __future__ import annotations

import re
from bisect import bisect_right
from dataclasses import dataclass
from typing import List, Optional, Tuple, Union

KEYWORDS = frozenset(
    {
        "DIACHRON",
        "SELECT",
        "DISTINCT",
        "FROM",
        "DATASET",
        "CHANGES",
        "AT",
        "VERSION",
        "VERSIONS",
        "BEFORE",
        "AFTER",
        "BETWEEN",
        "WHERE",
        "RECORD",
        "RECATT",
        "CHANGE",
        "UNION",
        "OPTIONAL",
        "FILTER",
        "ORDER",
        "GROUP",
        "BY",
        "LIMIT",
        "OFFSET",
        "COUNT",
        "AS",
        "ASC",
        "DESC",
        "GRAPH",
        "REGEX",
        "BOUND",
        "TRUE",
        "FALSE",
    }
)

# Accepted alternate spellings, normalized on lexing.
_KEYWORD_ALIASES = {"RECAT": "RECATT"}

KW = "kw"
A = "a"
IRIREF = "iri"
PNAME = "pname"
VAR = "var"
STRING = "string"
NUMBER = "number"
PUNCT = "punct"
EOF = "eof"

_WS = re.compile(r"(?:[ \t\r\n]+|#[^\n]*)+")
_IRIREF_RE = re.compile(r'<([^\x00-\x20<>"{}|^`\\]*)>')
_VAR_RE = re.compile(r"\?([A-Za-z0-9_]+)")
_PNAME_RE = re.compile(r"([A-Za-z][A-Za-z0-9_-]*):([A-Za-z0-9_](?:[A-Za-z0-9_.-]*[A-Za-z0-9_-])?)")
_WORD_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")
_DECIMAL_RE = re.compile(r"[+-]?[0-9]+\.[0-9]+")
_INTEGER_RE = re.compile(r"[+-]?[0-9]+")
_STRING_RE = re.compile(r'"((?:[^"\\\n\r]|\\.)*)"')
_LANG_RE = re.compile(r"@([A-Za-z]+(?:-[A-Za-z0-9]+)*)")
_PUNCT2 = ("!=", "<=", ">=", "&&", "||")
_PUNCT1 = "{}()[].;,*=<>!"

XSD_NS = "http://www.w3.org/2001/XMLSchema#"

# Datatype spec attached to a string token: full IRI, or (prefix, local).
DTSpec = Union[None, str, Tuple[str, str]]


@dataclass(frozen=True)
class Token:
    type: str
    value: object
    line: int
    col: int

    def describe(self) -> str:
        if self.type == EOF:
            return "end of input"
        if self.type == KW:
            return str(self.value)
        if self.type == PUNCT:
            return f"'{self.value}'"
        if self.type == VAR:
            return f"?{self.value}"
        return f"{self.type} token"


class LexError(ValueError):
    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"{line}:{col}: {message}")
        self.line = line
        self.col = col


class _Positions:
    def __init__(self, text: str):
        self.starts = [0]
        for i, ch in enumerate(text):
            if ch == "\n":
                self.starts.append(i + 1)

    def at(self, offset: int) -> Tuple[int, int]:
        line = bisect_right(self.starts, offset)
        return line, offset - self.starts[line - 1] + 1


def _unescape_string(raw: str, line: int, col: int) -> str:
    out = []
    i = 0
    while i < len(raw):
        ch = raw[i]
        if ch != "\\":
            out.append(ch)
            i += 1
            continue
        if i + 1 >= len(raw):
            raise LexError("dangling escape in string", line, col)
        nxt = raw[i + 1]
        simple = {"t": "\t", "b": "\b", "n": "\n", "r": "\r", "f": "\f", '"': '"', "'": "'", "\\": "\\"}
        if nxt in simple:
            out.append(simple[nxt])
            i += 2
        elif nxt == "u" and i + 6 <= len(raw):
            out.append(chr(int(raw[i + 2 : i + 6], 16)))
            i += 6
        elif nxt == "U" and i + 10 <= len(raw):
            out.append(chr(int(raw[i + 2 : i + 10], 16)))
            i += 10
        else:
            raise LexError(f"bad escape \\{nxt}", line, col)
    return "".join(out)


def tokenize(text: str) -> List[Token]:
    """Lex query text into tokens; raises LexError on stray characters."""
    pos = 0
    n = len(text)
    positions = _Positions(text)
    tokens: List[Token] = []

    def loc(offset: int) -> Tuple[int, int]:
        return positions.at(offset)

    while pos < n:
        m = _WS.match(text, pos)
        if m:
            pos = m.end()
            continue
        if pos >= n:
            break
        line, col = loc(pos)
        ch = text[pos]

        if ch == "<":
            m = _IRIREF_RE.match(text, pos)
            if m:
                tokens.append(Token(IRIREF, m.group(1), line, col))
                pos = m.end()
                continue
            # falls through to comparison '<'
        if ch == "?":
            m = _VAR_RE.match(text, pos)
            if not m:
                raise LexError("malformed variable", line, col)
            tokens.append(Token(VAR, m.group(1), line, col))
            pos = m.end()
            continue
        if ch == '"':
            m = _STRING_RE.match(text, pos)
            if not m:
                raise LexError("unterminated string literal", line, col)
            lex = _unescape_string(m.group(1), line, col)
            pos = m.end()
            lang: Optional[str] = None
            dt: DTSpec = None
            if text.startswith("@", pos):
                lm = _LANG_RE.match(text, pos)
                if not lm:
                    raise LexError("malformed language tag", line, col)
                lang = lm.group(1)
                pos = lm.end()
            elif text.startswith("^^", pos):
                pos += 2
                im = _IRIREF_RE.match(text, pos)
                if im:
                    dt = im.group(1)
                    pos = im.end()
                else:
                    pm = _PNAME_RE.match(text, pos)
                    if not pm:
                        raise LexError("malformed datatype after ^^", line, col)
                    dt = (pm.group(1), pm.group(2))
                    pos = pm.end()
            tokens.append(Token(STRING, (lex, lang, dt), line, col))
            continue
        m = _PNAME_RE.match(text, pos)
        if m:
            tokens.append(Token(PNAME, (m.group(1), m.group(2)), line, col))
            pos = m.end()
            continue
        m = _WORD_RE.match(text, pos)
        if m:
            word = m.group(0)
            if word == "a":
                tokens.append(Token(A, "a", line, col))
            else:
                upper = word.upper()
                upper = _KEYWORD_ALIASES.get(upper, upper)
                if upper not in KEYWORDS:
                    raise LexError(f"unknown word {word!r}", line, col)
                tokens.append(Token(KW, upper, line, col))
            pos = m.end()
            continue
        m = _DECIMAL_RE.match(text, pos)
        if m:
            tokens.append(Token(NUMBER, (m.group(0), XSD_NS + "decimal"), line, col))
            pos = m.end()
            continue
        m = _INTEGER_RE.match(text, pos)
        if m:
            tokens.append(Token(NUMBER, (m.group(0), XSD_NS + "integer"), line, col))
            pos = m.end()
            continue
        two = text[pos : pos + 2]
        if two in _PUNCT2:
            tokens.append(Token(PUNCT, two, line, col))
            pos += 2
            continue
        if ch in _PUNCT1:
            tokens.append(Token(PUNCT, ch, line, col))
            pos += 1
            continue
        raise LexError(f"unexpected character {ch!r}", line, col)

    end_line, end_col = positions.at(n)
    tokens.append(Token(EOF, None, end_line, end_col))
    return tokens
