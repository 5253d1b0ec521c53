"""Query language front end: lexer, parser, validator, pretty printer."""

from .parser import parse_query, QuerySyntaxError
from .pretty import pretty_print
from .validate import Diagnostic, has_errors, validate

__all__ = [
    "Diagnostic",
    "QuerySyntaxError",
    "has_errors",
    "parse_query",
    "pretty_print",
    "validate",
]
