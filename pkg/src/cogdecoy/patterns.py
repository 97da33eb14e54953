"""Signature pattern language: literal text with ``*`` wildcards.

A pattern matches when it covers a token-aligned span of the text, i.e.
the span starts at the beginning of the text or after a separator and
ends at the end of the text or before one.  Separators are whitespace and
the shell operators ``; | &``.  ``*`` matches any run of characters,
including separators.
"""

import re
from functools import lru_cache

_SEP = r"\s;|&"


@lru_cache(maxsize=4096)
def compile_pattern(pattern):
    if not pattern or not pattern.strip("*"):
        raise ValueError(f"empty pattern {pattern!r}")
    body = ".*".join(re.escape(part) for part in pattern.split("*"))
    return re.compile(rf"(?:^|(?<=[{_SEP}])){body}(?=$|[{_SEP}])", re.DOTALL)


def matches(pattern, text):
    return compile_pattern(pattern).search(text) is not None


def first_match(patterns, text):
    """Index of the first pattern in ``patterns`` that matches, or None."""
    for i, p in enumerate(patterns):
        if matches(p, text):
            return i
    return None
