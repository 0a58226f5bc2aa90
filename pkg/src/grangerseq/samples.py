"""Reading and writing whitespace-separated two-column sample text."""

from __future__ import annotations

import os
from typing import IO, Iterable, Iterator

import numpy as np

from .errors import ParseError


def parse_value(token: str) -> complex | float:
    try:
        return float(token)
    except ValueError:
        pass
    try:
        z = complex(token.strip("()"))
    except ValueError:
        raise ValueError(f"non-numeric token {token!r}") from None
    return z.real if z.imag == 0 and "j" not in token else z


def iter_pairs(lines: Iterable[str], source: str | None = None) -> Iterator[tuple[int, complex | float, complex | float]]:
    """Yield ``(line_number, first, second)`` for each non-blank line.

    Lines starting with ``#`` are skipped.  Anything other than exactly two
    numeric columns raises ParseError naming the line.
    """
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        tokens = line.replace(",", " ").split()
        if len(tokens) != 2:
            raise ParseError(f"expected 2 columns, found {len(tokens)}", line=lineno, path=source)
        try:
            a, b = parse_value(tokens[0]), parse_value(tokens[1])
        except ValueError as exc:
            raise ParseError(str(exc), line=lineno, path=source) from None
        if not (np.isfinite(a) and np.isfinite(b)):
            raise ParseError("non-finite value", line=lineno, path=source)
        yield lineno, a, b


def read_pairs(path: str | os.PathLike | IO[str]) -> tuple[np.ndarray, np.ndarray]:
    """Load both columns of a two-column text file."""
    if hasattr(path, "read"):
        rows = list(iter_pairs(path, getattr(path, "name", None)))
        source = getattr(path, "name", "<stream>")
    else:
        source = os.fspath(path)
        with open(source, encoding="utf-8") as fh:
            rows = list(iter_pairs(fh, source))
    if not rows:
        raise ParseError("file contains no samples", path=str(source))
    first = np.array([r[1] for r in rows])
    second = np.array([r[2] for r in rows])
    return first, second


def format_value(v: complex | float) -> str:
    if np.iscomplexobj(v) and np.imag(v) != 0:
        return f"{np.real(v):.17g}{np.imag(v):+.17g}j"
    return f"{float(np.real(v)):.17g}"


def write_pairs(fh: IO[str], first: np.ndarray, second: np.ndarray) -> None:
    for a, b in zip(first, second):
        fh.write(f"{format_value(a)} {format_value(b)}\n")
