"""LIBSVM text format: ``<label> <index>:<value> ...`` per line.

Indices on the wire are 1-based and may come in any order; duplicates are
rejected. ``#`` starts a comment. Labels ``+1``/``1``/``-1`` and the
``0``/``1`` convention are both accepted and normalised to +-1.
"""

from __future__ import annotations

import math
import re
from pathlib import Path
from typing import IO, Iterable, Optional, Union

import numpy as np
import scipy.sparse as sp

from .errors import ParseError
from .problems import Dataset, describe_rows

_TOKEN = re.compile(r"\S+")
_INDEX = re.compile(r"[0-9]+")
_LABELS = {1.0: 1.0, -1.0: -1.0, 0.0: -1.0}


def _parse_label(tok: str, lineno: int, col: int) -> float:
    try:
        value = float(tok)
    except ValueError:
        raise ParseError(f"unknown label {tok!r}", lineno, col) from None
    if value not in _LABELS:
        raise ParseError(f"unknown label {tok!r}", lineno, col)
    return _LABELS[value]


def parse_libsvm(lines: Union[IO[str], Iterable[str]], n_features: Optional[int] = None) -> Dataset:
    """Parses LIBSVM text into a :class:`Dataset`.

    ``n_features`` fixes the dimension; otherwise it is the largest index
    seen. Every problem is reported as a :class:`ParseError` carrying the
    1-based line and column.
    """
    labels = []
    indptr = [0]
    indices: list = []
    values: list = []
    max_index = 0
    for lineno, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0]
        tokens = list(_TOKEN.finditer(line))
        if not tokens:
            continue
        first = tokens[0]
        labels.append(_parse_label(first.group(), lineno, first.start() + 1))
        row = {}
        for match in tokens[1:]:
            tok, col = match.group(), match.start() + 1
            idx_text, sep, val_text = tok.partition(":")
            if not sep or not idx_text or not val_text:
                raise ParseError(f"expected index:value, got {tok!r}", lineno, col)
            if not _INDEX.fullmatch(idx_text):
                raise ParseError(f"feature index {idx_text!r} is not a positive integer", lineno, col)
            idx = int(idx_text)
            if idx < 1:
                raise ParseError("feature indices start at 1", lineno, col)
            try:
                val = float(val_text)
            except ValueError:
                raise ParseError(f"non-numeric value {val_text!r}", lineno, col + len(idx_text) + 1) from None
            if not math.isfinite(val):
                raise ParseError(f"non-finite value {val_text!r}", lineno, col + len(idx_text) + 1)
            if idx in row:
                raise ParseError(f"duplicate feature index {idx}", lineno, col)
            if n_features is not None and idx > n_features:
                raise ParseError(f"feature index {idx} exceeds n_features={n_features}", lineno, col)
            row[idx] = val
        for idx in sorted(row):
            indices.append(idx - 1)
            values.append(row[idx])
        max_index = max(max_index, max(row, default=0))
        indptr.append(len(indices))

    d = max_index if n_features is None else n_features
    X = sp.csr_matrix(
        (np.asarray(values, dtype=np.float64), np.asarray(indices, dtype=np.int32), np.asarray(indptr)),
        shape=(len(labels), d),
    )
    return Dataset(X, np.asarray(labels, dtype=np.float64), describe_rows(X))


def load_libsvm(path, n_features: Optional[int] = None) -> Dataset:
    with open(Path(path), encoding="utf-8") as fh:
        return parse_libsvm(fh, n_features=n_features)


def serialize_libsvm(data: Dataset, out: IO[str]) -> None:
    """Writes ``data`` so that ``parse_libsvm`` reads it back exactly
    (given the same ``n_features``). Explicitly stored zeros are kept."""
    X = data.X
    for i in range(data.n):
        lo, hi = X.indptr[i], X.indptr[i + 1]
        parts = ["+1" if data.y[i] > 0 else "-1"]
        parts.extend(f"{j + 1}:{v!r}" for j, v in zip(X.indices[lo:hi].tolist(), X.data[lo:hi].tolist()))
        out.write(" ".join(parts) + "\n")
