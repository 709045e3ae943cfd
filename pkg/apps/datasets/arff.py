"""
ARFF decoding for the numeric / binary-nominal subset used by Mulan.

Decoding is delegated to liac-arff; this module narrows its output to a
dense float matrix and turns every failure into a located
``ArffParseError`` (or ``UnsupportedAttributeError`` for attribute types
outside the subset).
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import arff
import numpy as np

from apps.core.exceptions import ArffParseError, UnsupportedAttributeError

logger = logging.getLogger(__name__)

NUMERIC_TYPES = frozenset({'NUMERIC', 'REAL', 'INTEGER'})


@dataclass(frozen=True)
class ArffAttribute:
    name: str
    kind: str  # 'numeric' or 'nominal'
    values: tuple[str, ...] = ()


@dataclass(frozen=True, eq=False)
class ArffRelation:
    name: str
    attributes: tuple[ArffAttribute, ...]
    rows: np.ndarray

    @property
    def names(self) -> list[str]:
        return [attr.name for attr in self.attributes]

    def column(self, name: str) -> np.ndarray:
        return self.rows[:, self.names.index(name)]


def _to_attribute(name: str, kind) -> ArffAttribute:
    if isinstance(kind, (list, tuple)):
        values = tuple(str(v) for v in kind)
        for value in values:
            try:
                float(value)
            except ValueError:
                raise UnsupportedAttributeError(
                    f"Nominal attribute {name!r} has non-numeric value {value!r}; "
                    "only numeric nominal domains such as {0,1} are supported"
                ) from None
        return ArffAttribute(name, 'nominal', values)
    if str(kind).upper() in NUMERIC_TYPES:
        return ArffAttribute(name, 'numeric')
    raise UnsupportedAttributeError(f"Attribute {name!r} has unsupported type {kind}")


def data_row_lines(text: str) -> list[int]:
    """1-based file line of each ``@data`` row, skipping blank and ``%`` comment lines."""
    lines = []
    in_data = False
    for number, raw in enumerate(text.split('\n'), start=1):
        row = raw.strip()
        if not row or row.startswith('%'):
            continue
        if in_data:
            lines.append(number)
        elif row.upper().startswith('@DATA'):
            in_data = True
    return lines


def parse_arff(text: str | bytes) -> ArffRelation:
    """
    Parse ARFF text with dense or sparse ``@data`` rows.

    Sparse rows expand with 0 for absent entries. Missing values (``?``) are
    rejected.
    """
    if isinstance(text, bytes):
        try:
            text = text.decode('utf-8-sig')
        except UnicodeDecodeError as exc:
            line = text[:exc.start].count(b'\n') + 1
            raise ArffParseError(f"line {line}: input is not UTF-8 text", line=line) from exc

    try:
        decoded = arff.loads(text)
    except arff.BadAttributeType as exc:
        raise UnsupportedAttributeError(str(exc)) from exc
    except arff.ArffException as exc:
        line = exc.line if getattr(exc, 'line', -1) > 0 else None
        raise ArffParseError(str(exc), line=line) from exc
    except Exception as exc:  # noqa: BLE001 - any decoder failure is a parse error
        raise ArffParseError(f"Malformed ARFF input: {exc}") from exc

    attributes = tuple(_to_attribute(name, kind) for name, kind in decoded['attributes'])
    data = decoded['data']
    row_lines = data_row_lines(text)

    def located(r: int, message: str) -> ArffParseError:
        line = row_lines[r] if r < len(row_lines) else None
        prefix = f"line {line}: " if line is not None else ''
        return ArffParseError(f"{prefix}data row {r + 1}{message}", line=line)

    rows = np.empty((len(data), len(attributes)), dtype=np.float64)
    for r, row in enumerate(data):
        if len(row) != len(attributes):
            raise located(r, f" has {len(row)} values, expected {len(attributes)}")
        for c, value in enumerate(row):
            if value is None:
                raise located(r, f": missing value for attribute {attributes[c].name!r}")
            try:
                rows[r, c] = float(value)
            except (TypeError, ValueError):
                raise located(r, f": non-numeric value {value!r} for attribute {attributes[c].name!r}") from None

    relation = ArffRelation(name=str(decoded.get('relation', '')), attributes=attributes, rows=rows)
    logger.debug(f"Parsed ARFF relation {relation.name!r}: {rows.shape[0]} rows, {len(attributes)} attributes")
    return relation
