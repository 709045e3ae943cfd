"""
Dataset loaders: Mulan ARFF + XML label header, and a plain CSV fallback.
"""
from __future__ import annotations

import logging
import xml.etree.ElementTree as ET
from pathlib import Path
from typing import Sequence

import numpy as np
import pandas as pd
from django.core.exceptions import ValidationError

from apps.core.exceptions import SchemaError
from apps.core.labels import Dataset

from .arff import ArffRelation, parse_arff

logger = logging.getLogger(__name__)


def read_label_names(xml_path: str | Path) -> list[str]:
    """Label attribute names from a Mulan XML header, in document order."""
    try:
        root = ET.parse(xml_path).getroot()
    except ET.ParseError as exc:
        raise SchemaError(f"Cannot parse label header {xml_path}: {exc}") from exc
    names = [
        child.attrib['name']
        for child in root.iter()
        if child.tag.rsplit('}', 1)[-1] == 'label' and 'name' in child.attrib
    ]
    if not names:
        raise SchemaError(f"Label header {xml_path} declares no labels")
    return names


def relation_to_dataset(relation: ArffRelation, label_names: Sequence[str], name: str = '') -> Dataset:
    """Split an ARFF relation into features and the named label columns."""
    columns = relation.names
    missing = [label for label in label_names if label not in columns]
    if missing:
        raise SchemaError(
            f"Labels missing from ARFF relation {relation.name!r}: {', '.join(missing[:5])}"
            + (f" (and {len(missing) - 5} more)" if len(missing) > 5 else '')
        )

    label_idx = [columns.index(label) for label in label_names]
    taken = set(label_idx)
    feature_idx = [i for i in range(len(columns)) if i not in taken]

    Y = relation.rows[:, label_idx]
    if Y.size and not np.isin(Y, (0.0, 1.0)).all():
        bad = sorted({float(v) for v in np.unique(Y) if v not in (0.0, 1.0)})[:5]
        raise ValidationError(f"Label columns must be binary, found values {bad}")

    return Dataset(
        relation.rows[:, feature_idx],
        Y.astype(np.int8),
        name=name or relation.name,
        label_names=tuple(label_names),
    )


def load_mulan(arff_paths: str | Path | Sequence[str | Path], xml_path: str | Path, name: str = '') -> Dataset:
    """
    Load a Mulan dataset.

    ``arff_paths`` may be a single file or the ``-train``/``-test`` pair,
    which are concatenated in the given order.
    """
    if isinstance(arff_paths, (str, Path)):
        arff_paths = [arff_paths]
    label_names = read_label_names(xml_path)

    dataset = None
    for path in arff_paths:
        relation = parse_arff(Path(path).read_bytes())
        part = relation_to_dataset(relation, label_names, name=name or Path(path).stem)
        dataset = part if dataset is None else dataset.concat(part)

    if dataset is None:
        raise SchemaError("No ARFF files given")
    logger.info(f"Loaded {dataset} from {', '.join(str(p) for p in arff_paths)}")
    return dataset


def _is_numeric(value) -> bool:
    try:
        float(value)
    except (TypeError, ValueError):
        return False
    return True


def load_csv(path: str | Path, K: int, name: str = '') -> Dataset:
    """
    Load a numeric CSV whose last ``K`` columns are binary labels.

    A header row is detected when any field of the first row is not a number.
    """
    path = Path(path)
    first = pd.read_csv(path, header=None, nrows=1, dtype=str)
    has_header = not all(_is_numeric(v) for v in first.iloc[0].tolist()) if len(first) else False
    frame = pd.read_csv(path, header=0 if has_header else None)

    n_columns = frame.shape[1]
    if not 1 <= K < n_columns:
        raise ValidationError(
            f"Need 1 <= K < number of columns; got K={K} with {n_columns} columns"
        )
    try:
        values = frame.to_numpy(dtype=np.float64)
    except ValueError as exc:
        raise ValidationError(f"CSV file {path} contains non-numeric values: {exc}") from exc

    Y = values[:, n_columns - K:]
    if not np.isin(Y, (0.0, 1.0)).all():
        raise ValidationError(f"The last {K} columns of {path} must be binary labels")

    label_names = tuple(str(c) for c in frame.columns[n_columns - K:]) if has_header else ()
    dataset = Dataset(values[:, :n_columns - K], Y.astype(np.int8), name=name or path.stem, label_names=label_names)
    logger.info(f"Loaded {dataset} from {path}")
    return dataset


def resolve_dataset(name: str, data_dir: str | Path) -> tuple[list[Path], Path]:
    """
    Find the ARFF file(s) and XML header for a Mulan dataset name.

    Looks for ``<name>.arff`` first, then the ``<name>-train.arff`` and
    ``<name>-test.arff`` pair.
    """
    data_dir = Path(data_dir)
    xml_path = data_dir / f"{name}.xml"
    if not xml_path.exists():
        raise FileNotFoundError(f"Label header {xml_path} not found")

    single = data_dir / f"{name}.arff"
    if single.exists():
        return [single], xml_path
    pair = [data_dir / f"{name}-train.arff", data_dir / f"{name}-test.arff"]
    if all(p.exists() for p in pair):
        return pair, xml_path
    raise FileNotFoundError(f"No ARFF files for dataset {name!r} under {data_dir}")


def load_dataset(source: str | Path, data_dir: str | Path | None = None, K: int | None = None) -> Dataset:
    """
    Load a dataset from a path or a catalog name.

    ``*.csv`` needs ``K``. ``*.arff`` expects a sibling ``.xml`` header. Any
    other value is treated as a dataset name under ``data_dir``.
    """
    path = Path(source)
    if path.suffix.lower() == '.csv':
        if K is None:
            raise ValidationError("Loading a CSV dataset requires the number of labels K")
        return load_csv(path, K)
    if path.suffix.lower() == '.arff':
        if not path.exists():
            raise FileNotFoundError(f"Dataset file {path} not found")
        stem = path.stem
        for suffix in ('-train', '-test'):
            if stem.endswith(suffix):
                stem = stem[: -len(suffix)]
        return load_mulan(path, path.with_name(f"{stem}.xml"), name=stem)
    if data_dir is None:
        raise FileNotFoundError(f"Dataset {source!r} is not a file and no data directory is configured")
    arff_paths, xml_path = resolve_dataset(str(source), data_dir)
    return load_mulan(arff_paths, xml_path, name=str(source))
