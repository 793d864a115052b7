"""On-disk formats: dataset files with a reproducibility header, aggregates and tables.

A dataset file is comma-separated text. Lines starting with ``#`` form the
header: format tag, package version, draw-order registry hash, a combined
header hash, and the full config echo as ``# config: key = value`` lines.
Floats are written with ``repr`` so reading a file back is lossless.
"""

from __future__ import annotations

import csv
import hashlib
import io as _io
import math
from pathlib import Path
from typing import Iterable, Sequence, Union

import numpy as np

from . import __version__
from .config import RunConfig, config_from_items, config_to_items, dumps_config
from .engine import registry_hash
from .experiments import FIELDS, AggregateSeries, RunDataset

FORMAT_TAG = "edem-dataset 1"
INT_FIELDS = {"seed", "tick", "sellers", "buyers", "window_fill"}
COLUMNS = ("seed", "tick") + FIELDS

PathLike = Union[str, Path]


class DatasetFormatError(ValueError):
    """A dataset or table file could not be parsed."""


def header_hash(config: RunConfig) -> str:
    """Digest over the config echo and the draw-order registry."""
    payload = dumps_config(config) + "registry=" + registry_hash()
    return hashlib.sha256(payload.encode()).hexdigest()[:16]


def _fmt(value: float, integer: bool) -> str:
    if value is None or (isinstance(value, float) and math.isnan(value)):
        return ""
    if integer:
        return str(int(value))
    return repr(float(value))


def dataset_to_text(dataset: RunDataset) -> str:
    config = dataset.config
    out = _io.StringIO()
    out.write(f"# format: {FORMAT_TAG}\n")
    out.write(f"# version: {__version__}\n")
    out.write(f"# registry: {registry_hash()}\n")
    out.write(f"# header_hash: {header_hash(config)}\n")
    for key, value in config_to_items(config):
        out.write(f"# config: {key} = {value}\n")
    out.write(",".join(COLUMNS) + "\n")
    cols = [dataset.columns[name] for name in FIELDS]
    flags = [name in INT_FIELDS for name in FIELDS]
    for i, seed in enumerate(dataset.seeds):
        rows = zip(*(c[i] for c in cols))
        for tick, row in enumerate(rows):
            cells = [str(seed), str(tick)] + [_fmt(v, f) for v, f in zip(row, flags)]
            out.write(",".join(cells) + "\n")
    return out.getvalue()


def write_dataset(path: PathLike, dataset: RunDataset) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="\n", encoding="utf-8") as fh:
        fh.write(dataset_to_text(dataset))
    return path


def read_header(path: PathLike) -> tuple[dict[str, str], RunConfig]:
    meta: dict[str, str] = {}
    items: dict[str, str] = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if not line.startswith("#"):
                break
            key, _, value = line[1:].strip().partition(":")
            if key == "config":
                k, _, v = value.partition("=")
                items[k.strip()] = v.strip()
            else:
                meta[key.strip()] = value.strip()
    if meta.get("format") != FORMAT_TAG:
        raise DatasetFormatError(f"{path}: not a dataset file (format {meta.get('format')!r})")
    return meta, config_from_items(items)


def read_dataset(path: PathLike) -> RunDataset:
    meta, config = read_header(path)
    with open(path, encoding="utf-8") as fh:
        reader = csv.reader(line for line in fh if not line.startswith("#"))
        header = next(reader)
        if tuple(header) != COLUMNS:
            raise DatasetFormatError(f"{path}: unexpected columns {header}")
        per_seed: dict[int, list[list[float]]] = {}
        for row in reader:
            seed = int(row[0])
            per_seed.setdefault(seed, []).append([float(v) if v else np.nan for v in row[2:]])
    seeds = tuple(per_seed)
    if not seeds:
        raise DatasetFormatError(f"{path}: no records")
    stacked = np.array([per_seed[s] for s in seeds], dtype=float)
    columns = {name: stacked[:, :, j].copy() for j, name in enumerate(FIELDS)}
    return RunDataset(config, seeds, columns)


def write_aggregate(path: PathLike, agg: AggregateSeries) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    names = list(agg.median)
    header = ["tick"] + [f"{n}_{band}" for n in names for band in ("p10", "median", "p90")]
    with open(path, "w", newline="\n", encoding="utf-8") as fh:
        fh.write(",".join(header) + "\n")
        for t in range(agg.ticks):
            cells = [str(t)]
            for n in names:
                for band in (agg.p10, agg.median, agg.p90):
                    cells.append(_fmt(band[n][t], False))
            fh.write(",".join(cells) + "\n")
    return path


def read_aggregate(path: PathLike) -> AggregateSeries:
    with open(path, encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = [[float(v) if v else np.nan for v in row] for row in reader]
    data = np.array(rows, dtype=float)
    bands: list[dict[str, np.ndarray]] = [{}, {}, {}]
    for j, name in enumerate(header[1:], start=1):
        field, _, band = name.rpartition("_")
        bands[("p10", "median", "p90").index(band)][field] = data[:, j]
    return AggregateSeries(*bands)


def write_table(path: PathLike, header: Sequence[str], rows: Iterable[Sequence[object]]) -> Path:
    """Comma-separated table; floats via ``repr``, ``None`` as an empty field."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="\n", encoding="utf-8") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join("" if v is None else (repr(v) if isinstance(v, float) else str(v)) for v in row) + "\n")
    return path


def read_table(path: PathLike) -> list[dict[str, str]]:
    with open(path, encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def format_table(header: Sequence[str], rows: Iterable[Sequence[object]], floatfmt: str = ".4f") -> str:
    """Fixed-width rendering for the terminal."""
    text_rows = [[format(v, floatfmt) if isinstance(v, float) else ("" if v is None else str(v)) for v in r] for r in rows]
    widths = [max([len(h)] + [len(r[i]) for r in text_rows]) for i, h in enumerate(header)]
    lines = ["  ".join(h.rjust(w) for h, w in zip(header, widths))]
    lines += ["  ".join(c.rjust(w) for c, w in zip(r, widths)) for r in text_rows]
    return "\n".join(lines)
