"""Delimited text files with a ``#``-prefixed ``key: value`` metadata header.

Floats are written with 17 significant digits so that every file reads back to
the same binary values.
"""

from __future__ import annotations

import csv
import io
import sys
from contextlib import contextmanager
from pathlib import Path

import numpy as np

from gmschauder import __version__
from gmschauder.sampler import PathSample


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


@contextmanager
def _open_out(target):
    if target is None or target == "-":
        yield sys.stdout
    elif isinstance(target, io.TextIOBase):
        yield target
    else:
        with open(target, "w", newline="") as fh:
            yield fh


def write_table(target, header: dict, columns: list[str], rows) -> None:
    """Write ``rows`` under a metadata header; ``target`` is a path, a text stream or ``-``."""
    with _open_out(target) as fh:
        fh.write(f"# tool: gmschauder {__version__}\n")
        for key, value in header.items():
            fh.write(f"# {key}: {value}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def read_table(source) -> tuple[dict, list[str], list[list[str]]]:
    """Parse a file written by ``write_table`` into ``(header, columns, rows)``."""
    text = Path(source).read_text() if not isinstance(source, io.TextIOBase) else source.read()
    header: dict[str, str] = {}
    body = []
    for line in text.splitlines():
        if line.startswith("#"):
            key, _, value = line[1:].partition(":")
            header[key.strip()] = value.strip()
        elif line.strip():
            body.append(line)
    reader = csv.reader(body)
    columns = next(reader)
    return header, columns, list(reader)


def write_paths(target, paths: PathSample) -> None:
    header = {
        "process": paths.label,
        "depth": paths.level,
        "seed": paths.seed,
        "tree": paths.tree,
        "paths": paths.n_paths,
        "points": paths.times.size,
        "degenerate": int(paths.degenerate),
    }

    def rows():
        for pid, row in zip(paths.path_ids, paths.values):
            for t, v in zip(paths.times, row):
                yield int(pid), float(t), float(v)

    write_table(target, header, ["path_id", "t", "value"], rows())


def read_paths(source) -> PathSample:
    header, columns, rows = read_table(source)
    if columns != ["path_id", "t", "value"]:
        raise ValueError(f"not a path file: columns {columns}")
    n_paths, n_points = int(header["paths"]), int(header["points"])
    ids = np.array([int(r[0]) for r in rows], dtype=np.int64).reshape(n_paths, n_points)
    data = np.array([[float(r[1]), float(r[2])] for r in rows]).reshape(n_paths, n_points, 2)
    return PathSample(
        times=data[0, :, 0].copy(),
        values=data[:, :, 1].copy(),
        path_ids=ids[:, 0].copy(),
        level=int(header["depth"]),
        seed=int(header["seed"]),
        label=header["process"],
        tree=header.get("tree", "uniform"),
        degenerate=bool(int(header.get("degenerate", "0"))),
    )


def read_numeric(source) -> tuple[dict, list[str], np.ndarray]:
    """Read an all-numeric table into a float array."""
    header, columns, rows = read_table(source)
    return header, columns, np.array([[float(v) for v in r] for r in rows], dtype=float).reshape(-1, len(columns))
