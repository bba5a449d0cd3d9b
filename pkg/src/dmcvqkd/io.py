"""File formats: record CSV, sweep CSV, JSON documents, key=value configs."""

from __future__ import annotations

import csv
import dataclasses
import json
import math
from pathlib import Path

import numpy as np

from .errors import ConfigError
from .simulate import SymbolRecords

SWEEP_COLUMNS = ("swept_value", "key_rate_per_symbol", "key_rate_per_second", "i_ab", "holevo", "valid_flag")


def _fmt(x) -> str:
    return repr(float(x))


def write_records_csv(records: SymbolRecords, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SymbolRecords.COLUMNS)
        for r in records:
            w.writerow([r.n, r.k, _fmt(r.alice_x), _fmt(r.alice_p), _fmt(r.bob_x), _fmt(r.bob_p)])


def read_records_csv(path) -> SymbolRecords:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise ConfigError(f"{path}: empty record file")
        if tuple(header) != SymbolRecords.COLUMNS:
            raise ConfigError(f"{path}: expected columns {','.join(SymbolRecords.COLUMNS)}")
        rows = [row for row in reader if row]
    if not rows:
        raise ConfigError(f"{path}: no records")
    cols = list(zip(*rows))
    return SymbolRecords(
        np.array(cols[0], dtype=np.int64),
        np.array(cols[1], dtype=np.int64),
        *(np.array(c, dtype=float) for c in cols[2:]),
    )


def write_sweep_csv(rows, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SWEEP_COLUMNS)
        for r in rows:
            w.writerow([_fmt(r.swept_value), _fmt(r.key_rate_per_symbol), _fmt(r.key_rate_per_second),
                        _fmt(r.i_ab), _fmt(r.holevo), int(r.valid)])


def _jsonable(obj):
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return _jsonable(dataclasses.asdict(obj))
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else None
    return obj


def dumps(obj) -> str:
    return json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n"


def write_json(obj, path) -> None:
    Path(path).write_text(dumps(obj))


def parse_config_text(text: str, source: str = "<config>") -> dict[str, str]:
    """Flat ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        if not key:
            raise ConfigError(f"{source}:{lineno}: empty key")
        out[key] = value
    return out


def read_config(path) -> dict[str, str]:
    path = Path(path)
    if path.suffix == ".json":
        # a run manifest: reuse its resolved configuration
        data = json.loads(path.read_text())
        return {k: str(v) for k, v in data.get("config", data).items()}
    return parse_config_text(path.read_text(), str(path))
