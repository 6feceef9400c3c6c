"""
Common utility functions
"""
import csv
import hashlib
import json
import os
import tempfile
from typing import Any, Dict, Iterable, Mapping, Optional, Sequence

import numpy as np


def format_value(value: Any) -> str:
    """Full-precision text for CSV cells (repr round-trips floats)"""
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, (np.integer,)):
        return str(int(value))
    return str(value)


def to_jsonable(value: Any) -> Any:
    """Convert numpy scalars/arrays and tuples into plain JSON types"""
    if isinstance(value, Mapping):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return to_jsonable(value.tolist())
    if isinstance(value, np.generic):
        return to_jsonable(value.item())
    if isinstance(value, float) and not np.isfinite(value):
        return None
    return value


def atomic_write(path: str, text: str) -> None:
    """Write text to a temporary file in the same directory, then rename over path"""
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix='.tmp-', suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, 'w', newline='') as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.remove(tmp)
        raise


def write_csv(path: str, columns: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, 'w', newline='') as handle:
        writer = csv.writer(handle, lineterminator='\n')
        writer.writerow(columns)
        for row in rows:
            writer.writerow([format_value(v) for v in row])
    return path


def read_csv(path: str) -> Dict[str, list]:
    """Columns of a CSV written by write_csv; numeric cells become floats"""
    with open(path, newline='') as handle:
        reader = csv.reader(handle)
        header = next(reader)
        columns: Dict[str, list] = {name: [] for name in header}
        for row in reader:
            for name, cell in zip(header, row):
                try:
                    columns[name].append(float(cell))
                except ValueError:
                    columns[name].append(cell)
    return columns


def dump_json(data: Any) -> str:
    return json.dumps(to_jsonable(data), indent=2, sort_keys=True) + '\n'


def write_json(path: str, data: Any) -> str:
    atomic_write(path, dump_json(data))
    return path


def canonical_hash(data: Mapping[str, Any], exclude: Optional[Iterable[str]] = None) -> str:
    """SHA-256 of the sorted-key JSON of data, ignoring excluded dotted keys"""
    data = to_jsonable(data)
    for dotted in exclude or ():
        section, _, key = dotted.partition('.')
        if key and isinstance(data.get(section), dict):
            data[section] = {k: v for k, v in data[section].items() if k != key}
        elif not key:
            data.pop(section, None)
    text = json.dumps(data, sort_keys=True, separators=(',', ':'))
    return hashlib.sha256(text.encode('utf-8')).hexdigest()


def query_float(args: Mapping[str, str], name: str, default: Optional[float] = None) -> float:
    """Float query parameter; ValueError when missing or malformed"""
    raw = args.get(name)
    if raw is None or raw == '':
        if default is None:
            raise ValueError(f"Query parameter '{name}' is required")
        return default
    try:
        return float(raw)
    except ValueError:
        raise ValueError(f"Query parameter '{name}' must be a number, got '{raw}'")
