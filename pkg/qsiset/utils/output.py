"""
Row output for the command line: CSV or JSON, plus a JSON provenance sidecar.
"""
import csv
import io
import json
import math
import os
from fractions import Fraction
from typing import Dict, List, Optional, Sequence

import numpy as np

from utils.config import Config
from utils.errors import ArgumentError, QsiSetError, reason_code

FORMATS = ('csv', 'json')
SIDECAR_SUFFIX = '.meta.json'


def make_json_safe(obj):
    """Convert nested values to plain JSON types (Fractions become 'p/q' strings)."""
    if isinstance(obj, dict):
        return {str(k): make_json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [make_json_safe(v) for v in obj]
    if isinstance(obj, Fraction):
        return str(obj)
    if isinstance(obj, (np.integer, np.floating)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    return obj


def format_cell(value) -> str:
    """Exact text for one CSV cell; floats use repr so runs compare byte for byte."""
    if value is None:
        return ''
    if isinstance(value, bool):
        return 'true' if value else 'false'
    if isinstance(value, (float, np.floating)):
        if not math.isfinite(value):
            raise ArgumentError(f"Refusing to write non-finite value {value!r}")
        return repr(float(value))
    return str(value)


def render_rows(rows: Sequence[Dict], columns: Sequence[str], fmt: str = 'csv') -> str:
    if fmt not in FORMATS:
        raise ArgumentError(f"Unknown format {fmt!r}; expected one of {', '.join(FORMATS)}")
    if fmt == 'json':
        payload = [{c: make_json_safe(row.get(c)) for c in columns} for row in rows]
        return json.dumps(payload, indent=2) + '\n'
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator='\n')
    writer.writerow(columns)
    for row in rows:
        writer.writerow([format_cell(row.get(c)) for c in columns])
    return buffer.getvalue()


def sidecar_path(path: str) -> str:
    return os.path.splitext(path)[0] + SIDECAR_SUFFIX


def write_sidecar(path: str, provenance: Dict) -> str:
    """Write the run configuration next to `path`; returns the sidecar path."""
    meta = {'qsiset_version': Config.APP_VERSION}
    meta.update(make_json_safe(provenance))
    target = sidecar_path(path)
    with open(target, 'w', encoding='utf-8') as f:
        json.dump(meta, f, indent=2, sort_keys=True)
        f.write('\n')
    return target


def emit(rows: Sequence[Dict], columns: Sequence[str], fmt: str = 'csv', out: Optional[str] = None,
         provenance: Optional[Dict] = None, stream=None) -> str:
    """Render rows and write them to `out` (with sidecar) or to `stream`."""
    text = render_rows(rows, columns, fmt)
    if out:
        directory = os.path.dirname(os.path.abspath(out))
        try:
            os.makedirs(directory, exist_ok=True)
            with open(out, 'w', encoding='utf-8', newline='') as f:
                f.write(text)
        except OSError as e:
            raise ArgumentError(f"Cannot write {out}: {e}")
        write_sidecar(out, provenance or {})
    elif stream is not None:
        stream.write(text)
    return text


def error_cell(column: str, exc: QsiSetError) -> str:
    """'column:reason' entry for the reason column of a row."""
    return f"{column}:{reason_code(exc)}"


def join_reasons(reasons: List[str]) -> str:
    return ';'.join(reasons)


def emit_document(document: Dict, out: Optional[str] = None, provenance: Optional[Dict] = None, stream=None) -> str:
    """Write one JSON document to `out` (with sidecar) or to `stream`."""
    text = json.dumps(make_json_safe(document), indent=2, sort_keys=True) + '\n'
    if out:
        try:
            os.makedirs(os.path.dirname(os.path.abspath(out)), exist_ok=True)
            with open(out, 'w', encoding='utf-8') as f:
                f.write(text)
        except OSError as e:
            raise ArgumentError(f"Cannot write {out}: {e}")
        write_sidecar(out, provenance or {})
    elif stream is not None:
        stream.write(text)
    return text
