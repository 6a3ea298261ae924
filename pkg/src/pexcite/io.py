"""File formats: signal CSV, JSON reports, atomic writes."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import os
import tempfile
from pathlib import Path

import numpy as np

from .errors import InputError
from .signals import UNKNOWN, SampledSignal, TimeGrid


class CSVFormatError(InputError):
    def __init__(self, message, line=None):
        super().__init__(message if line is None else f"line {line}: {message}")
        self.line = line


def atomic_write(path, data):
    """Write ``data`` (str or bytes) to ``path`` via a temp file and rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if isinstance(data, str):
        data = data.encode()
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _fmt(x):
    return "%.17g" % x


def table_csv(header, rows):
    buf = io.StringIO()
    buf.write(",".join(header) + "\n")
    for row in rows:
        buf.write(",".join(_fmt(v) for v in row) + "\n")
    return buf.getvalue()


def signal_to_csv(w):
    """``t,w1,...,wq`` with one row per grid point at full double precision."""
    header = ["t"] + [f"w{i + 1}" for i in range(w.q)]
    return table_csv(header, np.column_stack([w.times, w.values.T]))


def write_signal_csv(w, path):
    atomic_write(path, signal_to_csv(w))


def _recover_dt(t):
    """Step that reproduces the time column exactly, if one exists.

    Short decimals are tried first since that is how steps are usually
    specified; otherwise the step is bisected, using that each
    ``t0 + dt * j`` is non-decreasing in ``dt``.
    """
    n = t.size
    j = np.arange(n)
    t0 = t[0]
    guess = (t[-1] - t0) / (n - 1)

    def sign(d):
        r = t0 + d * j - t
        hi, lo = bool(np.any(r > 0)), bool(np.any(r < 0))
        return 0 if not (hi or lo) else (2 if hi and lo else (1 if hi else -1))

    for digits in range(1, 18):
        cand = float(f"{guess:.{digits}g}")
        if cand > 0 and sign(cand) == 0:
            return cand
    lo, hi = guess * (1 - 1e-6), guess * (1 + 1e-6)
    if sign(lo) == -1 and sign(hi) == 1:
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if mid in (lo, hi):
                break
            s = sign(mid)
            if s == 0:
                return float(mid)
            if s == 2:
                break
            lo, hi = (mid, hi) if s == -1 else (lo, mid)
    if not np.allclose(t0 + guess * j, t, rtol=0, atol=1e-9 * max(1.0, abs(t[-1]))):
        raise CSVFormatError("time column is not a uniform grid")
    return float(guess)


def read_signal_csv(path, continuity_tag=UNKNOWN):
    with open(path, newline="") as fh:
        return parse_signal_csv(fh.read(), continuity_tag)


def parse_signal_csv(text, continuity_tag=UNKNOWN):
    """Parse the signal CSV format; errors carry the offending line number."""
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise CSVFormatError("empty file", 1) from None
    header = [h.strip() for h in header]
    q = len(header) - 1
    if q < 1 or header[0] != "t" or header[1:] != [f"w{i + 1}" for i in range(q)]:
        raise CSVFormatError(f"expected header t,w1,...,wq, got {','.join(header)}", 1)
    rows = []
    for lineno, row in enumerate(reader, start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != q + 1:
            raise CSVFormatError(f"expected {q + 1} fields, got {len(row)}", lineno)
        try:
            vals = [float(c) for c in row]
        except ValueError:
            raise CSVFormatError(f"non-numeric field in {row}", lineno) from None
        if not all(np.isfinite(vals)):
            raise CSVFormatError("non-finite value", lineno)
        rows.append(vals)
    if len(rows) < 2:
        raise CSVFormatError("need at least two samples")
    data = np.array(rows)
    t = data[:, 0]
    if np.any(np.diff(t) <= 0):
        bad = int(np.argmax(np.diff(t) <= 0)) + 3
        raise CSVFormatError("times must increase", bad)
    grid = TimeGrid(float(t[0]), _recover_dt(t), t.size)
    return SampledSignal(grid, data[:, 1:].T, continuity_tag)


def dumps(obj):
    """JSON text with shortest round-trip float representation."""
    return json.dumps(_plain(obj), indent=2, allow_nan=False) + "\n"


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        if np.isnan(x):
            return None
        if np.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    return obj


def write_json(obj, path):
    atomic_write(path, dumps(obj))


def sha256_file(path):
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()
