"""Deterministic file output: CSV serialisation, atomic writes, hashing.

Floats are written with repr (shortest round-trip form) so identical runs
produce byte-identical files; writes go to a temp file in the target
directory followed by an atomic rename.
"""

import csv
import hashlib
import json
import os
import tempfile


def format_cell(v):
    if hasattr(v, "item"):  # numpy scalars unwrap to python scalars
        v = v.item()
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _atomic_write(path, write_fn, mode="w", newline=None):
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, suffix=".tmp")
    try:
        with os.fdopen(fd, mode, newline=newline) as fh:
            write_fn(fh)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_csv(path, header, rows):
    def _write(fh):
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([format_cell(v) for v in row])

    _atomic_write(path, _write, newline="")


def read_csv(path):
    with open(path, newline="") as fh:
        r = csv.reader(fh)
        header = next(r)
        return header, [row for row in r]


def write_json(path, obj):
    _atomic_write(path, lambda fh: json.dump(obj, fh, indent=2, sort_keys=True))


def sha256_file(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()
