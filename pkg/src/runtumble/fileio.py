#!/usr/bin/env python3
"""CSV/JSON emission helpers shared by the command-line front end.

All CSVs use a fixed header row, '.' decimal separator and 17 significant
digits so that written floats round-trip bit-exactly and repeated runs
with the same seed produce byte-identical files.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
import os
import subprocess
import time

__all__ = [
    "format_float",
    "write_csv",
    "read_csv",
    "write_json",
    "read_json",
    "sha256_of",
    "git_describe",
    "write_run_manifest",
]


def format_float(x):
    """17-significant-digit text form; round-trips any finite float."""
    if isinstance(x, float):
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        if math.isnan(x):
            return "nan"
        return "%.17g" % x
    return str(x)


def write_csv(path, header, rows):
    """Write rows (iterables of str/float/int) under a fixed header."""
    with open(path, "w", newline="\n") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([format_float(v) for v in row])
    return path


def read_csv(path):
    """Read back (header, rows-of-strings)."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: empty CSV") from None
        rows = [row for row in reader if row]
    return header, rows


def write_json(path, obj):
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def read_json(path):
    with open(path) as fh:
        return json.load(fh)


def sha256_of(path):
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def git_describe(cwd=None):
    """Best-effort build identifier; 'unknown' outside a git checkout."""
    try:
        out = subprocess.run(
            ["git", "describe", "--always", "--dirty", "--tags"],
            cwd=cwd,
            capture_output=True,
            text=True,
            timeout=10,
        )
    except (OSError, subprocess.TimeoutExpired):
        return "unknown"
    if out.returncode != 0:
        return "unknown"
    return out.stdout.strip() or "unknown"


def write_run_manifest(out_dir, subcommand, config, files, extra=None):
    """List every emitted file with a content hash.

    The wall_time field is the only entry expected to differ between
    identically-configured runs.
    """
    entries = []
    for path in sorted(files):
        entries.append(
            {
                "path": os.path.relpath(path, out_dir),
                "sha256": sha256_of(path),
                "bytes": os.path.getsize(path),
            }
        )
    manifest = {
        "subcommand": subcommand,
        "config": config,
        "build": git_describe(),
        "wall_time": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
        "files": entries,
    }
    if extra:
        manifest.update(extra)
    path = os.path.join(out_dir, "run_manifest.json")
    write_json(path, manifest)
    return path
