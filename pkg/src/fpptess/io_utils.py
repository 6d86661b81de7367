"""Atomic file output and table serialization."""

from __future__ import annotations

import json
import os
import tempfile


def atomic_write_text(path, text: str) -> None:
    """Write via a temporary file in the target directory, then rename."""
    path = os.fspath(path)
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(prefix=".tmp-", dir=directory)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def to_csv(columns, rows, header_lines=()) -> str:
    out = [f"# {line}" for line in header_lines]
    out.append(",".join(columns))
    for row in rows:
        out.append(",".join(fmt(row[c]) for c in columns))
    return "\n".join(out) + "\n"


def to_json(columns, rows, meta) -> str:
    payload = dict(meta)
    payload["columns"] = list(columns)
    payload["rows"] = [{c: row[c] for c in columns} for row in rows]
    return json.dumps(payload, sort_keys=True, indent=1) + "\n"
