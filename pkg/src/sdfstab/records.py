"""Structured text records: one ``key=value`` per line, ``#`` starts a comment."""

from __future__ import annotations

import os
import tempfile
from typing import Iterable, Mapping


def format_value(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        s = f"{v:.12g}"
        return "0" if s == "-0" else s
    if isinstance(v, (list, tuple)):
        return ",".join(format_value(x) for x in v)
    return str(v)


def dump_record(items: Mapping | Iterable[tuple[str, object]], title: str | None = None) -> str:
    if isinstance(items, Mapping):
        items = items.items()
    lines = [f"# {title}"] if title else []
    for k, v in items:
        if "=" in k or "\n" in k:
            raise ValueError(f"record key {k!r} may not contain '=' or newlines")
        lines.append(f"{k}={format_value(v)}")
    return "\n".join(lines) + "\n"


def parse_record(text: str) -> dict[str, str]:
    out = {}
    for n, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValueError(f"line {n}: expected key=value, got {raw!r}")
        k, v = line.split("=", 1)
        out[k.strip()] = v.strip()
    return out


def write_atomic(path: str, text: str) -> None:
    """Write ``text`` to a temp file in the target directory, then rename over ``path``."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
