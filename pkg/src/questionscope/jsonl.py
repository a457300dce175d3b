"""Line-oriented JSON reading and writing."""
import json
import os
from typing import Any, Dict, Iterable, Iterator


def read_jsonl(path: str) -> Iterator[Dict[str, Any]]:
    """Yield one parsed object per non-empty line."""
    with open(path, "r", encoding="utf-8") as f:
        for line in f:
            line = line.strip()
            if line:
                yield json.loads(line)


def write_jsonl(path: str, rows: Iterable[Dict[str, Any]]) -> int:
    """Write rows as one JSON object per line; returns the row count.

    Keys are written in insertion order and floats via repr, so identical
    inputs produce byte-identical files.
    """
    parent = os.path.dirname(path)
    if parent:
        os.makedirs(parent, exist_ok=True)
    n = 0
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for row in rows:
            f.write(json.dumps(row, ensure_ascii=False))
            f.write("\n")
            n += 1
    return n
