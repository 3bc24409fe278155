"""Reader for the line-delimited corpus schema.

Only the fields the bridge needs: space id and candidate texts, in file
order. Unknown fields are ignored, matching the schema contract.
"""

from __future__ import annotations

import json
from pathlib import Path

from .config import BridgeError


def read_corpus(path: str | Path) -> list[tuple[str, list[str]]]:
    path = Path(path)
    spaces: list[tuple[str, list[str]]] = []
    seen: set[str] = set()
    with path.open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise BridgeError(f"{path}:{lineno}: malformed JSON ({exc.msg})") from exc
            if not isinstance(obj, dict) or "id" not in obj or "candidates" not in obj:
                raise BridgeError(f"{path}:{lineno}: record needs 'id' and 'candidates'")
            space_id = obj["id"]
            if space_id in seen:
                raise BridgeError(f"{path}:{lineno}: duplicate space id {space_id!r}")
            seen.add(space_id)
            texts = []
            for c in obj["candidates"]:
                if not isinstance(c, dict) or not isinstance(c.get("text"), str):
                    raise BridgeError(f"{path}:{lineno}: candidate without a text string")
                texts.append(c["text"])
            if len(texts) < 2:
                raise BridgeError(f"{path}:{lineno}: space {space_id!r} has fewer than 2 candidates")
            spaces.append((space_id, texts))
    return spaces
