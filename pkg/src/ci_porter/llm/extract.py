"""Pull the configuration out of a model reply."""
from __future__ import annotations

import re
from typing import Optional

from ..frontend.loader import YamlParseError, load

_FENCE = re.compile(r"^```[ \t]*([\w.+-]*)[ \t]*\n(.*?)^```[ \t]*$", re.M | re.S)
_TOP_KEY = re.compile(r"""^(?:"[^"]+"|'[^']+'|[A-Za-z_][\w.-]*)\s*:(?:\s|$)""")


class ExtractionError(ValueError):
    """No usable configuration in the reply.  ``region`` holds the best guess
    at the configuration text, if any, so callers can still lint it."""

    def __init__(self, message: str, region: Optional[str] = None):
        super().__init__(message)
        self.region = region


def _yaml_like(line: str) -> bool:
    if not line.strip():
        return True
    if line[0] in " \t-#":
        return True
    return bool(_TOP_KEY.match(line))


def _region(text: str) -> Optional[str]:
    lines = text.splitlines()
    start = next((i for i, line in enumerate(lines) if _TOP_KEY.match(line)), None)
    if start is None:
        return None
    end = start
    for i in range(start, len(lines)):
        if not _yaml_like(lines[i]):
            break
        if lines[i].strip():
            end = i
    return "\n".join(lines[start:end + 1]) + "\n"


def extract_config(response: str) -> str:
    fences = _FENCE.findall(response or "")
    if fences:
        preferred = [body for lang, body in fences if lang.lower() in ("yaml", "yml")]
        region = (preferred or [body for _, body in fences])[0]
    else:
        region = _region(response or "")
    if region is None or not region.strip():
        raise ExtractionError("no YAML configuration found in the response")
    try:
        tree = load(region)
    except YamlParseError as exc:
        raise ExtractionError(f"extracted text is not valid YAML: {exc}", region) from None
    if not isinstance(tree, dict):
        raise ExtractionError("extracted text is not a YAML mapping", region)
    return region
