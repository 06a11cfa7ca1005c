"""Source-faithful YAML loading.

PyYAML's composer already gives us the node graph before any type
resolution, so plain scalars are still the exact characters written in the
document.  We convert that graph into dict/list/str subclasses that carry
line numbers and quoting style, and never resolve scalars to numbers:
``3.10`` stays ``"3.10"``.
"""
from __future__ import annotations

from typing import Any, Optional

import yaml

NULL_WORDS = {"", "~", "null", "Null", "NULL"}
TRUE_WORDS = {"true", "True", "TRUE", "yes", "Yes", "YES", "on", "On", "ON"}
FALSE_WORDS = {"false", "False", "FALSE", "no", "No", "NO", "off", "Off", "OFF"}


class YamlParseError(ValueError):
    """Malformed YAML; ``line``/``column`` are 1-based when known."""

    def __init__(self, message: str, line: Optional[int] = None, column: Optional[int] = None,
                 problem: str = "", context: str = ""):
        where = f" (line {line}, column {column})" if line is not None else ""
        super().__init__(message + where)
        self.line = line
        self.column = column
        self.problem = problem
        self.context = context


class YamlScalar(str):
    """A string that remembers how and where it was written."""

    style: Optional[str]
    line: Optional[int]
    column: Optional[int]
    end_line: Optional[int]

    def __new__(cls, value, style=None, line=None, column=None, end_line=None):
        obj = super().__new__(cls, value)
        obj.style = style
        obj.line = line
        obj.column = column
        obj.end_line = end_line if end_line is not None else line
        return obj

    @property
    def quoted(self) -> bool:
        return self.style in ("'", '"')

    @property
    def plain(self) -> bool:
        return self.style is None

    @property
    def multiline_plain(self) -> bool:
        return self.plain and self.line is not None and self.end_line != self.line


class YamlMap(dict):
    """Mapping that records the line of each key (``key_lines``)."""

    def __init__(self, *args, line=None, **kwargs):
        super().__init__(*args, **kwargs)
        self.line = line
        self.key_lines: dict[str, int] = {}
        self.duplicate_keys: list[str] = []


class YamlSeq(list):
    def __init__(self, *args, line=None, flow=False):
        super().__init__(*args)
        self.line = line
        self.flow = flow


def _line(node) -> int:
    return node.start_mark.line + 1


def _convert(node, memo):
    if id(node) in memo:
        return memo[id(node)]
    if isinstance(node, yaml.ScalarNode):
        if node.style is None and node.value in NULL_WORDS:
            return None
        end_line = node.end_mark.line + 1
        # A plain scalar's end mark sits after any trailing line break.
        if node.style is None and node.end_mark.column == 0 and end_line > _line(node):
            end_line -= 1
        return YamlScalar(node.value, node.style, _line(node), node.start_mark.column + 1, end_line)
    if isinstance(node, yaml.SequenceNode):
        out = YamlSeq(line=_line(node), flow=bool(node.flow_style))
        memo[id(node)] = out
        out.extend(_convert(item, memo) for item in node.value)
        return out
    if isinstance(node, yaml.MappingNode):
        out = YamlMap(line=_line(node))
        memo[id(node)] = out
        for key_node, value_node in node.value:
            key = _convert(key_node, memo)
            value = _convert(value_node, memo)
            if key == "<<" and isinstance(value, dict):
                for k, v in value.items():
                    out.setdefault(k, v)
                continue
            key = "" if key is None else key
            if not isinstance(key, str):
                key = str(key)
            if key in out:
                out.duplicate_keys.append(key)
            out[key] = value
            out.key_lines[key] = _line(key_node)
        return out
    raise TypeError(f"unexpected node {node!r}")


def load(text: str) -> Any:
    """Parse one YAML document into YamlMap/YamlSeq/YamlScalar/None."""
    try:
        node = yaml.compose(text, Loader=yaml.SafeLoader)
    except yaml.MarkedYAMLError as exc:
        mark = exc.problem_mark or exc.context_mark
        line = mark.line + 1 if mark else None
        column = mark.column + 1 if mark else None
        raise YamlParseError(
            f"invalid YAML: {exc.problem or exc.context}", line, column,
            problem=exc.problem or "", context=exc.context or "",
        ) from None
    except yaml.YAMLError as exc:
        raise YamlParseError(f"invalid YAML: {exc}") from None
    if node is None:
        return None
    return _convert(node, {})


def as_bool(value: Any) -> Optional[bool]:
    """Interpret a loaded scalar as a boolean, or None if it is not one."""
    if isinstance(value, bool):
        return value
    if isinstance(value, str) and not getattr(value, "quoted", False):
        if value in TRUE_WORDS:
            return True
        if value in FALSE_WORDS:
            return False
    return None


def line_of(container: Any, key: Any = None) -> Optional[int]:
    if isinstance(container, YamlMap) and key is not None:
        return container.key_lines.get(key, container.line)
    if isinstance(container, YamlSeq) and isinstance(key, int) and 0 <= key < len(container):
        item = container[key]
        return getattr(item, "line", None) or container.line
    return getattr(container, "line", None)


def as_list(value: Any) -> list:
    """Scalars become one-element lists; None becomes empty."""
    if value is None:
        return []
    if isinstance(value, list):
        return list(value)
    return [value]


def plainify(value: Any) -> Any:
    """Strip position metadata: YamlMap -> dict, YamlSeq -> list, YamlScalar -> str."""
    if isinstance(value, dict):
        return {str(k): plainify(v) for k, v in value.items()}
    if isinstance(value, list):
        return [plainify(v) for v in value]
    if isinstance(value, str):
        return str(value)
    return value
