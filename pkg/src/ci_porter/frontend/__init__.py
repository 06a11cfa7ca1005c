"""YAML front end: parse both CI dialects, render workflows, check syntax."""
from .loader import YamlParseError, load
from .render import RenderError, render_workflow
from .syntax import SyntaxFinding, check_syntax
from .travis import EmptyConfigError, TravisParseError, parse_travis
from .workflow import NotAWorkflowError, parse_workflow

__all__ = [
    "EmptyConfigError",
    "NotAWorkflowError",
    "RenderError",
    "SyntaxFinding",
    "TravisParseError",
    "YamlParseError",
    "check_syntax",
    "load",
    "parse_travis",
    "parse_workflow",
    "render_workflow",
]
