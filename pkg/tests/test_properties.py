import random

from hypothesis import given, settings
from hypothesis import strategies as st

from ci_porter.frontend import check_syntax, parse_travis, parse_workflow, render_workflow
from ci_porter.lint import lint
from ci_porter.model import VersionLiteral
from ci_porter.transpiler import transpile_text
from tests.gen import HAZARDS, PLAIN, random_workflow, raw_texts

seeds = st.integers(min_value=0, max_value=2**32 - 1)


@settings(max_examples=60, deadline=None)
@given(seeds)
def test_render_parse_preserves_raw_text(seed):
    wf = random_workflow(random.Random(seed))
    text = render_workflow(wf)
    assert check_syntax(text) == []
    back = parse_workflow(text)
    assert raw_texts(back) == raw_texts(wf)


@settings(max_examples=40, deadline=None)
@given(seeds)
def test_render_is_a_fixed_point(seed):
    text = render_workflow(random_workflow(random.Random(seed)))
    assert render_workflow(parse_workflow(text)) == text


@settings(max_examples=40, deadline=None)
@given(seeds)
def test_rendered_hazards_are_quoted(seed):
    text = render_workflow(random_workflow(random.Random(seed)))
    for job in parse_workflow(text).jobs.values():
        for values in job.strategy_matrix.axes.values():
            assert not any(v.trailing_zero_hazard for v in values)
    assert not [i for i in lint(text) if i.issue_type == "trailing_zero"]


versions = st.lists(st.sampled_from(HAZARDS + PLAIN[:4]), min_size=1, max_size=5, unique=True)


@settings(max_examples=40, deadline=None)
@given(versions, st.booleans())
def test_transpiled_versions_survive(values, quote):
    fmt = (lambda v: f'"{v}"') if quote else str
    source = f"language: python\npython: [{', '.join(fmt(v) for v in values)}]\nscript: pytest\n"
    text, _ = transpile_text(source)
    assert check_syntax(text) == []
    axis = parse_workflow(text).jobs["build"].strategy_matrix.axes["python-version"]
    assert [v.raw_text for v in axis] == [v.raw_text for v in parse_travis(source).versions] == values


@settings(max_examples=40, deadline=None)
@given(st.sampled_from(HAZARDS + PLAIN), st.booleans())
def test_version_equality_ignores_quote_flag(raw, quoted):
    assert VersionLiteral(raw, quoted) == VersionLiteral(raw, not quoted)
    assert hash(VersionLiteral(raw, quoted)) == hash(VersionLiteral(raw, not quoted))
