import pytest

from ci_porter.frontend import (
    EmptyConfigError,
    NotAWorkflowError,
    RenderError,
    YamlParseError,
    check_syntax,
    load,
    parse_travis,
    parse_workflow,
    render_workflow,
)
from ci_porter.frontend.loader import YamlMap, YamlScalar, YamlSeq
from ci_porter.model import (
    ActionRef,
    BlankCommand,
    Job,
    Matrix,
    Step,
    VersionLiteral,
    Workflow,
    matrix_references,
    normalize_command,
    split_commands,
    version_axis_values,
    workflow_violations,
)


# --- model --------------------------------------------------------------------


def test_normalize_command_collapses_whitespace():
    assert normalize_command("  python -m   pytest ").normalized == "python -m pytest"
    assert normalize_command("python setup.py develop").normalized == "python setup.py develop"


def test_blank_command_signal():
    with pytest.raises(BlankCommand):
        normalize_command("\t")


def test_split_commands_skips_blank_lines():
    cmds = split_commands("pip install .\n\n  pytest -q\n")
    assert [c.normalized for c in cmds] == ["pip install .", "pytest -q"]


def test_version_literal_equality_ignores_quoting():
    assert VersionLiteral("3.10", quoted=True) == VersionLiteral("3.10", quoted=False)
    assert VersionLiteral("3.10") != VersionLiteral("3.1")


@pytest.mark.parametrize("raw,quoted,hazard", [
    ("3.10", False, True),
    ("3.10", True, False),
    ("3.9", False, False),
    ("1.20", False, True),
    ("10", False, False),
    ("2.0", False, True),
])
def test_trailing_zero_hazard(raw, quoted, hazard):
    assert VersionLiteral(raw, quoted).trailing_zero_hazard is hazard


def test_action_ref_parse():
    assert ActionRef.parse("actions/checkout@v4") == ActionRef("actions/checkout", "v4")
    assert ActionRef.parse("./local/action") == ActionRef("./local/action", None)
    assert str(ActionRef.parse("docker://alpine:3")) == "docker://alpine:3"


def test_matrix_references_and_violations():
    job = Job(steps=(Step.run("echo ${{ matrix.os }}"),))
    assert matrix_references(job.steps[0]) == {"os"}
    wf = Workflow(triggers={"push": None}, jobs={"a": job, "b": Job(needs=("zzz",), steps=(Step.run("x"),))})
    problems = workflow_violations(wf)
    assert any("undefined matrix axis 'os'" in p for p in problems)
    assert any("unknown job 'zzz'" in p for p in problems)


# --- loader -------------------------------------------------------------------


def test_loader_keeps_scalar_style_and_text():
    tree = load('a: 3.10\nb: "3.10"\nc: [x, y]\n')
    assert isinstance(tree, YamlMap)
    assert tree["a"] == "3.10" and isinstance(tree["a"], YamlScalar)
    assert tree["a"].plain and not tree["a"].quoted
    assert tree["b"].quoted
    assert isinstance(tree["c"], YamlSeq)
    assert tree["a"].line == 1 and tree["b"].line == 2


def test_loader_reports_line_of_parse_error():
    with pytest.raises(YamlParseError) as err:
        load("a: [1, 2\nb: 3\n")
    assert err.value.line is not None


# --- travis -------------------------------------------------------------------


def test_parse_travis_golden(golden):
    cfg = parse_travis(golden[0])
    assert cfg.language == "python"
    assert [v.raw_text for v in version_axis_values(cfg)] == ["3.8", "3.9"]
    assert [c.normalized for c in cfg.phases["install"]] == ["python setup.py develop"]
    assert [c.normalized for c in cfg.phases["script"]] == ["python -m pytest"]
    assert cfg.notifications is not None


def test_parse_travis_empty():
    with pytest.raises(EmptyConfigError):
        parse_travis("")


def test_parse_travis_minimal_and_no_axis():
    assert [v.raw_text for v in parse_travis("language: python\npython: [3.8]").versions] == ["3.8"]
    assert parse_travis("language: generic\nscript: make").versions == ()


def test_quoted_310_stays_text():
    cfg = parse_travis('language: python\npython:\n  - "3.10"\n')
    assert cfg.versions == (VersionLiteral("3.10"),)
    assert cfg.versions[0].quoted


def test_unquoted_310_is_not_reinterpreted():
    cfg = parse_travis("language: python\npython: [3.10]\n")
    assert cfg.versions[0].raw_text == "3.10"
    assert cfg.versions[0].trailing_zero_hazard


def test_parse_travis_env_forms():
    cfg = parse_travis("language: python\nenv:\n  global:\n    - TOX_ENV=flake8\n    - A=1\nscript: tox\n")
    assert [(e.name, e.value, e.origin_form) for e in cfg.global_env] == [
        ("TOX_ENV", "flake8", "assignment_string"), ("A", "1", "assignment_string")]


# --- workflow -----------------------------------------------------------------


def test_parse_workflow_golden(golden):
    wf = parse_workflow(golden[1])
    assert set(wf.triggers) == {"push", "pull_request"}
    assert list(wf.jobs) == ["build"]
    axis = wf.jobs["build"].strategy_matrix.axes["python-version"]
    assert [v.raw_text for v in axis] == ["3.8", "3.9"]


def test_not_a_workflow():
    with pytest.raises(NotAWorkflowError):
        parse_workflow("on: push")


def test_needs_parsed():
    text = ("on: push\njobs:\n  a:\n    runs-on: ubuntu-latest\n    steps:\n      - run: x\n"
            "  b:\n    runs-on: ubuntu-latest\n    needs: a\n    steps:\n      - run: y\n")
    assert parse_workflow(text).jobs["b"].needs == ("a",)


# --- render -------------------------------------------------------------------


def _wf(values, needs=()):
    job = Job(strategy_matrix=Matrix(axes={"python-version": tuple(values)}), needs=needs,
              steps=(Step.uses("actions/checkout@v4"), Step.run("pytest")))
    return Workflow(name="CI", triggers={"push": None}, jobs={"build": job})


def test_render_quotes_trailing_zero():
    text = render_workflow(_wf([VersionLiteral("3.9"), VersionLiteral("3.10")]))
    assert '"3.10"' in text
    assert "3.9" in text and '"3.9"' not in text


def test_render_refuses_invalid_workflow():
    with pytest.raises(RenderError):
        render_workflow(_wf([VersionLiteral("3.9")], needs=("missing",)))


def test_render_roundtrip_golden(golden):
    assert render_workflow(parse_workflow(golden[1])) == golden[1]


def test_render_multiline_run_uses_block_scalar():
    wf = Workflow(triggers={"push": None},
                  jobs={"a": Job(steps=(Step.run("echo one\necho two: three"),))})
    text = render_workflow(wf)
    assert "run: |" in text
    assert check_syntax(text) == []
    back = parse_workflow(text).jobs["a"].steps[0]
    assert [c.normalized for c in back.run_commands] == ["echo one", "echo two: three"]


# --- syntax -------------------------------------------------------------------


def _subtypes(text):
    return [f.subtype for f in check_syntax(text)]


def test_syntax_missing_symbol_triggers():
    text = "on:\n  push\n  pull_request\njobs:\n  a:\n    runs-on: ubuntu-latest\n    steps:\n      - run: x\n"
    assert _subtypes(text) == ["missing_symbol"]


def test_syntax_exclude_sibling_of_matrix():
    text = ("on: push\njobs:\n  a:\n    runs-on: ubuntu-latest\n    strategy:\n      matrix:\n"
            "        os: [ubuntu-latest]\n      exclude:\n        - os: ubuntu-latest\n"
            "    steps:\n      - run: x\n")
    assert _subtypes(text) == ["indentation_error"]


def test_syntax_matrix_reference_without_strategy():
    text = ("on: push\njobs:\n  a:\n    runs-on: ubuntu-latest\n    steps:\n"
            "      - uses: actions/setup-python@v5\n        with:\n"
            "          python-version: ${{ matrix.python-version }}\n")
    assert _subtypes(text) == ["missing_or_misplaced_definition"]


def test_syntax_unparseable_document_gives_one_finding():
    findings = check_syntax("jobs:\n  a:\n    steps:\n    - run: x\n   - run: y\n")
    assert len(findings) == 1


def test_syntax_clean(golden):
    assert check_syntax(golden[1]) == []


def test_syntax_empty_document():
    assert _subtypes("") == ["missing_or_misplaced_definition"]
