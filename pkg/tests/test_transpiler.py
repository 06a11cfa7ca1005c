import pytest

from ci_porter.frontend import TravisParseError, check_syntax, parse_travis, parse_workflow
from ci_porter.lint import LintContext, lint
from ci_porter.model import EnvEntry, Job, StageDef, Step, TravisConfig, Workflow
from ci_porter.registry import ActionRegistry, PackageSpec, RegistryError, parse_version
from ci_porter.transpiler import (
    DROPPED_NOTIFICATIONS,
    IMPLICIT_DEFAULT_ADDED,
    PACKAGE_INJECTED,
    SKIPPED_ARCH,
    TranspileError,
    TranspileOptions,
    inject_known_packages,
    invoked_tools,
    map_env,
    map_matrix,
    map_stages,
    materialize_defaults,
    transpile,
    transpile_text,
)


def _codes(warnings):
    return [w.code for w in warnings]


def test_golden_output(golden):
    text, warnings = transpile_text(golden[0])
    assert text == golden[1]
    assert _codes(warnings) == [DROPPED_NOTIFICATIONS]


def test_trailing_zero_version_quoted_in_output():
    text, _ = transpile_text("language: python\npython: [3.9, 3.10]\nscript: pytest\n")
    assert '["3.9", "3.10"]' in text or '[3.9, "3.10"]' in text
    assert '"3.10"' in text
    assert check_syntax(text) == []


def test_arch_filtering_warns():
    cfg = parse_travis("language: python\narch: [amd64, ppc64le]\nscript: pytest\n")
    warnings = []
    matrix = map_matrix(cfg, TranspileOptions(), warnings)
    assert matrix.axes["arch"] == ("x64",)
    assert _codes(warnings) == [SKIPPED_ARCH]
    assert "ppc64le" in warnings[0].detail


def test_strict_arch_raises():
    cfg = parse_travis("language: python\narch: [ppc64le]\nscript: pytest\n")
    with pytest.raises(TranspileError, match="ppc64le"):
        map_matrix(cfg, TranspileOptions(strict_arch=True), [])


def test_map_env():
    assert map_env([EnvEntry("TOX_ENV", "flake8", "assignment_string")]) == {"TOX_ENV": "flake8"}
    assert map_env([]) == {}
    warnings = []
    assert map_env([EnvEntry("A", "1"), EnvEntry("A", "2")], warnings) == {"A": "2"}
    assert len(warnings) == 1


def test_matrix_defaults():
    cfg = parse_travis("language: python\npython: [3.8, 3.9]\nscript: pytest\n")
    assert [v.raw_text for v in map_matrix(cfg).axes["python-version"]] == ["3.8", "3.9"]
    assert map_matrix(parse_travis("language: generic\nscript: make\n")).empty


def test_fast_finish_becomes_fail_fast():
    cfg = parse_travis("language: python\npython: [3.8, 3.9]\nmatrix:\n  fast_finish: true\nscript: pytest\n")
    assert map_matrix(cfg).fail_fast is False


def test_map_stages():
    cfg = parse_travis(
        "language: python\njobs:\n  include:\n"
        "    - stage: test-release\n      script: make check\n"
        "    - stage: release\n      script: make release\n")
    assert map_stages(cfg) == [("test-release", ()), ("release", ("test-release",))]
    assert map_stages(parse_travis("language: python\nscript: pytest\n")) == [("build", ())]


def test_top_level_script_runs_in_implicit_test_stage():
    cfg = parse_travis(
        "language: python\nscript: pytest\njobs:\n  include:\n"
        "    - stage: release\n      script: make release\n")
    assert map_stages(cfg) == [("test", ()), ("release", ("test",))]


def test_stage_chain():
    cfg = parse_travis(
        "language: python\njobs:\n  include:\n"
        "    - stage: a\n      script: x\n    - stage: b\n      script: y\n    - stage: c\n      script: z\n")
    assert [n for _, n in map_stages(cfg)] == [(), ("a",), ("b",)]


def test_duplicate_stage_names_rejected():
    with pytest.raises(TravisParseError):
        parse_travis("language: python\nstages: [test, test]\njobs:\n  include:\n    - stage: test\n      script: x\n")
    cfg = TravisConfig(language="python", stages=(StageDef("a"), StageDef("a")))
    with pytest.raises(TranspileError):
        map_stages(cfg)


def test_materialize_defaults_prepends_checkout_and_is_idempotent():
    cfg = parse_travis("language: python\npython: [3.9]\nscript: pytest\n")
    wf = Workflow(triggers={"push": None}, jobs={"build": Job(steps=(Step.run("pytest"),))})
    once, warnings = materialize_defaults(wf, cfg)
    steps = once.jobs["build"].steps
    assert steps[0].uses_ref.name == "actions/checkout"
    assert steps[0].uses_ref.version == ActionRegistry.load().get("checkout").version
    twice, _ = materialize_defaults(once, cfg)
    assert twice == once


def test_cache_step_added_with_warning():
    cfg = parse_travis("language: python\npython: [3.9]\ncache: pip\nscript: pytest\n")
    wf, warnings = transpile(cfg)
    uses = [str(s.uses_ref) for s in wf.jobs["build"].steps if s.kind == "uses"]
    assert any(u.startswith("actions/cache@") for u in uses)
    assert IMPLICIT_DEFAULT_ADDED in _codes(warnings)


def test_inject_known_packages():
    table = {"nose": PackageSpec("nose", "pip install nose", ("nosetests",))}
    cfg = parse_travis("language: python\nscript: nosetests\n")
    wf = Workflow(triggers={"push": None}, jobs={"b": Job(steps=(Step.run("nosetests"),))})
    out, warnings = inject_known_packages(wf, cfg, table)
    assert [s.run_text for s in out.jobs["b"].steps] == ["pip install nose", "nosetests"]
    assert _codes(warnings) == [PACKAGE_INJECTED]
    # table miss, and already installed
    wf2 = Workflow(triggers={"push": None}, jobs={"b": Job(steps=(Step.run("pytest"),))})
    assert inject_known_packages(wf2, cfg, table)[0] == wf2
    wf3 = Workflow(triggers={"push": None},
                   jobs={"b": Job(steps=(Step.run("pip install nose"), Step.run("nosetests")))})
    assert inject_known_packages(wf3, cfg, table)[0] == wf3


def test_invoked_tools():
    assert invoked_tools("FOO=1 sudo nosetests -v && python -m pytest | tee out") >= {"nosetests", "python", "pytest", "tee"}


def test_branch_filter_and_after_success():
    text, _ = transpile_text(
        "language: python\npython: [3.9]\nbranches:\n  only: [main]\n"
        "script: pytest\nafter_success: coveralls\n")
    wf = parse_workflow(text)
    assert wf.triggers["push"].branches == ("main",)
    last = wf.jobs["build"].steps[-1]
    assert last.run_text == "coveralls" and last.condition == "success()"
    assert "GITHUB_TOKEN" in last.env


def test_nothing_to_translate():
    with pytest.raises(TranspileError, match="nothing to translate"):
        transpile(parse_travis("language: python\npython: [3.9]\n"))


@pytest.mark.parametrize("source", [
    "language: node_js\nnode_js: ['18', '20']\nos: [linux, osx]\ninstall: npm ci\nscript: npm test\n",
    "language: java\njdk: [openjdk11, openjdk17]\nscript: mvn -B verify\n",
    "language: python\npython: [3.9]\nenv:\n  - TOX_ENV=py39\n  - TOX_ENV=flake8\nscript: tox -e $TOX_ENV\n",
    "language: python\npython: ['3.10']\nscript: pytest\njobs:\n  include:\n"
    "    - stage: deploy\n      script: ./deploy.sh\n",
    "language: ruby\nrvm: [3.1, 3.2]\nscript: bundle exec rake\nafter_failure: cat log/test.log\n",
])
def test_output_is_clean(source):
    text, _ = transpile_text(source)
    assert check_syntax(text) == []
    issues = lint(text, LintContext(source=parse_travis(source)))
    assert [i for i in issues if i.blocking] == []


def test_registry_validation():
    with pytest.raises(RegistryError):
        ActionRegistry.from_mapping({"checkout": {"action": "actions/checkout", "version": "v2", "minimum": "v3"}})
    assert parse_version("v3.1") == (3, 1)
    assert parse_version("main") is None
