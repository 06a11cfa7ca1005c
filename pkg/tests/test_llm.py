import json
import random
import threading
import time
from http.server import BaseHTTPRequestHandler, HTTPServer

import pytest

from ci_porter.llm import (
    BASIC,
    EXHAUSTED,
    FIXED,
    GUIDELINE,
    ONE_SHOT,
    OUTPUT_CONTROL,
    REFINEMENT,
    ExtractionError,
    FunctionProvider,
    GuidelineSet,
    HttpProvider,
    MissingSlotError,
    MockProvider,
    ProviderTransportError,
    RemoteBuild,
    SimulatedBuild,
    TranslationCase,
    build_prompt,
    extract_config,
    refine_batch,
    run_strategy,
    select_one_shot_example,
    simulate_build,
    translate_once,
    truncate_lines,
)
from ci_porter.llm.providers import ProviderRequest, user_request
from ci_porter.metrics import text_similarity
from ci_porter.lint import ISSUE_TYPES, LintContext
from ci_porter.frontend import parse_travis

BROKEN = "name: CI\non: [push]\njobs:\n  a:\n    runs-on: ubuntu-latest\n    strategy:\n      matrix:\n" \
         "        python-version: [3.10]\n    steps:\n      - uses: actions/checkout@v4\n" \
         "      - uses: actions/setup-python@v5\n        with:\n" \
         "          python-version: ${{ matrix.python-version }}\n      - run: pytest\n"
CLEAN = BROKEN.replace("[3.10]", '["3.10"]')


# --- prompts ------------------------------------------------------------------


def test_basic_prompt_components(golden):
    prompt = build_prompt(BASIC, golden[0])
    for part in ("Travis CI", "GitHub Actions", "Translate", golden[0].rstrip("\n"), OUTPUT_CONTROL):
        assert part in prompt.text
    assert prompt.slots["SOURCE_CONFIGURATION"] == golden[0].rstrip("\n")


def test_one_shot_embeds_example():
    prompt = build_prompt(ONE_SHOT, "language: python\n",
                          {"EXAMPLE_SOURCE": "language: ruby", "EXAMPLE_TARGET": "on: push"})
    assert "language: ruby" in prompt.text and "on: push" in prompt.text


def test_refinement_needs_faulty_configuration():
    with pytest.raises(MissingSlotError) as err:
        build_prompt(REFINEMENT, "language: python\n", {})
    assert err.value.slot == "FAULTY_CONFIGURATION"


def test_guideline_prompt_lists_every_rule():
    rules = GuidelineSet.load()
    assert {t for t, _ in rules.rules} == set(ISSUE_TYPES)
    text = build_prompt(GUIDELINE, "language: python\n").text
    assert "17. " in text


def test_guideline_set_must_cover_taxonomy():
    with pytest.raises(ValueError):
        GuidelineSet((("trailing_zero", "quote versions"),))


def test_empty_source_rejected():
    with pytest.raises(ValueError):
        build_prompt(BASIC, "  \n")


# --- one-shot selection -------------------------------------------------------------


def test_select_one_shot():
    pool = [TranslationCase("a", "language: python\npython: [3.9]\nscript: pytest", "t"),
            TranslationCase("b", "language: node_js\nnode_js: [18]\nscript: npm test", "t"),
            TranslationCase("c", "language: ruby\nrvm: [3.2]\nscript: bundle exec rake", "t")]
    assert select_one_shot_example("anything", pool[:1]) is pool[0]
    assert select_one_shot_example(pool[1].source_text, pool) is pool[1]
    query = "language: node_js\nscript: npm test"
    ranking = sorted(pool, key=lambda r: -text_similarity(query, r.source_text))
    assert select_one_shot_example(query, pool) is ranking[0] is pool[1]
    with pytest.raises(ValueError):
        select_one_shot_example(query, [])


def test_select_one_shot_hand_ranking():
    # query tokens {language, python, script, pytest}; a shares 4 of 5, b shares 2 of 4, c shares 1 of 3
    pool = [TranslationCase("c", "language: ruby x", "t"),
            TranslationCase("b", "language: go script: make", "t"),
            TranslationCase("a", "language: python script: pytest extra", "t")]
    query = "language: python script: pytest"
    scores = [4 / (2 * 5 ** 0.5), 2 / (2 * 2), 1 / (2 * 3 ** 0.5)]
    assert [round(text_similarity(query, r.source_text), 6) for r in reversed(pool)] == \
        [round(s, 6) for s in scores]
    assert select_one_shot_example(query, pool).case_id == "a"


# --- extraction ---------------------------------------------------------------


def test_extract_fenced():
    body = "name: CI\non: [push]\njobs: {}\n"
    assert extract_config(f"Sure.\n```yaml\n{body}```\nDone.") == body


def test_extract_bare(golden):
    assert extract_config(golden[1]).strip() == golden[1].strip()


def test_extract_prose_wrapped(golden):
    assert extract_config(f"Here it is\n{golden[1]}\nHope this helps!").strip() == golden[1].strip()


def test_extract_failure():
    with pytest.raises(ExtractionError) as err:
        extract_config("Sure! Here is the translated workflow.")
    assert err.value.region is None


# --- providers ------------------------------------------------------------------


def test_mock_provider_script_lookup(tmp_path, golden):
    (tmp_path / "c1.0.txt").write_text(golden[1])
    (tmp_path / "c1.guideline.0.txt").write_text("guided")
    (tmp_path / "c1.2.txt").write_text("second")
    mock = MockProvider(tmp_path)
    ask = lambda it, strat=None: mock.complete(user_request("p", case_id="c1", iteration=it, strategy=strat)).content
    assert ask(0) == golden[1]
    assert ask(0, "guideline") == "guided"
    assert ask(1) == golden[1]  # falls back to the latest earlier script
    assert ask(3) == "second"
    with pytest.raises(ProviderTransportError):
        mock.complete(user_request("p", case_id="other", iteration=0))


def test_dotted_case_ids_parse():
    mock = MockProvider(responses={"repo.name.1.txt": "x"})
    assert mock.lookup("repo.name", 1) == "x"


def test_translate_once_strips_fences():
    provider = FunctionProvider(lambda req: f"```yaml\n{CLEAN}```")
    text, prompt = translate_once(provider, BASIC, TranslationCase("x", "language: python\n"))
    assert text == CLEAN and prompt.strategy == BASIC


def test_request_wire_format_omits_metadata():
    req = ProviderRequest("m", (("user", "hi"),), 0.0, {"case_id": "x"})
    assert req.to_wire() == {"model": "m", "temperature": 0.0, "messages": [{"role": "user", "content": "hi"}]}


class _Handler(BaseHTTPRequestHandler):
    delay = 0.0

    def do_POST(self):
        body = json.loads(self.rfile.read(int(self.headers["Content-Length"])))
        time.sleep(self.delay)
        payload = json.dumps({"content": f"echo {body['messages'][0]['content']} {self.headers.get('Authorization')}"})
        self.send_response(200)
        self.send_header("Content-Type", "application/json")
        self.end_headers()
        self.wfile.write(payload.encode())

    def log_message(self, *args):
        pass


@pytest.fixture
def local_server():
    servers = []

    def start(delay=0.0):
        handler = type("H", (_Handler,), {"delay": delay})
        server = HTTPServer(("127.0.0.1", 0), handler)
        threading.Thread(target=server.serve_forever, daemon=True).start()
        servers.append(server)
        return f"http://127.0.0.1:{server.server_port}/"

    yield start
    for s in servers:
        s.shutdown()
        s.server_close()


def test_http_provider_roundtrip(local_server):
    provider = HttpProvider(local_server(), key="k")
    assert provider.complete(user_request("hello")).content == "echo hello Bearer k"


def test_http_provider_timeout_is_transport_error(local_server):
    provider = HttpProvider(local_server(delay=0.5), timeout=0.1)
    with pytest.raises(ProviderTransportError) as err:
        provider.complete(user_request("hi", case_id="case7"))
    assert err.value.case_id == "case7"


def test_http_provider_from_env():
    with pytest.raises(ValueError):
        HttpProvider.from_env({})
    p = HttpProvider.from_env({"CI_PORTER_LLM_URL": "http://127.0.0.1:9/", "CI_PORTER_LLM_KEY": "s"})
    assert p.url == "http://127.0.0.1:9/" and p.key == "s"


# --- simulated build --------------------------------------------------------------


def test_simulate_build_examples(golden):
    assert simulate_build(golden[1]).ok
    bad = simulate_build(BROKEN)
    assert not bad.ok and any("trailing_zero" in m for m in bad.messages)


def test_advisory_issues_still_build():
    source = parse_travis("language: python\nscript: pytest\n")
    text = CLEAN.replace("      - run: pytest\n", "      - run: pytest\n      - run: make extra\n")
    outcome = simulate_build(text, LintContext(source=source))
    assert outcome.ok


def test_remote_build_is_interface_only():
    with pytest.raises(NotImplementedError):
        RemoteBuild()(None, CLEAN)


# --- refinement loop --------------------------------------------------------------


def scripted(schedule):
    """Provider returning CLEAN from iteration ``schedule[case]`` on (None = never)."""
    calls = []

    def fn(request):
        case, it = request.metadata["case_id"], request.metadata["iteration"]
        calls.append((case, it))
        fix_at = schedule[case]
        return CLEAN if fix_at is not None and it >= fix_at else BROKEN

    provider = FunctionProvider(fn)
    provider.calls = calls
    return provider


def _cases(ids):
    return [TranslationCase(i, "language: python\npython: ['3.10']\nscript: pytest\n") for i in ids]


def test_case_fixed_at_iteration_two():
    provider = scripted({"A": 2, "B": 1})
    result = refine_batch(_cases(["A", "B"]), provider, SimulatedBuild(), max_iters=5)
    assert result["A"].status == FIXED and result["A"].iteration == 2
    assert result["B"].status == FIXED and result["B"].iteration == 1


def test_zero_new_fixes_stops_loop():
    provider = scripted({"A": None})
    result = refine_batch(_cases(["A"]), provider, SimulatedBuild(), max_iters=5)
    assert result["A"].status == EXHAUSTED
    assert result.iterations_run == 2  # iteration 0 plus one refinement round
    assert provider.calls == [("A", 0), ("A", 1)]


def test_second_case_exhausted_when_nothing_new_is_fixed():
    result = refine_batch(_cases(["A", "B"]), scripted({"A": 1, "B": None}), SimulatedBuild(), max_iters=5)
    assert result["A"].status == FIXED and result["B"].status == EXHAUSTED
    assert result["B"].iteration == 2


def test_max_iters_bounds_calls():
    schedule = {f"c{i}": i for i in range(6)}
    provider = scripted(schedule)
    result = refine_batch(_cases(schedule), provider, SimulatedBuild(), max_iters=3)
    assert len(provider.calls) == result.provider_calls <= 6 * 4
    assert {k for k, s in result.items() if s.status == FIXED} == {"c0", "c1", "c2", "c3"}


@pytest.mark.parametrize("seed", range(5))
def test_fixed_set_is_monotone(seed):
    rng = random.Random(seed)
    schedule = {f"c{i}": rng.choice([0, 1, 1, 2, 3, None]) for i in range(10)}
    result = refine_batch(_cases(schedule), scripted(schedule), SimulatedBuild(), max_iters=5, workers=4)
    history = result.fixed_history
    assert all(a <= b for a, b in zip(history, history[1:]))


def test_refine_prompt_carries_errors_and_faulty_text():
    seen = []

    def fn(request):
        seen.append(request)
        return CLEAN if request.metadata["iteration"] >= 1 else BROKEN

    refine_batch(_cases(["A"]), FunctionProvider(fn), SimulatedBuild(), max_iters=2)
    refine_text = seen[1].messages[0][1]
    assert "trailing_zero" in refine_text and "[3.10]" in refine_text


def test_transport_error_counts_as_failure():
    def fn(request):
        raise ProviderTransportError("down")

    result = refine_batch(_cases(["A"]), FunctionProvider(fn), SimulatedBuild(), max_iters=2)
    assert result["A"].status == EXHAUSTED
    assert "provider error" in result["A"].last_outcome.messages[0]


def test_single_pass_strategies_do_not_refine():
    provider = scripted({"A": 1})
    result = run_strategy("guideline", _cases(["A"]), provider, SimulatedBuild())
    assert provider.calls == [("A", 0)] and result["A"].status == EXHAUSTED
    with pytest.raises(ValueError):
        run_strategy("nope", _cases(["A"]), provider, SimulatedBuild())
    with pytest.raises(ValueError):
        refine_batch(_cases(["A"]), provider, SimulatedBuild(), max_iters=0)


def test_truncate_lines():
    text = truncate_lines([f"line {i}" for i in range(150)])
    assert len(text.splitlines()) == 101 and "50 more lines" in text
