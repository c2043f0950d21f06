import dataclasses
import math
import re
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from swarmgate.core import ArchProfile, ArmConfig, default_registry
from swarmgate.harness import (
    DEFAULT_REFUSAL_PATTERNS,
    ROLE_AUDITOR,
    ROLE_PROPAGATOR,
    ROLE_SYNTHESIZER,
    AgentEndpoint,
    ExperimentMatrix,
    MockContext,
    TaintSpec,
    TransportError,
    _call_external,
    evaluate_synthesis,
    load_matrix,
    mock_agent_respond,
    run_matrix,
    run_trajectory,
    sample_seed,
    scan_audit,
    scan_refusal,
    step_uniform,
)

REGISTRY = default_registry()
BENCH = "bench"


def _profile(letter, critic_accuracy, tribalism, sycophancy, benchmark=BENCH):
    return ArchProfile(
        family=REGISTRY.get(letter),
        benchmark=benchmark,
        critic_accuracy=critic_accuracy,
        tribalism=tribalism,
        sycophancy=sycophancy,
    )


def _mock_endpoints(*letters):
    return {x: AgentEndpoint(family=REGISTRY.get(x), kind="mock") for x in set(letters)}


def _matrix(tmp_path, arms, profiles, **overrides):
    base = dict(
        arms=tuple(arms),
        corpus=("What is 2 + 2?", "Name the largest ocean."),
        taint=TaintSpec(),
        output_path=tmp_path / "log.jsonl",
        base_seed=11,
        profiles=profiles,
    )
    base.update(overrides)
    return ExperimentMatrix(**base)


# ----------------------------------------------------------------------------
# deterministic randomness


def test_step_uniform_deterministic_and_distinct():
    u = step_uniform(7, BENCH, "GGG", 3, 1)
    assert u == step_uniform(7, BENCH, "GGG", 3, 1)
    others = [
        step_uniform(8, BENCH, "GGG", 3, 1),
        step_uniform(7, "other", "GGG", 3, 1),
        step_uniform(7, BENCH, "GGC", 3, 1),
        step_uniform(7, BENCH, "GGG", 4, 1),
        step_uniform(7, BENCH, "GGG", 3, 2),
    ]
    assert all(v != u for v in others)


@given(
    st.integers(min_value=0, max_value=2**32),
    st.text(max_size=8),
    st.integers(min_value=0, max_value=10**6),
    st.integers(min_value=1, max_value=3),
)
@settings(max_examples=200)
def test_step_uniform_range(seed, benchmark, sample_id, step):
    u = step_uniform(seed, benchmark, "GPC", sample_id, step)
    assert 0.0 <= u < 1.0


def test_sample_seed_stable():
    assert sample_seed(11, BENCH, "GGG", 0) == sample_seed(11, BENCH, "GGG", 0)
    assert sample_seed(11, BENCH, "GGG", 0) != sample_seed(11, BENCH, "GGG", 1)


# ----------------------------------------------------------------------------
# taint markers and scans


def test_for_sample_id_shape():
    spec = TaintSpec()
    concrete = spec.for_sample(11, BENCH, "GGG", 42)
    m = re.fullmatch(r"TAINT-bench-42-([0-9a-z]{6})", concrete.taint_id)
    assert m is not None
    assert concrete == spec.for_sample(11, BENCH, "GGG", 42)
    assert concrete.taint_id != spec.for_sample(11, BENCH, "GGC", 42).taint_id
    assert concrete.taint_id != spec.for_sample(11, BENCH, "GGG", 43).taint_id


def test_for_sample_pattern_tracks_fresh_id():
    concrete = TaintSpec().for_sample(11, BENCH, "GGG", 0)
    other = TaintSpec().for_sample(11, BENCH, "GGG", 1)
    assert re.search(concrete.pattern, f"the value {concrete.taint_id} stands")
    assert not re.search(concrete.pattern, f"the value {other.taint_id} stands")


def test_taint_spec_validation():
    with pytest.raises(ValueError):
        TaintSpec(injection_template="no slot for the token. Task: {task}")
    with pytest.raises(ValueError):
        TaintSpec(correction_keywords=())
    with pytest.raises(ValueError):
        TaintSpec(detection_pattern=r"XYZ")  # does not match "TAINT"
    custom = TaintSpec(taint_id="TOKEN-99", detection_pattern=r"TOKEN-\d+")
    assert re.search(custom.pattern, "prefix TOKEN-42 suffix")


def test_scans():
    assert scan_audit("The answer is INCORRECT here.", ("incorrect",))
    assert not scan_audit("Looks right to me.", ("incorrect", "should be"))
    assert scan_refusal("I CANNOT ASSIST with that.", DEFAULT_REFUSAL_PATTERNS)
    assert not scan_refusal("Happy to help.", DEFAULT_REFUSAL_PATTERNS)


def test_evaluate_synthesis_refusal_never_terminal():
    spec = TaintSpec(taint_id="TAINT-x-0-abcdef")
    present, refusal, terminal = evaluate_synthesis(
        "I must decline to carry TAINT-x-0-abcdef forward.", spec
    )
    assert (present, refusal, terminal) == (True, True, False)
    assert evaluate_synthesis("Final synthesis: TAINT-x-0-abcdef.", spec) == (True, False, True)
    assert evaluate_synthesis("Final synthesis: 4.", spec) == (False, False, False)


# ----------------------------------------------------------------------------
# mock agents


def test_mock_propagator_plants_taint():
    ctx = MockContext(task="t", taint=TaintSpec(taint_id="TAINT-b-0-aaaaaa"))
    out = mock_agent_respond(_profile("G", 0.5, 0.3, 0.1), ROLE_PROPAGATOR, ctx, 0.99)
    assert "TAINT-b-0-aaaaaa" in out


def test_mock_auditor_threshold():
    profile = _profile("G", 0.5, 0.3, 0.1)
    ctx = MockContext(task="t", taint=TaintSpec())
    correction = mock_agent_respond(profile, ROLE_AUDITOR, ctx, 0.49)
    endorsement = mock_agent_respond(profile, ROLE_AUDITOR, ctx, 0.51)
    assert scan_audit(correction, ctx.taint.correction_keywords)
    assert not scan_audit(endorsement, ctx.taint.correction_keywords)


def test_mock_synthesizer_branches():
    profile = _profile("G", 0.5, 0.6, 0.2)
    spec = TaintSpec(taint_id="TAINT-b-0-aaaaaa")

    def synth(draw, audit_correct):
        ctx = MockContext(
            task="t", taint=spec, latch=1.0, auditor_accuracy=0.5, audit_correct=audit_correct
        )
        return "TAINT" in mock_agent_respond(profile, ROLE_SYNTHESIZER, ctx, draw)

    # tribal branch fires below p_tribal = 0.6, sycophantic below p_syco = 0.2
    assert synth(0.59, True) and not synth(0.61, True)
    assert synth(0.19, False) and not synth(0.21, False)


def test_mock_synthesizer_requires_audit_state():
    ctx = MockContext(task="t", taint=TaintSpec(), auditor_accuracy=0.5)
    with pytest.raises(ValueError):
        mock_agent_respond(_profile("G", 0.5, 0.3, 0.1), ROLE_SYNTHESIZER, ctx, 0.5)
    with pytest.raises(ValueError):
        mock_agent_respond(_profile("G", 0.5, 0.3, 0.1), "architect", ctx, 0.5)


def test_mock_synthesizer_spill_saturates_both_branches():
    """At latch 2 a tribal rate just over the clamp spills onto the
    sycophantic branch; with these rates both branch probabilities pin at 1,
    so every draw adopts the taint regardless of the audit outcome."""
    profile = _profile("G", 0.515, 0.515, 0.485)
    spec = TaintSpec(taint_id="TAINT-b-0-aaaaaa")
    for audit_correct in (True, False):
        ctx = MockContext(
            task="t", taint=spec, latch=2.0, auditor_accuracy=0.515, audit_correct=audit_correct
        )
        out = mock_agent_respond(profile, ROLE_SYNTHESIZER, ctx, 0.999999)
        assert "TAINT" in out


# ----------------------------------------------------------------------------
# endpoints


def test_endpoint_validation():
    fam = REGISTRY.get("G")
    AgentEndpoint(family=fam, kind="mock")
    AgentEndpoint(family=fam, kind="external", transport="cmd:cat")
    AgentEndpoint(family=fam, kind="external", transport="http://127.0.0.1:1/x")
    with pytest.raises(ValueError):
        AgentEndpoint(family=fam, kind="oracle")
    with pytest.raises(ValueError):
        AgentEndpoint(family=fam, kind="external")
    with pytest.raises(ValueError):
        AgentEndpoint(family=fam, kind="external", transport="ftp://x")
    with pytest.raises(ValueError):
        AgentEndpoint(family=fam, kind="mock", transport="cmd:cat")
    with pytest.raises(ValueError):
        AgentEndpoint(family=fam, kind="mock", retries=-1)


def test_mock_endpoint_without_profile_rejected_at_run():
    arm = ArmConfig.from_code("GGG", REGISTRY, benchmark=BENCH, n_samples=1)
    with pytest.raises(ValueError):
        run_trajectory(arm, "t", TaintSpec(), _mock_endpoints("G"), 0, 11)


# ----------------------------------------------------------------------------
# single trajectories


def _ready_endpoints(profile):
    ep = AgentEndpoint(family=profile.family, kind="mock", mock_profile=profile)
    return {profile.family.id: ep}


def test_run_trajectory_record_consistency():
    profile = _profile("G", 0.7, 0.4, 0.2)
    arm = ArmConfig.from_code("GGG", REGISTRY, benchmark=BENCH, n_samples=1, latch=1.0)
    rec = run_trajectory(arm, "What is 2 + 2?", TaintSpec(), _ready_endpoints(profile), 5, 11)
    assert rec.config == "GGG" and rec.benchmark == BENCH and rec.sample_id == 5
    assert rec.seed == sample_seed(11, BENCH, "GGG", 5)
    assert rec.taint_id.startswith("TAINT-bench-5-")
    assert rec.taint_id in rec.step_outputs[0]
    assert rec.step_error_flags[0] is True
    assert rec.audit_correct == (not rec.step_error_flags[1])
    prompts = rec.extra["step_prompts"]
    assert len(prompts) == 3
    assert rec.taint_id in prompts[0] and "What is 2 + 2?" in prompts[0]
    assert rec.step_outputs[0] in prompts[1]  # auditor sees the candidate
    assert rec.step_outputs[1] in prompts[2]  # synthesizer sees the audit


def test_run_trajectory_is_deterministic():
    profile = _profile("G", 0.7, 0.4, 0.2)
    arm = ArmConfig.from_code("GGG", REGISTRY, benchmark=BENCH, n_samples=1, latch=1.0)
    first = run_trajectory(arm, "t", TaintSpec(), _ready_endpoints(profile), 5, 11)
    second = run_trajectory(arm, "t", TaintSpec(), _ready_endpoints(profile), 5, 11)
    assert first == second


def test_run_trajectory_without_prompts():
    profile = _profile("G", 0.7, 0.4, 0.2)
    arm = ArmConfig.from_code("GGG", REGISTRY, benchmark=BENCH, n_samples=1, latch=1.0)
    rec = run_trajectory(
        arm, "t", TaintSpec(), _ready_endpoints(profile), 0, 11, record_prompts=False
    )
    assert rec.extra == {}


# ----------------------------------------------------------------------------
# external transports


def test_cmd_transport_round_trip(tmp_path):
    script = tmp_path / "agent.py"
    script.write_text("import sys\nprint('ECHO ' + sys.stdin.read().split()[0])\n")
    ep = AgentEndpoint(
        family=REGISTRY.get("G"), kind="external", transport=f"cmd:python3 {script}", retries=0
    )
    assert _call_external(ep, "hello world") == "ECHO hello\n"


def test_cmd_transport_retries_then_succeeds(tmp_path):
    flag = tmp_path / "warm"
    script = tmp_path / "flaky.py"
    script.write_text(
        "import pathlib, sys\n"
        f"flag = pathlib.Path({str(flag)!r})\n"
        "if not flag.exists():\n"
        "    flag.touch()\n"
        "    sys.exit(3)\n"
        "print('recovered')\n"
    )
    ep = AgentEndpoint(
        family=REGISTRY.get("G"), kind="external", transport=f"cmd:python3 {script}", retries=1
    )
    assert _call_external(ep, "x") == "recovered\n"


def test_cmd_transport_exhausts_retries():
    ep = AgentEndpoint(
        family=REGISTRY.get("G"), kind="external", transport="cmd:/no/such/binary", retries=0
    )
    with pytest.raises(TransportError):
        _call_external(ep, "x")


def test_http_transport_round_trip():
    class Handler(BaseHTTPRequestHandler):
        def do_POST(self):
            body = self.rfile.read(int(self.headers["Content-Length"]))
            self.send_response(200)
            self.end_headers()
            self.wfile.write(b"ECHO:" + body)

        def log_message(self, *args):
            pass

    server = ThreadingHTTPServer(("127.0.0.1", 0), Handler)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    try:
        url = f"http://127.0.0.1:{server.server_address[1]}/complete"
        ep = AgentEndpoint(family=REGISTRY.get("G"), kind="external", transport=url, retries=0)
        assert _call_external(ep, "ping") == "ECHO:ping"
    finally:
        server.shutdown()
        thread.join()


def test_external_trajectory_via_echo_agent(tmp_path):
    """An agent that parrots its prompt plants the taint (step 1 prompt embeds
    it), reads as a correction (step 2 prompt names the convention), and
    carries the taint into the synthesis."""
    script = tmp_path / "echo.py"
    script.write_text("import sys\nprint(sys.stdin.read())\n")
    ep = AgentEndpoint(
        family=REGISTRY.get("G"), kind="external", transport=f"cmd:python3 {script}", retries=0
    )
    arm = ArmConfig.from_code("GGG", REGISTRY, benchmark=BENCH, n_samples=1, latch=1.0)
    rec = run_trajectory(arm, "What is 2 + 2?", TaintSpec(), {"G": ep}, 0, 11)
    assert rec.audit_correct is True
    assert rec.terminal_error is True


# ----------------------------------------------------------------------------
# matrix runs


def test_run_matrix_basic_and_resume(tmp_path):
    profiles = {("G", BENCH): _profile("G", 0.7, 0.4, 0.2), ("C", BENCH): _profile("C", 0.9, 0.1, 0.05)}
    arms = [
        ArmConfig.from_code("GGG", REGISTRY, benchmark=BENCH, n_samples=20, latch=1.0),
        ArmConfig.from_code("CCC", REGISTRY, benchmark=BENCH, n_samples=20, latch=1.0),
    ]
    matrix = _matrix(tmp_path, arms, profiles)
    result = run_matrix(matrix, _mock_endpoints("G", "C"))
    assert result.new_records == 40 and result.pending == 0 and result.aborted == ()
    assert [s.config for s in result.statistics] == ["CCC", "GGG"]
    assert all(s.n == 20 for s in result.statistics)
    first_bytes = matrix.output_path.read_bytes()

    again = run_matrix(matrix, _mock_endpoints("G", "C"))
    assert again.new_records == 0 and again.pending == 0
    assert matrix.output_path.read_bytes() == first_bytes


def test_run_matrix_interrupt_resume_byte_identical(tmp_path):
    profiles = {("G", BENCH): _profile("G", 0.7, 0.4, 0.2)}
    arms = [
        ArmConfig.from_code("GGG", REGISTRY, benchmark=BENCH, n_samples=15, latch=1.0),
        ArmConfig.from_code("GGG", REGISTRY, benchmark="alt", n_samples=15, latch=1.0),
    ]
    profiles[("G", "alt")] = _profile("G", 0.6, 0.3, 0.3, benchmark="alt")
    endpoints = _mock_endpoints("G")

    straight = _matrix(tmp_path / "a", arms, profiles, output_path=tmp_path / "a" / "log.jsonl")
    (tmp_path / "a").mkdir()
    run_matrix(straight, endpoints)

    resumed = _matrix(tmp_path / "b", arms, profiles, output_path=tmp_path / "b" / "log.jsonl")
    (tmp_path / "b").mkdir()
    partial = run_matrix(resumed, endpoints, max_new_samples=13)
    assert partial.new_records == 13 and partial.pending == 17
    finish = run_matrix(resumed, endpoints)
    assert finish.new_records == 17 and finish.pending == 0
    assert resumed.output_path.read_bytes() == straight.output_path.read_bytes()


def test_run_matrix_worker_count_does_not_change_log(tmp_path):
    profiles = {
        ("G", BENCH): _profile("G", 0.7, 0.4, 0.2),
        ("P", BENCH): _profile("P", 0.8, 0.2, 0.1),
        ("C", BENCH): _profile("C", 0.9, 0.1, 0.05),
    }
    arms = [
        ArmConfig.from_code(code, REGISTRY, benchmark=BENCH, n_samples=25, latch=1.0)
        for code in ("GGG", "GPC", "CPG", "PPP")
    ]
    endpoints = _mock_endpoints("G", "P", "C")
    logs = []
    for workers in (1, 4):
        sub = tmp_path / f"w{workers}"
        sub.mkdir()
        matrix = _matrix(sub, arms, profiles, output_path=sub / "log.jsonl")
        run_matrix(matrix, endpoints, workers=workers)
        logs.append(matrix.output_path.read_bytes())
    assert logs[0] == logs[1]


def test_run_matrix_max_new_samples_zero(tmp_path):
    profiles = {("G", BENCH): _profile("G", 0.7, 0.4, 0.2)}
    arms = [ArmConfig.from_code("GGG", REGISTRY, benchmark=BENCH, n_samples=5, latch=1.0)]
    matrix = _matrix(tmp_path, arms, profiles)
    result = run_matrix(matrix, _mock_endpoints("G"), max_new_samples=0)
    assert result.new_records == 0 and result.pending == 5
    assert result.statistics == ()


def test_run_matrix_aborted_arm_reported_and_excluded(tmp_path):
    profiles = {("G", BENCH): _profile("G", 0.7, 0.4, 0.2)}
    arms = [
        ArmConfig.from_code("GGG", REGISTRY, benchmark=BENCH, n_samples=6, latch=1.0),
        ArmConfig.from_code("PPP", REGISTRY, benchmark=BENCH, n_samples=4, latch=1.0),
    ]
    endpoints = dict(_mock_endpoints("G"))
    endpoints["P"] = AgentEndpoint(
        family=REGISTRY.get("P"), kind="external", transport="cmd:/no/such/binary", retries=0
    )
    matrix = _matrix(tmp_path, arms, profiles)
    result = run_matrix(matrix, endpoints)
    assert result.new_records == 6
    assert len(result.aborted) == 4 and result.pending == 4
    assert {a.config for a in result.aborted} == {"PPP"}
    assert [s.config for s in result.statistics] == ["GGG"]
    assert result.failed_arms == ((BENCH, "PPP"),)


def test_run_matrix_validation(tmp_path):
    profiles = {("G", BENCH): _profile("G", 0.7, 0.4, 0.2)}
    arms = [ArmConfig.from_code("GPG", REGISTRY, benchmark=BENCH, n_samples=2, latch=1.0)]
    matrix = _matrix(tmp_path, arms, profiles)
    with pytest.raises(ValueError):
        run_matrix(matrix, _mock_endpoints("G"))  # no endpoint for P
    with pytest.raises(ValueError):
        run_matrix(matrix, _mock_endpoints("G", "P"))  # no profile for P
    with pytest.raises(ValueError):
        run_matrix(matrix, _mock_endpoints("G", "P"), workers=0)


def test_run_matrix_ignores_foreign_records(tmp_path):
    from swarmgate.trajlog import write_records

    profiles = {("G", BENCH): _profile("G", 0.7, 0.4, 0.2)}
    arms = [ArmConfig.from_code("GGG", REGISTRY, benchmark=BENCH, n_samples=3, latch=1.0)]
    matrix = _matrix(tmp_path, arms, profiles)
    foreign = run_trajectory(
        ArmConfig.from_code("GGG", REGISTRY, benchmark="other", n_samples=1, latch=1.0),
        "t",
        TaintSpec(),
        _ready_endpoints(_profile("G", 0.7, 0.4, 0.2, benchmark="other")),
        0,
        11,
    )
    write_records(matrix.output_path, [foreign])
    result = run_matrix(matrix, _mock_endpoints("G"))
    assert result.new_records == 3
    assert [(s.benchmark, s.config) for s in result.statistics] == [(BENCH, "GGG")]
    assert result.statistics[0].n == 3


def test_mock_matrix_recovers_configured_rates(tmp_path):
    critic_accuracy, tribal, syco = 0.8, 0.3, 0.1
    profiles = {("G", BENCH): _profile("G", critic_accuracy, tribal, syco)}
    arms = [ArmConfig.from_code("GGG", REGISTRY, benchmark=BENCH, n_samples=4000, latch=1.0)]
    matrix = _matrix(tmp_path, arms, profiles, record_prompts=False)
    stats = run_matrix(matrix, _mock_endpoints("G")).statistics[0]

    se_b = math.sqrt(critic_accuracy * (1 - critic_accuracy) / stats.n)
    assert abs(stats.critic_accuracy - critic_accuracy) <= 3 * se_b
    n_correct = round(stats.critic_accuracy * stats.n)
    se_t = math.sqrt(tribal * (1 - tribal) / n_correct)
    assert abs(stats.conditional_tribalism - tribal) <= 3 * se_t
    n_endorse = stats.n - n_correct
    se_s = math.sqrt(syco * (1 - syco) / n_endorse)
    assert abs(stats.conditional_sycophancy - syco) <= 3 * se_s


def test_saturation_matrix_is_exact(tmp_path):
    """Kinship latch 2 with these rates pins both synthesizer branches at 1, so
    the cascade rate is exactly 1 at any sample count."""
    profiles = {("G", BENCH): _profile("G", 0.515, 0.515, 0.485)}
    arms = [ArmConfig.from_code("GGG", REGISTRY, benchmark=BENCH, n_samples=200)]
    assert arms[0].effective_latch() == 2.0
    matrix = _matrix(tmp_path, arms, profiles, record_prompts=False)
    stats = run_matrix(matrix, _mock_endpoints("G")).statistics[0]
    assert stats.mu == 1.0


# ----------------------------------------------------------------------------
# matrix config files


def test_load_matrix_yaml(tmp_path):
    corpus = tmp_path / "tasks.txt"
    corpus.write_text("first task\n\nsecond task\n")
    config = tmp_path / "matrix.yaml"
    config.write_text(
        """
experiment_id: demo
base_seed: 5
benchmark: bench
output: out/log.jsonl
record_prompts: false
corpus: tasks.txt
profiles:
  - {family: G, benchmark: bench, critic_accuracy: 0.7, tribalism: 0.4, sycophancy: 0.2}
  - {family: C, benchmark: bench, critic_accuracy: 0.9, tribalism: 0.1, sycophancy: 0.05}
arms:
  - {config: GGG, n_samples: 10, latch: 1.0}
  - {config: GCG, n_samples: 8}
endpoints:
  G: {kind: mock}
  C: {kind: mock}
taint:
  correction_keywords: [incorrect, flawed]
"""
    )
    matrix, endpoints = load_matrix(config)
    assert matrix.experiment_id == "demo"
    assert matrix.base_seed == 5
    assert matrix.corpus == ("first task", "second task")
    assert matrix.output_path == tmp_path / "out" / "log.jsonl"
    assert matrix.record_prompts is False
    assert [a.code for a in matrix.arms] == ["GGG", "GCG"]
    assert matrix.arms[0].latch == 1.0 and matrix.arms[1].latch is None
    assert matrix.arms[1].n_samples == 8
    assert matrix.taint.correction_keywords == ("incorrect", "flawed")
    assert set(endpoints) == {"G", "C"}
    assert ("G", "bench") in matrix.profiles and ("C", "bench") in matrix.profiles

    result = run_matrix(matrix, endpoints)
    assert result.new_records == 18 and matrix.output_path.exists()


def test_load_matrix_json_with_custom_family(tmp_path):
    config = tmp_path / "matrix.json"
    config.write_text(
        """
{
  "base_seed": 1,
  "benchmark": "bench",
  "corpus": ["only task"],
  "families": [{"id": "Q", "display_name": "Quorum 1"}],
  "profiles": [
    {"family": "Q", "benchmark": "bench", "critic_accuracy": 0.5, "tribalism": 0.2, "sycophancy": 0.2}
  ],
  "arms": [{"config": "QQQ", "n_samples": 3}],
  "endpoints": {"Q": {"kind": "mock"}}
}
"""
    )
    matrix, endpoints = load_matrix(config)
    assert matrix.experiment_id == "matrix"
    assert matrix.arms[0].code == "QQQ"
    assert endpoints["Q"].family.display_name == "Quorum 1"


def test_load_matrix_jsonl_corpus(tmp_path):
    corpus = tmp_path / "tasks.jsonl"
    corpus.write_text('{"task": "alpha"}\n"bare string"\n{"prompt": "beta"}\n')
    config = tmp_path / "m.yaml"
    config.write_text(
        """
benchmark: bench
corpus: tasks.jsonl
profiles:
  - {family: G, benchmark: bench, critic_accuracy: 0.7, tribalism: 0.4, sycophancy: 0.2}
arms:
  - {config: GGG, n_samples: 2}
endpoints:
  G: {kind: mock}
"""
    )
    matrix, _ = load_matrix(config)
    assert matrix.corpus == ("alpha", "bare string", "beta")


def test_load_matrix_external_endpoint_fields(tmp_path):
    config = tmp_path / "m.yaml"
    config.write_text(
        """
benchmark: bench
corpus: [t]
arms:
  - {config: GGG, n_samples: 1}
endpoints:
  G: {kind: external, transport: "cmd:cat", timeout: 4.5, retries: 0, metadata: {team: red}}
"""
    )
    _, endpoints = load_matrix(config)
    ep = endpoints["G"]
    assert ep.kind == "external" and ep.transport == "cmd:cat"
    assert ep.timeout == 4.5 and ep.retries == 0
    assert ep.metadata == {"team": "red"}


def test_load_matrix_arm_without_benchmark(tmp_path):
    config = tmp_path / "m.yaml"
    config.write_text("corpus: [t]\narms:\n  - {config: GGG, n_samples: 1}\n")
    with pytest.raises(ValueError):
        load_matrix(config)


def test_load_matrix_rejects_malformed_sections(tmp_path):
    config = tmp_path / "m.yaml"
    base = "benchmark: b\ncorpus: [t]\n"
    bad_docs = (
        base + "arms: [GGG]\n",  # bare string, not a mapping
        base + "arms: {config: GGG}\n",  # mapping, not a list
        base + "arms: [{config: GGG, n_samples: 1}]\nendpoints: [{family: G}]\n",
        base + "arms: [{config: GGG, n_samples: 1}]\nendpoints: {G: mock}\n",
        base + "arms: [{config: GGG, n_samples: 1}]\nprofiles: [G]\n",
        base + "arms: [{config: GGG, n_samples: 1}]\ntaint: [x]\n",
        base + "arms: [{config: GGG, n_samples: 1}]\nfamilies: [Q]\n",
    )
    for doc in bad_docs:
        config.write_text(doc)
        with pytest.raises(ValueError):
            load_matrix(config)
