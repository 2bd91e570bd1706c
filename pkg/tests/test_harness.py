import json
import random

import httpx
import pytest
from hypothesis import given
from hypothesis import strategies as st

from narrplan.domains import canonical
from narrplan.harness import (
    BUDGET_EXHAUSTED, INVALID_PLAN, PARSE_FAILURE, SUCCESS, AgentReply, AgentTransportError, AttemptRecord,
    CorruptingAgent, OracleAgent, PlannerAgent, RemoteAgent, ReplayAgent, RunConfig, agent_from_spec,
    aggregate, load_records, run_attempt, run_calibrated, run_many, run_one_off,
)
from narrplan.harness.agents import MUTATIONS, mutate_lines
from narrplan.harness.runner import OUTCOMES

SA = canonical("secret_agent")
GOOD_SA = """1. move(agent, cell_0_0, cell_0_1)
2. pickup(agent, gun, cell_0_1)
3. move(agent, cell_0_1, cell_0_2)
4. pickup(agent, key, cell_0_2)
5. move(agent, cell_0_2, cell_1_2)
6. enter_lair(agent, cell_1_2, cell_2_2)
7. kill(agent, mastermind, cell_2_2)"""


def chat_response(text, status=200, usage=None):
    body = {"choices": [{"message": {"role": "assistant", "content": text}}]}
    if usage:
        body["usage"] = usage
    return httpx.Response(status, json=body)


class TestRemoteAgent:
    def test_request_shape_and_reply(self, monkeypatch):
        seen = {}

        def handler(request):
            seen["url"] = str(request.url)
            seen["auth"] = request.headers.get("authorization")
            seen["body"] = json.loads(request.content)
            return chat_response(GOOD_SA, usage={"prompt_tokens": 100, "completion_tokens": 20})

        monkeypatch.setenv("TEST_KEY", "sekret")
        agent = RemoteAgent("http://llm.local/v1/", "m-1", key_env="TEST_KEY",
                            transport=httpx.MockTransport(handler))
        reply = agent.reply(SA, [{"role": "user", "content": "hi"}], "one_off")
        assert seen["url"] == "http://llm.local/v1/chat/completions"
        assert seen["auth"] == "Bearer sekret"
        assert seen["body"] == {"model": "m-1", "messages": [{"role": "user", "content": "hi"}], "temperature": 0.0}
        assert reply == AgentReply(GOOD_SA, 100, 20)
        assert agent.name == "remote:m-1"

    def test_no_key_means_no_auth_header(self, monkeypatch):
        monkeypatch.delenv("MISSING_KEY", raising=False)

        def handler(request):
            assert "authorization" not in request.headers
            return chat_response("x")

        RemoteAgent("http://h", "m", "MISSING_KEY", transport=httpx.MockTransport(handler)).reply(SA, [], "one_off")

    @pytest.mark.parametrize("response", [
        httpx.Response(500, text="boom"),
        httpx.Response(200, text="not json"),
        httpx.Response(200, json={"choices": []}),
    ])
    def test_errors_become_transport_errors(self, response):
        agent = RemoteAgent("http://h", "m", transport=httpx.MockTransport(lambda r: response))
        with pytest.raises(AgentTransportError):
            agent.reply(SA, [], "one_off")

    def test_one_off_run_through_mock_endpoint(self):
        agent = RemoteAgent("http://h", "m", transport=httpx.MockTransport(
            lambda r: chat_response(GOOD_SA, usage={"prompt_tokens": 7, "completion_tokens": 3})))
        rec = run_one_off(SA, agent)
        assert rec.outcome == SUCCESS
        assert (rec.prompt_tokens, rec.completion_tokens) == (7, 3)


class Flaky(PlannerAgent):
    name = "flaky"

    def __init__(self, failures, text=GOOD_SA):
        self.failures = failures
        self.text = text
        self.calls = 0

    def reply(self, task, messages, prompt_mode):
        self.calls += 1
        if self.calls <= self.failures:
            raise AgentTransportError("connection reset")
        return AgentReply(self.text)


class TestOneOff:
    def test_success_and_transcript(self):
        rec = run_one_off(SA, ReplayAgent([GOOD_SA]))
        assert rec.outcome == SUCCESS
        assert [e["kind"] for e in rec.transcript] == ["prompt", "prompt", "reply"]
        assert rec.reverify()

    def test_invalid_plan(self):
        rec = run_one_off(SA, ReplayAgent(["move(agent, cell_0_0, cell_0_1)"]))
        assert rec.outcome == INVALID_PLAN
        assert rec.report["verdict"] == "rejected"
        assert not rec.reverify()

    def test_parse_failure(self):
        rec = run_one_off(SA, ReplayAgent(["teleport(agent)"]))
        assert rec.outcome == PARSE_FAILURE
        assert rec.transcript[-1]["code"] == "unknown-action"

    def test_retries_on_transport_errors(self):
        assert run_one_off(SA, Flaky(2), RunConfig(retries=2)).outcome == SUCCESS
        rec = run_one_off(SA, Flaky(3), RunConfig(retries=2))
        assert rec.outcome == BUDGET_EXHAUSTED
        assert rec.transcript[-1]["kind"] == "error"


class TestCalibrated:
    def test_oracle_reaches_goal(self):
        rec = run_calibrated(SA, OracleAgent(), RunConfig(prompt_mode="calibrated"))
        assert rec.outcome == SUCCESS
        assert len(rec.plan) == 7
        assert not rec.feedback_events
        assert rec.budgets["max_steps"] == 28

    def test_consecutive_rejections_end_attempt(self):
        bad = ["move(agent, cell_0_0, cell_2_2)"] * 5
        rec = run_calibrated(SA, ReplayAgent(bad), RunConfig(prompt_mode="calibrated"))
        assert rec.outcome == BUDGET_EXHAUSTED
        assert len(rec.feedback_events) == 3

    def test_unreadable_reply_counts_as_rejection(self):
        replies = ["hmm", "move(agent, cell_0_0, cell_0_1)"]
        rec = run_calibrated(SA, ReplayAgent(replies), RunConfig(prompt_mode="calibrated", max_steps=1))
        assert rec.outcome == BUDGET_EXHAUSTED
        assert "Could not read an action" in rec.feedback_events[0]["message"]
        assert len(rec.plan) == 1

    def test_observation_reports_changes(self):
        rec = run_calibrated(SA, ReplayAgent(["move(agent, cell_0_0, cell_0_1)"]),
                             RunConfig(prompt_mode="calibrated", max_steps=1))
        obs = [e for e in rec.transcript if e["kind"] == "observation"][0]["content"]
        assert "at(agent,cell_0_1) is now true" in obs

    def test_only_causal_tasks(self):
        with pytest.raises(ValueError):
            run_calibrated(canonical("aladdin"), OracleAgent())


class TestCorruption:
    def test_mutations(self):
        lines = ["Plan:", "1. a(x)", "2. b(x)", "3. c(x)"]
        rng = random.Random(0)
        assert mutate_lines(lines, "drop-first", rng) == ["Plan:", "2. b(x)", "3. c(x)"]
        assert mutate_lines(lines, "drop-last", rng) == ["Plan:", "1. a(x)", "2. b(x)"]
        assert len(mutate_lines(lines, "drop-step", rng)) == 3
        swapped = mutate_lines(lines, "swap-adjacent", rng)
        assert sorted(swapped) == sorted(lines) and swapped != lines
        with pytest.raises(ValueError):
            mutate_lines(lines, "shuffle", rng)

    @pytest.mark.parametrize("mutation", MUTATIONS)
    def test_corrupted_oracle_fails_on_secret_agent(self, mutation):
        rec = run_one_off(SA, CorruptingAgent(OracleAgent(), mutation, seed=1))
        assert rec.outcome == INVALID_PLAN

    def test_reseed_is_deterministic(self):
        a = run_attempt(SA, CorruptingAgent(OracleAgent()), RunConfig(seed=3), 4)
        b = run_attempt(SA, CorruptingAgent(OracleAgent()), RunConfig(seed=3), 4)
        assert a.plan == b.plan


def test_agent_from_spec():
    assert isinstance(agent_from_spec("oracle"), OracleAgent)
    assert agent_from_spec("corrupt:drop-last").name == "corrupt:drop-last"
    assert agent_from_spec("corrupt").name == "corrupt:drop-step"
    assert isinstance(agent_from_spec("replay", replies=["x"]), ReplayAgent)
    assert isinstance(agent_from_spec("remote", "http://h", "m"), RemoteAgent)
    for bad in ("remote", "wizard"):
        with pytest.raises(ValueError):
            agent_from_spec(bad)


def test_run_config_validation():
    with pytest.raises(ValueError):
        RunConfig(prompt_mode="batch")
    with pytest.raises(ValueError):
        RunConfig(attempts=0)
    with pytest.raises(ValueError):
        RunConfig(retries=-1)
    assert RunConfig.from_dict({"attempts": 3}).attempts == 3


def _stable(rec):
    d = rec.to_dict()
    d.pop("wall_time")
    return d


class TestRunMany:
    def test_jsonl_resume(self, tmp_path):
        out = tmp_path / "runs.jsonl"
        tasks = [SA, canonical("western")]
        config = RunConfig(attempts=3, out=str(out))
        first = run_many(tasks, OracleAgent(), config)
        assert len(first) == 6
        text = out.read_text()
        second = run_many(tasks, OracleAgent(), config)
        assert out.read_text() == text
        assert [_stable(r) for r in second] == [_stable(r) for r in first]
        more = run_many(tasks, OracleAgent(), RunConfig(attempts=4, out=str(out)))
        assert len(more) == 8 and len(load_records(out)) == 8
        assert all(r.reverify() for r in load_records(out))

    def test_parallel_matches_serial(self):
        tasks = [SA, canonical("western")]
        agent = CorruptingAgent(OracleAgent(), "drop-step")
        serial = run_many(tasks, agent, RunConfig(attempts=4, parallel=1))
        threaded = run_many(tasks, agent, RunConfig(attempts=4, parallel=4))
        assert [_stable(r) for r in serial] == [_stable(r) for r in threaded]

    def test_record_json_round_trip(self):
        rec = run_one_off(SA, ReplayAgent([GOOD_SA]))
        back = AttemptRecord.from_dict(json.loads(rec.to_json()))
        assert back == rec


RECORD = st.builds(
    lambda d, m, a, o, t: AttemptRecord(
        task_id=d, domain=d, params=None if m else {"domain": d, "n": 3, "seed": 9}, mode="causal",
        prompt_mode="one_off", agent=a, attempt=0, outcome=o, wall_time=t,
    ),
    st.sampled_from(["secret_agent", "aladdin"]), st.booleans(), st.sampled_from(["oracle", "remote:m"]),
    st.sampled_from(OUTCOMES), st.floats(0, 5),
)


@given(st.lists(RECORD, max_size=40))
def test_aggregate_equals_recount(records):
    table = aggregate(records)
    assert sum(r.attempts for r in table.rows) == len(records)
    for row in table.rows:
        group = [r for r in records if r.domain == row.domain and r.agent == row.agent
                 and (row.params == "canonical") == (r.params is None)]
        assert row.attempts == len(group)
        assert row.successes == sum(r.outcome == SUCCESS for r in group)
        assert row.cell == f"{row.successes}/{row.attempts}"
    keys = [(r.domain, r.params, r.mode, r.prompt_mode, r.agent) for r in table.rows]
    assert keys == sorted(keys)
    if not records:
        assert table.render() == "(no records)"


def test_table_rendering():
    records = [AttemptRecord("t", "secret_agent", None, "causal", "one_off", "oracle", k,
                             SUCCESS if k < 13 else INVALID_PLAN) for k in range(30)]
    table = aggregate(records)
    text = table.render()
    assert "13/30" in text and "0.4333" in text
    assert json.loads(table.to_json())[0]["rate"] == 0.4333
    params_key = aggregate([AttemptRecord("t", "d", {"domain": "d", "n": 3, "seed": 1}, "causal",
                                          "one_off", "a", 0, SUCCESS)]).rows[0].params
    assert params_key == "n=3"
