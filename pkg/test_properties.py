"""
Property tests: call atomicity, static sets covering traced accesses, the
transform preserving serial behaviour, and serializability of random
schedules over the transformed corpus.
"""

import pytest
from hypothesis import HealthCheck, given, settings as hypothesis_settings
from hypothesis import strategies as st

from txsc.models.execution import (
    CallContext,
    ObjectState,
    Outcome,
    pre_write_reads,
    written_attributes,
)
from txsc.models.scenario import CallAction, ClientScript, OracleConfig
from txsc.services.analysis import analyze
from txsc.services.chainsim import run
from txsc.services.interpreter import StubHost, execute
from txsc.services.recipes import compile_transformed, random_scenario, sweep, sweep_scenario
from txsc.services.serializability import check
from txsc.services.typecheck import is_reserved

ADDRESSES = ["alice", "bob", "owner", "oracle"]

_VALUES = {
    "uint": st.one_of(st.integers(min_value=0, max_value=20), st.just(2**256 - 1)),
    "bool": st.booleans(),
    "address": st.sampled_from(ADDRESSES),
    "bytes32": st.one_of(
        st.binary(min_size=32, max_size=32), st.sampled_from([b"\x00" * 32, b"\xff" * 32])
    ),
    "string": st.sampled_from(["lockchain:1", "lockchain:2", "", "abc"]),
}

_DATA_VALUES = {
    "solution": _VALUES["bytes32"],
    "diff": _VALUES["bytes32"],
    "solved": _VALUES["bool"],
    "reward": _VALUES["uint"],
    "count": _VALUES["uint"],
}


def _deployed():
    deployed = []
    for name in ("puzzle", "counter", "blockking"):
        compiled = compile_transformed(name)
        deployed.append((name, compiled.source))
        deployed.append((f"{name}+", compiled.transformed))
    return deployed


DEPLOYED = dict(_deployed())
PROFILES = {label: analyze(ast) for label, ast in DEPLOYED.items()}
FUNCTIONS = [
    pytest.param(label, fn.name, id=f"{label}.{fn.name}")
    for label, ast in DEPLOYED.items()
    for fn in ast.functions
    if fn.name != "constructor"
]


@st.composite
def calls(draw, label: str, fn_name: str):
    ast = DEPLOYED[label]
    fn = ast.function(fn_name)
    attrs = {a.name: draw(_VALUES[a.type_name]) for a in ast.attributes}
    state = ObjectState(label, attrs, balance=draw(st.integers(min_value=0, max_value=30)))
    keys = draw(st.sets(st.sampled_from(sorted(_DATA_VALUES))))
    data = {key: draw(_DATA_VALUES[key]) for key in sorted(keys)}
    data["lock_id"] = draw(st.sampled_from(["lockchain:1", "lockchain:2"]))
    ctx = CallContext(
        sender=draw(st.sampled_from(ADDRESSES)),
        value=draw(st.integers(min_value=0, max_value=30)),
        data=data,
        block_number=draw(st.integers(min_value=0, max_value=40)),
        gas_budget=draw(st.integers(min_value=0, max_value=12)),
        args=tuple(draw(_VALUES[p.type_name]) for p in fn.params),
    )
    host = StubHost(
        held_locks=draw(st.sets(st.sampled_from(["lockchain:1", "lockchain:2"]))),
        funds=draw(st.one_of(st.none(), st.integers(min_value=0, max_value=20))),
    )
    return state, ctx, host


### Atomicity

@pytest.mark.parametrize("label,fn", FUNCTIONS)
def test_calls_are_atomic(label, fn):
    """Every call either commits inside its static sets or leaves nothing behind."""
    ast = DEPLOYED[label]

    @hypothesis_settings(
        max_examples=1000, deadline=None, suppress_health_check=[HealthCheck.too_slow]
    )
    @given(calls(label, fn))
    def check_call(call):
        state, ctx, host = call
        before = state.copy()
        result = execute(ast, fn, state, ctx, host)

        assert state == before
        assert 0 <= result.gas_used <= ctx.gas_budget
        if result.committed:
            profile = PROFILES[label][fn]
            assert pre_write_reads(result.trace) <= set(profile.read_set)
            assert written_attributes(result.trace) <= set(profile.write_set)
        else:
            assert result.new_state == before
            assert result.transfers == []
            assert result.effects == []
            assert result.external_requests == []
            if result.outcome == Outcome.ABORTED_OUT_OF_GAS:
                assert result.gas_used == ctx.gas_budget

    check_call()


### Serial schedules

SPAN_SPACING = 40


def _serial(scenario, transformed: bool):
    """Re-time a random scenario so each span ends before the next begins."""
    spans = []
    for c_index, client in enumerate(scenario.clients):
        pending = []
        for action in client.actions:
            pending.append(action)
            if isinstance(action, CallAction):
                spans.append((pending[0].tick, c_index, client.client_id, pending))
                pending = []
    scripts = {client.client_id: [] for client in scenario.clients}
    for index, (_, _, client_id, actions) in enumerate(sorted(spans, key=lambda s: s[:2])):
        tick = 1 + SPAN_SPACING * index
        for action in actions:
            update = {"tick": tick}
            if isinstance(action, CallAction):
                update["lock"] = transformed and action.lock
            scripts[client_id].append(action.model_copy(update=update))
    return scenario.model_copy(
        update={
            "transform": transformed,
            "mempool_jitter_ticks": 0,
            "max_ticks": SPAN_SPACING * (len(spans) + 2),
            "oracle": OracleConfig(response_delay_ticks=(1, 1)),
            "clients": [
                ClientScript(client_id=client_id, actions=actions)
                for client_id, actions in scripts.items()
            ],
        }
    )


def _visible(history):
    return {
        address: ({k: v for k, v in state.attrs.items() if not is_reserved(k)}, state.balance)
        for address, state in history.final.items()
    }


@pytest.mark.parametrize("seed", range(60))
def test_transform_preserves_serial_behaviour(seed):
    """On serial schedules the rewritten contracts behave like the originals."""
    scenario = random_scenario(seed)
    names = [d.contract for d in scenario.contracts]
    original = run(
        _serial(scenario, transformed=False),
        {name: compile_transformed(name).source for name in names},
    )
    rewritten = run(
        _serial(scenario, transformed=True),
        {name: compile_transformed(name).transformed for name in names},
    )
    assert _visible(rewritten) == _visible(original)
    outcomes = {span.span_id: [(e.function, e.outcome) for e in span.events] for span in original.spans}
    assert {
        span.span_id: [(e.function, e.outcome) for e in span.events] for span in rewritten.spans
    } == outcomes


### Random schedules

def test_random_schedules_are_serializable():
    """Transformed contracts stay serializable under 200 random schedules."""
    results = sweep(count=200, start_seed=0)
    assert len(results) == 200
    failures = [r for r in results if not r.serializable or r.set_violations]
    assert failures == []


@pytest.mark.parametrize("seed", range(0, 40, 4))
def test_conflict_graph_agrees_with_permutation_search(seed):
    """An acyclic conflict graph always admits a serial order."""
    scenario = random_scenario(seed)
    deployed = {d.contract: compile_transformed(d.contract).deployable for d in scenario.contracts}
    history = run(scenario, deployed)
    exact = check(history)
    graph = check(history, bound=0)
    if any(span.committed_events for span in history.spans):
        assert graph.method == "conflict-graph"
    assert exact.conflict_serializable == graph.conflict_serializable
    if graph.serializable:
        assert exact.serializable


def test_sweep_results_report_the_method():
    """Small sweep scenarios are decided by the permutation search."""
    result = sweep_scenario(random_scenario(1))
    assert result.method == "permutation"
    assert result.spans >= 1
