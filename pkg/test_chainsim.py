"""
Tests for the multi-chain simulator, the lock manager and scenario loading.
"""

import pytest
from pydantic import ValidationError

from txsc.core.exceptions import AlreadyReleased, ConfigError, ReplayMismatch, UnknownLock
from txsc.models.chain import Chain, Ledger, LockStatus
from txsc.models.history import export_history, load_history
from txsc.models.scenario import ScenarioConfig, load_scenario
from txsc.services.chainsim import Simulator, run
from txsc.services.locks import LOCK_OP_GAS, LockManager
from txsc.services.parser import parse_contract
from txsc.services.pipeline import get_pipeline_service
from txsc.services.recipes import lock_overlaps


def _events(history, function):
    return [e for e in history.events() if e.function == function]


### Scenario runs

def test_puzzle_anomaly_pays_bob_nothing(simulate):
    """Bob's submission lands after the owner lowered the reward."""
    history = simulate("puzzle-anomaly")
    update, = _events(history, "UpdateReward")
    submit, = _events(history, "SubmitSolution")
    assert update.committed and submit.committed
    assert update.order < submit.order
    assert update.block == submit.block == 1
    assert [(t.recipient, t.amount) for t in submit.transfers] == [("bob", 0)]
    assert history.final["puzzle"].attrs["solved"] is True
    assert history.final["puzzle"].attrs["reward"] == 0


def test_observed_reads_precede_the_call(simulate):
    """Observed reads are ordered before the call they feed."""
    history = simulate("puzzle-anomaly")
    bob = history.span("bob#1")
    assert [(r.attribute, r.value) for r in bob.observed_reads] == [("solved", False), ("reward", 2)]
    assert all(r.order < bob.events[0].order for r in bob.observed_reads)
    # observed values travel with the call
    assert bob.events[0].ctx.data["reward"] == 2


def test_puzzle_fixed_aborts_bob(simulate):
    """The freshness check stops Bob's stale submission."""
    history = simulate("puzzle-fixed")
    submit, = _events(history, "SubmitSolution")
    assert submit.outcome == "AbortedRequires"
    assert "reward == msg.data.reward" in submit.detail
    assert submit.pre_state == submit.post_state
    assert history.final["puzzle"].attrs["solved"] is False


def test_history_is_deterministic(simulate):
    """Equal scenarios export byte-identical histories."""
    first = export_history(simulate("blockking-fixed"))
    second = export_history(simulate("blockking-fixed"))
    assert first == second


def test_history_survives_export(simulate):
    """Exported histories load back unchanged."""
    history = simulate("puzzle-anomaly")
    text = export_history(history)
    assert load_history(text) == history
    assert text.startswith('{"seed":7,')


def test_seed_override_changes_the_recorded_seed(simulate):
    """A seed override is recorded in the history."""
    assert simulate("puzzle-anomaly", seed=11).seed == 11


def test_gas_is_conserved(simulate):
    """Gas spent by clients equals gas earned by miners."""
    for name in ("puzzle-anomaly", "blockking-fixed", "out-of-gas-atomicity"):
        history = simulate(name)
        assert sum(history.gas["spent"].values()) == sum(history.gas["earned"].values())


def test_blockking_anomaly_callbacks_all_see_carol(simulate):
    """Every callback runs after the last entry overwrote the warrior."""
    history = simulate("blockking-anomaly")
    callbacks = _events(history, "_callback")
    assert len(callbacks) == 3
    assert all(e.kind == "Callback" for e in callbacks)
    assert [e.pre_state.attrs["warrior"] for e in callbacks] == ["carol"] * 3
    enters = _events(history, "enter")
    assert max(e.order for e in enters) < min(e.order for e in callbacks)


def test_callbacks_belong_to_the_calling_span(simulate):
    """A callback is recorded in the span of the call that requested it."""
    history = simulate("blockking-anomaly")
    for span in history.spans:
        functions = [e.function for e in span.events]
        assert functions == ["enter", "_callback"]
        assert span.events[1].ctx.sender == history.oracle_address


def test_blockking_fixed_serializes_through_locks(simulate):
    """Locks pair each entry with its own callback."""
    history = simulate("blockking-fixed")
    assert lock_overlaps(history) == []
    assert [lock.status for lock in history.locks] == ["Released"] * 3
    for span in history.spans:
        enter, callback = span.committed_events
        assert callback.pre_state.attrs["__after_warrior"] == span.client_id
        assert callback.post_state.attrs["warrior"] == span.client_id
        # the lock was granted before the entry committed and released by its callback
        lock = next(lock for lock in history.locks if lock.span_id == span.span_id)
        assert lock.acquired_order < enter.order < lock.released_order


def test_escrow_is_refunded_after_the_callback(simulate):
    """The deposit returns once the callback commits."""
    history = simulate("blockking-fixed")
    alice = history.balances["alice"]
    spent = history.gas["spent"]["alice"]
    # the bid stays with the contract, the deposit comes back
    assert alice == 10_000 - 100 - spent


def test_lost_callback_never_runs(simulate):
    """A dropped callback leaves the lock to the owner's recovery."""
    history = simulate("lost-callback")
    assert _events(history, "_callback") == []
    recover, = _events(history, "owner_recover")
    assert recover.committed
    assert [lock.status for lock in history.locks] == ["Forfeited"]


def test_lock_denied_span_is_noted():
    """A client out of lock attempts gets an empty, noted span."""
    scenario = ScenarioConfig.model_validate(
        {
            "name": "impatient",
            "transform": True,
            "chains": [{"chain_id": "main"}],
            "contracts": [
                {"address": "blockking", "contract": "blockking", "chain": "main", "deployer": "owner"}
            ],
            "oracle": {"response_delay_ticks": [100, 100], "value_script": [1]},
            "clients": [
                {"client_id": "alice", "actions": [
                    {"kind": "call", "tick": 1, "contract": "blockking", "function": "enter",
                     "value": 5, "lock": True}]},
                {"client_id": "bob", "actions": [
                    {"kind": "call", "tick": 2, "contract": "blockking", "function": "enter",
                     "value": 5, "lock": True, "lock_max_attempts": 1}]},
            ],
        }
    )
    history = get_pipeline_service().simulate(scenario)
    bob = history.span("bob#1")
    assert bob.note == "lock denied"
    assert bob.events == []


def test_run_rejects_unknown_function(blockking_ast):
    """Scripts may only call functions the contract declares."""
    scenario = ScenarioConfig.model_validate(
        {
            "chains": [{"chain_id": "main"}],
            "contracts": [{"address": "bk", "contract": "blockking", "chain": "main", "deployer": "o"}],
            "clients": [{"client_id": "a", "actions": [
                {"kind": "call", "tick": 1, "contract": "bk", "function": "abdicate"}]}],
        }
    )
    with pytest.raises(ConfigError, match="abdicate"):
        run(scenario, {"blockking": blockking_ast})


def _counter_scenario(clients, **overrides):
    data = {
        "name": "counter-funds",
        "chains": [{"chain_id": "main"}],
        "contracts": [{"address": "c", "contract": "counter", "chain": "main", "deployer": "d"}],
        "clients": clients,
    }
    data.update(overrides)
    return ScenarioConfig.model_validate(data)


def _increment(tick, gas=None):
    action = {"kind": "call", "tick": tick, "contract": "c", "function": "increment", "args": [1]}
    if gas is not None:
        action["gas"] = gas
    return action


def test_unfunded_call_is_refused(counter_ast):
    """A client that cannot cover the gas budget never reaches the mempool."""
    scenario = _counter_scenario([{"client_id": "zed", "funds": 0, "actions": [_increment(1)]}])
    history = run(scenario, {"counter": counter_ast})
    zed = history.span("zed#1")
    assert zed.note == "insufficient funds"
    assert zed.events == []
    assert history.balances["zed"] == 0
    assert "zed" not in history.gas.get("spent", {})


def test_balances_never_go_negative(counter_ast):
    """Gas is reserved up front, so a client runs out of calls before it runs out of funds."""
    scenario = _counter_scenario(
        [{"client_id": "zed", "funds": 4, "actions": [_increment(1, gas=3), _increment(15, gas=3)]}]
    )
    history = run(scenario, {"counter": counter_ast})
    assert history.span("zed#1").committed_events
    assert history.span("zed#2").note == "insufficient funds"
    assert history.balances["zed"] == 4 - history.gas["spent"]["zed"]
    assert all(balance >= 0 for balance in history.balances.values())


def test_escrow_check_counts_the_gas_budget():
    """The deposit must fit next to the value and the whole gas budget."""
    scenario = ScenarioConfig.model_validate(
        {
            "transform": True,
            "chains": [{"chain_id": "main"}],
            "contracts": [
                {"address": "blockking", "contract": "blockking", "chain": "main", "deployer": "owner"}
            ],
            "clients": [{"client_id": "alice", "funds": 110, "actions": [
                {"kind": "call", "tick": 1, "contract": "blockking", "function": "enter",
                 "value": 5, "lock": True}]}],
        }
    )
    history = get_pipeline_service().simulate(scenario)
    enter, = history.span("alice#1").events
    assert enter.outcome == "AbortedError"
    assert "escrow" in enter.detail
    assert history.balances["alice"] == 110 - history.gas["spent"]["alice"]


def test_requests_for_an_unserved_service_are_dropped():
    """Only the configured oracle service answers external queries."""
    scenario = ScenarioConfig.model_validate(
        {
            "chains": [{"chain_id": "main"}],
            "contracts": [
                {"address": "blockking", "contract": "blockking", "chain": "main", "deployer": "owner"}
            ],
            "oracle": {"service": "PriceFeed"},
            "clients": [{"client_id": "alice", "actions": [
                {"kind": "call", "tick": 1, "contract": "blockking", "function": "enter", "value": 5}]}],
        }
    )
    history = get_pipeline_service().simulate(scenario)
    enter, = history.span("alice#1").events
    assert enter.committed
    assert [r.service for r in enter.external_requests] == ["WolframAlpha"]
    assert _events(history, "_callback") == []


def test_lock_chain_must_match_the_transform_config():
    """Transformed contracts only run against the lock chain they were built for."""
    scenario = ScenarioConfig.model_validate(
        {
            "name": "elsewhere",
            "transform": True,
            "lock_chain": "side-locks",
            "chains": [{"chain_id": "main"}],
            "contracts": [
                {"address": "blockking", "contract": "blockking", "chain": "main", "deployer": "owner"}
            ],
        }
    )
    with pytest.raises(ConfigError, match="side-locks"):
        get_pipeline_service().simulate(scenario)


def test_rejected_lock_effect_is_noted():
    """A committed call releasing an unknown lock leaves a note on its span."""
    contract = parse_contract(
        "contract Rel {\n    attr uint n;\n\n    fn free() {\n"
        '        lock_release("lockchain:9");\n        n = 1;\n    }\n}\n'
    )
    scenario = ScenarioConfig.model_validate(
        {
            "chains": [{"chain_id": "main"}],
            "contracts": [{"address": "rel", "contract": "rel", "chain": "main", "deployer": "d"}],
            "clients": [{"client_id": "alice", "actions": [
                {"kind": "call", "tick": 1, "contract": "rel", "function": "free"}]}],
        }
    )
    history = run(scenario, {"rel": contract})
    span = history.span("alice#1")
    assert span.events[0].committed
    assert span.note == "lock_release rejected: unknown lock 'lockchain:9'"
    assert history.locks == []


def test_replay_detects_tampered_state(counter_ast):
    """Re-executing from genesis catches object state that no block produced."""
    scenario = _counter_scenario([{"client_id": "alice", "actions": [_increment(1)]}])
    simulator = Simulator(scenario, {"counter": counter_ast})
    simulator.run()
    simulator.verify_replay()
    simulator.chains["main"].objects["c"].attrs["count"] = 99
    with pytest.raises(ReplayMismatch, match="diverges"):
        simulator.verify_replay()


### Scenario validation

def _minimal(**overrides):
    data = {
        "chains": [{"chain_id": "main"}],
        "contracts": [{"address": "c", "contract": "counter", "chain": "main", "deployer": "d"}],
        "clients": [],
    }
    data.update(overrides)
    return data


@pytest.mark.parametrize(
    "overrides,message",
    [
        ({"chains": [{"chain_id": "main"}, {"chain_id": "main"}]}, "duplicate chain id"),
        ({"chains": [{"chain_id": "lockchain"}]}, "reserved"),
        ({"contracts": [{"address": "c", "contract": "counter", "chain": "side", "deployer": "d"}]},
         "unknown chain"),
        ({"clients": [{"client_id": "x", "actions": [
            {"kind": "observe", "tick": 1, "contract": "nope"}]}]}, "unknown contract"),
        ({"clients": [{"client_id": "x", "actions": [
            {"kind": "call", "tick": 1, "contract": "c", "function": "constructor"}]}]},
         "constructors"),
        ({"oracle": {"response_delay_ticks": [5, 1]}}, "response_delay_ticks"),
        ({"oracle": {"drop_probability": 1.5}}, "drop_probability"),
    ],
)
def test_invalid_scenarios(overrides, message):
    """Scenario validation rejects broken references and ranges."""
    with pytest.raises(ValidationError, match=message):
        ScenarioConfig.model_validate(_minimal(**overrides))


def test_load_scenario(scenarios_dir):
    """Bundled scenario files load."""
    scenario = load_scenario(scenarios_dir / "blockking-fixed.toml")
    assert scenario.name == "blockking-fixed"
    assert scenario.seed == 7
    assert scenario.transform
    assert scenario.oracle.value_script == [3, 5, 7]
    assert scenario.clients[0].actions[0].lock


def test_load_scenario_errors(tmp_path):
    """Unreadable and invalid scenario files raise ConfigError."""
    with pytest.raises(ConfigError, match="cannot read"):
        load_scenario(tmp_path / "missing.toml")
    bad = tmp_path / "bad.toml"
    bad.write_text('[[chains]]\nchain_id = "main"\n[[chains]]\nchain_id = "main"\n', encoding="utf-8")
    with pytest.raises(ConfigError, match="invalid scenario"):
        load_scenario(bad)


### Lock manager

@pytest.fixture
def lock_manager():
    ledger = Ledger(default_funds=100)
    owners = {("main", "bk"): "owner"}
    return LockManager(Chain("lockchain", ["lockchain-miner-0"]), ledger, owners)


WARRIOR = ("main", "bk", "warrior")
KING = ("main", "bk", "king")


def test_overlapping_lock_is_denied(lock_manager):
    """A held lock blocks requests sharing an item."""
    first = lock_manager.acquire_locks("alice", [WARRIOR, KING], tick=1)
    assert first is not None
    assert lock_manager.acquire_locks("bob", [KING], tick=2) is None
    assert lock_manager.acquire_locks("bob", [("main", "bk", "kingBlock")], tick=2) is not None
    assert lock_manager.is_held(first, "alice", [WARRIOR])
    assert not lock_manager.is_held(first, "bob")


def test_released_items_can_be_locked_again(lock_manager):
    """Released items are free; a lock ends only once."""
    first = lock_manager.acquire_locks("alice", [WARRIOR], tick=1)
    lock_manager.release_lock(first, LockStatus.RELEASED, tick=3)
    assert not lock_manager.is_active(first)
    assert lock_manager.acquire_locks("bob", [WARRIOR], tick=4) is not None
    with pytest.raises(AlreadyReleased):
        lock_manager.release_lock(first, LockStatus.FORFEITED)
    with pytest.raises(UnknownLock):
        lock_manager.release_lock("lockchain:99", LockStatus.RELEASED)


def test_forfeit_pays_the_escrow_to_the_owner(lock_manager):
    """Forfeiting hands the deposit to the contract owner."""
    lock_id = lock_manager.acquire_locks("alice", [WARRIOR], tick=1)
    lock_manager.ledger.hold_escrow(lock_id, "alice", 10)
    lock_manager.release_lock(lock_id, LockStatus.FORFEITED, tick=5)
    assert lock_manager.ledger.balance("alice") == 90
    assert lock_manager.ledger.balance("owner") == 110
    assert lock_manager.records[lock_id].status == LockStatus.FORFEITED


def test_flush_appends_a_block_and_charges_gas(lock_manager):
    """Pending lock operations become one lock-chain block."""
    assert lock_manager.flush(0) is None
    lock_id = lock_manager.acquire_locks("alice", [WARRIOR], tick=1)
    lock_manager.release_lock(lock_id, LockStatus.RELEASED, tick=1)
    block = lock_manager.flush(1)
    assert [op.op for op in block.entries] == ["acquire", "release"]
    assert lock_manager.chain.blocks == [block]
    assert lock_manager.ledger.gas_spent["alice"] == 2 * LOCK_OP_GAS
    assert lock_manager.overlapping_held() == []


def test_empty_lock_request_is_rejected(lock_manager):
    """A lock must cover at least one item."""
    with pytest.raises(ValueError):
        lock_manager.acquire_locks("alice", [], tick=1)
