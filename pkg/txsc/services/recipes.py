"""
End-to-end recipes over the bundled corpus and the random schedule sweep.

A recipe runs one corpus scenario through the whole pipeline, checks the
oracle's verdict against corpus.toml and asserts the state facts that make
the scenario's story true.
"""

import dataclasses
import functools
import hashlib
import random
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from pathlib import Path
from typing import Callable, Optional

from pydantic import ValidationError

from ..core.config import get_settings
from ..core.exceptions import ConfigError, RecipeFailed
from ..core.logging import get_logger
from ..models.history import EventRecord, History, export_history
from ..models.scenario import (
    CallAction,
    ChainSpec,
    ClientScript,
    Deployment,
    ObserveAction,
    OracleConfig,
    ScenarioConfig,
)
from ..models.schemas import (
    AssertionResult,
    Classification,
    CorpusEntry,
    ExpectedVerdict,
    RecipeReport,
    SweepResult,
    Verdict,
)
from ..models.execution import pre_write_reads, written_attributes
from .analysis import analyze
from .chainsim import run
from .pipeline import CompiledContract, get_pipeline_service
from .serializability import check, conflict_graph
from .transform import load_transform_config

logger = get_logger(__name__)

Check = Callable[[History, Verdict], list[AssertionResult]]


@dataclasses.dataclass(frozen=True)
class Recipe:
    name: str
    description: str
    checks: tuple[Check, ...] = ()

    @property
    def scenario_file(self) -> str:
        return f"{self.name}.toml"


### Corpus

def load_corpus(corpus_dir: Optional[Path] = None) -> list[CorpusEntry]:
    """
    Read corpus.toml.

    Raises:
        ConfigError: The manifest is missing or invalid
    """
    path = Path(corpus_dir or get_settings().corpus_dir) / "corpus.toml"
    try:
        with open(path, "rb") as f:
            data = tomllib.load(f)
        return [CorpusEntry.model_validate(entry) for entry in data.get("entries", [])]
    except (OSError, tomllib.TOMLDecodeError, ValidationError) as e:
        raise ConfigError(f"cannot load corpus manifest {path}: {e}")


def expected_verdict(scenario: str, corpus_dir: Optional[Path] = None) -> Optional[ExpectedVerdict]:
    for entry in load_corpus(corpus_dir):
        if scenario in entry.expected_verdicts:
            return entry.expected_verdicts[scenario]
    return None


### Assertion helpers

def _result(name: str, passed: bool, detail: str = "") -> AssertionResult:
    return AssertionResult(name=name, passed=bool(passed), detail="" if passed else detail)


def _events(history: History, function: str) -> list[EventRecord]:
    return [e for e in history.events() if e.function == function]


def lock_overlaps(history: History) -> list[tuple[str, str]]:
    """Pairs of lock records that were held at the same time on a shared item."""
    pairs = []
    locks = sorted(history.locks, key=lambda lock: lock.acquired_order)
    for i, first in enumerate(locks):
        end = first.released_order if first.released_order is not None else float("inf")
        items = {tuple(item) for item in first.items}
        for second in locks[i + 1:]:
            if second.acquired_order < end and items & {tuple(item) for item in second.items}:
                pairs.append((first.lock_id, second.lock_id))
    return pairs


def _gas_conserved(history: History, verdict: Verdict) -> list[AssertionResult]:
    spent = sum(history.gas.get("spent", {}).values())
    earned = sum(history.gas.get("earned", {}).values())
    return [_result("gas conserved", spent == earned, f"clients spent {spent}, miners earned {earned}")]


def _locks_safe(history: History, verdict: Verdict) -> list[AssertionResult]:
    overlaps = lock_overlaps(history)
    return [_result("no overlapping locks", not overlaps, f"overlapping locks {overlaps}")]


def _final(history: History, address: str, attribute: str):
    return history.final[address].attrs.get(attribute)


### Recipe checks

def _puzzle_anomaly(history: History, verdict: Verdict) -> list[AssertionResult]:
    submit = _events(history, "SubmitSolution")
    committed = [e for e in submit if e.committed]
    payout = [t.amount for e in committed for t in e.transfers if t.recipient == "bob"]
    edges = {
        (e.source, e.target, e.attribute.rsplit(".", 1)[-1], e.kind.value)
        for e in conflict_graph(history)
    }
    return [
        _result("Bob's submission commits", len(committed) == 1, f"committed: {len(committed)}"),
        _result("Bob is paid 0", payout == [0], f"payouts to bob: {payout}"),
        _result("puzzle is solved", _final(history, "puzzle", "solved") is True),
        _result(
            "RW/WR cycle on reward",
            ("bob#1", "alice#1", "reward", "RW") in edges and ("alice#1", "bob#1", "reward", "WR") in edges,
            f"edges: {sorted(edges)}",
        ),
    ]


def _puzzle_fixed(history: History, verdict: Verdict) -> list[AssertionResult]:
    submit = _events(history, "SubmitSolution")
    outcomes = [e.outcome for e in submit]
    return [
        _result("Bob's submission aborts on a check", outcomes == ["AbortedRequires"], f"outcomes: {outcomes}"),
        _result("reward is 0", _final(history, "puzzle", "reward") == 0),
        _result("puzzle stays unsolved", _final(history, "puzzle", "solved") is False),
        _result(
            "Alice precedes Bob in the witness",
            verdict.witness_order is not None and verdict.witness_order[:1] == ["alice#1"],
            f"witness: {verdict.witness_order}",
        ),
    ]


def _blockking_anomaly(history: History, verdict: Verdict) -> list[AssertionResult]:
    callbacks = [e for e in _events(history, "_callback") if e.committed]
    warriors = [e.pre_state.attrs.get("warrior") for e in callbacks]
    on_warrior = {(e.source, e.target) for e in conflict_graph(history) if e.attribute.endswith(".warrior")}
    cyclic = sorted((s, t) for s, t in on_warrior if (t, s) in on_warrior)
    return [
        _result("three callbacks commit", len(callbacks) == 3, f"callbacks: {len(callbacks)}"),
        _result(
            "every callback judges Carol",
            warriors == ["carol"] * 3,
            f"callback-time warriors: {warriors}",
        ),
        _result("Carol is king", _final(history, "blockking", "king") == "carol"),
        _result("conflict cycle through warrior", bool(cyclic), f"warrior edges: {sorted(on_warrior)}"),
    ]


def _blockking_fixed(history: History, verdict: Verdict) -> list[AssertionResult]:
    results = []
    callbacks = [e for e in _events(history, "_callback") if e.committed]
    results.append(_result("three callbacks commit", len(callbacks) == 3, f"callbacks: {len(callbacks)}"))
    for span in history.spans:
        own = [e for e in span.committed_events if e.function == "_callback"]
        seen = [e.post_state.attrs.get("warrior") for e in own]
        results.append(
            _result(
                f"{span.span_id} callback judges its own entry",
                seen == [span.client_id],
                f"callback-time warriors: {seen}",
            )
        )
    enters = [e for e in _events(history, "enter") if e.committed]
    staged_only = all(
        e.pre_state.attrs.get(a) == e.post_state.attrs.get(a)
        for e in enters
        for a in ("warrior", "warriorBlock", "warriorGold")
    )
    results.append(_result("enter only stages its writes", staged_only))
    results.append(
        _result("enter calls serialize with callbacks", _interleaving_free(enters, callbacks))
    )
    released = [lock.status for lock in history.locks]
    results.append(
        _result("all locks released", released == ["Released"] * 3, f"lock statuses: {released}")
    )
    return results


def _interleaving_free(enters: list[EventRecord], callbacks: list[EventRecord]) -> bool:
    """Between two enter commits there is exactly one callback commit."""
    orders = sorted([(e.order, "enter") for e in enters] + [(c.order, "callback") for c in callbacks])
    kinds = [kind for _, kind in orders]
    return kinds == ["enter", "callback"] * (len(kinds) // 2)


def _deposit(history: History) -> int:
    for event in _events(history, "enter"):
        for effect in event.effects:
            if effect.name == "escrow":
                return effect.args[0]
    return 0


def _forfeited_to_owner(history: History) -> list[AssertionResult]:
    recover = [e for e in _events(history, "owner_recover") if e.committed]
    statuses = [lock.status for lock in history.locks]
    owner = "owner"
    expected = get_settings().default_funds + _deposit(history) - history.gas.get("spent", {}).get(owner, 0)
    return [
        _result("owner recovery commits", len(recover) == 1, f"recoveries: {len(recover)}"),
        _result("lock forfeited", statuses == ["Forfeited"], f"lock statuses: {statuses}"),
        _result(
            "deposit goes to the owner",
            history.balances.get(owner) == expected,
            f"owner balance {history.balances.get(owner)}, expected {expected}",
        ),
    ]


def _out_of_gas(history: History, verdict: Verdict) -> list[AssertionResult]:
    callbacks = _events(history, "_callback")
    budget = [e.ctx.gas_budget for e in callbacks]
    results = [
        _result(
            "callback runs out of gas",
            [e.outcome for e in callbacks] == ["AbortedOutOfGas"],
            f"outcomes: {[e.outcome for e in callbacks]}",
        ),
        _result(
            "aborted callback leaves no state change",
            all(e.pre_state == e.post_state for e in callbacks),
        ),
        _result(
            "miner is paid the exhausted budget",
            [e.gas_used for e in callbacks] == budget,
            f"gas used {[e.gas_used for e in callbacks]}, budgets {budget}",
        ),
    ]
    return results + _forfeited_to_owner(history)


def _lost_callback(history: History, verdict: Verdict) -> list[AssertionResult]:
    recover = [e for e in _events(history, "owner_recover") if e.committed]
    initial = history.initial["blockking"].attrs
    real = [a for a in initial if not a.startswith("__")]
    shadows = [a for a in initial if a.startswith("__")]
    results = [_result("no callback executes", not _events(history, "_callback"))]
    if recover:
        before = recover[0].pre_state.attrs
        results.append(
            _result(
                "real attributes keep their pre-call values",
                all(before[a] == initial[a] for a in real),
                f"changed: {[a for a in real if before[a] != initial[a]]}",
            )
        )
        results.append(
            _result(
                "staged values sit in the shadows",
                bool(shadows) and all(before[a] != initial[a] for a in shadows),
                f"unchanged shadows: {[a for a in shadows if before[a] == initial[a]]}",
            )
        )
    return results + _forfeited_to_owner(history)


RECIPES: dict[str, Recipe] = {
    recipe.name: recipe
    for recipe in (
        Recipe("puzzle-anomaly", "Bob is paid the lowered reward", (_puzzle_anomaly, _gas_conserved)),
        Recipe("puzzle-fixed", "freshness checks abort Bob's stale call", (_puzzle_fixed, _gas_conserved)),
        Recipe(
            "blockking-anomaly",
            "Carol gets three chances to become king",
            (_blockking_anomaly, _gas_conserved),
        ),
        Recipe(
            "blockking-fixed",
            "locks serialize entries with their callbacks",
            (_blockking_fixed, _locks_safe, _gas_conserved),
        ),
        Recipe(
            "out-of-gas-atomicity",
            "an out-of-gas callback rolls back and the owner keeps the deposit",
            (_out_of_gas, _locks_safe, _gas_conserved),
        ),
        Recipe(
            "lost-callback",
            "a lost callback never touches the real attributes",
            (_lost_callback, _locks_safe, _gas_conserved),
        ),
    )
}


### Running

def state_deltas(history: History) -> dict[str, dict]:
    """Changed attributes and balance per object, as [initial, final] pairs."""
    deltas: dict[str, dict] = {}
    for address, final in history.final.items():
        initial = history.initial.get(address)
        changes = {}
        for name, value in final.attrs.items():
            before = initial.attrs.get(name) if initial is not None else None
            if before != value:
                changes[name] = [before, value]
        if initial is None or initial.balance != final.balance:
            changes["$balance"] = [initial.balance if initial else 0, final.balance]
        if changes:
            deltas[address] = changes
    return deltas


def history_digest(history: History) -> str:
    return hashlib.sha256(export_history(history).encode("utf-8")).hexdigest()


def run_recipe(
    name: str, seed: Optional[int] = None, corpus_dir: Optional[Path] = None
) -> tuple[RecipeReport, History]:
    """
    Run a bundled recipe end to end.

    Args:
        name: Recipe name, see `RECIPES`
        seed: Seed override; the scenario's bundled seed when omitted
        corpus_dir: Corpus root; settings default when omitted

    Returns:
        tuple: The report and the simulated history

    Raises:
        ConfigError: Unknown recipe
        RecipeFailed: The first assertion that does not hold, with the full report attached
    """
    recipe = RECIPES.get(name)
    if recipe is None:
        raise ConfigError(f"unknown recipe '{name}' (known: {', '.join(RECIPES)})")
    corpus_dir = Path(corpus_dir or get_settings().corpus_dir)
    scenario_path = corpus_dir / "scenarios" / recipe.scenario_file
    scenario, history = get_pipeline_service().simulate_file(
        scenario_path, corpus_dir / "contracts", seed
    )
    verdict = check(history)

    assertions = []
    expected = expected_verdict(name, corpus_dir)
    if expected is not None:
        assertions.append(
            _result(
                "expected verdict",
                verdict.serializable == expected.serializable,
                f"serializable={verdict.serializable}, expected {expected.serializable}",
            )
        )
    for recipe_check in recipe.checks:
        assertions.extend(recipe_check(history, verdict))

    report = RecipeReport(
        recipe=name,
        seed=scenario.seed,
        transformed=scenario.transform,
        verdict=verdict,
        assertions=assertions,
        history_digest=history_digest(history),
        deltas=state_deltas(history),
    )
    failed = next((a for a in assertions if not a.passed), None)
    if failed is not None:
        detail = f"{failed.name}: {failed.detail}" if failed.detail else failed.name
        raise RecipeFailed(name, detail, report)
    logger.info(f"Recipe {name} passed {len(assertions)} assertions")
    return report, history


### Random schedules

SWEEP_CONTRACTS = ("puzzle", "counter", "blockking")


def random_scenario(seed: int) -> ScenarioConfig:
    """
    A random schedule over the transformed corpus contracts.

    At most three clients, six spans and two contract chains. Clients
    observe exactly the attributes the called function checks, and lock
    before calling a cross-domain entry point.
    """
    rng = random.Random(f"sweep/{seed}")
    chains = ["main", "side"][: rng.randint(1, 2)]
    contracts = rng.sample(SWEEP_CONTRACTS, rng.randint(1, len(SWEEP_CONTRACTS)))
    deployments = []
    for name in sorted(contracts):
        data = {"diff": "0x" + "ff" * 32} if name == "puzzle" else {}
        deployments.append(
            Deployment(
                address=name,
                contract=name,
                chain=rng.choice(chains),
                deployer="owner",
                value=rng.randint(0, 5) if name == "puzzle" else 0,
                data=data,
            )
        )

    checks = _sweep_checks()
    clients = []
    spans = 0
    for client_id in ["owner", "alice", "bob"][: rng.randint(1, 3)]:
        actions = []
        tick = rng.randint(1, 5)
        for _ in range(rng.randint(1, 2)):
            if spans == 6:
                break
            spans += 1
            contract = rng.choice(contracts)
            function = rng.choice(sorted(checks[contract]))
            attrs = checks[contract][function]
            if attrs:
                actions.append(ObserveAction(kind="observe", tick=tick, contract=contract, attrs=attrs))
            tick += rng.randint(0, 4)
            actions.append(_random_call(rng, contract, function, tick))
            tick += rng.randint(1, 25)
        clients.append(ClientScript(client_id=client_id, actions=actions))

    return ScenarioConfig(
        name=f"sweep-{seed}",
        seed=seed,
        transform=True,
        max_ticks=600,
        mempool_jitter_ticks=rng.choice([0, 0, 3]),
        chains=[ChainSpec(chain_id=c, miner_count=rng.randint(1, 3)) for c in chains],
        contracts=deployments,
        oracle=OracleConfig(
            response_delay_ticks=(rng.randint(0, 10), rng.randint(10, 40)),
            drop_probability=rng.choice([0.0, 0.0, 0.25]),
        ),
        clients=clients,
    )


def _random_call(rng: random.Random, contract: str, function: str, tick: int) -> CallAction:
    if contract == "puzzle" and function == "SubmitSolution":
        return CallAction(
            kind="call", tick=tick, contract=contract, function=function,
            data={"solution": "0x" + "%064x" % rng.getrandbits(256)},
        )
    if contract == "puzzle":
        return CallAction(kind="call", tick=tick, contract=contract, function=function, value=rng.randint(0, 5))
    if contract == "counter" and function == "increment":
        return CallAction(kind="call", tick=tick, contract=contract, function=function, args=[rng.randint(0, 5)])
    if contract == "blockking":
        return CallAction(
            kind="call", tick=tick, contract=contract, function=function,
            value=rng.randint(1, 50), lock=True, lock_retry_ticks=10, lock_max_attempts=10,
        )
    return CallAction(kind="call", tick=tick, contract=contract, function=function)


@functools.cache
def compile_transformed(name: str) -> CompiledContract:
    """A corpus contract transformed with its bundled transform config, if any."""
    settings = get_settings()
    config_path = settings.corpus_dir / "transforms" / f"{name}.toml"
    config = load_transform_config(config_path if config_path.is_file() else None)
    return get_pipeline_service().compile_file(
        settings.contracts_dir / f"{name}.txsc", config, apply_transform=True
    )


def _sweep_checks() -> dict[str, dict[str, list[str]]]:
    """Client-callable transactional functions per contract and the attributes their checks read."""
    checks = {}
    for name in SWEEP_CONTRACTS:
        compiled = compile_transformed(name)
        checks[name] = {
            fn: compiled.report.for_function(fn).injected_checks if compiled.report.for_function(fn) else []
            for fn, profile in compiled.profiles.items()
            if profile.classification != Classification.NON_TRANSACTIONAL
        }
    return checks


def sweep_scenario(scenario: ScenarioConfig) -> SweepResult:
    """Simulate a transformed scenario, check it and compare traces with the static sets."""
    deployed = {d.contract: compile_transformed(d.contract).deployable for d in scenario.contracts}
    history = run(scenario, deployed)
    verdict = check(history)
    profiles = {name: analyze(ast) for name, ast in deployed.items()}
    stems = {d.address: d.contract for d in scenario.contracts}
    violations = []
    for event in history.events():
        profile = profiles[stems[event.contract]][event.function]
        extra_reads = pre_write_reads(event.trace) - set(profile.read_set)
        extra_writes = written_attributes(event.trace) - set(profile.write_set)
        if extra_reads or extra_writes:
            violations.append(
                f"{event.contract}.{event.function} order {event.order}: "
                f"reads {sorted(extra_reads)} writes {sorted(extra_writes)}"
            )
    return SweepResult(
        seed=scenario.seed,
        spans=len(history.spans),
        serializable=verdict.serializable,
        method=verdict.method,
        set_violations=violations,
    )


def sweep(count: int = 200, start_seed: int = 0) -> list[SweepResult]:
    """Run `count` random schedules with consecutive seeds."""
    results = []
    for seed in range(start_seed, start_seed + count):
        result = sweep_scenario(random_scenario(seed))
        if not result.serializable or result.set_violations:
            logger.warning(f"Sweep seed {seed}: serializable={result.serializable} {result.set_violations}")
        results.append(result)
    return results
