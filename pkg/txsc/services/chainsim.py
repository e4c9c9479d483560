"""
Deterministic multi-chain simulator.

The simulator advances in integer ticks. In every tick:

1. each contract chain whose block interval is due appends a block: its
   miner (seeded rotation) executes the mempool sequentially, in arrival
   order with seeded jitter, and collects the gas of every call;
2. oracle callbacks whose delay has elapsed enter their chain's mempool;
3. scripted client actions run: observing attributes, issuing calls
   (after acquiring locks when asked to) and owner recoveries;
4. lock operations of the tick are appended to the lock chain.

Effects of a call (value, transfers, escrow, lock release and forfeit,
oracle requests) are applied only when the call commits. All randomness
comes from generators seeded with the scenario seed, so equal scenarios
give byte-identical histories.
"""

import dataclasses
import random
from typing import Any, Optional

from ..core.config import get_settings
from ..core.exceptions import ConfigError, LockError, ReplayMismatch
from ..core.logging import get_logger
from ..models.ast import BuiltinStmt, ContractAst, walk_statements
from ..models.chain import (
    Block,
    BlockEntry,
    CallEvent,
    Chain,
    EventKind,
    Ledger,
    LockItem,
    LockStatus,
    state_snapshot,
)
from ..models.execution import CallContext, ExecResult, ExternalRequest, ObjectState, Outcome
from ..models.history import (
    ChainSummary,
    ClientSpan,
    ContractRecord,
    EffectEntry,
    EventContext,
    EventRecord,
    History,
    LockEntry,
    ObservedRead,
    RequestEntry,
    StateSnapshot,
    TraceEntry,
    TransferEntry,
)
from ..models.scenario import CallAction, ObserveAction, RecoverAction, ScenarioConfig
from ..models.values import Value, encode_mapping, encode_value
from .analysis import find_callbacks, lock_cover
from .interpreter import execute, make_callback_id
from .locks import LOCK_OP_GAS, LockManager
from .printer import print_contract
from .transform import RECOVER_FUNCTION
from .typecheck import is_reserved

logger = get_logger(__name__)


def run(config: ScenarioConfig, contracts: dict[str, ContractAst]) -> History:
    """
    Simulate a scenario.

    Args:
        config: Validated scenario
        contracts: Compiled contracts keyed by the names deployments refer to

    Returns:
        History: The committed trace of the run

    Raises:
        ConfigError: The scenario refers to missing contracts or functions, or a deployment fails
        ReplayMismatch: Re-executing the chains from genesis does not reproduce their state
    """
    simulator = Simulator(config, contracts)
    history = simulator.run()
    simulator.verify_replay()
    return history


class RecordingHost:
    """Wraps a host and logs every answer for replay."""

    def __init__(self, host):
        self.host = host
        self.log: list[tuple[str, Value]] = []

    def _answer(self, name: str, *args):
        answer = getattr(self.host, name)(*args)
        self.log.append((name, answer))
        return answer

    def lock_held(self, lock_id):
        return self._answer("lock_held", lock_id)

    def lock_active(self, lock_id):
        return self._answer("lock_active", lock_id)

    def oracle_address(self):
        return self._answer("oracle_address")

    def contract_owner(self):
        return self._answer("contract_owner")

    def can_escrow(self, amount):
        return self._answer("can_escrow", amount)

    def callback_id(self):
        return self._answer("callback_id")


class ReplayHost:
    """Answers builtin queries from a recorded log, in order."""

    def __init__(self, log: list[tuple[str, Value]]):
        self._log = list(log)
        self._position = 0

    def _next(self, name: str):
        if self._position >= len(self._log):
            raise ReplayMismatch(f"replay asked '{name}' beyond the recorded answers")
        recorded, answer = self._log[self._position]
        if recorded != name:
            raise ReplayMismatch(f"replay asked '{name}', recording has '{recorded}'")
        self._position += 1
        return answer

    def lock_held(self, lock_id):
        return self._next("lock_held")

    def lock_active(self, lock_id):
        return self._next("lock_active")

    def oracle_address(self):
        return self._next("oracle_address")

    def contract_owner(self):
        return self._next("contract_owner")

    def can_escrow(self, amount):
        return self._next("can_escrow")

    def callback_id(self):
        return self._next("callback_id")


class _ChainHost:
    """Host environment of one call executing in a block."""

    def __init__(self, sim: "Simulator", chain: Chain, block: Block, event: CallEvent):
        self.sim = sim
        self.chain = chain
        self.block = block
        self.event = event

    def lock_held(self, lock_id) -> bool:
        items = self.sim.lock_items(self.event.contract, self.event.fn)
        return self.sim.locks.is_held(lock_id, holder=self.event.client_id, items=items)

    def lock_active(self, lock_id) -> bool:
        return self.sim.locks.is_active(lock_id)

    def oracle_address(self) -> str:
        return self.sim.config.oracle.address

    def contract_owner(self) -> str:
        return self.sim.deployments[self.event.contract].deployer

    def can_escrow(self, amount: int) -> bool:
        return self.sim.available(self.event.client_id) >= amount + self.sim.call_cost(self.event)

    def callback_id(self) -> bytes:
        self.sim.request_seq += 1
        return make_callback_id(self.chain.chain_id, self.block.index, self.sim.request_seq)


@dataclasses.dataclass
class _AgendaItem:
    tick: int
    seq: int
    client_id: str
    action: Any
    attempt: int = 1
    span_id: Optional[str] = None


class Simulator:
    """
    One scenario run.

    Attributes:
        chains: Contract chains by id
        locks: The lock manager and its chain
        ledger: Funds, escrows and gas totals
    """

    def __init__(self, config: ScenarioConfig, contracts: dict[str, ContractAst]):
        self.config = config
        self.settings = get_settings()
        self.rng = random.Random(f"{config.seed}/schedule")
        self.oracle_rng = random.Random(f"{config.seed}/oracle")
        self.ledger = Ledger(default_funds=self.settings.default_funds)

        self.chains: dict[str, Chain] = {}
        for spec in config.chains:
            miners = [f"{spec.chain_id}-miner-{i}" for i in range(spec.miner_count)]
            self.chains[spec.chain_id] = Chain(
                spec.chain_id, miners, miner_offset=self.rng.randrange(spec.miner_count)
            )
        lock_chain = Chain(config.lock_chain, [f"{config.lock_chain}-miner-0"])
        self.owners: dict[tuple[str, str], str] = {}
        self.locks = LockManager(lock_chain, self.ledger, self.owners)

        self.deployments = {d.address: d for d in config.contracts}
        self.asts: dict[str, ContractAst] = {}
        for deployment in config.contracts:
            ast = contracts.get(deployment.contract)
            if ast is None:
                raise ConfigError(f"no compiled contract '{deployment.contract}'")
            self.asts[deployment.address] = ast
            self.owners[(deployment.chain, deployment.address)] = deployment.deployer
        for client in config.clients:
            self.ledger.open(client.client_id, client.funds)
            for action in client.actions:
                fn = getattr(action, "function", None)
                if fn is not None and self.asts[action.contract].function(fn) is None:
                    raise ConfigError(f"contract '{action.contract}' has no function '{fn}'")

        self.order = 0
        self.seq = 0
        self.request_seq = 0
        self.tick = 0
        self.spans: dict[str, ClientSpan] = {}
        self.observed: dict[str, dict[str, Value]] = {}
        self.open_span: dict[str, Optional[str]] = {}
        self.span_counter: dict[str, int] = {}
        self.pending_callbacks: list[tuple[int, CallEvent]] = []
        self.script_index = 0
        self.initial: dict[str, StateSnapshot] = {}
        self._covers: dict[tuple[str, str], list[LockItem]] = {}
        self._lock_ops: dict[tuple[str, str], int] = {}

        self.agenda: list[_AgendaItem] = []
        scripted = []
        for c_index, client in enumerate(config.clients):
            for a_index, action in enumerate(client.actions):
                scripted.append((action.tick, c_index, a_index, client.client_id, action))
        for tick, _, _, client_id, action in sorted(scripted, key=lambda s: s[:3]):
            self.agenda.append(_AgendaItem(tick, self.next_seq(), client_id, action))

    def next_seq(self) -> int:
        self.seq += 1
        return self.seq

    def next_order(self) -> int:
        self.order += 1
        return self.order

    def lock_items(self, address: str, fn: str) -> list[LockItem]:
        key = (address, fn)
        if key not in self._covers:
            chain_id = self.deployments[address].chain
            self._covers[key] = [
                (chain_id, address, attr) for attr in lock_cover(self.asts[address], fn)
            ]
        return self._covers[key]

    def lock_ops(self, address: str, fn: str) -> int:
        """Lock releases and forfeits a function may issue."""
        key = (address, fn)
        if key not in self._lock_ops:
            self._lock_ops[key] = sum(
                1
                for stmt in walk_statements(self.asts[address].function(fn).body)
                if isinstance(stmt, BuiltinStmt)
                and stmt.call.name in ("lock_release", "lock_forfeit")
            )
        return self._lock_ops[key]

    def available(self, account: str) -> int:
        """Funds left once unflushed lock operations are paid."""
        return self.ledger.balance(account) - self.locks.pending_gas(account)

    def call_cost(self, event: CallEvent) -> int:
        """Most a call can take from its payer: value, full gas budget and lock gas."""
        lock_gas = LOCK_OP_GAS * self.lock_ops(event.contract, event.fn)
        return event.ctx.value + event.ctx.gas_budget + lock_gas

    ### Main loop

    def run(self) -> History:
        self.deploy()
        for tick in range(self.config.max_ticks + 1):
            self.tick = tick
            self.step(tick)
            if self.idle(tick):
                break
        else:
            logger.warning(f"Scenario {self.config.name} reached max_ticks with work pending")
        return self.history()

    def idle(self, tick: int) -> bool:
        return (
            not self.agenda
            and not self.pending_callbacks
            and all(not chain.mempool for chain in self.chains.values())
        )

    def step(self, tick: int) -> None:
        if tick > 0 and tick % self.config.block_interval_ticks == 0:
            for chain in self.chains.values():
                self.produce_block(chain, tick)

        due = [event for due_tick, event in self.pending_callbacks if due_tick == tick]
        self.pending_callbacks = [(t, e) for t, e in self.pending_callbacks if t != tick]
        for event in sorted(due, key=lambda e: e.seq):
            self.chains[event.chain_id].mempool.append(event)

        todo = sorted((i for i in self.agenda if i.tick == tick), key=lambda i: i.seq)
        self.agenda = [i for i in self.agenda if i.tick != tick]
        for item in todo:
            self.perform(item)

        self.locks.flush(tick)

    ### Deployment

    def deploy(self) -> None:
        for chain in self.chains.values():
            block = Block(0, chain.head_digest, chain.next_miner(), 0)
            for deployment in (d for d in self.config.contracts if d.chain == chain.chain_id):
                ast = self.asts[deployment.address]
                chain.objects[deployment.address] = ObjectState.initial(ast, deployment.address)
                self.ledger.open(deployment.deployer)
                if ast.function("constructor") is None:
                    if deployment.value:
                        raise ConfigError(
                            f"contract '{deployment.address}' has no constructor to receive value"
                        )
                    continue
                event = CallEvent(
                    kind=EventKind.DEPLOY,
                    chain_id=chain.chain_id,
                    contract=deployment.address,
                    fn="constructor",
                    ctx=CallContext(
                        sender=deployment.deployer,
                        value=deployment.value,
                        data=dict(deployment.data),
                        block_number=0,
                        gas_budget=deployment.gas,
                        args=tuple(deployment.args),
                    ),
                    issued_at_tick=0,
                    client_id=deployment.deployer,
                    span_id="",
                    seq=self.next_seq(),
                )
                entry = self.execute_event(chain, block, event)
                if not entry.result.committed:
                    raise ConfigError(
                        f"deployment of '{deployment.address}' failed: "
                        f"{entry.result.outcome.value} {entry.result.detail}"
                    )
            chain.append_block(block)
        self.initial = {
            address: StateSnapshot(**state_snapshot(state))
            for chain in self.chains.values()
            for address, state in chain.objects.items()
        }

    ### Blocks

    def produce_block(self, chain: Chain, tick: int) -> Block:
        block = Block(chain.next_index, chain.head_digest, chain.next_miner(), tick)
        self.request_seq = 0
        events = sorted(chain.mempool, key=lambda e: e.mempool_key)
        chain.mempool = []
        for event in events:
            entry = self.execute_event(chain, block, event)
            if event.span_id:
                self.record_event(chain, block, entry, tick)
        chain.append_block(block)
        logger.debug(
            f"Chain {chain.chain_id} block {block.index} by {block.miner}: {len(events)} calls"
        )
        return block

    def execute_event(self, chain: Chain, block: Block, event: CallEvent) -> BlockEntry:
        state = chain.objects[event.contract]
        ctx = dataclasses.replace(event.ctx, block_number=block.index)
        event.ctx = ctx
        payer = event.client_id
        host = RecordingHost(_ChainHost(self, chain, block, event))
        if self.call_cost(event) > self.available(payer):
            result = ExecResult(
                outcome=Outcome.ABORTED_ERROR,
                new_state=state.copy(),
                gas_used=0,
                reason="insufficient funds for gas and value",
            )
        else:
            result = execute(self.asts[event.contract], event.fn, state, ctx, host)
        order = self.next_order()
        self.ledger.pay_gas(payer, block.miner, result.gas_used)
        entry = BlockEntry(event, result, result.gas_used, order, host.log, pre_state=state)
        block.entries.append(entry)
        if result.committed:
            chain.objects[event.contract] = result.new_state
            self.ledger.debit(payer, ctx.value)
            for transfer in result.transfers:
                self.ledger.credit(transfer.recipient, transfer.amount)
            self.apply_effects(event, result, order)
            for request in result.external_requests:
                self.schedule_callback(event, request)
        return entry

    def apply_effects(self, event: CallEvent, result: ExecResult, order: int) -> None:
        key = str(event.ctx.data.get("lock_id", event.span_id))
        for effect in result.effects:
            try:
                if effect.name == "escrow":
                    self.ledger.hold_escrow(key, event.client_id, effect.args[0])
                elif effect.name == "escrow_refund":
                    self.ledger.refund_escrow(key)
                elif effect.name == "lock_release":
                    self.locks.release_lock(
                        effect.args[0], LockStatus.RELEASED, self.tick, order, event.client_id
                    )
                elif effect.name == "lock_forfeit":
                    self.locks.release_lock(
                        effect.args[0], LockStatus.FORFEITED, self.tick, order, event.client_id
                    )
            except LockError as e:
                logger.warning(f"Effect {effect.name} of {event.span_id} rejected: {e.message}")
                span = self.spans.get(event.span_id)
                if span is not None:
                    note = f"{effect.name} rejected: {e.message}"
                    span.note = f"{span.note}; {note}" if span.note else note

    ### Oracle

    def schedule_callback(self, origin: CallEvent, request: ExternalRequest) -> None:
        oracle = self.config.oracle
        if request.service != oracle.service:
            logger.warning(
                f"No oracle serves '{request.service}'; request of {origin.span_id} dropped"
            )
            return
        dropped = self.oracle_rng.random() < oracle.drop_probability
        low, high = oracle.response_delay_ticks
        delay = self.oracle_rng.randint(low, high)
        drawn = self.oracle_rng.randint(1, 9)
        script = oracle.value_script
        if isinstance(script, list) and self.script_index < len(script):
            value = script[self.script_index]
        else:
            value = drawn
        self.script_index += 1

        if dropped:
            logger.info(f"Oracle dropped the callback for {origin.span_id}")
            return
        callbacks = find_callbacks(self.asts[origin.contract])
        if not callbacks:
            logger.warning(f"Contract {origin.contract} has no callback for {request.service}")
            return
        span = self.spans.get(origin.span_id)
        data: dict[str, Value] = {}
        if span is not None and span.lock_ids:
            data["lock_id"] = span.lock_ids[-1]
        due = self.tick + delay
        event = CallEvent(
            kind=EventKind.CALLBACK,
            chain_id=origin.chain_id,
            contract=origin.contract,
            fn=callbacks[0],
            ctx=CallContext(
                sender=oracle.address,
                value=0,
                data=data,
                gas_budget=oracle.callback_gas,
                args=(request.callback_id, value),
            ),
            issued_at_tick=due,
            client_id=origin.client_id,
            span_id=origin.span_id,
            seq=self.next_seq(),
            arrival=due,
            callback_id=request.callback_id,
        )
        self.pending_callbacks.append((due, event))
        logger.debug(f"Callback for {origin.span_id} due at tick {due} with value {value}")

    ### Clients

    def span_for(self, client_id: str) -> ClientSpan:
        span_id = self.open_span.get(client_id)
        if span_id is None:
            count = self.span_counter.get(client_id, 0) + 1
            self.span_counter[client_id] = count
            span_id = f"{client_id}#{count}"
            self.spans[span_id] = ClientSpan(span_id=span_id, client_id=client_id)
            self.observed[span_id] = {}
            self.open_span[client_id] = span_id
        return self.spans[span_id]

    def perform(self, item: _AgendaItem) -> None:
        action = item.action
        if isinstance(action, ObserveAction):
            self.observe(item.client_id, action)
        elif isinstance(action, CallAction):
            self.call(item)
        elif isinstance(action, RecoverAction):
            self.recover(item.client_id, action)

    def observe(self, client_id: str, action: ObserveAction) -> None:
        span = self.span_for(client_id)
        deployment = self.deployments[action.contract]
        state = self.chains[deployment.chain].objects[action.contract]
        names = action.attrs
        if names is None:
            names = [a for a in state.attrs if not is_reserved(a)]
        for name in names:
            if name not in state.attrs:
                raise ConfigError(f"contract '{action.contract}' has no attribute '{name}'")
            value = state.attrs[name]
            self.observed[span.span_id][name] = value
            span.observed_reads.append(
                ObservedRead(
                    chain=deployment.chain,
                    contract=action.contract,
                    attribute=name,
                    value=encode_value(value),
                    observed_at_tick=self.tick,
                    order=self.next_order(),
                )
            )

    def call(self, item: _AgendaItem) -> None:
        action: CallAction = item.action
        if item.span_id is None:
            span = self.span_for(item.client_id)
            self.open_span[item.client_id] = None
        else:
            span = self.spans[item.span_id]
        data: dict[str, Value] = {}
        if action.send_observed:
            data.update(self.observed[span.span_id])
        data.update(action.data)
        gas = action.gas if action.gas is not None else self.settings.default_gas

        cost = action.value + gas + LOCK_OP_GAS * self.lock_ops(action.contract, action.function)
        if action.lock:
            cost += LOCK_OP_GAS
        if cost > self.available(item.client_id):
            span.note = "insufficient funds"
            logger.info(f"{span.span_id} cannot pay {cost} for {action.function}")
            return

        if action.lock:
            items = self.lock_items(action.contract, action.function)
            if items:
                lock_id = self.locks.acquire_locks(
                    item.client_id, items, self.tick, self.next_order(), span.span_id
                )
                if lock_id is None:
                    if item.attempt < action.lock_max_attempts:
                        self.agenda.append(
                            _AgendaItem(
                                self.tick + action.lock_retry_ticks,
                                self.next_seq(),
                                item.client_id,
                                action,
                                item.attempt + 1,
                                span.span_id,
                            )
                        )
                    else:
                        span.note = "lock denied"
                        logger.info(f"{span.span_id} gave up after {item.attempt} lock attempts")
                    return
                span.lock_ids.append(lock_id)
                data["lock_id"] = lock_id
            else:
                logger.warning(f"{action.contract}.{action.function} needs no lock")

        self.submit(
            item.client_id,
            span,
            action.contract,
            action.function,
            CallContext(
                sender=item.client_id,
                value=action.value,
                data=data,
                gas_budget=gas,
                args=tuple(action.args),
            ),
        )

    def recover(self, client_id: str, action: RecoverAction) -> None:
        deployment = self.deployments[action.contract]
        lock_id = self.locks.latest_lock(action.lock_of, deployment.chain, action.contract)
        if lock_id is None:
            logger.warning(f"No lock of {action.lock_of} on {action.contract} to recover")
            return
        if self.asts[action.contract].function(RECOVER_FUNCTION) is None:
            raise ConfigError(f"contract '{action.contract}' has no {RECOVER_FUNCTION}")
        span = self.span_for(client_id)
        self.open_span[client_id] = None
        gas = action.gas if action.gas is not None else self.settings.default_gas
        self.submit(
            client_id,
            span,
            action.contract,
            RECOVER_FUNCTION,
            CallContext(sender=client_id, gas_budget=gas, args=(lock_id,)),
        )

    def submit(self, client_id: str, span: ClientSpan, contract: str, fn: str, ctx: CallContext) -> None:
        jitter = self.config.mempool_jitter_ticks
        arrival = self.tick + (self.rng.randint(0, jitter) if jitter else 0)
        chain_id = self.deployments[contract].chain
        event = CallEvent(
            kind=EventKind.CALL,
            chain_id=chain_id,
            contract=contract,
            fn=fn,
            ctx=ctx,
            issued_at_tick=self.tick,
            client_id=client_id,
            span_id=span.span_id,
            seq=self.next_seq(),
            arrival=arrival,
        )
        self.chains[chain_id].mempool.append(event)

    ### History

    def record_event(self, chain: Chain, block: Block, entry: BlockEntry, tick: int) -> None:
        event, result = entry.event, entry.result
        self.spans[event.span_id].events.append(
            EventRecord(
                kind=event.kind.value,
                chain=chain.chain_id,
                contract=event.contract,
                function=event.fn,
                ctx=context_record(event.ctx),
                issued_at_tick=event.issued_at_tick,
                tick=tick,
                block=block.index,
                order=entry.order,
                miner=block.miner,
                outcome=result.outcome.value,
                detail=result.detail,
                gas_used=result.gas_used,
                trace=[
                    TraceEntry(kind=op.kind, attribute=op.attribute, value=encode_value(op.value))
                    for op in result.trace
                ],
                transfers=[
                    TransferEntry(recipient=t.recipient, amount=t.amount) for t in result.transfers
                ],
                external_requests=[
                    RequestEntry(
                        service=r.service, query=r.query, callback_id=encode_value(r.callback_id)
                    )
                    for r in result.external_requests
                ],
                effects=[
                    EffectEntry(name=e.name, args=[encode_value(a) for a in e.args])
                    for e in result.effects
                ],
                pre_state=StateSnapshot(**state_snapshot(entry.pre_state)),
                post_state=StateSnapshot(**state_snapshot(result.new_state)),
            )
        )

    def history(self) -> History:
        chains = [*self.chains.values(), self.locks.chain]
        return History(
            seed=self.config.seed,
            oracle_address=self.config.oracle.address,
            chains=[
                ChainSummary(chain_id=c.chain_id, blocks=len(c.blocks), head_digest=c.head_digest)
                for c in chains
            ],
            contracts=[
                ContractRecord(
                    address=d.address,
                    name=self.asts[d.address].name,
                    chain=d.chain,
                    deployer=d.deployer,
                    source=print_contract(self.asts[d.address]),
                )
                for d in self.config.contracts
            ],
            initial=self.initial,
            final={
                address: StateSnapshot(**state_snapshot(state))
                for chain in self.chains.values()
                for address, state in chain.objects.items()
            },
            balances=dict(sorted(self.ledger.accounts.items())),
            gas={
                "spent": dict(sorted(self.ledger.gas_spent.items())),
                "earned": dict(sorted(self.ledger.gas_earned.items())),
            },
            locks=[
                LockEntry(
                    lock_id=r.lock_id,
                    holder=r.holder,
                    span_id=r.span_id,
                    items=[list(item) for item in sorted(r.items)],
                    status=r.status.value,
                    acquired_tick=r.acquired_tick,
                    acquired_order=r.acquired_order,
                    released_tick=r.released_tick,
                    released_order=r.released_order,
                )
                for r in self.locks.records.values()
            ],
            spans=list(self.spans.values()),
        )

    ### Replay

    def verify_replay(self) -> None:
        """
        Re-execute every committed block entry from genesis and compare states.

        Raises:
            ReplayMismatch: A chain's object states differ from the replayed ones
        """
        for chain in self.chains.values():
            objects = {
                address: ObjectState.initial(self.asts[address], address)
                for address in chain.objects
            }
            for block in chain.blocks:
                for entry in block.entries:
                    if not entry.result.committed:
                        continue
                    event = entry.event
                    result = execute(
                        self.asts[event.contract],
                        event.fn,
                        objects[event.contract],
                        event.ctx,
                        ReplayHost(entry.host_log),
                    )
                    if not result.committed:
                        raise ReplayMismatch(
                            f"{chain.chain_id} block {block.index}: {event.fn} no longer commits"
                        )
                    objects[event.contract] = result.new_state
            if objects != chain.objects:
                raise ReplayMismatch(f"replay of chain {chain.chain_id} diverges from its state")
        logger.debug("Replay verification passed")


def context_record(ctx: CallContext) -> EventContext:
    return EventContext(
        sender=ctx.sender,
        value=ctx.value,
        data=encode_mapping(ctx.data),
        block_number=ctx.block_number,
        gas_budget=ctx.gas_budget,
        args=[encode_value(a) for a in ctx.args],
    )
