"""
Serializability oracle for simulator histories.

The unit of isolation is the client span: the reads a client observes
before calling, the call, and the callbacks it triggers. A history is
serializable when some serial order of its spans, re-executed from the
initial state, gives every span the values it observed and every call the
trace it actually had, and ends in the recorded final state.

Two deciders are provided. The permutation search is exact for that
definition and is used up to a configurable number of spans; the conflict
graph is the scalable approximation (acyclic implies conflict-serializable)
and is always reported alongside.
"""

import dataclasses
from collections import defaultdict
from typing import Optional

import networkx as nx

from ..core.config import get_settings
from ..core.exceptions import BoundExceeded
from ..core.logging import get_logger
from ..models.ast import ContractAst
from ..models.execution import CallContext, ObjectState
from ..models.history import ClientSpan, EventRecord, History, ObservedRead
from ..models.schemas import ConflictEdge, ConflictKind, Verdict
from ..models.values import decode_value, encode_value
from .interpreter import execute
from .parser import parse_contract

logger = get_logger(__name__)

BALANCE = "$balance"


@dataclasses.dataclass(frozen=True)
class SpanOp:
    span_id: str
    kind: str  # "read" | "write"
    attribute: str  # chain/contract.attr
    value: object
    order: tuple[int, int]


def span_ops(history: History) -> list[SpanOp]:
    """
    Data operations of every span in global order.

    Observed reads are reads at their observation index; committed calls
    contribute their traced reads and writes, plus a write of the
    contract's balance when they move value. Aborted calls contribute nothing.
    """
    ops: list[SpanOp] = []
    for span in history.spans:
        for read in span.observed_reads:
            ops.append(
                SpanOp(span.span_id, "read", _item(read.chain, read.contract, read.attribute),
                       read.value, (read.order, 0))
            )
        for event in span.committed_events:
            for index, op in enumerate(event.trace, start=1):
                ops.append(
                    SpanOp(span.span_id, op.kind, _item(event.chain, event.contract, op.attribute),
                           op.value, (event.order, index))
                )
            if event.ctx.value or event.transfers:
                ops.append(
                    SpanOp(span.span_id, "write", _item(event.chain, event.contract, BALANCE),
                           event.post_state.balance, (event.order, len(event.trace) + 1))
                )
    return sorted(ops, key=lambda op: op.order)


def _item(chain: str, contract: str, attribute: str) -> str:
    return f"{chain}/{contract}.{attribute}"


def conflict_graph(history: History) -> list[ConflictEdge]:
    """
    Directed conflicts between spans.

    There is an edge u -> v when an operation of u precedes a conflicting
    operation of v on the same item; at least one of the two is a write.
    Edges are unique per (source, target, item, kind) and listed in the
    order their first witnessing pair occurs.
    """
    by_item: dict[str, list[SpanOp]] = defaultdict(list)
    for op in span_ops(history):
        by_item[op.attribute].append(op)

    found: dict[tuple, tuple] = {}
    for attribute, ops in by_item.items():
        for i, first in enumerate(ops):
            for second in ops[i + 1:]:
                if first.span_id == second.span_id:
                    continue
                if first.kind == "read" and second.kind == "read":
                    continue
                kind = ConflictKind((first.kind[0] + second.kind[0]).upper())
                key = (first.span_id, second.span_id, attribute, kind)
                if key not in found:
                    found[key] = (second.order, first.order)
    ordered = sorted(found.items(), key=lambda item: (item[1], item[0][2], item[0][3].value))
    return [
        ConflictEdge(source=s, target=t, attribute=a, kind=k) for (s, t, a, k), _ in ordered
    ]


def _graph(history: History, edges: list[ConflictEdge]) -> nx.DiGraph:
    graph = nx.DiGraph()
    for span in history.spans:
        graph.add_node(span.span_id)
    for edge in edges:
        if graph.has_edge(edge.source, edge.target):
            graph[edge.source][edge.target]["conflicts"].append(edge)
        else:
            graph.add_edge(edge.source, edge.target, conflicts=[edge])
    return graph


def check(history: History, bound: Optional[int] = None, fallback: bool = True) -> Verdict:
    """
    Decide whether a history is serializable.

    The bound counts committed spans only: spans without a committed event
    never enter the permutation search and are appended to the witness.

    Args:
        history: Exported or in-memory simulator history
        bound: Largest number of spans searched by permutation (settings default)
        fallback: Use conflict-graph acyclicity above the bound instead of failing

    Returns:
        Verdict: Decision, witness order or conflict cycle, and invalidated spans

    Raises:
        BoundExceeded: Too many spans for the permutation search and fallback disabled
    """
    bound = bound if bound is not None else get_settings().permutation_bound
    edges = conflict_graph(history)
    graph = _graph(history, edges)
    try:
        cycle = [graph[u][v]["conflicts"][0] for u, v in nx.find_cycle(graph)]
    except nx.NetworkXNoCycle:
        cycle = None

    committed = [s for s in history.spans if s.committed_events]
    aborted = [s for s in history.spans if not s.committed_events]
    replay = _SerialReplay(history)

    if len(committed) > bound:
        if not fallback:
            raise BoundExceeded(len(committed), bound)
        method = "conflict-graph"
        serializable = cycle is None
        witness = None
        if serializable:
            first = {s.span_id: s.first_order for s in history.spans}
            order = list(nx.lexicographical_topological_sort(graph, key=lambda n: (first[n], n)))
            witness = [n for n in order if n not in {s.span_id for s in aborted}]
    else:
        method = "permutation"
        witness = replay.search(committed)
        serializable = witness is not None

    invalidated = replay.invalidated(aborted, witness or [s.span_id for s in committed])
    if witness is not None:
        witness = witness + [s.span_id for s in aborted]

    verdict = Verdict(
        serializable=serializable,
        method=method,
        witness_order=witness,
        conflict_cycle=cycle,
        conflict_serializable=cycle is None,
        invalidated_spans=invalidated,
        spans=len(history.spans),
    )
    logger.info(
        f"Verdict: serializable={verdict.serializable} via {method}, "
        f"conflict-serializable={verdict.conflict_serializable}"
    )
    return verdict


class _SerialHost:
    """Host for serial re-execution: locks are granted, callback ids come from the record."""

    def __init__(self, oracle: str, owner: str, event: EventRecord):
        self.oracle = oracle
        self.owner = owner
        self.ids = [decode_value(r.callback_id) for r in event.external_requests]

    def lock_held(self, lock_id) -> bool:
        return True

    def lock_active(self, lock_id) -> bool:
        return True

    def oracle_address(self) -> str:
        return self.oracle

    def contract_owner(self) -> str:
        return self.owner

    def can_escrow(self, amount: int) -> bool:
        return True

    def callback_id(self) -> bytes:
        if self.ids:
            return self.ids.pop(0)
        return bytes(32)


States = dict[str, ObjectState]


class _SerialReplay:
    """Re-executes spans serially from the history's initial state."""

    def __init__(self, history: History):
        self.history = history
        self.asts: dict[str, ContractAst] = {
            record.address: parse_contract(record.source) for record in history.contracts
        }
        self.owners = {record.address: record.deployer for record in history.contracts}
        self.initial: States = {
            address: self._state(address, snapshot.attrs, snapshot.balance)
            for address, snapshot in history.initial.items()
        }
        self.final = {
            address: snapshot.model_dump() for address, snapshot in history.final.items()
        }

    def _state(self, address: str, attrs: dict, balance: int) -> ObjectState:
        types = {a.name: a.type_name for a in self.asts[address].attributes}
        decoded = {}
        for name, raw in attrs.items():
            if types.get(name) == "bytes32":
                decoded[name] = bytes.fromhex(raw[2:])
            else:
                decoded[name] = raw
        return ObjectState(address, decoded, balance)

    def search(self, spans: list[ClientSpan]) -> Optional[list[str]]:
        """Depth-first search over span orders, actual commit order first."""
        spans = sorted(spans, key=lambda s: (s.first_order, s.span_id))

        def visit(states: States, remaining: list[ClientSpan], prefix: list[str]) -> Optional[list[str]]:
            if not remaining:
                return prefix if self.matches_final(states) else None
            for i, span in enumerate(remaining):
                after = self.apply(states, span)
                if after is None:
                    continue
                found = visit(after, remaining[:i] + remaining[i + 1:], prefix + [span.span_id])
                if found is not None:
                    return found
            return None

        return visit(self.initial, spans, [])

    def reads_match(self, states: States, reads: list[ObservedRead]) -> bool:
        for read in reads:
            state = states.get(read.contract)
            if state is None or read.attribute not in state.attrs:
                return False
            if encode_value(state.attrs[read.attribute]) != read.value:
                return False
        return True

    def apply(self, states: States, span: ClientSpan) -> Optional[States]:
        """Run one span serially; None when its reads or re-executed calls disagree with the record."""
        if not self.reads_match(states, span.observed_reads):
            return None
        states = dict(states)
        for event in span.committed_events:
            state = states.get(event.contract)
            if state is None:
                return None
            ctx = CallContext(
                sender=event.ctx.sender,
                value=event.ctx.value,
                data={k: decode_value(v) for k, v in event.ctx.data.items()},
                block_number=event.ctx.block_number,
                gas_budget=event.ctx.gas_budget,
                args=tuple(decode_value(a) for a in event.ctx.args),
            )
            host = _SerialHost(self.history.oracle_address or "", self.owners[event.contract], event)
            result = execute(self.asts[event.contract], event.function, state, ctx, host)
            if not result.committed:
                return None
            trace = [(op.kind, op.attribute, encode_value(op.value)) for op in result.trace]
            if trace != [(op.kind, op.attribute, op.value) for op in event.trace]:
                return None
            transfers = [(t.recipient, t.amount) for t in result.transfers]
            if transfers != [(t.recipient, t.amount) for t in event.transfers]:
                return None
            states[event.contract] = result.new_state
        return states

    def matches_final(self, states: States) -> bool:
        for address, state in states.items():
            snapshot = {
                "attrs": {k: encode_value(v) for k, v in state.attrs.items()},
                "balance": state.balance,
            }
            if self.final.get(address) != snapshot:
                return False
        return True

    def invalidated(self, aborted: list[ClientSpan], order: list[str]) -> list[str]:
        """Aborted spans whose observed reads match no prefix of the serial order."""
        prefixes = [self.initial]
        states = self.initial
        for span_id in order:
            span = self.history.span(span_id)
            after = self.apply(states, span) if span is not None else None
            if after is None:
                break
            states = after
            prefixes.append(states)
        return [
            span.span_id
            for span in aborted
            if span.observed_reads
            and not any(self.reads_match(p, span.observed_reads) for p in prefixes)
        ]
