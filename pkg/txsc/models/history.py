"""
History schema: the committed trace of a simulator run.

A history is self-contained. Besides the client spans it records the
deployed sources, the initial and final object states, balances and lock
records, so the serializability oracle can re-execute spans without access
to the scenario. Values are stored in their JSON form: bytes32 as `0x` hex.
The layout is documented in docs/history-schema.md.
"""

import json
from typing import Any, Optional

from pydantic import Field

from .schemas import CamelModel


class StateSnapshot(CamelModel):
    attrs: dict[str, Any] = Field(default_factory=dict)
    balance: int = 0


class ContractRecord(CamelModel):
    address: str
    name: str = Field(..., description="Contract name declared in the source")
    chain: str
    deployer: str
    source: str = Field(..., description="Source actually deployed (transformed when applicable)")


class ObservedRead(CamelModel):
    chain: str
    contract: str
    attribute: str
    value: Any
    observed_at_tick: int
    order: int


class EventContext(CamelModel):
    sender: str
    value: int = 0
    data: dict[str, Any] = Field(default_factory=dict)
    block_number: int = 0
    gas_budget: int = 0
    args: list[Any] = Field(default_factory=list)


class TraceEntry(CamelModel):
    kind: str
    attribute: str
    value: Any


class TransferEntry(CamelModel):
    recipient: str
    amount: int


class RequestEntry(CamelModel):
    service: str
    query: str
    callback_id: str


class EffectEntry(CamelModel):
    name: str
    args: list[Any] = Field(default_factory=list)


class EventRecord(CamelModel):
    """One executed call of a span, committed or aborted."""

    kind: str = Field(..., examples=["Call", "Callback"])
    chain: str
    contract: str
    function: str
    ctx: EventContext
    issued_at_tick: int
    tick: int = Field(..., description="Tick of the block that executed the call")
    block: int
    order: int = Field(..., description="Global commit index")
    miner: str
    outcome: str = Field(..., examples=["Committed", "AbortedRequires"])
    detail: Optional[str] = None
    gas_used: int
    trace: list[TraceEntry] = Field(default_factory=list)
    transfers: list[TransferEntry] = Field(default_factory=list)
    external_requests: list[RequestEntry] = Field(default_factory=list)
    effects: list[EffectEntry] = Field(default_factory=list)
    pre_state: StateSnapshot
    post_state: StateSnapshot

    @property
    def committed(self) -> bool:
        return self.outcome == "Committed"


class ClientSpan(CamelModel):
    span_id: str = Field(..., examples=["bob#1"])
    client_id: str
    observed_reads: list[ObservedRead] = Field(default_factory=list)
    events: list[EventRecord] = Field(default_factory=list)
    lock_ids: list[str] = Field(default_factory=list)
    note: Optional[str] = Field(default=None, examples=["lock denied"])

    @property
    def committed_events(self) -> list[EventRecord]:
        return [e for e in self.events if e.committed]

    @property
    def first_order(self) -> int:
        orders = [e.order for e in self.events] + [r.order for r in self.observed_reads]
        return min(orders) if orders else 0


class LockEntry(CamelModel):
    lock_id: str
    holder: str
    span_id: Optional[str] = None
    items: list[list[str]]
    status: str
    acquired_tick: int
    acquired_order: int
    released_tick: Optional[int] = None
    released_order: Optional[int] = None


class ChainSummary(CamelModel):
    chain_id: str
    blocks: int
    head_digest: str


class History(CamelModel):
    seed: Optional[int] = None
    oracle_address: Optional[str] = None
    chains: list[ChainSummary] = Field(default_factory=list)
    contracts: list[ContractRecord] = Field(default_factory=list)
    initial: dict[str, StateSnapshot] = Field(default_factory=dict)
    final: dict[str, StateSnapshot] = Field(default_factory=dict)
    balances: dict[str, int] = Field(default_factory=dict)
    gas: dict[str, dict[str, int]] = Field(
        default_factory=dict, description="Gas spent per client and earned per miner"
    )
    locks: list[LockEntry] = Field(default_factory=list)
    spans: list[ClientSpan] = Field(default_factory=list)

    def contract(self, address: str) -> Optional[ContractRecord]:
        for record in self.contracts:
            if record.address == address:
                return record
        return None

    def span(self, span_id: str) -> Optional[ClientSpan]:
        for span in self.spans:
            if span.span_id == span_id:
                return span
        return None

    def events(self) -> list[EventRecord]:
        """All events of all spans in global order."""
        return sorted((e for s in self.spans for e in s.events), key=lambda e: e.order)


def export_history(history: History) -> str:
    """
    Serialize a history as canonical JSON.

    Field order follows the schema, empty or unset top-level sections are
    omitted (`spans` is always present), and no whitespace is emitted, so
    equal histories produce equal bytes.
    """
    data = history.model_dump(mode="json", by_alias=True)
    data = {
        key: value
        for key, value in data.items()
        if key == "spans" or value not in (None, [], {})
    }
    return json.dumps(data, separators=(",", ":"), ensure_ascii=False)


def load_history(text: str) -> History:
    return History.model_validate_json(text)
