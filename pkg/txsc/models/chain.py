"""
Simulator state: chains, blocks, scheduled calls, locks and the ledger.
"""

import dataclasses
import hashlib
import json
from enum import Enum
from typing import Optional

from .execution import CallContext, ExecResult, ObjectState
from .values import Value, encode_value

LockItem = tuple[str, str, str]  # (chain id, contract address, attribute)

GENESIS_DIGEST = "0" * 64


class EventKind(str, Enum):
    DEPLOY = "Deploy"
    CALL = "Call"
    CALLBACK = "Callback"


@dataclasses.dataclass
class CallEvent:
    """A call waiting in, or executed from, a chain's mempool."""
    kind: EventKind
    chain_id: str
    contract: str
    fn: str
    ctx: CallContext
    issued_at_tick: int
    client_id: str
    span_id: str
    seq: int
    arrival: int = 0
    callback_id: Optional[bytes] = None

    @property
    def mempool_key(self) -> tuple[int, int]:
        return (self.arrival, self.seq)


@dataclasses.dataclass
class BlockEntry:
    event: CallEvent
    result: ExecResult
    gas_payment: int
    order: int
    host_log: list[tuple[str, Value]] = dataclasses.field(default_factory=list)
    pre_state: Optional[ObjectState] = None

    def summary(self) -> dict:
        return {
            "kind": self.event.kind.value,
            "contract": self.event.contract,
            "fn": self.event.fn,
            "span": self.event.span_id,
            "order": self.order,
            "outcome": self.result.outcome.value,
            "gas": self.gas_payment,
        }


@dataclasses.dataclass
class Block:
    index: int
    prev_digest: str
    miner: str
    tick: int
    entries: list = dataclasses.field(default_factory=list)

    @property
    def digest(self) -> str:
        payload = json.dumps(
            {
                "index": self.index,
                "prev": self.prev_digest,
                "miner": self.miner,
                "tick": self.tick,
                "entries": [entry.summary() for entry in self.entries],
            },
            sort_keys=True,
            separators=(",", ":"),
        )
        return hashlib.sha256(payload.encode()).hexdigest()


@dataclasses.dataclass
class Chain:
    """Append-only block list plus the materialized object states."""
    chain_id: str
    miners: list[str]
    miner_offset: int = 0
    blocks: list[Block] = dataclasses.field(default_factory=list)
    objects: dict[str, ObjectState] = dataclasses.field(default_factory=dict)
    mempool: list[CallEvent] = dataclasses.field(default_factory=list)

    @property
    def head_digest(self) -> str:
        return self.blocks[-1].digest if self.blocks else GENESIS_DIGEST

    @property
    def next_index(self) -> int:
        return len(self.blocks)

    def next_miner(self) -> str:
        return self.miners[(self.miner_offset + self.next_index) % len(self.miners)]

    def append_block(self, block: Block) -> None:
        if block.index != self.next_index or block.prev_digest != self.head_digest:
            raise ValueError(f"block {block.index} does not extend chain {self.chain_id}")
        self.blocks.append(block)


class LockStatus(str, Enum):
    HELD = "Held"
    RELEASED = "Released"
    FORFEITED = "Forfeited"


@dataclasses.dataclass
class LockRecord:
    lock_id: str
    holder: str
    items: frozenset
    status: LockStatus
    acquired_tick: int
    acquired_order: int
    span_id: Optional[str] = None
    released_tick: Optional[int] = None
    released_order: Optional[int] = None

    def overlaps(self, items) -> bool:
        return not self.items.isdisjoint(items)


@dataclasses.dataclass(frozen=True)
class LockOp:
    """An operation recorded in a lock-chain block."""
    op: str  # "acquire" | "release" | "forfeit"
    lock_id: str
    client_id: str
    tick: int
    order: int

    def summary(self) -> dict:
        return dataclasses.asdict(self)


@dataclasses.dataclass
class Ledger:
    """Client, owner and miner funds plus escrow deposits and gas totals."""
    default_funds: int
    accounts: dict[str, int] = dataclasses.field(default_factory=dict)
    escrows: dict[str, tuple[str, int]] = dataclasses.field(default_factory=dict)
    gas_spent: dict[str, int] = dataclasses.field(default_factory=dict)
    gas_earned: dict[str, int] = dataclasses.field(default_factory=dict)

    def open(self, account: str, funds: Optional[int] = None) -> None:
        if account not in self.accounts:
            self.accounts[account] = self.default_funds if funds is None else funds

    def balance(self, account: str) -> int:
        self.open(account)
        return self.accounts[account]

    def credit(self, account: str, amount: int) -> None:
        self.open(account)
        self.accounts[account] += amount

    def debit(self, account: str, amount: int) -> None:
        self.open(account)
        self.accounts[account] -= amount

    def pay_gas(self, client: str, miner: str, amount: int) -> None:
        self.debit(client, amount)
        self.credit(miner, amount)
        self.gas_spent[client] = self.gas_spent.get(client, 0) + amount
        self.gas_earned[miner] = self.gas_earned.get(miner, 0) + amount

    def hold_escrow(self, key: str, depositor: str, amount: int) -> None:
        self.debit(depositor, amount)
        depositor_, held = self.escrows.get(key, (depositor, 0))
        self.escrows[key] = (depositor_, held + amount)

    def refund_escrow(self, key: str) -> int:
        depositor, amount = self.escrows.pop(key, ("", 0))
        if amount:
            self.credit(depositor, amount)
        return amount

    def forfeit_escrow(self, key: str, beneficiary: str) -> int:
        _, amount = self.escrows.pop(key, ("", 0))
        if amount:
            self.credit(beneficiary, amount)
        return amount


def state_snapshot(state: ObjectState) -> dict:
    return {
        "attrs": {name: encode_value(value) for name, value in state.attrs.items()},
        "balance": state.balance,
    }
