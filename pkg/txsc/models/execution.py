"""
Runtime types of a single function call.

These are plain dataclasses rather than pydantic models: the interpreter
creates them on every call and the property tests run it many thousand
times. `txsc.models.history` converts them to schema models for export.
"""

import dataclasses
from enum import Enum
from typing import Any, Optional

from .ast import ContractAst
from .values import Value, default_value


@dataclasses.dataclass
class ObjectState:
    """Attributes and balance of one deployed contract object."""
    contract: str
    attrs: dict[str, Value]
    balance: int = 0

    @classmethod
    def initial(cls, ast: ContractAst, address: Optional[str] = None) -> "ObjectState":
        return cls(
            contract=address or ast.name,
            attrs={a.name: default_value(a.type_name) for a in ast.attributes},
        )

    def copy(self) -> "ObjectState":
        return ObjectState(self.contract, dict(self.attrs), self.balance)


@dataclasses.dataclass(frozen=True)
class CallContext:
    """Implicit parameters of a call plus its gas budget and positional arguments."""
    sender: str
    value: int = 0
    data: dict[str, Value] = dataclasses.field(default_factory=dict)
    block_number: int = 0
    gas_budget: int = 100
    args: tuple[Value, ...] = ()

    def __post_init__(self):
        if self.gas_budget < 0:
            raise ValueError("gas budget must not be negative")
        if self.value < 0:
            raise ValueError("call value must not be negative")


class Outcome(str, Enum):
    COMMITTED = "Committed"
    ABORTED_REQUIRES = "AbortedRequires"
    ABORTED_OUT_OF_GAS = "AbortedOutOfGas"
    ABORTED_ERROR = "AbortedError"


@dataclasses.dataclass(frozen=True)
class TraceOp:
    kind: str  # "read" | "write"
    attribute: str
    value: Value


@dataclasses.dataclass(frozen=True)
class TransferRecord:
    recipient: str
    amount: int


@dataclasses.dataclass(frozen=True)
class ExternalRequest:
    service: str
    query: str
    callback_id: bytes


@dataclasses.dataclass(frozen=True)
class HostEffect:
    """A builtin side effect applied by the host only if the call commits."""
    name: str
    args: tuple[Any, ...] = ()


@dataclasses.dataclass
class ExecResult:
    outcome: Outcome
    new_state: ObjectState
    gas_used: int
    transfers: list[TransferRecord] = dataclasses.field(default_factory=list)
    external_requests: list[ExternalRequest] = dataclasses.field(default_factory=list)
    trace: list[TraceOp] = dataclasses.field(default_factory=list)
    effects: list[HostEffect] = dataclasses.field(default_factory=list)
    failed_check: Optional[str] = None
    reason: Optional[str] = None

    @property
    def committed(self) -> bool:
        return self.outcome == Outcome.COMMITTED

    @property
    def detail(self) -> Optional[str]:
        return self.failed_check or self.reason


def pre_write_reads(trace: list[TraceOp]) -> set[str]:
    """Attributes the trace reads before writing them."""
    written: set[str] = set()
    reads: set[str] = set()
    for op in trace:
        if op.kind == "write":
            written.add(op.attribute)
        elif op.attribute not in written:
            reads.add(op.attribute)
    return reads


def written_attributes(trace: list[TraceOp]) -> set[str]:
    return {op.attribute for op in trace if op.kind == "write"}
