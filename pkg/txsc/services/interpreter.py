"""
Gas-metered tree-walking interpreter.

`execute` runs one function call on a working copy of an object state.
Every executed statement except the transaction markers costs one unit of
gas, charged before the statement runs. Any abort discards the working
copy: the caller gets the pre-state back with no transfers, external
requests or host effects, but still pays the gas used so far.

Builtins that depend on the world outside the contract (locks, the oracle
identity, escrow funds, callback ids) are answered by a `HostEnvironment`.
The simulator supplies one backed by its chains; `StubHost` serves
standalone use and tests.
"""

import dataclasses
import hashlib
from typing import Optional, Protocol, runtime_checkable

from ..core.exceptions import UnknownFunction
from ..core.logging import get_logger
from ..models.ast import (
    Assign,
    AttrRead,
    Binary,
    BuiltinCall,
    BuiltinStmt,
    ContractAst,
    EndTx,
    Expr,
    ExternalQuery,
    Hash,
    If,
    ImplicitRead,
    Let,
    Literal,
    LocalRead,
    Requires,
    Return,
    StartTx,
    StatementBlock,
    Transfer,
    Unary,
)
from ..models.builtins import BUILTINS
from ..models.execution import (
    CallContext,
    ExecResult,
    ExternalRequest,
    HostEffect,
    ObjectState,
    Outcome,
    TraceOp,
    TransferRecord,
)
from ..models.values import UINT_MAX, Value, sha256_value, value_matches
from .printer import print_expr

logger = get_logger(__name__)


@runtime_checkable
class HostEnvironment(Protocol):
    """World state visible to a running call."""

    def lock_held(self, lock_id: Value) -> bool: ...

    def lock_active(self, lock_id: Value) -> bool: ...

    def oracle_address(self) -> str: ...

    def contract_owner(self) -> str: ...

    def can_escrow(self, amount: int) -> bool: ...

    def callback_id(self) -> bytes: ...


@dataclasses.dataclass
class StubHost:
    """
    Configurable host for running calls outside the simulator.

    Locks listed in `held_locks` answer true to both `lock_held` and
    `lock_active`; `funds=None` means escrow is never refused.
    """
    held_locks: set = dataclasses.field(default_factory=set)
    oracle: str = "oracle"
    owner: str = "owner"
    funds: Optional[int] = None
    chain_id: str = "stub"
    block_number: int = 0
    _sequence: int = 0

    def lock_held(self, lock_id: Value) -> bool:
        return lock_id in self.held_locks

    def lock_active(self, lock_id: Value) -> bool:
        return lock_id in self.held_locks

    def oracle_address(self) -> str:
        return self.oracle

    def contract_owner(self) -> str:
        return self.owner

    def can_escrow(self, amount: int) -> bool:
        return self.funds is None or amount <= self.funds

    def callback_id(self) -> bytes:
        self._sequence += 1
        return make_callback_id(self.chain_id, self.block_number, self._sequence)


def make_callback_id(chain_id: str, block_number: int, sequence: int) -> bytes:
    """Callback identity: hash of chain, block number and per-block request sequence."""
    return hashlib.sha256(f"{chain_id}/{block_number}/{sequence}".encode()).digest()


class _Abort(Exception):
    def __init__(self, outcome: Outcome, detail: str):
        self.outcome = outcome
        self.detail = detail


class _Returned(Exception):
    pass


def execute(
    ast: ContractAst,
    fn: str,
    state: ObjectState,
    ctx: CallContext,
    host: Optional[HostEnvironment] = None,
) -> ExecResult:
    """
    Execute one call atomically.

    Args:
        ast: Contract the state belongs to
        fn: Function name
        state: Pre-state; never mutated
        ctx: Implicit parameters, gas budget and arguments
        host: Builtin resolver; a default `StubHost` when omitted

    Returns:
        ExecResult: Outcome, post-state, gas used and recorded side effects

    Raises:
        UnknownFunction: `fn` is not declared by the contract
    """
    decl = ast.function(fn)
    if decl is None:
        raise UnknownFunction(ast.name, fn)
    run = _Run(ast, state, ctx, host if host is not None else StubHost())
    try:
        run.bind(decl.params)
        run.block(decl.body)
    except _Returned:
        pass
    except _Abort as abort:
        logger.debug(f"{ast.name}.{fn} aborted: {abort.outcome.value} {abort.detail}")
        detail = {"failed_check": abort.detail} if abort.outcome == Outcome.ABORTED_REQUIRES else {
            "reason": abort.detail
        }
        return ExecResult(
            outcome=abort.outcome,
            new_state=state.copy(),
            gas_used=run.gas_used,
            trace=run.trace,
            **detail,
        )
    return ExecResult(
        outcome=Outcome.COMMITTED,
        new_state=ObjectState(state.contract, run.attrs, run.balance),
        gas_used=run.gas_used,
        transfers=run.transfers,
        external_requests=run.requests,
        trace=run.trace,
        effects=run.effects,
    )


class _Run:
    """Mutable working copy of one call."""

    def __init__(self, ast: ContractAst, state: ObjectState, ctx: CallContext, host: HostEnvironment):
        self.types = {a.name: a.type_name for a in ast.attributes}
        self.ctx = ctx
        self.host = host
        self.attrs = dict(state.attrs)
        self.balance = state.balance + ctx.value
        self.locals: dict[str, Value] = {}
        self.gas_used = 0
        self.trace: list[TraceOp] = []
        self.transfers: list[TransferRecord] = []
        self.requests: list[ExternalRequest] = []
        self.effects: list[HostEffect] = []

    def fail(self, reason: str):
        raise _Abort(Outcome.ABORTED_ERROR, reason)

    def bind(self, params) -> None:
        if len(params) != len(self.ctx.args):
            self.fail(f"expected {len(params)} arguments, got {len(self.ctx.args)}")
        for param, value in zip(params, self.ctx.args):
            if not value_matches(param.type_name, value):
                self.fail(f"argument '{param.name}' is not a {param.type_name}")
            self.locals[param.name] = value

    def charge(self) -> None:
        if self.gas_used >= self.ctx.gas_budget:
            raise _Abort(Outcome.ABORTED_OUT_OF_GAS, f"gas budget {self.ctx.gas_budget} exhausted")
        self.gas_used += 1

    def block(self, block: StatementBlock) -> None:
        for stmt in block:
            if isinstance(stmt, (StartTx, EndTx)):
                continue
            self.charge()
            if isinstance(stmt, Assign):
                value = self.eval(stmt.value)
                if stmt.local:
                    self.locals[stmt.target] = value
                else:
                    self.write(stmt.target, value)
            elif isinstance(stmt, Let):
                self.locals[stmt.name] = self.eval(stmt.value)
            elif isinstance(stmt, Requires):
                if not self.eval_bool(stmt.condition):
                    raise _Abort(
                        Outcome.ABORTED_REQUIRES,
                        f"{stmt.loc} requires({print_expr(stmt.condition)})",
                    )
            elif isinstance(stmt, If):
                if self.eval_bool(stmt.condition):
                    self.block(stmt.then)
                elif stmt.orelse is not None:
                    self.block(stmt.orelse)
            elif isinstance(stmt, Transfer):
                self.transfer(stmt)
            elif isinstance(stmt, ExternalQuery):
                self.requests.append(
                    ExternalRequest(stmt.service, stmt.query, self.host.callback_id())
                )
            elif isinstance(stmt, BuiltinStmt):
                self.effect(stmt.call)
            elif isinstance(stmt, Return):
                raise _Returned()
            else:
                self.fail(f"unsupported statement {type(stmt).__name__}")

    def write(self, name: str, value: Value) -> None:
        type_name = self.types.get(name)
        if type_name is None:
            self.fail(f"unknown attribute '{name}'")
        if not value_matches(type_name, value):
            self.fail(f"type mismatch: '{name}' is {type_name}")
        self.attrs[name] = value
        self.trace.append(TraceOp("write", name, value))

    def transfer(self, stmt: Transfer) -> None:
        recipient = self.eval(stmt.recipient)
        amount = self.eval_uint(stmt.amount)
        if not value_matches("address", recipient):
            self.fail("transfer recipient is not an address")
        if amount > self.balance:
            self.fail("insufficient balance")
        self.balance -= amount
        self.transfers.append(TransferRecord(recipient, amount))

    def effect(self, call: BuiltinCall) -> None:
        spec = BUILTINS.get(call.name)
        if spec is None or spec.kind != "effect":
            # query and pure builtins used as statements are evaluated and discarded
            self.eval(call)
            return
        args = tuple(self.eval(arg) for arg in call.args)
        self.check_arity(call.name, args)
        if call.name == "escrow":
            amount = args[0]
            if not value_matches("uint", amount):
                self.fail("escrow amount is not a uint")
            if not self.host.can_escrow(amount):
                self.fail("insufficient funds for escrow")
        self.effects.append(HostEffect(call.name, args))

    def check_arity(self, name: str, args) -> None:
        spec = BUILTINS.get(name)
        if spec is not None and len(args) != len(spec.params):
            self.fail(f"'{name}' takes {len(spec.params)} arguments")

    ### Expressions

    def eval_bool(self, expr: Expr) -> bool:
        value = self.eval(expr)
        if not isinstance(value, bool):
            self.fail(f"expected bool, found {value!r}")
        return value

    def eval_uint(self, expr: Expr) -> int:
        value = self.eval(expr)
        if not value_matches("uint", value):
            self.fail(f"expected uint, found {value!r}")
        return value

    def eval(self, expr: Expr) -> Value:
        if isinstance(expr, AttrRead):
            if expr.name not in self.attrs:
                self.fail(f"unknown attribute '{expr.name}'")
            value = self.attrs[expr.name]
            self.trace.append(TraceOp("read", expr.name, value))
            return value
        if isinstance(expr, LocalRead):
            if expr.name not in self.locals:
                self.fail(f"unbound local '{expr.name}'")
            return self.locals[expr.name]
        if isinstance(expr, ImplicitRead):
            return self.implicit(expr)
        if isinstance(expr, Literal):
            return expr.value
        if isinstance(expr, Unary):
            return not self.eval_bool(expr.operand)
        if isinstance(expr, Binary):
            return self.binary(expr)
        if isinstance(expr, Hash):
            return sha256_value(self.eval(expr.arg))
        if isinstance(expr, BuiltinCall):
            return self.call(expr)
        self.fail(f"unsupported expression {type(expr).__name__}")

    def implicit(self, expr: ImplicitRead) -> Value:
        source = expr.source
        if source == "msg.sender":
            return self.ctx.sender
        if source == "msg.value":
            return self.ctx.value
        if source == "block.number":
            return self.ctx.block_number
        key = expr.data_key or "payload"
        if key not in self.ctx.data:
            self.fail(f"msg.data has no entry '{key}'")
        return self.ctx.data[key]

    def binary(self, expr: Binary) -> Value:
        op = expr.op
        if op == "&&":
            return self.eval_bool(expr.left) and self.eval_bool(expr.right)
        if op == "||":
            return self.eval_bool(expr.left) or self.eval_bool(expr.right)
        left = self.eval(expr.left)
        right = self.eval(expr.right)
        if op in ("==", "!="):
            same = type(left) is type(right) and left == right
            return same if op == "==" else not same
        if op in ("<", ">"):
            comparable = (
                value_matches("uint", left) and value_matches("uint", right)
            ) or (value_matches("bytes32", left) and value_matches("bytes32", right))
            if not comparable:
                self.fail(f"cannot order {left!r} and {right!r}")
            return left < right if op == "<" else left > right
        if not (value_matches("uint", left) and value_matches("uint", right)):
            self.fail(f"'{op}' needs uint operands")
        if op == "+":
            result = left + right
        elif op == "-":
            result = left - right
        else:
            result = left * right
        if result < 0:
            self.fail("uint underflow")
        if result > UINT_MAX:
            self.fail("uint overflow")
        return result

    def call(self, expr: BuiltinCall) -> Value:
        args = [self.eval(arg) for arg in expr.args]
        name = expr.name
        self.check_arity(name, args)
        if name == "lock_held":
            return bool(self.host.lock_held(args[0]))
        if name == "lock_active":
            return bool(self.host.lock_active(args[0]))
        if name == "oracle_address":
            return self.host.oracle_address()
        if name == "contract_owner":
            return self.host.contract_owner()
        if name == "single_digit":
            if not value_matches("uint", args[0]):
                self.fail("single_digit needs a uint")
            return args[0] % 10
        self.fail(f"builtin '{name}' has no value")
