"""Contract DSL parser.

The grammar lives in `contract.lark` next to this module. Lark produces its
own parse tree; `_AstBuilder` turns it into the dataclasses of
`txsc.models.ast`, and a resolution pass then splits bare names into
attribute and local reads.
"""

import dataclasses
import functools
import json
from typing import Optional

import lark
from lark import v_args
from lark.exceptions import UnexpectedEOF, UnexpectedInput, VisitError

from ..core.exceptions import DSLSyntaxError, DuplicateName, TXSCException
from ..core.logging import get_logger
from ..models.ast import (
    Assign,
    AttrRead,
    AttributeDecl,
    Binary,
    BuiltinCall,
    BuiltinStmt,
    ContractAst,
    EndTx,
    Expr,
    ExternalQuery,
    FunctionDecl,
    Hash,
    If,
    ImplicitRead,
    Let,
    Literal,
    LocalRead,
    Location,
    Param,
    Requires,
    Return,
    StartTx,
    Statement,
    StatementBlock,
    Transfer,
    Unary,
    walk_statements,
)
from ..models.values import UINT_MAX, bytes32_from_hex

logger = get_logger(__name__)

_MSG_FIELDS = ("sender", "value", "data")


def parse_contract(source: str) -> ContractAst:
    """Parse contract source text.

    Args:
        source: UTF-8 contract text.

    Returns:
        The contract AST with a location attached to every node.

    Raises:
        DSLSyntaxError: The text does not match the grammar.
        DuplicateName: An attribute, function, parameter or local is declared twice.
    """
    try:
        tree = _parser().parse(source)
    except UnexpectedInput as exc:
        raise _syntax_error(exc, source) from None

    try:
        contract = _AstBuilder().transform(tree)
    except VisitError as exc:
        if isinstance(exc.orig_exc, TXSCException):
            raise exc.orig_exc from None
        raise

    resolved = _resolve_names(contract)
    logger.debug(
        f"Parsed contract {resolved.name}: {len(resolved.attributes)} attributes, "
        f"{len(resolved.functions)} functions"
    )
    return resolved


@functools.cache
def _parser() -> lark.Lark:
    """Create/retrieve a singleton Lark parser from the language grammar."""
    return lark.Lark.open(
        "contract.lark",
        rel_to=__file__,
        parser="lalr",
        propagate_positions=True,
    )


def _syntax_error(exc: UnexpectedInput, source: str) -> DSLSyntaxError:
    token = getattr(exc, "token", None)
    at_end = token is not None and token.type == "$END"
    if isinstance(exc, UnexpectedEOF) or at_end or getattr(exc, "line", -1) < 1:
        lines = source.splitlines() or [""]
        line, column = len(lines), len(lines[-1]) + 1
        message = "unexpected end of input"
    else:
        line, column = exc.line, exc.column
        if token is not None:
            message = f"unexpected token {str(token)!r}"
        else:
            message = f"unexpected character {source[exc.pos_in_stream]!r}"
    expected = getattr(exc, "expected", None) or getattr(exc, "allowed", None) or ()
    return DSLSyntaxError(
        message,
        Location(line, column, line, column),
        [_describe_terminal(name) for name in expected],
    )


def _describe_terminal(name: str) -> str:
    try:
        terminal = _parser().get_terminal(name)
    except KeyError:
        return name
    if terminal.pattern.type == "str":
        return repr(terminal.pattern.value)
    return name


def _loc(meta) -> Location:
    return Location(meta.line, meta.column, meta.end_line, meta.end_column)


def _tok_loc(token: lark.Token) -> Location:
    return Location(token.line, token.column, token.end_line, token.end_column)


@dataclasses.dataclass(frozen=True)
class _Name(Expr):
    """A bare name, before it is resolved to an attribute or a local."""
    name: str


@v_args(meta=True)
class _AstBuilder(lark.Transformer):
    """Transforms Lark's parse tree into `txsc.models.ast` nodes."""

    def start(self, meta, children):
        name, *members = children
        attributes = tuple(m for m in members if isinstance(m, AttributeDecl))
        functions = tuple(m for m in members if isinstance(m, FunctionDecl))
        seen: set[str] = set()
        for attr in attributes:
            if attr.name in seen:
                raise DuplicateName(attr.name, "attribute", attr.loc)
            seen.add(attr.name)
        seen = set()
        for fn in functions:
            if fn.name in seen:
                raise DuplicateName(fn.name, "function", fn.loc)
            seen.add(fn.name)
        return ContractAst(str(name), attributes, functions, loc=_loc(meta))

    def attribute(self, meta, children):
        type_name, name = children
        return AttributeDecl(str(name), type_name, loc=_loc(meta))

    def type(self, meta, children):
        return str(children[0])

    def function(self, meta, children):
        name, params, body = children
        _check_markers(body)
        return FunctionDecl(str(name), params, body, loc=_loc(meta))

    def params(self, meta, children):
        return tuple(children)

    def param(self, meta, children):
        name, type_name = children
        return Param(str(name), type_name, loc=_loc(meta))

    def block(self, meta, children):
        return tuple(children)

    ### Statements

    def assign(self, meta, children):
        target, value = children
        return Assign(str(target), value, loc=_loc(meta))

    def let(self, meta, children):
        name, value = children
        return Let(str(name), value, loc=_loc(meta))

    def requires(self, meta, children):
        return Requires(children[0], loc=_loc(meta))

    def if_stmt(self, meta, children):
        condition, then, *rest = children
        orelse = rest[0] if rest else None
        return If(condition, then, orelse, loc=_loc(meta))

    def transfer(self, meta, children):
        recipient, amount = children
        return Transfer(recipient, amount, loc=_loc(meta))

    def external_query(self, meta, children):
        service, query = children
        return ExternalQuery(_string(service), _string(query), loc=_loc(meta))

    def call_stmt(self, meta, children):
        name, args = children
        call = BuiltinCall(str(name), args, loc=_loc(meta))
        return BuiltinStmt(call, loc=_loc(meta))

    def return_stmt(self, meta, children):
        return Return(loc=_tok_loc(children[0]))

    def start_tx(self, meta, children):
        return StartTx(loc=_tok_loc(children[0]))

    def end_tx(self, meta, children):
        return EndTx(loc=_tok_loc(children[0]))

    ### Expressions

    def _binary(op):
        def build(self, meta, children):
            left, right = children
            return Binary(op, left, right, loc=_loc(meta))
        return build

    or_ = _binary("||")
    and_ = _binary("&&")
    eq = _binary("==")
    ne = _binary("!=")
    lt = _binary("<")
    gt = _binary(">")
    add = _binary("+")
    sub = _binary("-")
    mul = _binary("*")

    def not_(self, meta, children):
        return Unary("!", children[0], loc=_loc(meta))

    def int_lit(self, meta, children):
        token = children[0]
        value = int(token)
        if value > UINT_MAX:
            raise DSLSyntaxError("integer literal exceeds uint range", _tok_loc(token))
        return Literal(value, "uint", loc=_tok_loc(token))

    def hex_lit(self, meta, children):
        token = children[0]
        try:
            value = bytes32_from_hex(str(token))
        except ValueError as exc:
            raise DSLSyntaxError(str(exc), _tok_loc(token)) from None
        return Literal(value, "bytes32", loc=_tok_loc(token))

    def str_lit(self, meta, children):
        token = children[0]
        return Literal(_string(token), "string", loc=_tok_loc(token))

    def bool_lit(self, meta, children):
        token = children[0]
        return Literal(str(token) == "true", "bool", loc=_tok_loc(token))

    def msg_field(self, meta, children):
        field, *rest = (str(c) for c in children)
        if field not in _MSG_FIELDS:
            raise DSLSyntaxError(f"unknown implicit parameter msg.{field}", _loc(meta))
        if rest and field != "data":
            raise DSLSyntaxError(f"msg.{field} has no fields", _loc(meta))
        source = f"msg.{field}" + (f".{rest[0]}" if rest else "")
        return ImplicitRead(source, loc=_loc(meta))

    def block_field(self, meta, children):
        field = str(children[0])
        if field != "number":
            raise DSLSyntaxError(f"unknown implicit parameter block.{field}", _loc(meta))
        return ImplicitRead("block.number", loc=_loc(meta))

    def this_attr(self, meta, children):
        return AttrRead(str(children[0]), loc=_loc(meta))

    def hash(self, meta, children):
        return Hash(children[0], loc=_loc(meta))

    def call(self, meta, children):
        name, args = children
        return BuiltinCall(str(name), args, loc=_loc(meta))

    def args(self, meta, children):
        return tuple(children)

    def name(self, meta, children):
        return _Name(str(children[0]), loc=_loc(meta))


def _string(token: lark.Token) -> str:
    try:
        return json.loads(str(token))
    except json.JSONDecodeError:
        raise DSLSyntaxError("invalid escape in string literal", _tok_loc(token)) from None


def _check_markers(body: StatementBlock) -> None:
    """Markers must enclose the whole body: start first, end last, once each."""
    starts = [s for s in walk_statements(body) if isinstance(s, StartTx)]
    ends = [s for s in walk_statements(body) if isinstance(s, EndTx)]
    queries = [s for s in walk_statements(body) if isinstance(s, ExternalQuery)]
    if len(queries) > 1:
        raise DSLSyntaxError("at most one external_query per function", queries[1].loc)
    if not starts and not ends:
        return
    marker = (starts or ends)[0]
    if (
        len(starts) != 1
        or len(ends) != 1
        or body[0] is not starts[0]
        or body[-1] is not ends[0]
    ):
        raise DSLSyntaxError(
            "start_tx/end_tx must appear once each and enclose the whole function body",
            marker.loc,
        )


### Name resolution

def _resolve_names(contract: ContractAst) -> ContractAst:
    attributes = set(contract.attribute_names)
    functions = tuple(_resolve_function(fn, attributes) for fn in contract.functions)
    return dataclasses.replace(contract, functions=functions)


def _resolve_function(fn: FunctionDecl, attributes: set[str]) -> FunctionDecl:
    scope: set[str] = set()
    for param in fn.params:
        if param.name in scope:
            raise DuplicateName(param.name, "parameter", param.loc)
        if param.name in attributes:
            raise DuplicateName(param.name, "parameter shadowing attribute", param.loc)
        scope.add(param.name)
    body = _resolve_block(fn.body, scope, attributes)
    return dataclasses.replace(fn, body=body)


def _resolve_block(block: StatementBlock, scope: set[str], attributes: set[str]) -> StatementBlock:
    return tuple(_resolve_statement(stmt, scope, attributes) for stmt in block)


def _resolve_statement(stmt: Statement, scope: set[str], attributes: set[str]) -> Statement:
    if isinstance(stmt, Let):
        value = _resolve_expr(stmt.value, scope)
        if stmt.name in scope:
            raise DuplicateName(stmt.name, "local", stmt.loc)
        if stmt.name in attributes:
            raise DuplicateName(stmt.name, "local shadowing attribute", stmt.loc)
        scope.add(stmt.name)
        return dataclasses.replace(stmt, value=value)
    if isinstance(stmt, Assign):
        return dataclasses.replace(
            stmt, value=_resolve_expr(stmt.value, scope), local=stmt.target in scope
        )
    if isinstance(stmt, Requires):
        return dataclasses.replace(stmt, condition=_resolve_expr(stmt.condition, scope))
    if isinstance(stmt, If):
        orelse: Optional[StatementBlock] = None
        if stmt.orelse is not None:
            orelse = _resolve_block(stmt.orelse, set(scope), attributes)
        return dataclasses.replace(
            stmt,
            condition=_resolve_expr(stmt.condition, scope),
            then=_resolve_block(stmt.then, set(scope), attributes),
            orelse=orelse,
        )
    if isinstance(stmt, Transfer):
        return dataclasses.replace(
            stmt,
            recipient=_resolve_expr(stmt.recipient, scope),
            amount=_resolve_expr(stmt.amount, scope),
        )
    if isinstance(stmt, BuiltinStmt):
        return dataclasses.replace(stmt, call=_resolve_expr(stmt.call, scope))
    return stmt


def _resolve_expr(expr: Expr, scope: set[str]) -> Expr:
    if isinstance(expr, _Name):
        if expr.name in scope:
            return LocalRead(expr.name, loc=expr.loc)
        return AttrRead(expr.name, loc=expr.loc)
    if isinstance(expr, Binary):
        return dataclasses.replace(
            expr, left=_resolve_expr(expr.left, scope), right=_resolve_expr(expr.right, scope)
        )
    if isinstance(expr, Unary):
        return dataclasses.replace(expr, operand=_resolve_expr(expr.operand, scope))
    if isinstance(expr, Hash):
        return dataclasses.replace(expr, arg=_resolve_expr(expr.arg, scope))
    if isinstance(expr, BuiltinCall):
        return dataclasses.replace(
            expr, args=tuple(_resolve_expr(arg, scope) for arg in expr.args)
        )
    return expr
