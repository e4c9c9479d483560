"""
Abstract syntax tree of the contract DSL.

Nodes are frozen dataclasses. Every node carries the source `Location` it
was parsed from; locations are excluded from equality so that two trees are
structurally equal when they differ only in layout (the pretty-printer
round-trip relies on this).
"""

import dataclasses
from typing import Iterator, Optional, Union

from .values import Value, encode_value


@dataclasses.dataclass(frozen=True)
class Location:
    """Source span of a node, 1-based lines and columns."""
    line: int
    column: int
    end_line: int
    end_column: int

    def __str__(self) -> str:
        return f"{self.line}:{self.column}"


GENERATED = Location(1, 1, 1, 1)


@dataclasses.dataclass(frozen=True)
class AstNode:
    """Base class for all tree nodes."""
    loc: Location = dataclasses.field(
        default=GENERATED, compare=False, repr=False, kw_only=True
    )


### Expressions

@dataclasses.dataclass(frozen=True)
class Expr(AstNode):
    """Base class for expressions."""


@dataclasses.dataclass(frozen=True)
class AttrRead(Expr):
    name: str


@dataclasses.dataclass(frozen=True)
class LocalRead(Expr):
    name: str


@dataclasses.dataclass(frozen=True)
class ImplicitRead(Expr):
    """`msg.sender`, `msg.value`, `msg.data`, `msg.data.<key>` or `block.number`."""
    source: str

    @property
    def data_key(self) -> Optional[str]:
        if self.source.startswith("msg.data."):
            return self.source[len("msg.data."):]
        return None


@dataclasses.dataclass(frozen=True)
class Literal(Expr):
    value: Value
    type_name: str


@dataclasses.dataclass(frozen=True)
class Binary(Expr):
    op: str
    left: Expr
    right: Expr


@dataclasses.dataclass(frozen=True)
class Unary(Expr):
    op: str
    operand: Expr


@dataclasses.dataclass(frozen=True)
class Hash(Expr):
    arg: Expr


@dataclasses.dataclass(frozen=True)
class BuiltinCall(Expr):
    name: str
    args: tuple[Expr, ...] = ()


BINARY_OPS = ("==", "!=", "<", ">", "+", "-", "*", "&&", "||")
UNARY_OPS = ("!",)


### Statements

@dataclasses.dataclass(frozen=True)
class Statement(AstNode):
    """Base class for statements."""


@dataclasses.dataclass(frozen=True)
class Assign(Statement):
    target: str
    value: Expr
    local: bool = False


@dataclasses.dataclass(frozen=True)
class Let(Statement):
    name: str
    value: Expr


@dataclasses.dataclass(frozen=True)
class Requires(Statement):
    condition: Expr


@dataclasses.dataclass(frozen=True)
class If(Statement):
    condition: Expr
    then: tuple[Statement, ...]
    orelse: Optional[tuple[Statement, ...]] = None


@dataclasses.dataclass(frozen=True)
class Transfer(Statement):
    recipient: Expr
    amount: Expr


@dataclasses.dataclass(frozen=True)
class ExternalQuery(Statement):
    service: str
    query: str


@dataclasses.dataclass(frozen=True)
class Return(Statement):
    pass


@dataclasses.dataclass(frozen=True)
class StartTx(Statement):
    pass


@dataclasses.dataclass(frozen=True)
class EndTx(Statement):
    pass


@dataclasses.dataclass(frozen=True)
class BuiltinStmt(Statement):
    call: BuiltinCall


StatementBlock = tuple[Statement, ...]


### Declarations

@dataclasses.dataclass(frozen=True)
class Param(AstNode):
    name: str
    type_name: str


@dataclasses.dataclass(frozen=True)
class AttributeDecl(AstNode):
    name: str
    type_name: str
    visibility: str = "public"


@dataclasses.dataclass(frozen=True)
class FunctionDecl(AstNode):
    name: str
    params: tuple[Param, ...]
    body: StatementBlock

    @property
    def transactional(self) -> bool:
        return any(isinstance(stmt, StartTx) for stmt in self.body)

    @property
    def logic(self) -> StatementBlock:
        """The body without the start/end transaction markers."""
        return tuple(s for s in self.body if not isinstance(s, (StartTx, EndTx)))


@dataclasses.dataclass(frozen=True)
class ContractAst(AstNode):
    name: str
    attributes: tuple[AttributeDecl, ...] = ()
    functions: tuple[FunctionDecl, ...] = ()

    @property
    def attribute_names(self) -> list[str]:
        return [attr.name for attr in self.attributes]

    def attribute(self, name: str) -> Optional[AttributeDecl]:
        for attr in self.attributes:
            if attr.name == name:
                return attr
        return None

    def function(self, name: str) -> Optional[FunctionDecl]:
        for fn in self.functions:
            if fn.name == name:
                return fn
        return None


Node = Union[Expr, Statement, Param, AttributeDecl, FunctionDecl, ContractAst]


def walk_expr(expr: Expr) -> Iterator[Expr]:
    """Yield an expression and all its sub-expressions, pre-order."""
    yield expr
    if isinstance(expr, Binary):
        yield from walk_expr(expr.left)
        yield from walk_expr(expr.right)
    elif isinstance(expr, Unary):
        yield from walk_expr(expr.operand)
    elif isinstance(expr, Hash):
        yield from walk_expr(expr.arg)
    elif isinstance(expr, BuiltinCall):
        for arg in expr.args:
            yield from walk_expr(arg)


def statement_exprs(stmt: Statement) -> tuple[Expr, ...]:
    """The expressions a statement evaluates itself (not those of nested blocks)."""
    if isinstance(stmt, (Assign, Let)):
        return (stmt.value,)
    if isinstance(stmt, (Requires, If)):
        return (stmt.condition,)
    if isinstance(stmt, Transfer):
        return (stmt.recipient, stmt.amount)
    if isinstance(stmt, BuiltinStmt):
        return (stmt.call,)
    return ()


def walk_statements(block: StatementBlock) -> Iterator[Statement]:
    """Yield every statement of a block, descending into if branches."""
    for stmt in block:
        yield stmt
        if isinstance(stmt, If):
            yield from walk_statements(stmt.then)
            if stmt.orelse is not None:
                yield from walk_statements(stmt.orelse)


def iter_nodes(ast: ContractAst) -> Iterator[AstNode]:
    """Yield every node of a contract (used for location checks)."""
    yield ast
    yield from ast.attributes
    for fn in ast.functions:
        yield fn
        yield from fn.params
        for stmt in walk_statements(fn.body):
            yield stmt
            for expr in statement_exprs(stmt):
                yield from walk_expr(expr)


def node_to_json(node) -> object:
    """
    JSON form of a tree for `txsc parse`.

    Nodes become objects tagged with their class name and location;
    literal values use their JSON encoding.
    """
    if isinstance(node, AstNode):
        data: dict = {"node": type(node).__name__}
        for field in dataclasses.fields(node):
            if field.name == "loc":
                continue
            value = getattr(node, field.name)
            if isinstance(node, Literal) and field.name == "value":
                data[field.name] = encode_value(value)
            else:
                data[field.name] = node_to_json(value)
        data["loc"] = [node.loc.line, node.loc.column, node.loc.end_line, node.loc.end_column]
        return data
    if isinstance(node, tuple):
        return [node_to_json(item) for item in node]
    return node
