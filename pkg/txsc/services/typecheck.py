"""Static type checking of contract ASTs."""

from typing import Optional

from ..core.logging import get_logger
from ..models.ast import (
    Assign,
    AstNode,
    AttrRead,
    Binary,
    BuiltinCall,
    BuiltinStmt,
    ContractAst,
    Expr,
    FunctionDecl,
    Hash,
    If,
    ImplicitRead,
    Let,
    Literal,
    LocalRead,
    Requires,
    StatementBlock,
    Transfer,
    Unary,
)
from ..models.builtins import BUILTINS
from ..models.schemas import Diagnostic
from ..models.values import DYNAMIC

logger = get_logger(__name__)

SHADOW_PREFIX = "__after_"

_IMPLICIT_TYPES = {
    "msg.sender": "address",
    "msg.value": "uint",
    "msg.data": DYNAMIC,
    "block.number": "uint",
}


def typecheck(ast: ContractAst) -> list[Diagnostic]:
    """
    Type-check a parsed contract.

    Args:
        ast: Parsed contract

    Returns:
        list[Diagnostic]: Empty when every expression types under the
        primitive type set and every name resolves
    """
    checker = _Checker(ast)
    checker.check()
    if checker.diagnostics:
        logger.debug(f"Contract {ast.name}: {len(checker.diagnostics)} diagnostics")
    return checker.diagnostics


def is_reserved(name: str) -> bool:
    return name.startswith("__")


def shadow_name(attribute: str) -> str:
    return SHADOW_PREFIX + attribute


def shadowed_attribute(name: str) -> Optional[str]:
    """Return `x` for `__after_x`, None for any other name."""
    if name.startswith(SHADOW_PREFIX):
        return name[len(SHADOW_PREFIX):]
    return None


def _compatible(expected: Optional[str], actual: Optional[str]) -> bool:
    if expected is None or actual is None:
        return True
    return expected == actual or DYNAMIC in (expected, actual)


class _Checker:
    def __init__(self, ast: ContractAst):
        self.ast = ast
        self.attributes = {a.name: a.type_name for a in ast.attributes}
        self.diagnostics: list[Diagnostic] = []

    def report(self, kind: str, message: str, node: AstNode) -> None:
        self.diagnostics.append(
            Diagnostic(kind=kind, message=message, line=node.loc.line, column=node.loc.column)
        )

    def check(self) -> None:
        for attr in self.ast.attributes:
            if not is_reserved(attr.name):
                continue
            base = shadowed_attribute(attr.name)
            if base is None or is_reserved(base) or base not in self.attributes:
                self.report("ReservedName", f"name '{attr.name}' is reserved", attr)
            elif self.attributes[base] != attr.type_name:
                self.report(
                    "TypeMismatch",
                    f"shadow '{attr.name}' must have type {self.attributes[base]}",
                    attr,
                )
        for fn in self.ast.functions:
            self.check_function(fn)

    def check_function(self, fn: FunctionDecl) -> None:
        if is_reserved(fn.name):
            self.report("ReservedName", f"name '{fn.name}' is reserved", fn)
        env: dict[str, str] = {}
        for param in fn.params:
            if is_reserved(param.name):
                self.report("ReservedName", f"name '{param.name}' is reserved", param)
            env[param.name] = param.type_name
        self.check_block(fn.body, env)

    def check_block(self, block: StatementBlock, env: dict[str, str]) -> None:
        for stmt in block:
            if isinstance(stmt, Assign):
                if stmt.local:
                    expected = env.get(stmt.target)
                else:
                    expected = self.attributes.get(stmt.target)
                    if expected is None:
                        self.report(
                            "UnresolvedName", f"undeclared attribute '{stmt.target}'", stmt
                        )
                actual = self.type_of(stmt.value, env)
                if not _compatible(expected, actual):
                    self.report(
                        "TypeMismatch",
                        f"cannot assign {actual} to '{stmt.target}' of type {expected}",
                        stmt,
                    )
            elif isinstance(stmt, Let):
                if is_reserved(stmt.name):
                    self.report("ReservedName", f"name '{stmt.name}' is reserved", stmt)
                actual = self.type_of(stmt.value, env)
                env[stmt.name] = actual or DYNAMIC
            elif isinstance(stmt, Requires):
                self.expect(stmt.condition, "bool", env)
            elif isinstance(stmt, If):
                self.expect(stmt.condition, "bool", env)
                self.check_block(stmt.then, dict(env))
                if stmt.orelse is not None:
                    self.check_block(stmt.orelse, dict(env))
            elif isinstance(stmt, Transfer):
                self.expect(stmt.recipient, "address", env)
                self.expect(stmt.amount, "uint", env)
            elif isinstance(stmt, BuiltinStmt):
                spec = BUILTINS.get(stmt.call.name)
                if spec is not None and spec.returns is not None:
                    self.report(
                        "TypeMismatch", f"'{spec.name}' returns a value and is not a statement", stmt
                    )
                self.type_of(stmt.call, env, statement=True)

    def expect(self, expr: Expr, expected: str, env: dict[str, str]) -> None:
        actual = self.type_of(expr, env)
        if not _compatible(expected, actual):
            self.report("TypeMismatch", f"expected {expected}, found {actual}", expr)

    def type_of(self, expr: Expr, env: dict[str, str], statement: bool = False) -> Optional[str]:
        """Infer an expression's type; None once an error has been reported."""
        if isinstance(expr, AttrRead):
            if expr.name not in self.attributes:
                self.report("UnresolvedName", f"undeclared attribute '{expr.name}'", expr)
                return None
            return self.attributes[expr.name]
        if isinstance(expr, LocalRead):
            return env.get(expr.name, DYNAMIC)
        if isinstance(expr, ImplicitRead):
            if expr.data_key is not None:
                return DYNAMIC
            return _IMPLICIT_TYPES[expr.source]
        if isinstance(expr, Literal):
            return expr.type_name
        if isinstance(expr, Hash):
            self.type_of(expr.arg, env)
            return "bytes32"
        if isinstance(expr, Unary):
            self.expect(expr.operand, "bool", env)
            return "bool"
        if isinstance(expr, Binary):
            return self.type_of_binary(expr, env)
        if isinstance(expr, BuiltinCall):
            return self.type_of_call(expr, env, statement)
        raise TypeError(f"unknown expression {expr!r}")

    def type_of_binary(self, expr: Binary, env: dict[str, str]) -> Optional[str]:
        left = self.type_of(expr.left, env)
        right = self.type_of(expr.right, env)
        if expr.op in ("&&", "||"):
            for side, actual in ((expr.left, left), (expr.right, right)):
                if not _compatible("bool", actual):
                    self.report("TypeMismatch", f"'{expr.op}' needs bool, found {actual}", side)
            return "bool"
        if expr.op in ("+", "-", "*"):
            for side, actual in ((expr.left, left), (expr.right, right)):
                if not _compatible("uint", actual):
                    self.report("TypeMismatch", f"'{expr.op}' needs uint, found {actual}", side)
            return "uint"
        if not _compatible(left, right):
            self.report(
                "TypeMismatch", f"cannot compare {left} with {right} using '{expr.op}'", expr
            )
        elif expr.op in ("<", ">"):
            operand = left if left != DYNAMIC else right
            if operand not in (None, DYNAMIC, "uint", "bytes32"):
                self.report("TypeMismatch", f"'{expr.op}' is not defined on {operand}", expr)
        return "bool"

    def type_of_call(self, expr: BuiltinCall, env: dict[str, str], statement: bool) -> Optional[str]:
        spec = BUILTINS.get(expr.name)
        arg_types = [self.type_of(arg, env) for arg in expr.args]
        if spec is None:
            self.report("UnresolvedName", f"unknown builtin '{expr.name}'", expr)
            return None
        if len(arg_types) != len(spec.params):
            self.report(
                "TypeMismatch",
                f"'{spec.name}' takes {len(spec.params)} arguments, got {len(arg_types)}",
                expr,
            )
        else:
            for arg, expected, actual in zip(expr.args, spec.params, arg_types):
                if not _compatible(expected, actual):
                    self.report(
                        "TypeMismatch",
                        f"argument of '{spec.name}' must be {expected}, found {actual}",
                        arg,
                    )
        if spec.returns is None:
            if not statement:
                self.report("TypeMismatch", f"'{spec.name}' has no value", expr)
                return None
            return "void"
        return spec.returns
