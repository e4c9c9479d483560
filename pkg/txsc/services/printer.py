"""
Canonical pretty-printer for contract ASTs.

The output is the normal form used by `txsc fmt`, by the transformer's
golden files and by the round-trip property: parsing the printed text
yields a tree equal to the input.
"""

import json

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
    FunctionDecl,
    Hash,
    If,
    ImplicitRead,
    Let,
    Literal,
    LocalRead,
    Requires,
    Return,
    StartTx,
    Statement,
    StatementBlock,
    Transfer,
    Unary,
)

INDENT = "    "

_PRECEDENCE = {
    "||": 1,
    "&&": 2,
    "==": 3,
    "!=": 3,
    "<": 3,
    ">": 3,
    "+": 4,
    "-": 4,
    "*": 5,
}
_COMPARISONS = ("==", "!=", "<", ">")
_UNARY_PRECEDENCE = 6
_ATOM_PRECEDENCE = 7


def print_contract(ast: ContractAst) -> str:
    """
    Render a contract as canonical DSL source.

    Args:
        ast: A well-formed contract tree

    Returns:
        str: Source text ending with a newline
    """
    lines = [f"contract {ast.name} {{"]
    sections: list[list[str]] = []
    if ast.attributes:
        sections.append(
            [f"{INDENT}attr {a.type_name} {a.visibility} {a.name};" for a in ast.attributes]
        )
    for fn in ast.functions:
        sections.append(_function_lines(fn))
    for i, section in enumerate(sections):
        if i:
            lines.append("")
        lines.extend(section)
    lines.append("}")
    return "\n".join(lines) + "\n"


def print_function(fn: FunctionDecl) -> str:
    return "\n".join(_function_lines(fn)) + "\n"


def _function_lines(fn: FunctionDecl) -> list[str]:
    params = ", ".join(f"{p.name}: {p.type_name}" for p in fn.params)
    lines = [f"{INDENT}fn {fn.name}({params}) {{"]
    lines.extend(_block_lines(fn.body, 2))
    lines.append(f"{INDENT}}}")
    return lines


def _block_lines(block: StatementBlock, depth: int) -> list[str]:
    lines: list[str] = []
    for stmt in block:
        lines.extend(_statement_lines(stmt, depth))
    return lines


def _statement_lines(stmt: Statement, depth: int) -> list[str]:
    pad = INDENT * depth
    if isinstance(stmt, If):
        lines = [f"{pad}if ({print_expr(stmt.condition)}) {{"]
        lines.extend(_block_lines(stmt.then, depth + 1))
        if stmt.orelse is not None:
            lines.append(f"{pad}}} else {{")
            lines.extend(_block_lines(stmt.orelse, depth + 1))
        lines.append(f"{pad}}}")
        return lines
    return [pad + print_statement(stmt)]


def print_statement(stmt: Statement) -> str:
    """Render a single non-compound statement on one line."""
    if isinstance(stmt, Assign):
        return f"{stmt.target} = {print_expr(stmt.value)};"
    if isinstance(stmt, Let):
        return f"let {stmt.name} = {print_expr(stmt.value)};"
    if isinstance(stmt, Requires):
        return f"requires({print_expr(stmt.condition)});"
    if isinstance(stmt, Transfer):
        return f"transfer({print_expr(stmt.recipient)}, {print_expr(stmt.amount)});"
    if isinstance(stmt, ExternalQuery):
        return f"external_query({_quote(stmt.service)}, {_quote(stmt.query)});"
    if isinstance(stmt, BuiltinStmt):
        return f"{print_expr(stmt.call)};"
    if isinstance(stmt, Return):
        return "return;"
    if isinstance(stmt, StartTx):
        return "start_tx;"
    if isinstance(stmt, EndTx):
        return "end_tx;"
    if isinstance(stmt, If):
        return f"if ({print_expr(stmt.condition)}) {{ ... }}"
    raise TypeError(f"cannot print statement {stmt!r}")


def print_expr(expr: Expr) -> str:
    """Render an expression with the minimal parentheses needed to reparse it."""
    if isinstance(expr, (AttrRead, LocalRead)):
        return expr.name
    if isinstance(expr, ImplicitRead):
        return expr.source
    if isinstance(expr, Literal):
        return _literal(expr)
    if isinstance(expr, Hash):
        return f"sha256({print_expr(expr.arg)})"
    if isinstance(expr, BuiltinCall):
        return f"{expr.name}({', '.join(print_expr(a) for a in expr.args)})"
    if isinstance(expr, Unary):
        return expr.op + _wrap(expr.operand, _UNARY_PRECEDENCE)
    if isinstance(expr, Binary):
        prec = _PRECEDENCE[expr.op]
        if expr.op in _COMPARISONS:
            # non-associative: both operands must bind tighter
            left = _wrap(expr.left, prec + 1)
        else:
            left = _wrap(expr.left, prec)
        right = _wrap(expr.right, prec + 1)
        return f"{left} {expr.op} {right}"
    raise TypeError(f"cannot print expression {expr!r}")


def _precedence(expr: Expr) -> int:
    if isinstance(expr, Binary):
        return _PRECEDENCE[expr.op]
    if isinstance(expr, Unary):
        return _UNARY_PRECEDENCE
    return _ATOM_PRECEDENCE


def _wrap(expr: Expr, minimum: int) -> str:
    text = print_expr(expr)
    if _precedence(expr) < minimum:
        return f"({text})"
    return text


def _literal(expr: Literal) -> str:
    value = expr.value
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, bytes):
        return "0x" + value.hex()
    if isinstance(value, int):
        return str(value)
    return _quote(value)


def _quote(text: str) -> str:
    return json.dumps(text, ensure_ascii=False)
