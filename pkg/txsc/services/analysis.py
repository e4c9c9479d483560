"""
Static read/write-set analysis and SDTF/CDTF classification.

The read set of a function is the set of attributes read before any write
to them on at least one control-flow path. Paths are enumerated over `if`
branches and carry the set of attributes already written on that path;
`return` ends a path. Sets are reported in declaration order.
"""

from typing import Iterable, Optional

from ..core.exceptions import AnalysisError, NotSdtf
from ..core.logging import get_logger
from ..models.ast import (
    Assign,
    AttrRead,
    Binary,
    BuiltinCall,
    ContractAst,
    Expr,
    ExternalQuery,
    FunctionDecl,
    If,
    ImplicitRead,
    Requires,
    Return,
    StatementBlock,
    statement_exprs,
    walk_expr,
    walk_statements,
)
from ..models.schemas import Classification, FunctionProfile
from .typecheck import shadowed_attribute

logger = get_logger(__name__)

Paths = set[frozenset[str]]


def analyze(ast: ContractAst) -> dict[str, FunctionProfile]:
    """
    Profile every function of a contract.

    Args:
        ast: A contract that passes typecheck

    Returns:
        dict[str, FunctionProfile]: Profiles keyed by function name, in declaration order

    Raises:
        AnalysisError: A transactional function assigns no attribute
    """
    callbacks = set(find_callbacks(ast))
    profiles = {}
    for fn in ast.functions:
        profile = profile_function(ast, fn, is_callback=fn.name in callbacks)
        if fn.transactional and not profile.write_set:
            raise AnalysisError(
                f"transactional function '{fn.name}' updates no attribute"
            )
        profiles[fn.name] = profile
        logger.debug(
            f"{ast.name}.{fn.name}: {profile.classification.value} "
            f"read={profile.read_set} write={profile.write_set}"
        )
    return profiles


def profile_function(ast: ContractAst, fn: FunctionDecl, is_callback: bool = False) -> FunctionProfile:
    reads: set[str] = set()
    writes: set[str] = set()
    _walk_block(fn.body, {frozenset()}, reads, writes)
    external_calls = sorted(
        {s.service for s in walk_statements(fn.body) if isinstance(s, ExternalQuery)}
    )
    triggers_callback = bool(external_calls) or is_callback
    if not fn.transactional:
        classification = Classification.NON_TRANSACTIONAL
    elif triggers_callback:
        classification = Classification.CDTF
    else:
        classification = Classification.SDTF
    return FunctionProfile(
        function=fn.name,
        read_set=_in_declaration_order(ast, reads),
        write_set=_in_declaration_order(ast, writes),
        external_calls=external_calls,
        triggers_callback=triggers_callback,
        is_callback=is_callback,
        classification=classification,
    )


def _walk_block(block: StatementBlock, paths: Paths, reads: set[str], writes: set[str]) -> Paths:
    """Advance every live path through a block; returns the paths that fall through."""
    for stmt in block:
        if not paths:
            break
        for expr in statement_exprs(stmt):
            read = _attribute_reads(expr)
            for written in paths:
                reads.update(read - written)
        if isinstance(stmt, Assign) and not stmt.local:
            writes.add(stmt.target)
            paths = {written | {stmt.target} for written in paths}
        elif isinstance(stmt, If):
            then_paths = _walk_block(stmt.then, paths, reads, writes)
            else_paths = paths
            if stmt.orelse is not None:
                else_paths = _walk_block(stmt.orelse, paths, reads, writes)
            paths = then_paths | else_paths
        elif isinstance(stmt, Return):
            paths = set()
    return paths


def _attribute_reads(expr: Expr) -> set[str]:
    return {e.name for e in walk_expr(expr) if isinstance(e, AttrRead)}


def _in_declaration_order(ast: ContractAst, names: Iterable[str]) -> list[str]:
    names = set(names)
    return [a for a in ast.attribute_names if a in names]


def is_oracle_guard(stmt) -> bool:
    """`requires(msg.sender == oracle_address())`, either operand order."""
    if not isinstance(stmt, Requires):
        return False
    cond = stmt.condition
    if not isinstance(cond, Binary) or cond.op != "==":
        return False
    sides = {type(cond.left), type(cond.right)}
    if sides != {ImplicitRead, BuiltinCall}:
        return False
    implicit = cond.left if isinstance(cond.left, ImplicitRead) else cond.right
    call = cond.left if isinstance(cond.left, BuiltinCall) else cond.right
    return implicit.source == "msg.sender" and call.name == "oracle_address" and not call.args


def find_callbacks(ast: ContractAst) -> list[str]:
    """Functions designated as oracle callback targets, in declaration order."""
    found = []
    for fn in ast.functions:
        logic = fn.logic
        if logic and is_oracle_guard(logic[0]):
            found.append(fn.name)
    return found


def callback_for(ast: ContractAst, function: str) -> Optional[FunctionDecl]:
    """The callback that completes a CDTF entry point (the first designated one)."""
    names = [name for name in find_callbacks(ast) if name != function]
    return ast.function(names[0]) if names else None


def client_checkset(profile: FunctionProfile) -> list[str]:
    """
    Attributes whose observed values must accompany a call.

    Raises:
        NotSdtf: The profile is not an SDTF
    """
    if profile.classification != Classification.SDTF:
        raise NotSdtf(profile.function, profile.classification.value)
    return list(profile.read_set)


def lock_cover(ast: ContractAst, function: str) -> list[str]:
    """
    Attributes a CDTF entry point must lock before it is called.

    This is the read and write set of the entry and of its callback, with
    generated shadow attributes mapped back to the attribute they stage.
    """
    fn = ast.function(function)
    if fn is None:
        return []
    members = [fn]
    callback = callback_for(ast, function)
    if callback is not None:
        members.append(callback)
    names: set[str] = set()
    for member in members:
        profile = profile_function(ast, member)
        for name in (*profile.read_set, *profile.write_set):
            names.add(shadowed_attribute(name) or name)
    return _in_declaration_order(ast, names)
