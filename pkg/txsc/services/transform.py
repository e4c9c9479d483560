"""
Transactional rewriting of contracts.

Two passes turn transaction-marked functions into plain DSL that enforces
isolation and atomicity at runtime:

* the SDTF pass prepends a freshness check `requires(a == msg.data.a)` for
  every attribute of the function's check set;
* the CDTF pass guards the entry point with a lock check and an escrow
  deposit, stages the entry's writes in `__after_<attr>` shadow attributes
  and lets the callback commit them, release the lock and refund the
  deposit. A generated `owner_recover` lets the contract owner forfeit a
  stuck lock.

Both passes drop the start/end markers of the functions they rewrite.
"""

import dataclasses
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from pathlib import Path
from typing import Optional

from pydantic import ValidationError

from ..core.config import get_settings
from ..core.exceptions import (
    ConfigError,
    ExclusionNotInReadSet,
    MissingProfile,
    NoCallbackForCdtf,
)
from ..core.logging import get_logger
from ..models.ast import (
    Assign,
    AttrRead,
    AttributeDecl,
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
    Param,
    Requires,
    Return,
    Statement,
    StatementBlock,
    Transfer,
    Unary,
)
from ..models.schemas import (
    Classification,
    FunctionProfile,
    FunctionTransform,
    TransformConfig,
    TransformReport,
)
from .analysis import callback_for, client_checkset, is_oracle_guard
from .typecheck import shadow_name

logger = get_logger(__name__)

LOCK_ID = ImplicitRead("msg.data.lock_id")
RECOVER_FUNCTION = "owner_recover"


def load_transform_config(path: Optional[Path]) -> TransformConfig:
    """
    Read a transform config TOML file.

    Keys: `deposit_amount`, `lock_chain` and an `[exclusions]` table mapping
    function names to attribute lists. Missing keys take the settings defaults.

    Raises:
        ConfigError: The file cannot be read or does not validate
    """
    settings = get_settings()
    data: dict = {}
    if path is not None:
        try:
            with open(path, "rb") as f:
                data = tomllib.load(f)
        except (OSError, tomllib.TOMLDecodeError) as e:
            raise ConfigError(f"cannot read transform config {path}: {e}")
    data.setdefault("deposit_amount", settings.deposit_amount)
    data.setdefault("lock_chain", settings.lock_chain)
    try:
        return TransformConfig.model_validate(data)
    except ValidationError as e:
        raise ConfigError(f"invalid transform config {path}: {e}")


def transform(
    ast: ContractAst,
    profiles: dict[str, FunctionProfile],
    config: TransformConfig,
) -> tuple[ContractAst, TransformReport]:
    """
    Apply the SDTF pass, then the CDTF pass.

    Args:
        ast: Contract that passes typecheck
        profiles: Output of `analyze(ast)`
        config: Exclusions, deposit and lock chain

    Returns:
        tuple: The rewritten contract and a report of every injection

    Raises:
        MissingProfile: A function has no profile, or an exclusion names an unknown function
        ExclusionNotInReadSet: An exclusion is outside the function's read set
        NoCallbackForCdtf: A CDTF issues an external query but nothing receives its callback
    """
    sdtf_ast, sdtf_entries = _sdtf_pass(ast, profiles, config)
    cdtf_ast, cdtf_entries = _cdtf_pass(sdtf_ast, profiles, config)
    report = TransformReport(per_function=_merge_entries(ast, sdtf_entries + cdtf_entries))
    logger.info(
        f"Transformed {ast.name}: {report.total_checks} checks, "
        f"{report.total_shadow_attrs} shadow attributes, {report.total_lock_checks} lock checks"
    )
    return cdtf_ast, report


def transform_sdtf(
    ast: ContractAst, profiles: dict[str, FunctionProfile], config: TransformConfig
) -> ContractAst:
    return _sdtf_pass(ast, profiles, config)[0]


def transform_cdtf(
    ast: ContractAst, profiles: dict[str, FunctionProfile], config: TransformConfig
) -> ContractAst:
    return _cdtf_pass(ast, profiles, config)[0]


### SDTF

def _validate(ast: ContractAst, profiles: dict[str, FunctionProfile], config: TransformConfig) -> None:
    for fn in ast.functions:
        if fn.name not in profiles:
            raise MissingProfile(fn.name)
    for function, attributes in config.exclusions.items():
        profile = profiles.get(function)
        if profile is None or ast.function(function) is None:
            raise MissingProfile(function)
        for attribute in attributes:
            if attribute not in profile.read_set:
                raise ExclusionNotInReadSet(function, attribute)


def _freshness_check(attribute: str) -> Requires:
    return Requires(Binary("==", AttrRead(attribute), ImplicitRead(f"msg.data.{attribute}")))


def _sdtf_pass(
    ast: ContractAst, profiles: dict[str, FunctionProfile], config: TransformConfig
) -> tuple[ContractAst, list[FunctionTransform]]:
    _validate(ast, profiles, config)
    functions = []
    entries = []
    for fn in ast.functions:
        profile = profiles[fn.name]
        if profile.classification != Classification.SDTF:
            functions.append(fn)
            continue
        excluded = set(config.exclusions.get(fn.name, ()))
        checks = [a for a in client_checkset(profile) if a not in excluded]
        body = tuple(_freshness_check(a) for a in checks) + fn.logic
        functions.append(dataclasses.replace(fn, body=body))
        entries.append(
            FunctionTransform(
                function=fn.name, injected_checks=checks, generated_statements=len(checks)
            )
        )
    return dataclasses.replace(ast, functions=tuple(functions)), entries


### CDTF

def _cdtf_pass(
    ast: ContractAst, profiles: dict[str, FunctionProfile], config: TransformConfig
) -> tuple[ContractAst, list[FunctionTransform]]:
    entries_by_name = {
        name: profile
        for name, profile in profiles.items()
        if profile.classification == Classification.CDTF and profile.external_calls
    }
    if not entries_by_name:
        return _strip_markers(ast, profiles), []

    rewritten: dict[str, FunctionDecl] = {}
    shadows: dict[str, list[str]] = {}  # callback name -> attributes it commits
    entries = []
    for name, profile in entries_by_name.items():
        fn = ast.function(name)
        callback = callback_for(ast, name)
        if fn is None or callback is None:
            raise NoCallbackForCdtf(name)
        staged = list(profile.write_set)
        rewritten[name], generated = _rewrite_entry(fn, profile, staged, config)
        shadows.setdefault(callback.name, [])
        shadows[callback.name].extend(a for a in staged if a not in shadows[callback.name])
        entries.append(
            FunctionTransform(
                function=name,
                generated_shadow_attrs=[shadow_name(a) for a in staged],
                generated_statements=generated,
                lock_checks=1,
                escrows=1,
            )
        )

    all_staged: list[str] = []
    for callback_name, staged in shadows.items():
        staged = _declaration_order(ast, staged)
        rewritten[callback_name], generated = _rewrite_callback(ast.function(callback_name), staged)
        entries.append(FunctionTransform(function=callback_name, generated_statements=generated))
        all_staged.extend(a for a in staged if a not in all_staged)
    all_staged = _declaration_order(ast, all_staged)

    functions = [
        rewritten.get(fn.name) or _without_markers(fn, profiles.get(fn.name))
        for fn in ast.functions
    ]
    if ast.function(RECOVER_FUNCTION) is None:
        recover = _owner_recover(all_staged)
        functions.append(recover)
        entries.append(
            FunctionTransform(function=RECOVER_FUNCTION, generated_statements=len(recover.body))
        )

    existing = set(ast.attribute_names)
    new_attributes = [
        AttributeDecl(shadow_name(a), ast.attribute(a).type_name)
        for a in all_staged
        if shadow_name(a) not in existing
    ]
    result = dataclasses.replace(
        ast,
        attributes=ast.attributes + tuple(new_attributes),
        functions=tuple(functions),
    )
    return result, entries


def _rewrite_entry(
    fn: FunctionDecl, profile: FunctionProfile, staged: list[str], config: TransformConfig
) -> tuple[FunctionDecl, int]:
    prologue: list[Statement] = [
        Requires(BuiltinCall("lock_held", (LOCK_ID,))),
        BuiltinStmt(BuiltinCall("escrow", (Literal(config.deposit_amount, "uint"),))),
    ]
    always_written = _unconditional_writes(fn.logic)
    for attribute in staged:
        # shadows must start from the real value unless every path overwrites them
        if attribute in profile.read_set or attribute not in always_written:
            prologue.append(Assign(shadow_name(attribute), AttrRead(attribute)))
    body = tuple(prologue) + _redirect_block(fn.logic, set(staged))
    return dataclasses.replace(fn, body=body), len(prologue)


def _unconditional_writes(block: StatementBlock) -> set[str]:
    written = set()
    for stmt in block:
        if isinstance(stmt, Return):
            break
        if isinstance(stmt, Assign) and not stmt.local:
            written.add(stmt.target)
    return written


def _epilogue() -> tuple[Statement, ...]:
    return (
        BuiltinStmt(BuiltinCall("lock_release", (LOCK_ID,))),
        BuiltinStmt(BuiltinCall("escrow_refund")),
    )


def _rewrite_callback(fn: FunctionDecl, staged: list[str]) -> tuple[FunctionDecl, int]:
    guard, *rest = fn.logic
    assert is_oracle_guard(guard)
    prologue: list[Statement] = [Requires(BuiltinCall("lock_active", (LOCK_ID,)))]
    prologue.extend(Assign(a, AttrRead(shadow_name(a))) for a in staged)
    rest_block, releases = _release_before_returns(tuple(rest))
    body = (guard, *prologue, *rest_block)
    if not (rest_block and isinstance(rest_block[-1], Return)):
        body = body + _epilogue()
        releases += 1
    generated = len(prologue) + releases * len(_epilogue())
    return dataclasses.replace(fn, body=body), generated


def _release_before_returns(block: StatementBlock) -> tuple[StatementBlock, int]:
    out: list[Statement] = []
    count = 0
    for stmt in block:
        if isinstance(stmt, Return):
            out.extend(_epilogue())
            out.append(stmt)
            count += 1
        elif isinstance(stmt, If):
            then, n_then = _release_before_returns(stmt.then)
            orelse = stmt.orelse
            n_else = 0
            if orelse is not None:
                orelse, n_else = _release_before_returns(orelse)
            out.append(dataclasses.replace(stmt, then=then, orelse=orelse))
            count += n_then + n_else
        else:
            out.append(stmt)
    return tuple(out), count


def _owner_recover(staged: list[str]) -> FunctionDecl:
    lock_id = LocalRead("lock_id")
    body: list[Statement] = [
        Requires(Binary("==", ImplicitRead("msg.sender"), BuiltinCall("contract_owner"))),
        Requires(BuiltinCall("lock_active", (lock_id,))),
    ]
    body.extend(Assign(shadow_name(a), AttrRead(a)) for a in staged)
    body.append(BuiltinStmt(BuiltinCall("lock_forfeit", (lock_id,))))
    return FunctionDecl(RECOVER_FUNCTION, (Param("lock_id", "string"),), tuple(body))


def _strip_markers(ast: ContractAst, profiles: dict[str, FunctionProfile]) -> ContractAst:
    functions = tuple(_without_markers(fn, profiles.get(fn.name)) for fn in ast.functions)
    return dataclasses.replace(ast, functions=functions)


def _without_markers(fn: FunctionDecl, profile: Optional[FunctionProfile]) -> FunctionDecl:
    if profile is not None and profile.classification == Classification.CDTF and fn.transactional:
        return dataclasses.replace(fn, body=fn.logic)
    return fn


def _declaration_order(ast: ContractAst, names: list[str]) -> list[str]:
    return [a for a in ast.attribute_names if a in set(names)]


def _merge_entries(ast: ContractAst, entries: list[FunctionTransform]) -> list[FunctionTransform]:
    merged: dict[str, FunctionTransform] = {}
    for entry in entries:
        current = merged.get(entry.function)
        if current is None:
            merged[entry.function] = entry
            continue
        merged[entry.function] = FunctionTransform(
            function=entry.function,
            injected_checks=current.injected_checks + entry.injected_checks,
            generated_shadow_attrs=current.generated_shadow_attrs + entry.generated_shadow_attrs,
            generated_statements=current.generated_statements + entry.generated_statements,
            lock_checks=current.lock_checks + entry.lock_checks,
            escrows=current.escrows + entry.escrows,
        )
    order = {fn.name: i for i, fn in enumerate(ast.functions)}
    return sorted(merged.values(), key=lambda e: order.get(e.function, len(order)))


### Shadow redirection

def _redirect_block(block: StatementBlock, staged: set[str]) -> StatementBlock:
    return tuple(_redirect_statement(stmt, staged) for stmt in block)


def _redirect_statement(stmt: Statement, staged: set[str]) -> Statement:
    if isinstance(stmt, Assign):
        target = stmt.target
        if not stmt.local and target in staged:
            target = shadow_name(target)
        return dataclasses.replace(stmt, target=target, value=_redirect_expr(stmt.value, staged))
    if isinstance(stmt, Let):
        return dataclasses.replace(stmt, value=_redirect_expr(stmt.value, staged))
    if isinstance(stmt, Requires):
        return dataclasses.replace(stmt, condition=_redirect_expr(stmt.condition, staged))
    if isinstance(stmt, If):
        orelse = None if stmt.orelse is None else _redirect_block(stmt.orelse, staged)
        return dataclasses.replace(
            stmt,
            condition=_redirect_expr(stmt.condition, staged),
            then=_redirect_block(stmt.then, staged),
            orelse=orelse,
        )
    if isinstance(stmt, Transfer):
        return dataclasses.replace(
            stmt,
            recipient=_redirect_expr(stmt.recipient, staged),
            amount=_redirect_expr(stmt.amount, staged),
        )
    if isinstance(stmt, BuiltinStmt):
        return dataclasses.replace(stmt, call=_redirect_expr(stmt.call, staged))
    return stmt


def _redirect_expr(expr: Expr, staged: set[str]) -> Expr:
    if isinstance(expr, AttrRead):
        if expr.name in staged:
            return dataclasses.replace(expr, name=shadow_name(expr.name))
        return expr
    if isinstance(expr, Binary):
        return dataclasses.replace(
            expr, left=_redirect_expr(expr.left, staged), right=_redirect_expr(expr.right, staged)
        )
    if isinstance(expr, Unary):
        return dataclasses.replace(expr, operand=_redirect_expr(expr.operand, staged))
    if isinstance(expr, Hash):
        return dataclasses.replace(expr, arg=_redirect_expr(expr.arg, staged))
    if isinstance(expr, BuiltinCall):
        return dataclasses.replace(expr, args=tuple(_redirect_expr(a, staged) for a in expr.args))
    return expr
