"""
Builtin functions of the contract DSL.

Queries are answered by the host environment (the simulator or a stub),
effects are recorded by the interpreter and applied by the host only when
the call commits, and pure builtins are evaluated by the interpreter.
"""

import dataclasses
from typing import Optional

from .values import DYNAMIC


@dataclasses.dataclass(frozen=True)
class BuiltinSpec:
    name: str
    params: tuple[str, ...]
    returns: Optional[str]
    kind: str  # "query" | "effect" | "pure"


BUILTINS: dict[str, BuiltinSpec] = {
    spec.name: spec
    for spec in (
        BuiltinSpec("lock_held", (DYNAMIC,), "bool", "query"),
        BuiltinSpec("lock_active", (DYNAMIC,), "bool", "query"),
        BuiltinSpec("oracle_address", (), "address", "query"),
        BuiltinSpec("contract_owner", (), "address", "query"),
        BuiltinSpec("single_digit", ("uint",), "uint", "pure"),
        BuiltinSpec("escrow", ("uint",), None, "effect"),
        BuiltinSpec("escrow_refund", (), None, "effect"),
        BuiltinSpec("lock_release", (DYNAMIC,), None, "effect"),
        BuiltinSpec("lock_forfeit", (DYNAMIC,), None, "effect"),
    )
}


def is_statement_builtin(name: str) -> bool:
    spec = BUILTINS.get(name)
    return spec is not None and spec.returns is None
