"""
Pydantic schemas for analysis, transformation and oracle results.

These are the toolkit's machine-readable outputs: everything the CLI
prints with `--json` is one of these models dumped by alias, so the JSON
field names are camelCase while Python code uses snake_case.
"""

from enum import Enum
from typing import Optional

from pydantic import BaseModel, ConfigDict, Field, computed_field, field_validator
from pydantic.alias_generators import to_camel


class CamelModel(BaseModel):
    """Base model emitting camelCase JSON and accepting either spelling."""

    model_config = ConfigDict(alias_generator=to_camel, populate_by_name=True)

    def to_json(self) -> dict:
        return self.model_dump(mode="json", by_alias=True)


class Diagnostic(CamelModel):
    """A typechecker finding attached to a source position."""

    kind: str = Field(
        ...,
        description="Diagnostic class",
        examples=["TypeMismatch", "UnresolvedName", "ReservedName"],
    )
    message: str = Field(..., description="Human-readable explanation")
    line: int = Field(..., ge=1)
    column: int = Field(..., ge=1)

    def __str__(self) -> str:
        return f"{self.line}:{self.column}: {self.kind}: {self.message}"


class Classification(str, Enum):
    SDTF = "SDTF"
    CDTF = "CDTF"
    NON_TRANSACTIONAL = "NonTransactional"


class FunctionProfile(CamelModel):
    """
    Static read/write profile of one function.

    Attribute lists are sets kept in declaration order so that output is
    deterministic; `external_calls` is sorted by service name.
    """

    function: str = Field(..., description="Function name", examples=["UpdateReward"])
    read_set: list[str] = Field(
        default_factory=list,
        description="Attributes read before any write on some path",
        examples=[["owner", "solved", "reward"]],
    )
    write_set: list[str] = Field(
        default_factory=list,
        description="Attributes assigned on any path",
        examples=[["reward"]],
    )
    external_calls: list[str] = Field(
        default_factory=list,
        description="Services named by external_query",
        examples=[["WolframAlpha"]],
    )
    triggers_callback: bool = Field(default=False)
    is_callback: bool = Field(
        default=False, description="Function is a designated oracle callback target"
    )
    classification: Classification = Field(..., examples=["SDTF"])


class TransformConfig(CamelModel):
    """
    Knobs of the rewriting pass.

    `exclusions` maps a function name to the attributes whose freshness
    check is suppressed for that function.
    """

    exclusions: dict[str, list[str]] = Field(
        default_factory=dict,
        alias="checkExclusions",
        description="Per-function attributes excluded from injected checks",
        examples=[{"UpdateReward": ["owner"], "SubmitSolution": ["diff"]}],
    )
    deposit_amount: int = Field(default=10, ge=0, description="Escrow at CDTF entry points")
    lock_chain: str = Field(default="lockchain", min_length=1)

    @field_validator("exclusions")
    @classmethod
    def normalize_exclusions(cls, v: dict[str, list[str]]) -> dict[str, list[str]]:
        return {fn: sorted(set(attrs)) for fn, attrs in v.items()}


class FunctionTransform(CamelModel):
    function: str
    injected_checks: list[str] = Field(default_factory=list)
    generated_shadow_attrs: list[str] = Field(default_factory=list)
    generated_statements: int = Field(default=0, ge=0)
    lock_checks: int = Field(default=0, ge=0)
    escrows: int = Field(default=0, ge=0)


class TransformReport(CamelModel):
    """Everything the rewriting pass injected, per function and in total."""

    per_function: list[FunctionTransform] = Field(default_factory=list)

    @computed_field
    @property
    def total_checks(self) -> int:
        return sum(len(f.injected_checks) for f in self.per_function)

    @computed_field
    @property
    def total_shadow_attrs(self) -> int:
        return sum(len(f.generated_shadow_attrs) for f in self.per_function)

    @computed_field
    @property
    def total_lock_checks(self) -> int:
        return sum(f.lock_checks for f in self.per_function)

    @computed_field
    @property
    def total_escrows(self) -> int:
        return sum(f.escrows for f in self.per_function)

    @computed_field
    @property
    def total_generated_statements(self) -> int:
        return sum(f.generated_statements for f in self.per_function)

    def for_function(self, name: str) -> Optional[FunctionTransform]:
        for entry in self.per_function:
            if entry.function == name:
                return entry
        return None


class ConflictKind(str, Enum):
    RW = "RW"
    WR = "WR"
    WW = "WW"


class ConflictEdge(CamelModel):
    """Directed conflict between two spans on one data item."""

    source: str = Field(..., description="Span whose operation comes first")
    target: str = Field(..., description="Span whose conflicting operation follows")
    attribute: str = Field(
        ..., description="Data item as chain/contract.attribute", examples=["main/puzzle.reward"]
    )
    kind: ConflictKind


class Verdict(CamelModel):
    """Result of the serializability oracle."""

    serializable: bool
    method: str = Field(
        ...,
        description="Which oracle decided the verdict",
        examples=["permutation", "conflict-graph"],
    )
    witness_order: Optional[list[str]] = Field(
        default=None, description="Serial order of span ids reproducing the history"
    )
    conflict_cycle: Optional[list[ConflictEdge]] = Field(
        default=None, description="Cycle in the conflict graph, when one exists"
    )
    conflict_serializable: bool = Field(
        ..., description="Whether the conflict graph is acyclic"
    )
    invalidated_spans: list[str] = Field(
        default_factory=list,
        description="Aborted spans whose observed reads were stale at every serial point",
    )
    spans: int = Field(..., ge=0, description="Number of spans checked")


class AssertionResult(CamelModel):
    name: str
    passed: bool
    detail: str = ""


class RecipeReport(CamelModel):
    """Summary of one end-to-end recipe run."""

    recipe: str
    seed: int
    transformed: bool
    verdict: Verdict
    assertions: list[AssertionResult] = Field(default_factory=list)
    history_digest: str = Field(..., description="sha256 of the exported history JSON")
    deltas: dict[str, dict] = Field(
        default_factory=dict,
        description="Per-object attribute changes between initial and final state",
    )

    @computed_field
    @property
    def passed(self) -> bool:
        return all(a.passed for a in self.assertions)


class ExpectedVerdict(CamelModel):
    serializable: bool
    notes: str = ""


class CorpusEntry(CamelModel):
    """A bundled contract with its scenarios and the verdicts they must produce."""

    name: str
    contract_file: str
    scenario_files: list[str] = Field(default_factory=list)
    expected_verdicts: dict[str, ExpectedVerdict] = Field(default_factory=dict)


class SweepResult(CamelModel):
    """Verdict of one randomly generated schedule."""

    seed: int
    spans: int = Field(..., ge=0)
    serializable: bool
    method: str
    set_violations: list[str] = Field(
        default_factory=list,
        description="Traced accesses outside the static read or write set",
    )
