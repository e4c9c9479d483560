"""
Scenario configuration schemas.

A scenario is a TOML file describing chains, deployments, the oracle and
scripted clients. Field names in TOML are snake_case.
"""

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from pathlib import Path
from typing import Annotated, Any, Literal, Optional, Union

from pydantic import BaseModel, Field, ValidationError, field_validator, model_validator

from ..core.config import get_settings
from ..core.exceptions import ConfigError
from .values import decode_mapping, decode_value


class ChainSpec(BaseModel):
    chain_id: str = Field(..., min_length=1, examples=["main"])
    miner_count: int = Field(default=1, ge=1)


class Deployment(BaseModel):
    """One contract object deployed at genesis."""

    address: str = Field(..., min_length=1, description="Object identity", examples=["puzzle"])
    contract: str = Field(..., description="Contract file stem under the contracts directory")
    chain: str
    deployer: str
    value: int = Field(default=0, ge=0)
    data: dict[str, Any] = Field(default_factory=dict)
    args: list[Any] = Field(default_factory=list)
    gas: int = Field(default=1000, ge=0)

    @field_validator("data")
    @classmethod
    def decode_data(cls, v: dict[str, Any]) -> dict[str, Any]:
        return decode_mapping(v)

    @field_validator("args")
    @classmethod
    def decode_args(cls, v: list[Any]) -> list[Any]:
        return [decode_value(item) for item in v]


class OracleConfig(BaseModel):
    """Asynchronous external service answering `external_query` requests."""

    service: str = Field(default="WolframAlpha")
    address: str = Field(default="oracle", description="Sender of callback calls")
    response_delay_ticks: tuple[int, int] = Field(default=(5, 5))
    drop_probability: float = Field(default=0.0, ge=0.0, le=1.0)
    value_script: Union[list[int], Literal["uniform 1..9"]] = Field(default="uniform 1..9")
    callback_gas: int = Field(default=100, ge=0)

    @field_validator("response_delay_ticks")
    @classmethod
    def validate_delay(cls, v: tuple[int, int]) -> tuple[int, int]:
        low, high = v
        if low < 0 or high < low:
            raise ValueError("response_delay_ticks must be a range [low, high] with 0 <= low <= high")
        return v


class ObserveAction(BaseModel):
    kind: Literal["observe"]
    tick: int = Field(..., ge=0)
    contract: str
    attrs: Optional[list[str]] = Field(
        default=None, description="Attributes to read; all declared attributes when omitted"
    )


class CallAction(BaseModel):
    kind: Literal["call"]
    tick: int = Field(..., ge=0)
    contract: str
    function: str
    value: int = Field(default=0, ge=0)
    gas: Optional[int] = Field(default=None, ge=0)
    data: dict[str, Any] = Field(default_factory=dict)
    args: list[Any] = Field(default_factory=list)
    send_observed: bool = Field(
        default=True, description="Attach the span's observed values to msg.data"
    )
    lock: bool = Field(default=False, description="Acquire the entry's lock cover before calling")
    lock_retry_ticks: int = Field(default=10, ge=1)
    lock_max_attempts: int = Field(default=20, ge=1)

    @field_validator("data")
    @classmethod
    def decode_data(cls, v: dict[str, Any]) -> dict[str, Any]:
        return decode_mapping(v)

    @field_validator("args")
    @classmethod
    def decode_args(cls, v: list[Any]) -> list[Any]:
        return [decode_value(item) for item in v]


class RecoverAction(BaseModel):
    """The contract owner forfeits the latest lock `lock_of` holds on the contract."""

    kind: Literal["recover"]
    tick: int = Field(..., ge=0)
    contract: str
    lock_of: str
    gas: Optional[int] = Field(default=None, ge=0)


Action = Annotated[Union[ObserveAction, CallAction, RecoverAction], Field(discriminator="kind")]


class ClientScript(BaseModel):
    client_id: str = Field(..., min_length=1)
    funds: Optional[int] = Field(default=None, ge=0)
    actions: list[Action] = Field(default_factory=list)


class ScenarioConfig(BaseModel):
    """
    Everything a simulator run depends on.

    The same configuration and seed always produce byte-identical histories.
    """

    name: str = Field(default="scenario")
    seed: int = Field(default_factory=lambda: get_settings().default_seed)
    transform: bool = Field(default=False, description="Deploy transformed contracts")
    transform_config: Optional[str] = Field(
        default=None, description="Transform TOML, relative to the scenario file"
    )
    block_interval_ticks: int = Field(
        default_factory=lambda: get_settings().block_interval_ticks, ge=1
    )
    max_ticks: int = Field(default=500, ge=0)
    mempool_jitter_ticks: int = Field(default=0, ge=0)
    lock_chain: str = Field(default_factory=lambda: get_settings().lock_chain)
    chains: list[ChainSpec] = Field(default_factory=list)
    contracts: list[Deployment] = Field(default_factory=list)
    oracle: OracleConfig = Field(default_factory=OracleConfig)
    clients: list[ClientScript] = Field(default_factory=list)

    @model_validator(mode="after")
    def validate_references(self) -> "ScenarioConfig":
        chain_ids = [c.chain_id for c in self.chains]
        if len(set(chain_ids)) != len(chain_ids):
            raise ValueError("duplicate chain id")
        if self.lock_chain in chain_ids:
            raise ValueError(f"chain id '{self.lock_chain}' is reserved for the lock manager")
        addresses = [d.address for d in self.contracts]
        if len(set(addresses)) != len(addresses):
            raise ValueError("duplicate contract address")
        for deployment in self.contracts:
            if deployment.chain not in chain_ids:
                raise ValueError(f"contract '{deployment.address}' names unknown chain '{deployment.chain}'")
        client_ids = [c.client_id for c in self.clients]
        if len(set(client_ids)) != len(client_ids):
            raise ValueError("duplicate client id")
        for client in self.clients:
            for action in client.actions:
                if action.contract not in addresses:
                    raise ValueError(
                        f"client '{client.client_id}' acts on unknown contract '{action.contract}'"
                    )
                if isinstance(action, CallAction) and action.function == "constructor":
                    raise ValueError("constructors run only at deployment")
        return self


def load_scenario(path: Path) -> ScenarioConfig:
    """
    Load and validate a scenario TOML file.

    Raises:
        ConfigError: The file cannot be read or does not validate
    """
    try:
        with open(path, "rb") as f:
            data = tomllib.load(f)
    except (OSError, tomllib.TOMLDecodeError) as e:
        raise ConfigError(f"cannot read scenario {path}: {e}")
    data.setdefault("name", Path(path).stem)
    try:
        return ScenarioConfig.model_validate(data)
    except ValidationError as e:
        raise ConfigError(f"invalid scenario {path}: {e}")
