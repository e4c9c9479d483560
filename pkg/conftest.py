"""
Shared pytest fixtures.

Tests run against the bundled corpus; nothing here touches the network or
writes outside pytest's tmp_path.
"""

from pathlib import Path

import pytest

from txsc.core.config import get_settings
from txsc.services.parser import parse_contract
from txsc.services.pipeline import get_pipeline_service
from txsc.services.transform import load_transform_config


@pytest.fixture(scope="session")
def corpus_dir() -> Path:
    return get_settings().corpus_dir


@pytest.fixture(scope="session")
def contracts_dir(corpus_dir) -> Path:
    return corpus_dir / "contracts"


@pytest.fixture(scope="session")
def scenarios_dir(corpus_dir) -> Path:
    return corpus_dir / "scenarios"


@pytest.fixture(scope="session")
def read_contract(contracts_dir):
    def _read(name: str) -> str:
        return (contracts_dir / f"{name}.txsc").read_text(encoding="utf-8")

    return _read


@pytest.fixture(scope="session")
def puzzle_ast(read_contract):
    return parse_contract(read_contract("puzzle"))


@pytest.fixture(scope="session")
def blockking_ast(read_contract):
    return parse_contract(read_contract("blockking"))


@pytest.fixture(scope="session")
def counter_ast(read_contract):
    return parse_contract(read_contract("counter"))


@pytest.fixture(scope="session")
def puzzle_config(corpus_dir):
    return load_transform_config(corpus_dir / "transforms" / "puzzle.toml")


@pytest.fixture(scope="session")
def default_config(corpus_dir):
    return load_transform_config(corpus_dir / "transforms" / "default.toml")


@pytest.fixture(scope="session")
def compiled_puzzle(contracts_dir, puzzle_config):
    return get_pipeline_service().compile_file(
        contracts_dir / "puzzle.txsc", puzzle_config, apply_transform=True
    )


@pytest.fixture(scope="session")
def compiled_blockking(contracts_dir, default_config):
    return get_pipeline_service().compile_file(
        contracts_dir / "blockking.txsc", default_config, apply_transform=True
    )


@pytest.fixture(scope="session")
def simulate(scenarios_dir):
    """Run a bundled scenario by name and return its history."""
    def _simulate(name: str, seed=None):
        _, history = get_pipeline_service().simulate_file(
            scenarios_dir / f"{name}.toml", seed=seed
        )
        return history

    return _simulate
