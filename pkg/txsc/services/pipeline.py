"""
Compilation and simulation pipeline shared by the CLI and the recipes.

parse -> typecheck -> analyze -> [transform] -> simulate
"""

import dataclasses
from pathlib import Path
from typing import Optional

from ..core.config import get_settings
from ..core.exceptions import ConfigError, TypecheckFailed
from ..core.logging import get_logger
from ..models.ast import ContractAst
from ..models.history import History
from ..models.scenario import ScenarioConfig, load_scenario
from ..models.schemas import FunctionProfile, TransformConfig, TransformReport
from .analysis import analyze
from .chainsim import run
from .parser import parse_contract
from .transform import load_transform_config, transform
from .typecheck import typecheck

logger = get_logger(__name__)

CONTRACT_SUFFIX = ".txsc"


@dataclasses.dataclass
class CompiledContract:
    """A checked contract, its profiles and, when requested, its transformed form."""
    source: ContractAst
    profiles: dict[str, FunctionProfile]
    transformed: Optional[ContractAst] = None
    report: Optional[TransformReport] = None

    @property
    def deployable(self) -> ContractAst:
        return self.transformed if self.transformed is not None else self.source


class PipelineService:
    """Runs contracts and scenarios through the toolkit stages."""

    def read_source(self, path: Path) -> str:
        try:
            return Path(path).read_text(encoding="utf-8")
        except OSError as e:
            raise ConfigError(f"cannot read contract {path}: {e}")

    def compile_contract(
        self,
        source: str,
        transform_config: Optional[TransformConfig] = None,
        apply_transform: bool = False,
    ) -> CompiledContract:
        """
        Parse, typecheck and analyze a contract, optionally transforming it.

        Args:
            source: Contract DSL text
            transform_config: Exclusions, deposit and lock chain; settings defaults when omitted
            apply_transform: Also produce the transformed contract and report

        Returns:
            CompiledContract: The compiled stages

        Raises:
            DSLSyntaxError: The source does not parse
            TypecheckFailed: The contract has type diagnostics
            AnalysisError: A transactional function updates nothing
            TransformError: The rewrite cannot be applied
        """
        ast = parse_contract(source)
        diagnostics = typecheck(ast)
        if diagnostics:
            raise TypecheckFailed(ast.name, diagnostics)
        profiles = analyze(ast)
        compiled = CompiledContract(ast, profiles)
        if apply_transform:
            config = transform_config or load_transform_config(None)
            compiled.transformed, compiled.report = transform(ast, profiles, config)
            # the rewrite must itself be a well-typed contract
            diagnostics = typecheck(compiled.transformed)
            if diagnostics:
                raise TypecheckFailed(compiled.transformed.name, diagnostics)
        return compiled

    def compile_file(
        self,
        path: Path,
        transform_config: Optional[TransformConfig] = None,
        apply_transform: bool = False,
    ) -> CompiledContract:
        return self.compile_contract(self.read_source(path), transform_config, apply_transform)

    def load_contracts(
        self,
        contracts_dir: Path,
        names: list[str],
        apply_transform: bool = False,
        transform_config: Optional[TransformConfig] = None,
    ) -> dict[str, ContractAst]:
        """
        Compile the named contract files of a directory for deployment.

        Args:
            contracts_dir: Directory holding `<name>.txsc` files
            names: File stems to compile
            apply_transform: Deploy the transformed contracts
            transform_config: Config used when transforming

        Returns:
            dict[str, ContractAst]: Deployable contracts keyed by file stem
        """
        contracts = {}
        for name in sorted(set(names)):
            path = Path(contracts_dir) / f"{name}{CONTRACT_SUFFIX}"
            if not path.is_file():
                raise ConfigError(f"contract file {path} not found")
            compiled = self.compile_file(path, transform_config, apply_transform)
            contracts[name] = compiled.deployable
        return contracts

    def scenario_transform_config(
        self, scenario: ScenarioConfig, base_dir: Optional[Path]
    ) -> TransformConfig:
        if scenario.transform_config is None:
            return load_transform_config(None)
        path = Path(scenario.transform_config)
        if not path.is_absolute() and base_dir is not None:
            path = base_dir / path
        return load_transform_config(path)

    def simulate(
        self,
        scenario: ScenarioConfig,
        contracts_dir: Optional[Path] = None,
        base_dir: Optional[Path] = None,
    ) -> History:
        """
        Compile the scenario's contracts and run it.

        Args:
            scenario: Validated scenario
            contracts_dir: Contract sources; the corpus contracts when omitted
            base_dir: Directory relative transform config paths resolve against

        Returns:
            History: The committed trace

        Raises:
            ConfigError: The transform config and the scenario name different lock chains
        """
        contracts_dir = contracts_dir or get_settings().contracts_dir
        config = self.scenario_transform_config(scenario, base_dir)
        if scenario.transform and config.lock_chain != scenario.lock_chain:
            raise ConfigError(
                f"transform config locks on '{config.lock_chain}' "
                f"but scenario {scenario.name} runs lock chain '{scenario.lock_chain}'"
            )
        contracts = self.load_contracts(
            contracts_dir,
            [d.contract for d in scenario.contracts],
            apply_transform=scenario.transform,
            transform_config=config,
        )
        logger.info(
            f"Simulating {scenario.name} (seed {scenario.seed}, "
            f"{'transformed' if scenario.transform else 'original'} contracts)"
        )
        return run(scenario, contracts)

    def simulate_file(
        self,
        scenario_path: Path,
        contracts_dir: Optional[Path] = None,
        seed: Optional[int] = None,
    ) -> tuple[ScenarioConfig, History]:
        scenario = load_scenario(scenario_path)
        if seed is not None:
            scenario = scenario.model_copy(update={"seed": seed})
        history = self.simulate(scenario, contracts_dir, Path(scenario_path).parent)
        return scenario, history


# Global pipeline instance
pipeline_service = PipelineService()


def get_pipeline_service() -> PipelineService:
    """
    Return the process-wide pipeline service.

    Returns:
        PipelineService: The global pipeline instance
    """
    return pipeline_service
