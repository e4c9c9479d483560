"""
Tests for the bundled end-to-end recipes and the random schedule sweep.
"""

import shutil

import pytest

from txsc.core.exceptions import ConfigError, RecipeFailed
from txsc.services.recipes import (
    RECIPES,
    expected_verdict,
    load_corpus,
    random_scenario,
    run_recipe,
    state_deltas,
    sweep,
)


@pytest.mark.parametrize("name", sorted(RECIPES))
def test_recipe_passes(name):
    """Each bundled recipe passes its assertions."""
    report, history = run_recipe(name)
    assert report.passed, [a for a in report.assertions if not a.passed]
    assert report.assertions[0].name == "expected verdict"
    assert report.verdict.serializable == expected_verdict(name).serializable
    assert report.seed == history.seed == 7


def test_recipes_are_deterministic():
    """Re-running a recipe gives the same report."""
    first, _ = run_recipe("blockking-anomaly")
    second, _ = run_recipe("blockking-anomaly")
    assert first.history_digest == second.history_digest
    assert first.to_json() == second.to_json()


def test_recipe_report_json():
    """Recipe reports serialize with camelCase keys."""
    report, _ = run_recipe("puzzle-anomaly")
    data = report.to_json()
    assert data["recipe"] == "puzzle-anomaly"
    assert data["passed"] is True
    assert data["transformed"] is False
    assert len(data["historyDigest"]) == 64
    assert data["deltas"]["puzzle"]["reward"] == [2, 0]


def test_deltas_only_list_changes(simulate):
    """State deltas list changed attributes only."""
    deltas = state_deltas(simulate("puzzle-fixed"))
    # Alice lowered the reward and took the balance back; Bob changed nothing
    assert deltas == {"puzzle": {"reward": [2, 0], "$balance": [2, 0]}}


def test_unknown_recipe():
    """Unknown recipe names are config errors."""
    with pytest.raises(ConfigError, match="unknown recipe"):
        run_recipe("puzzle-paradox")


def test_failed_assertion_carries_the_report(tmp_path, corpus_dir):
    """A failed recipe raises with its report attached."""
    corpus = tmp_path / "corpus"
    shutil.copytree(corpus_dir, corpus)
    manifest = corpus / "corpus.toml"
    text = manifest.read_text(encoding="utf-8")
    manifest.write_text(
        text.replace(
            "[entries.expected_verdicts.puzzle-anomaly]\nserializable = false",
            "[entries.expected_verdicts.puzzle-anomaly]\nserializable = true",
        ),
        encoding="utf-8",
    )

    with pytest.raises(RecipeFailed) as exc_info:
        run_recipe("puzzle-anomaly", corpus_dir=corpus)
    error = exc_info.value
    assert error.exit_code == 4
    assert error.assertion.startswith("expected verdict")
    assert error.report is not None and not error.report.passed


def test_seed_override_is_reported():
    """The seed override shows in the report."""
    report, _ = run_recipe("puzzle-fixed", seed=3)
    assert report.seed == 3
    assert report.passed


def test_corpus_manifest(corpus_dir):
    """The corpus manifest points at existing files."""
    entries = {entry.name: entry for entry in load_corpus()}
    assert set(entries) == {"puzzle", "blockking", "counter"}
    for entry in entries.values():
        assert (corpus_dir / entry.contract_file).is_file()
        for scenario in entry.scenario_files:
            assert (corpus_dir / scenario).is_file()
    assert expected_verdict("nonexistent") is None


def test_corpus_manifest_errors(tmp_path):
    """A missing manifest is a config error."""
    with pytest.raises(ConfigError):
        load_corpus(tmp_path)


### Sweep

def test_random_scenarios_are_reproducible():
    """Random scenarios depend on the seed only."""
    assert random_scenario(5) == random_scenario(5)
    scenario = random_scenario(5)
    assert scenario.transform
    assert sum(len([a for a in c.actions if a.kind == "call"]) for c in scenario.clients) <= 6


def test_small_sweep():
    """A short sweep finds no violations."""
    results = sweep(count=10, start_seed=100)
    assert [r.seed for r in results] == list(range(100, 110))
    for result in results:
        assert result.serializable, result
        assert result.set_violations == []
