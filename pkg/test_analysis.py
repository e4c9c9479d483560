"""
Tests for read/write-set analysis and SDTF/CDTF classification.
"""

import pytest

from txsc.core.exceptions import AnalysisError, NotSdtf
from txsc.models.schemas import Classification
from txsc.services.analysis import (
    analyze,
    callback_for,
    client_checkset,
    find_callbacks,
    lock_cover,
)
from txsc.services.parser import parse_contract


def _profiles(body: str, attrs: str = "attr uint a; attr uint b; attr bool c;"):
    source = f"contract T {{ {attrs} fn f(n: uint) {{ start_tx; {body} end_tx; }} }}"
    return analyze(parse_contract(source))["f"]


def test_puzzle_profiles(puzzle_ast):
    """Puzzle functions are SDTF with the expected read and write sets."""
    profiles = analyze(puzzle_ast)

    update = profiles["UpdateReward"]
    assert update.read_set == ["owner", "solved", "reward"]
    assert update.write_set == ["reward"]
    assert update.classification == Classification.SDTF
    assert not update.triggers_callback

    submit = profiles["SubmitSolution"]
    assert submit.read_set == ["solved", "reward", "diff"]
    assert submit.write_set == ["solved", "solution"]
    assert submit.classification == Classification.SDTF

    assert profiles["constructor"].classification == Classification.NON_TRANSACTIONAL


def test_blockking_profiles(blockking_ast):
    """BlockKing's entry is CDTF and its callback is not transactional."""
    profiles = analyze(blockking_ast)

    enter = profiles["enter"]
    assert enter.read_set == []
    assert enter.write_set == ["warrior", "warriorBlock", "warriorGold"]
    assert enter.external_calls == ["WolframAlpha"]
    assert enter.classification == Classification.CDTF

    callback = profiles["_callback"]
    assert callback.is_callback
    # randomNumber is written before the comparison reads it
    assert callback.read_set == ["warrior", "warriorBlock"]
    assert callback.write_set == ["king", "kingBlock", "randomNumber"]


def test_profile_json_uses_camel_case(puzzle_ast):
    """Profiles serialize with camelCase keys."""
    data = analyze(puzzle_ast)["UpdateReward"].to_json()
    assert data["function"] == "UpdateReward"
    assert data["readSet"] == ["owner", "solved", "reward"]
    assert data["writeSet"] == ["reward"]
    assert data["classification"] == "SDTF"


def test_attribute_written_before_read_is_not_in_read_set():
    """A read after a write on every path is not a read-set member."""
    profile = _profiles("a = 1; b = a + 1;")
    assert profile.read_set == []
    assert profile.write_set == ["a", "b"]


def test_read_on_one_path_before_write_counts():
    """A read that precedes the write on some path is kept."""
    profile = _profiles("if (c) { a = 1; } b = a;")
    assert profile.read_set == ["a", "c"]
    assert profile.write_set == ["a", "b"]


def test_write_in_both_branches_covers_later_reads():
    """Writes in both branches cover reads after the if."""
    profile = _profiles("if (c) { a = 1; } else { a = 2; } b = a;")
    assert profile.read_set == ["c"]


def test_return_ends_a_path():
    """A return ends its path before later statements."""
    profile = _profiles("if (c) { a = 1; return; } b = a;")
    # the path that writes `a` returns before `b = a`
    assert profile.read_set == ["a", "c"]


def test_locals_are_not_attributes():
    """Locals and parameters never enter the attribute sets."""
    profile = _profiles("let x = n + 1; a = x;")
    assert profile.read_set == []
    assert profile.write_set == ["a"]


def test_transactional_function_without_writes_is_rejected():
    """A transaction that updates nothing is an analysis error."""
    source = "contract T { attr uint a; fn f() { start_tx; requires(a > 0); end_tx; } }"
    with pytest.raises(AnalysisError, match="updates no attribute"):
        analyze(parse_contract(source))


def test_client_checkset(puzzle_ast, blockking_ast):
    """SDTFs check their whole read set; CDTFs have no check set."""
    profiles = analyze(puzzle_ast)
    assert client_checkset(profiles["UpdateReward"]) == ["owner", "solved", "reward"]
    with pytest.raises(NotSdtf):
        client_checkset(analyze(blockking_ast)["enter"])


def test_callbacks_are_found_by_their_oracle_guard(blockking_ast, puzzle_ast):
    """Callbacks are the functions guarded by the oracle sender check."""
    assert find_callbacks(blockking_ast) == ["_callback"]
    assert callback_for(blockking_ast, "enter").name == "_callback"
    assert find_callbacks(puzzle_ast) == []


def test_lock_cover_spans_entry_and_callback(blockking_ast, compiled_blockking):
    """The lock cover joins the entry's and the callback's attributes."""
    expected = ["king", "warrior", "kingBlock", "warriorBlock", "warriorGold", "randomNumber"]
    assert lock_cover(blockking_ast, "enter") == expected
    # shadows map back to the attribute they stage
    assert lock_cover(compiled_blockking.transformed, "enter") == expected
