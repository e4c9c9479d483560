"""
Tests for the contract DSL: parser, pretty-printer and typechecker.
"""

import pytest
from hypothesis import given, settings as hypothesis_settings
from hypothesis import strategies as st

from txsc.core.exceptions import DSLSyntaxError, DuplicateName
from txsc.models.ast import (
    AttrRead,
    Binary,
    BuiltinCall,
    Hash,
    ImplicitRead,
    Let,
    Literal,
    LocalRead,
    Requires,
    StartTx,
    Unary,
    iter_nodes,
    node_to_json,
)
from txsc.services.parser import parse_contract
from txsc.services.printer import print_contract, print_expr
from txsc.services.typecheck import typecheck

CORPUS = ("puzzle", "blockking", "counter")


def _wrap_function(body: str, attrs: str = "attr uint count;") -> str:
    return f"contract T {{\n    {attrs}\n    fn f(n: uint) {{\n{body}\n    }}\n}}\n"


### Parsing

def test_parse_puzzle_structure(puzzle_ast):
    """The puzzle contract exposes its attributes and functions in order."""
    assert puzzle_ast.name == "Puzzle"
    assert puzzle_ast.attribute_names == ["owner", "solved", "reward", "diff", "solution"]
    assert [fn.name for fn in puzzle_ast.functions] == [
        "constructor",
        "UpdateReward",
        "SubmitSolution",
    ]
    update = puzzle_ast.function("UpdateReward")
    assert update.transactional
    assert isinstance(update.body[0], StartTx)
    assert not puzzle_ast.function("constructor").transactional


def test_this_prefix_and_bare_names_resolve_to_attribute_reads(puzzle_ast):
    """`this.x` and bare attribute names both read the attribute."""
    guard = puzzle_ast.function("UpdateReward").logic[0]
    assert isinstance(guard, Requires)
    assert guard.condition == Binary("==", ImplicitRead("msg.sender"), AttrRead("owner"))


def test_locals_and_params_resolve_to_local_reads():
    """Locals and parameters resolve to local reads."""
    ast = parse_contract(_wrap_function("        let m = n + count;\n        count = m;"))
    let, assign = ast.function("f").body
    assert isinstance(let, Let)
    assert let.value == Binary("+", LocalRead("n"), AttrRead("count"))
    assert assign.value == LocalRead("m")
    assert not assign.local


def test_every_node_has_a_location(blockking_ast):
    """Every node carries a source location."""
    for node in iter_nodes(blockking_ast):
        assert node.loc.line >= 1
        assert node.loc.column >= 1


def test_external_query_and_builtins(blockking_ast):
    """External queries and builtin calls parse to their nodes."""
    callback = blockking_ast.function("_callback")
    assert [p.name for p in callback.params] == ["myid", "result"]
    condition = callback.body[2].condition
    assert condition.left == BuiltinCall("single_digit", (AttrRead("warriorBlock"),))


def test_node_to_json_tags_nodes_and_encodes_literals():
    """JSON nodes are tagged and literals encoded."""
    ast = parse_contract(
        _wrap_function(
            "        requires(sha256(msg.data.s) < 0x" + "ab" * 32 + ");",
            attrs="attr bytes32 public count;",
        )
    )
    data = node_to_json(ast)
    assert data["node"] == "ContractAst"
    requires = data["functions"][0]["body"][0]
    assert requires["node"] == "Requires"
    literal = requires["condition"]["right"]
    assert literal == {
        "node": "Literal",
        "value": "0x" + "ab" * 32,
        "type_name": "bytes32",
        "loc": literal["loc"],
    }
    assert len(literal["loc"]) == 4


### Syntax errors

def test_syntax_error_reports_location_and_expected_tokens():
    """Syntax errors carry line, column and expected tokens."""
    source = "contract A {\n    attr uint x\n}\n"
    with pytest.raises(DSLSyntaxError) as exc_info:
        parse_contract(source)
    error = exc_info.value
    assert (error.location.line, error.location.column) == (3, 1)
    assert "';'" in error.expected
    assert error.message.startswith("3:1:")
    assert error.exit_code == 2


def test_unexpected_end_of_input():
    """Truncated input is a syntax error."""
    with pytest.raises(DSLSyntaxError, match="end of input"):
        parse_contract("contract A {\n    attr uint x;\n")


@pytest.mark.parametrize(
    "body",
    [
        "        count = 1;\n        start_tx;\n        end_tx;",
        "        start_tx;\n        count = 1;",
        "        start_tx;\n        if (true) { end_tx; }",
    ],
)
def test_markers_must_enclose_the_whole_body(body):
    """start_tx and end_tx must wrap the body exactly once."""
    with pytest.raises(DSLSyntaxError, match="start_tx/end_tx"):
        parse_contract(_wrap_function(body))


def test_unknown_implicit_parameter():
    """Only the known msg and block fields exist."""
    with pytest.raises(DSLSyntaxError, match="msg.origin"):
        parse_contract(_wrap_function("        count = msg.origin;"))


def test_only_one_external_query_per_function():
    """A function issues at most one external query."""
    body = '        external_query("S", "a");\n        external_query("S", "b");'
    with pytest.raises(DSLSyntaxError, match="at most one external_query"):
        parse_contract(_wrap_function(body))


@pytest.mark.parametrize(
    "source,kind",
    [
        ("contract A { attr uint x; attr bool x; }", "attribute"),
        ("contract A { fn f() { } fn f() { } }", "function"),
        ("contract A { fn f(a: uint, a: bool) { } }", "parameter"),
        ("contract A { attr uint x; fn f(x: uint) { } }", "parameter shadowing attribute"),
        ("contract A { fn f() { let y = 1; let y = 2; } }", "local"),
    ],
)
def test_duplicate_names(source, kind):
    """Duplicate or shadowing names are rejected."""
    with pytest.raises(DuplicateName) as exc_info:
        parse_contract(source)
    assert exc_info.value.kind == kind


### Printing

@pytest.mark.parametrize("name", CORPUS)
def test_print_round_trips_corpus(name, read_contract):
    """Printing then parsing gives back the same tree."""
    ast = parse_contract(read_contract(name))
    printed = print_contract(ast)
    assert parse_contract(printed) == ast
    # canonical form is a fixed point
    assert print_contract(parse_contract(printed)) == printed


def test_printer_layout(counter_ast):
    """Canonical layout of a small contract."""
    printed = print_contract(counter_ast)
    assert printed.splitlines()[:4] == [
        "contract Counter {",
        "    attr uint public count;",
        "    attr address public lastCaller;",
        "",
    ]
    assert "    fn increment(step: uint) {\n        start_tx;\n" in printed
    assert printed.endswith("}\n")


def test_print_expr_keeps_needed_parentheses():
    """Only parentheses that change precedence are printed."""
    expr = Binary("-", AttrRead("a"), Binary("-", AttrRead("b"), AttrRead("c")))
    assert print_expr(expr) == "a - (b - c)"
    expr = Binary("==", Binary("==", AttrRead("a"), AttrRead("b")), Literal(True, "bool"))
    assert print_expr(expr) == "(a == b) == true"
    assert print_expr(Unary("!", Binary("&&", AttrRead("p"), AttrRead("q")))) == "!(p && q)"


_leaves = st.one_of(
    st.sampled_from([AttrRead("a"), AttrRead("b"), ImplicitRead("msg.sender"),
                     ImplicitRead("msg.data.key"), ImplicitRead("block.number")]),
    st.integers(min_value=0, max_value=2**64).map(lambda v: Literal(v, "uint")),
    st.booleans().map(lambda v: Literal(v, "bool")),
    st.binary(min_size=32, max_size=32).map(lambda v: Literal(v, "bytes32")),
    st.text(alphabet="abc xyz", max_size=5).map(lambda v: Literal(v, "string")),
)

_exprs = st.recursive(
    _leaves,
    lambda children: st.one_of(
        st.builds(Binary, st.sampled_from(["==", "!=", "<", ">", "+", "-", "*", "&&", "||"]),
                  children, children),
        st.builds(Unary, st.just("!"), children),
        st.builds(Hash, children),
        children.map(lambda e: BuiltinCall("single_digit", (e,))),
    ),
    max_leaves=12,
)


@hypothesis_settings(max_examples=200, deadline=None)
@given(_exprs)
def test_printed_expressions_reparse_to_the_same_tree(expr):
    """Random expressions survive printing."""
    source = f"contract T {{ fn f() {{ let x = {print_expr(expr)}; }} }}"
    let = parse_contract(source).function("f").body[0]
    assert let.value == expr


### Typechecking

@pytest.mark.parametrize("name", CORPUS)
def test_corpus_typechecks(name, read_contract):
    """Bundled contracts have no diagnostics."""
    assert typecheck(parse_contract(read_contract(name))) == []


@pytest.mark.parametrize(
    "body,kind",
    [
        ("        count = true;", "TypeMismatch"),
        ("        requires(count);", "TypeMismatch"),
        ("        transfer(count, 1);", "TypeMismatch"),
        ("        missing = 1;", "UnresolvedName"),
        ("        count = missing + 1;", "UnresolvedName"),
        ("        count = frobnicate(1);", "UnresolvedName"),
        ("        let __tmp = 1;", "ReservedName"),
        ("        requires(count < msg.sender);", "TypeMismatch"),
        ("        count = oracle_address();", "TypeMismatch"),
        ("        escrow(true);", "TypeMismatch"),
        ("        count = escrow(1);", "TypeMismatch"),
    ],
)
def test_typecheck_diagnostics(body, kind):
    """Each ill-typed body yields its diagnostic kind."""
    diagnostics = typecheck(parse_contract(_wrap_function(body)))
    assert kind in [d.kind for d in diagnostics]
    assert all(d.line == 4 for d in diagnostics if d.kind == kind)


def test_branch_locals_do_not_outlive_their_branch():
    """A let inside an if branch is out of scope after the if."""
    body = "        if (n > 0) {\n            let t = 1;\n        }\n        count = t;"
    ast = parse_contract(_wrap_function(body))
    assign = ast.function("f").body[-1]
    assert assign.value == AttrRead("t")
    diagnostics = typecheck(ast)
    assert [d.kind for d in diagnostics] == ["UnresolvedName"]
    assert diagnostics[0].line == 7


def test_both_branches_may_declare_the_same_local():
    """Sibling branches have separate scopes."""
    body = (
        "        if (n > 0) {\n            let t = 1;\n            count = t;\n"
        "        } else {\n            let t = 2;\n            count = t;\n        }"
    )
    assert typecheck(parse_contract(_wrap_function(body))) == []


def test_msg_data_is_dynamically_typed():
    """msg.data entries type-check against any primitive."""
    body = "        count = msg.data.amount;\n        requires(msg.data.flag);"
    assert typecheck(parse_contract(_wrap_function(body))) == []


def test_shadow_attribute_must_match_its_base():
    """Reserved names are allowed only for typed shadows."""
    ok = "attr uint count; attr uint public __after_count;"
    assert typecheck(parse_contract(_wrap_function("", attrs=ok))) == []

    wrong_type = "attr uint count; attr bool public __after_count;"
    kinds = [d.kind for d in typecheck(parse_contract(_wrap_function("", attrs=wrong_type)))]
    assert kinds == ["TypeMismatch"]

    orphan = "attr uint count; attr uint public __secret;"
    kinds = [d.kind for d in typecheck(parse_contract(_wrap_function("", attrs=orphan)))]
    assert kinds == ["ReservedName"]
