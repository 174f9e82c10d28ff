import pytest

from conftest import FIXTURES
from ledgerml import fixedpoint as fp
from ledgerml.qscript import ParseError, parse_contract, pretty_print
from ledgerml.qscript.ast import Binary, If, Let, While
from ledgerml.values import NONE, VBool, VBytes, VDbl, VDec, VInt, VList, VRec, VStr

EMPTY = "on receive(s, a, c, asst, d) { }"


def test_empty_handler():
    ast = parse_contract(EMPTY)
    assert ast.params == ("s", "a", "c", "asst", "d")
    assert ast.body == ()
    assert ast.constants == ()


def test_constants_all_literal_kinds():
    src = """
    const n = 42;
    const m = -7;
    const price = 1.5;
    const neg = -0.25;
    const x = 0.5d;
    const s = "hi\\n";
    const raw = '''line1
line2''';
    const t = true;
    const nope = none;
    const blob = empty;
    const xs = [1, 2.0, "three"];
    const rec = {a: 1, b: {c: true}};
    on receive(s1, a, c, asst, d) { }
    """
    ast = parse_contract(src)
    consts = dict(ast.constants)
    assert consts["n"] == VInt(42)
    assert consts["m"] == VInt(-7)
    assert consts["price"] == VDec(fp.parse_dec("1.5"))
    assert consts["neg"] == VDec(-fp.parse_dec("0.25"))
    assert consts["x"] == VDbl(0.5)
    assert consts["s"] == VStr("hi\n")
    assert consts["raw"] == VStr("line1\nline2")
    assert consts["t"] == VBool(True)
    assert consts["nope"] == NONE
    assert consts["blob"] == VBytes(b"")
    assert consts["xs"] == VList((VInt(1), VDec(fp.parse_dec("2.0")), VStr("three")))
    assert consts["rec"] == VRec((("a", VInt(1)), ("b", VRec((("c", VBool(True)),)))))


def test_statements_parse():
    src = """
    on receive(s, a, c, asst, d) {
        let x = 1;
        x = x + 1;
        if (x > 1) { log("big"); } else { log("small"); }
        while (x < 10) { x = x + 1; }
        log(str(x));
    }
    """
    ast = parse_contract(src)
    kinds = [type(s) for s in ast.body]
    assert kinds[0] is Let
    assert kinds[2] is If
    assert kinds[3] is While


def test_precedence():
    ast = parse_contract("on receive(s,a,c,asst,d) { let x = 1 + 2 * 3 == 7 && true; }")
    e = ast.body[0].expr
    assert isinstance(e, Binary) and e.op == "&&"
    assert e.left.op == "=="


def test_missing_brace_error_position():
    src = "on receive(s,a,c,asst,d) { let x = 1;"
    with pytest.raises(ParseError) as e:
        parse_contract(src)
    assert e.value.kind == "SyntaxError"
    assert e.value.line == 1
    assert e.value.col == len(src) + 1  # end of input


def test_lex_error_position():
    with pytest.raises(ParseError) as e:
        parse_contract("on receive(s,a,c,asst,d) { let x = `; }")
    assert e.value.kind == "LexError"


def test_unbound_identifier():
    with pytest.raises(ParseError) as e:
        parse_contract("on receive(s,a,c,asst,d) { let x = y; }")
    assert e.value.kind == "UnboundIdentifier"


def test_let_scoping():
    # inner lets go out of scope at the end of their block
    with pytest.raises(ParseError) as e:
        parse_contract(
            "on receive(s,a,c,asst,d) { if (true) { let x = 1; } log(str(x)); }"
        )
    assert e.value.kind == "UnboundIdentifier"


def test_duplicate_handler():
    with pytest.raises(ParseError) as e:
        parse_contract(EMPTY + "\n" + EMPTY)
    assert e.value.kind == "DuplicateHandler"


def test_wrong_param_count():
    with pytest.raises(ParseError):
        parse_contract("on receive(a, b) { }")


def test_duplicate_let_in_block():
    with pytest.raises(ParseError):
        parse_contract("on receive(s,a,c,asst,d) { let x = 1; let x = 2; }")


def test_shadowing_outer_let_is_allowed():
    parse_contract("on receive(s,a,c,asst,d) { let x = 1; if (true) { let x = 2; } }")


def test_reserved_names_cannot_be_bound():
    for src in (
        "on receive(s,a,c,asst,d) { let str = 1; }",
        "on receive(str,a,c,asst,d) { }",
        'const log = "x"; on receive(s,a,c,asst,d) { }',
    ):
        with pytest.raises(ParseError):
            parse_contract(src)


def test_assign_to_constant_rejected():
    with pytest.raises(ParseError) as e:
        parse_contract("const k = 1; on receive(s,a,c,asst,d) { k = 2; }")
    assert e.value.kind == "UnboundIdentifier"


def test_call_arity_checked_at_parse():
    with pytest.raises(ParseError):
        parse_contract("on receive(s,a,c,asst,d) { log(); }")
    with pytest.raises(ParseError):
        parse_contract('on receive(s,a,c,asst,d) { send(1, 2); }')


def test_unknown_function_rejected():
    with pytest.raises(ParseError) as e:
        parse_contract("on receive(s,a,c,asst,d) { frobnicate(1); }")
    assert e.value.kind == "UnboundIdentifier"


def test_exponent_literals_need_d_suffix():
    with pytest.raises(ParseError):
        parse_contract("on receive(s,a,c,asst,d) { let x = 1e5; }")
    ast = parse_contract("on receive(s,a,c,asst,d) { let x = 1e5d; }")
    assert ast.body[0].expr.value == VDbl(1e5)


def test_int_literal_range():
    parse_contract(f"on receive(s,a,c,asst,d) {{ let x = {2**63 - 1}; }}")
    with pytest.raises(ParseError):
        parse_contract(f"on receive(s,a,c,asst,d) {{ let x = {2**63}; }}")


# ---- round trips / snapshot ----

ROUND_TRIP_SOURCES = [
    EMPTY,
    """
    const fee = 0.125;
    const tag = "v1";
    on receive(sender, action, coins, asset, data) {
        let keep = coins / 2;
        if (keep >= fee) {
            send(1, 0, keep - fee, none, empty);
        } else {
            log("dust");
        }
        let i = 0;
        while (i < len(data)) {
            i = i + 1;
        }
        put("count", i);
    }
    """,
    """
    on receive(s, a, c, asst, d) {
        let v = [-1.5d, 2.0d];
        let r = {assetId: "GOLD", amount: 3.25};
        if (asst == none && !(a != 0)) { send(2, a, 0.0, r, d); }
        log(str(v[1]));
        log(str(r.amount));
    }
    """,
]


@pytest.mark.parametrize("src", ROUND_TRIP_SOURCES)
def test_pretty_print_round_trip(src):
    ast = parse_contract(src)
    printed = pretty_print(ast)
    reparsed = parse_contract(printed)
    assert reparsed == ast
    # printing is a fixed point after one round
    assert pretty_print(reparsed) == printed


def test_demo_contract_round_trip_and_snapshot():
    src = (FIXTURES / "contracts" / "score_demo.qs").read_text()
    ast = parse_contract(src)
    printed = pretty_print(ast)
    assert parse_contract(printed) == ast
    snapshot = (FIXTURES / "contracts" / "score_demo.pretty.txt").read_text()
    assert printed == snapshot


def test_parse_is_deterministic():
    src = ROUND_TRIP_SOURCES[1]
    assert parse_contract(src) == parse_contract(src)
