import pytest
from hypothesis import given, settings, strategies as st

from orchsess.propgen import gen_orch, gen_runtime, gen_type, gen_typed_process
from orchsess.surface import (
    ParseError,
    parse_expr,
    parse_module,
    parse_orch,
    parse_process,
    parse_type,
    pretty,
    tokenize,
)


@pytest.mark.parametrize("src", [
    "end",
    "!Nat.?Bool.end",
    "spec<<a: end, b: ?(!Nat.end+).end>>",
    "&{a: +{x: end}, b: spec{y: !String.end}}",
])
def test_type_roundtrip(src):
    assert parse_type(pretty(parse_type(src))) == parse_type(src)


@pytest.mark.parametrize("src", ["1", "*.1", "a.*.1 (+) b.1", "a.1 + b.(c.1 + d.1)"])
def test_orch_roundtrip(src):
    f = parse_orch(src)
    assert parse_orch(pretty(f)) == f


def test_process_forms():
    for src in [
        "0",
        "k^+!<sym amount(\"x\") as Amount>",
        "request a:(!Nat)(k).if coin() then k!<1> else k!<2>",
        "(new k)(orch k {*.1} | k^+!<4> | k^-?(x))",
        "accept a:(?(!Nat.end-).end)(k).k?((j)).j!<1>",
        "k spec<<a: 0, b: 0>>",
    ]:
        p = parse_process(src)
        assert parse_process(pretty(p)) == p


def test_expressions():
    assert pretty(parse_expr('amount("x")')) == 'amount("x")'
    assert pretty(parse_expr("3 as CcNumber")) == "3 as CcNumber"


@pytest.mark.parametrize("src, where, msg", [
    ("!Nat.", "1:6", "expected a session type"),
    ("&{a: end, a: end}", "1:11", "duplicate label"),
    ("?Foo", "1:2", "unknown ground type"),
    ("+{}", "1:3", "expected label"),
])
def test_type_errors_have_positions(src, where, msg):
    with pytest.raises(ParseError) as ei:
        parse_type(src)
    assert f"<input>:{where}:" in str(ei.value)
    assert msg in str(ei.value)


def test_trailing_input():
    with pytest.raises(ParseError):
        parse_process("k!<1> junk")


def test_module_headers_and_spans():
    src = "# demo\nlet S = !Nat\nlet f = *.1\nlet P = k^+!<1>\nP | P\n"
    m = parse_module(src, "x.ost", "proc")
    assert set(m.types) == {"S"} and set(m.orchs) == {"f"} and set(m.procs) == {"P"}
    assert pretty(m.main) == "k^+!<1> | k^+!<1>"
    assert str(m.span_of(m.main)) == "x.ost:5:1"
    # let-bound terms point back at their definition
    assert str(m.locate((1,))) == "x.ost:4:9"


def test_module_functions():
    m = parse_module("fun f(Nat): Bool\nrequest a:(!Bool)(k).k!<f(1)>", "y.ost", "proc")
    assert m.functions.signature("f") is not None


def test_tokenize_comments():
    toks = tokenize("end # trailing")
    assert [t.text for t in toks if t.text] == ["end"]


@given(st.integers(0, 100_000))
@settings(max_examples=100, deadline=None)
def test_generated_roundtrip(seed):
    t = gen_type(seed, 4)
    assert parse_type(pretty(t)) == t
    f = gen_orch(seed, 4)
    assert parse_orch(pretty(f)) == f
    for p in (gen_runtime(seed), gen_typed_process(seed)):
        assert parse_process(pretty(p)) == p
