import pytest
from hypothesis import given, settings, strategies as st

from orchsess.propgen import gen_typed_process
from orchsess.semantics import SemanticsMode
from orchsess.surface import parse_process, parse_type
from orchsess.syntax import MINUS, PLUS, End
from orchsess.typecheck import (
    ErrorKind,
    SessionTypeError,
    format_typing,
    is_completed,
    typecheck,
    typing_compose,
)


def tc(src, mode=None):
    return typecheck({}, parse_process(src), mode)


def kind_of(src, mode=None):
    with pytest.raises(SessionTypeError) as ei:
        tc(src, mode)
    return ei.value


@pytest.mark.parametrize("src", [
    "request a:(!Nat)(k).k!<4>",
    "accept a:(?Nat.!Nat)(k).k?(x).k!<succ(x)>",
    "(new k)(orch k {*.1} | k^+!<4> | k^-?(x))",
    "request a:(!(!Nat.end-).end)(k).request b:(!Nat)(j).k!<<j>>",
    "accept a:(?(!Nat.end-).end)(k).k?((j)).j!<1>",
    "request a:(&{a: end})(k).k|>{a: 0, b: k!<3>}",  # extra process arms are never taken
])
def test_closed_terms_type_to_empty(src):
    assert tc(src) == {}


def test_open_ends_appear_in_typing():
    d = tc("k^+!<4>")
    assert d == {("k", PLUS): parse_type("!Nat")}
    assert format_typing(d) == "k^+: !Nat.end"


def test_unresolved_ground_is_shown():
    assert format_typing(tc("k^+!<4> | k^-?(x)")) == "k^+: !Nat.end, k^-: ?'g.end"


@pytest.mark.parametrize("src, kind, reason", [
    ("request a:(!Nat)(k).k!<true>", ErrorKind.GROUND_MISMATCH, "ground"),
    ("request a:(end)(k).k!<1>", ErrorKind.INCOMPLETE_TYPING, "shape"),
    ("k^+!<1> | k^+!<2>", ErrorKind.POLARITY_CLASH, ""),
    ("request a:(&{a: end, b: end})(k).k|>{a: 0}", ErrorKind.LABEL_MISMATCH, "labels"),
    ("request a:(+{a: end})(k).k<|b", ErrorKind.LABEL_MISMATCH, "labels"),
    ("request a:(!Nat)(k).if true then k!<1> else 0", ErrorKind.BRANCH_DISAGREEMENT, "shape"),
    ("request a:(!Nat)(k).if 3 then k!<1> else k!<2>", ErrorKind.GROUND_MISMATCH, ""),
    ("k!<4>", ErrorKind.UNBOUND_CHANNEL, ""),
    ("(new k)(k^+!<4> | k^-?(x))", ErrorKind.ARITY_OR_SHAPE, ""),
    ("(new k)(orch k {1} | orch k {1})", ErrorKind.ARITY_OR_SHAPE, ""),
    ("request a:(!Nat)(k).k!<foo(1)>", ErrorKind.ARITY_OR_SHAPE, ""),
    ("request a:(!(!Nat.end-).end)(k).request b:(!Nat)(j).k!<<j>>.j!<1>", ErrorKind.TYPING_OVERLAP, ""),
])
def test_rejections(src, kind, reason):
    e = kind_of(src)
    assert e.kind is kind
    assert e.reason == reason


def test_compliance_failure_carries_types():
    e = kind_of("(new k)(orch k {*.1} | k^+!<4> | k^-!<5>)")
    assert e.kind is ErrorKind.COMPLIANCE_FAILURE
    assert e.reason == "same-direction"


def test_error_location_is_a_path():
    e = kind_of("request a:(!Nat)(k).if 3 then k!<1> else k!<2>")
    assert e.location == (0,)


def test_spec_order_only_matters_in_priority_process_mode():
    src = "request a:(spec<<x: end, y: end>>)(k).k spec<<y: 0, x: 0>>"
    assert tc(src) == {}
    assert tc(src, SemanticsMode.PRIORITY_TYPE) == {}
    e = kind_of(src, SemanticsMode.PRIORITY_PROCESS)
    assert e.kind is ErrorKind.LABEL_MISMATCH and e.reason == "order"
    assert tc("request a:(spec<<x: end, y: end>>)(k).k spec<<x: 0, y: 0>>",
              SemanticsMode.PRIORITY_PROCESS) == {}


def test_typing_compose():
    a = {("k", PLUS): End()}
    b = {("k", MINUS): End()}
    assert typing_compose(a, b) == {**a, **b}
    with pytest.raises(SessionTypeError):
        typing_compose(a, a)
    assert is_completed(typing_compose(a, b))


@given(st.integers(0, 5000), st.integers(1, 2))
@settings(max_examples=80, deadline=None)
def test_generated_processes_are_typed(seed, sessions):
    p = gen_typed_process(seed, sessions=sessions, max_depth=3)
    assert typecheck({}, p) == {}
