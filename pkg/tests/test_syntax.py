import pytest
from hypothesis import given, settings, strategies as st

from orchsess.surface import parse_process
from orchsess.syntax import (
    DEFAULT_FUNCTIONS,
    MINUS,
    NAT,
    PLUS,
    Apply,
    ArityMismatch,
    Branch,
    End,
    FunctionTable,
    GroundType,
    Literal,
    OutValue,
    Sym,
    UnboundVariable,
    UnknownFunction,
    Value,
    Var,
    WellFormednessError,
    eval_expr,
    free_channels,
    nat,
    par,
    par_components,
    rename_channel,
    rename_channels,
    string,
)


def test_polarity_dual():
    assert PLUS.dual is MINUS and MINUS.dual is PLUS


def test_duplicate_labels_rejected():
    with pytest.raises(WellFormednessError):
        Branch((("a", End()), ("a", End())))


def test_empty_arms_rejected():
    with pytest.raises(WellFormednessError):
        Branch(())


def test_unknown_ground_type():
    with pytest.raises(WellFormednessError):
        GroundType("Float")


@pytest.mark.parametrize("data", [-1, True, "3"])
def test_nat_payload_checked(data):
    with pytest.raises(WellFormednessError):
        Value(NAT, data)


def test_structural_equality_and_hash():
    a = OutValue(NAT, Branch((("x", End()),)))
    b = OutValue(NAT, Branch((("x", End()),)))
    assert a == b and hash(a) == hash(b)
    assert len({a, b}) == 1


def test_eval_builtin_and_symbolic():
    assert eval_expr(DEFAULT_FUNCTIONS, Apply("succ", (Literal(nat(2)),))) == nat(3)
    v = eval_expr(DEFAULT_FUNCTIONS, Apply("url", (Literal(string("x")),)))
    assert isinstance(v, Sym) and v.ground.name == "Url"


def test_eval_errors():
    with pytest.raises(UnboundVariable):
        eval_expr(DEFAULT_FUNCTIONS, Var("x"))
    with pytest.raises(UnknownFunction):
        eval_expr(DEFAULT_FUNCTIONS, Apply("nope"))
    with pytest.raises(ArityMismatch):
        eval_expr(DEFAULT_FUNCTIONS, Apply("succ"))


def test_function_table_lookup():
    env = DEFAULT_FUNCTIONS.with_table("available", {(string("m"),): Value(GroundType("Bool"), True)})
    assert env.call("available", (string("m"),)).data is True
    assert isinstance(env.call("available", (string("z"),)), Sym)
    # the base table is untouched
    assert isinstance(DEFAULT_FUNCTIONS.call("available", (string("m"),)), Sym)
    assert FunctionTable().signature("succ") is None


def test_free_channels_respects_binders():
    p = parse_process("request a:(!Nat)(k).k!<1> | j!<2>")
    assert free_channels(p) == {"j"}


def test_rename_is_capture_avoiding():
    p = parse_process("j!<1>.request a:(!Nat)(k).k!<2>.j!<3>")
    q = rename_channel(p, "j", "k")
    assert free_channels(q) == {"k"}
    # the inner session still talks on its own binder
    assert "k" not in free_channels(q.cont.body) - {"k"}
    assert q.cont.chan != "k"


def test_rename_simultaneous_swap():
    p = parse_process("a!<1> | b!<2>")
    q = rename_channels(p, {"a": "b", "b": "a"})
    assert q == parse_process("b!<1> | a!<2>")


def test_par_flattening():
    p = parse_process("0 | (0 | k!<1>)")
    assert len(par_components(p)) == 3
    assert par() == parse_process("0")


@given(st.lists(st.sampled_from(["a", "b", "c", "d"]), min_size=1, max_size=6))
@settings(max_examples=50, deadline=None)
def test_rename_roundtrip(names):
    p = par(*[parse_process(f"{n}!<{i}>") for i, n in enumerate(names)])
    q = rename_channels(rename_channels(p, {"a": "z"}), {"z": "a"})
    assert q == p
