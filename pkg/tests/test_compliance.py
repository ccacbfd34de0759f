import pytest
from hypothesis import given, settings, strategies as st

from orchsess.compliance import (
    check_compliance,
    is_deterministic,
    oracle_compliant,
    orch_equal,
    synth,
    synth_ud,
)
from orchsess.propgen import gen_compliant_pair, gen_pair
from orchsess.surface import parse_orch, parse_type

T = parse_type
O = parse_orch


@pytest.mark.parametrize("client, server, orch", [
    ("end", "end", "1"),
    ("end", "?Nat", "1"),
    ("!Nat", "?Nat", "*.1"),
    ("?Nat", "!Nat", "*.1"),
    ("+{a: end}", "&{a: end, b: end}", "a.1"),
    ("&{a: end, b: end}", "+{a: end, b: end}", "a.1 + b.1"),
    ("spec{a: end, b: end}", "&{b: end, c: end}", "b.1"),
    ("spec{a: end, b: end}", "&{a: end, b: end}", "a.1 (+) b.1"),
])
def test_valid(client, server, orch):
    assert check_compliance(O(orch), T(client), T(server))


@pytest.mark.parametrize("client, server, orch", [
    ("!Nat", "end", "1"),           # client still acts
    ("!Nat", "!Nat", "*.1"),        # same direction
    ("!Nat", "?Bool", "*.1"),       # ground mismatch
    ("+{a: end, b: end}", "&{a: end}", "a.1 + b.1"),  # server lacks b
    ("+{a: end, b: end}", "&{a: end, b: end}", "a.1"),  # every selection must be enabled
    ("spec{a: end}", "&{b: end}", "b.1"),
])
def test_invalid(client, server, orch):
    assert not check_compliance(O(orch), T(client), T(server))


def test_synth_fails_on_disjoint_labels():
    assert not synth(T("spec{a: end}"), T("&{b: end}"))
    assert not oracle_compliant(T("spec{a: end}"), T("&{b: end}"))


def test_priority_picks_first_safe():
    c = T("spec<<x: !Nat, y: end>>")
    s = T("&{x: ?Bool, y: end}")
    assert orch_equal(synth(c, s).f, O("y.1"))
    c2 = T("spec<<y: end, x: end>>")
    assert orch_equal(synth(c2, T("&{x: end, y: end}")).f, O("y.1"))


def test_synth_ud_keeps_all_safe_arms():
    c = T("spec{x: end, y: end, z: !Nat}")
    s = T("&{x: end, y: end, z: end}")
    assert orch_equal(synth_ud(c, s).f, O("x.1 (+) y.1"))
    assert not is_deterministic(synth_ud(c, s).f)
    assert is_deterministic(synth(c, s).f)


def test_orch_equal_ignores_arm_order():
    assert orch_equal(O("a.1 + b.1"), O("b.1 + a.1"))
    assert not orch_equal(O("a.1 + b.1"), O("a.1 (+) b.1"))


@given(st.integers(0, 10_000))
@settings(max_examples=150, deadline=None)
def test_generated_pairs_are_compliant(seed):
    c, s, f = gen_compliant_pair(seed, max_depth=3)
    # the generator builds a derivation alongside the pair
    assert check_compliance(f, c, s)
    assert oracle_compliant(c, s)
    res = synth(c, s)
    assert res and check_compliance(res.f, c, s)


@given(st.integers(0, 10_000))
@settings(max_examples=150, deadline=None)
def test_synth_agrees_with_oracle(seed):
    c, s = gen_pair(seed, max_depth=4)
    ok = oracle_compliant(c, s)
    assert bool(synth(c, s)) == ok
    assert bool(synth_ud(c, s)) == ok
    if ok:
        assert check_compliance(synth_ud(c, s).f, c, s)
