import pytest
from hypothesis import given, settings, strategies as st

from orchsess.congruence import MalformedRuntime, canonicalize, congruent
from orchsess.propgen import gen_runtime, random_rewrites, rewrite_closure
from orchsess.surface import parse_process, pretty

P = parse_process


def test_prenex_form():
    p = P("(new x)(orch x {1} | x^+!<1> | 0) | (new y)(orch y {*.1} | y^-?(z))")
    assert pretty(canonicalize(p)) == "(new c0) (new c1) (orch c0 {1} | orch c1 {*.1} | 0 | c0^+!<1> | c1^-?(z))"


@pytest.mark.parametrize("a, b", [
    ("(new x)(orch x {1} | x^+!<1>)", "(new y)(orch y {1} | y^+!<1>)"),
    ("j!<1> | k!<2>", "k!<2> | j!<1>"),
    ("(j!<1> | k!<2>) | 0", "j!<1> | (k!<2> | 0)"),
    ("(new x)(orch x {1} | x^+!<1>) | j!<2>", "(new x)(orch x {1} | x^+!<1> | j!<2>)"),
    ("request a:(!Nat)(k).k!<1>", "request a:(!Nat)(m).m!<1>"),
])
def test_congruent(a, b):
    assert congruent(P(a), P(b))


@pytest.mark.parametrize("a, b", [
    ("k!<1> | 0", "k!<1>"),  # no unit law for 0
    ("j!<1>", "k!<1>"),      # free names are not renamed
    ("(new x)(orch x {1} | x^+!<1>)", "(new x)(orch x {1} | x^-!<1>)"),
])
def test_not_congruent(a, b):
    assert not congruent(P(a), P(b))


def test_scope_extrusion_avoids_capture():
    # the free x on the right must not be captured by the floated binder
    a = P("(new x)(orch x {1} | x^+!<1>) | x!<2>")
    c = canonicalize(a)
    assert "x!<2>" in pretty(c)


@pytest.mark.parametrize("src", [
    "(new x)(x^+!<1>)",
    "(new x)(orch x {1} | orch x {1})",
])
def test_malformed(src):
    with pytest.raises(MalformedRuntime):
        canonicalize(P(src))


def test_symmetric_names_are_ordered():
    a = P("(new x)(new y)(orch x {1} | orch y {1} | x^+!<1> | y^+!<1>)")
    b = P("(new y)(new x)(orch y {1} | orch x {1} | y^+!<1> | x^+!<1>)")
    assert canonicalize(a) == canonicalize(b)


@given(st.integers(0, 100_000))
@settings(max_examples=120, deadline=None)
def test_canonical_form_idempotent(seed):
    p = gen_runtime(seed)
    c = canonicalize(p)
    assert canonicalize(c) == c


@given(st.integers(0, 100_000))
@settings(max_examples=120, deadline=None)
def test_rewrites_preserve_canonical_form(seed):
    p = gen_runtime(seed, max_depth=2)
    q = random_rewrites(seed, p, steps=5)
    assert congruent(p, q)


def test_closure_is_bounded():
    p = P("(new x)(orch x {1} | x^+!<1> | 0)")
    cl = rewrite_closure(p, depth=2, cap=50)
    assert p in cl and len(cl) <= 50
    assert all(congruent(p, q) for q in cl)
