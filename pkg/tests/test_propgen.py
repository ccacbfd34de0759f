from hypothesis import given, settings, strategies as st

from orchsess.compliance import FAIL, Ok, check_compliance, synth
from orchsess.propgen import (
    SUITES,
    Failure,
    _size,
    gen_compliant_pair,
    gen_pair,
    gen_runtime,
    gen_type,
    gen_typed_process,
    run_suite,
    shrink,
)
from orchsess.surface import parse_type, pretty
from orchsess.syntax import End, OutValue
from orchsess.typecheck import typecheck


def test_generators_are_seeded():
    assert gen_type(5, 4) == gen_type(5, 4)
    assert gen_pair(9) == gen_pair(9)
    assert gen_typed_process(3, 2) == gen_typed_process(3, 2)
    assert gen_runtime(11) == gen_runtime(11)


@given(st.integers(0, 100_000), st.integers(0, 4))
@settings(max_examples=150, deadline=None)
def test_compliant_pair_has_derivation(seed, depth):
    c, s, f = gen_compliant_pair(seed, depth)
    assert check_compliance(f, c, s)


@given(st.integers(0, 100_000))
@settings(max_examples=60, deadline=None)
def test_typed_processes_close(seed):
    assert typecheck({}, gen_typed_process(seed, 2)) == {}


def test_shrink_reaches_minimum():
    t = parse_type("!Nat.?Bool.&{a: !Nat.end, b: end}")

    def has_output(x):
        return "!" in pretty(x)

    small = shrink(t, has_output)
    assert small == OutValue(small.g, End())
    assert shrink(small, has_output) == small


def test_shrink_never_grows():
    for seed in range(30):
        t = gen_type(seed, 4)
        small = shrink(t, lambda x: True)
        assert _size(small) <= _size(t)
        assert small == End()


def test_shrink_terminates_on_rejecting_predicate():
    t = gen_type(1, 4)
    assert shrink(t, lambda x: False) == t


def test_mutation_is_caught():
    # a synthesizer that always fails must be reported, with a small witness
    res = run_suite("synth", 60, seed=0, synth_fn=lambda c, s: FAIL)
    assert not res.ok
    f = res.failures[0]
    assert isinstance(f, Failure) and f.minimized is not None
    assert _size(f.minimized) <= _size(f.example)
    assert "case" in f.dump()


def test_mutation_wrong_orchestrator():
    def sloppy(c, s):
        r = synth(c, s)
        return Ok(r.f.cont) if r and hasattr(r.f, "cont") else r

    assert not run_suite("synth", 200, seed=1, synth_fn=sloppy).ok


def test_small_suites_pass():
    for name in SUITES:
        res = run_suite(name, 15, seed=3)
        assert res.ok, res.failures[0].dump()


def test_delegation_gap_is_counted():
    res = run_suite("error-freeness", 120, seed=0, minimize=False)
    assert res.ok
    assert res.notes.get("delegation-gap", 0) > 0
