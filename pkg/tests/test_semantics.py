import pytest

from orchsess.congruence import canonicalize
from orchsess.semantics import (
    Deterministic,
    ErrorClass,
    Replay,
    ReplayMismatch,
    SeededRandom,
    SemanticsMode,
    StaleRedex,
    apply,
    classify_errors,
    enumerate_redexes,
    explore,
    run,
)
from orchsess.surface import parse_process, pretty
from orchsess.typecheck import typecheck

P = parse_process
SIMPLE = "request a:(!Nat)(k).k!<4> | accept a:(?Nat)(k).k?(x)"


def C(src):
    return canonicalize(P(src))


@pytest.mark.parametrize("mode, rule", [
    (SemanticsMode.PLAIN, "Link"),
    (SemanticsMode.PRIORITY_TYPE, "LinkPT"),
    (SemanticsMode.PRIORITY_PROCESS, "LinkPP"),
])
def test_link_rule_per_mode(mode, rule):
    assert [r.rule for r in enumerate_redexes(C(SIMPLE), mode)] == [rule]


def test_simple_session_completes():
    tr = run(P(SIMPLE))
    assert tr.rules == ["Link", "OrchComm"]
    assert pretty(tr.final) == "(new c0) (orch c0 {1} | 0 | 0)"
    assert tr.errors == [ErrorClass("NotAnError")]


def test_incompliant_pair_does_not_link():
    s = C("request a:(!Nat)(k).k!<4> | accept a:(?Bool)(k).k?(x)")
    assert enumerate_redexes(s) == []


def test_spec_select_rules():
    src = ("request a:(spec{x: end, y: end})(k).k spec{x: 0, y: 0} | "
           "accept a:(&{x: end, y: end})(k).k|>{x: 0, y: 0}")
    tr = run(P(src), SemanticsMode.PRIORITY_PROCESS)
    assert tr.rules == ["LinkPP", "OrchSSelPP"]
    assert tr.steps[1].chosen.label == "x"
    # the plain mode offers both speculative options
    after_link = run(P(src), sched=Replay(["Link"])).final
    assert {r.label for r in enumerate_redexes(after_link)} == {"x", "y"}


def test_symbolic_condition_gives_both_branches():
    src = "request a:(!Nat)(k).if coin() then k!<4> else k!<5> | accept a:(?Nat)(k).k?(x)"
    s = run(P(src), sched=Replay(["Link"])).final
    assert sorted(r.tag() for r in enumerate_redexes(s)) == ["If:else", "If:then"]


def test_stale_redex():
    s = C(SIMPLE)
    r = enumerate_redexes(s)[0]
    after = apply(s, r)
    with pytest.raises(StaleRedex):
        apply(after, r)


def test_replay_mismatch():
    with pytest.raises(ReplayMismatch):
        run(P(SIMPLE), sched=Replay(["OrchComm"]))


def test_replay_then_stops_or_continues():
    assert run(P(SIMPLE), sched=Replay(["Link"])).rules == ["Link"]
    assert run(P(SIMPLE), sched=Replay(["Link"], then=Deterministic())).rules == ["Link", "OrchComm"]


def test_step_limit():
    tr = run(P(SIMPLE), step_limit=1)
    assert tr.step_limit_exceeded and tr.rules == ["Link"]


def test_seeded_random_is_reproducible():
    src = "request a:(!Nat)(k).k!<1> | accept a:(?Nat)(k).k?(x) | request b:(!Bool)(j).j!<true> | accept b:(?Bool)(j).j?(y)"
    a = run(P(src), sched=SeededRandom(7)).rules
    assert a == run(P(src), sched=SeededRandom(7)).rules
    assert len(a) == 4


def test_cleanup_only_without_proper_redex(corpus):
    m = corpus("cleanup.ost")
    tr = run(m.main, cleanup=True)
    first = tr.rules.index("OrchClnUp1")
    assert all(not r.startswith("OrchClnUp") for r in tr.rules[:first])
    stuck = run(m.main, cleanup=False)
    assert [e.kind for e in stuck.errors] == ["ComplianceDependentDeadlock"]


@pytest.mark.parametrize("name, kind", [
    ("stuck_outputs.ost", "OrchSynchError"),
    ("stuck_same_end.ost", "OrchSynchError"),
    ("stuck_no_io.ost", "OrchSynchError"),
    ("stuck_vacuous.ost", "VacuousOrchError"),
])
def test_error_classes(corpus, name, kind):
    p = canonicalize(corpus(name).main)
    assert kind in [e.kind for e in classify_errors(p)]


def test_running_example_all_modes(corpus):
    m = corpus("running.ost")
    for mode in SemanticsMode:
        tr = run(m.main, mode, cleanup=True, env=m.functions)
        assert not tr.step_limit_exceeded
        assert all(e.kind in ("NotAnError", "ComplianceDependentDeadlock") for e in tr.errors)


def test_reduction_preserves_typing(corpus):
    m = corpus("running.ost")
    states = explore(m.main, SemanticsMode.PLAIN, cleanup=True, step_limit=40, branching=2, env=m.functions)
    assert len(states) > 10
    for s in states:
        assert typecheck({}, s, functions=m.functions) == {}


def test_delegation_gap():
    # a session typed end links to a server that later delegates; with no
    # clean-up rule for throw, the delegation can never fire
    src = ("request a:(end)(k).0 | accept b:(!(!Nat.end-).end)(k).request c:(!Nat)(j).k!<<j>>"
           " | accept d:(?Nat)(m).m?(x)")
    p = P(src)
    assert typecheck({}, p) == {}
    tr = run(p, cleanup=True)
    kinds = [e.kind for e in tr.errors]
    assert "ComplianceDependentDeadlock" in kinds
