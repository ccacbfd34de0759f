"""Orchestrated reduction semantics over canonical states."""

from __future__ import annotations

import enum
import random
from functools import lru_cache
from dataclasses import dataclass, field
from typing import Optional, Sequence

from .compliance import synth, synth_ud
from .congruence import assemble, canonicalize, split_canonical
from .syntax import (
    DEFAULT_FUNCTIONS,
    MINUS,
    PLUS,
    Accept,
    BranchL,
    Catch,
    ChannelRef,
    EvalError,
    ExternalChoice,
    FunctionTable,
    GroundType,
    Idle,
    IfThenElse,
    InternalChoice,
    IOPrefix,
    LabelPrefix,
    NamedOrch,
    Process,
    RecvValue,
    Request,
    Restrict,
    SelectL,
    SendValue,
    SpecSelectP,
    Sym,
    Throw,
    Value,
    all_channel_names,
    boolean,
    eval_expr,
    fresh_name,
    nat,
    par,
    string,
    subject,
    subst_channel,
    subst_value,
)


class SemanticsMode(enum.Enum):
    PLAIN = "plain"
    PRIORITY_TYPE = "priority-type"
    PRIORITY_PROCESS = "priority-process"


class StaleRedex(RuntimeError):
    pass


class ReplayMismatch(RuntimeError):
    pass


@dataclass(frozen=True)
class Redex:
    rule: str
    channel: Optional[str] = None
    label: Optional[str] = None
    detail: tuple = ()

    def tag(self) -> str:
        return self.rule if self.label is None else f"{self.rule}:{self.label}"


@dataclass(frozen=True)
class TraceStep:
    rule: str
    before: Process
    after: Process
    chosen: Redex


@dataclass(frozen=True)
class ErrorClass:
    kind: str  # OrchSynchError | VacuousOrchError | ComplianceDependentDeadlock | NotAnError
    channel: Optional[str] = None

    def __str__(self):
        return self.kind if self.channel is None else f"{self.kind}({self.channel})"


NOT_AN_ERROR = ErrorClass("NotAnError")


@dataclass
class Trace:
    initial: Process
    steps: list = field(default_factory=list)
    final: Optional[Process] = None
    errors: list = field(default_factory=list)
    step_limit_exceeded: bool = False
    mode: SemanticsMode = SemanticsMode.PLAIN
    cleanup: bool = True

    @property
    def rules(self) -> list:
        return [s.rule for s in self.steps]


LINK_RULE = {
    SemanticsMode.PLAIN: "Link",
    SemanticsMode.PRIORITY_TYPE: "LinkPT",
    SemanticsMode.PRIORITY_PROCESS: "LinkPP",
}


def _link_orch(mode, s, t):
    res = synth(s, t) if mode is SemanticsMode.PRIORITY_TYPE else synth_ud(s, t)
    return res.f if res else None


def _eval_cond(env, e):
    try:
        v = eval_expr(env, e)
    except EvalError:
        return None
    if isinstance(v, Value) and isinstance(v.data, bool):
        return [v.data]
    if isinstance(v, Sym) and v.ground.name == "Bool":
        return [True, False]
    return None


def _proper_redexes(state, mode, env):
    names, orchs, rest = split_canonical(state)
    out = []
    reqs = [(i, p) for i, p in enumerate(rest) if isinstance(p, Request)]
    accs = [(i, p) for i, p in enumerate(rest) if isinstance(p, Accept)]
    for i, r in reqs:
        for j, a in accs:
            if _link_orch(mode, r.ty, a.ty) is not None:
                out.append(Redex(LINK_RULE[mode], None, None, (i, j)))
    for i, p in enumerate(rest):
        if isinstance(p, IfThenElse):
            for b in _eval_cond(env, p.cond) or ():
                out.append(Redex("If", None, "then" if b else "else", (i,)))
    by_chan = {}
    for i, p in enumerate(rest):
        s = subject(p)
        if s is not None and s.pol is not None and s.name in orchs:
            by_chan.setdefault(s.name, []).append(i)
    for k, idx in by_chan.items():
        f = orchs[k]
        for i in idx:
            for j in idx:
                if i == j:
                    continue
                p, q = rest[i], rest[j]
                if p.chan.pol == q.chan.pol:
                    continue
                if isinstance(f, IOPrefix):
                    if isinstance(p, SendValue) and isinstance(q, RecvValue):
                        out.append(Redex("OrchComm", k, None, (i, j)))
                    elif isinstance(p, Throw) and isinstance(q, Catch):
                        out.append(Redex("OrchDeleg", k, None, (i, j)))
                    continue
                if isinstance(f, (LabelPrefix, ExternalChoice)) and isinstance(p, SelectL) and isinstance(q, BranchL):
                    h = dict(f.arms)
                    if p.label in h and p.label in dict(q.arms):
                        out.append(Redex("OrchSel", k, p.label, (i, j)))
                if isinstance(f, (LabelPrefix, InternalChoice)) and isinstance(p, SpecSelectP) and isinstance(q, BranchL):
                    h = dict(f.arms)
                    offered = dict(q.arms)
                    common = [l for l, _ in p.arms if l in h and l in offered]
                    if mode is SemanticsMode.PRIORITY_PROCESS:
                        if common:
                            out.append(Redex("OrchSSelPP", k, common[0], (i, j)))
                    else:
                        for c in common:
                            out.append(Redex("OrchSSel", k, c, (i, j)))
    return out


def _cleanup_redexes(state):
    names, orchs, rest = split_canonical(state)
    out = []
    for i, p in enumerate(rest):
        s = subject(p)
        if s is None or s.pol is not PLUS or not isinstance(orchs.get(s.name), Idle):
            continue
        if isinstance(p, (SendValue, RecvValue, SelectL)):
            out.append(Redex("OrchClnUp1", s.name, None, (i,)))
        elif isinstance(p, BranchL):
            out.extend(Redex("OrchClnUp2", s.name, l, (i,)) for l, _ in p.arms)
        elif isinstance(p, SpecSelectP):
            out.extend(Redex("OrchClnUp3", s.name, l, (i,)) for l, _ in p.arms)
    return out


def enumerate_redexes(state: Process, mode: SemanticsMode = SemanticsMode.PLAIN, cleanup: bool = False,
                      env: FunctionTable = DEFAULT_FUNCTIONS) -> list:
    """Rule instances applicable to a canonical state; clean-up only when nothing else applies."""
    out = _proper_redexes(state, mode, env)
    if cleanup and not out:
        out = _cleanup_redexes(state)
    return out


def _default_value(g: Optional[GroundType]):
    if g is None or g.name == "Nat":
        return nat(0)
    if g.name == "Bool":
        return boolean(False)
    if g.name == "String":
        return string("")
    return Sym("default", (), g)


def apply(state: Process, r: Redex, env: FunctionTable = DEFAULT_FUNCTIONS,
          mode: SemanticsMode = SemanticsMode.PLAIN) -> Process:
    names, orchs, rest = split_canonical(state)
    rest = list(rest)

    def comp(i, cls):
        if i >= len(rest) or not isinstance(rest[i], cls):
            raise StaleRedex(f"{r.tag()} does not match the state")
        return rest[i]

    def done(new_rest, new_orchs=orchs, extra=()):
        return canonicalize(assemble(names, new_orchs, list(new_rest) + list(extra)))

    def replace(mapping):
        return [mapping.get(i, q) for i, q in enumerate(rest) if mapping.get(i, q) is not None]

    rule = r.rule
    if rule in ("Link", "LinkPT", "LinkPP"):
        i, j = r.detail
        req, acc = comp(i, Request), comp(j, Accept)
        f = _link_orch(mode, req.ty, acc.ty)
        if f is None:
            raise StaleRedex("types no longer compliant")
        n = fresh_name("k", all_channel_names(state))
        session = Restrict(n, par(NamedOrch(n, f),
                                  subst_channel(req.body, req.chan, ChannelRef(n, MINUS)),
                                  subst_channel(acc.body, acc.chan, ChannelRef(n, PLUS))))
        return done(replace({i: None, j: None}), extra=[session])
    if rule == "If":
        (i,) = r.detail
        p = comp(i, IfThenElse)
        if r.label not in ("then", "else"):
            raise StaleRedex("bad branch")
        return done(replace({i: p.then if r.label == "then" else p.orelse}))
    if rule in ("OrchClnUp1", "OrchClnUp2", "OrchClnUp3"):
        (i,) = r.detail
        p = rest[i] if i < len(rest) else None
        s = subject(p) if p is not None else None
        if s is None or s.pol is not PLUS or s.name != r.channel or not isinstance(orchs.get(s.name), Idle):
            raise StaleRedex("clean-up target changed")
        if rule == "OrchClnUp1":
            if isinstance(p, RecvValue):
                from .typecheck import infer_variable_ground

                probe = assemble(names, orchs, replace({i: p.cont}))
                try:
                    g = infer_variable_ground(p.var, probe, env)
                except Exception:
                    g = None
                return done(replace({i: subst_value(p.cont, p.var, _default_value(g))}))
            if not isinstance(p, (SendValue, SelectL)):
                raise StaleRedex("not a clean-up prefix")
            return done(replace({i: p.cont}))
        cls = BranchL if rule == "OrchClnUp2" else SpecSelectP
        if not isinstance(p, cls) or r.label not in dict(p.arms):
            raise StaleRedex("clean-up arm missing")
        return done(replace({i: dict(p.arms)[r.label]}))

    k = r.channel
    f = orchs.get(k)
    i, j = r.detail
    new_orchs = dict(orchs)
    if rule == "OrchComm":
        p, q = comp(i, SendValue), comp(j, RecvValue)
        if not isinstance(f, IOPrefix):
            raise StaleRedex("orchestrator not ready for communication")
        v = eval_expr(env, p.e)
        new_orchs[k] = f.cont
        return done(replace({i: p.cont, j: subst_value(q.cont, q.var, v)}), new_orchs)
    if rule == "OrchDeleg":
        p, q = comp(i, Throw), comp(j, Catch)
        if not isinstance(f, IOPrefix):
            raise StaleRedex("orchestrator not ready for delegation")
        new_orchs[k] = f.cont
        return done(replace({i: p.cont, j: subst_channel(q.cont, q.bound, p.sent)}), new_orchs)
    if rule == "OrchSel":
        p, q = comp(i, SelectL), comp(j, BranchL)
        arms = dict(f.arms) if isinstance(f, (LabelPrefix, ExternalChoice)) else {}
        if r.label != p.label or r.label not in arms or r.label not in dict(q.arms):
            raise StaleRedex("selection not enabled")
        new_orchs[k] = arms[r.label]
        return done(replace({i: p.cont, j: dict(q.arms)[r.label]}), new_orchs)
    if rule in ("OrchSSel", "OrchSSelPP"):
        p, q = comp(i, SpecSelectP), comp(j, BranchL)
        arms = dict(f.arms) if isinstance(f, (LabelPrefix, InternalChoice)) else {}
        c = r.label
        if c not in arms or c not in dict(q.arms) or c not in dict(p.arms):
            raise StaleRedex("speculative choice not enabled")
        new_orchs[k] = arms[c]
        return done(replace({i: dict(p.arms)[c], j: dict(q.arms)[c]}), new_orchs)
    raise StaleRedex(f"unknown rule {rule}")


def _kind_of(p):
    s = subject(p)
    return s if s is not None and s.pol is not None else None


def classify_errors(state: Process, cleanup: bool = False, mode: SemanticsMode = SemanticsMode.PLAIN,
                    env: FunctionTable = DEFAULT_FUNCTIONS) -> list:
    """Error predicates of a canonical state; [NotAnError] when none holds."""
    names, orchs, rest = split_canonical(state)
    proper = _proper_redexes(state, mode, env)
    clean = _cleanup_redexes(state) if cleanup else []
    active = proper + clean
    out = []
    for k in sorted(orchs):
        procs = [p for p in rest if (s := _kind_of(p)) is not None and s.name == k]
        if len(procs) >= 2 and not any(r.channel == k for r in active):
            out.append(ErrorClass("OrchSynchError", k))
    for k in sorted(orchs):
        if isinstance(orchs[k], Idle) and any(
                (s := _kind_of(p)) is not None and s.name == k and s.pol is MINUS for p in rest):
            out.append(ErrorClass("VacuousOrchError", k))
    if not active:
        for k in sorted(orchs):
            if k in names and isinstance(orchs[k], Idle) and any(
                    (s := _kind_of(p)) is not None and s.name == k and s.pol is PLUS for p in rest):
                out.append(ErrorClass("ComplianceDependentDeadlock", k))
    return out or [NOT_AN_ERROR]


def is_error(classes) -> bool:
    return any(c.kind in ("OrchSynchError", "VacuousOrchError") for c in classes)


# ---------------------------------------------------------------------------
# schedulers


def _order_key(r: Redex):
    return (r.rule, r.channel or "", r.label or "", r.detail)


class Scheduler:
    def pick(self, redexes: Sequence[Redex], step: int) -> Optional[Redex]:
        raise NotImplementedError


class Deterministic(Scheduler):
    """Always the smallest redex by (rule, channel, label, position)."""

    def pick(self, redexes, step):
        return min(redexes, key=_order_key)


class SeededRandom(Scheduler):
    def __init__(self, seed: int = 0):
        self.seed = seed
        self.rng = random.Random(seed)

    def pick(self, redexes, step):
        return self.rng.choice(sorted(redexes, key=_order_key))


class Replay(Scheduler):
    """Follow a recorded list of ``Rule`` or ``Rule:label`` entries; stop when it runs out."""

    def __init__(self, entries: Sequence[str], then: Optional[Scheduler] = None):
        self.entries = list(entries)
        self.then = then

    def pick(self, redexes, step):
        if step >= len(self.entries):
            return self.then.pick(redexes, step) if self.then else None
        want = self.entries[step]
        rule, _, label = want.partition(":")
        for r in sorted(redexes, key=_order_key):
            if r.rule == rule and (not label or r.label == label):
                return r
        raise ReplayMismatch(f"step {step}: {want} is not applicable; options {[r.tag() for r in redexes]}")


def run(p: Process, mode: SemanticsMode = SemanticsMode.PLAIN, cleanup: bool = True,
        sched: Optional[Scheduler] = None, step_limit: int = 10000,
        env: FunctionTable = DEFAULT_FUNCTIONS) -> Trace:
    sched = sched or Deterministic()
    state = canonicalize(p)
    trace = Trace(initial=state, mode=mode, cleanup=cleanup)
    step = 0
    while True:
        rs = enumerate_redexes(state, mode, cleanup, env)
        if not rs:
            break
        if step >= step_limit:
            trace.step_limit_exceeded = True
            break
        r = sched.pick(rs, step)
        if r is None:
            break
        after = apply(state, r, env, mode)
        trace.steps.append(TraceStep(r.rule, state, after, r))
        state = after
        step += 1
    trace.final = state
    trace.errors = classify_errors(state, cleanup, mode, env)
    return trace


def explore(p: Process, mode: SemanticsMode = SemanticsMode.PLAIN, cleanup: bool = True,
            step_limit: int = 200, branching: int = 4, env: FunctionTable = DEFAULT_FUNCTIONS) -> dict:
    """Reachable canonical states, mapped to their successors.

    At most ``branching`` redexes (in scheduler order) are followed from each
    state and no state deeper than ``step_limit`` is expanded.
    """
    start = canonicalize(p)
    graph = {}

    def successors(s):
        rs = sorted(_enumerate_cached(s, mode, cleanup, env), key=_order_key)[:branching]
        return tuple(_apply_cached(s, r, env, mode if r.rule in LINK_RULE.values() else None) for r in rs)

    frontier = [start]
    depth = 0
    seen = {start}
    while frontier and depth <= step_limit:
        nxt = []
        for s in frontier:
            succ = successors(s) if depth < step_limit else ()
            graph[s] = succ
            for t in succ:
                if t not in seen:
                    seen.add(t)
                    nxt.append(t)
        frontier = nxt
        depth += 1
    for s in frontier:
        graph.setdefault(s, ())
    return graph


# explored state spaces overlap heavily between modes and clean-up settings
@lru_cache(maxsize=1 << 16)
def _enumerate_cached(state, mode, cleanup, env):
    return tuple(enumerate_redexes(state, mode, cleanup, env))


@lru_cache(maxsize=1 << 16)
def _apply_cached(state, r, env, link_mode):
    return apply(state, r, env, link_mode or SemanticsMode.PLAIN)
