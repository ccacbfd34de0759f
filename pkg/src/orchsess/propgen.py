"""Random generators, shrinking, and the property suites run by ``orchsess fuzz``.

Compliant pairs are built top-down from the compliance clauses, and typed
processes follow their types, so nothing is generated and then filtered.
"""

from __future__ import annotations

import dataclasses
import random
from dataclasses import dataclass, field
from typing import Callable, Optional

from .compliance import (
    DepthExceeded,
    check_compliance,
    is_deterministic,
    oracle_compliant,
    synth,
    synth_ud,
)
from .congruence import MalformedRuntime, canonicalize, congruent
from .semantics import (
    SemanticsMode,
    SeededRandom,
    classify_errors,
    enumerate_redexes,
    explore,
    run,
)
from .surface import parse_orch, parse_process, parse_type, pretty
from .syntax import (
    END,
    IDLE,
    INACT,
    MINUS,
    PLUS,
    Accept,
    Apply,
    Branch,
    BranchL,
    Catch,
    ChannelRef,
    End,
    ExternalChoice,
    GroundType,
    IfThenElse,
    InSession,
    InternalChoice,
    InValue,
    IOPrefix,
    LabelPrefix,
    Literal,
    NamedOrch,
    OutSession,
    OutValue,
    Par,
    Request,
    Restrict,
    Select,
    SelectL,
    SendValue,
    SpecSelect,
    SpecSelectP,
    Throw,
    Var,
    WellFormednessError,
    RecvValue,
    boolean,
    children,
    free_channels,
    nat,
    par,
    rename_channel,
    string,
    _rebuild,
)
from .typecheck import SessionTypeError, typecheck

GROUNDS = ("Nat", "Bool", "String")
LABELS = ("a", "b", "c", "d", "e")
_EXTRA_LABELS = ("x", "y", "z")


def _rng(seed) -> random.Random:
    return seed if isinstance(seed, random.Random) else random.Random(seed)


def _arm_labels(rng, pool=LABELS):
    return rng.sample(pool, rng.randint(1, 3))


# ---------------------------------------------------------------------------
# types


def gen_type(seed, max_depth: int = 3, allow_spec: bool = True, prioritized: bool = False,
             sessions: bool = True):
    """A random well-formed session type of depth at most ``max_depth``."""
    return _type(_rng(seed), max_depth, allow_spec, prioritized, sessions)


def _type(rng, d, allow_spec, prioritized, sessions):
    if d <= 0:
        return END
    kinds = ["end", "in", "out", "in", "out", "branch", "select"]
    if allow_spec:
        kinds.append("spec")
    if sessions and d >= 2:
        kinds += ["sin", "sout"]
    k = rng.choice(kinds)
    sub = lambda: _type(rng, d - 1, allow_spec, prioritized, sessions)  # noqa: E731
    if k == "end":
        return END
    if k in ("in", "out"):
        g = GroundType(rng.choice(GROUNDS))
        return (InValue if k == "in" else OutValue)(g, sub())
    if k in ("sin", "sout"):
        carried = _type(rng, min(2, d - 1), allow_spec, prioritized, False)
        pol = rng.choice((PLUS, MINUS))
        return (InSession if k == "sin" else OutSession)(carried, pol, sub())
    arms = tuple((l, sub()) for l in _arm_labels(rng))
    if k == "branch":
        return Branch(arms)
    if k == "select":
        return Select(arms)
    return SpecSelect(arms, prioritized)


# ---------------------------------------------------------------------------
# compliant pairs, built along a derivation


def _choice(kind, arms):
    arms = tuple(arms)
    if len(arms) == 1:
        return LabelPrefix(*arms[0])
    return kind(arms)


def _server_for(rng, c, pad_sessions=True):
    """A server and an orchestrator for client ``c``."""
    if isinstance(c, End):
        return _type(rng, rng.randint(0, 2), True, False, pad_sessions), IDLE
    if isinstance(c, (InValue, OutValue)):
        s, f = _server_for(rng, c.cont, pad_sessions)
        return (OutValue if isinstance(c, InValue) else InValue)(c.g, s), IOPrefix(f)
    if isinstance(c, (InSession, OutSession)):
        s, f = _server_for(rng, c.cont, pad_sessions)
        cls = OutSession if isinstance(c, InSession) else InSession
        return cls(c.carried, c.pol, s), IOPrefix(f)
    if isinstance(c, Select):
        arms, fs = [], []
        for l, a in c.arms:
            s, f = _server_for(rng, a, pad_sessions)
            arms.append((l, s))
            fs.append((l, f))
        arms += _padding_arms(rng, arms)
        rng.shuffle(arms)
        return Branch(tuple(arms)), _choice(ExternalChoice, fs)
    if isinstance(c, Branch):
        chosen = rng.sample(list(c.arms), rng.randint(1, len(c.arms)))
        arms, fs = [], []
        for l, a in chosen:
            s, f = _server_for(rng, a, pad_sessions)
            arms.append((l, s))
            fs.append((l, f))
        return Select(tuple(arms)), _choice(ExternalChoice, fs)
    if isinstance(c, SpecSelect):
        h = set(rng.sample([l for l, _ in c.arms], rng.randint(1, len(c.arms))))
        arms, fs = [], []
        for l, a in c.arms:
            if l in h:
                s, f = _server_for(rng, a, pad_sessions)
                arms.append((l, s))
                fs.append((l, f))
            elif rng.random() < 0.5:
                arms.append((l, _type(rng, 1, False, False, False)))
        arms += _padding_arms(rng, arms)
        rng.shuffle(arms)
        return Branch(tuple(arms)), _choice(InternalChoice, fs)
    raise TypeError(c)


def _has_sessions(t) -> bool:
    if isinstance(t, (InSession, OutSession)):
        return True
    if isinstance(t, (InValue, OutValue)):
        return _has_sessions(t.cont)
    if isinstance(t, (Branch, Select, SpecSelect)):
        return any(_has_sessions(a) for _, a in t.arms)
    return False


def _client_for(rng, s, pad_sessions=True):
    """A client and an orchestrator for server ``s``."""
    if isinstance(s, End):
        return END, IDLE
    # stopping early leaves the rest of s to clean-up, which cannot move sessions
    if rng.random() < 0.12 and (pad_sessions or not _has_sessions(s)):
        return END, IDLE
    if isinstance(s, (InValue, OutValue)):
        c, f = _client_for(rng, s.cont, pad_sessions)
        return (OutValue if isinstance(s, InValue) else InValue)(s.g, c), IOPrefix(f)
    if isinstance(s, (InSession, OutSession)):
        c, f = _client_for(rng, s.cont, pad_sessions)
        cls = OutSession if isinstance(s, InSession) else InSession
        return cls(s.carried, s.pol, c), IOPrefix(f)
    if isinstance(s, Branch):
        chosen = rng.sample(list(s.arms), rng.randint(1, len(s.arms)))
        arms, fs = [], []
        for l, a in chosen:
            c, f = _client_for(rng, a, pad_sessions)
            arms.append((l, c))
            fs.append((l, f))
        if rng.random() < 0.5:
            return Select(tuple(arms)), _choice(ExternalChoice, fs)
        arms += _padding_arms(rng, arms)
        rng.shuffle(arms)
        return SpecSelect(tuple(arms), rng.random() < 0.5), _choice(InternalChoice, fs)
    if isinstance(s, Select):
        arms, fs = [], []
        for l, a in s.arms:
            c, f = _client_for(rng, a, pad_sessions)
            arms.append((l, c))
            fs.append((l, f))
        arms += _padding_arms(rng, arms)
        rng.shuffle(arms)
        return Branch(tuple(arms)), _choice(ExternalChoice, fs)
    if isinstance(s, SpecSelect):
        h = rng.sample(list(s.arms), rng.randint(1, len(s.arms)))
        arms, fs = [], []
        for l, a in h:
            c, f = _client_for(rng, a, pad_sessions)
            arms.append((l, c))
            fs.append((l, f))
        arms += _padding_arms(rng, arms)
        rng.shuffle(arms)
        return Branch(tuple(arms)), _choice(InternalChoice, fs)
    raise TypeError(s)


def _padding_arms(rng, arms):
    used = {l for l, _ in arms}
    free = [l for l in _EXTRA_LABELS if l not in used]
    n = rng.choice((0, 0, 1))
    return [(l, _type(rng, 1, False, False, False)) for l in rng.sample(free, n)]


def gen_compliant_pair(seed, max_depth: int = 3, pad_sessions: bool = True):
    """(client, server, f) with ``f : client ⊣ server``."""
    rng = _rng(seed)
    if max_depth <= 0:
        return END, _type(rng, rng.randint(0, 2), True, False, pad_sessions), IDLE
    if rng.random() < 0.5:
        client = _type(rng, max_depth, True, rng.random() < 0.3, True)
        server, f = _server_for(rng, client, pad_sessions)
    else:
        server = _type(rng, max_depth, True, rng.random() < 0.3, True)
        client, f = _client_for(rng, server, pad_sessions)
    return client, server, f


def mutate_type(rng, t):
    """A small random edit of ``t``; often breaks compliance."""
    spots = list(_type_positions(t))
    path = rng.choice(spots)
    return _edit_type(rng, t, path)


def _type_positions(t, path=()):
    yield path
    if isinstance(t, (InValue, OutValue, InSession, OutSession)):
        yield from _type_positions(t.cont, path + ("cont",))
    elif isinstance(t, (Branch, Select, SpecSelect)):
        for i, (_, a) in enumerate(t.arms):
            yield from _type_positions(a, path + (i,))


def _edit_type(rng, t, path):
    if path:
        step, rest = path[0], path[1:]
        if step == "cont":
            return dataclasses.replace(t, cont=_edit_type(rng, t.cont, rest))
        arms = list(t.arms)
        l, a = arms[step]
        arms[step] = (l, _edit_type(rng, a, rest))
        return dataclasses.replace(t, arms=tuple(arms))
    if isinstance(t, (InValue, OutValue)):
        op = rng.choice(("ground", "flip", "end"))
        if op == "ground":
            return dataclasses.replace(t, g=GroundType(rng.choice([g for g in GROUNDS if g != t.g.name])))
        if op == "flip":
            return (OutValue if isinstance(t, InValue) else InValue)(t.g, t.cont)
        return END
    if isinstance(t, (Branch, Select, SpecSelect)):
        op = rng.choice(("drop", "add", "kind"))
        if op == "drop" and len(t.arms) > 1:
            return dataclasses.replace(t, arms=t.arms[:-1])
        if op == "add":
            used = {l for l, _ in t.arms}
            free = [l for l in LABELS + _EXTRA_LABELS if l not in used]
            return dataclasses.replace(t, arms=t.arms + ((rng.choice(free), END),))
        kinds = [k for k in (Branch, Select) if not isinstance(t, k)]
        return rng.choice(kinds)(t.arms)
    if isinstance(t, (InSession, OutSession)):
        return dataclasses.replace(t, pol=t.pol.dual)
    return OutValue(GroundType(rng.choice(GROUNDS)), END)


def gen_pair(seed, max_depth: int = 5):
    """A pair for the synthesis suite: compliant, near-miss, or unrelated."""
    rng = _rng(seed)
    roll = rng.random()
    c, s, _ = gen_compliant_pair(rng, rng.randint(0, max_depth))
    if roll < 0.4:
        return c, s
    if roll < 0.75:
        if rng.random() < 0.5:
            return mutate_type(rng, c), s
        return c, mutate_type(rng, s)
    return gen_type(rng, rng.randint(0, max_depth)), gen_type(rng, rng.randint(0, max_depth))


def gen_orch(seed, max_depth: int = 3):
    rng = _rng(seed)

    def go(d):
        if d <= 0 or rng.random() < 0.2:
            return IDLE
        k = rng.choice(("io", "io", "label", "ext", "int"))
        if k == "io":
            return IOPrefix(go(d - 1))
        if k == "label":
            return LabelPrefix(rng.choice(LABELS), go(d - 1))
        arms = tuple((l, go(d - 1)) for l in rng.sample(LABELS, rng.randint(2, 3)))
        return (ExternalChoice if k == "ext" else InternalChoice)(arms)

    return go(max_depth)


# ---------------------------------------------------------------------------
# typed processes


class _ProcGen:
    def __init__(self, rng, ifs=2):
        self.rng = rng
        self.n = 0
        self.ifs = ifs
        self.extras = []

    def fresh(self, stem):
        self.n += 1
        return f"{stem}{self.n}"

    def expr(self, g, scope):
        rng = self.rng
        vars_ = [x for x, h in scope if h == g.name]
        if vars_ and rng.random() < 0.5:
            e = Var(rng.choice(vars_))
        elif g.name == "Nat":
            e = Literal(nat(rng.randint(0, 9)))
        elif g.name == "Bool":
            e = Literal(boolean(rng.random() < 0.5))
        else:
            e = Literal(string(rng.choice(("", "a", "hi"))))
        if g.name == "Nat" and rng.random() < 0.2:
            e = Apply("succ", (e,))
        elif g.name == "Bool" and rng.random() < 0.2:
            e = Apply("neg", (e,))
        return e

    def cond(self, scope):
        if self.rng.random() < 0.3:
            return Apply("coin", ())
        return self.expr(GroundType("Bool"), scope)

    def body(self, obls, scope):
        rng = self.rng
        live = [i for i, (_, t) in enumerate(obls) if not isinstance(t, End)]
        if not live:
            return INACT
        if self.ifs > 0 and rng.random() < 0.12:
            self.ifs -= 1
            return IfThenElse(self.cond(scope), self.body(obls, scope), self.body(obls, scope))
        i = rng.choice(live)
        c, t = obls[i]
        ref = ChannelRef(c)

        def then(t2, extra=(), more_scope=()):
            o = list(obls)
            o[i] = (c, t2)
            o.extend(extra)
            return self.body(tuple(o), scope + list(more_scope))

        if isinstance(t, OutValue):
            return SendValue(ref, self.expr(t.g, scope), then(t.cont))
        if isinstance(t, InValue):
            x = self.fresh("x")
            return RecvValue(ref, x, then(t.cont, more_scope=[(x, t.g.name)]))
        if isinstance(t, Select):
            l, a = rng.choice(t.arms)
            return SelectL(ref, l, then(a))
        if isinstance(t, Branch):
            return BranchL(ref, tuple((l, then(a)) for l, a in t.arms))
        if isinstance(t, SpecSelect):
            arms = [(l, then(a)) for l, a in t.arms]
            if rng.random() < 0.3:
                rng.shuffle(arms)
            return SpecSelectP(ref, tuple(arms), t.prioritized)
        if isinstance(t, InSession):
            y = self.fresh("y")
            return Catch(ref, y, then(t.cont, extra=[(y, t.carried)]))
        if isinstance(t, OutSession):
            j = self.fresh("j")
            port = self.fresh("p")
            throw = Throw(ref, ChannelRef(j), then(t.cont))
            m = self.fresh("m")
            if t.pol is MINUS:
                partner, _ = _server_for(rng, t.carried, pad_sessions=False)
                self.extras.append(Accept(port, partner, m, self.body(((m, partner),), [])))
                return Request(port, t.carried, j, throw)
            partner, _ = _client_for(rng, t.carried, pad_sessions=False)
            self.extras.append(Request(port, partner, m, self.body(((m, partner),), [])))
            return Accept(port, t.carried, j, throw)
        raise TypeError(t)


def gen_typed_process(seed, sessions: int = 1, max_depth: int = 3):
    """A closed user-defined process that types to the empty typing."""
    rng = _rng(seed)
    gen = _ProcGen(rng)
    comps = []
    for i in range(sessions):
        c, s, _ = gen_compliant_pair(rng, rng.randint(1, max(1, max_depth)), pad_sessions=False)
        port = f"a{i}"
        k1, k2 = gen.fresh("k"), gen.fresh("k")
        comps.append(Request(port, c, k1, gen.body(((k1, c),), [])))
        comps.append(Accept(port, s, k2, gen.body(((k2, s),), [])))
    comps += gen.extras
    rng.shuffle(comps)
    return par(*comps)


# ---------------------------------------------------------------------------
# run-time terms and the congruence rewrite oracle


def gen_runtime(seed, max_depth: int = 3):
    """A well-formed run-time process with nested restrictions (not necessarily typable)."""
    rng = _rng(seed)
    counter = [0]

    def fresh():
        counter[0] += 1
        return f"r{counter[0]}"

    def leaf(chans):
        if not chans or rng.random() < 0.2:
            return INACT
        k = rng.choice(chans)
        ref = ChannelRef(k, rng.choice((PLUS, MINUS)))
        kind = rng.choice(("send", "recv", "sel", "br"))
        if kind == "send":
            return SendValue(ref, Literal(nat(rng.randint(0, 3))), leaf(chans) if rng.random() < 0.3 else INACT)
        if kind == "recv":
            return RecvValue(ref, "x", INACT)
        if kind == "sel":
            return SelectL(ref, rng.choice(LABELS), INACT)
        return BranchL(ref, tuple((l, leaf(chans) if rng.random() < 0.3 else INACT)
                                  for l in rng.sample(LABELS, rng.randint(1, 2))))

    def node(d, chans):
        r = rng.random()
        if d <= 0 or r < 0.3:
            return leaf(chans)
        if r < 0.55:
            return Par(node(d - 1, chans), node(d - 1, chans))
        k = fresh()
        inner = chans + [k]
        parts = [NamedOrch(k, gen_orch(rng, 2))] + [node(d - 1, inner) for _ in range(rng.randint(1, 3))]
        rng.shuffle(parts)
        return Restrict(k, _random_assoc(rng, parts))

    return node(max_depth, [])


def _random_assoc(rng, parts):
    if len(parts) == 1:
        return parts[0]
    i = rng.randint(1, len(parts) - 1)
    return Par(_random_assoc(rng, parts[:i]), _random_assoc(rng, parts[i:]))


def _positions(p, path=()):
    yield path, p
    for i, q in enumerate(children(p)):
        yield from _positions(q, path + (i,))


def _replace_at(p, path, new):
    if not path:
        return new
    kids = list(children(p))
    kids[path[0]] = _replace_at(kids[path[0]], path[1:], new)
    return _rebuild(p, kids)


def _bound_name(p):
    if isinstance(p, (Request, Accept, Restrict)):
        return p.chan
    if isinstance(p, Catch):
        return p.bound
    return None


def _alpha(p, used):
    b = _bound_name(p)
    new = b
    i = 0
    while new in used:
        i += 1
        new = f"{b}v{i}"
    body = [rename_channel(q, b, new) for q in children(p)]
    q = _rebuild(p, body)
    if isinstance(q, Restrict):
        return Restrict(new, q.body)
    if isinstance(q, Request):
        return Request(q.port, q.ty, new, q.body)
    if isinstance(q, Accept):
        return Accept(q.port, q.ty, new, q.body)
    return Catch(q.chan, new, q.cont)


def _rewrites(p, used):
    """Every one-step rewrite of ``p`` at its root under the congruence clauses."""
    out = []
    if _bound_name(p) is not None:
        out.append(_alpha(p, used))
    if isinstance(p, Par):
        x, y = p.left, p.right
        if not isinstance(x, NamedOrch) and not isinstance(y, NamedOrch):
            out.append(Par(y, x))
            if isinstance(y, Par) and not isinstance(y.left, NamedOrch) and not isinstance(y.right, NamedOrch):
                out.append(Par(Par(x, y.left), y.right))
            if isinstance(x, Par) and not isinstance(x.left, NamedOrch) and not isinstance(x.right, NamedOrch):
                out.append(Par(x.left, Par(x.right, y)))
    # (νk)(orch_k f | Q | (νk')(orch_k' g | Q' | R)) and back
    if isinstance(p, Restrict) and isinstance(p.body, Par) and isinstance(p.body.left, NamedOrch) \
            and p.body.left.chan == p.chan and isinstance(p.body.right, Par):
        k, f = p.chan, p.body.left
        q, inner = p.body.right.left, p.body.right.right
        if isinstance(inner, Restrict) and isinstance(inner.body, Par) and isinstance(inner.body.left, NamedOrch) \
                and inner.body.left.chan == inner.chan and isinstance(inner.body.right, Par):
            k2, g = inner.chan, inner.body.left
            q2, r = inner.body.right.left, inner.body.right.right
            if k2 != k and k not in free_channels(r) and k2 not in free_channels(q):
                out.append(Restrict(k2, Par(g, Par(Restrict(k, Par(f, Par(q, q2))), r))))
    if isinstance(p, Restrict) and isinstance(p.body, Par) and isinstance(p.body.left, NamedOrch) \
            and p.body.left.chan == p.chan and isinstance(p.body.right, Par):
        k2, g = p.chan, p.body.left
        inner, r = p.body.right.left, p.body.right.right
        if isinstance(inner, Restrict) and isinstance(inner.body, Par) and isinstance(inner.body.left, NamedOrch) \
                and inner.body.left.chan == inner.chan and isinstance(inner.body.right, Par):
            k, f = inner.chan, inner.body.left
            q, q2 = inner.body.right.left, inner.body.right.right
            if k2 != k and k not in free_channels(r) and k2 not in free_channels(q):
                out.append(Restrict(k, Par(f, Par(q, Restrict(k2, Par(g, Par(q2, r)))))))
    return out


def one_step_rewrites(p):
    """All results of one congruence rewrite anywhere inside ``p``."""
    from .syntax import all_channel_names

    used = all_channel_names(p)
    out = []
    for path, q in _positions(p):
        for r in _rewrites(q, used):
            out.append(_replace_at(p, path, r))
    return out


def random_rewrites(seed, p, steps: int = 4):
    rng = _rng(seed)
    for _ in range(steps):
        opts = one_step_rewrites(p)
        if not opts:
            break
        p = rng.choice(opts)
    return p


def rewrite_closure(p, depth: int = 2, cap: int = 2000):
    """All terms within ``depth`` rewrites of ``p`` (bounded breadth-first search)."""
    seen = {p}
    frontier = [p]
    for _ in range(depth):
        nxt = []
        for q in frontier:
            for r in one_step_rewrites(q):
                if r not in seen:
                    seen.add(r)
                    nxt.append(r)
                    if len(seen) >= cap:
                        return seen
        frontier = nxt
    return seen


# ---------------------------------------------------------------------------
# shrinking


def _size(x) -> int:
    if isinstance(x, tuple):
        return sum(_size(y) for y in x) + 1
    if dataclasses.is_dataclass(x) and not isinstance(x, type):
        return 1 + sum(_size(getattr(x, f.name)) for f in dataclasses.fields(x))
    return 0


def _same_family(a, b):
    for base in (_type_base(), _orch_base(), _proc_base()):
        if isinstance(a, base) and isinstance(b, base):
            return True
    return False


def _type_base():
    from .syntax import SessionType

    return SessionType


def _orch_base():
    from .syntax import Orchestrator

    return Orchestrator


def _proc_base():
    from .syntax import Process

    return Process


def _subterms(x):
    if isinstance(x, tuple):
        for y in x:
            if dataclasses.is_dataclass(y):
                yield y
            yield from _subterms(y)
    elif dataclasses.is_dataclass(x) and not isinstance(x, type):
        for f in dataclasses.fields(x):
            v = getattr(x, f.name)
            yield v
            yield from _subterms(v)


def _candidates(x):
    """Strictly smaller variants of ``x``."""
    if isinstance(x, tuple):
        for i, y in enumerate(x):
            if isinstance(y, tuple) and len(y) == 2 and isinstance(y[0], str):
                continue
            for c in _candidates(y):
                yield x[:i] + (c,) + x[i + 1:]
        return
    if not (dataclasses.is_dataclass(x) and not isinstance(x, type)):
        return
    for s in _subterms(x):
        if _same_family(s, x):
            yield s
    for base, small in ((_type_base(), END), (_orch_base(), IDLE), (_proc_base(), INACT)):
        if isinstance(x, base) and x != small:
            yield small
    for f in dataclasses.fields(x):
        v = getattr(x, f.name)
        if f.name == "arms" and len(v) > 1:
            for i in range(len(v)):
                yield _try_replace(x, arms=v[:i] + v[i + 1:])
        if f.name == "arms":
            for i, (l, a) in enumerate(v):
                for c in _candidates(a):
                    yield _try_replace(x, arms=v[:i] + ((l, c),) + v[i + 1:])
        elif dataclasses.is_dataclass(v) and not isinstance(v, type):
            for c in _candidates(v):
                yield _try_replace(x, **{f.name: c})


def _try_replace(x, **kw):
    try:
        if isinstance(x, (ExternalChoice, InternalChoice)):
            return _choice(type(x), kw["arms"])
        return dataclasses.replace(x, **kw)
    except (WellFormednessError, TypeError, ValueError):
        return None


def shrink(counterexample, predicate: Callable, max_rounds: int = 500):
    """Greedily replace ``counterexample`` by smaller values that still satisfy ``predicate``."""
    cur = counterexample
    for _ in range(max_rounds):
        size = _size(cur)
        for cand in _candidates(cur):
            if cand is None or _size(cand) >= size:
                continue
            try:
                ok = predicate(cand)
            except Exception:
                ok = False
            if ok:
                cur = cand
                break
        else:
            return cur
    return cur


# ---------------------------------------------------------------------------
# suites


@dataclass
class Failure:
    case: int
    message: str
    example: object
    minimized: object = None

    def dump(self) -> str:
        shown = self.minimized if self.minimized is not None else self.example
        return f"case {self.case}: {self.message}\n  {_show(shown)}"


@dataclass
class SuiteResult:
    suite: str
    n: int
    failures: list = field(default_factory=list)
    notes: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return not self.failures


def _show(x):
    if isinstance(x, tuple):
        return "(" + ", ".join(_show(y) for y in x) + ")"
    try:
        return pretty(x)
    except TypeError:
        return repr(x)


def _synth_problem(pair, synth_fn=synth, synth_ud_fn=synth_ud):
    c, s = pair
    try:
        expect = oracle_compliant(c, s)
    except DepthExceeded:
        return None
    r = synth_fn(c, s)
    if bool(r) != expect:
        return f"synth says {'Ok' if r else 'Fail'}, oracle says {expect}"
    if r and not check_compliance(r.f, c, s):
        return "synthesized orchestrator does not check"
    if r and not is_deterministic(r.f):
        return "synthesized orchestrator has an internal choice"
    u = synth_ud_fn(c, s)
    if bool(u) != expect:
        return f"all-safe synthesis says {'Ok' if u else 'Fail'}, oracle says {expect}"
    if u and not check_compliance(u.f, c, s):
        return "all-safe orchestrator does not check"
    return None


def suite_synth(n=1000, seed=0, max_depth=5, synth_fn=synth, synth_ud_fn=synth_ud, minimize=True):
    res = SuiteResult("synth", n)
    for i in range(n):
        pair = gen_pair(_case_rng(seed, i), max_depth)
        msg = _synth_problem(pair, synth_fn, synth_ud_fn)
        if msg:
            small = None
            if minimize:
                small = shrink(pair, lambda p: _synth_problem(p, synth_fn, synth_ud_fn) is not None)
            res.failures.append(Failure(i, msg, pair, small))
    return res


MODES = tuple(SemanticsMode)


def _case_rng(seed, i):
    return random.Random(seed * 1_000_003 + i)


def _typed_case(seed, i, max_depth):
    rng = _case_rng(seed, i)
    return gen_typed_process(rng, sessions=rng.choice((1, 1, 2)), max_depth=max_depth)


class _TypeCache:
    def __init__(self, mode=None):
        self.memo = {}
        self.mode = mode

    def __call__(self, state):
        if state not in self.memo:
            try:
                self.memo[state] = typecheck({}, state, self.mode)
            except SessionTypeError as e:
                self.memo[state] = e
        return self.memo[state]


def _subject_reduction_problem(p, step_limit=200, branching=4, notes=None):
    types = _TypeCache()
    d0 = types(canonicalize(p))
    if isinstance(d0, Exception):
        return f"initial process does not type: {d0}"
    # order-sensitive typing applies when the process lists options in type order
    ordered = _TypeCache(SemanticsMode.PRIORITY_PROCESS)
    if isinstance(ordered(canonicalize(p)), Exception):
        ordered = types
        if notes is not None:
            notes["unordered-spec"] = notes.get("unordered-spec", 0) + 1
    for mode in MODES:
        check = ordered if mode is SemanticsMode.PRIORITY_PROCESS else types
        for cleanup in (False, True):
            graph = explore(p, mode, cleanup, step_limit, branching)
            for s in graph:
                d = check(s)
                if isinstance(d, Exception) or d != d0:
                    return f"{mode.value} cleanup={cleanup}: state {pretty(s)} types to {d}"
    return None


def _error_freeness_problem(p, step_limit=200, branching=4, notes=None):
    for mode in MODES:
        for cleanup in (False, True):
            graph = explore(p, mode, cleanup, step_limit, branching)
            for s in graph:
                classes = classify_errors(s, cleanup, mode)
                bad = [c for c in classes if c.kind in ("OrchSynchError", "VacuousOrchError")]
                if bad:
                    return f"{mode.value} cleanup={cleanup}: {bad[0].kind} at {pretty(s)}"
                if cleanup and not enumerate_redexes(s, mode, cleanup):
                    for c in classes:
                        if c.kind != "ComplianceDependentDeadlock":
                            continue
                        if _only_delegation_pending(s, c.channel):
                            if notes is not None:
                                notes["delegation-gap"] = notes.get("delegation-gap", 0) + 1
                            continue
                        return f"{mode.value}: deadlock despite clean-up at {pretty(s)}"
    return None


def _only_delegation_pending(state, k) -> bool:
    """Clean-up has no rule for throw/catch, so such k+ prefixes may stay stuck."""
    from .congruence import split_canonical
    from .syntax import subject

    _, _, rest = split_canonical(state)
    pending = [p for p in rest if (s := subject(p)) is not None and s.name == k and s.pol is PLUS]
    return bool(pending) and all(isinstance(p, (Throw, Catch)) for p in pending)


def _process_suite(name, problem, n, seed, max_depth, minimize):
    res = SuiteResult(name, n)
    for i in range(n):
        p = _typed_case(seed, i, max_depth)
        msg = problem(p, notes=res.notes)
        if msg:
            small = None
            if minimize:
                def still(q):
                    try:
                        if typecheck({}, q) != {}:
                            return False
                    except SessionTypeError:
                        return False
                    return problem(q) is not None
                small = shrink(p, still, max_rounds=50)
            res.failures.append(Failure(i, msg, p, small))
    return res


def suite_subject_reduction(n=500, seed=0, max_depth=3, minimize=True):
    return _process_suite("subject-reduction", _subject_reduction_problem, n, seed, max_depth, minimize)


def suite_error_freeness(n=500, seed=0, max_depth=3, minimize=True):
    return _process_suite("error-freeness", _error_freeness_problem, n, seed, max_depth, minimize)


def _congruence_problem(p, rng):
    try:
        c = canonicalize(p)
    except MalformedRuntime as e:
        return f"generator produced a malformed term: {e}"
    if canonicalize(c) != c:
        return "canonical form is not idempotent"
    if free_channels(c) != free_channels(p):
        return "canonical form changes free channels"
    q = random_rewrites(rng, p, rng.randint(1, 4))
    if not congruent(p, q):
        return f"rewritten term {pretty(q)} has a different canonical form"
    return None


def _congruence_case(seed, i, max_depth):
    rng = _case_rng(seed, i)
    if rng.random() < 0.5:
        return gen_runtime(rng, max_depth), rng
    # a run-time state reached by a typed process
    p = _typed_case(seed, i, max_depth)
    tr = run(p, SemanticsMode.PLAIN, True, SeededRandom(i), step_limit=rng.randint(0, 6))
    return tr.final, rng


def suite_congruence(n=1000, seed=0, max_depth=3, minimize=True):
    res = SuiteResult("congruence", n)
    for i in range(n):
        p, rng = _congruence_case(seed, i, max_depth)
        state = rng.getstate()
        msg = _congruence_problem(p, rng)
        if msg:
            small = None
            if minimize:
                def still(q):
                    r = random.Random()
                    r.setstate(state)
                    return _congruence_problem(q, r) is not None
                small = shrink(p, still, max_rounds=50)
            res.failures.append(Failure(i, msg, p, small))
    return res


def _roundtrip_problem(x):
    from .syntax import Orchestrator, SessionType

    text = pretty(x)
    if isinstance(x, SessionType):
        back = parse_type(text)
    elif isinstance(x, Orchestrator):
        back = parse_orch(text)
    else:
        back = parse_process(text)
    if back != x:
        return f"{text!r} parses back differently"
    return None


def _roundtrip_case(seed, i, max_depth):
    rng = _case_rng(seed, i)
    k = i % 4
    if k == 0:
        return gen_type(rng, rng.randint(0, max_depth), prioritized=rng.random() < 0.5)
    if k == 1:
        return gen_orch(rng, max_depth)
    if k == 2:
        return _typed_case(seed, i, max_depth)
    p = gen_runtime(rng, max_depth)
    if rng.random() < 0.5:
        return canonicalize(p)
    return p


def suite_roundtrip(n=1000, seed=0, max_depth=3, minimize=True):
    res = SuiteResult("roundtrip", n)
    for i in range(n):
        x = _roundtrip_case(seed, i, max_depth)
        try:
            msg = _roundtrip_problem(x)
        except Exception as e:  # parse errors count as failures
            msg = f"{type(e).__name__}: {e}"
        if msg:
            small = None
            if minimize:
                def still(y):
                    try:
                        return _roundtrip_problem(y) is not None
                    except Exception:
                        return True
                small = shrink(x, still, max_rounds=50)
            res.failures.append(Failure(i, msg, x, small))
    return res


SUITES = {
    "synth": suite_synth,
    "subject-reduction": suite_subject_reduction,
    "error-freeness": suite_error_freeness,
    "congruence": suite_congruence,
    "roundtrip": suite_roundtrip,
}


def run_suite(name: str, n: int, seed: int = 0, max_depth: Optional[int] = None, **kw) -> SuiteResult:
    fn = SUITES[name]
    if max_depth is None:
        return fn(n=n, seed=seed, **kw)
    return fn(n=n, seed=seed, max_depth=max_depth, **kw)
