"""Type checking of processes.

Typings are inferred bottom-up. Channel types are built from the prefixes a
process performs; a selection only fixes the chosen arm and a branching only
bounds the arms from above, so inference works over partial types that are
refined by unification. Declared types on request/accept close them off, and
each restriction checks its orchestrator against the two ends it discharges.
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass, field
from typing import Optional

from .syntax import (
    BOOL,
    END,
    Accept,
    Apply,
    Branch,
    BranchL,
    Catch,
    ChannelRef,
    End,
    ExternalChoice,
    FunctionTable,
    Idle,
    IfThenElse,
    Inact,
    InSession,
    InternalChoice,
    InValue,
    IOPrefix,
    LabelPrefix,
    Literal,
    MINUS,
    NamedOrch,
    Orchestrator,
    OutSession,
    OutValue,
    PLUS,
    Par,
    Process,
    RecvValue,
    Request,
    Restrict,
    Select,
    SelectL,
    SendValue,
    SessionType,
    SpecSelect,
    SpecSelectP,
    Throw,
    Var,
    DEFAULT_FUNCTIONS,
    subst_channel,
)


class ErrorKind(enum.Enum):
    UNBOUND_CHANNEL = "UnboundChannel"
    POLARITY_CLASH = "PolarityClash"
    TYPING_OVERLAP = "TypingOverlap"
    LABEL_MISMATCH = "LabelMismatch"
    COMPLIANCE_FAILURE = "ComplianceFailure"
    GROUND_MISMATCH = "GroundTypeMismatch"
    INCOMPLETE_TYPING = "IncompleteTyping"
    BRANCH_DISAGREEMENT = "BranchTypingDisagreement"
    ARITY_OR_SHAPE = "ArityOrShape"


class SessionTypeError(Exception):
    """A failed typing judgement, with the path (child indices) of the offending subterm."""

    def __init__(self, kind: ErrorKind, detail: str, location: tuple = (), reason: str = "",
                 pair: Optional[tuple] = None):
        super().__init__(f"{kind.value} at {list(location)}: {detail}")
        self.kind = kind
        self.detail = detail
        self.location = tuple(location)
        self.reason = reason
        self.pair = pair


Typing = dict  # (name, Polarity) -> SessionType


def typing_compose(d1: Typing, d2: Typing) -> Typing:
    clash = sorted(set(d1) & set(d2), key=lambda k: (k[0], k[1].value))
    if clash:
        names = ", ".join(f"{n}^{p.value}" for n, p in clash)
        raise SessionTypeError(ErrorKind.TYPING_OVERLAP, f"typings overlap on {names}")
    out = dict(d1)
    out.update(d2)
    return out


def is_completed(d: Typing) -> bool:
    return all(isinstance(s, End) for s in d.values())


# ---------------------------------------------------------------------------
# inference variables


@dataclass(frozen=True)
class TVar(SessionType):
    """A session type not (yet) determined by the process. Prints as 'a."""

    ident: int = field(compare=True)

    def __str__(self):
        return "'a"


@dataclass(frozen=True)
class GVar:
    ident: int

    @property
    def name(self):
        return "'g"

    def __str__(self):
        return "'g"


@dataclass(frozen=True)
class PVar:
    ident: int

    @property
    def value(self):
        return "?"


class _Mismatch(Exception):
    def __init__(self, kind: ErrorKind, detail: str, reason: str = ""):
        super().__init__(detail)
        self.kind = kind
        self.detail = detail
        self.reason = reason


class _Blocked(Exception):
    pass


class Unifier:
    def __init__(self):
        self.counter = itertools.count()
        self.tsub = {}
        self.cons = {}  # TVar -> ("sel" | "br", {label: term})
        self.gsub = {}
        self.psub = {}
        self.ordered = False  # speculative option order matters

    # fresh variables
    def tvar(self, cons=None) -> TVar:
        v = TVar(next(self.counter))
        if cons is not None:
            self.cons[v] = cons
        return v

    def gvar(self) -> GVar:
        return GVar(next(self.counter))

    def pvar(self) -> PVar:
        return PVar(next(self.counter))

    # resolution
    def find(self, t):
        while isinstance(t, TVar) and t in self.tsub:
            t = self.tsub[t]
        return t

    def gfind(self, g):
        while isinstance(g, GVar) and g in self.gsub:
            g = self.gsub[g]
        return g

    def pfind(self, p):
        while isinstance(p, PVar) and p in self.psub:
            p = self.psub[p]
        return p

    def key(self, k):
        return (k[0], self.pfind(k[1]))

    # unification
    def unify_ground(self, a, b):
        a, b = self.gfind(a), self.gfind(b)
        if a == b:
            return
        if isinstance(a, GVar):
            self.gsub[a] = b
        elif isinstance(b, GVar):
            self.gsub[b] = a
        else:
            raise _Mismatch(ErrorKind.GROUND_MISMATCH, f"ground types {a} and {b} differ", "ground")

    def unify_pol(self, a, b):
        a, b = self.pfind(a), self.pfind(b)
        if a == b:
            return
        if isinstance(a, PVar):
            self.psub[a] = b
        elif isinstance(b, PVar):
            self.psub[b] = a
        else:
            raise _Mismatch(ErrorKind.POLARITY_CLASH, f"polarities {a.value} and {b.value} differ", "polarity")

    def _occurs(self, v, t) -> bool:
        t = self.find(t)
        if t == v:
            return True
        if isinstance(t, TVar):
            c = self.cons.get(t)
            return c is not None and any(self._occurs(v, x) for x in c[1].values())
        if isinstance(t, (InValue, OutValue)):
            return self._occurs(v, t.cont)
        if isinstance(t, (InSession, OutSession)):
            return self._occurs(v, t.carried) or self._occurs(v, t.cont)
        if isinstance(t, (Branch, Select, SpecSelect)):
            return any(self._occurs(v, x) for _, x in t.arms)
        return False

    def bind(self, v: TVar, t):
        if self._occurs(v, t):
            raise _Mismatch(ErrorKind.ARITY_OR_SHAPE, "cyclic session type", "cycle")
        self.tsub[v] = t

    def unify(self, a, b):
        a, b = self.find(a), self.find(b)
        if a == b:
            return
        if isinstance(a, TVar) and isinstance(b, TVar):
            ca, cb = self.cons.get(a), self.cons.get(b)
            if ca is None:
                self.bind(a, b)
                return
            if cb is None:
                self.bind(b, a)
                return
            merged = self._merge_cons(ca, cb)
            self.bind(a, b)
            self.cons[b] = merged
            return
        if isinstance(b, TVar):
            a, b = b, a
        if isinstance(a, TVar):
            c = self.cons.get(a)
            if c is not None:
                self._check_cons(c, b)
            self.bind(a, b)
            return
        self._unify_children(a, b)

    def _merge_cons(self, ca, cb):
        if ca[0] != cb[0]:
            raise _Mismatch(ErrorKind.LABEL_MISMATCH, "selection against branching", "shape")
        arms_a, arms_b = ca[1], cb[1]
        if ca[0] == "sel":
            for l in set(arms_a) & set(arms_b):
                self.unify(arms_a[l], arms_b[l])
            merged = dict(arms_a)
            for l, t in arms_b.items():
                merged.setdefault(l, t)
            return ("sel", merged)
        common = [l for l in arms_a if l in arms_b]
        if not common:
            raise _Mismatch(ErrorKind.LABEL_MISMATCH, "branchings share no label", "labels")
        for l in common:
            self.unify(arms_a[l], arms_b[l])
        return ("br", {l: arms_a[l] for l in common})

    def _check_cons(self, c, t):
        kind, arms = c
        if kind == "sel":
            if not isinstance(t, Select):
                raise _Mismatch(_shape_kind(t), f"selection used where {_describe(t)} expected", "shape")
            have = dict(t.arms)
            missing = sorted(set(arms) - set(have))
            if missing:
                raise _Mismatch(ErrorKind.LABEL_MISMATCH, f"label(s) {', '.join(missing)} not offered by selection type", "labels")
            for l, x in arms.items():
                self.unify(x, have[l])
        else:
            if not isinstance(t, Branch):
                raise _Mismatch(_shape_kind(t), f"branching used where {_describe(t)} expected", "shape")
            have = dict(t.arms)
            missing = sorted(set(have) - set(arms))
            if missing:
                raise _Mismatch(ErrorKind.LABEL_MISMATCH, f"branch(es) {', '.join(missing)} of the type are not handled", "labels")
            for l, x in have.items():
                self.unify(arms[l], x)

    def _unify_children(self, a, b):
        if type(a) is not type(b):
            kind = _shape_kind(a) if isinstance(a, End) else _shape_kind(b)
            raise _Mismatch(kind, f"{_describe(a)} against {_describe(b)}", "shape")
        if isinstance(a, End):
            return
        if isinstance(a, (InValue, OutValue)):
            self.unify_ground(a.g, b.g)
            self.unify(a.cont, b.cont)
        elif isinstance(a, (InSession, OutSession)):
            self.unify_pol(a.pol, b.pol)
            self.unify(a.carried, b.carried)
            self.unify(a.cont, b.cont)
        else:
            la, lb = dict(a.arms), dict(b.arms)
            if set(la) != set(lb):
                raise _Mismatch(ErrorKind.LABEL_MISMATCH,
                                f"label sets {sorted(la)} and {sorted(lb)} differ", "labels")
            if self.ordered and isinstance(a, SpecSelect) and [l for l, _ in a.arms] != [l for l, _ in b.arms]:
                raise _Mismatch(ErrorKind.LABEL_MISMATCH, "speculative options are listed in a different order", "order")
            for l in la:
                self.unify(la[l], lb[l])

    # zonking back to plain syntax
    def zonk(self, t):
        t = self.find(t)
        if isinstance(t, TVar):
            c = self.cons.get(t)
            if c is None:
                return t
            arms = tuple((l, self.zonk(x)) for l, x in c[1].items())
            return Select(arms) if c[0] == "sel" else Branch(arms)
        if isinstance(t, End):
            return t
        if isinstance(t, InValue):
            return InValue(self.gfind(t.g), self.zonk(t.cont))
        if isinstance(t, OutValue):
            return OutValue(self.gfind(t.g), self.zonk(t.cont))
        if isinstance(t, InSession):
            return InSession(self.zonk(t.carried), self.pfind(t.pol), self.zonk(t.cont))
        if isinstance(t, OutSession):
            return OutSession(self.zonk(t.carried), self.pfind(t.pol), self.zonk(t.cont))
        arms = tuple((l, self.zonk(x)) for l, x in t.arms)
        if isinstance(t, SpecSelect):
            return SpecSelect(arms, t.prioritized)
        return type(t)(arms)


def _shape_kind(t) -> ErrorKind:
    # a missing continuation reads as end, so end against anything is incompleteness
    return ErrorKind.INCOMPLETE_TYPING if isinstance(t, End) else ErrorKind.ARITY_OR_SHAPE


def _describe(t) -> str:
    return {
        End: "end", InValue: "input", OutValue: "output", InSession: "session input",
        OutSession: "session output", Branch: "branching", Select: "selection",
        SpecSelect: "speculative selection",
    }.get(type(t), "unknown type")


# ---------------------------------------------------------------------------
# inference


@dataclass
class _Restriction:
    f: Orchestrator
    minus: object
    plus: object
    chan: str
    path: tuple


class _Checker:
    def __init__(self, functions: FunctionTable, ordered: bool = False):
        self.u = Unifier()
        self.u.ordered = ordered
        self.fns = functions
        self.restrictions = []

    def fail(self, kind, detail, path, reason=""):
        raise SessionTypeError(kind, detail, path, reason)

    # typings are dicts keyed by (name, pol) with pol possibly a PVar
    def norm(self, d):
        out = {}
        for k, t in d.items():
            out[self.u.key(k)] = t
        return out

    def pop(self, d, key):
        key = self.u.key(key)
        for k in list(d):
            if self.u.key(k) == key:
                return d.pop(k)
        return END

    def ref_key(self, ref: ChannelRef, path):
        if ref.pol is None:
            self.fail(ErrorKind.UNBOUND_CHANNEL, f"channel {ref.name} is not bound by a session", path)
        return (ref.name, ref.pol)

    def compose(self, d1, d2, path):
        d1, d2 = self.norm(d1), self.norm(d2)
        clash = set(d1) & set(d2)
        if clash:
            n, p = sorted(clash, key=lambda k: (k[0], str(getattr(k[1], "value", ""))))[0]
            self.fail(ErrorKind.POLARITY_CLASH,
                      f"channel end {n}^{getattr(p, 'value', '?')} is used by two parallel processes", path)
        out = dict(d1)
        out.update(d2)
        return out

    def agree(self, ds, path, what):
        """Unify several typings entrywise; missing entries count as end."""
        ds = [self.norm(d) for d in ds]
        keys = set()
        for d in ds:
            keys |= set(d)
        try:
            for k in keys:
                ts = [d.get(k, END) for d in ds]
                for t in ts[1:]:
                    self.u.unify(ts[0], t)
        except _Mismatch as m:
            self.fail(ErrorKind.BRANCH_DISAGREEMENT, f"{what} disagree on {k[0]}: {m.detail}", path, m.reason)
        return self.norm(ds[0]) if ds else {}

    def expr(self, e, gamma, path):
        if isinstance(e, Literal):
            return e.value.ground
        if isinstance(e, Var):
            if e.name not in gamma:
                self.fail(ErrorKind.GROUND_MISMATCH, f"unbound variable {e.name}", path, "unbound-variable")
            return gamma[e.name]
        if isinstance(e, Apply):
            sig = self.fns.signature(e.fn)
            if sig is None:
                self.fail(ErrorKind.ARITY_OR_SHAPE, f"unknown function {e.fn}", path)
            if len(sig.params) != len(e.args):
                self.fail(ErrorKind.ARITY_OR_SHAPE,
                          f"{e.fn} expects {len(sig.params)} argument(s), got {len(e.args)}", path)
            for a, g in zip(e.args, sig.params):
                ga = self.expr(a, gamma, path)
                try:
                    self.u.unify_ground(ga, g)
                except _Mismatch as m:
                    self.fail(ErrorKind.GROUND_MISMATCH, f"argument of {e.fn}: {m.detail}", path)
            return sig.result
        self.fail(ErrorKind.ARITY_OR_SHAPE, f"not an expression: {e!r}", path)

    def infer(self, p: Process, gamma: dict, path: tuple) -> dict:
        if isinstance(p, Inact):
            return {}
        if isinstance(p, Par):
            return self.compose(self.infer(p.left, gamma, path + (0,)),
                                self.infer(p.right, gamma, path + (1,)), path)
        if isinstance(p, (Request, Accept)):
            pol = MINUS if isinstance(p, Request) else PLUS
            body = subst_channel(p.body, p.chan, ChannelRef(p.chan, pol))
            d = self.infer(body, gamma, path + (0,))
            t = self.pop(d, (p.chan, pol))
            try:
                self.u.unify(t, p.ty)
            except _Mismatch as m:
                kind = m.kind
                self.fail(kind, f"session {p.chan} on port {p.port}: {m.detail}", path, m.reason)
            return d
        if isinstance(p, SendValue):
            key = self.ref_key(p.chan, path)
            g = self.expr(p.e, gamma, path)
            d = self.infer(p.cont, gamma, path + (0,))
            t = self.pop(d, key)
            d[key] = OutValue(g, t)
            return d
        if isinstance(p, RecvValue):
            key = self.ref_key(p.chan, path)
            g = self.u.gvar()
            inner = dict(gamma)
            inner[p.var] = g
            d = self.infer(p.cont, inner, path + (0,))
            t = self.pop(d, key)
            d[key] = InValue(g, t)
            return d
        if isinstance(p, Throw):
            key = self.ref_key(p.chan, path)
            sent = self.ref_key(p.sent, path)
            if self.u.key(key) == self.u.key(sent):
                self.fail(ErrorKind.POLARITY_CLASH, f"channel end {p.chan} sent over itself", path)
            d = self.norm(self.infer(p.cont, gamma, path + (0,)))
            if self.u.key(sent) in d:
                self.fail(ErrorKind.TYPING_OVERLAP, f"delegated end {p.sent} is still used after sending", path)
            t = self.pop(d, key)
            a = self.u.tvar()
            d[key] = OutSession(a, p.sent.pol, t)
            d[sent] = a
            return d
        if isinstance(p, Catch):
            key = self.ref_key(p.chan, path)
            rho = self.u.pvar()
            body = subst_channel(p.cont, p.bound, ChannelRef(p.bound, rho))
            d = self.infer(body, gamma, path + (0,))
            carried = self.pop(d, (p.bound, rho))
            t = self.pop(d, key)
            d[key] = InSession(carried, rho, t)
            return d
        if isinstance(p, SelectL):
            key = self.ref_key(p.chan, path)
            d = self.infer(p.cont, gamma, path + (0,))
            t = self.pop(d, key)
            d[key] = self.u.tvar(("sel", {p.label: t}))
            return d
        if isinstance(p, (BranchL, SpecSelectP)):
            key = self.ref_key(p.chan, path)
            ds, ts = [], []
            for i, (l, q) in enumerate(p.arms):
                d = self.infer(q, gamma, path + (i,))
                ts.append((l, self.pop(d, key)))
                ds.append(d)
            d = self.agree(ds, path, "arms")
            if isinstance(p, BranchL):
                d[key] = self.u.tvar(("br", dict(ts)))
            else:
                d[key] = SpecSelect(tuple(ts), p.prioritized)
            return d
        if isinstance(p, IfThenElse):
            g = self.expr(p.cond, gamma, path)
            try:
                self.u.unify_ground(g, BOOL)
            except _Mismatch as m:
                self.fail(ErrorKind.GROUND_MISMATCH, f"condition is not boolean: {m.detail}", path)
            d1 = self.infer(p.then, gamma, path + (0,))
            d2 = self.infer(p.orelse, gamma, path + (1,))
            return self.agree([d1, d2], path, "conditional branches")
        if isinstance(p, NamedOrch):
            self.fail(ErrorKind.ARITY_OR_SHAPE, f"orchestrator for {p.chan} outside its restriction", path)
        if isinstance(p, Restrict):
            return self.restrict(p, gamma, path)
        self.fail(ErrorKind.ARITY_OR_SHAPE, f"not a process: {p!r}", path)

    def restrict(self, p: Restrict, gamma, path):
        # a block of restrictions over a parallel composition is handled at once
        names, paths = [], []
        body, bpath = p, path
        while isinstance(body, Restrict):
            if body.chan in names:
                self.fail(ErrorKind.ARITY_OR_SHAPE, f"channel {body.chan} restricted twice", bpath)
            names.append(body.chan)
            paths.append(bpath)
            body, bpath = body.body, bpath + (0,)
        comps = []
        stack = [(body, bpath)]
        while stack:
            q, qp = stack.pop()
            if isinstance(q, Par):
                stack.append((q.right, qp + (1,)))
                stack.append((q.left, qp + (0,)))
            else:
                comps.append((q, qp))
        orchs, rest = {}, []
        for q, qp in comps:
            if isinstance(q, NamedOrch) and q.chan in names:
                if q.chan in orchs:
                    self.fail(ErrorKind.ARITY_OR_SHAPE, f"two orchestrators for {q.chan}", qp)
                orchs[q.chan] = (q.f, qp)
            else:
                rest.append((q, qp))
        d = {}
        for q, qp in rest:
            d = self.compose(d, self.infer(q, gamma, qp), qp)
        for n, np_ in zip(names, paths):
            minus = self.pop(d, (n, MINUS))
            plus = self.pop(d, (n, PLUS))
            if n in orchs:
                self.restrictions.append(_Restriction(orchs[n][0], minus, plus, n, np_))
            elif not (isinstance(self.u.find(minus), End) and isinstance(self.u.find(plus), End)):
                self.fail(ErrorKind.ARITY_OR_SHAPE, f"channel {n} is used but has no orchestrator", np_)
        return d

    # -- orchestrated compliance over partial types -------------------------

    def comply(self, f, a, b):
        """Check f : a ⊣ b, refining variables; raise _Blocked when undetermined."""
        u = self.u
        a, b = u.find(a), u.find(b)
        if isinstance(f, Idle):
            if isinstance(a, End):
                return
            if isinstance(a, TVar) and a not in u.cons:
                u.bind(a, END)
                return
            raise _Mismatch(ErrorKind.COMPLIANCE_FAILURE, "idle orchestrator but the client still acts", "idle-active-client")
        if isinstance(a, TVar) and a not in u.cons or isinstance(b, TVar) and b not in u.cons:
            raise _Blocked()
        if isinstance(f, IOPrefix):
            pairs = ((InValue, OutValue), (OutValue, InValue), (InSession, OutSession), (OutSession, InSession))
            for x, y in pairs:
                if isinstance(a, x) and isinstance(b, y):
                    if x in (InValue, OutValue):
                        u.unify_ground(a.g, b.g)
                    else:
                        u.unify_pol(a.pol, b.pol)
                        u.unify(a.carried, b.carried)
                    self.comply(f.cont, a.cont, b.cont)
                    return
            if _is_io(a) and _is_io(b):
                raise _Mismatch(ErrorKind.COMPLIANCE_FAILURE, "both ends perform the same direction of communication", "same-direction")
            raise _Mismatch(ErrorKind.COMPLIANCE_FAILURE, "orchestrator enables a communication the types do not perform", "shape")
        if isinstance(f, (LabelPrefix, ExternalChoice, InternalChoice)):
            labels = [l for l, _ in f.arms]
            arms = dict(f.arms)
            sel_a, sel_b = self._as_select(a), self._as_select(b)
            br_a, br_b = self._as_branch(a), self._as_branch(b)
            sp_a, sp_b = isinstance(a, SpecSelect), isinstance(b, SpecSelect)
            if not isinstance(f, InternalChoice) and (sel_a and br_b or br_a and sel_b):
                sel, br = (a, b) if sel_a else (b, a)
                sel_arms = self._fix_select(sel, labels)
                br_arms = self._fix_branch(br, labels)
                for l in labels:
                    x, y = (sel_arms[l], br_arms[l]) if sel_a else (br_arms[l], sel_arms[l])
                    self.comply(arms[l], x, y)
                return
            if not isinstance(f, ExternalChoice) and (sp_a and br_b or br_a and sp_b):
                sp, br = (a, b) if sp_a else (b, a)
                sp_arms = dict(sp.arms)
                missing = [l for l in labels if l not in sp_arms]
                if missing:
                    raise _Mismatch(ErrorKind.COMPLIANCE_FAILURE, f"orchestrator suggests {missing[0]}, not a speculative option", "labels")
                br_arms = self._fix_branch(br, labels)
                for l in labels:
                    x, y = (sp_arms[l], br_arms[l]) if sp_a else (br_arms[l], sp_arms[l])
                    self.comply(arms[l], x, y)
                return
            raise _Mismatch(ErrorKind.COMPLIANCE_FAILURE, "orchestrator drives a label exchange the types do not perform", "label-vs-shape")
        raise _Mismatch(ErrorKind.COMPLIANCE_FAILURE, "unknown orchestrator", "shape")

    def _as_select(self, t):
        return isinstance(t, Select) or isinstance(t, TVar) and self.u.cons.get(t, ("",))[0] == "sel"

    def _as_branch(self, t):
        return isinstance(t, Branch) or isinstance(t, TVar) and self.u.cons.get(t, ("",))[0] == "br"

    def _fix_select(self, t, labels):
        """Make the selection type offer exactly ``labels``."""
        if isinstance(t, Select):
            if set(dict(t.arms)) != set(labels):
                raise _Mismatch(ErrorKind.COMPLIANCE_FAILURE, "orchestrator labels differ from the selection", "labels")
            return dict(t.arms)
        known = self.u.cons[t][1]
        extra = sorted(set(known) - set(labels))
        if extra:
            raise _Mismatch(ErrorKind.COMPLIANCE_FAILURE, f"selected label {extra[0]} not enabled by the orchestrator", "labels")
        full = {l: known[l] if l in known else self.u.tvar() for l in labels}
        self.u.unify(t, Select(tuple((l, full[l]) for l in labels)))
        return full

    def _fix_branch(self, t, labels):
        """The branching type must offer every label in ``labels``."""
        if isinstance(t, Branch):
            have = dict(t.arms)
        else:
            have = self.u.cons[t][1]
        missing = [l for l in labels if l not in have]
        if missing:
            raise _Mismatch(ErrorKind.COMPLIANCE_FAILURE, f"label {missing[0]} not offered by the branching", "labels")
        if not isinstance(t, Branch):
            self.u.unify(t, Branch(tuple((l, have[l]) for l in labels)))
        return have

    def solve(self):
        pending = list(self.restrictions)
        while pending:
            progress = False
            left = []
            for r in pending:
                snapshot = (dict(self.u.tsub), dict(self.u.cons), dict(self.u.gsub), dict(self.u.psub))
                try:
                    self.comply(r.f, r.minus, r.plus)
                    progress = True
                except _Blocked:
                    self.u.tsub, self.u.cons, self.u.gsub, self.u.psub = snapshot
                    left.append(r)
                except _Mismatch as m:
                    s1, s2 = self.u.zonk(r.minus), self.u.zonk(r.plus)
                    raise SessionTypeError(ErrorKind.COMPLIANCE_FAILURE,
                                           f"orchestrator for {r.chan} does not make the ends compliant: {m.detail}",
                                           r.path, m.reason or "shape", (s1, s2))
            if not progress:
                break  # what remains is unconstrained and admits a witness
            pending = left


def _is_io(t):
    return isinstance(t, (InValue, OutValue, InSession, OutSession))


def _strip_end(d):
    return {k: t for k, t in d.items() if not isinstance(t, End)}


def _ordered(mode) -> bool:
    return getattr(mode, "name", mode) == "PRIORITY_PROCESS"


def typecheck(gamma: Optional[dict], p: Process, mode=None, functions: FunctionTable = DEFAULT_FUNCTIONS) -> Typing:
    """Infer the minimal typing of ``p`` under ``gamma``; raise SessionTypeError otherwise.

    Typing ignores the order of speculative options except in the
    priority-process mode, where a process must list them as its type does.
    """
    c = _Checker(functions, _ordered(mode))
    d = c.infer(p, dict(gamma or {}), ())
    c.solve()
    out = {}
    for k, t in c.norm(d).items():
        out[k] = c.u.zonk(t)
    return _strip_end(out)


def infer_variable_ground(gamma_var: str, p: Process, functions: FunctionTable = DEFAULT_FUNCTIONS):
    """Ground type forced on the free variable ``gamma_var`` of ``p``, or None."""
    c = _Checker(functions)
    g = c.u.gvar()
    c.infer(p, {gamma_var: g}, ())
    c.solve()
    r = c.u.gfind(g)
    return None if isinstance(r, GVar) else r


def admits(inferred: Typing, claimed: Typing) -> bool:
    """Whether ``claimed`` is the inferred typing weakened by end entries."""
    for k, t in claimed.items():
        if k in inferred:
            if inferred[k] != t:
                return False
        elif not isinstance(t, End):
            return False
    return all(k in claimed for k in inferred)


def format_typing(d: Typing) -> str:
    from .surface import pretty

    if not d:
        return "∅"
    items = sorted(d.items(), key=lambda kv: (kv[0][0], kv[0][1].value))
    return ", ".join(f"{n}^{p.value}: {pretty(t)}" for (n, p), t in items)
