"""Abstract syntax: ground and session types, orchestrators, expressions, processes.

Every node is an immutable (frozen) dataclass. Choice-like constructs keep their
arms as an ordered tuple of ``(label, item)`` pairs; labels must be pairwise
distinct and the tuple nonempty.
"""

from __future__ import annotations

import dataclasses
import enum
import re
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, Optional, Union


class WellFormednessError(ValueError):
    """A syntax node violates a construction invariant."""


class EvalError(Exception):
    pass


class UnboundVariable(EvalError):
    pass


class ArityMismatch(EvalError):
    pass


class UnknownFunction(EvalError):
    pass


_IDENT = re.compile(r"^[A-Za-z_][A-Za-z0-9_']*$")

BUILTIN_GROUND_TYPES = ("Nat", "Bool", "String", "Url", "Amount", "CcNumber", "TransIDnum")
_ground_registry: set[str] = set(BUILTIN_GROUND_TYPES)


def register_ground_type(name: str) -> "GroundType":
    if not _IDENT.match(name):
        raise WellFormednessError(f"bad ground type name {name!r}")
    _ground_registry.add(name)
    return GroundType(name)


def is_ground_type(name: str) -> bool:
    return name in _ground_registry


def check_label(label: str) -> str:
    if not isinstance(label, str) or not _IDENT.match(label):
        raise WellFormednessError(f"bad label {label!r}")
    return label


def check_ident(name: str) -> str:
    if not isinstance(name, str) or not _IDENT.match(name):
        raise WellFormednessError(f"bad identifier {name!r}")
    return name


def _check_arms(arms, what: str) -> None:
    if not isinstance(arms, tuple):
        raise WellFormednessError(f"{what}: arms must be a tuple")
    if not arms:
        raise WellFormednessError(f"{what}: empty arm list")
    seen = set()
    for label, _ in arms:
        check_label(label)
        if label in seen:
            raise WellFormednessError(f"{what}: duplicate label {label!r}")
        seen.add(label)


# ---------------------------------------------------------------------------
# Polarities and ground types


class Polarity(enum.Enum):
    PLUS = "+"
    MINUS = "-"

    @property
    def dual(self) -> "Polarity":
        return Polarity.MINUS if self is Polarity.PLUS else Polarity.PLUS

    def __repr__(self) -> str:
        return f"Polarity.{self.name}"


PLUS = Polarity.PLUS
MINUS = Polarity.MINUS


def dual_polarity(p: Polarity) -> Polarity:
    return p.dual


@dataclass(frozen=True)
class GroundType:
    name: str

    def __post_init__(self):
        if self.name not in _ground_registry:
            raise WellFormednessError(f"unknown ground type {self.name!r}")

    def __str__(self) -> str:
        return self.name


NAT = GroundType("Nat")
BOOL = GroundType("Bool")
STRING = GroundType("String")


# ---------------------------------------------------------------------------
# Session types


class SessionType:
    __slots__ = ()


@dataclass(frozen=True)
class End(SessionType):
    pass


@dataclass(frozen=True)
class InValue(SessionType):
    g: GroundType
    cont: SessionType


@dataclass(frozen=True)
class OutValue(SessionType):
    g: GroundType
    cont: SessionType


@dataclass(frozen=True)
class InSession(SessionType):
    carried: SessionType
    pol: Polarity
    cont: SessionType


@dataclass(frozen=True)
class OutSession(SessionType):
    carried: SessionType
    pol: Polarity
    cont: SessionType


@dataclass(frozen=True)
class Branch(SessionType):
    arms: tuple

    def __post_init__(self):
        _check_arms(self.arms, "branching type")

    def arm(self, label):
        return dict(self.arms).get(label)


@dataclass(frozen=True)
class Select(SessionType):
    arms: tuple

    def __post_init__(self):
        _check_arms(self.arms, "selection type")

    def arm(self, label):
        return dict(self.arms).get(label)


@dataclass(frozen=True)
class SpecSelect(SessionType):
    arms: tuple
    prioritized: bool = False

    def __post_init__(self):
        _check_arms(self.arms, "speculative selection type")

    def arm(self, label):
        return dict(self.arms).get(label)


END = End()


def labels(arms) -> list:
    return [label for label, _ in arms]


# ---------------------------------------------------------------------------
# Orchestrators


class Orchestrator:
    __slots__ = ()


@dataclass(frozen=True)
class Idle(Orchestrator):
    pass


@dataclass(frozen=True)
class IOPrefix(Orchestrator):
    cont: Orchestrator


@dataclass(frozen=True)
class LabelPrefix(Orchestrator):
    label: str
    cont: Orchestrator

    def __post_init__(self):
        check_label(self.label)

    @property
    def arms(self):
        return ((self.label, self.cont),)


@dataclass(frozen=True)
class ExternalChoice(Orchestrator):
    arms: tuple

    def __new__(cls, arms=()):
        # a one-armed choice is just a selection prefix
        if isinstance(arms, tuple) and len(arms) == 1:
            label, cont = arms[0]
            return LabelPrefix(label, cont)
        return super().__new__(cls)

    def __post_init__(self):
        _check_arms(self.arms, "external choice")


@dataclass(frozen=True)
class InternalChoice(Orchestrator):
    arms: tuple

    def __new__(cls, arms=()):
        if isinstance(arms, tuple) and len(arms) == 1:
            label, cont = arms[0]
            return LabelPrefix(label, cont)
        return super().__new__(cls)

    def __post_init__(self):
        _check_arms(self.arms, "internal choice")


IDLE = Idle()


def choice_arms(f: Orchestrator) -> Optional[tuple]:
    """Arms of a label-driven orchestrator, or None."""
    if isinstance(f, (LabelPrefix, ExternalChoice, InternalChoice)):
        return f.arms
    return None


# ---------------------------------------------------------------------------
# Values and expressions


@dataclass(frozen=True)
class Value:
    """A concrete ground value. ``data`` is int for Nat, bool for Bool, str for String."""

    ground: GroundType
    data: Union[int, bool, str]

    def __post_init__(self):
        name = self.ground.name
        if name == "Nat":
            if isinstance(self.data, bool) or not isinstance(self.data, int) or self.data < 0:
                raise WellFormednessError(f"Nat value must be a natural number, got {self.data!r}")
        elif name == "Bool":
            if not isinstance(self.data, bool):
                raise WellFormednessError(f"Bool value must be a boolean, got {self.data!r}")
        elif name == "String":
            if not isinstance(self.data, str):
                raise WellFormednessError(f"String value must be a string, got {self.data!r}")
        elif isinstance(self.data, bool) or not isinstance(self.data, (int, str)):
            raise WellFormednessError(f"opaque value payload must be int or str, got {self.data!r}")


@dataclass(frozen=True)
class Sym:
    """An opaque symbolic value: the unevaluated application ``tag(args)``."""

    tag: str
    args: tuple
    ground: GroundType


GroundValue = Union[Value, Sym]


def nat(n: int) -> Value:
    return Value(NAT, n)


def boolean(b: bool) -> Value:
    return Value(BOOL, b)


def string(s: str) -> Value:
    return Value(STRING, s)


def value_type(v: GroundValue) -> GroundType:
    return v.ground


class Expression:
    __slots__ = ()


@dataclass(frozen=True)
class Literal(Expression):
    value: GroundValue


@dataclass(frozen=True)
class Var(Expression):
    name: str


@dataclass(frozen=True)
class Apply(Expression):
    fn: str
    args: tuple = ()


def expr_vars(e: Expression) -> set:
    if isinstance(e, Var):
        return {e.name}
    if isinstance(e, Apply):
        out = set()
        for a in e.args:
            out |= expr_vars(a)
        return out
    return set()


def subst_expr(e: Expression, var: str, v: GroundValue) -> Expression:
    if isinstance(e, Var):
        return Literal(v) if e.name == var else e
    if isinstance(e, Apply):
        return Apply(e.fn, tuple(subst_expr(a, var, v) for a in e.args))
    return e


@dataclass(frozen=True)
class FunctionSig:
    params: tuple
    result: GroundType


class FunctionTable:
    """Signatures of the named pure functions usable in expressions.

    A function may carry an implementation (a Python callable over ground
    values) or a lookup table keyed by argument tuples; otherwise application
    evaluates to a symbolic value of the declared result type.
    """

    def __init__(self, sigs: Optional[Mapping[str, FunctionSig]] = None,
                 impls: Optional[Mapping[str, Callable]] = None):
        self._sigs = dict(sigs or {})
        self._impls = dict(impls or {})

    def signature(self, name: str) -> Optional[FunctionSig]:
        return self._sigs.get(name)

    def names(self) -> list:
        return sorted(self._sigs)

    def with_function(self, name: str, params: Iterable[GroundType], result: GroundType,
                      impl: Optional[Callable] = None) -> "FunctionTable":
        sigs = dict(self._sigs)
        impls = dict(self._impls)
        sigs[check_ident(name)] = FunctionSig(tuple(params), result)
        if impl is not None:
            impls[name] = impl
        else:
            impls.pop(name, None)
        return FunctionTable(sigs, impls)

    def with_table(self, name: str, table: Mapping[tuple, GroundValue]) -> "FunctionTable":
        """Attach a literal-result table to an already declared function.

        Argument tuples missing from the table fall back to the previous
        behaviour (implementation or symbolic value).
        """
        sig = self._sigs[name]
        fallback = self._impls.get(name)
        frozen = dict(table)

        def lookup(*args):
            if args in frozen:
                return frozen[args]
            if fallback is not None:
                return fallback(*args)
            return Sym(name, args, sig.result)

        return self.with_function(name, sig.params, sig.result, lookup)

    def call(self, name: str, args: tuple) -> GroundValue:
        sig = self._sigs.get(name)
        if sig is None:
            raise UnknownFunction(f"unknown function {name!r}")
        if len(args) != len(sig.params):
            raise ArityMismatch(f"{name} expects {len(sig.params)} argument(s), got {len(args)}")
        impl = self._impls.get(name)
        if impl is None:
            return Sym(name, tuple(args), sig.result)
        out = impl(*args)
        if not isinstance(out, (Value, Sym)):
            out = Value(sig.result, out)
        if out.ground != sig.result:
            raise EvalError(f"{name} returned a {out.ground.name}, declared {sig.result.name}")
        return out

    @classmethod
    def default(cls) -> "FunctionTable":
        amount = GroundType("Amount")
        url = GroundType("Url")
        cc = GroundType("CcNumber")
        trans = GroundType("TransIDnum")
        sigs = {
            "available": FunctionSig((STRING,), BOOL),
            "amount": FunctionSig((STRING,), amount),
            "url": FunctionSig((STRING,), url),
            "IDtrans": FunctionSig((amount, cc), trans),
            "coin": FunctionSig((), BOOL),
            "wantsToBuy": FunctionSig((), BOOL),
            "succ": FunctionSig((NAT,), NAT),
            "neg": FunctionSig((BOOL,), BOOL),
        }
        impls = {
            "succ": lambda v: nat(v.data + 1) if isinstance(v, Value) else Sym("succ", (v,), NAT),
            "neg": lambda v: boolean(not v.data) if isinstance(v, Value) else Sym("neg", (v,), BOOL),
        }
        return cls(sigs, impls)


DEFAULT_FUNCTIONS = FunctionTable.default()


def eval_expr(env: FunctionTable, e: Expression) -> GroundValue:
    if isinstance(e, Literal):
        return e.value
    if isinstance(e, Var):
        raise UnboundVariable(f"free variable {e.name!r}")
    if isinstance(e, Apply):
        args = tuple(eval_expr(env, a) for a in e.args)
        return env.call(e.fn, args)
    raise TypeError(f"not an expression: {e!r}")


# ---------------------------------------------------------------------------
# Processes


@dataclass(frozen=True)
class ChannelRef:
    name: str
    pol: Optional[Polarity] = None

    def __str__(self) -> str:
        return self.name if self.pol is None else f"{self.name}^{self.pol.value}"


class Process:
    __slots__ = ()


@dataclass(frozen=True)
class Inact(Process):
    pass


@dataclass(frozen=True)
class Par(Process):
    left: Process
    right: Process


@dataclass(frozen=True)
class Request(Process):
    port: str
    ty: SessionType
    chan: str
    body: Process


@dataclass(frozen=True)
class Accept(Process):
    port: str
    ty: SessionType
    chan: str
    body: Process


@dataclass(frozen=True)
class SendValue(Process):
    chan: ChannelRef
    e: Expression
    cont: Process


@dataclass(frozen=True)
class RecvValue(Process):
    chan: ChannelRef
    var: str
    cont: Process


@dataclass(frozen=True)
class Throw(Process):
    chan: ChannelRef
    sent: ChannelRef
    cont: Process


@dataclass(frozen=True)
class Catch(Process):
    chan: ChannelRef
    bound: str
    cont: Process


@dataclass(frozen=True)
class SelectL(Process):
    chan: ChannelRef
    label: str
    cont: Process

    def __post_init__(self):
        check_label(self.label)


@dataclass(frozen=True)
class BranchL(Process):
    chan: ChannelRef
    arms: tuple

    def __post_init__(self):
        _check_arms(self.arms, "branching process")


@dataclass(frozen=True)
class SpecSelectP(Process):
    chan: ChannelRef
    arms: tuple
    prioritized: bool = False

    def __post_init__(self):
        _check_arms(self.arms, "speculative selection process")


@dataclass(frozen=True)
class IfThenElse(Process):
    cond: Expression
    then: Process
    orelse: Process


@dataclass(frozen=True)
class NamedOrch(Process):
    chan: str
    f: Orchestrator


@dataclass(frozen=True)
class Restrict(Process):
    chan: str
    body: Process


INACT = Inact()

PREFIXES = (SendValue, RecvValue, Throw, Catch, SelectL, BranchL, SpecSelectP)


def par(*procs: Process) -> Process:
    """Right-nested parallel composition; ``par()`` is 𝟘."""
    if not procs:
        return INACT
    out = procs[-1]
    for p in reversed(procs[:-1]):
        out = Par(p, out)
    return out


def par_components(p: Process) -> list:
    """Flatten nested ``Par`` nodes (left to right)."""
    out = []
    stack = [p]
    while stack:
        q = stack.pop()
        if isinstance(q, Par):
            stack.append(q.right)
            stack.append(q.left)
        else:
            out.append(q)
    return out


def subject(p: Process) -> Optional[ChannelRef]:
    """Channel on which a prefixed process performs its first action."""
    if isinstance(p, PREFIXES):
        return p.chan
    return None


def children(p: Process) -> list:
    """Immediate subprocesses of ``p``."""
    if isinstance(p, Par):
        return [p.left, p.right]
    if isinstance(p, (Request, Accept)):
        return [p.body]
    if isinstance(p, (SendValue, RecvValue, Throw, Catch, SelectL)):
        return [p.cont]
    if isinstance(p, (BranchL, SpecSelectP)):
        return [q for _, q in p.arms]
    if isinstance(p, IfThenElse):
        return [p.then, p.orelse]
    if isinstance(p, Restrict):
        return [p.body]
    return []


def _refs(p: Process) -> list:
    if isinstance(p, Throw):
        return [p.chan, p.sent]
    if isinstance(p, PREFIXES):
        return [p.chan]
    return []


def _binder(p: Process) -> Optional[str]:
    if isinstance(p, (Request, Accept, Restrict)):
        return p.chan
    if isinstance(p, Catch):
        return p.bound
    return None


def free_channels(p: Process) -> set:
    if isinstance(p, Inact):
        return set()
    if isinstance(p, NamedOrch):
        return {p.chan}
    out = {r.name for r in _refs(p)}
    inner = set()
    for q in children(p):
        inner |= free_channels(q)
    b = _binder(p)
    if b is not None:
        inner.discard(b)
    return out | inner


def all_channel_names(p: Process) -> set:
    """Every channel name occurring in ``p``, bound or free."""
    out = {r.name for r in _refs(p)}
    b = _binder(p)
    if b is not None:
        out.add(b)
    if isinstance(p, NamedOrch):
        out.add(p.chan)
    for q in children(p):
        out |= all_channel_names(q)
    return out


def fresh_name(base: str, avoid: set) -> str:
    stem = base.rstrip("'0123456789") or "k"
    i = 0
    while True:
        cand = f"{stem}{i}"
        if cand not in avoid:
            return cand
        i += 1


def _rebuild(p: Process, kids: list) -> Process:
    if isinstance(p, Par):
        return Par(kids[0], kids[1])
    if isinstance(p, Request):
        return Request(p.port, p.ty, p.chan, kids[0])
    if isinstance(p, Accept):
        return Accept(p.port, p.ty, p.chan, kids[0])
    if isinstance(p, SendValue):
        return SendValue(p.chan, p.e, kids[0])
    if isinstance(p, RecvValue):
        return RecvValue(p.chan, p.var, kids[0])
    if isinstance(p, Throw):
        return Throw(p.chan, p.sent, kids[0])
    if isinstance(p, Catch):
        return Catch(p.chan, p.bound, kids[0])
    if isinstance(p, SelectL):
        return SelectL(p.chan, p.label, kids[0])
    if isinstance(p, BranchL):
        return BranchL(p.chan, tuple((l, q) for (l, _), q in zip(p.arms, kids)))
    if isinstance(p, SpecSelectP):
        return SpecSelectP(p.chan, tuple((l, q) for (l, _), q in zip(p.arms, kids)), p.prioritized)
    if isinstance(p, IfThenElse):
        return IfThenElse(p.cond, kids[0], kids[1])
    if isinstance(p, Restrict):
        return Restrict(p.chan, kids[0])
    return p


def _with_binder(p: Process, name: str) -> Process:
    if isinstance(p, Request):
        return Request(p.port, p.ty, name, p.body)
    if isinstance(p, Accept):
        return Accept(p.port, p.ty, name, p.body)
    if isinstance(p, Restrict):
        return Restrict(name, p.body)
    if isinstance(p, Catch):
        return Catch(p.chan, name, p.cont)
    raise TypeError(p)


def rename_channel(p: Process, old: str, new: str) -> Process:
    """Rename every free occurrence of channel ``old`` (any polarity) to ``new``."""
    if old == new:
        return p
    return rename_channels(p, {old: new})


def rename_channels(p: Process, mapping: Mapping[str, str]) -> Process:
    """Simultaneously rename free channel names (any polarity), avoiding capture."""
    if not mapping or isinstance(p, Inact):
        return p
    if isinstance(p, NamedOrch):
        return NamedOrch(mapping[p.chan], p.f) if p.chan in mapping else p
    p = _map_refs(p, lambda r: ChannelRef(mapping[r.name], r.pol) if r.name in mapping else r)
    b = _binder(p)
    inner = mapping
    if b is not None:
        if b in mapping:
            inner = {k: v for k, v in mapping.items() if k != b}
        if b in inner.values():
            # capture: move the binder out of the way
            fresh = fresh_name(b, all_channel_names(p) | set(inner) | set(inner.values()))
            p = _with_binder(p, fresh)
            inner = dict(inner)
            inner[b] = fresh
        if not inner:
            return p
    return _rebuild(p, [rename_channels(q, inner) for q in children(p)])


def _map_refs(p: Process, fn) -> Process:
    if isinstance(p, Throw):
        return Throw(fn(p.chan), fn(p.sent), p.cont)
    if isinstance(p, SendValue):
        return SendValue(fn(p.chan), p.e, p.cont)
    if isinstance(p, RecvValue):
        return RecvValue(fn(p.chan), p.var, p.cont)
    if isinstance(p, Catch):
        return Catch(fn(p.chan), p.bound, p.cont)
    if isinstance(p, SelectL):
        return SelectL(fn(p.chan), p.label, p.cont)
    if isinstance(p, BranchL):
        return BranchL(fn(p.chan), p.arms)
    if isinstance(p, SpecSelectP):
        return SpecSelectP(fn(p.chan), p.arms, p.prioritized)
    return p


def subst_channel(p: Process, frm: str, to: ChannelRef) -> Process:
    """Replace unpolarized free occurrences of ``frm`` by ``to``, avoiding capture."""
    if isinstance(p, (Inact, NamedOrch)):
        return p
    p = _map_refs(p, lambda r: to if (r.name == frm and r.pol is None) else r)
    b = _binder(p)
    if b == frm:
        return p
    if b is not None and b == to.name and frm in free_channels(p):
        fresh = fresh_name(b, all_channel_names(p) | {frm, to.name})
        p = _with_binder(p, fresh)
        p = _rebuild(p, [rename_channel(q, b, fresh) for q in children(p)])
    return _rebuild(p, [subst_channel(q, frm, to) for q in children(p)])


def subst_value(p: Process, var: str, v: GroundValue) -> Process:
    """Capture-avoiding substitution of the value ``v`` for the variable ``var``."""
    if isinstance(p, SendValue):
        return SendValue(p.chan, subst_expr(p.e, var, v), subst_value(p.cont, var, v))
    if isinstance(p, RecvValue):
        if p.var == var:
            return p
        return RecvValue(p.chan, p.var, subst_value(p.cont, var, v))
    if isinstance(p, IfThenElse):
        return IfThenElse(subst_expr(p.cond, var, v), subst_value(p.then, var, v),
                          subst_value(p.orelse, var, v))
    kids = children(p)
    if not kids:
        return p
    return _rebuild(p, [subst_value(q, var, v) for q in kids])


def free_vars(p: Process) -> set:
    """Expression variables occurring free in ``p``."""
    if isinstance(p, SendValue):
        return expr_vars(p.e) | free_vars(p.cont)
    if isinstance(p, RecvValue):
        return free_vars(p.cont) - {p.var}
    if isinstance(p, IfThenElse):
        return expr_vars(p.cond) | free_vars(p.then) | free_vars(p.orelse)
    out = set()
    for q in children(p):
        out |= free_vars(q)
    return out


def is_user_defined(p: Process) -> bool:
    if isinstance(p, (NamedOrch, Restrict)):
        return False
    if any(r.pol is not None for r in _refs(p)):
        return False
    return all(is_user_defined(q) for q in children(p))


def _cache_hash(cls):
    # terms are immutable and hashed over and over by the explorer
    base = cls.__hash__

    def __hash__(self):
        d = self.__dict__
        h = d.get("_hash")
        if h is None:
            h = base(self)
            object.__setattr__(self, "_hash", h)
        return h

    cls.__hash__ = __hash__


for _cls in list(globals().values()):
    if isinstance(_cls, type) and dataclasses.is_dataclass(_cls) and _cls.__hash__ is not None \
            and issubclass(_cls, (Process, SessionType, Orchestrator, Expression, Value, Sym, ChannelRef)):
        _cache_hash(_cls)
del _cls
