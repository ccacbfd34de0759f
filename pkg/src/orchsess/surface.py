"""ASCII surface syntax for types, orchestrators and processes.

Types         end  ?G.S  !G.S  ?(S+).S  !(S-).S  &{l:S,..}  +{..}  spec{..}  spec<<..>>
Orchestrators 1  *.f  l.f  l.f + l'.g  l.f (+) l'.g
Processes     0  P | Q  request a:(S)(k).P  accept a:(S)(k).P  k!<e>.P  k?(x).P
              k!<<k'>>.P  k?((k')).P  k<|l.P  k|>{l:P,..}  k spec{..}  k spec<<..>>
              if e then P else Q  orch k {f}  (new k) P      (k^+ / k^- for polarized ends)
Expressions   42  "text"  true  false  e as G  sym f(v,..) as G  x  f(e,..)

A file is a sequence of headers (``let name = ...``, ``ground Name``,
``fun f(G,..): G``) optionally followed by a main term.  ``#`` starts a comment.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from typing import Optional

from .syntax import (
    END,
    IDLE,
    Accept,
    Apply,
    Branch,
    BranchL,
    Catch,
    ChannelRef,
    DEFAULT_FUNCTIONS,
    End,
    Expression,
    ExternalChoice,
    FunctionTable,
    GroundType,
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
    Polarity,
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
    Sym,
    Throw,
    Value,
    Var,
    WellFormednessError,
    is_ground_type,
    register_ground_type,
)


@dataclass(frozen=True)
class SourceSpan:
    file: str
    start: tuple
    end: tuple

    def __str__(self):
        return f"{self.file}:{self.start[0]}:{self.start[1]}"


class ParseError(Exception):
    def __init__(self, message: str, span: SourceSpan):
        super().__init__(f"{span}: {message}")
        self.message = message
        self.span = span


KEYWORDS = {
    "let", "ground", "fun", "type", "orch", "proc", "request", "accept", "if", "then",
    "else", "new", "spec", "end", "true", "false", "as", "sym",
}

_TOKEN = re.compile(
    r"""
    (?P<ws>[ \t\r\n]+|\#[^\n]*)
  | (?P<string>"(?:[^"\\\n]|\\.)*")
  | (?P<int>[0-9]+)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_']*)
  | (?P<op><\||\|>|\(\+\)|[(){}<>.,:;|!?&+*=^\-])
    """,
    re.VERBOSE,
)


@dataclass
class Token:
    kind: str
    text: str
    start: tuple
    end: tuple


def tokenize(text: str, file: str = "<input>") -> list:
    out = []
    pos, line, col = 0, 1, 1
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            sp = SourceSpan(file, (line, col), (line, col + 1))
            raise ParseError(f"unexpected character {text[pos]!r}", sp)
        chunk = m.group(0)
        start = (line, col)
        nl = chunk.count("\n")
        if nl:
            line += nl
            col = len(chunk) - chunk.rfind("\n")
        else:
            col += len(chunk)
        if m.lastgroup != "ws":
            out.append(Token(m.lastgroup, chunk, start, (line, col)))
        pos = m.end()
    out.append(Token("eof", "", (line, col), (line, col)))
    return out


@dataclass
class Module:
    types: dict = field(default_factory=dict)
    orchs: dict = field(default_factory=dict)
    procs: dict = field(default_factory=dict)
    functions: FunctionTable = DEFAULT_FUNCTIONS
    main: object = None
    order: list = field(default_factory=list)
    # id(node) -> (node, span); the node is kept so its id is never reused
    spans: dict = field(default_factory=dict, repr=False)

    def span_of(self, node) -> Optional["SourceSpan"]:
        hit = self.spans.get(id(node))
        return hit[1] if hit is not None and hit[0] is node else None

    def locate(self, path) -> Optional["SourceSpan"]:
        """Source span of the subterm of ``main`` at a child-index path (best effort)."""
        from .syntax import children

        node = self.main
        best = self.span_of(node)
        for i in path:
            kids = children(node) if node is not None else []
            if i >= len(kids):
                break
            node = kids[i]
            best = self.span_of(node) or best
        return best

    def lookup(self, name):
        for table in (self.types, self.orchs, self.procs):
            if name in table:
                return table[name]
        raise KeyError(name)


class _Parser:
    def __init__(self, text: str, file: str, module: Optional[Module] = None):
        self.toks = tokenize(text, file)
        self.i = 0
        self.file = file
        self.m = module or Module()

    # token helpers
    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def peek(self, n=1) -> Token:
        return self.toks[min(self.i + n, len(self.toks) - 1)]

    def error(self, msg, tok=None):
        tok = tok or self.tok
        raise ParseError(msg, SourceSpan(self.file, tok.start, tok.end if tok.end > tok.start else (tok.start[0], tok.start[1] + 1)))

    def at(self, text) -> bool:
        t = self.tok
        return t.kind in ("op", "ident") and t.text == text

    def accept(self, text) -> bool:
        if self.at(text):
            self.i += 1
            return True
        return False

    def expect(self, text):
        if not self.accept(text):
            shown = self.tok.text or "end of input"
            self.error(f"expected {text!r}, found {shown!r}")

    def ident(self, what="identifier", allow_keywords=False) -> str:
        t = self.tok
        if t.kind != "ident" or (not allow_keywords and t.text in KEYWORDS):
            self.error(f"expected {what}, found {t.text or 'end of input'!r}")
        self.i += 1
        return t.text

    def label(self) -> str:
        return self.ident("label", allow_keywords=True)

    def wrap(self, fn, *args):
        """Run a constructor, turning invariant violations into parse errors."""
        tok = self.tok
        try:
            return fn(*args)
        except WellFormednessError as e:
            self.error(str(e), tok)

    # ------------------------------------------------------------------ module
    def module(self, main_sort: Optional[str]):
        while self.tok.kind != "eof":
            if self.at("let"):
                self.let()
            elif self.at("ground"):
                self.i += 1
                name = self.ident("ground type name")
                register_ground_type(name)
            elif self.at("fun"):
                self.fun()
            elif main_sort == "any" and self.m.main is None:
                self.m.main = self.any_term()[1]
            elif main_sort is not None and self.m.main is None:
                self.m.main = self.term(main_sort)
            else:
                self.error("expected a header or the end of input")
        return self.m

    def fun(self):
        self.expect("fun")
        name = self.ident("function name")
        self.expect("(")
        params = []
        if not self.at(")"):
            params.append(self.ground())
            while self.accept(","):
                params.append(self.ground())
        self.expect(")")
        self.expect(":")
        result = self.ground()
        self.m.functions = self.m.functions.with_function(name, params, result)

    def let(self):
        start = self.tok
        self.expect("let")
        sort = None
        if self.tok.text in ("type", "orch", "proc") and self.peek().kind == "ident":
            sort = self.tok.text
            self.i += 1
        name = self.ident("binding name")
        if name in self.m.types or name in self.m.orchs or name in self.m.procs:
            self.error(f"{name} is already bound", start)
        self.expect("=")
        if sort is None:
            sort, value = self.any_term()
        else:
            value = self.term(sort)
            if not self._at_item_end():
                self.error("unexpected input after binding")
        {"type": self.m.types, "orch": self.m.orchs, "proc": self.m.procs}[sort][name] = value
        self.m.order.append((sort, name))

    def any_term(self):
        """Read a type, an orchestrator or a process, whichever parses up to the item end."""
        save = self.i
        first_error = None
        for s in ("type", "orch", "proc"):
            self.i = save
            try:
                value = self.term(s)
                if self._at_item_end():
                    return s, value
                raise ParseError("trailing input", SourceSpan(self.file, self.tok.start, self.tok.end))
            except ParseError as e:
                # report the reading that got furthest
                if first_error is None or e.span.start > first_error.span.start:
                    first_error = e
        raise first_error

    def _at_item_end(self):
        # a token in the first column starts a new item
        return self.tok.kind == "eof" or self.tok.text in ("let", "ground", "fun") and self.tok.kind == "ident" \
            or self.accept(";") or self.tok.start[1] == 1

    def term(self, sort):
        if sort == "type":
            return self.stype()
        if sort == "orch":
            return self.orch()
        return self.proc()

    # ------------------------------------------------------------------ types
    def ground(self) -> GroundType:
        t = self.tok
        name = self.ident("ground type")
        if not is_ground_type(name):
            self.error(f"unknown ground type {name!r}", t)
        return GroundType(name)

    def polarity(self) -> Polarity:
        if self.accept("+"):
            return PLUS
        if self.accept("-"):
            return MINUS
        self.error("expected a polarity '+' or '-'")

    def _type_cont(self) -> SessionType:
        if self.accept("."):
            return self.stype()
        return END

    def stype(self) -> SessionType:
        t = self.tok
        if self.accept("end"):
            return END
        if self.at("?") or self.at("!"):
            out = self.tok.text == "!"
            self.i += 1
            if self.accept("("):
                carried = self.stype()
                pol = self.polarity()
                self.expect(")")
                cont = self._type_cont()
                return (OutSession if out else InSession)(carried, pol, cont)
            g = self.ground()
            cont = self._type_cont()
            return (OutValue if out else InValue)(g, cont)
        if self.accept("&"):
            return self.wrap(Branch, self.type_arms("{", "}"))
        if self.accept("+"):
            return self.wrap(Select, self.type_arms("{", "}"))
        if self.accept("spec"):
            if self.at("<"):
                return self.wrap(SpecSelect, self.type_arms("<<", ">>"), True)
            return self.wrap(SpecSelect, self.type_arms("{", "}"), False)
        if self.accept("("):
            s = self.stype()
            self.expect(")")
            return s
        if t.kind == "ident" and t.text in self.m.types:
            self.i += 1
            return self.m.types[t.text]
        self.error(f"expected a session type, found {t.text or 'end of input'!r}")

    def _open(self, delim):
        for ch in delim:
            self.expect(ch)

    def type_arms(self, open_, close):
        self._open(open_)
        arms = []
        seen = set()
        while True:
            t = self.tok
            l = self.label()
            if l in seen:
                self.error(f"duplicate label {l!r}", t)
            seen.add(l)
            self.expect(":")
            arms.append((l, self.stype()))
            if not self.accept(","):
                break
        self._open(close)
        return tuple(arms)

    # ------------------------------------------------------------------ orchestrators
    def orch(self) -> Orchestrator:
        first_tok = self.tok
        first = self.orch_term()
        if not (self.at("+") or self.at("(+)")):
            return first
        op = self.tok.text
        kind = ExternalChoice if op == "+" else InternalChoice
        arms = []
        self._add_arms(arms, first, kind, first_tok)
        while self.at("+") or self.at("(+)"):
            if self.tok.text != op:
                self.error("mixed '+' and '(+)' need parentheses")
            self.i += 1
            t = self.tok
            self._add_arms(arms, self.orch_term(), kind, t)
        return kind(tuple(arms))

    def _add_arms(self, arms, f, kind, tok):
        if isinstance(f, LabelPrefix):
            new = [(f.label, f.cont)]
        elif isinstance(f, kind):
            new = list(f.arms)
        else:
            self.error("each alternative of a choice must start with a label", tok)
        for l, g in new:
            if any(l == l2 for l2, _ in arms):
                self.error(f"duplicate label {l!r} in choice", tok)
            arms.append((l, g))

    def orch_term(self) -> Orchestrator:
        t = self.tok
        if t.kind == "int" and t.text == "1":
            self.i += 1
            return IDLE
        if self.accept("*"):
            if self.accept("."):
                return IOPrefix(self.orch_term())
            return IOPrefix(IDLE)
        if self.accept("("):
            f = self.orch()
            self.expect(")")
            return f
        if t.kind == "ident":
            if self.peek().text == "." and self.peek().kind == "op":
                self.i += 2
                return self.wrap(LabelPrefix, t.text, self.orch_term())
            if t.text in self.m.orchs:
                self.i += 1
                return self.m.orchs[t.text]
            self.i += 1
            return self.wrap(LabelPrefix, t.text, IDLE)
        self.error(f"expected an orchestrator, found {t.text or 'end of input'!r}")

    # ------------------------------------------------------------------ expressions
    def value_literal(self):
        """A literal value: int, string, bool, typed literal or symbolic value."""
        t = self.tok
        if self.accept("sym"):
            fn = self.ident("function name")
            self.expect("(")
            args = []
            if not self.at(")"):
                args.append(self.value_literal())
                while self.accept(","):
                    args.append(self.value_literal())
            self.expect(")")
            self.expect("as")
            return Sym(fn, tuple(args), self.ground())
        if t.kind == "int":
            self.i += 1
            v = int(t.text)
            return self._typed(v, GroundType("Nat"))
        if t.kind == "string":
            self.i += 1
            return self._typed(json.loads(t.text), GroundType("String"))
        if self.accept("true"):
            return self._typed(True, GroundType("Bool"))
        if self.accept("false"):
            return self._typed(False, GroundType("Bool"))
        self.error(f"expected a literal, found {t.text or 'end of input'!r}")

    def _typed(self, data, default):
        g = default
        if self.accept("as"):
            g = self.ground()
        return self.wrap(Value, g, data)

    def expr(self) -> Expression:
        t = self.tok
        if t.kind in ("int", "string") or t.text in ("true", "false", "sym") and t.kind == "ident":
            return Literal(self.value_literal())
        if t.kind == "ident" and t.text not in KEYWORDS:
            self.i += 1
            if self.accept("("):
                args = []
                if not self.at(")"):
                    args.append(self.expr())
                    while self.accept(","):
                        args.append(self.expr())
                self.expect(")")
                return Apply(t.text, tuple(args))
            return Var(t.text)
        self.error(f"expected an expression, found {t.text or 'end of input'!r}")

    # ------------------------------------------------------------------ processes
    def proc(self) -> Process:
        start = self.tok
        left = self.prefixed()
        if self.accept("|"):
            return self._mark(Par(left, self.proc()), start)
        return left

    def _mark(self, node, start):
        if id(node) not in self.m.spans:
            end = self.toks[self.i - 1].end if self.i > 0 else start.end
            self.m.spans[id(node)] = (node, SourceSpan(self.file, start.start, end))
        return node

    def chanref(self) -> ChannelRef:
        name = self.ident("channel")
        if self.accept("^"):
            return ChannelRef(name, self.polarity())
        return ChannelRef(name)

    def cont(self) -> Process:
        if self.accept("."):
            return self.prefixed()
        return Inact()

    def prefixed(self) -> Process:
        start = self.tok
        return self._mark(self._prefixed(), start)

    def _prefixed(self) -> Process:
        t = self.tok
        if t.kind == "int" and t.text == "0":
            self.i += 1
            return Inact()
        if self.at("(") and self.peek().text == "new":
            self.i += 2
            k = self.ident("channel")
            self.expect(")")
            return Restrict(k, self.prefixed())
        if self.accept("("):
            p = self.proc()
            self.expect(")")
            return p
        if self.at("request") or self.at("accept"):
            ctor = Request if self.tok.text == "request" else Accept
            self.i += 1
            port = self.ident("port")
            self.expect(":")
            self.expect("(")
            ty = self.stype()
            self.expect(")")
            self.expect("(")
            k = self.ident("channel")
            self.expect(")")
            return ctor(port, ty, k, self.cont())
        if self.accept("if"):
            cond = self.expr()
            self.expect("then")
            p = self.prefixed()
            self.expect("else")
            return IfThenElse(cond, p, self.prefixed())
        if self.accept("orch"):
            k = self.ident("channel")
            self.expect("{")
            f = self.orch()
            self.expect("}")
            return NamedOrch(k, f)
        if t.kind == "ident" and t.text not in KEYWORDS:
            nxt = self.peek()
            if nxt.text in ("!", "?", "<|", "|>", "^", "spec") and not (
                    nxt.text == "spec" and t.text in self.m.procs):
                return self.action()
            if t.text in self.m.procs:
                self.i += 1
                return self.m.procs[t.text]
        self.error(f"expected a process, found {t.text or 'end of input'!r}")

    def action(self) -> Process:
        k = self.chanref()
        t = self.tok
        if self.accept("!"):
            self.expect("<")
            if self.accept("<"):
                sent = self.chanref()
                self.expect(">")
                self.expect(">")
                return Throw(k, sent, self.cont())
            e = self.expr()
            self.expect(">")
            return SendValue(k, e, self.cont())
        if self.accept("?"):
            self.expect("(")
            if self.accept("("):
                b = self.ident("channel")
                self.expect(")")
                self.expect(")")
                return Catch(k, b, self.cont())
            x = self.ident("variable")
            self.expect(")")
            return RecvValue(k, x, self.cont())
        if self.accept("<|"):
            l = self.label()
            return self.wrap(SelectL, k, l, self.cont())
        if self.accept("|>"):
            return self.wrap(BranchL, k, self.proc_arms("{", "}"))
        if self.accept("spec"):
            if self.at("<"):
                return self.wrap(SpecSelectP, k, self.proc_arms("<<", ">>"), True)
            return self.wrap(SpecSelectP, k, self.proc_arms("{", "}"), False)
        self.error(f"expected an action on {k.name}", t)

    def proc_arms(self, open_, close):
        self._open(open_)
        arms, seen = [], set()
        while True:
            t = self.tok
            l = self.label()
            if l in seen:
                self.error(f"duplicate label {l!r}", t)
            seen.add(l)
            self.expect(":")
            arms.append((l, self.proc()))
            if not self.accept(","):
                break
        self._open(close)
        return tuple(arms)


def _parse(text, sort, file, module=None):
    p = _Parser(text, file, module)
    m = p.module(sort)
    if sort not in (None, "any") and m.main is None:
        p.error(f"expected a {dict(type='session type', orch='orchestrator', proc='process')[sort]}")
    return m


def parse_module(text: str, file: str = "<input>", sort: Optional[str] = None) -> Module:
    """Parse headers plus an optional main term of the given sort (or "any")."""
    return _parse(text, sort, file)


def parse_type(text: str, file: str = "<input>") -> SessionType:
    return _parse(text, "type", file).main


def parse_orch(text: str, file: str = "<input>") -> Orchestrator:
    return _parse(text, "orch", file).main


def parse_process(text: str, file: str = "<input>") -> Process:
    return _parse(text, "proc", file).main


def parse_expr(text: str, file: str = "<input>") -> Expression:
    p = _Parser(text, file)
    e = p.expr()
    if p.tok.kind != "eof":
        p.error("trailing input")
    return e


# ---------------------------------------------------------------------------
# printing


def _arms(arms, fn) -> str:
    return ", ".join(f"{l}: {fn(x)}" for l, x in arms)


def pretty_type(s: SessionType) -> str:
    if isinstance(s, End):
        return "end"
    if isinstance(s, (InValue, OutValue)):
        op = "?" if isinstance(s, InValue) else "!"
        return f"{op}{s.g}.{pretty_type(s.cont)}"
    if isinstance(s, (InSession, OutSession)):
        op = "?" if isinstance(s, InSession) else "!"
        return f"{op}({pretty_type(s.carried)}{s.pol.value}).{pretty_type(s.cont)}"
    if isinstance(s, Branch):
        return "&{" + _arms(s.arms, pretty_type) + "}"
    if isinstance(s, Select):
        return "+{" + _arms(s.arms, pretty_type) + "}"
    if isinstance(s, SpecSelect):
        if s.prioritized:
            return "spec<<" + _arms(s.arms, pretty_type) + ">>"
        return "spec{" + _arms(s.arms, pretty_type) + "}"
    return str(s)


def pretty_orch(f: Orchestrator) -> str:
    if isinstance(f, Idle):
        return "1"
    if isinstance(f, IOPrefix):
        return "*." + _orch_atom(f.cont)
    if isinstance(f, LabelPrefix):
        return f"{f.label}." + _orch_atom(f.cont)
    op = " + " if isinstance(f, ExternalChoice) else " (+) "
    return op.join(f"{l}.{_orch_atom(g)}" for l, g in f.arms)


def _orch_atom(f):
    s = pretty_orch(f)
    return f"({s})" if isinstance(f, (ExternalChoice, InternalChoice)) else s


def pretty_value(v) -> str:
    if isinstance(v, Sym):
        return f"sym {v.tag}(" + ", ".join(pretty_value(a) for a in v.args) + f") as {v.ground}"
    if isinstance(v.data, bool):
        body = "true" if v.data else "false"
        default = "Bool"
    elif isinstance(v.data, int):
        body, default = str(v.data), "Nat"
    else:
        body, default = json.dumps(v.data, ensure_ascii=False), "String"
    return body if v.ground.name == default else f"{body} as {v.ground}"


def pretty_expr(e: Expression) -> str:
    if isinstance(e, Literal):
        return pretty_value(e.value)
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Apply):
        return f"{e.fn}(" + ", ".join(pretty_expr(a) for a in e.args) + ")"
    return str(e)


def _ref(r: ChannelRef) -> str:
    return str(r)


def _cont(p: Process) -> str:
    if isinstance(p, Inact):
        return ""
    return "." + _atom(p)


def _atom(p: Process) -> str:
    s = pretty_process(p)
    return f"({s})" if isinstance(p, Par) else s


def pretty_process(p: Process) -> str:
    if isinstance(p, Inact):
        return "0"
    if isinstance(p, Par):
        return f"{_atom(p.left)} | {pretty_process(p.right)}"
    if isinstance(p, (Request, Accept)):
        kw = "request" if isinstance(p, Request) else "accept"
        return f"{kw} {p.port}:({pretty_type(p.ty)})({p.chan})" + _cont(p.body)
    if isinstance(p, SendValue):
        return f"{_ref(p.chan)}!<{pretty_expr(p.e)}>" + _cont(p.cont)
    if isinstance(p, RecvValue):
        return f"{_ref(p.chan)}?({p.var})" + _cont(p.cont)
    if isinstance(p, Throw):
        return f"{_ref(p.chan)}!<<{_ref(p.sent)}>>" + _cont(p.cont)
    if isinstance(p, Catch):
        return f"{_ref(p.chan)}?(({p.bound}))" + _cont(p.cont)
    if isinstance(p, SelectL):
        return f"{_ref(p.chan)}<|{p.label}" + _cont(p.cont)
    if isinstance(p, BranchL):
        return f"{_ref(p.chan)}|>{{" + _arms(p.arms, pretty_process) + "}"
    if isinstance(p, SpecSelectP):
        if p.prioritized:
            return f"{_ref(p.chan)} spec<<" + _arms(p.arms, pretty_process) + ">>"
        return f"{_ref(p.chan)} spec{{" + _arms(p.arms, pretty_process) + "}"
    if isinstance(p, IfThenElse):
        return f"if {pretty_expr(p.cond)} then {_atom(p.then)} else {_atom(p.orelse)}"
    if isinstance(p, NamedOrch):
        return f"orch {p.chan} {{{pretty_orch(p.f)}}}"
    if isinstance(p, Restrict):
        return f"(new {p.chan}) " + _atom(p.body)
    return str(p)


def pretty(x) -> str:
    if isinstance(x, SessionType):
        return pretty_type(x)
    if isinstance(x, Orchestrator):
        return pretty_orch(x)
    if isinstance(x, Process):
        return pretty_process(x)
    if isinstance(x, Expression):
        return pretty_expr(x)
    if isinstance(x, (Value, Sym)):
        return pretty_value(x)
    raise TypeError(f"cannot print {x!r}")
