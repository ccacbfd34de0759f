"""Structural congruence decided by normalisation.

The canonical form floats every top-level restriction outwards, so a state
reads ``(new c0)...(new cn)(orch.. | orch.. | P1 | ... | Pm)``.  Parallel
components are flattened and sorted everywhere, restricted names are
numbered by where they are used, and inner binders are renamed by depth.
"""

from __future__ import annotations

import itertools
import re

from .surface import pretty_process
from .syntax import (
    Accept,
    Catch,
    NamedOrch,
    Par,
    Process,
    Request,
    Restrict,
    children,
    free_channels,
    par,
    par_components,
    rename_channel,
    rename_channels,
    _rebuild,
)

MAX_PERMUTATIONS = 5040


class MalformedRuntime(ValueError):
    """A restriction without exactly one orchestrator on its name, or a doubled orchestrator."""


def _prefix(base: str, avoid: set) -> str:
    pat = None
    prefix = base
    while True:
        pat = re.compile(rf"^{re.escape(prefix)}\d+$")
        if not any(pat.match(n) for n in avoid):
            return prefix
        prefix += "_"


def _binder_name(p):
    if isinstance(p, (Request, Accept, Restrict)):
        return p.chan
    if isinstance(p, Catch):
        return p.bound
    return None


def _with_binder(p, name):
    if isinstance(p, Request):
        return Request(p.port, p.ty, name, p.body)
    if isinstance(p, Accept):
        return Accept(p.port, p.ty, name, p.body)
    if isinstance(p, Restrict):
        return Restrict(name, p.body)
    return Catch(p.chan, name, p.cont)


def _rename_binders(p: Process, prefix: str, depth: int = 0) -> Process:
    """Rename inner binders to prefix+depth (outer scope first)."""
    b = _binder_name(p)
    if b is not None:
        new = f"{prefix}{depth}"
        kids = [rename_channel(q, b, new) for q in children(p)]
        p = _with_binder(_rebuild(p, kids), new)
        return _rebuild(p, [_rename_binders(q, prefix, depth + 1) for q in children(p)])
    kids = children(p)
    if not kids:
        return p
    return _rebuild(p, [_rename_binders(q, prefix, depth) for q in kids])


def _sort_pars(p: Process) -> Process:
    """Flatten and sort parallel compositions at every depth."""
    if isinstance(p, Par):
        comps = [_sort_pars(q) for q in par_components(p)]
        comps.sort(key=_key)
        return par(*comps)
    kids = children(p)
    if not kids:
        return p
    return _rebuild(p, [_sort_pars(q) for q in kids])


def _key(p: Process) -> tuple:
    # orchestrators first, then by printed form
    return (0 if isinstance(p, NamedOrch) else 1, pretty_process(p))


def _prenex(p: Process, fresh):
    """Float top-level restrictions outwards; return (names, components)."""
    names, comps = [], []
    stack = [p]
    while stack:
        q = stack.pop()
        if isinstance(q, Par):
            stack.append(q.right)
            stack.append(q.left)
        elif isinstance(q, Restrict):
            t = next(fresh)
            names.append(t)
            stack.append(rename_channel(q.body, q.chan, t))
        else:
            comps.append(q)
    return names, comps


def canonicalize(p: Process) -> Process:
    free = free_channels(p)
    temps = (f"\x00{i}" for i in itertools.count())
    names, comps = _prenex(p, temps)

    orch_count = {}
    for q in comps:
        if isinstance(q, NamedOrch):
            orch_count[q.chan] = orch_count.get(q.chan, 0) + 1
    for n, c in orch_count.items():
        if c > 1:
            shown = n if n in free else "a restricted channel"
            raise MalformedRuntime(f"{c} orchestrators for {shown}")
    for n in names:
        if orch_count.get(n, 0) != 1:
            raise MalformedRuntime("restriction without an orchestrator for its channel")

    cpre = _prefix("c", free)
    bpre = _prefix("b", free | {cpre + "0"})
    if bpre == cpre:
        bpre = _prefix(bpre + "b", free)
    comps = [_rename_binders(q, bpre) for q in comps]

    if not names:
        comps = sorted((_sort_pars(q) for q in comps), key=_key)
        return par(*comps)

    # signatures of the restricted names, invariant under renaming
    def masked(comp, me):
        mapping = {n: "#" for n in names}
        mapping[me] = "@"
        return pretty_process(_sort_pars(rename_channels(comp, mapping)))

    fcs = [free_channels(q) for q in comps]
    sig = {}
    for n in names:
        sig[n] = tuple(sorted(masked(q, n) for q, fc in zip(comps, fcs) if n in fc))
    groups = {}
    for n in names:
        groups.setdefault(sig[n], []).append(n)
    ordered = [groups[s] for s in sorted(groups)]

    def build(order):
        mapping = {t: f"{cpre}{i}" for i, t in enumerate(order)}
        out = [_sort_pars(rename_channels(q, mapping)) for q in comps]
        out.sort(key=_key)
        return out

    choices = [itertools.permutations(g) for g in ordered]
    total = 1
    for g in ordered:
        for i in range(2, len(g) + 1):
            total *= i
    best = None
    if total > MAX_PERMUTATIONS:
        # too symmetric to search; fall back to the signature order
        best = build([n for g in ordered for n in g])
    else:
        for combo in itertools.product(*choices):
            order = [n for g in combo for n in g]
            cand = build(order)
            k = [pretty_process(q) for q in cand]
            if best is None or k < best[0]:
                best = (k, cand)
        best = best[1]
    body = par(*best)
    for i in reversed(range(len(names))):
        body = Restrict(f"{cpre}{i}", body)
    return body


def congruent(p: Process, q: Process) -> bool:
    return canonicalize(p) == canonicalize(q)


def split_canonical(p: Process):
    """Restricted names, orchestrators by channel, and the other components of a canonical state."""
    names = []
    while isinstance(p, Restrict):
        names.append(p.chan)
        p = p.body
    orchs, rest = {}, []
    for q in par_components(p):
        if isinstance(q, NamedOrch):
            orchs[q.chan] = q.f
        else:
            rest.append(q)
    return names, orchs, rest


def assemble(names, orchs: dict, rest) -> Process:
    comps = [NamedOrch(k, f) for k, f in orchs.items()] + list(rest)
    body = par(*comps)
    for n in reversed(names):
        body = Restrict(n, body)
    return body
