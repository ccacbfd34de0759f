"""Orchestrated compliance: checking, synthesis, and a brute-force oracle."""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional, Union

from .syntax import (
    IDLE,
    Branch,
    End,
    ExternalChoice,
    Idle,
    InSession,
    InternalChoice,
    InValue,
    IOPrefix,
    LabelPrefix,
    Orchestrator,
    OutSession,
    OutValue,
    Select,
    SessionType,
    SpecSelect,
)


class SynthMode(enum.Enum):
    PRIORITY = "priority"
    ALL_SAFE = "all"


@dataclass(frozen=True)
class Ok:
    f: Orchestrator

    def __bool__(self):
        return True


@dataclass(frozen=True)
class Fail:
    def __bool__(self):
        return False


FAIL = Fail()
SynthResult = Union[Ok, Fail]


class DepthExceeded(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# decision against a given orchestrator


def _io_pair(s: SessionType, t: SessionType) -> Optional[tuple]:
    """Continuations if ``s``/``t`` are a matching input/output pair."""
    if isinstance(s, InValue) and isinstance(t, OutValue) and s.g == t.g:
        return s.cont, t.cont
    if isinstance(s, OutValue) and isinstance(t, InValue) and s.g == t.g:
        return s.cont, t.cont
    if isinstance(s, InSession) and isinstance(t, OutSession) and s.carried == t.carried and s.pol == t.pol:
        return s.cont, t.cont
    if isinstance(s, OutSession) and isinstance(t, InSession) and s.carried == t.carried and s.pol == t.pol:
        return s.cont, t.cont
    return None


def _select_branch(s: SessionType, t: SessionType) -> Optional[tuple]:
    """(select arms, branch arms, select-is-client) for clause 3 shapes."""
    if isinstance(s, Select) and isinstance(t, Branch):
        return dict(s.arms), dict(t.arms), True
    if isinstance(s, Branch) and isinstance(t, Select):
        return dict(t.arms), dict(s.arms), False
    return None


def _spec_branch(s: SessionType, t: SessionType) -> Optional[tuple]:
    """(spec arms, branch arms, spec-is-client) for clause 4 shapes, spec arms ordered."""
    if isinstance(s, SpecSelect) and isinstance(t, Branch):
        return s.arms, dict(t.arms), True
    if isinstance(s, Branch) and isinstance(t, SpecSelect):
        return t.arms, dict(s.arms), False
    return None


def _orient(client_first: bool, a, b):
    return (a, b) if client_first else (b, a)


def check_compliance(f: Orchestrator, client: SessionType, server: SessionType) -> bool:
    """Decide ``f : client ⊣ server``."""
    if isinstance(f, Idle):
        return isinstance(client, End)
    if isinstance(f, IOPrefix):
        pair = _io_pair(client, server)
        return pair is not None and check_compliance(f.cont, *pair)
    if isinstance(f, (LabelPrefix, ExternalChoice)):
        sb = _select_branch(client, server)
        if sb is not None:
            sel, br, sel_client = sb
            arms = dict(f.arms)
            if set(arms) != set(sel) or not set(sel) <= set(br):
                return False
            return all(
                check_compliance(g, *_orient(sel_client, sel[l], br[l])) for l, g in arms.items()
            )
    if isinstance(f, (LabelPrefix, InternalChoice)):
        sb = _spec_branch(client, server)
        if sb is not None:
            spec_arms, br, spec_client = sb
            spec = dict(spec_arms)
            for l, g in f.arms:
                if l not in spec or l not in br:
                    return False
                if not check_compliance(g, *_orient(spec_client, spec[l], br[l])):
                    return False
            return True
    return False


# ---------------------------------------------------------------------------
# synthesis


@lru_cache(maxsize=65536)
def _synth(s: SessionType, t: SessionType, all_safe: bool) -> Optional[Orchestrator]:
    if isinstance(s, End):
        return IDLE
    pair = _io_pair(s, t)
    if pair is not None:
        f = _synth(pair[0], pair[1], all_safe)
        return None if f is None else IOPrefix(f)
    sb = _spec_branch(s, t)
    if sb is not None:
        spec_arms, br, spec_client = sb
        found = []
        for l, sa in spec_arms:  # declaration order is priority order
            if l not in br:
                continue
            f = _synth(*_orient(spec_client, sa, br[l]), all_safe)
            if f is None:
                continue
            found.append((l, f))
            if not all_safe:
                break
        if not found:
            return None
        if len(found) == 1:
            return LabelPrefix(*found[0])
        return InternalChoice(tuple(found))
    sb = _select_branch(s, t)
    if sb is not None:
        sel, br, sel_client = sb
        arms = []
        for l, sa in sel.items():
            if l not in br:
                return None
            f = _synth(*_orient(sel_client, sa, br[l]), all_safe)
            if f is None:
                return None
            arms.append((l, f))
        return ExternalChoice(tuple(arms))
    return None


def synth(client: SessionType, server: SessionType) -> SynthResult:
    """Deterministic synthesis; speculative arms are scanned in declaration order."""
    f = _synth(client, server, False)
    return FAIL if f is None else Ok(f)


def synth_ud(client: SessionType, server: SessionType) -> SynthResult:
    """Synthesis keeping every safe speculative option under an internal choice."""
    f = _synth(client, server, True)
    return FAIL if f is None else Ok(f)


def synthesize(client: SessionType, server: SessionType, mode: SynthMode = SynthMode.PRIORITY) -> SynthResult:
    return synth(client, server) if mode is SynthMode.PRIORITY else synth_ud(client, server)


def is_deterministic(f: Orchestrator) -> bool:
    if isinstance(f, InternalChoice):
        return False
    if isinstance(f, IOPrefix):
        return is_deterministic(f.cont)
    if isinstance(f, (LabelPrefix, ExternalChoice)):
        return all(is_deterministic(g) for _, g in f.arms)
    return True


def normalize_orch(f: Orchestrator) -> Orchestrator:
    """Sort choice arms by label so that equality ignores arm order."""
    if isinstance(f, IOPrefix):
        return IOPrefix(normalize_orch(f.cont))
    if isinstance(f, LabelPrefix):
        return LabelPrefix(f.label, normalize_orch(f.cont))
    if isinstance(f, (ExternalChoice, InternalChoice)):
        arms = tuple(sorted((l, normalize_orch(g)) for l, g in f.arms))
        return type(f)(arms)
    return f


def orch_equal(f: Orchestrator, g: Orchestrator) -> bool:
    return normalize_orch(f) == normalize_orch(g)


# ---------------------------------------------------------------------------
# independent oracle: derivation search straight from the four clauses


def _nonempty_subsets(xs):
    xs = list(xs)
    for r in range(1, len(xs) + 1):
        yield from itertools.combinations(xs, r)


def oracle_compliant(client: SessionType, server: SessionType, depth_limit: int = 64) -> bool:
    """Exhaustive search for a derivation; raises DepthExceeded past ``depth_limit``."""

    def derivable(s, t, depth):
        if depth > depth_limit:
            raise DepthExceeded(f"derivation deeper than {depth_limit}")
        # clause 1
        if type(s) is End:
            return True
        # clause 2, all four io shapes spelled out
        for a, b in ((InValue, OutValue), (OutValue, InValue)):
            if type(s) is a and type(t) is b and s.g.name == t.g.name:
                if derivable(s.cont, t.cont, depth + 1):
                    return True
        for a, b in ((InSession, OutSession), (OutSession, InSession)):
            if type(s) is a and type(t) is b and s.carried == t.carried and s.pol == t.pol:
                if derivable(s.cont, t.cont, depth + 1):
                    return True
        # clause 3: every selected label must be offered and succeed
        for sel_t, br_t, swap in ((s, t, False), (t, s, True)):
            if type(sel_t) is Select and type(br_t) is Branch:
                offered = {l: x for l, x in br_t.arms}
                ok = True
                for l, x in sel_t.arms:
                    if l not in offered:
                        ok = False
                        break
                    pair = (offered[l], x) if swap else (x, offered[l])
                    if not derivable(*pair, depth + 1):
                        ok = False
                        break
                if ok:
                    return True
        # clause 4: try every nonempty H inside the label intersection
        for sp, br_t, swap in ((s, t, False), (t, s, True)):
            if type(sp) is SpecSelect and type(br_t) is Branch:
                offered = {l: x for l, x in br_t.arms}
                common = [l for l, _ in sp.arms if l in offered]
                mine = {l: x for l, x in sp.arms}
                for h in _nonempty_subsets(common):
                    good = True
                    for l in h:
                        pair = (offered[l], mine[l]) if swap else (mine[l], offered[l])
                        if not derivable(*pair, depth + 1):
                            good = False
                            break
                    if good:
                        return True
        return False

    return derivable(client, server, 0)
