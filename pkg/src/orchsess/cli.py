"""``orchsess`` command line: comply, synth, typecheck, run, fuzz."""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from typing import Optional

from . import __version__
from .compliance import check_compliance, oracle_compliant, synth, synth_ud
from .propgen import SUITES, run_suite
from .semantics import (
    Deterministic,
    Replay,
    ReplayMismatch,
    SeededRandom,
    SemanticsMode,
    run,
)
from .surface import ParseError, parse_module, pretty
from .syntax import (
    DEFAULT_FUNCTIONS,
    FunctionTable,
    GroundType,
    Value,
    WellFormednessError,
    is_ground_type,
    par_components,
)
from .typecheck import SessionTypeError, format_typing, typecheck

EXIT_OK = 0
EXIT_NO = 1
EXIT_USAGE = 2
EXIT_ERROR_STATE = 3
EXIT_STEP_LIMIT = 4

TRACE_VERSION = 1


class UsageError(Exception):
    pass


def _bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("true", "yes", "on", "1"):
        return True
    if t in ("false", "no", "off", "0"):
        return False
    raise argparse.ArgumentTypeError(f"expected true or false, got {text!r}")


def _read(path: str) -> str:
    try:
        with open(path, encoding="utf-8") as fh:
            return fh.read()
    except OSError as e:
        raise UsageError(f"cannot read {path}: {e.strerror or e}") from e


def _load(path: str, sort: str):
    """Parse a file; ``file.ost:Name`` selects a let-bound term instead of the main one."""
    name = None
    if ":" in path and not os.path.exists(path):
        path, _, name = path.rpartition(":")
    m = parse_module(_read(path), path, "any" if name else sort)
    if name is not None:
        table = {"type": m.types, "orch": m.orchs, "proc": m.procs}[sort]
        if name not in table:
            raise UsageError(f"{path}: no {sort} named {name}")
        m.main = table[name]
    elif m.main is None:
        raise UsageError(f"{path}: no {sort} term after the headers")
    return m


def load_env(path: Optional[str], base: FunctionTable = DEFAULT_FUNCTIONS) -> FunctionTable:
    """Function stubs from JSON.

    The file maps function names to either a list of ``[args, result]`` pairs
    or an object ``{"params": [...], "result": G, "table": [[args, result], ...]}``
    for functions that are not declared yet.  Missing argument tuples fall back
    to symbolic values.
    """
    if path is None:
        return base
    try:
        spec = json.loads(_read(path))
    except json.JSONDecodeError as e:
        raise UsageError(f"{path}: not valid JSON ({e.msg})") from e
    if not isinstance(spec, dict):
        raise UsageError(f"{path}: expected an object of function tables")
    env = base
    for name, entry in spec.items():
        if isinstance(entry, dict):
            params = [_ground(path, g) for g in entry.get("params", [])]
            env = env.with_function(name, params, _ground(path, entry.get("result", "")))
            rows = entry.get("table", [])
        else:
            rows = entry
        sig = env.signature(name)
        if sig is None:
            raise UsageError(f"{path}: function {name} is not declared; give params and result")
        table = {}
        for row in rows:
            if not (isinstance(row, list) and len(row) == 2 and isinstance(row[0], list)):
                raise UsageError(f"{path}: rows of {name} must be [[args...], result]")
            args, res = row
            if len(args) != len(sig.params):
                raise UsageError(f"{path}: {name} expects {len(sig.params)} argument(s)")
            try:
                key = tuple(Value(g, a) for g, a in zip(sig.params, args))
                table[key] = Value(sig.result, res)
            except WellFormednessError as e:
                raise UsageError(f"{path}: {name}: {e}") from e
        env = env.with_table(name, table)
    return env


def _ground(path, name):
    if not isinstance(name, str) or not is_ground_type(name):
        raise UsageError(f"{path}: unknown ground type {name!r}")
    return GroundType(name)


# ---------------------------------------------------------------------------
# subcommands


def cmd_comply(args, out) -> int:
    client = _load(args.client, "type").main
    server = _load(args.server, "type").main
    if args.orch:
        f = _load(args.orch, "orch").main
        ok = check_compliance(f, client, server)
        print(f"{pretty(f)} : client ⊣ server is {'valid' if ok else 'not valid'}", file=out)
        return EXIT_OK if ok else EXIT_NO
    ok = oracle_compliant(client, server)
    print(f"compliant: {'yes' if ok else 'no'}", file=out)
    det, nd = synth(client, server), synth_ud(client, server)
    print(f"synth:    {pretty(det.f) if det else 'fail'}", file=out)
    print(f"synth-ud: {pretty(nd.f) if nd else 'fail'}", file=out)
    return EXIT_OK if ok else EXIT_NO


def cmd_synth(args, out) -> int:
    client = _load(args.client, "type").main
    server = _load(args.server, "type").main
    res = synth(client, server) if args.mode == "priority" else synth_ud(client, server)
    print(pretty(res.f) if res else "fail", file=out)
    return EXIT_OK if res else EXIT_NO


def cmd_typecheck(args, out) -> int:
    env = load_env(args.env_file)
    m = _load(args.file, "proc")
    functions = _merge_functions(env, m.functions)
    mode = SemanticsMode(args.mode) if args.mode else None
    try:
        whole = typecheck({}, m.main, mode, functions)
    except SessionTypeError as e:
        print(_diagnostic(args.file, m, e), file=out)
        return EXIT_NO
    comps = par_components(m.main)
    if len(comps) > 1:
        for i, c in enumerate(comps):
            try:
                shown = format_typing(typecheck({}, c, mode, functions))
            except SessionTypeError as e:
                shown = f"not typable on its own ({e.kind.value})"
            print(f"[{i}] {shown}", file=out)
    print(format_typing(whole), file=out)
    return EXIT_OK


def _diagnostic(path, m, e):
    where = m.locate(e.location)
    loc = str(where) if where is not None else path
    reason = f" [{e.reason}]" if e.reason else ""
    return f"{loc}: {e.kind.value}{reason}: {e.detail}"


def _merge_functions(env: FunctionTable, declared: FunctionTable) -> FunctionTable:
    """Signatures declared in the file, implementations and tables from ``env``."""
    out = env
    for name in declared.names():
        if env.signature(name) is None:
            sig = declared.signature(name)
            out = out.with_function(name, sig.params, sig.result)
    return out


def _scheduler(args):
    base = SeededRandom(args.seed) if args.seed is not None else Deterministic()
    if args.replay:
        entries = [e.strip() for e in args.replay.split(",") if e.strip()]
        return Replay(entries, then=None if args.replay_only else base)
    return base


def trace_document(trace, seed) -> dict:
    steps = []
    for i, st in enumerate(trace.steps):
        text = pretty(st.after)
        steps.append({
            "step": i,
            "rule": st.rule,
            "channel": st.chosen.channel,
            "label": st.chosen.label,
            "state": text,
            "state_hash": hashlib.sha256(text.encode()).hexdigest()[:16],
        })
    return {
        "version": TRACE_VERSION,
        "mode": trace.mode.value,
        "cleanup": trace.cleanup,
        "seed": seed,
        "steps": steps,
        "final": {
            "state": pretty(trace.final),
            "errors": [_error_json(e) for e in trace.errors],
            "step_limit_exceeded": trace.step_limit_exceeded,
        },
    }


def _error_json(e):
    return {"kind": e.kind, "channel": e.channel}


def _error_text(e):
    return e.kind if e.channel is None else f"{e.kind}({e.channel})"


def cmd_run(args, out) -> int:
    env = load_env(args.env_file)
    m = _load(args.file, "proc")
    functions = _merge_functions(env, m.functions)
    mode = SemanticsMode(args.mode)
    try:
        trace = run(m.main, mode, args.cleanup, _scheduler(args), args.step_limit, functions)
    except ReplayMismatch as e:
        raise UsageError(str(e)) from e
    doc = trace_document(trace, args.seed)
    if args.trace:
        with open(args.trace, "w", encoding="utf-8") as fh:
            json.dump(doc, fh, indent=2, ensure_ascii=False)
            fh.write("\n")
    if args.output == "json":
        json.dump(doc, out, indent=2, ensure_ascii=False)
        out.write("\n")
    else:
        for s in doc["steps"]:
            extra = "".join(f" {x}" for x in (s["channel"], s["label"]) if x)
            print(f"{s['step'] + 1:>3} {s['rule']}{extra}", file=out)
        print(f"final: {doc['final']['state']}", file=out)
        print("classification: " + ", ".join(_error_text(e) for e in trace.errors), file=out)
        if trace.step_limit_exceeded:
            print(f"step limit {args.step_limit} reached", file=out)
    if trace.step_limit_exceeded:
        return EXIT_STEP_LIMIT
    if any(e.kind != "NotAnError" for e in trace.errors):
        return EXIT_ERROR_STATE
    return EXIT_OK


def cmd_fuzz(args, out) -> int:
    res = run_suite(args.suite, args.n, args.seed, args.max_depth)
    notes = "".join(f", {k}: {v}" for k, v in sorted(res.notes.items()))
    print(f"{res.suite}: {res.n} cases, {len(res.failures)} failures{notes}", file=out)
    for fl in res.failures[:5]:
        print(fl.dump(), file=out)
    return EXIT_OK if res.ok else EXIT_NO


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="orchsess", description="Orchestrated session types toolkit.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("comply", help="decide compliance of a client and a server type")
    p.add_argument("client")
    p.add_argument("server")
    p.add_argument("orch", nargs="?", help="orchestrator to check; synthesize when omitted")
    p.set_defaults(fn=cmd_comply)

    p = sub.add_parser("synth", help="synthesize an orchestrator")
    p.add_argument("client")
    p.add_argument("server")
    p.add_argument("--mode", choices=("priority", "all"), default="priority",
                   help="priority: first safe speculative option; all: every safe option")
    p.set_defaults(fn=cmd_synth)

    modes = [m.value for m in SemanticsMode]
    p = sub.add_parser("typecheck", help="infer the typing of a process")
    p.add_argument("file")
    p.add_argument("--mode", choices=modes, default=None)
    p.add_argument("--env-file")
    p.set_defaults(fn=cmd_typecheck)

    p = sub.add_parser("run", help="reduce a process and classify the final state")
    p.add_argument("file")
    p.add_argument("--mode", choices=modes, default=SemanticsMode.PLAIN.value)
    p.add_argument("--cleanup", type=_bool, default=True, metavar="{true,false}")
    p.add_argument("--seed", type=int, default=None, help="random scheduler seed (default: deterministic)")
    p.add_argument("--replay", help="comma-separated Rule or Rule:label choices to follow first")
    p.add_argument("--replay-only", action="store_true", help="stop when the replay list is used up")
    p.add_argument("--step-limit", type=int, default=10000)
    p.add_argument("--trace", help="write the JSON trace document here")
    p.add_argument("--output", choices=("text", "json"), default="text")
    p.add_argument("--env-file")
    p.set_defaults(fn=cmd_run)

    p = sub.add_parser("fuzz", help="run a property suite")
    p.add_argument("suite", choices=sorted(SUITES))
    p.add_argument("--n", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-depth", type=int, default=None)
    p.set_defaults(fn=cmd_fuzz)
    return ap


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code else EXIT_OK
    try:
        return args.fn(args, out)
    except UsageError as e:
        print(f"orchsess: {e}", file=sys.stderr)
        return EXIT_USAGE
    except ParseError as e:
        print(f"ParseError: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
