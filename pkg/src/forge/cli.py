"""The ``forge`` command line.

Every command prints one JSON document (or a plain table) carrying a run
manifest: the subcommand, its parameters, the seed, guard-rail limits, the
tool version and hashes of the input files. Output holds nothing
time-dependent, so rerunning a manifest reproduces it byte for byte.

Exit codes: 0 success/PASS/witness, 1 FAIL/none, 2 invalid input,
3 guard rail refusal, 4 oracle exhausted.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from pathlib import Path

from . import __version__
from .covers import superfilter_predicates, superfilters
from .engine import (FIN, ONE, GreedyBob, ScriptedBob, load_families, run_engine,
                     run_multiplicative_engine)
from .errors import ForgeError, InputError
from .games import GAME_KINDS, GameSpec, SetSystem, sfin_check, solve_game, sone_check
from .oracle import MembershipOracle, import_log
from .search import KINDS, SearchParams, search_witness, threads_from_env
from .semigroup import (BoundedNaturals, all_idempotents, all_semigroups, elements_of, fs_set,
                        load_semigroup, mask_of)
from .structures import (Coloring, MPCParams, is_monochromatic, mpc_set, partite_graph,
                         partite_sumgraph, sumgraph, sumgraph_upto)
from .verify import verify_certificate

EXIT_OK, EXIT_FAIL, EXIT_INPUT, EXIT_GUARD, EXIT_EXHAUSTED = 0, 1, 2, 3, 4


class _Inputs:
    """Reads input files once and remembers their hashes for the manifest."""

    def __init__(self):
        self.hashes: dict[str, str] = {}

    def json(self, path: str):
        try:
            data = Path(path).read_bytes()
        except OSError as exc:
            raise InputError(f"cannot read {path}: {exc.strerror}") from None
        self.hashes[path] = hashlib.sha256(data).hexdigest()
        try:
            return json.loads(data)
        except json.JSONDecodeError as exc:
            raise InputError(f"{path} is not valid JSON: {exc.msg} (line {exc.lineno})") from None


def _manifest(args, inputs: _Inputs, guards: dict) -> dict:
    params = {k: v for k, v in sorted(vars(args).items()) if k not in ("func", "out", "format")}
    return {"subcommand": args.command, "params": params, "seed": args.seed, "guards": guards,
            "tool": f"forge {__version__}", "inputs": dict(sorted(inputs.hashes.items()))}


def _semigroup(spec: str, inputs: _Inputs):
    if spec.startswith("naturals:"):
        parts = spec.split(":")
        try:
            return BoundedNaturals(int(parts[1]), parts[2] if len(parts) > 2 else "add")
        except (ValueError, IndexError):
            raise InputError(f"bad semigroup spec {spec!r}; expected naturals:BOUND[:add|mul]") from None
    return load_semigroup(inputs.json(spec))


def _coloring(spec: str, m: int | None, k: int | None, inputs: _Inputs) -> Coloring:
    if spec.startswith("@"):
        return Coloring.from_json(inputs.json(spec[1:]), m=m, k=k)
    return Coloring.named(spec, m or 1, k)


def _families(spec: str, rounds: int, inputs: _Inputs):
    if spec == "singletons":
        return load_families({"kind": "singletons"}, rounds)
    if spec.startswith("ap:"):
        return load_families({"kind": "ap", "length": int(spec[3:])}, rounds)
    return load_families(inputs.json(spec), rounds)


def _oracle_factory(spec: str, sg, seed: int, inputs: _Inputs):
    kind, _, arg = spec.partition(":")
    if kind == "principal":
        try:
            e = int(arg)
        except ValueError:
            raise InputError("principal oracle needs an element, e.g. principal:0") from None
        return lambda rotation: MembershipOracle.principal(sg, e), seed
    if kind == "scripted":
        data = inputs.json(arg)
        if isinstance(data, dict):
            data = data.get("oracle", data).get("log", data.get("log", []))
        entries = import_log(data)
        return lambda rotation: MembershipOracle.scripted(sg.universe_mask, entries), seed
    if kind == "backtracking":
        if arg:
            try:
                seed = int(arg)
            except ValueError:
                raise InputError("backtracking seed must be an integer") from None
        return (lambda rotation: MembershipOracle.backtracking(sg.universe_mask, seed=seed, rotation=rotation)), seed
    raise InputError(f"unknown oracle {spec!r}; use principal:E, scripted:FILE or backtracking:SEED")


# -- subcommands -------------------------------------------------------------------

def cmd_search(args, inputs):
    params = SearchParams(args.kind, m=args.m, length=args.length, block=args.block, p=args.p, c=args.c)
    guards = {"max_space": args.max_space, "max_nodes": args.max_nodes}
    if args.all_colorings:
        res = search_witness(params, args.bound, args.colors, all_colorings=True, threads=threads_from_env(),
                             **guards)
        code = EXIT_OK if res.status == "forced" else EXIT_FAIL
    else:
        if not args.coloring:
            raise InputError("--coloring is required without --all-colorings")
        col = _coloring(args.coloring, params.arity, args.colors, inputs)
        res = search_witness(params, args.bound, col.k, coloring=col)
        code = EXIT_OK if res.status == "witness" else EXIT_FAIL
    return res.to_json(), guards, code


def cmd_engine(args, inputs):
    sg = _semigroup(args.semigroup, inputs)
    col = _coloring(args.coloring, args.m, args.colors, inputs)
    fams = _families(args.families, args.rounds, inputs)
    factory, seed = _oracle_factory(args.oracle, sg, args.seed, inputs)
    args.seed = seed
    guards = {"retries": args.retries}
    if args.multiplicative:
        if not isinstance(sg, BoundedNaturals):
            raise InputError("--multiplicative needs bounded naturals")
        cert = run_multiplicative_engine(sg, col, fams, factory, args.rounds, retries=args.retries)
    else:
        constraint = inputs.json(args.constraint) if args.constraint else None
        bob = ScriptedBob(inputs.json(args.bob)) if args.bob else GreedyBob(args.bob_cap)
        cert = run_engine(sg, col, fams, factory, args.rounds, args.mode, constraint=constraint, bob=bob,
                          retries=args.retries)
    return cert, guards, EXIT_OK


def cmd_verify(args, inputs):
    cert = inputs.json(args.certificate)
    if not isinstance(cert, dict):
        raise InputError("a certificate is a JSON object")
    report = verify_certificate(cert)
    return report, {}, EXIT_OK if report["status"] == "PASS" else EXIT_FAIL


def cmd_game(args, inputs):
    system = SetSystem.from_json(inputs.json(args.spec))
    spec = GameSpec(args.kind, args.horizon, system)
    res = solve_game(spec, max_nodes=args.max_nodes)
    check = sfin_check if args.kind == "gfin" else sone_check
    out = res.to_json()
    out["selection_principle"] = {"name": "S_fin" if args.kind == "gfin" else "S_1",
                                  "holds": check(system, args.horizon, max_nodes=args.max_nodes)}
    return out, {"max_nodes": args.max_nodes}, EXIT_OK


def _blocks(text: str):
    try:
        blocks = json.loads(text)
    except json.JSONDecodeError:
        raise InputError("--blocks must be JSON, e.g. [[1,2],[5]]") from None
    if not isinstance(blocks, list) or not all(isinstance(b, list) for b in blocks):
        raise InputError("--blocks must be a list of lists")
    return blocks


def _ints(text: str) -> list[int]:
    try:
        return [int(x) for x in text.replace(",", " ").split()]
    except ValueError:
        raise InputError(f"expected integers, got {text!r}") from None


def cmd_enumerate(args, inputs):
    what = args.structure
    sg = _semigroup(args.semigroup, inputs) if args.semigroup else None
    out: dict = {"structure": what}
    edges = None
    if what in ("sumgraph", "fs"):
        if not args.seq or sg is None:
            raise InputError(f"{what} needs --seq and --semigroup")
        seq = _ints(args.seq)
        if what == "fs":
            out["set"] = sorted(fs_set(seq, 1, len(seq), sg))
        else:
            edges = sumgraph(seq, args.m, sg)
    elif what in ("partite-sumgraph", "sumgraph-upto", "partite-graph"):
        if not args.blocks:
            raise InputError(f"{what} needs --blocks")
        blocks = _blocks(args.blocks)
        if what == "partite-graph":
            edges = partite_graph(blocks, args.m)
        elif sg is None:
            raise InputError(f"{what} needs --semigroup")
        elif what == "partite-sumgraph":
            edges = partite_sumgraph(blocks, args.m, sg)
        else:
            edges = sumgraph_upto(blocks, args.m, sg, strict=args.strict)
    elif what == "mpc":
        x = _ints(args.x or "")
        sums, valid = mpc_set(MPCParams(args.m, args.p, args.c, tuple(x)))
        out.update({"set": sorted(sums), "valid": valid})
    elif what == "semigroups":
        out["size"] = args.size
        out["count"] = sum(1 for _ in all_semigroups(args.size))
    elif what == "idempotents":
        if sg is None or isinstance(sg, BoundedNaturals):
            raise InputError("idempotents needs a finite table semigroup")
        out["idempotents"] = sorted(all_idempotents(sg))
    if edges is not None:
        out["edges"] = sorted(sorted(e) for e in edges)
        out["count"] = len(edges)
        if args.coloring:
            col = _coloring(args.coloring, args.m, args.colors, inputs)
            out["color"] = is_monochromatic(col, edges)
    return out, {}, EXIT_OK


def cmd_superfilter(args, inputs):
    sg = _semigroup(args.semigroup, inputs)
    if args.all:
        rows = []
        for F in superfilters(len(sg.elements)):
            flags = superfilter_predicates(sg, F)
            rows.append({"family": sorted(sorted(x for x in sg.elements if A >> x & 1) for A in F), **flags})
        return {"superfilters": rows, "count": len(rows)}, {}, EXIT_OK
    if not args.family:
        raise InputError("--family or --all is required")
    fam = inputs.json(args.family)
    flags = superfilter_predicates(sg, [mask_of(A) for A in fam])
    return flags, {}, EXIT_OK if flags["is_superfilter"] else EXIT_FAIL


# -- parser --------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="forge", description="Finite Ramsey workbench")
    p.add_argument("--version", action="version", version=f"forge {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("json", "table"), default="json")
    common.add_argument("--out", help="write output here instead of stdout")
    common.add_argument("--seed", type=int, default=0, help="the run's single source of randomness")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("search", parents=[common], help="witness search or forced thresholds")
    s.add_argument("--kind", required=True, choices=KINDS + ("milliken_taylor", "partite_sumgraph"))
    s.add_argument("--bound", type=int, required=True)
    s.add_argument("--colors", type=int, default=2)
    s.add_argument("--all-colorings", action="store_true")
    s.add_argument("--coloring", help="generator (parity, mod:q, random:SEED, constant:c) or @FILE")
    s.add_argument("--m", type=int, default=1)
    s.add_argument("--length", type=int)
    s.add_argument("--block", type=int, default=2)
    s.add_argument("--p", type=int, default=2)
    s.add_argument("--c", type=int, default=1)
    s.add_argument("--max-space", type=int, default=1 << 40)
    s.add_argument("--max-nodes", type=int, default=5_000_000)
    s.set_defaults(func=cmd_search)

    e = sub.add_parser("engine", parents=[common], help="run the strategy construction")
    e.add_argument("--semigroup", required=True, help="FILE or naturals:BOUND[:op]")
    e.add_argument("--coloring", required=True)
    e.add_argument("--m", type=int, default=1)
    e.add_argument("--colors", type=int)
    e.add_argument("--families", default="singletons", help="FILE, singletons or ap:L")
    e.add_argument("--oracle", default="backtracking")
    e.add_argument("--rounds", type=int, required=True)
    e.add_argument("--mode", choices=(FIN, ONE), default=FIN)
    e.add_argument("--constraint")
    e.add_argument("--bob", help="FILE with Bob's replies per round")
    e.add_argument("--bob-cap", type=int, default=2)
    e.add_argument("--retries", type=int, default=64)
    e.add_argument("--multiplicative", action="store_true")
    e.set_defaults(func=cmd_engine)

    v = sub.add_parser("verify", parents=[common], help="check a certificate offline")
    v.add_argument("certificate")
    v.set_defaults(func=cmd_verify)

    g = sub.add_parser("game", parents=[common], help="solve a finite selection game")
    g.add_argument("--spec", required=True)
    g.add_argument("--kind", choices=GAME_KINDS, required=True)
    g.add_argument("--horizon", type=int, required=True)
    g.add_argument("--max-nodes", type=int, default=2_000_000)
    g.set_defaults(func=cmd_game)

    n = sub.add_parser("enumerate", parents=[common], help="list a structure's edges")
    n.add_argument("--structure", required=True, choices=("sumgraph", "fs", "partite-sumgraph", "sumgraph-upto",
                                                          "partite-graph", "mpc", "semigroups", "idempotents"))
    n.add_argument("--semigroup")
    n.add_argument("--seq")
    n.add_argument("--blocks")
    n.add_argument("--m", type=int, default=1)
    n.add_argument("--strict", action="store_true")
    n.add_argument("--x")
    n.add_argument("--p", type=int, default=2)
    n.add_argument("--c", type=int, default=1)
    n.add_argument("--size", type=int, default=2)
    n.add_argument("--coloring")
    n.add_argument("--colors", type=int)
    n.set_defaults(func=cmd_enumerate)

    f = sub.add_parser("superfilter", parents=[common], help="superfilter, invariance and idempotence checks")
    f.add_argument("--semigroup", required=True)
    f.add_argument("--family")
    f.add_argument("--all", action="store_true")
    f.set_defaults(func=cmd_superfilter)
    return p


def _table(obj, indent="") -> str:
    lines = []
    if isinstance(obj, dict):
        for k, v in obj.items():
            if isinstance(v, (dict, list)) and v and not all(isinstance(x, (int, str)) for x in v):
                lines.append(f"{indent}{k}:")
                lines.append(_table(v, indent + "  "))
            else:
                lines.append(f"{indent}{k}: {json.dumps(v)}")
    elif isinstance(obj, list):
        for x in obj:
            lines.append(f"{indent}- {json.dumps(x, sort_keys=True)}" if not isinstance(x, dict)
                         else f"{indent}- " + ", ".join(f"{k}={json.dumps(v)}" for k, v in x.items()))
    return "\n".join(lines)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code not in (0, None) else EXIT_OK
    args.kind = args.kind.replace("_", "-") if args.command == "search" else getattr(args, "kind", None)
    inputs = _Inputs()
    try:
        result, guards, code = args.func(args, inputs)
    except ForgeError as exc:
        label = {EXIT_GUARD: "guard rail", EXIT_EXHAUSTED: "oracle exhausted"}.get(exc.exit_code, "invalid input")
        where = getattr(exc, "commitment", None)
        detail = f" (failing commitment {elements_of(where)})" if where is not None else ""
        print(f"forge: {label}: {exc}{detail}", file=sys.stderr)
        return exc.exit_code
    manifest = _manifest(args, inputs, guards)
    if args.command == "engine":
        doc = dict(result)
        doc["manifest"] = manifest
    else:
        doc = {"result": result, "manifest": manifest}
    text = json.dumps(doc, indent=2, sort_keys=True) if args.format == "json" else _table(
        doc if args.command == "engine" else result)
    if args.out:
        Path(args.out).write_text(text + "\n")
    else:
        print(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
