"""Command-line surface.

Subcommands: enumerate, successors, graph, markov, costs, derive,
color-check, verify.  Exit code 0 on success, 1 on a domain error or a
failing verification item, 2 on usage errors.
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction

from mergespace import coloring as coloring_mod
from mergespace.coloring import ColoringError, color_search, ruleset_to_json
from mergespace.costs import CostError, derivation_cost, fc_cost_report
from mergespace.engine import (
    ECViolation,
    MergeConfig,
    MergeError,
    all_merge_successors,
    form_copy_quotient,
    replay,
)
from mergespace.forest import (
    ForestError,
    enumerate_forests,
    enumerate_trees,
    tree_from_json,
    tree_to_text,
    workspace_from_json,
    workspace_to_json,
    workspace_to_text,
)
from mergespace.markov import (
    MarkovError,
    build_graph,
    graph_dot,
    matrix_csv,
    perron_frobenius,
    pf_to_json,
    strong_connectivity,
)
from mergespace.rulesets import BUILTIN_RULESETS, get_ruleset
from mergespace.verify import run_verify

DOMAIN_ERRORS = (ForestError, MergeError, ECViolation, CostError, MarkovError, ColoringError, KeyError)


def _add_common(p):
    p.add_argument("--mode", choices=("c", "d"), default="d", help="coproduct flavor")
    p.add_argument("--im", dest="im", action="store_true", default=True)
    p.add_argument("--no-im", dest="im", action="store_false")
    p.add_argument("--no-sm", dest="sm", action="store_false", default=True)
    p.add_argument("--identity-sm", action="store_true")
    p.add_argument("--sibling-cut", action="store_true")
    p.add_argument("--atomic-sm", action="store_true")


def _cfg(args) -> MergeConfig:
    return MergeConfig(
        mode=args.mode,
        allow_im=args.im,
        allow_sm=args.sm,
        allow_identity_sm=args.identity_sm,
        allow_sibling_cut=args.sibling_cut,
        atomic_sm_only=args.atomic_sm,
    )


def _emit(text: str, out: str | None):
    if out:
        with open(out, "w") as f:
            f.write(text)
    else:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")


def _jsonable(obj):
    if isinstance(obj, Fraction):
        return str(obj)
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(x) for x in obj]
    if hasattr(obj, "as_dict"):
        return _jsonable(obj.as_dict())
    return obj


def cmd_enumerate(args):
    labels = args.leaves.split(",")
    if args.trees_only:
        items = [tree_to_text(t) for t in enumerate_trees(labels)]
        blobs = [t.key for t in enumerate_trees(labels)]
    else:
        forests = enumerate_forests(labels, require_edge=not args.all)
        items = [workspace_to_text(w) for w in forests]
        blobs = [workspace_to_json(w) for w in forests]
    if args.format == "json":
        _emit(json.dumps(blobs, indent=1), args.out)
    else:
        _emit("\n".join(items) + f"\n# {len(items)} structures", args.out)
    return 0


def cmd_successors(args):
    ws = workspace_from_json(json.loads(args.workspace))
    steps = all_merge_successors(ws, _cfg(args))
    rows = [
        {
            "tag": s.tag,
            "output": workspace_to_json(s.output_ws),
            "output_text": workspace_to_text(s.output_ws),
        }
        for s in steps
    ]
    if args.format == "json":
        _emit(json.dumps(rows, indent=1), args.out)
    else:
        lines = [f"{r['tag']:4} -> {r['output_text']}" for r in rows]
        _emit("\n".join(lines) + f"\n# {len(rows)} successors", args.out)
    return 0


def cmd_graph(args):
    g = build_graph(args.leaves.split(","), _cfg(args), collapse_01=args.collapse)
    if args.format == "dot":
        _emit(graph_dot(g), args.out)
    elif args.format == "csv":
        _emit(matrix_csv(g), args.out)
    else:
        blob = {
            "vertices": [w.key for w in g.vertices],
            "matrix": g.K.tolist(),
            "scc": strong_connectivity(g, witness=False),
        }
        _emit(json.dumps(blob, indent=1), args.out)
    return 0


def cmd_markov(args):
    labels = args.leaves.split(",")
    if args.regime:
        from mergespace.markov import weighted_matrix

        g = weighted_matrix(labels, args.regime, args.t, _cfg(args))
    else:
        g = build_graph(labels, _cfg(args))
    if args.format == "csv":
        _emit(matrix_csv(g), args.out)
        return 0
    pf = perron_frobenius(g.K)
    blob = pf_to_json(pf)
    blob["vertices"] = [w.key for w in g.vertices]
    _emit(json.dumps(blob, indent=1), args.out)
    return 0


def _load_script(path: str):
    with open(path) as f:
        return json.load(f)


def _run_blob(blob):
    if "fc" in blob:
        fc = blob["fc"]
        graph = form_copy_quotient(tree_from_json(fc["tree"]), [tuple(p) for p in fc["pairs"]])
        report = fc_cost_report(graph, n_em_steps=fc.get("n_em", 0))
        report["kind"] = "quotient"
        return report
    cfg = MergeConfig(mode=blob.get("mode", "d"), **blob.get("flags", {}))
    deriv = replay(workspace_from_json(blob["initial"]), blob["steps"], cfg)
    report = derivation_cost(deriv)
    report["kind"] = "derivation"
    report["final"] = workspace_to_text(deriv.final)
    report["steps"] = [v.as_dict() for v in report["steps"]]
    return report


def cmd_derive(args):
    main = _run_blob(_load_script(args.script))
    if args.compare:
        other = _run_blob(_load_script(args.compare))
        blob = {"first": main, "second": other}
        if main["kind"] == other["kind"] == "derivation":
            blob["comparison"] = {
                k: [str(main["totals"][k]), str(other["totals"][k])]
                for k in ("ms", "ms_ws", "my_d", "my_c", "cl", "cl_type")
            }
        _emit(json.dumps(_jsonable(blob), indent=1), args.out)
    else:
        _emit(json.dumps(_jsonable(main), indent=1), args.out)
    return 0


def cmd_costs(args):
    report = _run_blob(_load_script(args.script))
    totals = report.get("totals", report)
    if args.format == "csv" and "totals" in report:
        lines = ["metric,value"] + [f"{k},{v}" for k, v in _jsonable(totals).items()]
        _emit("\n".join(lines), args.out)
    else:
        _emit(json.dumps(_jsonable(totals), indent=1), args.out)
    return 0


def cmd_color_check(args):
    if args.dump_ruleset:
        _emit(json.dumps(ruleset_to_json(get_ruleset(args.dump_ruleset)), indent=1), args.out)
        return 0
    if args.scenario:
        with open(args.scenario) as f:
            blob = json.load(f)
        tree = tree_from_json(blob["tree"])
        rows = []
        all_ok = True
        for case in blob["cases"]:
            rs = get_ruleset(case["ruleset"])
            found = color_search(rs, tree, blob.get("constraints"))
            verdict = "accept" if found else "reject"
            ok = verdict == case["expect"]
            if ok and case.get("min_colorings"):
                ok = len(found) >= case["min_colorings"]
            if ok and case.get("max_colorings") is not None:
                ok = len(found) <= case["max_colorings"]
            all_ok &= ok
            rows.append(
                {"ruleset": case["ruleset"], "verdict": verdict, "colorings": len(found), "ok": ok}
            )
        _emit(json.dumps({"name": blob.get("name"), "cases": rows}, indent=1), args.out)
        return 0 if all_ok else 1
    rs = get_ruleset(args.ruleset)
    if args.colored_tree:
        t = coloring_mod.colored_tree_from_json(json.loads(args.colored_tree))
        ok, why = coloring_mod.accepts(rs, t)
        _emit(json.dumps({"accepted": ok, "failure": str(why) if not ok else None}), args.out)
        return 0
    tree = tree_from_json(json.loads(args.tree))
    constraints = json.loads(args.constraints) if args.constraints else None
    found = color_search(rs, tree, constraints)
    blob = {
        "colorings": len(found),
        "accepted": bool(found),
        "examples": [coloring_mod.colored_tree_to_json(t) for t in found[:3]],
    }
    _emit(json.dumps(blob, indent=1), args.out)
    return 0


def cmd_verify(args):
    report = run_verify(only=args.only)
    for r in report["items"]:
        mark = "PASS" if r["ok"] else "FAIL"
        line = f"{mark} [{r['group']}] {r['name']}"
        if not r["ok"] or args.verbose:
            line += f" | observed {r['observed']} expected {r['expected']}"
        print(line)
    print(f"{report['passed']}/{report['total']} checks passed")
    return 0 if report["ok"] else 1


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="mergespace", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("enumerate", help="all trees/forests over a leaf multiset")
    p.add_argument("--leaves", required=True, help="comma separated labels")
    p.add_argument("--trees-only", action="store_true")
    p.add_argument("--all", action="store_true", help="include the edgeless forest")
    p.add_argument("--format", choices=("text", "json"), default="text")
    p.add_argument("--out")
    p.set_defaults(fn=cmd_enumerate)

    p = sub.add_parser("successors", help="one-step Merge successors of a workspace")
    p.add_argument("--workspace", required=True, help="workspace JSON")
    _add_common(p)
    p.add_argument("--format", choices=("text", "json"), default="text")
    p.add_argument("--out")
    p.set_defaults(fn=cmd_successors)

    p = sub.add_parser("graph", help="state-space graph over a fixed leaf set")
    p.add_argument("--leaves", required=True)
    _add_common(p)
    p.add_argument("--collapse", action="store_true", help="clip multiplicities to 0/1")
    p.add_argument("--format", choices=("dot", "csv", "json"), default="dot")
    p.add_argument("--out")
    p.set_defaults(fn=cmd_graph)

    p = sub.add_parser("markov", help="transition matrix and its eigendata")
    p.add_argument("--leaves", required=True)
    _add_common(p)
    p.add_argument("--regime", choices=("ms", "my", "cl", "total"))
    p.add_argument("-t", type=float, default=1.0)
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--out")
    p.set_defaults(fn=cmd_markov)

    p = sub.add_parser("derive", help="replay a derivation script with full cost report")
    p.add_argument("--script", required=True)
    p.add_argument("--compare", help="second script for side-by-side totals")
    p.add_argument("--out")
    p.set_defaults(fn=cmd_derive)

    p = sub.add_parser("costs", help="cost totals of a derivation script")
    p.add_argument("--script", required=True)
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--out")
    p.set_defaults(fn=cmd_costs)

    p = sub.add_parser("color-check", help="run coloring scenarios or ad-hoc searches")
    p.add_argument("--scenario", help="scenario JSON path")
    p.add_argument("--ruleset", default="theta", help=f"one of {sorted(BUILTIN_RULESETS)} or a JSON path")
    p.add_argument("--tree", help="bare tree JSON")
    p.add_argument("--colored-tree", help="explicitly colored tree JSON")
    p.add_argument("--constraints", help="label -> allowed colors JSON")
    p.add_argument("--dump-ruleset", help="print a built-in rule set as JSON")
    p.add_argument("--out")
    p.set_defaults(fn=cmd_color_check)

    p = sub.add_parser("verify", help="run the full verification suite")
    p.add_argument("--only", help="substring filter on item groups")
    p.add_argument("--verbose", action="store_true")
    p.set_defaults(fn=cmd_verify)

    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except DOMAIN_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
