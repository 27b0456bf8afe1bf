"""Command-line front end.

Commands: ``scan`` (region grid), ``verify`` (variational identities),
``dpi`` (data processing experiments), ``entropy`` (divergences of given
states) and ``probe`` (one point in depth).

Exit codes: 0 success, 1 usage error, 2 scientific inconsistency,
3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import report
from .channels import dpi_search_violation, random_margins, VIOLATION_REL
from .entropies import Divergence
from .errors import NoConvergence, TraceConvexError
from .probe import CRITICAL, Label, ProbeConfig, agrees, probe_point, scan_grid, search_counterexample, theory_label
from .sampling import Rng
from .verification import SUITES, chain_suite, identity_suite, reduction_suite

EXIT_OK, EXIT_USAGE, EXIT_INCONSISTENT, EXIT_NUMERICAL = 0, 1, 2, 3
RANGE_SNAP = 1e-12


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _number(tok: str) -> float:
    try:
        return float(Fraction(tok.strip()))
    except (ValueError, ZeroDivisionError):
        raise UsageError(f"not a number: {tok!r}")


def parse_values(text: str, allow_critical: bool = False) -> list:
    """Comma-separated values and inclusive ``lo:hi:step`` ranges.

    ``crit`` stands for ``s = 1/(p+q)`` when ``allow_critical``.  Range
    points are rounded to 12 decimals and ``hi`` is included when the
    last step lands within ``1e-12`` of it.
    """
    out = []
    for tok in text.split(","):
        tok = tok.strip()
        if not tok:
            continue
        if tok == CRITICAL:
            if not allow_critical:
                raise UsageError("'crit' is only allowed for --s")
            out.append(CRITICAL)
        elif ":" in tok:
            parts = tok.split(":")
            if len(parts) != 3:
                raise UsageError(f"range must be lo:hi:step, got {tok!r}")
            lo, hi, step = (_number(x) for x in parts)
            if step <= 0 or hi < lo:
                raise UsageError(f"empty or invalid range {tok!r}")
            n = int(np.floor((hi - lo) / step + RANGE_SNAP))
            out.extend(round(lo + i * step, 12) for i in range(n + 1))
        else:
            out.append(_number(tok))
    return out


def _write(path: str | None, text: str) -> None:
    if path:
        Path(path).write_text(text)


def _meta(args, **extra) -> dict:
    meta = {"command": args.command, "seed": args.seed}
    meta.update(extra)
    return meta


def _config(args) -> ProbeConfig:
    return ProbeConfig(
        dim=args.dim, trials=args.trials, tol_rel=args.tol, seed=args.seed,
        k_mode=args.k_mode, k_shift=args.regularize_k or 0.0,
    )


# ---------------------------------------------------------------- commands


def cmd_scan(args) -> int:
    ps = parse_values(args.p)
    qs = parse_values(args.q)
    ss = parse_values(args.s, allow_critical=True)
    config = _config(args)
    rep = scan_grid(ps, qs, ss, config)
    csv = report.region_csv(rep)
    _write(args.csv, csv)
    meta = _meta(args, dim=config.dim, trials=config.trials, tol_rel=config.tol_rel, k_mode=config.k_mode)
    _write(args.json, report.region_json(rep, meta))
    _write(args.svg, report.region_svg(rep))
    if not args.csv:
        sys.stdout.write(csv)
    bad = [e for e in rep if not e.agrees]
    print(f"nodes={len(rep)} disagreements={len(bad)} seed={args.seed}", file=sys.stderr)
    return EXIT_OK if not bad else EXIT_INCONSISTENT


def cmd_verify(args) -> int:
    rng = Rng(args.seed)
    suites = SUITES if args.suite == "all" else (args.suite,)
    results = []
    if "identity" in suites:
        results.append(identity_suite(trials=args.trials, rng=rng.child(0)))
    if "chain" in suites:
        results.append(chain_suite(n=args.n, trials=max(1, args.trials // 2), rng=rng.child(1)))
    if "reduction" in suites:
        results.extend(reduction_suite(instances=max(1, args.trials // 2), rng=rng.child(2)).values())
    lines = [f"seed={args.seed}"]
    for r in results:
        status = "pass" if r.ok else "FAIL"
        lines.append(
            f"{r.name}: max_rel_error={report.fmt(r.max_rel_error)} checks={r.checks} "
            f"bound_violations={r.bound_violations}/{r.bound_checks} redrawn={r.redrawn} {status}"
        )
    print("\n".join(lines))
    if args.json:
        _write(args.json, report.dumps({"meta": _meta(args, suite=args.suite), "suites": [vars(r) for r in results]}))
    return EXIT_OK if all(r.ok for r in results) else EXIT_INCONSISTENT


def cmd_dpi(args) -> int:
    if args.divergence:
        divs = [Divergence.parse(d) for d in args.divergence]
    else:
        if not (args.alpha and args.z):
            raise UsageError("dpi needs --alpha and --z, or --divergence")
        divs = []
        for a in parse_values(args.alpha):
            for z in parse_values(args.z):
                if a == 1 or z <= 0:
                    raise UsageError(f"invalid (alpha, z) = ({a}, {z})")
                divs.append(Divergence("alpha_z", a, z))
    rows, consistent = [], True
    for k, div in enumerate(divs):
        rng = Rng(args.seed, k)
        predicted = div.in_dpi_region
        marg, scale = random_margins(div, args.dim, args.env_dim, args.trials, rng.child(0))
        finite = np.isfinite(marg)
        rel = marg[finite] / scale[finite]
        min_margin = float(np.min(marg[finite])) if finite.any() else float("nan")
        min_rel = float(np.min(rel)) if rel.size else float("nan")
        row = {
            "divergence": div.label, "predicted_monotone": predicted, "trials": args.trials,
            "singular_outputs": int(np.sum(~finite)), "min_margin": min_margin, "min_rel_margin": min_rel,
            "witness": None,
        }
        if predicted and rel.size and min_rel < -VIOLATION_REL:
            consistent = False
        if predicted is False and args.budget > 0:
            w = dpi_search_violation(div, args.dim, args.env_dim, args.budget, rng.child(1))
            if w is not None:
                row["witness"] = report.dpi_witness_to_dict(w)
                if args.witness_dir:
                    path = Path(args.witness_dir) / f"witness_{k}.json"
                    path.parent.mkdir(parents=True, exist_ok=True)
                    path.write_text(report.dumps({"meta": _meta(args), **row["witness"]}))
                    row["witness_path"] = str(path)
        rows.append(row)
        found = "none" if row["witness"] is None else f"{row['witness']['method']}:{report.fmt(row['witness']['margin'])}"
        print(
            f"{div.label}: predicted={'monotone' if predicted else 'not-monotone' if predicted is False else 'unknown'} "
            f"min_margin={report.fmt(min_margin)} witness={found}"
        )
    _write(args.json, report.dumps({"meta": _meta(args, dim=args.dim, env_dim=args.env_dim), "points": rows}))
    return EXIT_OK if consistent else EXIT_INCONSISTENT


def cmd_entropy(args) -> int:
    rho = report.load_state(json.loads(Path(args.rho).read_text()))
    sigma = report.load_state(json.loads(Path(args.sigma).read_text()))
    names = args.divergence or ["umegaki"]
    out = {}
    for name in names:
        div = Divergence.parse(name)
        out[div.label] = float(div(rho, sigma))
        print(f"{div.label}: {report.fmt(out[div.label])}")
    _write(args.json, report.dumps({"meta": _meta(args), "values": out}))
    return EXIT_OK


def cmd_probe(args) -> int:
    p, q, s = _number(args.p), _number(args.q), _number(args.s)
    config = _config(args)
    res = probe_point(p, q, s, config)
    theo = theory_label(p, q, s) if (p, q) != (0, 0) else Label.LINEAR_CONSISTENT
    ok = agrees(theo, res.convex_violations, res.concave_violations)
    out = {
        "p": p, "q": q, "s": s, "dim": config.dim, "trials": config.trials,
        "convex_violations": res.convex_violations, "concave_violations": res.concave_violations,
        "failures": res.failures, "empirical": str(res.empirical), "theoretical": str(theo), "agrees": ok,
        "witnesses": {k: report.witness_to_dict(w) for k, w in sorted(res.witnesses.items())},
    }
    if args.target:
        w = search_counterexample(p, q, s, args.target, args.search_dim, args.budget, Rng(args.seed, 2))
        out["search"] = None if w is None else report.witness_to_dict(w)
    print(
        f"({report.fmt(p)}, {report.fmt(q)}, {report.fmt(s)}): convex_violations={res.convex_violations} "
        f"concave_violations={res.concave_violations} empirical={res.empirical} theoretical={theo} agrees={str(ok).lower()}"
    )
    if args.target:
        print(f"search[{args.target}, dim {args.search_dim}]: {'found' if out['search'] else 'none'}")
    _write(args.json, report.dumps({"meta": _meta(args), **out}))
    return EXIT_OK if ok else EXIT_INCONSISTENT


# ---------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="traceconvex", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, trials=500):
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--dim", type=int, default=3)
        sp.add_argument("--trials", type=int, default=trials)
        sp.add_argument("--json", metavar="PATH")

    def probing(sp):
        sp.add_argument("--tol", type=float, default=1e-8, help="relative midpoint tolerance")
        sp.add_argument("--k-mode", choices=["identity", "random"], default="identity")
        sp.add_argument("--regularize-k", type=float, metavar="EPS", help="use K + EPS*I")

    sp = sub.add_parser("scan", help="classify a (p, q, s) grid")
    common(sp)
    probing(sp)
    sp.add_argument("--p", required=True, help="values or lo:hi:step")
    sp.add_argument("--q", required=True)
    sp.add_argument("--s", required=True, help="values, ranges or 'crit' for 1/(p+q)")
    sp.add_argument("--csv", metavar="PATH")
    sp.add_argument("--svg", metavar="PATH")
    sp.set_defaults(func=cmd_scan)

    sp = sub.add_parser("verify", help="variational identity suites")
    common(sp, trials=400)
    sp.add_argument("--suite", choices=["all", *SUITES], default="all")
    sp.add_argument("--n", type=int, default=3, help="factors in the chain suite")
    sp.set_defaults(func=cmd_verify)

    sp = sub.add_parser("dpi", help="data processing checks and violation search")
    common(sp, trials=200)
    sp.add_argument("--alpha")
    sp.add_argument("--z")
    sp.add_argument("--divergence", action="append", help="e.g. d_prime, umegaki, alpha_z:2,0.5")
    sp.add_argument("--env-dim", type=int, default=3)
    sp.add_argument("--budget", type=int, default=100_000, help="search evaluations outside the region")
    sp.add_argument("--witness-dir", metavar="DIR")
    sp.set_defaults(func=cmd_dpi)

    sp = sub.add_parser("entropy", help="evaluate divergences of two states")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--rho", required=True, metavar="PATH")
    sp.add_argument("--sigma", required=True, metavar="PATH")
    sp.add_argument("--divergence", action="append")
    sp.add_argument("--json", metavar="PATH")
    sp.set_defaults(func=cmd_entropy)

    sp = sub.add_parser("probe", help="single-point probe and optional witness search")
    common(sp, trials=1000)
    probing(sp)
    sp.add_argument("--p", required=True)
    sp.add_argument("--q", required=True)
    sp.add_argument("--s", required=True)
    sp.add_argument("--target", choices=["concavity", "convexity"])
    sp.add_argument("--search-dim", type=int, default=2)
    sp.add_argument("--budget", type=int, default=10_000)
    sp.set_defaults(func=cmd_probe)
    return parser


_VALUE_FLAGS = ("--p", "--q", "--s", "--alpha", "--z")


def _glue_negative_values(argv: list) -> list:
    # argparse reads "-1:2:0.5" as an option; turn "--p -1:..." into "--p=-1:..."
    out, i = [], 0
    while i < len(argv):
        if argv[i] in _VALUE_FLAGS and i + 1 < len(argv) and argv[i + 1].startswith("-"):
            out.append(f"{argv[i]}={argv[i + 1]}")
            i += 2
        else:
            out.append(argv[i])
            i += 1
    return out


def main(argv=None) -> int:
    parser = build_parser()
    argv = sys.argv[1:] if argv is None else list(argv)
    args = parser.parse_args(_glue_negative_values(argv))
    try:
        return args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"traceconvex: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NoConvergence as exc:
        print(f"traceconvex: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (TraceConvexError, OSError, ValueError) as exc:
        print(f"traceconvex: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
