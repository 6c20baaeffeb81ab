"""Command-line front end.

Exit codes: 0 success, 1 input error, 2 structural mismatch (signatures,
hypotheses, unclassified families, detection failures), 3 verification
failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from typing import Optional, Sequence


from . import __version__
from .bifurcations import (
    DEFAULT_MU_WINDOW,
    DEFAULT_X_WINDOW,
    N_MU,
    BifurcationType,
    Family,
    classify_family,
    conjugate_to_normal_form,
)
from .conjugacy import MAX_STEPS, SNAP_TOL, Anchor, ConjugacyMap, build_flip, build_full
from .errors import (
    AllSamplesExcludedError,
    ConjugacyError,
    DomainError,
    EvaluationError,
    GridTooCoarseError,
    HypothesisError,
    NonMonotoneError,
    ParseError,
    UnpairedPeriodTwoError,
)
from .fixed_points import GRID_N, ROOT_TOL, TOUCH_TOL, find_fixed_points, find_period2, fixed_point_report
from .maps import Interval, make_map
from .svg import write_svg
from .verify import DEFAULT_EXCLUSION, monotonicity_check, residual_report

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_STRUCTURE = 2
EXIT_VERIFY = 3

DEFAULT_SAMPLES = 1001
DEFAULT_VERIFY_SAMPLES = 10_000
DEFAULT_TOL = 1e-9
DEFAULT_FIBER_TOL = 1e-7


class InputError(Exception):
    pass


def _interval(text: str) -> Interval:
    try:
        return Interval.parse(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def _emit(text: str, path: Optional[str]) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)


def _json(obj) -> str:
    return json.dumps(obj, indent=2) + "\n"


def _csv_text(xs, hs) -> str:
    import io

    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["x", "h"])
    for x, h in zip(xs, hs):
        w.writerow([format(float(x), ".17g"), format(float(h), ".17g")])
    return buf.getvalue()


def _sample(c: ConjugacyMap, n: int):
    xs = c.domain.linspace(n)
    return xs, c.values(xs)


def _write_outputs(c: ConjugacyMap, args, extra_meta: Optional[dict] = None) -> None:
    xs, hs = _sample(c, args.samples)
    _emit(_csv_text(xs, hs), args.out)
    meta = c.metadata()
    if extra_meta:
        meta.update(extra_meta)
    if args.meta:
        _emit(_json(meta), args.meta)
    else:
        sys.stderr.write(json.dumps(meta) + "\n")
    if args.svg:
        write_svg(args.svg, xs, hs, c.pins, title=f"h: {c.f} -> {c.g}")


# -- commands ---------------------------------------------------------------

def cmd_fixed_points(args) -> int:
    m = make_map(args.map, args.domain, mu=args.mu)
    fps = find_fixed_points(m, grid_n=args.grid, root_tol=args.root_tol, touch_tol=args.touch_tol)
    orbits = [] if m.increasing else find_period2(m, grid_n=args.grid, root_tol=args.root_tol, touch_tol=args.touch_tol)
    _emit(_json(fixed_point_report(m, fps, orbits)), args.out)
    return EXIT_OK


def _build(args) -> ConjugacyMap:
    f = make_map(args.f, args.domain_f)
    g = make_map(args.g, args.domain_g)
    anchors = None
    if (args.anchor_a is None) != (args.anchor_b is None):
        raise InputError("--anchor-a and --anchor-b must be given together")
    if args.anchor_a is not None:
        anchors = Anchor(args.anchor_a, args.anchor_b)
    if args.flip:
        return build_flip(f, g, anchors=anchors, seed=args.seed, max_steps=args.max_steps, snap_tol=args.snap_tol)
    return build_full(f, g, seed=args.seed, max_steps=args.max_steps, snap_tol=args.snap_tol, anchors=anchors)


def cmd_conjugacy_build(args) -> int:
    c = _build(args)
    _write_outputs(c, args)
    return EXIT_OK


def cmd_conjugacy_verify(args) -> int:
    c = _build(args)
    rep = residual_report(c, args.samples, args.exclusion)
    mono = monotonicity_check(c, min(args.samples, 1000))
    ok = rep.passes(args.tol) and mono.ok
    out = rep.to_json(args.tol)
    out["pass"] = ok
    out["monotone"] = mono.ok
    if not mono.ok:
        out["violation"] = list(mono.pair)
    _emit(_json(out), args.out)
    return EXIT_OK if ok else EXIT_VERIFY


def _family(args) -> Family:
    return Family.parse(args.family, args.x_window, args.mu_window)


def cmd_bifurcation_classify(args) -> int:
    rep = classify_family(_family(args), n_mu=args.n_mu)
    _emit(_json(rep.to_json()), args.out)
    if not rep.classified:
        sys.stderr.write(f"unclassified; observed pattern: {rep.pattern}\n")
        return EXIT_STRUCTURE
    return EXIT_OK


def cmd_bifurcation_conjugate(args) -> int:
    fam = _family(args)
    rep = classify_family(fam, n_mu=args.n_mu)
    if not rep.classified and args.normal_form is None:
        sys.stderr.write(f"unclassified; observed pattern: {rep.pattern}\n")
        return EXIT_STRUCTURE
    if args.normal_form is not None and rep.classified and rep.type.value != args.normal_form:
        sys.stderr.write(f"family classifies as {rep.type.value}, not {args.normal_form}\n")
        return EXIT_STRUCTURE
    c, nf = conjugate_to_normal_form(fam, args.mu, rep, nf_type=args.normal_form)
    _write_outputs(c, args, {"normal_form": nf.text(), "type": nf.type.value,
                             "sigma": rep.sigma, "mu": args.mu, "mu_normal_form": rep.sigma * args.mu})
    exclusion = min(args.exclusion, 1e-3 * c.domain.width)
    res = residual_report(c, args.verify_samples, exclusion)
    ok = res.passes(args.tol)
    sys.stderr.write(
        f"verify: sup={res.sup_residual:.3e} mean={res.mean_residual:.3e} n={res.n_samples} "
        f"tol={args.tol:g} {'pass' if ok else 'FAIL'}\n"
    )
    return EXIT_OK if ok else EXIT_VERIFY


# -- parser -----------------------------------------------------------------

def _add_map_pair(p: argparse.ArgumentParser) -> None:
    p.add_argument("--f", required=True, help="expression for f in x")
    p.add_argument("--g", required=True, help="expression for g in x")
    p.add_argument("--domain-f", required=True, type=_interval, help="lo,hi")
    p.add_argument("--domain-g", required=True, type=_interval, help="lo,hi")
    p.add_argument("--anchor-a", type=float, default=None, help="anchor in f's domain (default: per segment)")
    p.add_argument("--anchor-b", type=float, default=None, help="image of the anchor in g's domain")
    p.add_argument("--flip", action="store_true", help="decreasing maps (period-2 constructions)")
    p.add_argument("--seed", choices=["linear", "cubic"], default="linear", help="fundamental-domain seed")
    p.add_argument("--max-steps", type=int, default=MAX_STEPS, help="iteration cap per evaluation")
    p.add_argument("--snap-tol", type=float, default=SNAP_TOL, help="snap radius around pinned points")


def _add_outputs(p: argparse.ArgumentParser) -> None:
    p.add_argument("--samples", type=int, default=DEFAULT_SAMPLES, help="number of CSV samples of h")
    p.add_argument("--out", default=None, help="CSV path (default: stdout)")
    p.add_argument("--meta", default=None, help="metadata JSON path (default: stderr)")
    p.add_argument("--svg", default=None, help="write a plot of h")


def _add_family(p: argparse.ArgumentParser) -> None:
    p.add_argument("--family", required=True, help="expression in x and mu")
    p.add_argument("--x-window", type=_interval, default=DEFAULT_X_WINDOW, help="lo,hi")
    p.add_argument("--mu-window", type=_interval, default=DEFAULT_MU_WINDOW, help="lo,hi")
    p.add_argument("--n-mu", type=int, default=N_MU, help="odd number of mu samples")


class _Help(argparse.ArgumentDefaultsHelpFormatter):
    """Show defaults, except where there is none or the help already says it."""

    def _get_help_string(self, action):
        text = action.help or ""
        if "default" in text or action.default in (None, False, argparse.SUPPRESS):
            return text
        return super()._get_help_string(action)


def build_parser() -> argparse.ArgumentParser:
    fmt = _Help
    parser = argparse.ArgumentParser(prog="topoconj", description=__doc__.splitlines()[0], formatter_class=fmt)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fixed-points", help="detect and classify fixed points", formatter_class=fmt)
    p.add_argument("--map", required=True, help="expression in x")
    p.add_argument("--domain", required=True, type=_interval, help="lo,hi")
    p.add_argument("--mu", type=float, default=None, help="parameter value if the map uses mu")
    p.add_argument("--grid", type=int, default=GRID_N, help="scan grid size")
    p.add_argument("--root-tol", type=float, default=ROOT_TOL, help="root deduplication tolerance")
    p.add_argument("--touch-tol", type=float, default=TOUCH_TOL, help="tangential acceptance threshold")
    p.add_argument("--out", default=None, help="JSON path (default: stdout)")
    p.set_defaults(func=cmd_fixed_points)

    conj = sub.add_parser("conjugacy", help="build or verify a conjugacy").add_subparsers(dest="action", required=True)
    p = conj.add_parser("build", help="build h and write samples", formatter_class=fmt)
    _add_map_pair(p)
    _add_outputs(p)
    p.set_defaults(func=cmd_conjugacy_build)

    p = conj.add_parser("verify", help="build h and check the commuting square", formatter_class=fmt)
    _add_map_pair(p)
    p.add_argument("--samples", type=int, default=DEFAULT_VERIFY_SAMPLES, help="residual grid size")
    p.add_argument("--exclusion", type=float, default=DEFAULT_EXCLUSION, help="radius dropped around pinned points")
    p.add_argument("--tol", type=float, default=DEFAULT_TOL, help="pass threshold for the sup residual")
    p.add_argument("--out", default=None, help="JSON path (default: stdout)")
    p.set_defaults(func=cmd_conjugacy_verify)

    bif = sub.add_parser("bifurcation", help="classify families").add_subparsers(dest="action", required=True)
    p = bif.add_parser("classify", help="classify a one-parameter family", formatter_class=fmt)
    _add_family(p)
    p.add_argument("--out", default=None, help="JSON path (default: stdout)")
    p.set_defaults(func=cmd_bifurcation_classify)

    p = bif.add_parser("conjugate", help="conjugate a fiber to its normal form", formatter_class=fmt)
    _add_family(p)
    p.add_argument("--mu", type=float, required=True, help="parameter value of the fiber")
    p.add_argument("--normal-form", choices=[t.value for t in BifurcationType if t is not BifurcationType.UNCLASSIFIED],
                   default=None, help="normal form type (default: classify)")
    _add_outputs(p)
    p.add_argument("--verify-samples", type=int, default=1000, help="residual grid size for the footer")
    p.add_argument("--exclusion", type=float, default=DEFAULT_EXCLUSION, help="radius dropped around pinned points")
    p.add_argument("--tol", type=float, default=DEFAULT_FIBER_TOL, help="pass threshold for the footer")
    p.set_defaults(func=cmd_bifurcation_conjugate)
    return parser


def _value_flags(parser: argparse.ArgumentParser) -> set[str]:
    flags = set()
    for action in parser._actions:
        if isinstance(action, argparse._SubParsersAction):
            for sub in action.choices.values():
                flags |= _value_flags(sub)
        elif action.option_strings and action.nargs is None and not isinstance(
            action, (argparse._StoreTrueAction, argparse._VersionAction, argparse._HelpAction)
        ):
            flags.update(action.option_strings)
    return flags


def _join_values(argv: Sequence[str], flags: set[str]) -> list[str]:
    """Turn ``--flag -1,1`` into ``--flag=-1,1`` so values may start with '-'."""
    out = []
    i = 0
    while i < len(argv):
        tok = argv[i]
        if tok in flags and i + 1 < len(argv):
            out.append(f"{tok}={argv[i + 1]}")
            i += 2
        else:
            out.append(tok)
            i += 1
    return out


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = parser.parse_args(_join_values(argv, _value_flags(parser)))
    except SystemExit as exc:
        # argparse exits 2 on usage errors; those are input errors here
        return EXIT_OK if exc.code == 0 else EXIT_INPUT
    try:
        return args.func(args)
    except (InputError, ParseError, DomainError, EvaluationError, NonMonotoneError,
            AllSamplesExcludedError, ValueError, OSError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_INPUT
    except (HypothesisError, GridTooCoarseError, UnpairedPeriodTwoError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_STRUCTURE
    except ConjugacyError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_STRUCTURE


if __name__ == "__main__":
    sys.exit(main())
