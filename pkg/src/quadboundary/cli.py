"""Command-line front end.

Exit codes: 0 success, 1 domain error (bad parameters), 2 verification failure.
CSV output starts with a ``#`` line holding the run parameters as JSON.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from fractions import Fraction
from typing import Sequence

import numpy as np

from . import genfun, sampler, scaling
from .genfun import CountFamily, CountQuery, Family, FamilySpec, FixedNP, FixedZ, Statistic
from .series import SeriesError

EXIT_OK, EXIT_DOMAIN, EXIT_VERIFY = 0, 1, 2


class DomainError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 by default, which is reserved for failed checks here
    def error(self, message):
        raise DomainError(message)


# ---------------------------------------------------------------------------
# formatting


def fmt(x) -> str:
    """Locale-independent cell text: full integers, shortest round-trip floats."""
    if isinstance(x, bool):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, Fraction):
        return f"{x.numerator}/{x.denominator}" if x.denominator != 1 else str(x.numerator)
    if x is None:
        # closed forms carry no quadrature error estimate
        return "nan"
    return repr(float(x))


def write_csv(out, header: dict, columns: Sequence[str], rows) -> None:
    out.write("# " + json.dumps(header, sort_keys=True) + "\n")
    w = csv.writer(out, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([fmt(c) for c in r])


def parse_grid(text: str) -> np.ndarray:
    """``start:stop:step`` (inclusive of stop up to rounding) or a comma list."""
    try:
        if ":" in text:
            a, b, h = (float(t) for t in text.split(":"))
            if h <= 0 or b < a:
                raise DomainError(f"grid {text!r} needs step > 0 and stop >= start")
            k = int(math.floor((b - a) / h + 1e-9))
            return np.array([round(a + i * h, 12) for i in range(k + 1)])
        return np.array([float(t) for t in text.split(",") if t])
    except ValueError:
        raise DomainError(f"cannot parse grid {text!r}") from None


def parse_list(text: str | None) -> list[float] | None:
    if text is None:
        return None
    try:
        return [float(t) for t in text.split(",") if t]
    except ValueError:
        raise DomainError(f"cannot parse list {text!r}") from None


def _fraction(text: str) -> Fraction:
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise DomainError(f"cannot parse {text!r} as a rational") from None


# ---------------------------------------------------------------------------
# subcommands


def cmd_count(args, out) -> int:
    fam = CountFamily(args.family)
    if args.n is not None and args.p is not None:
        out.write(str(genfun.closed_count(CountQuery(fam, args.n, args.p))) + "\n")
        return EXIT_OK
    header = {"command": "count", "family": fam.value, "order_n": args.order_n, "order_p": args.order_p}
    rows = []
    for n in range(args.order_n + 1):
        for p in range(1, args.order_p + 1):
            rows.append((n, p, genfun.closed_count(CountQuery(fam, n, p))))
    write_csv(out, header, ["n", "p", "count"], rows)
    return EXIT_OK


def cmd_series(args, out) -> int:
    spec = FamilySpec(Family(args.family), args.d, args.s, args.s_prime)
    if spec.family is Family.Td_ss:
        u = genfun.Td_ss_series(spec.d, spec.s, spec.s_prime, args.order_n)
        data = {"family": spec.family.value, "d": spec.d, "s": spec.s, "s_prime": spec.s_prime,
                "coefficients": [[str(c.numerator), str(c.denominator)] for c in u.coeffs()]}
        out.write(json.dumps(data) + "\n")
        return EXIT_OK
    d_max = max(args.d + 2, 1)
    kernel = genfun.build_kernel(args.order_n, args.order_p, d_max)
    s = genfun.series_family(spec, kernel)
    if args.format == "json":
        table = [[[str(s[n, p].numerator), str(s[n, p].denominator)] for p in range(args.order_p + 1)]
                 for n in range(args.order_n + 1)]
        out.write(json.dumps({"family": spec.family.value, "d": spec.d, "order_n": args.order_n,
                              "order_p": args.order_p, "coefficients": table}) + "\n")
    else:
        header = {"command": "series", "family": spec.family.value, "d": spec.d,
                  "order_n": args.order_n, "order_p": args.order_p}
        rows = ((n, p, s[n, p]) for n in range(args.order_n + 1) for p in range(args.order_p + 1))
        write_csv(out, header, ["n", "p", "coefficient"], rows)
    return EXIT_OK


def cmd_verify(args, out) -> int:
    results = genfun.verify_identities(args.order_n, args.order_p, args.dmax)
    failed = 0
    for r in results:
        out.write(f"{'PASS' if r.passed else 'FAIL'}  {r.name}" + (f"  ({r.detail})" if r.detail else "") + "\n")
        failed += not r.passed
    out.write(f"{len(results) - failed}/{len(results)} identities hold\n")
    return EXIT_VERIFY if failed else EXIT_OK


def _ensemble(args):
    if args.n is None:
        raise DomainError("--n is required")
    if (args.p is None) == (args.z is None):
        raise DomainError("give exactly one of --p (fixed perimeter) or --z (fixed boundary weight)")
    if args.p is not None:
        return FixedNP(args.n, args.p)
    return FixedZ(args.n, _fraction(args.z), args.p_max)


def cmd_sample(args, out) -> int:
    ens = _ensemble(args)
    config = sampler.SampleConfig(ens, args.samples, seed=args.seed, measure=args.measure,
                                  base_condition="min-label-1" if args.base is not None else "unconstrained",
                                  base=args.base, method=args.method)
    if args.emit_codes:
        for code in sampler.sample_codes(config):
            out.write(code.to_json() + "\n")
        return EXIT_OK
    hist = sampler.distance_histogram(config, args.statistic, workers=args.workers)
    header = dict(hist.metadata, command="sample", statistic=Statistic(args.statistic).value)
    rows = [(d, hist.counts[d], hist.counts[d] / hist.samples) for d in hist.support()]
    if args.compare:
        ref = genfun.pmf_table(ens, args.statistic, config.measure.value)
        rep = sampler.ks_compare(hist, ref)
        header["compare"] = rep.as_dict()
        header["ks_threshold"] = 4 / math.sqrt(max(hist.samples, 1))
    write_csv(out, header, ["d", "count", "prob"], rows)
    if args.compare and header["compare"]["ks"] >= header["ks_threshold"]:
        return EXIT_VERIFY
    return EXIT_OK


def cmd_pmf(args, out) -> int:
    ens = _ensemble(args)
    table = genfun.pmf_table(ens, args.statistic, args.measure)
    header = {"command": "pmf", "statistic": Statistic(args.statistic).value, "measure": args.measure,
              "n": ens.n, **({"p": ens.p} if isinstance(ens, FixedNP) else {"z": str(ens.z)})}
    write_csv(out, header, ["d", "prob_exact", "prob"], ((d, q, float(q)) for d, q in enumerate(table)))
    return EXIT_OK



def cmd_scaling(args, out) -> int:
    if args.check:
        res = scaling.residual_checks(args.check)
        out.write(json.dumps({"kind": res.kind, "max_residual": float(res.max_residual),
                              "points": res.points, "step": res.step}) + "\n")
        return EXIT_OK
    if args.fn is None:
        raise DomainError("--fn is required (one of: " + ", ".join(scaling.distribution_kinds()) + ")")
    names = scaling.distribution_args(args.fn)
    var = names[0]
    grid = parse_grid(args.grid)
    fixed = {}
    for name in names[1:]:
        val = getattr(args, name, None)
        if val is None:
            raise DomainError(f"{args.fn} needs --{name}")
        fixed[name] = float(val)
    config = scaling.QuadratureConfig(xi_max=args.xi_max, nodes=args.nodes)
    rows = []
    for x in grid:
        kw = dict(fixed, **{var: float(x)})
        if args.fn in ("Phi", "Phi_bar", "Phi_hat"):
            fn = {"Phi": scaling.Phi_with_error, "Phi_bar": scaling.Phi_bar_with_error,
                  "Phi_hat": scaling.Phi_hat_with_error}[args.fn]
            v, e = fn(*(kw[a] for a in names), config=config)
        else:
            v, e = scaling.distribution_with_error(args.fn, **kw)
        rows.append((x, v, e))
    header = {"command": "scaling", "fn": args.fn, "x": var, **fixed,
              "xi_max": config.xi_max, "nodes": config.nodes}
    write_csv(out, header, ["x", "value", "error_estimate"], rows)
    return EXIT_OK


FIGURES = {
    "phi_of_P": {"P": [0.01, 0.1, 0.5, 1.0, 2.0, 5.0], "grid": "0:3:0.05"},
    "rho_tilde_bound_P": {"P": [0.5, 1.0, 1.5, 2.0, 3.0, 5.0, 10.0], "grid": "0:3:0.05"},
    "phi_z": {"z": list(scaling.FIG_Z_VALUES)},
    "phi_tilde_Z": {"Z": list(scaling.FIG_ZTILDE_VALUES)},
    "mean_delta_u": {"P": [0.5, 1.0, 1.5, 2.0, 3.0, 5.0, 10.0], "grid": "0.02:0.98:0.02"},
    "phi_hat_P": {"P": [0.01, 0.1, 0.2, 0.5, 1.0], "grid": "0:3:0.05"},
}


def emit_figure_data(figure: str, params: list[float] | None = None, grid: str | None = None) -> tuple[dict, list, list]:
    """Header, column names and rows for one figure; parameters default to the plotted ones."""
    if figure not in FIGURES:
        raise DomainError(f"unknown figure {figure!r}; choose from {', '.join(FIGURES)}")
    spec = FIGURES[figure]
    key = next(k for k in spec if k != "grid")
    vals = params if params else spec[key]
    header = {"command": "figure", "figure": figure, key: vals}
    if figure in ("phi_z", "phi_tilde_Z"):
        law, bfun = (scaling.phi_z, scaling.beta) if figure == "phi_z" else (scaling.phi_tilde_Z, scaling.beta_tilde)
        betas = [bfun(v) for v in vals]
        d_top = int(math.ceil(4 / min(betas)))
        ds = parse_grid(grid).astype(int) if grid else np.arange(0, d_top + 1)
        header["grid"] = grid or f"0:{d_top}:1"
        cols = ["d"]
        for v in vals:
            cols += [f"{key}={v}", f"tanh2_{key}={v}"]
        rows = []
        for d in ds:
            r = [int(d)]
            for v, b in zip(vals, betas):
                r += [float(law(d, v)), math.tanh(d * b) ** 2]
            rows.append(r)
        return header, cols, rows
    xs = parse_grid(grid or spec["grid"])
    header["grid"] = grid or spec["grid"]
    if figure == "phi_of_P":
        cols = ["D", "Phi"] + [f"P={P}" for P in vals]
        rows = [[x, scaling.Phi(x)] + [scaling.Phi_bar(x, P) for P in vals] for x in xs]
    elif figure == "phi_hat_P":
        cols = ["D", "Phi"] + [f"P={P}" for P in vals]
        rows = [[x, scaling.Phi(x)] + [scaling.Phi_hat(x, P) for P in vals] for x in xs]
    elif figure == "rho_tilde_bound_P":
        cols = ["delta", "rayleigh", "small_P"] + [f"P={P}" for P in vals]
        rows = [[x, float(scaling.rayleigh(x)), float(scaling.rho_tilde_bound_small_P(x))]
                + [scaling.rho_tilde_bound(x, P) if x > 0 else 0.0 for P in vals] for x in xs]
    else:  # mean_delta_u
        cols = ["u", "small_P", "large_P"] + [f"P={P}" for P in vals]
        means = [scaling.mean_delta(xs, P) for P in vals]
        rows = [[x, float(scaling.mean_delta_small_P(x)), float(scaling.mean_delta_large_P(x))]
                + [m[i] for m in means] for i, x in enumerate(xs)]
    return header, cols, rows


def cmd_figure(args, out) -> int:
    header, cols, rows = emit_figure_data(args.figure, parse_list(args.params), args.grid)
    write_csv(out, header, cols, rows)
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="quadboundary", description="Distances in random quadrangulations with a boundary.")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    c = sub.add_parser("count", help="closed-form counts (W0, W, tildeW0)")
    c.add_argument("--family", required=True, choices=[f.value for f in CountFamily])
    c.add_argument("--n", type=int, help="area (with --p: print a single count)")
    c.add_argument("--p", type=int, help="half-perimeter")
    c.add_argument("--order-n", type=int, default=10, help="table range in n (default 10)")
    c.add_argument("--order-p", type=int, default=5, help="table range in p (default 5)")
    c.set_defaults(func=cmd_count)

    s = sub.add_parser("series", help="exact series coefficients of a generating function")
    s.add_argument("--family", required=True, choices=[f.value for f in Family])
    s.add_argument("--d", type=int, default=0, help="distance index (default 0)")
    s.add_argument("--s", type=int, default=None, help="contour separation s (Td_ss only)")
    s.add_argument("--s-prime", type=int, default=None, help="contour separation s' (Td_ss only)")
    s.add_argument("--order-n", type=int, default=10, help="order in g (default 10)")
    s.add_argument("--order-p", type=int, default=5, help="order in z (default 5)")
    s.add_argument("--format", choices=["json", "csv"], default="json", help="default json")
    s.set_defaults(func=cmd_series)

    v = sub.add_parser("verify", help="run the exact identity suite")
    v.add_argument("--order-n", type=int, default=20, help="default 20")
    v.add_argument("--order-p", type=int, default=10, help="default 10")
    v.add_argument("--dmax", type=int, default=5, help="default 5")
    v.set_defaults(func=cmd_verify)

    def ensemble_args(q):
        q.add_argument("--n", type=int, help="area")
        q.add_argument("--p", type=int, help="half-perimeter (fixed-perimeter ensemble)")
        q.add_argument("--z", type=str, help="boundary weight as a rational, e.g. 1/20 (fixed-z ensemble)")
        q.add_argument("--p-max", type=int, default=None, help="explicit cutoff for the fixed-z sum")
        q.add_argument("--statistic", choices=[t.value for t in Statistic], default="bulk_boundary")
        q.add_argument("--measure", choices=["pointed", "rooted"], default="pointed")

    m = sub.add_parser("sample", help="Monte Carlo histogram of a distance")
    ensemble_args(m)
    m.add_argument("--samples", type=int, default=10000, help="default 10000")
    m.add_argument("--seed", type=int, default=0, help="default 0")
    m.add_argument("--method", choices=["auto", "dp", "free"], default="auto")
    m.add_argument("--base", type=int, default=None, help="condition on this origin-boundary distance")
    m.add_argument("--workers", type=int, default=1, help="processes (output does not depend on this)")
    m.add_argument("--emit-codes", action="store_true", help="print sampled codes as JSON lines")
    m.add_argument("--compare", action="store_true", help="KS against the exact pmf; exit 2 above 4/sqrt(samples)")
    m.set_defaults(func=cmd_sample)

    x = sub.add_parser("pmf", help="exact distance pmf")
    ensemble_args(x)
    x.set_defaults(func=cmd_pmf)

    sc = sub.add_parser("scaling", help="evaluate a scaling function on a grid")
    sc.add_argument("--fn", choices=scaling.distribution_kinds())
    sc.add_argument("--grid", "--D", dest="grid", default="0:3:0.05",
                    help="start:stop:step or comma list for the first argument (default 0:3:0.05)")
    sc.add_argument("--P", type=float)
    sc.add_argument("--u", type=float)
    sc.add_argument("--z", type=float)
    sc.add_argument("--Z", type=float)
    sc.add_argument("--y", type=float)
    sc.add_argument("--xi-max", type=float, default=8.0, help="default 8")
    sc.add_argument("--nodes", type=int, default=2048, help="default 2048")
    sc.add_argument("--check", choices=["ode_H", "pde_Gstar", "laplace_HHbar", "diffusion_pde"],
                    help="print a residual check instead")
    sc.set_defaults(func=cmd_scaling)

    f = sub.add_parser("figure", help="data behind one of the plotted figures")
    f.add_argument("figure", choices=list(FIGURES))
    f.add_argument("--params", help="comma list overriding the plotted parameter values")
    f.add_argument("--grid", help="start:stop:step overriding the default grid")
    f.set_defaults(func=cmd_figure)

    for q in (c, s, m, x, sc, f):
        q.add_argument("--out", help="write to this file instead of stdout")
    return ap


def run(argv: Sequence[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except DomainError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_DOMAIN
    buf = io.StringIO()
    try:
        code = args.func(args, buf)
    except (DomainError, ValueError, SeriesError, scaling.ScalingError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_DOMAIN
    text = buf.getvalue()
    if getattr(args, "out", None):
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return code


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
