"""Acceptance criteria 1-10, one test each, at the stated tolerances.

Each test records a ``criterion k: PASS|FAIL ...`` line that is echoed in
the terminal summary. Criteria 6 and 9 fail at the stated parameters; the
printed diagnostics show the measured convergence rates.
"""

import math
import time
from fractions import Fraction

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES
from quadboundary import scaling as S
from quadboundary.coding import bfs, decode, encode, enumerate_codes, validate
from quadboundary.genfun import (CountQuery, FixedNP, FixedZ, build_kernel, closed_count, pmf_table,
                                 verify_identities)
from quadboundary.sampler import SampleConfig, distance_histogram, ks_compare, ks_continuous, sample_distances


def report(k, ok, detail):
    line = f"criterion {k}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def test_criterion_1_counts_vs_series():
    t = time.time()
    K = build_kernel(30, 12, 1)
    W0, W, Wt = K.W_d(0), K.W, K.W_tilde_0
    bad = [(fam, n, p) for n in range(31) for p in range(1, 13)
           for fam, ser in (("W0", W0), ("W", W), ("tildeW0", Wt))
           if closed_count(CountQuery(fam, n, p)) != ser[n, p]]
    el = time.time() - t
    ok = not bad and el < 30
    assert report(1, ok, f"{3 * 31 * 12} coefficients exact, {len(bad)} mismatches, {el:.1f} s"), bad[:5]


def test_criterion_2_brute_force():
    checked = 0
    problems = []
    for n in range(5):
        for p in range(1, 4):
            codes = list(enumerate_codes(n, p))
            if len(codes) != closed_count(CountQuery("W", n, p)):
                problems.append(("count W", n, p))
            if sum(c.base == 0 for c in codes) != closed_count(CountQuery("W0", n, p)):
                problems.append(("count W0", n, p))
            forms = set()
            for c in codes:
                m, labels = decode(c, with_labels=True)
                if validate(m) or bfs(m, m.origin) != labels or encode(m) != c:
                    problems.append(("map", c))
                    break
                forms.add(m.canonical_form())
            if len(forms) != len(codes):
                problems.append(("distinct maps", n, p))
            checked += len(codes)
    assert report(2, not problems, f"{checked} codes decoded, labels = BFS, round trip exact, "
                                   f"{len(problems)} problems"), problems[:5]


def test_criterion_3_identities():
    results = verify_identities(25, 12, 6)
    failed = [r.name for r in results if not r.passed]
    assert report(3, not failed, f"{len(results) - len(failed)}/{len(results)} identities exact at "
                                 "(n<=25, p<=12, d<=6)"), failed


def test_criterion_4_normalizations():
    norms = {P: S.rho_tilde_normalization(P) for P in (0.5, 1.0, 2.0, 5.0)}
    # int_0^inf d^(2k+1) e^(-d^2) dd = k!/2
    exact = Fraction(2, 105) * sum(Fraction(c * math.factorial(k), 2) for k, c in enumerate((35, 28, 12, 3)))
    numeric = S.integrate_density(S.rho_tilde_bound_small_P)
    worst = max(abs(v - 1) for v in norms.values())
    ok = worst < 1e-6 and exact == 1 and abs(numeric - 1) < 1e-8
    assert report(4, ok, f"max |int rho~ - 1| = {worst:.1e} over P in {{0.5,1,2,5}}; small-P law "
                         f"exact {exact}, numeric error {abs(numeric - 1):.1e}"), norms


def test_criterion_5_small_D():
    D = 0.05
    errs = {}
    for P in (0.5, 1.0, 2.0):
        errs[f"bar P={P}"] = abs(S.Phi_bar(D, P) - (0.75 * P * D**2 - 0.375 * (P * P - 1) * D**4))
    for P in (0.1, 0.5):
        series = 4.5 * P * D**2 - 1.5 * (1 + 9 * P**2 + 162 * P**4) / (1 + 18 * P**2) * D**4
        errs[f"hat P={P}"] = abs(S.Phi_hat(D, P) - series)
    worst = max(errs.values())
    assert report(5, worst < 1e-5, f"max deviation from the D^4 expansions at D=0.05: {worst:.1e}"), errs


def test_criterion_6_cross_regime():
    Dg = np.linspace(0.0, 4.0, 81)
    phi = np.array([S.Phi(D) for D in Dg])
    sub = {}
    sub["Phi_bar(.,1e-3) vs Phi"] = (max(abs(S.Phi_bar(D, 1e-3) - v) for D, v in zip(Dg, phi)), 5e-3)
    x = np.linspace(0.0, 4.0, 81)
    sub["Phi_bar(.,50) vs tanh^2"] = (max(abs(S.Phi_bar(v / math.sqrt(50), 50) - math.tanh(math.sqrt(3) / 2 * v) ** 2)
                                          for v in x), 1e-2)
    dg = np.linspace(0.0, 3.0, 61)
    sub["rho~(.,50) vs Rayleigh"] = (max(abs(S.rho_tilde_bound(d, 50) - S.rayleigh(d)) for d in dg), 1e-2)
    sub["<delta(1/2)> at P=100"] = (abs(S.mean_delta(0.5, 100) - 2 / math.sqrt(math.pi)), 1e-2)
    sub["Phi_hat(.,1e-3) vs Phi"] = (max(abs(S.Phi_hat(D, 1e-3) - v) for D, v in zip(Dg, phi)), 5e-3)
    failed = [k for k, (v, tol) in sub.items() if not v < tol]
    detail = "; ".join(f"{k}: {v:.2e} (tol {tol:.0e}){'' if v < tol else ' X'}" for k, (v, tol) in sub.items())
    # the gaps shrink like sqrt(P) and 1/P; see the decisions ledger
    assert report(6, not failed, detail), failed


def test_criterion_7_residuals():
    tol = {"ode_H": 1e-6, "pde_Gstar": 1e-5, "diffusion_pde": 1e-5, "laplace_HHbar": 1e-4}
    res = {k: S.residual_checks(k).max_residual for k in tol}
    failed = [k for k in tol if not res[k] < tol[k]]
    detail = ", ".join(f"{k} {res[k]:.1e}" for k in tol)
    assert report(7, not failed, detail), failed


def test_criterion_8_monte_carlo_desk_scale():
    N = 10**6
    t = time.time()
    out = {}
    for name, ens in (("(n,p)=(12,3)", FixedNP(12, 3)), ("n=12 z=1/20", FixedZ(12, Fraction(1, 20)))):
        h = distance_histogram(SampleConfig(ens, N, seed=20240601))
        out[name] = ks_compare(h, pmf_table(ens, "bulk_boundary", "pointed")).ks
    el = time.time() - t
    thr = 4 / math.sqrt(N)
    ok = all(v < thr for v in out.values()) and el < 120
    detail = ", ".join(f"KS {k} = {v:.1e}" for k, v in out.items())
    assert report(8, ok, f"{detail} (threshold {thr:.0e}, seed 20240601, {el:.0f} s)"), out


@pytest.mark.slow
def test_criterion_9_scaling_statistics():
    n, N, seed = 10**4, 10**5, 2024
    scale = n**-0.25
    out = {}
    for name, ens, cdf in (("z=0.05 vs Phi", FixedZ(n, Fraction(1, 20)), S.Phi),
                           ("p=100 vs Phi_bar(.,1)", FixedNP(n, math.isqrt(n)), lambda D: S.Phi_bar(D, 1.0))):
        d = sample_distances(SampleConfig(ens, N, seed=seed))
        atoms = np.unique(d) * scale
        table = {float(x): (cdf(x) if x > 0 else 0.0) for x in atoms}
        out[name] = (ks_continuous(d, scale, lambda xs: np.array([table[float(x)] for x in xs])),
                     float(d.mean() * scale))
    failed = [k for k, (v, _) in out.items() if not v < 0.05]
    detail = "; ".join(f"KS {k} = {v:.3f}, mean D = {m:.3f}" for k, (v, m) in out.items())
    # finite-size lattice offset, decaying like n^(-1/4); see the decisions ledger
    assert report(9, not failed, f"{detail} (tol 0.05, n=1e4, 1e5 samples, seed {seed})"), failed


def test_criterion_10_critical_constants():
    consts = {"g_crit2(1/8)": S.g_crit2(1 / 8) - 1 / 12, "g~_crit(2/9)": S.g_tilde_crit(2 / 9) - 1 / 12,
              "g^_crit(4/81)": S.g_hat_crit(4 / 81) - 1 / 12, "x_crit(1/8)": S.x_crit(1 / 8) - 1}
    ok = all(abs(v) < 1e-12 for v in consts.values())
    parts = [f"constants within {max(abs(v) for v in consts.values()):.0e}"]
    for kind in ("phi_z", "phi_tilde_Z"):
        devs = [r.max_dev for r in S.tanh_ratio_scan(kind)]
        mono = all(a > b for a, b in zip(devs, devs[1:]))
        ok = ok and mono and devs[-1] < 0.05
        parts.append(f"{kind}/tanh^2 max dev " + " > ".join(f"{v:.3f}" for v in devs))
    assert report(10, ok, "; ".join(parts) + f" (D window {S.RATIO_WINDOW})")
