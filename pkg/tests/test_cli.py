import csv
import io
import json
import re
import subprocess
import sys

import pytest

from quadboundary import cli, genfun
from quadboundary.genfun import IdentityResult

NUMERIC = re.compile(r"^-?(\d+(/\d+)?|\d+\.\d+(e-?\d+)?|\d+(\.\d+)?e[-+]?\d+|nan|inf)$")


def run(capsys, *argv):
    code = cli.run(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def parse_csv(text):
    lines = text.splitlines()
    assert lines[0].startswith("# ")
    json.loads(lines[0][2:])
    rows = list(csv.reader(io.StringIO("\n".join(lines[1:]))))
    header, body = rows[0], rows[1:]
    assert body and all(len(r) == len(header) for r in body)
    for r in body:
        for cell in r:
            assert NUMERIC.match(cell), cell
    return header, body


def test_count_single(capsys):
    assert run(capsys, "count", "--family", "W0", "--n", "1", "--p", "1")[:2] == (0, "2\n")
    assert run(capsys, "count", "--family", "W", "--n", "1", "--p", "1")[1] == "3\n"
    assert run(capsys, "count", "--family", "tildeW0", "--n", "2", "--p", "2")[1] == "10\n"


def test_count_big_integer_in_full(capsys):
    out = run(capsys, "count", "--family", "W", "--n", "60", "--p", "20")[1].strip()
    assert out.isdigit() and len(out) > 40
    assert int(out) == genfun.closed_count(genfun.CountQuery("W", 60, 20))


def test_count_table(capsys):
    code, out, _ = run(capsys, "count", "--family", "W", "--order-n", "2", "--order-p", "2")
    header, body = parse_csv(out)
    assert header == ["n", "p", "count"]
    assert ["2", "2", "90"] in body


def test_verify_passes(capsys):
    code, out, _ = run(capsys, "verify", "--order-n", "20", "--order-p", "10", "--dmax", "5")
    assert code == 0
    lines = out.strip().splitlines()
    assert len(lines) == 10 and all(l.startswith("PASS") for l in lines[:9])
    assert lines[-1] == "9/9 identities hold"


def test_verify_failure_exit_code(capsys, monkeypatch):
    monkeypatch.setattr(genfun, "verify_identities",
                        lambda *a, **k: [IdentityResult("broken", False, "forced")])
    code, out, _ = run(capsys, "verify", "--order-n", "4", "--order-p", "2", "--dmax", "2")
    assert code == cli.EXIT_VERIFY and "FAIL" in out


def test_scaling_phi(capsys):
    code, out, _ = run(capsys, "scaling", "--fn", "Phi", "--D", "0:3:0.05")
    assert code == 0
    header, body = parse_csv(out)
    assert header == ["x", "value", "error_estimate"]
    assert len(body) == 61
    assert float(body[0][1]) == 0.0
    # the two-point function at D = 3 is 0.959; it reaches 1 within 1e-4 only near D = 5
    assert float(body[-1][0]) == pytest.approx(3.0)
    assert float(body[-1][1]) == pytest.approx(0.959, abs=1e-3)
    vals = [float(r[1]) for r in body]
    assert vals == sorted(vals)
    code, out, _ = run(capsys, "scaling", "--fn", "Phi", "--D", "8")
    assert float(parse_csv(out)[1][0][1]) == pytest.approx(1.0, abs=1e-4)


def test_scaling_other_kinds(capsys):
    code, out, _ = run(capsys, "scaling", "--fn", "rho_tilde_u", "--grid", "0.5,1", "--u", "0.5", "--P", "1")
    assert code == 0 and len(parse_csv(out)[1]) == 2
    code, out, _ = run(capsys, "scaling", "--check", "laplace_HHbar")
    assert code == 0 and json.loads(out)["max_residual"] < 1e-4


@pytest.mark.parametrize("argv", [
    ["count", "--family", "W0", "--n", "-1", "--p", "1"],
    ["count", "--family", "W0", "--n", "1", "--p", "0"],
    ["scaling", "--fn", "Phi_bar", "--D", "1"],
    ["scaling", "--fn", "phi_z", "--grid", "1,2", "--z", "0.1"],
    ["sample", "--n", "4", "--samples", "10"],
    ["bogus"],
    ["count", "--family", "nope", "--n", "1", "--p", "1"],
])
def test_domain_errors_exit_1(capsys, argv):
    code, out, err = run(capsys, *argv)
    assert code == cli.EXIT_DOMAIN and err.startswith("error:")


def test_pmf_csv(capsys):
    code, out, _ = run(capsys, "pmf", "--n", "4", "--p", "2")
    header, body = parse_csv(out)
    assert header == ["d", "prob_exact", "prob"]
    from fractions import Fraction
    assert sum(Fraction(r[1]) for r in body) == 1


def test_sample_deterministic_and_compare(capsys, tmp_path):
    argv = ["sample", "--n", "12", "--p", "3", "--samples", "20000", "--seed", "5", "--compare"]
    code1, out1, _ = run(capsys, *argv)
    code2, out2, _ = run(capsys, *argv)
    assert code1 == code2 == 0 and out1 == out2
    header, body = parse_csv(out1)
    assert header == ["d", "count", "prob"]
    assert sum(int(r[1]) for r in body) == 20000
    meta = json.loads(out1.splitlines()[0][2:])
    assert meta["compare"]["ks"] < meta["ks_threshold"]
    target = tmp_path / "h.csv"
    run(capsys, *argv, "--out", str(target))
    assert target.read_bytes() == out1.encode()


def test_sample_fixed_z(capsys):
    code, out, _ = run(capsys, "sample", "--n", "12", "--z", "1/20", "--samples", "5000", "--seed", "2")
    meta = json.loads(out.splitlines()[0][2:])
    assert code == 0 and meta["ensemble"] == "fixed_z" and meta["z"] == "1/20"


def test_sample_emit_codes(capsys):
    code, out, _ = run(capsys, "sample", "--n", "3", "--p", "2", "--samples", "4", "--emit-codes")
    assert code == 0
    lines = [l for l in out.splitlines() if l and not l.startswith("#")]
    assert len(lines) == 4 and all("steps" in json.loads(l) for l in lines)


def test_series_json(capsys):
    code, out, _ = run(capsys, "series", "--family", "Wd", "--d", "1", "--order-n", "3", "--order-p", "2")
    data = json.loads(out)
    assert data["coefficients"][1][1] == ["3", "1"]


@pytest.mark.parametrize("fig", ["phi_of_P", "rho_tilde_bound_P", "phi_z", "phi_tilde_Z", "mean_delta_u",
                                 "phi_hat_P"])
def test_figures_schema(capsys, fig):
    code, out, _ = run(capsys, "figure", fig)
    assert code == 0
    header, body = parse_csv(out)
    assert len(header) >= 2


def test_figure_phi_of_P_ordering(capsys):
    _, out, _ = run(capsys, "figure", "phi_of_P", "--grid", "0.2:2:0.3")
    header, body = parse_csv(out)
    cols = [i for i, h in enumerate(header) if h.startswith("P=")]
    for r in body:
        vals = [float(r[i]) for i in cols]
        assert vals == sorted(vals)


def test_figure_rho_bounds(capsys):
    _, out, _ = run(capsys, "figure", "rho_tilde_bound_P")
    header, body = parse_csv(out)
    lo, hi = header.index("small_P"), header.index("rayleigh")
    cols = [i for i, h in enumerate(header) if h.startswith("P=")]
    for r in body:
        vals = [float(r[i]) for i in cols]
        # on the rising side the curves stack between the two limit laws;
        # near the peak large-P curves overshoot the Rayleigh law slightly
        if 0 < float(r[0]) <= 0.6:
            assert vals == sorted(vals)
            assert float(r[lo]) - 1e-12 <= vals[0] and vals[-1] <= float(r[hi]) + 1e-12
    # distance to the Rayleigh law shrinks as P grows
    gaps = [max(abs(float(r[i]) - float(r[hi])) for r in body) for i in cols]
    assert gaps == sorted(gaps, reverse=True)


def test_figure_mean_delta_symmetric(capsys):
    _, out, _ = run(capsys, "figure", "mean_delta_u", "--params", "1", "--grid", "0.1:0.9:0.1")
    header, body = parse_csv(out)
    vals = [float(r[1]) for r in body]
    assert vals == pytest.approx(vals[::-1], abs=1e-12)


def test_console_script():
    r = subprocess.run([sys.executable, "-m", "quadboundary.cli", "count", "--family", "W0", "--n", "1", "--p", "1"],
                       capture_output=True, text=True)
    assert r.returncode == 0 and r.stdout == "2\n"
