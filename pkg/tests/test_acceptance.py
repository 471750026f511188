"""Acceptance gate: one recorded pass/fail line per criterion, at the stated tolerances.

The full-scale Monte Carlo reproduction takes several minutes on one core.
"""
import csv
import math
import shutil

import numpy as np
import pytest
from scipy import integrate, stats

import oracles
from freqshift import (
    EventClass,
    ModelParams,
    SamplerConfig,
    crlb_sigma,
    density_dt,
    draw_batch,
    fi_asymptotic,
    fi_nonresolving,
    fi_resolving,
    qfi,
)
from freqshift.cli import main
from freqshift.fisher import beta_mean, beta_nu, qfi_matrices

NU_GRID = [round(0.1 * k, 1) for k in range(1, 11)]
TDW_GRID = [0.01, 0.1, 0.5, 1.0, 3.0, 10.0, 50.0]


def read_rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_c01_closed_form(criterion):
    with criterion(1, "closed-form FI 2 tau^2 at nu=1, gamma^2 scaling exact"):
        assert fi_resolving(ModelParams(tau=1.0, nu=1.0, gamma=1.0)).value == 2.0
        assert fi_resolving(ModelParams(tau=1.0, nu=1.0, gamma=0.5)).value == 0.5
        for g in (0.1, 0.3, 0.77, 0.999):
            val = fi_resolving(ModelParams(tau=1.3, nu=1.0, gamma=g, delta_omega=2.0)).value
            assert val == pytest.approx(g * g * 2.0 * 1.3 ** 2, rel=1e-15)


def test_c02_qfi(criterion):
    with criterion(2, "QFI 2 tau^2 and Jacobian identity for tau in {0.1, 1, 100}"):
        for tau in (0.1, 1.0, 100.0):
            assert qfi(tau).value == 2.0 * tau * tau
            h12, jac, hmd = qfi_matrices(tau)
            np.testing.assert_array_equal(h12, 4.0 * tau * tau * np.eye(2))
            np.testing.assert_array_equal(hmd, 2.0 * tau * tau * np.eye(2))


def test_c03_bound_chain(criterion):
    with criterion(3, "non-resolving <= resolving <= 2 tau^2 over the nu x tau*dw grid"):
        worst = math.inf
        for nu in NU_GRID:
            for tdw in TDW_GRID:
                p = ModelParams(tau=1.0, nu=nu, delta_omega=tdw)
                nr, r = fi_nonresolving(p).value, fi_resolving(p).value
                worst = min(worst, r - nr, 2.0 - r)
        print(f"bound chain minimum slack {worst:.3e}")
        assert worst >= -1e-6


def test_c04_asymptote(criterion):
    with criterion(4, "resolving FI within 1% of the large-shift asymptote at tau*dw=50"):
        for nu in (0.5, 0.7, 0.9):
            p = ModelParams(tau=1.0, nu=nu, delta_omega=50.0)
            rel = abs(fi_resolving(p).value / fi_asymptotic(p).value - 1.0)
            print(f"nu={nu}: relative gap {rel:.2e}")
            assert rel < 0.01


def test_c05_finite_difference_oracle(criterion):
    with criterion(5, "quadrature FI matches finite-difference score oracle to 1e-4 at 12 points"):
        for nu in (0.3, 0.7, 0.95):
            for tdw in (0.5, 1.0, 3.0, 10.0):
                quad = fi_resolving(ModelParams(tau=1.0, nu=nu, delta_omega=tdw)).value
                fd = oracles.fisher_finite_difference(nu, 1.0, tdw)
                assert quad == pytest.approx(fd, rel=1e-4), (nu, tdw)


def test_c06_beta_mean(criterion):
    with criterion(6, "period average of beta_nu equals 1 - sqrt(1 - nu^2) within 1e-8"):
        for nu in (0.05, 0.1, 0.2, 0.3, 0.5, 0.6, 0.75, 0.9, 0.99, 1.0):
            avg, _ = integrate.quad(lambda x: beta_nu(x, nu), 0.0, math.pi, points=[math.pi / 2],
                                    epsabs=1e-13, epsrel=1e-13, limit=400)
            assert abs(avg / math.pi - (1.0 - math.sqrt(1.0 - nu * nu))) < 1e-8
            assert abs(beta_mean(nu) - (1.0 - math.sqrt(1.0 - nu * nu))) < 1e-12


def test_c07_normalization_and_marginalization(criterion):
    with criterion(7, "density normalized to 1e-9; two-time marginal matches to 1e-6"):
        for tau, nu, dw in ((1.0, 1.0, 0.0), (1.0, 0.7, 3.0), (2.5, 0.4, 0.3), (0.2, 0.95, 40.0)):
            p = ModelParams(tau=tau, nu=nu, delta_omega=dw)
            total = sum(
                integrate.quad(lambda t: density_dt(cls, t, p), -20 * tau, 20 * tau,
                               epsabs=0, epsrel=1e-13, limit=2000)[0]
                for cls in EventClass)
            assert abs(total - 1.0) < 1e-9
        for dt in (-1.7, 0.0, 0.4, 2.2):
            for nu in (0.3, 1.0):
                for dw in (0.0, 1.0, 5.0):
                    p = ModelParams(tau=1.0, nu=nu, delta_omega=dw)
                    for cls in EventClass:
                        ref = oracles.marginal_from_joint(cls.alpha, dt, nu, 1.0, dw)
                        got = density_dt(cls, dt, p)
                        if ref == 0.0:
                            assert got == 0.0
                        else:
                            assert got == pytest.approx(ref, rel=1e-6)


def test_c08_sampler_fidelity(criterion):
    with criterion(8, "chi-square of a 1e5 batch passes at 0.001; nu=1, dw=0 is all bunch"):
        tau, nu, dw, n = 1.0, 0.7, 3.0, 100_000
        p = ModelParams(tau=tau, nu=nu, delta_omega=dw)
        b = draw_batch(SamplerConfig(p, n, seed=20241016))
        dt, alpha = b.two_photon()
        edges = np.linspace(-6 * tau, 6 * tau, 61)
        observed, expected = [], []
        for cls in EventClass:
            observed.extend(np.histogram(dt[alpha == cls.alpha], bins=edges)[0])
            expected.extend(n * integrate.quad(lambda t: oracles.density(cls.alpha, t, nu, tau, dw), lo, hi)[0]
                            for lo, hi in zip(edges[:-1], edges[1:]))
        observed.append(n - sum(observed))
        expected.append(n - sum(expected))
        _, pvalue = stats.chisquare(observed, expected)
        print(f"chi-square p-value {pvalue:.4f}")
        assert pvalue > 0.001
        hom = draw_batch(SamplerConfig(ModelParams(nu=1.0, delta_omega=0.0), n, seed=7))
        assert np.all(hom.event_class == EventClass.BUNCH)


def _check_mle_efficiency(tmp_path, capsys, extra, ratio_window, bias_limit):
    code = main(["montecarlo", "--out", str(tmp_path), "--nu-list", "1.0", "0.7",
                 "--tau-domega", "0.5", "1", "3", "--n-list", "1000", "--seed", "20241016", *extra])
    print(capsys.readouterr().out)
    assert code == 0
    rows = read_rows(tmp_path / "montecarlo.csv")
    assert len(rows) == 6
    lo, hi = ratio_window
    for r in rows:
        ratio, bias = float(r["var_crb_ratio"]), float(r["bias_fraction"])
        print(f"nu={r['nu']} tau*dw={r['tau_domega']}: ratio {ratio:.3f} bias {bias:+.4f}")
    for r in rows:
        assert lo <= float(r["var_crb_ratio"]) <= hi, r
        assert abs(float(r["bias_fraction"])) < bias_limit, r


@pytest.mark.slow
def test_c09_mle_efficiency_full(criterion, tmp_path, capsys):
    with criterion(9, "MLE variance / CRB in [0.9, 1.2], |bias| < 0.01, N=1e3, 1e4 repetitions"):
        _check_mle_efficiency(tmp_path, capsys, ["--repetitions", "10000"], (0.9, 1.2), 0.01)


def test_c09_mle_efficiency_fast(criterion, tmp_path, capsys):
    with criterion("9 fast", "MLE variance / CRB in [0.85, 1.3], |bias| < 0.02, 1e3 repetitions"):
        _check_mle_efficiency(tmp_path, capsys, ["--fast"], (0.85, 1.3), 0.02)


def test_c10_fisher_curves(criterion, tmp_path, capsys):
    with criterion(10, "Fisher comparison curves: ordering, non-resolving decay, flat nu=1"):
        assert main(["fisher-compare", "--out", str(tmp_path), "--tau", "1.0"]) == 0
        rows = read_rows(tmp_path / "fisher_compare.csv")
        two_tau2 = 2.0
        for r in rows:
            nu, tdw = float(r["nu"]), 1.0 / float(r["inv_tau_domega"])
            res, nr = float(r["fi_resolving"]), float(r["fi_nonresolving"])
            assert res >= nr
            if tdw >= 4.0 and nu <= 0.9:
                assert nr < 0.01 * two_tau2
            if nu == 1.0:
                assert res == two_tau2


def test_c11_precision_magnitude(criterion):
    with criterion(11, "CRLB at tau=100 ns, N=1e3 is 2.24e-4 rad/ns, within 3x of 1e-4"):
        sigma = crlb_sigma(fi_resolving(ModelParams(tau=100.0, nu=1.0, gamma=1.0)), 1000)
        print(f"sigma = {sigma:.6e} rad/ns")
        assert sigma == pytest.approx(2.2360679774997897e-4, rel=1e-12)
        assert 1e-4 / 3 <= sigma <= 3e-4


def test_c12_determinism(criterion, tmp_path, capsys):
    with criterion(12, "montecarlo outputs byte-identical across reruns and 1 vs 8 workers"):
        argv = ["montecarlo", "--nu-list", "1.0", "0.7", "--tau-domega", "1", "3",
                "--n-list", "30", "300", "--repetitions", "200", "--seed", "99"]
        out = tmp_path / "run"
        runs = []
        for workers in ("1", "8", "8"):
            assert main(argv + ["--out", str(out), "--workers", workers]) == 0
            runs.append({p.relative_to(out): p.read_bytes()
                         for p in sorted(out.rglob("*")) if p.is_file() and p.name != "timings.json"})
            shutil.rmtree(out)
        assert len(runs[0]) > 4
        assert runs[0] == runs[1] == runs[2]
