"""End-to-end acceptance checks, each at its stated tolerance.

Every test prints (and reports in the terminal summary) one PASS/FAIL line.
Sweeps use 200 Monte Carlo runs per point.
"""
import math
import subprocess
import sys
from functools import lru_cache
from pathlib import Path

import numpy as np
import pytest

from fdscdc import cancellation as canc
from fdscdc import harness as hs
from fdscdc.channel import ChannelParams, draw_initial, jakes_rho
from fdscdc.estimation import acquire_csi, compute_mse, make_training
from fdscdc.precoder import design
from tests.acceptance_report import record

RUNS = 200
SEED = 2024
P_GRID = '10, 15, 20, 25, 30, 35, 40'
FD_GRID = ', '.join(str(v) for v in range(0, 261, 20))


@lru_cache(maxsize=None)
def sweep(*overrides):
    cfg = hs.load_config('', [f'runs={RUNS}', f'seed={SEED}', *overrides])
    table = {}
    for r in hs.run_sweep(cfg).rows:
        table[r.sweep_value, r.scheme] = r
    return table


def fig3():
    return sweep(f'values={P_GRID}')


def test_criterion_1_mse_formula():
    got = compute_mse(1.0, 1e-10, 0.0, 1e-10, 400)
    err = abs(got - 1 / 401) / (1 / 401)
    ok = record(1, err <= 1e-12, f"compute_mse={got:.10e}, rel err {err:.1e}")
    assert ok


def test_criterion_2_estimator_consistency():
    rng = np.random.default_rng(SEED)
    p = ChannelParams()
    rho = jakes_rho(p.f_d, p.T_c)
    tr = make_training(p.k_users, 400, 10.0)
    se, tau = 0.0, None
    n = 2000
    for _ in range(n):
        H = draw_initial(p, rng).H
        rep = acquire_csi(H, tr, rng, rho=rho, l_K=p.l_K, sigma_b_sq=1e-10)
        se += np.mean(np.abs(H - rep.H_hat) ** 2)
        tau = rep.tau_dl_sq
    emp = se / n / p.l_K
    rel = abs(emp - tau) / tau
    ok = record(2, rel <= 0.05, f"empirical {emp:.5e} vs analytic "
                f"{tau:.5e} (rel {rel:.3f}, tol 0.05)")
    assert ok


def test_criterion_3_fig3_trend():
    t = fig3()
    close = []
    for p in (10.0, 15.0, 20.0, 25.0, 30.0):
        s, i = t[p, 'scdc-64'].mean_rate, t[p, 'ideal'].mean_rate
        close.append((p, abs(s - i) / i))
    dom = []
    for p in (10.0, 15.0, 20.0, 25.0, 30.0, 35.0, 40.0):
        s = t[p, 'scdc-64'].mean_rate
        for other in ('scdc-32', 'scdc-8', 'sbfd', 'hd'):
            if t[p, other].mean_rate > s:
                dom.append(f"{other}@{p:g}dBm {t[p, other].mean_rate:.2f}"
                           f">{s:.2f}")
    worst = max(close, key=lambda c: c[1])
    ok_close = worst[1] <= 0.10
    detail = (f"max |SCDC64-IDEAL|/IDEAL at <=30 dBm = {worst[1]:.3f} "
              f"(at {worst[0]:g} dBm); dominance violations: "
              f"{', '.join(dom) if dom else 'none'}")
    ok = record(3, ok_close and not dom, detail)
    assert ok


def test_criterion_4_fig3_ratio():
    t = fig3()
    ratio = t[40.0, 'scdc-32'].mean_rate / t[40.0, 'sbfd'].mean_rate
    ok = record(4, 1.05 <= ratio <= 1.5, f"SCDC32/SBFD at 40 dBm = "
                f"{ratio:.3f} (band [1.05, 1.5])")
    assert ok


def _margin(t, p, a, b):
    ra, rb = t[p, a], t[p, b]
    return (ra.mean_rate - rb.mean_rate) / math.hypot(ra.std_error,
                                                       rb.std_error)


def test_criterion_5_fig3_crossover():
    t = fig3()
    hi = _margin(t, 40.0, 'scdc-8', 'sbfd')
    lo = _margin(t, 20.0, 'scdc-8', 'sbfd')
    ok = record(5, hi > 2 and lo < -2,
                f"(SCDC8-SBFD)/SE_comb: {hi:+.2f} at 40 dBm (need > 2), "
                f"{lo:+.2f} at 20 dBm (need < -2); means 40 dBm "
                f"{t[40.0, 'scdc-8'].mean_rate:.2f} vs "
                f"{t[40.0, 'sbfd'].mean_rate:.2f}")
    assert ok


def test_criterion_6_fig4_trend():
    t = sweep('variable=K', 'values=2, 3, 4, 5, 6', 'schemes=scdc-32, sbfd')
    bad = [(k, t[k, 'scdc-32'].mean_rate, t[k, 'sbfd'].mean_rate)
           for k in (2.0, 3.0, 4.0, 5.0, 6.0)
           if not t[k, 'scdc-32'].mean_rate > t[k, 'sbfd'].mean_rate]
    pairs = ', '.join(f"K={k:g}: {t[k, 'scdc-32'].mean_rate:.2f}/"
                      f"{t[k, 'sbfd'].mean_rate:.2f}"
                      for k in (2.0, 3.0, 4.0, 5.0, 6.0))
    ok = record(6, not bad, f"SCDC32/SBFD means {pairs}")
    assert ok


def test_criterion_7_fig5_trend():
    t = sweep('variable=f_d', f'values={FD_GRID}',
              'schemes=scdc-64, scdc-32, scdc-8, sbfd, hd')
    fds = [float(v) for v in range(0, 261, 20)]
    problems = []
    for s in ('scdc-64', 'scdc-32', 'scdc-8'):
        for a, b in zip(fds, fds[1:]):
            ra, rb = t[a, s], t[b, s]
            if rb.mean_rate > ra.mean_rate + max(ra.std_error, rb.std_error):
                problems.append(f"{s} rises {a:g}->{b:g} Hz")
    for s in ('sbfd', 'hd'):
        means = [t[f, s].mean_rate for f in fds]
        se = max(t[f, s].std_error for f in fds)
        if max(means) - min(means) >= 3 * se:
            problems.append(f"{s} spread {max(means) - min(means):.3f} "
                            f">= 3 SE ({3 * se:.3f})")
    for s in ('scdc-64', 'scdc-32'):
        if not t[220.0, s].mean_rate > t[220.0, 'sbfd'].mean_rate:
            problems.append(f"{s} <= sbfd at 220 Hz")
    detail = (f"at 220 Hz SCDC64/32/8 = {t[220.0, 'scdc-64'].mean_rate:.2f}/"
              f"{t[220.0, 'scdc-32'].mean_rate:.2f}/"
              f"{t[220.0, 'scdc-8'].mean_rate:.2f}, SBFD "
              f"{t[220.0, 'sbfd'].mean_rate:.2f}; "
              f"{'; '.join(problems) if problems else 'no violations'}")
    ok = record(7, not problems, detail)
    assert ok


def test_criterion_8_constraint_audit():
    rng = np.random.default_rng(SEED)
    p = ChannelParams()
    P_b, P_k, lam = 1e4, 10.0, 1e-5
    q = canc.QuantizerSpec()
    designs = violations = attempts = 0
    while designs < 1000:
        cs = draw_initial(p, rng)
        N = (8, 32, 64)[attempts % 3]
        attempts += 1
        d, state = design(cs.H / math.sqrt(p.l_K), cs.H_bb, cs.H_KK, N, P_b,
                          P_k, lam, lam, q=q)
        if not d.feasible:
            continue
        designs += 1
        # recompute from the raw matrices, row by row
        R = cs.H_bb + state.C_b
        for j in range(p.n_b):
            if P_b * float(np.vdot(R[j] @ d.V_b, R[j] @ d.V_b).real) > lam:
                violations += 1
        ue = np.diag(cs.H_KK) + np.diag(state.C_K)
        violations += int(np.sum(P_k * np.abs(ue) ** 2 > lam))
    ok = record(8, violations == 0, f"{designs} successful designs out of "
                f"{attempts} attempts, {violations} violations")
    assert ok


def test_criterion_9_property_suite():
    # matched-seed ordering at 40 dBm
    cfg = hs.load_config('', ['P_b_dBm=40'])
    specs = [hs.SchemeSpec.parse(s) for s in ('ideal', 'scdc-64', 'scdc-32',
                                              'scdc-8')]
    ordered = 0
    for t in range(RUNS):
        r = []
        for spec in specs:
            out = hs.trial_outcome(cfg, spec, SEED, t)
            r.append(out.rate_bits_per_use if out.feasible else 0.0)
        ordered += all(a >= b for a, b in zip(r, r[1:]))
    frac = ordered / RUNS
    # the rest of the property suite: every unit/property module
    root = Path(__file__).resolve().parent
    mods = sorted(str(p) for p in root.glob('test_*.py')
                  if p.name != 'test_acceptance.py')
    proc = subprocess.run([sys.executable, '-m', 'pytest', '-q', '-p',
                           'no:cacheprovider', *mods], capture_output=True,
                          text=True, cwd=root.parent)
    summary = proc.stdout.strip().splitlines()[-1] if proc.stdout else ''
    ok = record(9, frac >= 0.9 and proc.returncode == 0,
                f"ordering IDEAL>=SCDC64>=SCDC32>=SCDC8 in {frac:.1%} of "
                f"trials (need >= 90%); property suite: {summary}")
    assert ok
