"""Quick built-in checks of the closed-form cases of every module.

Run through ``fdscdc selftest``; each check is a zero-argument callable that
raises AssertionError on failure.
"""
import math

import numpy as np

from . import cancellation as canc
from . import channel, estimation, harness, link, numerics, precoder

__all__ = ['CHECKS', 'run_checks']


def _close(a, b, tol=1e-12):
    assert np.allclose(a, b, rtol=tol, atol=tol), f"{a!r} != {b!r}"


def _numerics():
    s = numerics.svd(np.eye(3))[1]
    _close(s, [1, 1, 1])
    _close(numerics.svd(np.diag([3.0, 2.0, 1.0]))[1], [3, 2, 1])
    B = np.arange(6.0).reshape(3, 2)
    _close(numerics.hermitian_solve(np.eye(3), B), B)
    _close(numerics.hermitian_solve(2 * np.eye(4), np.eye(4)), 0.5 * np.eye(4))
    _close(numerics.log_det_hermitian(np.eye(4)), 0.0)
    _close(numerics.log_det_hermitian(2 * np.eye(3)), 3.0)
    _close(numerics.bessel_j0(0.0), 1.0)
    _close(numerics.dbm_to_mw(10), 10.0)
    _close(numerics.dbm_to_mw(-100), 1e-10)
    _close(numerics.db_to_linear(-110), 1e-11)


def _channel():
    p = channel.ChannelParams(k_users=1)
    cs = channel.draw_initial(p, np.random.default_rng(0))
    assert cs.H_IN.shape == (1, 1) and cs.H_IN[0, 0] == 0
    a = channel.draw_initial(channel.ChannelParams(), np.random.default_rng(3))
    b = channel.draw_initial(channel.ChannelParams(), np.random.default_rng(3))
    assert np.array_equal(a.H, b.H) and np.array_equal(a.H_bb, b.H_bb)
    assert channel.jakes_rho(0.0, 1e-3) == 1.0
    nxt = channel.evolve(a, 1.0, channel.ChannelParams(),
                         np.random.default_rng(1))
    assert np.array_equal(nxt.H, a.H)


def _cancellation():
    H = channel.draw_rician(8, 8, 1e3, 1e-4, np.random.default_rng(0))
    assert canc.select_taps(H, 64) == {(i, j) for i in range(8)
                                       for j in range(8)}
    assert canc.quantize_tap(0, canc.QuantizerSpec()) == 0
    C, _ = canc.build_analog_canceller(H, 64)
    _close(H + C, 0)
    C, taps = canc.build_analog_canceller(H, 0)
    assert not np.any(C) and not taps
    d = np.diag([0.3 + 0.1j, -0.2j])
    C_K, D_K = canc.build_ue_cancellers(d)
    _close(C_K, -d)
    assert not np.any(D_K)
    _close(canc.build_digital_canceller_bs(H, -H), 0)
    _close(canc.build_digital_canceller_bs(H, np.zeros_like(H)), -H)
    V = np.ones((8, 4)) / math.sqrt(32)
    assert not np.any(canc.per_chain_residual_powers(np.zeros((8, 8)), V, 1))
    assert not np.any(canc.per_chain_residual_powers(H, 0 * V, 1))


def _estimation():
    S = estimation.make_training(2, 4, 1.0).S_K
    _close(S @ S.conj().T, 4 * np.eye(2))
    S = estimation.make_training(1, 10, 2.0).S_K
    _close(np.sum(np.abs(S) ** 2), 20.0)
    assert estimation.compute_mse(0.0, 1e-10, 0.0, 1e-10, 400) == 1.0
    tr = estimation.make_training(4, 400, 10.0)
    H = channel.draw_initial(channel.ChannelParams(),
                             np.random.default_rng(0)).H
    Y = estimation.receive_training(H, tr, np.random.default_rng(1))
    _close(Y, H.T @ tr.S_K)
    _close(estimation.mmse_estimate(Y, tr, 0.0, 1e-10, 0.0, 1e-10), 0)
    assert estimation.residual_si_power(np.zeros((8, 8)),
                                        np.ones((8, 1)), 1e4) == 0


def _precoder():
    _close(precoder.zf_precoder(np.eye(4)), 0.5 * np.eye(4))
    M = np.array([[1.0, 0], [3.0, 0], [2.0, 0]])
    _, perm = precoder.sort_rows_desc(M)
    assert list(perm + 1) == [2, 3, 1]
    _, perm = precoder.sort_rows_desc(M[[1, 2, 0]])
    assert list(perm) == [0, 1, 2]


def _link():
    Z = np.zeros((4, 4))
    Sigma = link.interference_covariance(Z, Z, 10.0, 0.0, 1e4, 1e-11, None,
                                         1e-10)
    _close(Sigma, 1e-10 * np.eye(4))
    assert link.downlink_rate(np.ones((1, 1)), np.ones((1, 1)), 1.0, 1.0,
                              np.eye(1)) == 0.0
    sp = link.SchemeParams()
    assert sp.training_symbols == 40


def _harness():
    cfg = harness.load_config('')
    assert cfg == harness.ScenarioConfig()
    try:
        harness.load_config('[run]\nruns = 0\n')
    except harness.ConfigError as exc:
        assert 'runs' in str(exc)
    else:
        raise AssertionError("runs = 0 accepted")
    one = harness.load_config('', ['runs=1', 'values=40', 'schemes=ideal'])
    spec = harness.SchemeSpec.parse('ideal')
    mean, _, _ = harness.run_point(one.at(40.0), spec, one.seed)
    out = harness.trial_outcome(one.at(40.0), spec, one.seed, 0)
    assert mean == out.rate_bits_per_use


CHECKS = [('numerics', _numerics), ('channel', _channel),
          ('cancellation', _cancellation), ('estimation', _estimation),
          ('precoder', _precoder), ('link', _link), ('harness', _harness)]


def run_checks(stream):
    """Run every check, print one line each; returns the failure count."""
    failed = 0
    for name, fn in CHECKS:
        try:
            fn()
        except Exception as exc:  # report and keep going
            failed += 1
            print(f"FAIL {name}: {type(exc).__name__}: {exc}", file=stream)
        else:
            print(f"PASS {name}", file=stream)
    return failed
