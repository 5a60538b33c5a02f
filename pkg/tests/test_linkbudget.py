import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from jrctoolkit import InvalidArgument, SPEED_OF_LIGHT as C
from jrctoolkit.array import ArrayGeometry, DirectionOfArrival, array_correlation
from jrctoolkit.linkbudget import (
    RateBound, SuppressionParams, dsinc, forward_rate, forward_sinr, gain_factor,
    pairwise_suppression, rate_bits, rate_table, reverse_rate, reverse_sinr, right_angle_targets,
    suppression_factors, write_rates_csv,
)
from jrctoolkit.scenario import Scenario, Target
from jrctoolkit.waveform import FmcwCarrier, make_envelope


def _scn(targets=(), L=1, N=512):
    env = make_envelope("gaussian", 100e-6, 4e6)
    return Scenario(FmcwCarrier(24e9 - 50e6, 100e6, 100e-6), env, ArrayGeometry.ula(L, 0.0078),
                    targets, num_pulses=N, tx_power=1.0)


def test_dsinc_limit_and_zeros():
    n = 64
    assert dsinc(0.0, n) == 1.0
    for k in (1, 5, 63, 65, -3):
        assert dsinc(k / n, n) <= 1e-12
    assert dsinc(2.0, n) == 1.0


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 512), st.floats(-3.0, 3.0))
def test_dsinc_matches_exponential_sum(n, d):
    ref = abs(np.exp(2j * np.pi * np.arange(n) * d).sum()) / n
    assert dsinc(d, n) == pytest.approx(ref, abs=1e-9)
    assert 0 <= dsinc(d, n) <= 1


def test_dsinc_half_bin_oracle():
    n = 32
    d = 1 / (2 * n)
    assert dsinc(d, n) == pytest.approx(abs(np.exp(2j * np.pi * np.arange(n) * d).sum()) / n, abs=1e-12)


def test_suppression_no_separation_and_zero():
    p = SuppressionParams()
    g = ArrayGeometry.ula(12, 0.0078)
    assert pairwise_suppression(p, g, 24e9) == 1.0
    # one range bin: floor(dn) = 1 -> Dirichlet kernel zero
    dr = C * p.F_r * p.chirp_duration / (2 * p.bandwidth * p.N_range_fft)
    assert pairwise_suppression(p, g, 24e9, delta_r=1.0001 * dr) <= 1e-12
    # sub-bin separations floor to zero and are not suppressed
    assert pairwise_suppression(p, g, 24e9, delta_r=0.5 * dr) == 1.0
    soft = SuppressionParams(floor=False)
    assert 0 < pairwise_suppression(soft, g, 24e9, delta_r=0.5 * dr) < 1


@settings(max_examples=40, deadline=None)
@given(st.floats(0, 50), st.floats(0, 20), st.floats(0, np.pi / 2), st.booleans())
def test_suppression_in_unit_interval(dr, dv, dth, floor):
    p = SuppressionParams(floor=floor)
    b = pairwise_suppression(p, ArrayGeometry.ula(12, 0.0078), 24e9, dr, dv, dth)
    assert 0 <= b <= 1


def test_suppression_components_two_target(two_target):
    p = SuppressionParams.from_scenario(two_target)
    t0, t1 = two_target.targets
    dr, dv = abs(t0.range - t1.range), abs(t0.velocity - t1.velocity)
    dth = abs(t0.azimuth - t1.azimuth)
    dn = np.floor(2 * dr * p.bandwidth * p.N_range_fft / (C * p.F_r * p.chirp_duration))
    dk = np.floor(2 * dv * two_target.f_c / C * p.N_doppler_fft / p.F_d)
    g = two_target.geometry
    s_a = array_correlation(g, DirectionOfArrival(g.boresight), DirectionOfArrival(g.boresight + dth), two_target.f_c)
    ref = dsinc(dn / p.N_range_fft, p.N_range_fft) * dsinc(dk / p.N_doppler_fft, p.N_doppler_fft) * s_a
    assert pairwise_suppression(p, g, two_target.f_c, dr, dv, dth) == pytest.approx(ref, abs=1e-15)
    assert suppression_factors(p, dr, dv, dth, g, two_target.f_c)[2] == pytest.approx(s_a)


def test_forward_sinr_collapse_and_jammer():
    r, kA = 20.0, 0.7
    t = Target(range=r, kappa=0.5, area=1.4, rx_noise_variance=1e-3)
    s = _scn([t])
    rho = s.tx_power / t.rx_noise_variance
    expect = rho * kA / (4 * np.pi * r**2)
    assert forward_sinr(s, 0) == pytest.approx(expect, rel=1e-12)
    jam = _scn([Target(range=r, jammer_variance=np.inf)])
    assert forward_sinr(jam, 0) == 0.0
    sinrs = [forward_sinr(_scn([Target(range=r, jammer_variance=j)]), 0) for j in (0, 1, 10, 100)]
    assert np.all(np.diff(sinrs) < 0)


def test_rate_values():
    assert rate_bits(0.0, 512) == 0.0
    assert rate_bits(1.0, 512) == 256.0
    assert rate_bits(3.0, 10) == pytest.approx(10.0)
    with pytest.raises(InvalidArgument):
        rate_bits(-1.0, 4)
    with pytest.raises(InvalidArgument):
        RateBound(0, "sideways", 1.0, 1.0, 1)


def test_reverse_below_forward_far_target():
    t1, t2 = right_angle_targets(40.0, 5.0, rx_noise_variance=1e-10)
    s = _scn([t1, t2]).replace(noise_variance=1e-10)
    assert reverse_rate(s, 1).rate_bits < forward_rate(s, 1).rate_bits


def test_right_angle_layout():
    t1, t2 = right_angle_targets(30.0, 4.0)
    assert t1.azimuth == np.pi / 2
    assert t2.range == pytest.approx(np.hypot(30, 4))
    # right angle at target 1: both legs meet orthogonally
    p1 = t1.range * np.array([np.cos(t1.azimuth), np.sin(t1.azimuth)])
    p2 = t2.range * np.array([np.cos(t2.azimuth), np.sin(t2.azimuth)])
    assert np.dot(p1, p2 - p1) == pytest.approx(0, abs=1e-9)
    assert np.linalg.norm(p2 - p1) == pytest.approx(4.0)


def test_gain_factor_flat_is_one():
    env = make_envelope("gaussian", 100e-6, 4e6, beta=5.89e-6)
    assert gain_factor(env, 0.0) == pytest.approx(1.0, abs=1e-12)
    f = np.linspace(-2e6, 2e6, 11)
    assert gain_factor(env, 0.0, response=(f, np.ones_like(f))) == pytest.approx(1.0, abs=1e-6)
    assert gain_factor(env, 0.0, response=(f, 0.5 * np.ones_like(f))) == pytest.approx(0.25, abs=1e-6)


def test_reverse_sinr_monotone_in_interference():
    t1, t2 = right_angle_targets(30.0, 0.01)
    s = _scn([t1, t2]).replace(noise_variance=1e-9)
    alone = reverse_sinr(s.with_targets([t1]), 0)
    assert reverse_sinr(s, 0) < alone


def test_rate_table_shapes_and_csv(tmp_path):
    s = _scn()
    rows = rate_table(s, np.arange(5.0, 101.0), 5.0, rho_T_db=100.0)
    assert len(rows) == 2 * 96
    write_rates_csv(rows, tmp_path / "r.csv")
    head = (tmp_path / "r.csv").read_text().splitlines()[0]
    assert head == "range_m,target,forward_bits,reverse_bits,sinr_fwd_db,sinr_rev_db"
