import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from jrctoolkit import InvalidArgument, SPEED_OF_LIGHT as C
from jrctoolkit.array import (
    ArrayGeometry, DirectionOfArrival, EigenBeamformer, array_correlation, beam_covariance,
    beam_pattern, design_beamformer, element_delays, peak_sidelobe_db, read_geometry_csv,
    steering_matrix, steering_vector, write_geometry_csv,
)

F = 24e9
LAM = C / F


def test_broadside_and_single_element_delays():
    g = ArrayGeometry.ula(8, LAM / 2)
    assert np.allclose(element_delays(g, DirectionOfArrival(np.pi / 2)), 0, atol=1e-25)
    one = ArrayGeometry(np.zeros((1, 3)))
    assert element_delays(one, DirectionOfArrival(0.3, 0.2))[0] == 0


def test_delays_dot_product_oracle():
    g = ArrayGeometry.ula(16, LAM / 2)
    doa = DirectionOfArrival(0.0, np.pi / 4)
    ref = [g.positions[l, 0] * np.cos(np.pi / 4) / C for l in range(16)]
    assert np.allclose(element_delays(g, doa), ref, rtol=1e-14, atol=0)


def test_steering_norm_and_ones():
    g = ArrayGeometry.uca(7, 0.02)
    a = steering_vector(g, DirectionOfArrival(0.4), F)
    assert np.vdot(a, a).real == pytest.approx(7, abs=1e-12)
    ula = ArrayGeometry.ula(5, 0.01)
    assert np.allclose(steering_vector(ula, DirectionOfArrival(np.pi / 2), F), 1)


def test_ula_dirichlet_closed_form():
    L = 12
    g = ArrayGeometry.ula(L, LAM / 2, boresight=0.0)
    # azimuth measured from the array axis: phi = 90 deg is broadside
    a0 = steering_vector(g, DirectionOfArrival(np.pi / 2), F)
    a1 = steering_vector(g, DirectionOfArrival(np.pi / 2 - np.pi / 6), F)
    psi = np.pi * np.sin(np.pi / 6)
    ref = abs(np.sin(L * psi / 2) / np.sin(psi / 2)) / L
    assert abs(np.vdot(a0, a1)) / L == pytest.approx(ref, abs=1e-10)


def test_correlation_null_and_unity():
    L = 16
    g = ArrayGeometry.ula(L, LAM / 2)
    d = DirectionOfArrival(np.pi / 2)
    assert array_correlation(g, d, d, F) == pytest.approx(1.0)
    # first null: cos(phi) = 2/L for half-wavelength spacing
    null = DirectionOfArrival(np.arccos(2 / L))
    assert array_correlation(g, d, null, F) < 1e-10


def test_uca_higher_out_of_beam_correlation():
    L = 16
    ula, uca = ArrayGeometry.ula(L, LAM / 2), ArrayGeometry.uca(L, 4 * LAM)
    phis = np.deg2rad(np.linspace(-60, 60, 1201))
    out = np.abs(phis) > np.arcsin(2 / L)

    def mean_corr(g):
        A = steering_matrix(g, g.boresight + phis, F)
        a0 = steering_matrix(g, g.boresight, F)[:, 0]
        return (np.abs(a0.conj() @ A) / L)[out].mean()

    assert mean_corr(uca) > mean_corr(ula)


@settings(max_examples=25, deadline=None)
@given(st.floats(-np.pi, np.pi), st.floats(-1.0, 1.0), st.floats(-1.0, 1.0))
def test_rotation_invariance(dphi, az1, az2):
    g = ArrayGeometry.uca(6, 0.03)
    d1, d2 = DirectionOfArrival(az1), DirectionOfArrival(az2)
    r1, r2 = DirectionOfArrival(az1 + dphi), DirectionOfArrival(az2 + dphi)
    assert array_correlation(g, d1, d2, F) == pytest.approx(
        array_correlation(g.rotated(dphi), r1, r2, F), abs=1e-10)


def test_delays_linear_in_positions():
    g = ArrayGeometry.uca(5, 0.02)
    s = 3.7
    g2 = ArrayGeometry(g.positions * s)
    d = DirectionOfArrival(0.7, 0.1)
    assert np.allclose(element_delays(g2, d), s * element_delays(g, d), rtol=1e-13, atol=1e-25)


def test_covariance_hermitian_psd_and_trace():
    g = ArrayGeometry.ula(12, LAM / 2)
    Q = beam_covariance(g, (np.deg2rad(-50), np.deg2rad(48)), F, nodes=1441)
    tr = np.trace(Q).real
    assert np.abs(Q - Q.conj().T).max() <= 1e-10 * tr / 12
    ev = np.linalg.eigvalsh(Q)
    assert ev.min() >= -1e-10 * tr
    assert ev.sum() == pytest.approx(tr, rel=1e-8)


def test_degenerate_fov_rank_one():
    g = ArrayGeometry.ula(6, LAM / 2)
    th = np.deg2rad(20)
    bank = design_beamformer(g, (th, th), M=1, taper="none")
    a = steering_matrix(g, g.boresight + th, F)[:, 0] / np.sqrt(6)
    assert abs(abs(np.vdot(bank.raw[0], a)) - 1) < 1e-10
    assert np.sum(bank.eigenvalues > 1e-9 * bank.eigenvalues[0]) == 1


def test_orthogonal_beams_and_sidelobes():
    g = ArrayGeometry.ula(12, LAM / 2)
    for w in ("uniform", "beam_grid"):
        raw = EigenBeamformer(g, weight=w).fit().bank_.raw
        assert np.abs(raw.conj() @ raw.T - np.eye(8)).max() <= 1e-10
    bank = EigenBeamformer(g, weight="beam_grid").fit().bank_
    P = beam_pattern(bank.weights, g, np.deg2rad(np.linspace(-90, 90, 7201)), F)
    assert max(peak_sidelobe_db(p) for p in P) <= -30


def test_deterministic_design():
    g = ArrayGeometry.ula(12, LAM / 2)
    a = design_beamformer(g).weights
    b = design_beamformer(g).weights
    assert np.array_equal(a, b)


def test_transform_shape_and_checks():
    g = ArrayGeometry.ula(4, LAM / 2)
    est = EigenBeamformer(g, n_beams=2).fit()
    X = np.ones((3, 4), dtype=complex)
    assert est.transform(X).shape == (3, 2)
    with pytest.raises(InvalidArgument):
        est.transform(np.ones((3, 5)))
    with pytest.raises(InvalidArgument):
        design_beamformer(g, M=5)


def test_geometry_validation_and_csv(tmp_path):
    with pytest.raises(InvalidArgument):
        ArrayGeometry(np.array([[0, 0, 0], [1, 0, 0], [3, 0, 0]]), kind="ula")
    with pytest.raises(InvalidArgument):
        DirectionOfArrival(0.0, 2.0)
    g = ArrayGeometry.ula(4, 0.01)
    write_geometry_csv(g, tmp_path / "g.csv")
    assert np.array_equal(read_geometry_csv(tmp_path / "g.csv").positions, g.positions)
