import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import cubic_eigenvalues, spin_hamiltonian
from vbsense.errors import BelowZeroFieldSplitting
from vbsense.spin import (MagneticField, ZfsSpinParams, field_from_splitting, hamiltonian_matrix,
                          resonance_frequencies_axial, resonance_frequencies_general)

P = ZfsSpinParams()


def test_axial_zero_field_matrix():
    h = hamiltonian_matrix(ZfsSpinParams(3.47e9, 0.0), MagneticField())
    np.testing.assert_allclose(h, np.diag([3.47e9, 0.0, 3.47e9]), atol=1e-6)


def test_zero_field_eigenvalues():
    vals = np.linalg.eigvalsh(hamiltonian_matrix(P, MagneticField()))
    np.testing.assert_allclose(vals, [0.0, 3.42e9, 3.52e9], atol=1e-3)


def test_matches_elementwise_hamiltonian():
    b = (1e-3, -2e-3, 4e-3)
    np.testing.assert_allclose(hamiltonian_matrix(P, MagneticField(*b)),
                               spin_hamiltonian(P.d_gs, P.e_gs, b), rtol=0, atol=1e-3)


@settings(max_examples=50, deadline=None)
@given(st.tuples(*[st.floats(-0.2, 0.2)] * 3))
def test_hermitian(b):
    h = hamiltonian_matrix(P, MagneticField(*b))
    np.testing.assert_allclose(h, h.conj().T, rtol=0, atol=0)
    assert np.trace(h).real == pytest.approx(2 * P.d_gs, rel=1e-12)


def test_axial_examples():
    assert resonance_frequencies_axial(P, 5.9e-3).splitting == pytest.approx(345.2e6, abs=2e6)
    assert resonance_frequencies_axial(P, 9.8e-3).splitting == pytest.approx(557.8e6, abs=2e6)
    pair = resonance_frequencies_axial(P, 0.0)
    assert (pair.nu1, pair.nu2) == pytest.approx((3.42e9, 3.52e9))


def test_transverse_field_against_cubic_roots():
    b = (5e-3, 0.0, 0.0)
    roots = cubic_eigenvalues(spin_hamiltonian(P.d_gs, P.e_gs, b))
    pair = resonance_frequencies_general(P, MagneticField(*b))
    # at 5 mT transverse the |0>-like level is the lowest one
    expected = np.sort(roots[1:] - roots[0])
    np.testing.assert_allclose([pair.nu1, pair.nu2], expected, rtol=1e-10)


def test_general_matches_axial_on_random_fields():
    rng = np.random.default_rng(3)
    for bz in rng.uniform(-0.1, 0.1, 1000):
        a = resonance_frequencies_axial(P, bz)
        g = resonance_frequencies_general(P, MagneticField(0, 0, bz))
        np.testing.assert_allclose([g.nu1, g.nu2], [a.nu1, a.nu2], rtol=1e-10)


def test_general_zero_field():
    g = resonance_frequencies_general(P, MagneticField())
    assert (g.nu1, g.nu2) == pytest.approx((3.42e9, 3.52e9), rel=1e-12)


# The splitting is quadratic in B at zero field, so float64 cannot resolve
# fields below about 2 E sqrt(eps) / gamma; that floor is the absolute tolerance.
FIELD_FLOOR_T = 2 * P.e_gs * np.sqrt(np.finfo(float).eps) / P.gamma


@settings(max_examples=300, deadline=None)
@given(st.floats(0.0, 0.1))
def test_round_trip_and_center(bz):
    pair = resonance_frequencies_axial(P, bz)
    assert pair.nu1 + pair.nu2 == pytest.approx(2 * P.d_gs, rel=1e-12)
    assert pair.nu1 < pair.nu2
    assert field_from_splitting(P, pair.splitting) == pytest.approx(bz, rel=1e-9, abs=FIELD_FLOOR_T)


def test_round_trip_grid_relative():
    for bz in np.linspace(1e-4, 0.1, 1000):
        b = field_from_splitting(P, resonance_frequencies_axial(P, bz).splitting)
        assert b == pytest.approx(bz, rel=1e-9)


def test_splitting_monotone_in_field():
    b = np.linspace(0, 0.1, 2001)
    s = np.array([resonance_frequencies_axial(P, x).splitting for x in b])
    assert np.all(np.diff(s) > 0)
    s_neg = np.array([resonance_frequencies_axial(P, -x).splitting for x in b])
    np.testing.assert_array_equal(s, s_neg)


def test_field_from_splitting_examples():
    b = field_from_splitting(P, 560e6)
    assert b == pytest.approx(9.84e-3, abs=0.01e-3)
    assert resonance_frequencies_axial(P, b).splitting == pytest.approx(560e6, rel=1e-12)
    assert field_from_splitting(P, 100e6) == 0.0
    with pytest.raises(BelowZeroFieldSplitting):
        field_from_splitting(P, 99e6)


def test_parameter_validation():
    with pytest.raises(ValueError):
        ZfsSpinParams(d_gs=-1.0)
    with pytest.raises(ValueError):
        ZfsSpinParams(e_gs=4e9)
    with pytest.raises(ValueError):
        MagneticField(np.nan, 0, 0)
