"""Identities behind the rational step functions and their pole/weight data.

The rational forms (numerator over denominator) serve as the independent
side of every check; the package only ever evaluates the partial-fraction
side through shifted solves.
"""

import mpmath
import numpy as np
import pytest

from etdsplit.steppers import PADE, SMOOTHER


def _r22(z):
    return (12 - 6 * z + z ** 2) / (12 + 6 * z + z ** 2)


def _r22_half(z):
    return (48 - 12 * z + z ** 2) / (48 + 12 * z + z ** 2)


def _p1_over_k(z):
    return (2 - z) / (12 + 6 * z + z ** 2)


def _p2_over_k(z):
    return 2 / (12 + 6 * z + z ** 2)


def _p3_over_k(z):
    return (2 + z) / (12 + 6 * z + z ** 2)


def _ptil_over_k(z):
    return 24 / (48 + 12 * z + z ** 2)


_REAL_Z = np.linspace(0.0, 10.0, 200)


def test_pade_poles_and_weights_recomputed():
    # poles: upper-half-plane roots of the denominators
    c1 = np.roots([1, 6, 12])
    c1 = c1[c1.imag > 0][0]
    c2 = np.roots([1, 12, 48])
    c2 = c2[c2.imag > 0][0]
    assert abs(c1 - PADE.c1) < 1e-13
    assert abs(c2 - PADE.c2) < 1e-13
    assert abs(PADE.c2 - 2 * PADE.c1) < 1e-13
    # weights: residues at c1/c2 of the partial-fraction numerators
    conj = np.conj
    assert abs(PADE.w11 - (-12 * c1) / (c1 - conj(c1))) < 1e-12
    assert abs(PADE.w21 - (2 - c1) / (c1 - conj(c1))) < 1e-13
    assert abs(2 * PADE.w31 - 2 / (c1 - conj(c1))) < 1e-14
    assert abs(PADE.w41 - (2 + c1) / (c1 - conj(c1))) < 1e-13
    assert abs(24 * PADE.w51 - 24 / (c2 - conj(c2))) < 1e-13


@pytest.mark.parametrize("rational,pf", [
    (_r22, lambda z: 1 + 2 * (PADE.w11 / (z - PADE.c1)).real),
    (_r22_half, lambda z: 1 + 4 * (PADE.w11 / (z - PADE.c2)).real),
    (_p1_over_k, lambda z: 2 * (PADE.w21 / (z - PADE.c1)).real),
    (_p2_over_k, lambda z: 4 * (PADE.w31 / (z - PADE.c1)).real),
    (_p3_over_k, lambda z: 2 * (PADE.w41 / (z - PADE.c1)).real),
    (_ptil_over_k, lambda z: 48 * (PADE.w51 / (z - PADE.c2)).real),
])
def test_partial_fraction_identities(rational, pf):
    for z in _REAL_Z:
        assert abs(rational(z) - pf(z)) <= 1e-12


def test_pade22_is_order_four():
    # |R(z) - exp(-z)| = O(z^5): the scaled gap stays bounded on (0, 1] and
    # the halving ratio approaches 32 from below (20.3 at z=1, 30.1 at 1/8,
    # 31.97 at 1/512 -- values from this 50-digit oracle), landing within
    # 10% of 32 for z <= 1/8.  Doubles cancel catastrophically here.
    mpmath.mp.dps = 50

    def gap(z):
        z = mpmath.mpf(z)
        r = (12 - 6 * z + z ** 2) / (12 + 6 * z + z ** 2)
        return abs(r - mpmath.e ** (-z))

    z = 1.0
    last = None
    while z > 1e-3:
        # leading term is z^5/720: scaled gap bounded by it on the interval
        assert float(gap(z)) <= 1.2 * z ** 5 / 720.0
        ratio = float(gap(z) / gap(z / 2))
        if z <= 0.126:
            assert 32.0 * 0.9 <= ratio <= 32.0 * 1.1, f"z={z}: ratio {ratio}"
        if last is not None:
            assert last < ratio < 32.0  # monotone approach to 32
        last = ratio
        z /= 2
    assert float(gap(1e-3) / 1e-3 ** 5) == pytest.approx(1.0 / 720.0, rel=1e-2)


def test_pade22_a_acceptability():
    rng = np.random.default_rng(123)
    zs = rng.uniform(0, 50, size=200) + 1j * rng.uniform(-50, 50, size=200)
    for z in zs:
        assert abs(_r22(z)) <= 1.0 + 1e-12
    # no damping at infinity (|R| -> 1), which is why presmoothing exists
    assert abs(_r22(1e9)) == pytest.approx(1.0, abs=1e-7)


# ---- third-order smoother constants ----

_E_POLY = (1.0, 3.0, 6.0, 6.0)    # full-step denominator z^3+3z^2+6z+6
_F_POLY = (1.0, 6.0, 24.0, 48.0)  # half-step denominator z^3+6z^2+24z+48


def _polyval(coeffs, z):
    out = 0.0
    for c in coeffs:
        out = out * z + c
    return out


def _polyder(coeffs, z):
    n = len(coeffs) - 1
    out = 0.0
    for i, c in enumerate(coeffs[:-1]):
        out = out * z + (n - i) * c
    return out


def test_smoother_poles():
    for z in (SMOOTHER.e1, SMOOTHER.e2):
        assert abs(_polyval(_E_POLY, z)) < 1e-10
    for z in (SMOOTHER.f1, SMOOTHER.f2):
        assert abs(_polyval(_F_POLY, z)) < 1e-10
    assert SMOOTHER.e1 == 0.5 * SMOOTHER.f1
    assert SMOOTHER.e2 == 0.5 * SMOOTHER.f2
    assert SMOOTHER.f1.imag == 0 if isinstance(SMOOTHER.f1, complex) else True


def test_smoother_weights_are_residues():
    # each printed weight equals N(pole)/D'(pole) of its rational function
    sm = SMOOTHER
    checks = [
        # full-step rational 6/E(z): residues s11, s12
        (sm.s11, 6.0 / _polyder(_E_POLY, sm.e1)),
        (sm.s12, 6.0 / _polyder(_E_POLY, sm.e2)),
        # (1-z)/E(z): s21, s22
        (sm.s21, (1 - sm.e1) / _polyder(_E_POLY, sm.e1)),
        (sm.s22, (1 - sm.e2) / _polyder(_E_POLY, sm.e2)),
        # (1+z)/E(z): s31, s32
        (sm.s31, (1 + sm.e1) / _polyder(_E_POLY, sm.e1)),
        (sm.s32, (1 + sm.e2) / _polyder(_E_POLY, sm.e2)),
        # (1+z^2)/E(z): s41, s42
        (sm.s41, (1 + sm.e1 ** 2) / _polyder(_E_POLY, sm.e1)),
        (sm.s42, (1 + sm.e2 ** 2) / _polyder(_E_POLY, sm.e2)),
        # half-step stage rational (24+6z+z^2)/F(z): s51, s52
        (sm.s51, (24 + 6 * sm.f1 + sm.f1 ** 2) / _polyder(_F_POLY, sm.f1)),
        (sm.s52, (24 + 6 * sm.f2 + sm.f2 ** 2) / _polyder(_F_POLY, sm.f2)),
        # half-step exponential rational 48/F(z): reused weights 2*s11, 2*s12
        (2 * sm.s11, 48.0 / _polyder(_F_POLY, sm.f1)),
        (2 * sm.s12, 48.0 / _polyder(_F_POLY, sm.f2)),
    ]
    for got, want in checks:
        assert abs(got - want) <= 1e-12 * max(1.0, abs(want))


def test_smoother_partial_fractions_real_axis():
    sm = SMOOTHER
    for z in _REAL_Z:
        r03 = 6.0 / _polyval(_E_POLY, z)
        pf = sm.s11 / (z - sm.e1) + 2 * (sm.s12 / (z - sm.e2)).real
        assert abs(r03 - pf) <= 1e-12
        r03h = 48.0 / _polyval(_F_POLY, z)
        pfh = 2 * sm.s11 / (z - sm.f1) + 2 * (2 * sm.s12 / (z - sm.f2)).real
        assert abs(r03h - pfh) <= 1e-12
        ptil = (24 + 6 * z + z ** 2) / _polyval(_F_POLY, z)
        pft = sm.s51 / (z - sm.f1) + 2 * (sm.s52 / (z - sm.f2)).real
        assert abs(ptil - pft) <= 1e-12


def test_pade03_damps_at_infinity():
    # L-damping: |R| <= 1 on the right half plane and R -> 0 at infinity
    rng = np.random.default_rng(7)
    zs = rng.uniform(0, 50, size=100) + 1j * rng.uniform(-50, 50, size=100)
    for z in zs:
        assert abs(6.0 / _polyval(_E_POLY, z)) <= 1.0 + 1e-12
    assert abs(6.0 / _polyval(_E_POLY, 1e6)) < 1e-17


def test_pade03_is_order_three():
    # halving ratio approaches 16 from below; within 10% once z <= 1/16
    mpmath.mp.dps = 50

    def gap(z):
        z = mpmath.mpf(z)
        r = 6 / (6 + 6 * z + 3 * z ** 2 + z ** 3)
        return abs(r - mpmath.e ** (-z))

    z = 1.0 / 16
    while z > 1e-3:
        ratio = float(gap(z) / gap(z / 2))
        assert 16.0 * 0.9 <= ratio <= 16.0 * 1.1, f"z={z}: ratio {ratio}"
        z /= 2
