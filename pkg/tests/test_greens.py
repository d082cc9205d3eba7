import math

import numpy as np
import pytest

from conftest import LAMBDA_P, matched_stack
from thinfilm_spdc.errors import ResonancePoleError
from thinfilm_spdc.greens import (
    fabry_perot_denominator,
    g21,
    g23,
    green_direct,
    green_series,
    t21_direct,
    t21_series,
    t23_direct,
    t23_series,
)
from thinfilm_spdc.materials import build_stack
from thinfilm_spdc.optics import LayerStack, Medium, angular_frequency, fresnel, kz, polarization_triad, wave_vector

OMEGA_S = angular_frequency(1e-6)
K0 = 2 * math.pi / 1e-6


def _random_q(rng, n, kmax):
    q = rng.uniform(0, kmax, n)
    phi = rng.uniform(0, 2 * math.pi, n)
    return q * np.cos(phi), q * np.sin(phi)


def _coef(c, pol):
    return (c.r_s, c.t_s) if pol == "s" else (c.r_p, c.t_p)


def bounce_t21(kx, ky, omega, media, a, pol, z, n_bounces=200):
    """Transmission to medium 1 summed ray by ray over round trips."""
    m1, m2, m3 = media
    kz2 = kz(kx, ky, m2, omega)
    r21, t21 = _coef(fresnel(m2, m1, kx, ky, omega), pol)
    r23, _ = _coef(fresnel(m2, m3, kx, ky, omega), pol)
    up = 0j
    down = 0j
    # upward emission: straight to the top, then each round trip adds r21 r23 exp(2 i kz2 a)
    amp_up = np.exp(-1j * kz2 * z)
    amp_down = r23 * np.exp(1j * kz2 * (z + a)) * np.exp(1j * kz2 * a)
    trip = r21 * r23 * np.exp(2j * kz2 * a)
    for _ in range(n_bounces):
        up += amp_up * t21
        down += amp_down * t21
        amp_up = amp_up * trip
        amp_down = amp_down * trip
    return up, down


def bounce_t23(kx, ky, omega, media, a, pol, z, n_bounces=200):
    m1, m2, m3 = media
    kz2 = kz(kx, ky, m2, omega)
    r21, _ = _coef(fresnel(m2, m1, kx, ky, omega), pol)
    r23, t23 = _coef(fresnel(m2, m3, kx, ky, omega), pol)
    amp_down = np.exp(1j * kz2 * (z + a))
    amp_up = np.exp(-1j * kz2 * z) * r21 * np.exp(1j * kz2 * a)
    trip = r21 * r23 * np.exp(2j * kz2 * a)
    up = down = 0j
    for _ in range(n_bounces):
        up += amp_up * t23
        down += amp_down * t23
        amp_up *= trip
        amp_down *= trip
    return up, down


def test_matched_media_collapse():
    stack = matched_stack()
    media = stack.signal
    a = stack.thickness
    kx, ky = 0.3 * K0, 0.2 * K0
    for pol in ("s", "p"):
        ts = t21_series(kx, ky, OMEGA_S, media, a, pol)
        assert ts.up == pytest.approx(1, abs=1e-15)
        assert ts.down == pytest.approx(0, abs=1e-15)
        t3 = t23_series(kx, ky, OMEGA_S, media, a, pol)
        kz2 = kz(kx, ky, media[1], OMEGA_S)
        assert t3.up == pytest.approx(0, abs=1e-15)
        assert t3.down == pytest.approx(np.exp(1j * kz2 * a), abs=1e-15)


def test_thick_lossy_slab_suppresses_down_term():
    lossy = Medium(12.0 + 1.0j)
    air, glass = Medium(1.0), Medium(2.1)
    media = (air, lossy, glass)
    prev = None
    for a in (1e-6, 5e-6, 20e-6):
        ts = t21_series(0.1 * K0, 0.0, OMEGA_S, media, a, "p")
        assert abs(ts.down) < abs(ts.up)
        if prev is not None:
            assert abs(ts.down) < prev
        prev = abs(ts.down)
    assert prev < 1e-15


def test_denominator_geometric_series_thin_gaas(gaas_stack):
    media = gaas_stack.signal
    a = gaas_stack.thickness
    for pol in ("s", "p"):
        den, r21, r23, kz2 = fabry_perot_denominator(0.0, 0.0, OMEGA_S, media, a, pol)
        x = r21 * r23 * np.exp(2j * kz2 * a)
        partial = sum(x**n for n in range(50))
        assert abs(1 / den - partial) < 1e-10 * abs(1 / den)


@pytest.mark.parametrize("thickness_lp", [0.01, 0.5, 3.7])
def test_bounce_series_oracle(thickness_lp, rng):
    stack = build_stack(thickness_lp * LAMBDA_P)
    media = stack.signal
    a = stack.thickness
    kx, ky = _random_q(rng, 30, 0.99 * K0)
    checked = 0
    for x, y in zip(kx, ky):
        for pol in ("s", "p"):
            den, r21, r23, kz2 = fabry_perot_denominator(x, y, OMEGA_S, media, a, pol)
            if abs(r21 * r23 * np.exp(2j * kz2 * a)) > 0.99:
                continue
            z = rng.uniform(-a, 0)
            for direct, bounce in ((t21_direct, bounce_t21), (t23_direct, bounce_t23)):
                d_up, d_down = direct(x, y, OMEGA_S, media, a, pol, z)
                b_up, b_down = bounce(x, y, OMEGA_S, media, a, pol, z)
                assert abs(d_up - b_up) <= 1e-8 * max(abs(d_up), 1e-300) + 1e-14
                assert abs(d_down - b_down) <= 1e-8 * max(abs(d_down), 1e-300) + 1e-14
            checked += 1
    assert checked > 20


def test_bounce_oracle_with_evanescent_outside(rng):
    """Inside-slab propagating but total internal reflection at the top: |r21| = 1."""
    stack = build_stack(0.3 * LAMBDA_P)
    media, a = stack.signal, stack.thickness
    x, y = 1.5 * K0, 0.5 * K0  # beyond the air and SiO2 light cones, inside GaAs
    for pol in ("s", "p"):
        den, r21, r23, kz2 = fabry_perot_denominator(x, y, OMEGA_S, media, a, pol)
        assert abs(abs(r21) - 1) < 1e-12
        assert abs(r21 * r23 * np.exp(2j * kz2 * a)) > 0.99  # the series oracle does not apply here
        assert np.isfinite(den) and abs(den) > 1e-6


def test_t23_needs_top_reflection():
    m = Medium(12.06)
    media = (m, m, Medium(2.1))
    for pol in ("s", "p"):
        ts = t23_series(0.2 * K0, 0.1 * K0, OMEGA_S, media, 200e-9, pol)
        assert ts.up == 0


def test_mirror_symmetric_stack(rng):
    """With eps1 = eps3, T21 at z' equals T23 at -a - z' with up and down exchanged."""
    outer, slab = Medium(2.1), Medium(12.06)
    media = (outer, slab, outer)
    a = 170e-9
    kx, ky = _random_q(rng, 20, 1.3 * K0)
    for x, y in zip(kx, ky):
        for pol in ("s", "p"):
            z = rng.uniform(-a, 0)
            u21, d21 = t21_direct(x, y, OMEGA_S, media, a, pol, z)
            u23, d23 = t23_direct(x, y, OMEGA_S, media, a, pol, -a - z)
            assert abs(u21 - d23) < 1e-12 * abs(u21)
            assert abs(d21 - u23) < 1e-12 * abs(d21)


def test_reciprocity_mirror_of_green_functions(rng):
    """ε1 = ε3: mirroring z -> -a - z maps g21 onto g23 with the z row and column flipped."""
    outer, slab = Medium(2.1), Medium(12.06)
    media = (outer, slab, outer)
    a = 170e-9
    flip = np.diag([1.0, 1.0, -1.0])
    for x, y in zip(*_random_q(rng, 10, 1.4 * K0)):
        z = rng.uniform(-a, 0)
        up = green_direct(x, y, OMEGA_S, media, a, 1, z)
        down = green_direct(x, y, OMEGA_S, media, a, 3, -a - z)
        np.testing.assert_allclose(flip @ up @ flip, down, atol=1e-12 * np.abs(up).max())


def explicit_ss(kx, ky):
    q2 = kx**2 + ky**2
    return np.array([[ky**2, -kx * ky, 0], [-kx * ky, kx**2, 0], [0, 0, 0]]) / q2


def explicit_p1p2(kx, ky, k1, k2, kz1, kz2, sign):
    q2 = kx**2 + ky**2
    a = sign * kz1 * kz2 / q2
    return np.array(
        [
            [a * kx**2, a * kx * ky, -kx * kz1],
            [a * kx * ky, a * ky**2, -ky * kz1],
            [-sign * kx * kz2, -sign * ky * kz2, q2],
        ]
    ) / (k1 * k2)


def explicit_p3p2(kx, ky, k3, k2, kz3, kz2, sign):
    q2 = kx**2 + ky**2
    a = -sign * kz2 * kz3 / q2
    return np.array(
        [
            [a * kx**2, a * kx * ky, kx * kz3],
            [a * kx * ky, a * ky**2, ky * kz3],
            [-sign * kx * kz2, -sign * ky * kz2, q2],
        ]
    ) / (k2 * k3)


def test_dyadics_match_explicit_matrices(rng, gaas_stack):
    m1, m2, m3 = gaas_stack.signal
    kxs, kys = _random_q(rng, 100, 4 * K0)
    for kx, ky in zip(kxs, kys):
        k1, k2, k3 = (m.k(OMEGA_S) for m in (m1, m2, m3))
        kz1, kz2, kz3 = (kz(kx, ky, m, OMEGA_S) for m in (m1, m2, m3))
        t1, t2, t3 = (polarization_triad(kx, ky, m, OMEGA_S) for m in (m1, m2, m3))
        scale = 1.0
        np.testing.assert_allclose(np.outer(t1.s, t2.s), explicit_ss(kx, ky), atol=1e-12 * scale)
        for sign, p2 in ((1, t2.p_up), (-1, t2.p_down)):
            ref = explicit_p1p2(kx, ky, k1, k2, kz1, kz2, sign)
            np.testing.assert_allclose(np.outer(t1.p_up, p2), ref, atol=1e-12 * max(1, np.abs(ref).max()))
            ref3 = explicit_p3p2(kx, ky, k3, k2, kz3, kz2, sign)
            np.testing.assert_allclose(np.outer(t3.p_down, p2), ref3, atol=1e-12 * max(1, np.abs(ref3).max()))


def test_homogeneous_limit():
    stack = matched_stack(eps=2.25)
    media, a = stack.signal, stack.thickness
    kx, ky = 0.4 * K0, -0.5 * K0
    tri = polarization_triad(kx, ky, media[0], OMEGA_S)
    kzv = kz(kx, ky, media[0], OMEGA_S)
    for z in (-a, -0.3 * a, 0.0):
        ser = g21(kx, ky, OMEGA_S, media, a)(z)
        ref = (-0.5j / kzv) * (np.outer(tri.s, tri.s) + np.outer(tri.p_up, tri.p_up)) * np.exp(-1j * kzv * z)
        np.testing.assert_allclose(ser, ref, atol=1e-12 * np.abs(ref).max())
        ser3 = g23(kx, ky, OMEGA_S, media, a)(z)
        ref3 = (-0.5j / kzv) * (np.outer(tri.s, tri.s) + np.outer(tri.p_down, tri.p_down)) * np.exp(
            1j * kzv * (a + z)
        )
        np.testing.assert_allclose(ser3, ref3, atol=1e-12 * np.abs(ref3).max())


def test_left_transversality(rng, gaas_stack):
    media, a = gaas_stack.signal, gaas_stack.thickness
    for kx, ky in zip(*_random_q(rng, 30, 0.99 * K0)):
        for det, upward in ((1, True), (3, False)):
            ser = green_series(kx, ky, OMEGA_S, media, a, det)
            kvec = wave_vector(kx, ky, media[det - 1], OMEGA_S, upward=upward)
            for term in ser.amplitudes:
                assert np.abs(kvec @ term).max() <= 1e-12 * K0 * np.abs(term).max()


@pytest.mark.parametrize("thickness_lp", [0.01, 0.5, 3.7])
def test_series_matches_direct(thickness_lp, rng):
    stack = build_stack(thickness_lp * LAMBDA_P)
    media, a = stack.signal, stack.thickness
    for kx, ky in zip(*_random_q(rng, 10, 5 * K0)):
        for det in (1, 3):
            ser = green_series(kx, ky, OMEGA_S, media, a, det)
            for z in rng.uniform(-a, 0, 20):
                ref = green_direct(kx, ky, OMEGA_S, media, a, det, z)
                got = ser(z)
                assert np.abs(got - ref).max() <= 1e-12 * np.abs(ref).max()


def test_fabry_perot_periodicity():
    media = (Medium(1.0), Medium(12.06), Medium(2.1))
    kx, ky = 0.4 * K0, 0.1 * K0
    kz2 = kz(kx, ky, media[1], OMEGA_S).real
    period = math.pi / kz2
    for a in (50e-9, 123e-9, 400e-9):
        for pol in ("s", "p"):
            t1 = t21_direct(kx, ky, OMEGA_S, media, a, pol, -a)
            t2 = t21_direct(kx, ky, OMEGA_S, media, a + period, pol, -a - period)
            assert abs(sum(t1)) ** 2 == pytest.approx(abs(sum(t2)) ** 2, rel=1e-9)


def test_resonance_pole_is_loud():
    """Lossless slab, TIR at both faces: a guided mode is a real pole."""
    from scipy.optimize import brentq

    core, clad = Medium(12.06), Medium(1.0)
    media = (clad, core, clad)
    a = 200e-9

    def phase(q):
        # round-trip phase from the raw interface coefficients
        r = fresnel(core, clad, q, 0.0, OMEGA_S).r_s
        kz2 = kz(q, 0.0, core, OMEGA_S)
        return np.angle(r * r * np.exp(2j * kz2 * a))

    qs = np.linspace(1.001 * K0, 0.999 * math.sqrt(12.06) * K0, 4000)
    ph = np.array([phase(q) for q in qs])
    idx = [i for i in np.where(np.diff(np.sign(ph)) != 0)[0] if abs(ph[i] - ph[i + 1]) < 1.0]
    assert idx, "no guided mode found in the scan"
    q_mode = brentq(phase, qs[idx[0]], qs[idx[0] + 1], xtol=1e-9, rtol=1e-15)
    with pytest.raises(ResonancePoleError) as info:
        t21_series(q_mode, 0.0, OMEGA_S, media, a, "s")
    assert info.value.thickness == a
    assert info.value.omega == OMEGA_S
    # slightly off the mode the coefficient is large but finite
    ts = t21_series(q_mode * (1 + 1e-6), 0.0, OMEGA_S, media, a, "s")
    assert np.isfinite(ts.up) and abs(ts.up) > 10
