import math

import numpy as np
import pytest

from conftest import band_limited
from hmch.dynamics import (BlowUpError, ConfigError, DiagnosticsRecord, SimConfig, Trajectory,
                           bump_normalization, diagnostics, energy, integrate, lp_growth_rates,
                           mollifier_kernel, mollifier_transform, mollify, rhs_convective, rhs_p_form,
                           rhs_viscous, step)
from hmch.experiments import PeakonSpec, peakon_profile
from hmch.operator import a_mu_inverse_apply
from hmch.spectral import PeriodicField, derivative, lp_norm, mean, product, sobolev_norm

TWO_PI = 2 * np.pi


def smooth(N):
    return PeriodicField.from_function(
        lambda x: 0.2 + np.sin(TWO_PI * x) + 0.1 * np.cos(2 * TWO_PI * x), N)


# --- configuration -----------------------------------------------------------

@pytest.mark.parametrize("kw", [dict(N=255), dict(N=8), dict(dt=0.0), dict(dt=-1e-3),
                                dict(T=-1.0), dict(scheme="Euler"), dict(epsilon=-1e-3),
                                dict(output_every=0), dict(lp_orders=(0.5,))])
def test_config_rejects(kw):
    base = dict(N=64, dt=1e-3, T=1.0)
    base.update(kw)
    with pytest.raises(ConfigError):
        SimConfig(**base)


def test_cfl_guard():
    u0 = smooth(256)
    cfg = SimConfig(N=256, dt=1e-2, T=1.0)
    with pytest.raises(ConfigError, match="dt"):
        cfg.with_initial(u0)
    cfg = SimConfig(N=256, dt=1e-2, T=1.0, cfl_override=True).with_initial(u0)
    assert cfg.mu0 == pytest.approx(0.2, abs=1e-15)
    assert cfg.mu1 == pytest.approx(math.sqrt(energy(u0)))
    sup = np.max(np.abs(u0.samples))
    assert SimConfig(N=256, dt=1e-4, T=1).cfl_limit(u0) == pytest.approx(0.5 / 256 / sup, rel=1e-14)


def test_n_steps():
    assert SimConfig(N=16, dt=0.1, T=1.0).n_steps() == 10
    assert SimConfig(N=16, dt=0.3, T=1.0).n_steps() == 4
    assert SimConfig(N=16, dt=0.1, T=0.0).n_steps() == 0


# --- right-hand sides --------------------------------------------------------

def test_constant_is_equilibrium():
    c = PeriodicField.constant(0.8, 64)
    assert np.max(np.abs(rhs_convective(c, 0.8).samples)) < 1e-14
    P, r = rhs_p_form(c, 0.8)
    assert np.allclose(P.samples, 2 * 0.8**2, rtol=0, atol=1e-14)
    assert np.max(np.abs(r.samples)) < 1e-14
    new = step(c, SimConfig(N=64, dt=1e-3, T=1e-3))
    assert np.max(np.abs(new.samples - 0.8)) < 1e-14


def test_rhs_mean_free(rng):
    for _ in range(10):
        u = band_limited(rng, 128, 30)
        assert abs(mean(rhs_convective(u, mean(u)))) < 1e-12


def test_formulations_agree(rng):
    for _ in range(20):
        u = band_limited(rng, 128, 40, decay=2)
        a = rhs_convective(u, mean(u)).samples
        _, b = rhs_p_form(u, mean(u))
        assert np.max(np.abs(a - b.samples)) <= 1e-10 * np.max(np.abs(a))


def test_p_splitting(rng):
    u = band_limited(rng, 128, 30, decay=2)
    mu = mean(u)
    P1, P2, _ = rhs_p_form(u, mu, split=True)
    P, _ = rhs_p_form(u, mu)
    assert np.max(np.abs(P1.samples + P2.samples - P.samples)) <= 1e-12 * np.max(np.abs(P.samples))
    # independent assembly through the public operators
    ux, uxx = derivative(u, 1), derivative(u, 2)
    w1 = 2 * mu * u + 0.5 * product(ux, ux) - 0.5 * product(uxx, uxx)
    ref1 = a_mu_inverse_apply(PeriodicField(w1.samples))
    ref2 = -3.0 * a_mu_inverse_apply(product(ux, uxx), 1)
    scale = np.max(np.abs(P.samples))
    assert np.max(np.abs(P1.samples - ref1.samples)) <= 1e-12 * scale
    assert np.max(np.abs(P2.samples - ref2.samples)) <= 1e-12 * scale


def test_peakon_rhs_is_translation():
    # u_t = -c phi' for the traveling wave; error shrinks with resolution
    spec = PeakonSpec(1.0)
    errs = []
    for N in (256, 512, 1024):
        phi = peakon_profile(spec, 0.0, N)
        r = rhs_convective(phi, mean(phi))
        errs.append(lp_norm(r + spec.c * derivative(phi, 1), 2))
    assert errs[0] > errs[1] > errs[2]
    assert errs[2] < 1e-8


def test_viscous_rhs():
    u = PeriodicField.from_function(lambda x: np.cos(TWO_PI * x), 64)
    _, base = rhs_p_form(u, mean(u))
    # the stepper takes the mean from the k = 0 coefficient; identical up to rounding
    assert np.max(np.abs(rhs_viscous(u, None, 0.0).samples - base.samples)) < 1e-15
    eps = 1e-2
    visc = rhs_viscous(u, None, eps).samples - base.samples
    assert np.max(np.abs(visc + eps * TWO_PI**2 * u.samples)) < 1e-13
    with pytest.raises(ValueError):
        rhs_viscous(u, None, -1.0)


# --- mollifier ---------------------------------------------------------------

def test_kernel_unit_mass():
    for eps in (1.0, 0.2, 0.05):
        x = np.linspace(-eps / 2, eps / 2, 200_001)
        # the integrand vanishes to all orders at the ends: trapezoid is spectrally accurate
        mass = np.trapezoid(mollifier_kernel(x, eps), x)
        assert mass == pytest.approx(1.0, abs=1e-12)
    assert bump_normalization() > 0
    with pytest.raises(ValueError):
        mollifier_kernel(0.0, 0.0)


def test_transform_matches_sampled_kernel():
    # periodized kernel on a fine grid, FFT gives jhat(eps k) for |k| small
    eps, M = 0.2, 8192
    x = np.fft.fftfreq(M, 1.0 / M) / M  # signed positions in [-1/2, 1/2)
    jh = np.fft.rfft(mollifier_kernel(x, eps)).real / M
    k = np.arange(0, 30)
    assert np.max(np.abs(jh[k] - mollifier_transform(eps * k))) < 1e-12


def test_mollify_contract(rng):
    f = band_limited(rng, 256, 60, decay=0.5)
    for eps in (0.3, 0.1, 0.02):
        g = mollify(f, eps)
        assert mean(g) == pytest.approx(mean(f), abs=1e-10)
        for p in (1, 2, 4, np.inf):
            assert lp_norm(g, p) <= lp_norm(f, p) * (1 + 1e-12)
    with pytest.raises(ValueError):
        mollify(f, 1.5)


def test_mollify_converges_monotonically():
    f = smooth(256)
    errs = [sobolev_norm(mollify(f, e) - f, 2) for e in (0.2, 0.1, 0.05)]
    assert errs[0] > errs[1] > errs[2]


# --- time stepping -----------------------------------------------------------

def test_rk4_order():
    u0 = smooth(64)
    T = 0.02
    ref_cfg = SimConfig(N=64, dt=T / 64, T=T, output_every=10**6)
    ref = integrate(u0, ref_cfg).final.samples
    errs = []
    for n in (2, 4, 8):
        cfg = SimConfig(N=64, dt=T / n, T=T, output_every=10**6, cfl_override=True)
        errs.append(np.max(np.abs(integrate(u0, cfg).final.samples - ref)))
    ratios = [errs[0] / errs[1], errs[1] / errs[2]]
    assert all(12 < r < 20 for r in ratios), ratios


def test_ifrk4_heat_is_exact():
    N, eps, dt = 64, 1e-2, 1e-2
    u0 = smooth(N)
    cfg = SimConfig(N=N, dt=dt, T=dt, scheme="IFRK4", epsilon=eps)
    out = step(u0, cfg, nonlinear=False)
    k = np.arange(N // 2 + 1)
    exact = np.fft.irfft(np.fft.rfft(u0.samples) * np.exp(-eps * (TWO_PI * k) ** 2 * dt), n=N)
    assert np.max(np.abs(out.samples - exact)) < 1e-13


def test_integrate_records_and_shortened_last_step():
    seen = []
    cfg = SimConfig(N=32, dt=0.003, T=0.01, output_every=2)
    traj = integrate(PeriodicField.constant(0.5, 32), cfg, callback=lambda t, u, r: seen.append(t))
    assert traj.times == pytest.approx([0.0, 0.006, 0.01])
    assert seen == traj.times
    assert np.max(np.abs(traj.final.samples - 0.5)) < 1e-14
    with pytest.raises(ValueError):
        traj.append(0.005, traj.final, traj.diagnostics[-1])


def test_short_conservation_run():
    u0 = smooth(64)
    traj = integrate(u0, SimConfig(N=64, dt=2e-4, T=0.1, output_every=100))
    d0 = traj.diagnostics[0]
    for r in traj.diagnostics:
        assert abs(r.mu - d0.mu) < 1e-12
        assert abs(r.E1 - d0.E1) / d0.E1 < 1e-8
        assert not r.violations


def test_blowup_signal():
    u0 = PeriodicField.from_function(lambda x: 50 * np.sin(TWO_PI * 3 * x), 64)
    cfg = SimConfig(N=64, dt=5e-2, T=5.0, cfl_override=True, output_every=1)
    with pytest.raises(BlowUpError) as info:
        integrate(u0, cfg)
    exc = info.value
    assert exc.trajectory is not None and len(exc.trajectory.times) >= 1
    assert exc.state is not None and np.all(np.isfinite(exc.state.samples))
    assert exc.t == pytest.approx(exc.trajectory.times[-1])


def test_diagnostics_examples():
    cfg = SimConfig(N=64, dt=1e-3, T=1.0)
    r = diagnostics(PeriodicField.constant(-0.3, 64), 0.0, cfg)
    assert r.E1 == 0.0 and r.sup_u == pytest.approx(0.3) and not r.violations
    a = 0.7
    u = PeriodicField.from_function(lambda x: a * np.sin(TWO_PI * x), 64)
    r = diagnostics(u, 0.0, cfg)
    assert r.E1 == pytest.approx(a**2 * TWO_PI**2 / 2 + a**2 * TWO_PI**4 / 2, rel=1e-13)
    assert isinstance(r, DiagnosticsRecord)


def test_diagnostics_flags_but_does_not_raise(caplog):
    u = PeriodicField.from_function(lambda x: np.sin(TWO_PI * x), 64)
    cfg = SimConfig(N=64, dt=1e-3, T=1.0, mu0=0.0, mu1=1e-3)
    r = diagnostics(u, 0.5, cfg)
    assert set(r.violations) == {"sup_u", "sup_ux"}
    assert "bound exceeded" in caplog.text


def test_viscous_ledger_short():
    u0 = smooth(128)
    cfg = SimConfig(N=128, dt=2e-4, T=0.05, scheme="IFRK4", epsilon=1e-3, output_every=50)
    traj = integrate(u0, cfg)
    E0 = traj.diagnostics[0].E1
    for r in traj.diagnostics:
        assert abs(r.E1 + r.dissipation_accum - E0) / E0 < 1e-8
    assert traj.diagnostics[-1].dissipation_accum > 0


def test_uxx_lp_growth_bounded():
    u0 = smooth(128)
    cfg = SimConfig(N=128, dt=2e-4, T=0.2, scheme="IFRK4", epsilon=1e-2, output_every=100,
                    lp_orders=(3, 4))
    traj = integrate(u0, cfg)
    B = sobolev_norm(u0, 2)
    rates = lp_growth_rates(traj)
    assert rates and all(rate <= B + 1e-6 for _, _, rate in rates)
    assert all(len(r.lp_q) == 2 for r in traj.diagnostics)


def test_trajectory_is_plain_container():
    t = Trajectory(config=SimConfig(N=16, dt=0.1, T=0.1))
    assert t.times == [] and t.fields == []
