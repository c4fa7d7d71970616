"""Right-hand sides, mollifier, time stepping and diagnostics.

Inviscid form (frozen mean mu0):

    u_t = -u u_x - d_x A^{-1}(2 mu0 u + u_x^2/2 - 3 u_x u_xxx - 7/2 u_xx^2)

P-form, used for the viscous system with the mean recomputed at every call:

    A P = 2 mu(u) u + u_x^2/2 - u_xx^2/2 - 3 d_x(u_x u_xx)
    u_t = -u u_x - d_x P + eps u_xx

Internally the stepper works on rfft coefficients of the state.
"""

from __future__ import annotations

import dataclasses
import functools
import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy import integrate as _quad

from .operator import inverse_multiplier, multiplier_array
from .spectral import Grid, PeriodicField, get_grid, lp_norm, sobolev_norm_array

log = logging.getLogger(__name__)

SCHEMES = ("RK4", "IFRK4")
BLOWUP_THRESHOLD = 1e12
BOUND_SLACK = 1e-6


class ConfigError(ValueError):
    """Invalid simulation configuration."""


class BlowUpError(RuntimeError):
    """Raised when the state becomes non-finite or exceeds the blow-up threshold.

    ``t`` is the last time at which the state was valid, ``state`` that state,
    and ``trajectory`` whatever was recorded before the failure (may be None).
    """

    def __init__(self, message: str, t: float, state: Optional[PeriodicField], trajectory=None):
        super().__init__(f"{message} (last valid t={t:.6f})")
        self.t = t
        self.state = state
        self.trajectory = trajectory


@dataclass(frozen=True)
class SimConfig:
    N: int
    dt: float
    T: float
    scheme: str = "RK4"
    epsilon: float = 0.0
    dealias: bool = True
    output_every: int = 100
    mu0: Optional[float] = None
    mu1: Optional[float] = None
    hs_orders: tuple = (4.0,)
    lp_orders: tuple = ()
    cfl_override: bool = False

    def __post_init__(self):
        if not isinstance(self.N, (int, np.integer)) or self.N < 16 or self.N % 2:
            raise ConfigError(f"N must be an even integer >= 16, got {self.N!r}")
        if not (self.dt > 0 and math.isfinite(self.dt)):
            raise ConfigError(f"dt must be positive, got {self.dt!r}")
        if not (self.T >= 0 and math.isfinite(self.T)):
            raise ConfigError(f"T must be non-negative, got {self.T!r}")
        if self.scheme not in SCHEMES:
            raise ConfigError(f"scheme must be one of {SCHEMES}, got {self.scheme!r}")
        if not (self.epsilon >= 0 and math.isfinite(self.epsilon)):
            raise ConfigError(f"epsilon must be >= 0, got {self.epsilon!r}")
        if not isinstance(self.output_every, (int, np.integer)) or self.output_every < 1:
            raise ConfigError(f"output_every must be a positive integer, got {self.output_every!r}")
        for p in self.lp_orders:
            if not p >= 1:
                raise ConfigError(f"L^p orders must be >= 1, got {p!r}")
        object.__setattr__(self, "hs_orders", tuple(float(s) for s in self.hs_orders))
        object.__setattr__(self, "lp_orders", tuple(float(p) for p in self.lp_orders))

    def cfl_limit(self, u0: PeriodicField) -> float:
        return 0.5 * (1.0 / self.N) / max(1.0, lp_norm(u0, np.inf))

    def check_cfl(self, u0: PeriodicField) -> None:
        limit = self.cfl_limit(u0)
        if self.dt > limit and not self.cfl_override:
            raise ConfigError(
                f"dt={self.dt:g} exceeds advective limit {limit:.3g}; set cfl_override to force"
            )

    def with_initial(self, u0: PeriodicField) -> "SimConfig":
        """Copy with mu0 and mu1 cached from the initial datum; enforces the CFL guard."""
        if u0.N != self.N:
            raise ConfigError(f"initial field has N={u0.N}, config has N={self.N}")
        self.check_cfl(u0)
        return dataclasses.replace(self, mu0=float(np.mean(u0.samples)), mu1=math.sqrt(energy(u0)))

    def n_steps(self) -> int:
        if self.T == 0:
            return 0
        return max(1, math.ceil(self.T / self.dt - 1e-9))


@dataclass(frozen=True)
class DiagnosticsRecord:
    t: float
    mu: float
    E1: float
    sup_u: float
    sup_ux: float
    hs_norms: tuple = ()
    lp_q: tuple = ()
    dissipation_accum: float = 0.0
    violations: tuple = ()


@dataclass
class Trajectory:
    config: SimConfig
    times: list = field(default_factory=list)
    fields: list = field(default_factory=list)
    diagnostics: list = field(default_factory=list)

    @property
    def final(self) -> PeriodicField:
        return self.fields[-1]

    def append(self, t: float, u: PeriodicField, rec: DiagnosticsRecord) -> None:
        if self.times and t <= self.times[-1]:
            raise ValueError("trajectory times must be strictly increasing")
        self.times.append(t)
        self.fields.append(u)
        self.diagnostics.append(rec)


class _Model:
    """Spectral-space right-hand sides for one grid size."""

    def __init__(self, N: int, dealias: bool = True):
        self.g: Grid = get_grid(N)
        self.N = N
        self.dealias = dealias
        self.lam = multiplier_array(self.g)
        self.dx_ainv = inverse_multiplier(self.g, 1)
        self.ainv = inverse_multiplier(self.g, 0)
        self.D = [self.g.deriv_multiplier(j) for j in range(4)]
        self.kk2 = self.g.kk**2

    def _filt(self, h):
        return self.g.dealias(h) if self.dealias else h

    def _fields(self, uh):
        g = self.g
        base = self._filt(uh)
        return [g.inverse(self.D[j] * base) for j in range(4)]

    def convective(self, uh, mu0):
        g = self.g
        u, ux, uxx, uxxx = self._fields(uh)
        adv = self._filt(g.forward(u * ux))
        quad = self._filt(g.forward(0.5 * ux**2 - 3.0 * ux * uxxx - 3.5 * uxx**2))
        return -adv - self.dx_ainv * (2.0 * mu0 * uh + quad)

    def p_form(self, uh, mu):
        g = self.g
        u, ux, uxx, _ = self._fields(uh)
        adv = self._filt(g.forward(u * ux))
        p1 = self.ainv * (2.0 * mu * uh + self._filt(g.forward(0.5 * ux**2 - 0.5 * uxx**2)))
        p2 = -3.0 * self.dx_ainv * self._filt(g.forward(ux * uxx))
        return p1, p2, -adv - self.D[1] * (p1 + p2)

    def mean(self, uh) -> float:
        return float(uh[0].real) / self.N

    def dissipation_rate(self, uh, eps) -> float:
        if eps == 0:
            return 0.0
        kk = self.g.kk
        return 2.0 * eps * self.g.integral_sq(uh, kk**4 + kk**6)


def _check_finite(a, what: str, t: float):
    if not np.all(np.isfinite(a)):
        raise BlowUpError(f"non-finite {what}", t, None)


def rhs_convective(u: PeriodicField, mu0: float, dealias: bool = True) -> PeriodicField:
    m = _Model(u.N, dealias)
    r = m.convective(m.g.forward(u.samples), mu0)
    _check_finite(r, "right-hand side", float("nan"))
    return PeriodicField(m.g.inverse(r))


def rhs_p_form(u: PeriodicField, mu_u: float, dealias: bool = True, split: bool = False):
    """Return (P, rhs); with ``split=True`` return (P1, P2, rhs) instead."""
    m = _Model(u.N, dealias)
    p1, p2, r = m.p_form(m.g.forward(u.samples), mu_u)
    _check_finite(r, "right-hand side", float("nan"))
    inv = m.g.inverse
    if split:
        return PeriodicField(inv(p1)), PeriodicField(inv(p2)), PeriodicField(inv(r))
    return PeriodicField(inv(p1 + p2)), PeriodicField(inv(r))


def rhs_viscous(u: PeriodicField, mu_eps: Optional[float], eps: float, dealias: bool = True) -> PeriodicField:
    """P-form right-hand side plus eps * u_xx.

    ``mu_eps=None`` recomputes the mean from ``u``, which is what the stepper does.
    """
    if eps < 0:
        raise ValueError("eps must be >= 0")
    m = _Model(u.N, dealias)
    uh = m.g.forward(u.samples)
    if mu_eps is None:
        mu_eps = m.mean(uh)
    _, _, r = m.p_form(uh, mu_eps)
    r = r - eps * m.kk2 * uh
    _check_finite(r, "right-hand side", float("nan"))
    return PeriodicField(m.g.inverse(r))


# --- Friedrichs mollifier -------------------------------------------------


def _bump(x):
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    inside = np.abs(x) < 0.5
    out[inside] = np.exp(-1.0 / (1.0 - 4.0 * x[inside] ** 2))
    return out


@functools.lru_cache(maxsize=1)
def bump_normalization() -> float:
    """C such that C * exp(-1/(1 - 4x^2)) has unit mass on (-1/2, 1/2)."""
    mass, _ = _quad.quad(lambda x: math.exp(-1.0 / (1.0 - 4.0 * x * x)), -0.5, 0.5,
                         epsabs=0.0, epsrel=1e-13, limit=200)
    return 1.0 / mass


def mollifier_kernel(x, eps: float):
    """j_eps(x) = j(x/eps)/eps on the real line (not periodized)."""
    if not 0 < eps <= 1:
        raise ValueError(f"eps must lie in (0, 1], got {eps}")
    return bump_normalization() * _bump(np.asarray(x, dtype=float) / eps) / eps


def mollifier_transform(xi, nodes: int = 8192) -> np.ndarray:
    """Fourier transform of the unit bump j at frequencies xi (cycles per unit).

    Midpoint rule on a fine grid over (0, 1/2); the integrand is smooth with
    all derivatives vanishing at the edge, so the rule converges faster than
    any power of the node count.
    """
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    M = max(nodes, 16 * int(np.ceil(np.max(np.abs(xi), initial=0.0))))
    h = 0.5 / M
    x = (np.arange(M) + 0.5) * h
    w = 2.0 * h * bump_normalization() * _bump(x)
    out = np.empty_like(xi)
    step = max(1, 2**22 // M)
    for i in range(0, xi.size, step):
        out[i:i + step] = np.cos(2.0 * np.pi * np.outer(xi[i:i + step], x)) @ w
    return out


def mollify(f: PeriodicField, eps: float) -> PeriodicField:
    """J_eps f = j_eps * f on the circle, applied as the multiplier jhat(eps k)."""
    if not 0 < eps <= 1:
        raise ValueError(f"eps must lie in (0, 1], got {eps}")
    g = get_grid(f.N)
    mult = mollifier_transform(eps * g.k)
    return PeriodicField(g.inverse(mult * g.forward(f.samples)))


# --- time stepping ---------------------------------------------------------


def energy(u: PeriodicField) -> float:
    """E1 = integral of u_x^2 + u_xx^2, evaluated spectrally."""
    g = get_grid(u.N)
    return g.integral_sq(g.forward(u.samples), g.kk**2 + g.kk**4)


class _Stepper:
    def __init__(self, cfg: SimConfig, mu0: float, nonlinear: bool = True):
        self.cfg = cfg
        self.m = _Model(cfg.N, cfg.dealias)
        self.mu0 = mu0
        self.eps = cfg.epsilon
        self.nonlinear = nonlinear
        self.L = -self.eps * self.m.kk2

    def N_of(self, uh, t):
        """Explicit part of the right-hand side (everything for RK4 schemes)."""
        if not self.nonlinear:
            r = np.zeros_like(uh)
        elif self.eps > 0:
            r = self.m.p_form(uh, self.m.mean(uh))[2]
        else:
            r = self.m.convective(uh, self.mu0)
        _check_finite(r, "stage right-hand side", t)
        return r

    def step(self, uh, t, dt):
        """Advance one step; returns (new coefficients, dissipation increment)."""
        m = self.m
        rate = functools.partial(m.dissipation_rate, eps=self.eps)
        if self.cfg.scheme == "RK4":
            L = self.L

            def f(v, s):
                return self.N_of(v, s) + L * v

            s1 = uh
            k1 = f(s1, t)
            s2 = uh + 0.5 * dt * k1
            k2 = f(s2, t + 0.5 * dt)
            s3 = uh + 0.5 * dt * k2
            k3 = f(s3, t + 0.5 * dt)
            s4 = uh + dt * k3
            k4 = f(s4, t + dt)
            new = uh + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        else:
            E = np.exp(self.L * dt)
            E2 = np.exp(self.L * 0.5 * dt)
            s1 = uh
            k1 = self.N_of(s1, t)
            s2 = E2 * (uh + 0.5 * dt * k1)
            k2 = self.N_of(s2, t + 0.5 * dt)
            s3 = E2 * uh + 0.5 * dt * k2
            k3 = self.N_of(s3, t + 0.5 * dt)
            s4 = E * uh + dt * E2 * k3
            k4 = self.N_of(s4, t + dt)
            new = E * uh + dt / 6.0 * (E * k1 + 2.0 * E2 * (k2 + k3) + k4)
        d_acc = dt / 6.0 * (rate(s1) + 2.0 * rate(s2) + 2.0 * rate(s3) + rate(s4))
        return new, d_acc


def step(u: PeriodicField, cfg: SimConfig, t: float = 0.0, nonlinear: bool = True) -> PeriodicField:
    """One time step of size cfg.dt.

    ``nonlinear=False`` drops everything except the viscous term, leaving the
    heat equation; used to check the integrating factor.
    """
    mu0 = cfg.mu0 if cfg.mu0 is not None else float(np.mean(u.samples))
    st = _Stepper(cfg, mu0, nonlinear)
    g = st.m.g
    new, _ = st.step(g.forward(u.samples), t, cfg.dt)
    out = g.inverse(new)
    if not np.all(np.isfinite(out)):
        raise BlowUpError("non-finite state after step", t, u)
    return PeriodicField(out)


def diagnostics(u: PeriodicField, t: float, cfg: SimConfig, accum: float = 0.0) -> DiagnosticsRecord:
    """Conservation/bound diagnostics for one snapshot.

    Sup-norm bounds ||u_x|| <= (sqrt(3)/6) mu1 and ||u|| <= |mu0| + mu1/12 are
    checked against cfg.mu0 / cfg.mu1 (falling back to this snapshot) and
    reported as warnings, never raised.
    """
    g = get_grid(u.N)
    uh = g.forward(u.samples)
    kk = g.kk
    mu = float(uh[0].real) / u.N
    E1 = g.integral_sq(uh, kk**2 + kk**4)
    ux = g.diff(uh, 1)
    sup_u = float(np.max(np.abs(u.samples)))
    sup_ux = float(np.max(np.abs(ux)))
    hs = tuple((s, sobolev_norm_array(g, uh, s)) for s in cfg.hs_orders)
    lp = ()
    if cfg.lp_orders:
        uxx = PeriodicField(g.diff(uh, 2))
        lp = tuple((p, lp_norm(uxx, p)) for p in cfg.lp_orders)
    mu0 = cfg.mu0 if cfg.mu0 is not None else mu
    mu1 = cfg.mu1 if cfg.mu1 is not None else math.sqrt(E1)
    violations = []
    if sup_ux > math.sqrt(3.0) / 6.0 * mu1 + BOUND_SLACK:
        violations.append("sup_ux")
    if sup_u > abs(mu0) + mu1 / 12.0 + BOUND_SLACK:
        violations.append("sup_u")
    if violations:
        log.warning("t=%.6f: sup-norm bound exceeded for %s", t, ", ".join(violations))
    return DiagnosticsRecord(t=t, mu=mu, E1=E1, sup_u=sup_u, sup_ux=sup_ux, hs_norms=hs,
                             lp_q=lp, dissipation_accum=accum, violations=tuple(violations))


def integrate(u0: PeriodicField, cfg: SimConfig,
              callback: Optional[Callable[[float, PeriodicField, DiagnosticsRecord], None]] = None) -> Trajectory:
    """Advance u0 to cfg.T, recording every cfg.output_every steps and at T.

    Step k lands on t = k*dt; the last step is shortened when T is not a
    multiple of dt.  Raises BlowUpError carrying the last valid state.
    """
    if cfg.mu0 is None or cfg.mu1 is None:
        cfg = cfg.with_initial(u0)
    else:
        cfg.check_cfl(u0)
    st = _Stepper(cfg, cfg.mu0)
    g = st.m.g
    traj = Trajectory(config=cfg)

    def record(t, uh, acc, u=None):
        u = PeriodicField(g.inverse(uh)) if u is None else u
        rec = diagnostics(u, t, cfg, acc)
        traj.append(t, u, rec)
        if callback is not None:
            callback(t, u, rec)

    uh = g.forward(u0.samples)
    acc = 0.0
    t = 0.0
    record(t, uh, acc, u0)  # the datum itself, not its FFT round trip
    n = cfg.n_steps()
    for i in range(1, n + 1):
        t_next = cfg.T if i == n else i * cfg.dt
        try:
            new, d_acc = st.step(uh, t, t_next - t)
        except BlowUpError as exc:
            raise BlowUpError(str(exc).split(" (")[0], t, PeriodicField(g.inverse(uh)), traj) from None
        u_new = g.inverse(new)
        if not np.all(np.isfinite(u_new)) or np.max(np.abs(u_new)) > BLOWUP_THRESHOLD \
                or g.integral_sq(new, g.kk**2 + g.kk**4) > BLOWUP_THRESHOLD**2:
            raise BlowUpError("state exceeded blow-up threshold", t, PeriodicField(g.inverse(uh)), traj)
        uh, t = new, t_next
        acc += d_acc
        if i % cfg.output_every == 0 or i == n:
            record(t, uh, acc)
    return traj


def lp_growth_rates(traj: Trajectory) -> list:
    """Measured exponential rates log(||u_xx(t)||_p / ||u_xx(0)||_p) / t per recorded p."""
    first = dict(traj.diagnostics[0].lp_q)
    out = []
    for rec in traj.diagnostics[1:]:
        for p, v in rec.lp_q:
            if first.get(p, 0) > 0 and v > 0:
                out.append((rec.t, p, math.log(v / first[p]) / rec.t))
    return out
