"""Time evolution, speed-limit diagnostics and autocorrelation analysis."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import least_squares, minimize_scalar

from .errors import ConfigurationError, NumericalAbort
from .grid import SpectralField, boundary_leak
from .operators import HybridOperatorSet, Potential, apply_kinetic, force_field
from .special import digamma
from .states import WaveFunction
from .symbols import HybridParams

SPLITTINGS = ("exact_free", "strang")
#: Norm drift that aborts an evolution.
NORM_ABORT = 1e-6
FID_THRESHOLD = 1e-3
RATE_FLOOR = 1e-8


@dataclass(frozen=True)
class EvolutionConfig:
    dt: float
    n_steps: int
    record_every: int = 1
    splitting: str = "strang"

    def __post_init__(self):
        if not (self.dt > 0 and math.isfinite(self.dt)):
            raise ConfigurationError("dt must be positive", field="evolution.dt")
        if int(self.n_steps) != self.n_steps or self.n_steps < 1:
            raise ConfigurationError("n_steps must be a positive integer", field="evolution.n_steps")
        if int(self.record_every) != self.record_every or self.record_every < 1:
            raise ConfigurationError("record_every must be a positive integer",
                                     field="evolution.record_every")
        if self.splitting not in SPLITTINGS:
            raise ConfigurationError(f"splitting must be one of {SPLITTINGS}",
                                     field="evolution.splitting")


@dataclass(frozen=True)
class EvolutionTrace:
    """Observables recorded along a trajectory.

    ``fidelity`` is ``|<psi0|psi(t)>|`` and ``autocorr`` its square.
    """

    times: np.ndarray
    fidelity: np.ndarray
    bures_angle: np.ndarray
    mean_x: np.ndarray
    var_x: np.ndarray
    mean_vg: np.ndarray
    energy_mean: np.ndarray
    energy_var: np.ndarray
    norm: np.ndarray
    autocorr: np.ndarray
    mean_p_hybrid: np.ndarray
    mean_force: np.ndarray
    mean_m: np.ndarray
    leak: np.ndarray
    splitting: str = "strang"
    final_state: WaveFunction | None = field(default=None, repr=False, compare=False)

    CSV_COLUMNS = ("t", "fidelity", "bures_angle", "mean_x", "mean_vg", "energy_mean",
                   "energy_var", "norm", "autocorr")

    def csv_rows(self):
        cols = [self.times, self.fidelity, self.bures_angle, self.mean_x, self.mean_vg,
                self.energy_mean, self.energy_var, self.norm, self.autocorr]
        return [tuple(float(c[i]) for c in cols) for i in range(len(self.times))]


class _Recorder:
    def __init__(self, psi0: WaveFunction, ops: HybridOperatorSet, V: Potential | None):
        self.ops, self.V = ops, V
        self.grid = ops.grid
        self.psi0 = psi0.values_x
        self.n0 = psi0.norm()
        self.rows = []
        self.kin = ops.kinetic_sym
        self.v = None if V is None else V.samples

    def record(self, t: float, phi_x: np.ndarray, phi_k: np.ndarray):
        g, dx, dk = self.grid, self.grid.dx, self.grid.dk
        rx = np.abs(phi_x) ** 2
        rk = np.abs(phi_k) ** 2
        n2 = rx.sum() * dx
        nrm = math.sqrt(n2)
        amp = np.vdot(self.psi0, phi_x) * dx / (self.n0 * nrm)
        fid = min(max(abs(amp), 0.0), 1.0)
        # 2 asin(d/2) with d the phase-aligned distance stays accurate near F = 1
        ph = amp / abs(amp) if amp != 0 else 1.0
        dist = math.sqrt(float(np.sum(np.abs(phi_x / nrm - ph * self.psi0 / self.n0) ** 2)) * dx)
        angle = 2.0 * math.asin(min(0.5 * dist, 1.0))
        x = g.x
        mx = (rx * x).sum() * dx / n2
        vx = (rx * (x - mx) ** 2).sum() * dx / n2
        wk = rk / rk.sum()
        mvg = (wk * self.ops.vg_symbol).sum()
        mpi = (wk * self.ops.pi_symbol).sum()
        mm = (wk * self.ops.m_symbol).sum()
        hphi = g.inverse(self.kin * phi_k)
        if self.v is not None:
            hphi = hphi + self.v * phi_x
            fpsi = force_field(self.ops, self.V, SpectralField(g, values_x=phi_x, values_k=phi_k))
            mf = (np.vdot(phi_x, fpsi.values_x) * dx).real / n2
        else:
            mf = 0.0
        e = (np.vdot(phi_x, hphi) * dx).real / n2
        e2 = (np.vdot(hphi, hphi) * dx).real / n2
        leak = boundary_leak(SpectralField(g, values_x=phi_x))
        self.rows.append((t, fid, angle, mx, vx, mvg, e, max(e2 - e * e, 0.0), nrm,
                          fid * fid, mpi, mf, mm, leak))
        if abs(nrm - 1.0) > NORM_ABORT:
            raise NumericalAbort(f"norm drifted to {nrm!r} at t={t!r} (limit {NORM_ABORT})")

    def trace(self, splitting, final):
        a = np.array(self.rows, dtype=float)
        cols = [a[:, i].copy() for i in range(a.shape[1])]
        for c in cols:
            c.flags.writeable = False
        return EvolutionTrace(*cols, splitting=splitting, final_state=final)


def _is_free(V: Potential | None) -> bool:
    return V is None or V.is_zero()


def evolve(psi0: WaveFunction, ops: HybridOperatorSet, V: Potential | None, cfg: EvolutionConfig) -> EvolutionTrace:
    """Propagate ``psi0`` under ``K + V`` and record observables.

    ``exact_free`` applies ``exp(-i E(k) t / hbar)`` in one shot at each
    record time.  ``strang`` uses half-potential, full-kinetic,
    half-potential phases per step.
    """
    ops.check(psi0)
    if V is not None and V.grid != ops.grid:
        raise ConfigurationError("potential grid differs from operator grid", field="potential")
    if cfg.splitting == "exact_free" and not _is_free(V):
        raise ConfigurationError("exact_free requires a zero potential; use strang",
                                 field="evolution.splitting")
    g = ops.grid
    hbar = ops.params.hbar
    rec = _Recorder(psi0, ops, V)
    phi0_k = np.array(psi0.values_k)
    kin = ops.kinetic_sym
    n_rec = cfg.n_steps // cfg.record_every
    if cfg.splitting == "exact_free":
        rec.record(0.0, np.array(psi0.values_x), phi0_k)
        for r in range(1, n_rec + 1):
            t = r * cfg.record_every * cfg.dt
            pk = phi0_k * np.exp(-1j * kin * (t / hbar))
            rec.record(t, g.inverse(pk), pk)
        final = WaveFunction(SpectralField.from_k(g, pk if n_rec else phi0_k), normalize=False,
                             norm_tolerance=NORM_ABORT)
        return rec.trace(cfg.splitting, final)

    half_v = np.exp(-0.5j * cfg.dt / hbar * (V.samples if V is not None else np.zeros(g.n_points)))
    full_k = np.exp(-1j * cfg.dt / hbar * kin)
    px = np.array(psi0.values_x)
    rec.record(0.0, px, phi0_k)
    for step in range(1, n_rec * cfg.record_every + 1):
        px = half_v * g.inverse(full_k * g.forward(half_v * px))
        if step % cfg.record_every == 0:
            rec.record(step * cfg.dt, px, g.forward(px))
    final = WaveFunction(SpectralField.from_x(g, px), normalize=False, norm_tolerance=NORM_ABORT)
    return rec.trace(cfg.splitting, final)


def evolve_state(psi0: WaveFunction, ops: HybridOperatorSet, V: Potential | None, t: float,
                 dt: float | None = None) -> np.ndarray:
    """Position samples of ``psi(t)``: exact for free motion, Strang with step ``dt`` otherwise."""
    g, hbar = ops.grid, ops.params.hbar
    if _is_free(V):
        return g.inverse(np.asarray(psi0.values_k) * np.exp(-1j * ops.kinetic_sym * (t / hbar)))
    if dt is None:
        raise ConfigurationError("a time step is required with a potential")
    n = int(round(t / dt))
    if n < 1 or abs(n * dt - t) > 1e-9 * max(t, 1.0):
        raise ConfigurationError("t must be a positive multiple of dt")
    half_v = np.exp(-0.5j * dt / hbar * V.samples)
    full_k = np.exp(-1j * dt / hbar * ops.kinetic_sym)
    px = np.array(psi0.values_x)
    for _ in range(n):
        px = half_v * g.inverse(full_k * g.forward(half_v * px))
    return px


def strang_error_ratio(psi0: WaveFunction, ops: HybridOperatorSet, V: Potential, t_final: float,
                       dt: float) -> tuple[float, float, float]:
    """Errors at ``dt`` and ``dt/2`` against a ``dt/8`` reference, and their ratio.

    For a second-order scheme the ratio tends to ``(1 - 1/64)/(1/4 - 1/64) = 4.2``.
    """
    ref = evolve_state(psi0, ops, V, t_final, dt / 8)
    g = ops.grid
    e1 = g.norm(evolve_state(psi0, ops, V, t_final, dt) - ref)
    e2 = g.norm(evolve_state(psi0, ops, V, t_final, dt / 2) - ref)
    return e1, e2, e1 / e2


# ---------------------------------------------------------------------------
# speed limits

@dataclass(frozen=True)
class QslReport:
    delta_H: float
    var_K: float
    var_V: float
    cov_KV: float
    mt_bound: float
    ml_mean_energy: float
    ml_bound: float
    t_perp_measured: float | None
    mt_integral_ok: bool
    delta_H_direct: float = float("nan")
    e0_estimate: float = 0.0
    fid_threshold: float = FID_THRESHOLD

    def as_dict(self) -> dict:
        return dict(delta_H=self.delta_H, var_K=self.var_K, var_V=self.var_V, cov_KV=self.cov_KV,
                    mt_bound=self.mt_bound, ml_mean_energy=self.ml_mean_energy,
                    ml_bound=self.ml_bound, t_perp_measured=self.t_perp_measured,
                    mt_integral_ok=self.mt_integral_ok, delta_H_direct=self.delta_H_direct,
                    e0_estimate=self.e0_estimate, fid_threshold=self.fid_threshold)


def energy_decomposition(psi: WaveFunction, ops: HybridOperatorSet, V: Potential | None) -> dict:
    """``<K>, <V>``, variances, the symmetrised covariance and the direct ``Delta H^2``."""
    g = ops.grid
    f = ops.check(psi)
    kf = apply_kinetic(ops, f).values_x
    px = f.values_x
    n2 = g.inner(px, px).real
    k1 = g.inner(px, kf).real / n2
    k2 = g.inner(kf, kf).real / n2
    if V is None:
        vf = np.zeros_like(px)
    else:
        vf = V.samples * px
    v1 = g.inner(px, vf).real / n2
    v2 = g.inner(vf, vf).real / n2
    cov = g.inner(kf, vf).real / n2 - k1 * v1
    hf = kf + vf
    h1 = g.inner(px, hf).real / n2
    h2 = g.inner(hf, hf).real / n2
    return dict(mean_K=k1, mean_V=v1, var_K=max(k2 - k1 * k1, 0.0), var_V=max(v2 - v1 * v1, 0.0),
                cov_KV=cov, mean_H=h1, var_H=max(h2 - h1 * h1, 0.0))


def _fidelity_at(psi0: WaveFunction, ops: HybridOperatorSet, t: float) -> float:
    rho = np.abs(psi0.values_k) ** 2
    amp = (rho * np.exp(-1j * ops.kinetic_sym * (t / ops.params.hbar))).sum() / rho.sum()
    return abs(amp)


def orthogonalization_time(psi0: WaveFunction, ops: HybridOperatorSet, V: Potential | None,
                           trace: EvolutionTrace, fid_threshold: float = FID_THRESHOLD) -> float | None:
    """First time the fidelity reaches ``fid_threshold``.

    For free motion the first local fidelity minimum at or after the first
    sample below threshold is located precisely by a bounded scalar
    minimisation of the exactly evaluated fidelity.  With a potential the
    first recorded sample below threshold is returned.
    """
    t, F = trace.times, trace.fidelity
    n = len(t)
    if not _is_free(V):
        hit = np.nonzero(F <= fid_threshold)[0]
        return float(t[hit[0]]) if hit.size else None
    for i in range(1, n - 1):
        if (F[i] <= F[i - 1] and F[i] <= F[i + 1]) or F[i] <= fid_threshold:
            j = i
            while j < n - 1 and F[j + 1] < F[j]:
                j += 1
            lo, hi = t[j - 1], t[min(j + 1, n - 1)]
            res = minimize_scalar(lambda s: _fidelity_at(psi0, ops, s) ** 2, bounds=(lo, hi),
                                  method="bounded", options={"xatol": 1e-13 * max(hi, 1.0)})
            if math.sqrt(max(res.fun, 0.0)) <= fid_threshold:
                return float(res.x)
    return None


def qsl_report(psi0: WaveFunction, ops: HybridOperatorSet, V: Potential | None, trace: EvolutionTrace,
               fid_threshold: float = FID_THRESHOLD) -> QslReport:
    """Mandelstam-Tamm and Margolus-Levitin bounds for ``psi0``.

    The ground energy in the Margolus-Levitin denominator is estimated by
    ``min E(k) + min V = min V``, a lower bound that keeps the bound
    conservative.
    """
    if trace.times.size == 0 or trace.fidelity[0] < 1.0 - 1e-9:
        raise ConfigurationError("trace does not start from psi0")
    hbar = ops.params.hbar
    d = energy_decomposition(psi0, ops, V)
    var_H = d["var_K"] + d["var_V"] + 2.0 * d["cov_KV"]
    dH = math.sqrt(max(var_H, 0.0))
    e0 = 0.0 if V is None else V.lower_bound
    ml_e = d["mean_H"] - e0
    mt = math.pi * hbar / (2.0 * dH) if dH > 0 else math.inf
    ml = math.pi * hbar / (2.0 * ml_e) if ml_e > 0 else math.inf
    ok = bool(np.all(trace.bures_angle <= dH * trace.times / hbar + 1e-9))
    tp = orthogonalization_time(psi0, ops, V, trace, fid_threshold)
    return QslReport(delta_H=dH, var_K=d["var_K"], var_V=d["var_V"], cov_KV=d["cov_KV"],
                     mt_bound=mt, ml_mean_energy=ml_e, ml_bound=ml, t_perp_measured=tp,
                     mt_integral_ok=ok, delta_H_direct=math.sqrt(d["var_H"]), e0_estimate=e0,
                     fid_threshold=fid_threshold)


def ml_gaussian_prediction(params: HybridParams, sigma: float) -> float:
    """Closed-form Margolus-Levitin time for a Gaussian of width ``sigma``.

    ``(pi m sigma^2/hbar)[1 + eps^2 hbar^2/(24 m^2 sigma^4)
    - (delta/4) psi(3/2 + m^2 sigma^4/hbar^2)]`` with ``psi`` the digamma
    function.
    """
    if not sigma > 0:
        raise ConfigurationError("sigma must be positive", field="state.sigma")
    m, h = params.mass, params.hbar
    eps, delta = params.eps(), params.delta()
    s4 = sigma ** 4
    br = 1.0 + eps ** 2 * h ** 2 / (24.0 * m * m * s4)
    if delta:
        br -= 0.25 * delta * digamma(1.5 + m * m * s4 / h ** 2)
    return math.pi * m * sigma ** 2 / h * br


# ---------------------------------------------------------------------------
# Ehrenfest relations

@dataclass(frozen=True)
class EhrenfestResult:
    max_residual: float
    tolerance: float
    passed: bool
    scale: float


def _fd_residual(times, value, rate, dt_scale_coef=10.0):
    t = np.asarray(times)
    if t.size < 3:
        raise ConfigurationError("trace too sparse for finite differences (need >= 3 records)")
    h = np.diff(t)
    if np.ptp(h) > 1e-9 * h.mean():
        raise ConfigurationError("finite-difference checks need uniformly spaced records")
    h = float(h.mean())
    fd = (value[2:] - value[:-2]) / (2.0 * h)
    ref = rate[1:-1]
    scale = float(np.max(np.abs(rate)))
    err = float(np.max(np.abs(fd - ref)))
    # a rate identically zero by symmetry is compared in absolute terms
    res = err / max(scale, RATE_FLOOR)
    tol = max(1e-3, dt_scale_coef * h * h)
    return EhrenfestResult(res, tol, res <= tol, scale)


def ehrenfest_check(trace: EvolutionTrace) -> EhrenfestResult:
    """Centred differences of ``<x>(t)`` against the recorded ``<v_g>(t)``."""
    return _fd_residual(trace.times, trace.mean_x, trace.mean_vg)


def momentum_force_check(trace: EvolutionTrace) -> EhrenfestResult:
    """Centred differences of ``<p_hybrid>(t)`` against the recorded ``<F>(t)``."""
    return _fd_residual(trace.times, trace.mean_p_hybrid, trace.mean_force)


# ---------------------------------------------------------------------------
# propagator

def propagator_slice(ops: HybridOperatorSet, t: float, x_source_index: int,
                     source_width: float | None = None, splitting: str = "exact_free") -> np.ndarray:
    """Free propagator ``G(x, t; x_s, 0)`` sampled on the grid.

    The source is the grid delta ``1/dx`` by default.  A positive
    ``source_width`` replaces it by a unit-area Gaussian of that standard
    deviation, which removes the Nyquist-cutoff ringing from the far field.
    """
    if splitting != "exact_free":
        raise ConfigurationError("propagator_slice supports only exact_free evolution",
                                 field="evolution.splitting")
    if t < 0:
        raise ConfigurationError("t must be non-negative")
    g = ops.grid
    if not (0 <= x_source_index < g.n_points):
        raise IndexError(f"x_source_index {x_source_index} outside [0, {g.n_points})")
    if source_width is None:
        src = np.zeros(g.n_points, dtype=complex)
        src[x_source_index] = 1.0 / g.dx
    else:
        xs = g.x[x_source_index]
        src = np.exp(-0.5 * ((g.x - xs) / source_width) ** 2) / (math.sqrt(2 * math.pi) * source_width)
        src = src.astype(complex)
    if t == 0:
        return src
    return g.inverse(g.forward(src) * np.exp(-1j * ops.kinetic_sym * (t / ops.params.hbar)))


def tail_slope(x: np.ndarray, g_abs: np.ndarray, lo: float, hi: float) -> float:
    """Least-squares slope of ``log|G|`` against ``log|x|`` on ``lo <= |x| <= hi``."""
    ax = np.abs(x)
    sel = (ax >= lo) & (ax <= hi) & (g_abs > 0)
    if sel.sum() < 5:
        raise ConfigurationError("too few points in the tail window")
    return float(np.polyfit(np.log(ax[sel]), np.log(g_abs[sel]), 1)[0])


# ---------------------------------------------------------------------------
# autocorrelation fit

@dataclass(frozen=True)
class AutocorrFit:
    gamma: float
    alpha_fit: float
    c_q: float
    omega_q: float
    residual: float
    flags: tuple = ()

    def as_dict(self) -> dict:
        return dict(gamma=self.gamma, alpha_fit=self.alpha_fit, c_q=self.c_q, omega_q=self.omega_q,
                    residual=self.residual, flags=list(self.flags))


def autocorr_model(t, gamma, alpha, c, omega):
    t = np.asarray(t, dtype=float)
    return np.exp(-gamma * t ** alpha) * (1.0 + c * np.cos(omega * t))


def _envelope_guess(t, a):
    sel = (t > 0) & (a > 1e-12) & (a < 1.0 - 1e-9)
    if sel.sum() >= 3:
        y = np.log(-np.log(a[sel]))
        slope, icpt = np.polyfit(np.log(t[sel]), y, 1)
        alpha0 = float(np.clip(slope, 0.1, 3.0))
        gamma0 = float(max(math.exp(icpt), 1e-8))
    else:
        alpha0, gamma0 = 1.0, 1e-3
    return gamma0, alpha0


def _omega_candidates(t, a, gamma0, alpha0, n_peaks=3):
    env = np.exp(-gamma0 * t ** alpha0)
    r = a / env - 1.0
    r = r - r.mean()
    n = len(t)
    h = (t[-1] - t[0]) / (n - 1)
    pad = 8 * n
    spec = np.abs(np.fft.rfft(r * np.hanning(n), pad))
    w = 2 * np.pi * np.fft.rfftfreq(pad, h)
    spec[0] = 0.0
    idx = np.argsort(spec)[::-1]
    out = []
    for i in idx:
        if all(abs(w[i] - o) > 2 * np.pi / (t[-1] - t[0]) for o in out):
            out.append(float(w[i]))
        if len(out) == n_peaks:
            break
    return out, float(np.std(r) * math.sqrt(2.0))


def fit_autocorrelation(trace_or_times, values=None) -> AutocorrFit:
    """Fit ``A(t) = exp(-Gamma t^a) (1 + C cos(omega t))``.

    Accepts an :class:`EvolutionTrace` or explicit uniformly spaced
    ``times`` and ``values``.  Bounded least squares is started from a
    log-log envelope regression and the strongest spectral peaks of the
    detrended signal.  Flags: ``degenerate`` (flat data),
    ``omega_unidentifiable`` (``|C| < 1e-3``), ``low_confidence`` (fewer
    than three periods covered).
    """
    if values is None:
        t, a = np.asarray(trace_or_times.times, float), np.asarray(trace_or_times.autocorr, float)
    else:
        t, a = np.asarray(trace_or_times, float), np.asarray(values, float)
    if t.shape != a.shape or t.size < 8:
        raise ConfigurationError("autocorrelation fit needs at least 8 matching samples")
    if np.ptp(a) <= 1e-10 * max(np.max(np.abs(a)), 1e-300):
        return AutocorrFit(0.0, float("nan"), 0.0, float("nan"), 0.0, ("degenerate",))
    gamma0, alpha0 = _envelope_guess(t, a)
    omegas, c0 = _omega_candidates(t, a, gamma0, alpha0)
    lo = [0.0, 1e-6, -1.0, 0.0]
    hi = [np.inf, 3.0, 1.0, np.inf]

    def resid(x):
        return autocorr_model(t, *x) - a

    best = None
    starts = [(gamma0, alpha0, 0.0, 0.0)]
    for w in omegas:
        for c in (c0, -c0):
            starts.append((gamma0, alpha0, float(np.clip(c, -0.99, 0.99)), w))
    for x0 in starts:
        try:
            r = least_squares(resid, x0, bounds=(lo, hi), x_scale="jac", ftol=1e-14, xtol=1e-14,
                              gtol=1e-14, max_nfev=4000)
        except ValueError:
            continue
        if best is None or r.cost < best.cost:
            best = r
    gamma, alpha, c, omega = (float(v) for v in best.x)
    flags = []
    if abs(c) < 1e-3:
        flags.append("omega_unidentifiable")
    elif omega * (t[-1] - t[0]) / (2 * np.pi) < 3.0:
        flags.append("low_confidence")
    residual = float(np.linalg.norm(resid(best.x)) / np.linalg.norm(a))
    return AutocorrFit(gamma, alpha, c, omega, residual, tuple(flags))
