"""Translation defects, epsilon-period scans and the oscillatory-mean conditions."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy import fft as sfft

from .funcspace import (DEFAULT_LEVELS, DEFAULT_RTOL, HALF, WHOLE, GridError, SampledFunction,
                        SeminormEstimate, _cumtrapz, _estimate, besicovitch_seminorm,
                        geometric_schedule, shift, steps)

PASS = "pass"
FAIL = "fail"
INCONCLUSIVE = "inconclusive"


# --------------------------------------------------------------------------
# Translation defect
# --------------------------------------------------------------------------


def _difference(f: SampledFunction, k: int) -> SampledFunction:
    g = shift(f, k)
    if f.domain == WHOLE:
        base = f.restrict(g.t_max)
    else:
        base = SampledFunction(HALF, f.dt, f.values[:g.n])
    return g - base


def doss_defect(f: SampledFunction, tau: float, p: float = 2.0, schedule=None,
                rtol: float = DEFAULT_RTOL) -> SeminormEstimate:
    """Seminorm estimate of f(. + tau) - f on the window both functions share.

    ``tau`` must be an integer multiple of ``f.dt``; half-line functions take
    tau >= 0 only.
    """
    k = steps(tau, f.dt, what="tau")
    if f.domain == WHOLE and 2 * abs(k) > f.m:
        raise GridError(f"|tau|={abs(tau)} exceeds half of the stored window {f.t_max}")
    if f.domain == HALF and (k < 0 or 2 * k > f.m):
        raise GridError("half-line shifts need 0 <= tau <= t_max / 2")
    return besicovitch_seminorm(_difference(f, k), p, schedule, rtol)


def _window_steps(f: SampledFunction, schedule) -> np.ndarray:
    return np.array([steps(T, f.dt, exact=False) for T in schedule])


def _defects_fft(f: SampledFunction, ks: np.ndarray, kw: np.ndarray) -> np.ndarray:
    """Mean squared defects, shape (len(kw), len(ks)), via windowed correlations.

    Uses |a - b|^2 = |a|^2 + |b|^2 - 2 Re(a conj b) with trapezoid weights,
    so the result equals the direct computation up to rounding.
    """
    vals = f.values
    n = f.n
    z = f.zero_index
    kmax = int(np.max(np.abs(ks))) if ks.size else 0
    c = _cumtrapz(np.sum(np.abs(vals) ** 2, axis=1), f.dt)
    size = sfft.next_fast_len(n + kmax)
    spectra = [sfft.fft(vals[:, j], size) for j in range(f.d)]
    out = np.empty((kw.size, ks.size))
    idx = np.where(ks >= 0, ks, size + ks)
    for r, kj in enumerate(kw):
        lo = z - kj if f.domain == WHOLE else 0
        hi = z + kj
        weights = np.full(hi - lo + 1, f.dt)
        weights[0] = weights[-1] = f.dt / 2
        cross = np.zeros(ks.size, dtype=complex)
        for j in range(f.d):
            u = np.zeros(n, dtype=complex)
            u[lo:hi + 1] = vals[lo:hi + 1, j] * weights
            corr = sfft.ifft(spectra[j] * np.conj(sfft.fft(u, size)))
            cross += corr[idx]
        shifted = c[hi + ks] - c[lo + ks]
        base = c[hi] - c[lo]
        length = (hi - lo) * f.dt
        out[r] = np.maximum(shifted + base - 2.0 * cross.real, 0.0) / length
    # the zero shift is exact; do not let cancellation noise through the root
    out[:, ks == 0] = 0.0
    return out


def _defects_direct(f: SampledFunction, ks: np.ndarray, kw: np.ndarray, p: float) -> np.ndarray:
    out = np.empty((kw.size, ks.size))
    for col, k in enumerate(ks):
        diff = _difference(f, int(k))
        c = _cumtrapz(diff.norms() ** p, f.dt)
        z = diff.zero_index
        if f.domain == WHOLE:
            out[:, col] = (c[z + kw] - c[z - kw]) / (2 * kw * f.dt)
        else:
            out[:, col] = c[kw] / (kw * f.dt)
    return out


def defect_profile(f: SampledFunction, taus, p: float = 2.0, schedule=None,
                   rtol: float = DEFAULT_RTOL, method: str = "auto"):
    """Doss defects for many shifts sharing one window schedule.

    Returns ``(taus, values, converged)``. With ``method='auto'`` the p = 2
    case goes through FFT correlations; other exponents loop over shifts.
    Only the tail half of the schedule is evaluated, which is all the
    limsup surrogate and its convergence flag look at.
    """
    taus = np.asarray(taus, dtype=float).ravel()
    ks = np.array([steps(t, f.dt, what="tau") for t in taus], dtype=int)
    kmax = int(np.max(np.abs(ks))) if ks.size else 0
    if f.domain == HALF and np.any(ks < 0):
        raise GridError("half-line shifts must be non-negative")
    if 2 * kmax > f.m:
        raise GridError(f"shift {kmax * f.dt} exceeds half of the stored window {f.t_max}")
    common = (f.m - kmax) * f.dt
    if schedule is None:
        schedule = geometric_schedule(common)
    schedule = np.asarray(schedule, dtype=float)
    if schedule.max() > common + 1e-9 * common:
        raise GridError(f"schedule maximum {schedule.max()} exceeds the common window {common}")
    K = schedule.size
    start = (K - 1) // 2 if K > 1 else 0
    kw = _window_steps(f, schedule[start:])
    if kw.min() < 1:
        raise GridError("schedule entries must span at least one grid step")
    use_fft = method == "fft" or (method == "auto" and p == 2.0)
    means = _defects_fft(f, ks, kw) if use_fft else _defects_direct(f, ks, kw, p)
    A = np.power(means, 1.0 / p)
    # indices into the full schedule: value over [K//2, K), previous over [(K-1)//2, K-1)
    rel_now = K // 2 - start
    value = A[rel_now:].max(axis=0)
    if K >= 2:
        prev = A[:K - 1 - start].max(axis=0)
        converged = np.abs(value - prev) < rtol * (1.0 + value)
    else:
        converged = np.zeros(ks.size, dtype=bool)
    return ks * f.dt, value, converged


# --------------------------------------------------------------------------
# Period scan
# --------------------------------------------------------------------------


@dataclass
class DossReport:
    p: float
    epsilon: float
    tau_grid: list
    defects: list
    period_set: list
    max_gap: float
    relatively_dense_at: float
    scan_range: float
    degenerate: bool = False
    density_ratio: float = 0.25
    verdict: str = FAIL
    noise_floor: float = 0.0

    def to_dict(self) -> dict:
        return asdict(self)


def _max_gap(periods: np.ndarray, lo: float, hi: float) -> float:
    if periods.size == 0:
        return hi - lo
    pts = np.concatenate([[lo], periods, [hi]])
    return float(np.max(np.diff(pts)))


def period_scan(f: SampledFunction, p: float = 2.0, epsilon: float = 0.1,
                tau_max: Optional[float] = None, dtau: Optional[float] = None, schedule=None,
                rtol: float = DEFAULT_RTOL, density_ratio: float = 0.25,
                method: str = "auto") -> DossReport:
    """Scan tau over [-tau_max, tau_max] (whole line) or [0, tau_max] (half line).

    The epsilon-periods are the scanned shifts with defect < epsilon. The
    relative-density certificate is the largest gap between consecutive
    periods, boundary gaps to the scan endpoints included. The verdict is
    ``pass`` when that gap is at most ``density_ratio`` times the scan range
    and ``inconclusive`` when epsilon is within estimator noise.
    """
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    dtau = f.dt if dtau is None else dtau
    step = steps(dtau, f.dt, what="dtau")
    if step < 1:
        raise GridError("dtau must be a positive multiple of dt")
    if tau_max is None:
        tau_max = f.t_max / 4
    kmax = int(math.floor(tau_max / f.dt + 1e-9))
    kmax -= kmax % step
    jmax = kmax // step
    if f.domain == WHOLE:
        ks = np.arange(-jmax, jmax + 1) * step
    else:
        ks = np.arange(0, jmax + 1) * step
    taus, defects, _ = defect_profile(f, ks * f.dt, p, schedule, rtol, method)
    periods = taus[defects < epsilon]
    hi = kmax * f.dt
    lo = -hi if f.domain == WHOLE else 0.0
    scan_range = hi - lo
    gap = _max_gap(periods, lo, hi)
    degenerate = periods.size == 0 or scan_range == 0
    level = besicovitch_seminorm(f, p, rtol=rtol).value
    noise = 5.0 * rtol * (1.0 + level)
    if epsilon <= noise:
        verdict = INCONCLUSIVE
    elif not degenerate and gap <= density_ratio * scan_range:
        verdict = PASS
    else:
        verdict = FAIL
    return DossReport(p=p, epsilon=epsilon, tau_grid=taus.tolist(), defects=defects.tolist(),
                      period_set=periods.tolist(), max_gap=gap, relatively_dense_at=gap,
                      scan_range=scan_range, degenerate=bool(degenerate),
                      density_ratio=density_ratio, verdict=verdict, noise_floor=noise)


# --------------------------------------------------------------------------
# B^p continuity
# --------------------------------------------------------------------------


@dataclass
class ContinuityReport:
    taus: list
    defects: list
    tol: float
    decreasing: bool
    below_tol: bool

    @property
    def continuous(self) -> bool:
        return self.below_tol

    def to_dict(self) -> dict:
        return asdict(self)


def default_tau_schedule(dt: float, levels: int = 8) -> np.ndarray:
    """Shifts dt * 2^j for j = levels-1 .. 0."""
    return dt * 2.0 ** np.arange(levels - 1, -1, -1)


def bp_continuity_modulus(f: SampledFunction, p: float = 2.0, tau_schedule=None,
                          tol: float = 0.05, schedule=None,
                          rtol: float = DEFAULT_RTOL) -> ContinuityReport:
    """Defects along shifts decreasing to dt; continuous when the last one is below ``tol``."""
    if tau_schedule is None:
        tau_schedule = default_tau_schedule(f.dt)
    taus = np.asarray(tau_schedule, dtype=float)
    _, vals, _ = defect_profile(f, taus, p, schedule, rtol)
    slack = 5.0 * rtol * (1.0 + float(np.max(vals)))
    decreasing = bool(np.all(np.diff(vals) <= slack))
    return ContinuityReport(taus=taus.tolist(), defects=vals.tolist(), tol=tol,
                            decreasing=decreasing, below_tol=bool(vals[-1] < tol))


# --------------------------------------------------------------------------
# Oscillatory means
# --------------------------------------------------------------------------


def _modulated_primitive(f: SampledFunction, lam: float) -> np.ndarray:
    phase = np.exp(1j * lam * f.t)[:, None]
    return _cumtrapz(f.values * phase, f.dt)


@dataclass
class BDReport:
    lam: float
    l_schedule: list
    values: list
    tends_to_zero: bool
    tol: float
    p: float
    converged: list = field(default_factory=list)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["lambda"] = d.pop("lam")
        return d


def _norm_rows(a: np.ndarray) -> np.ndarray:
    return np.abs(a[:, 0]) if a.shape[1] == 1 else np.sqrt(np.sum(np.abs(a) ** 2, axis=1))


def bd_condition(f: SampledFunction, lam: float = 0.0, l_schedule=(10, 20, 40, 80),
                 p: float = 2.0, schedule=None, tol: float = 0.05,
                 rtol: float = DEFAULT_RTOL) -> BDReport:
    """For each l, (1/l) times the seminorm estimate in x of
    int_x^{x+l} e^{i lam s} f(s) ds - int_0^l e^{i lam s} f(s) ds.

    Whole-line x ranges over [-T, T], half-line over [0, T]; T follows
    ``schedule`` (default: geometric up to the window minus the largest l).
    """
    ls = np.asarray(l_schedule, dtype=float)
    if ls.size == 0 or np.any(np.diff(ls) <= 0) or ls[0] <= 0:
        raise ValueError("l_schedule must be increasing and positive")
    lk = np.array([steps(l, f.dt, what="l") for l in ls])
    room = f.m - int(lk.max())
    if room < 2:
        raise GridError(f"l_schedule maximum {ls.max()} does not fit the stored window {f.t_max}")
    if schedule is None:
        schedule = geometric_schedule(room * f.dt)
    schedule = np.asarray(schedule, dtype=float)
    kw = _window_steps(f, schedule)
    if kw.max() > room:
        raise GridError("schedule plus l_schedule exceed the stored window")
    P = _modulated_primitive(f, lam)
    z = f.zero_index
    values, conv = [], []
    for l, k in zip(ls, lk):
        ref = P[z + k] - P[z]
        if f.domain == WHOLE:
            x = np.arange(z - room, z + room + 1)
        else:
            x = np.arange(0, room + 1)
        inner = P[x + k] - P[x] - ref
        c = _cumtrapz(_norm_rows(inner) ** p, f.dt)
        zz = room if f.domain == WHOLE else 0
        if f.domain == WHOLE:
            means = (c[zz + kw] - c[zz - kw]) / (2 * kw * f.dt)
        else:
            means = c[kw] / (kw * f.dt)
        est = _estimate(kw * f.dt, np.power(np.maximum(means, 0), 1.0 / p), p, rtol)
        values.append(est.value / l)
        conv.append(est.converged)
    vals = np.array(values)
    tail = vals[-3:]
    decreasing = bool(np.all(np.diff(tail) <= 1e-12))
    tends = bool(vals[-1] < tol and decreasing)
    return BDReport(lam=float(lam), l_schedule=ls.tolist(), values=vals.tolist(),
                    tends_to_zero=tends, tol=tol, p=p, converged=conv)


@dataclass
class MontenegroResult:
    lam: float
    epsilon: float
    l_schedule: list
    sup_values: list
    l0: Optional[float]

    def to_dict(self) -> dict:
        d = asdict(self)
        d["lambda"] = d.pop("lam")
        return d


def montenegro_check(f: SampledFunction, lam: float = 0.0, p: float = 2.0,
                     l_schedule=None, v_grid=None, epsilon: float = 0.1) -> MontenegroResult:
    """sup over v of (1/l) |int_0^l - int_{-v}^{l-v} e^{i lam s} f(s) ds|^p per scheduled l.

    ``l0`` is the smallest scheduled l whose sup falls below ``epsilon``.
    The default v grid covers [-v_max, v_max] (whole line) with
    v_max = 500 or what the window allows, in unit steps snapped to dt.
    """
    if l_schedule is None:
        l_schedule = 10.0 * 2.0 ** np.arange(0, 8)
    ls = np.asarray(l_schedule, dtype=float)
    lk = np.array([steps(l, f.dt, what="l") for l in ls])
    if v_grid is None:
        v_room = (f.m - int(lk.max())) * f.dt
        v_max = min(500.0, v_room)
        unit = max(1, steps(1.0, f.dt, exact=False))
        nv = int(v_max / f.dt + 1e-9) // unit
        vk = np.arange(-nv, nv + 1) * unit
        if f.domain == HALF:
            vk = vk[vk <= 0]
    else:
        vk = np.array([steps(v, f.dt, what="v") for v in np.asarray(v_grid, dtype=float)])
    P = _modulated_primitive(f, lam)
    z = f.zero_index
    lo = z - vk
    if lo.min() < 0 or (lo + lk.max()).max() >= f.n:
        raise GridError("window does not accommodate max l + max |v|")
    sups = []
    for k in lk:
        ref = P[z + k] - P[z]
        diff = ref[None, :] - (P[lo + k] - P[lo])
        sups.append(float(np.max(_norm_rows(diff) ** p)) / (k * f.dt))
    l0 = None
    for l, s in zip(ls, sups):
        if s < epsilon:
            l0 = float(l)
            break
    return MontenegroResult(lam=float(lam), epsilon=epsilon, l_schedule=ls.tolist(),
                            sup_values=sups, l0=l0)


# --------------------------------------------------------------------------
# Classification
# --------------------------------------------------------------------------


@dataclass
class ClassifyConfig:
    epsilon: float = 0.1
    lambdas: Sequence[float] = (0.0, 1.0)
    tau_max: Optional[float] = None
    dtau: Optional[float] = None
    l_schedule: Sequence[float] = (10.0, 20.0, 40.0, 80.0)
    bd_tol: float = 0.05
    continuity_tol: float = 0.05
    tau_schedule: Optional[Sequence[float]] = None
    density_ratio: float = 0.25
    levels: int = DEFAULT_LEVELS
    rtol: float = DEFAULT_RTOL


@dataclass
class Classification:
    p: float
    bp_bounded: bool
    bp_value: float
    bp_converged: bool
    bp_continuous: bool
    continuity: ContinuityReport
    doss: DossReport
    bd_iv: list
    label: str

    def to_dict(self, include_scan: bool = True) -> dict:
        doss = self.doss.to_dict()
        if not include_scan:
            doss.pop("tau_grid")
            doss.pop("defects")
        return {
            "p": self.p,
            "bp_bounded": {"ok": self.bp_bounded, "value": self.bp_value,
                           "converged": self.bp_converged},
            "bp_continuous": self.bp_continuous,
            "continuity": self.continuity.to_dict(),
            "doss": doss,
            "bd_iv": [r.to_dict() for r in self.bd_iv],
            "label": self.label,
        }


def classify(f: SampledFunction, p: float = 2.0, config: Optional[ClassifyConfig] = None) -> Classification:
    """Run the four diagnostics and combine them into a label.

    ``besicovitch-doss`` needs all four, ``doss`` only the period scan;
    an inconclusive period scan yields ``inconclusive``.
    """
    cfg = config or ClassifyConfig()
    est = besicovitch_seminorm(f, p, geometric_schedule(f.t_max, cfg.levels), cfg.rtol)
    bounded = bool(np.isfinite(est.value))
    cont = bp_continuity_modulus(f, p, cfg.tau_schedule, cfg.continuity_tol, rtol=cfg.rtol)
    tau_max = cfg.tau_max if cfg.tau_max is not None else f.t_max / 4
    common = f.t_max - tau_max
    doss = period_scan(f, p, cfg.epsilon, tau_max, cfg.dtau,
                       geometric_schedule(common, cfg.levels), cfg.rtol, cfg.density_ratio)
    bds = [bd_condition(f, lam, cfg.l_schedule, p, tol=cfg.bd_tol, rtol=cfg.rtol)
           for lam in cfg.lambdas]
    if doss.verdict == INCONCLUSIVE:
        label = INCONCLUSIVE
    elif doss.verdict == PASS:
        full = bounded and cont.continuous and all(r.tends_to_zero for r in bds)
        label = "besicovitch-doss" if full else "doss"
    else:
        label = "none"
    return Classification(p=p, bp_bounded=bounded, bp_value=est.value, bp_converged=est.converged,
                          bp_continuous=cont.continuous, continuity=cont, doss=doss,
                          bd_iv=bds, label=label)
