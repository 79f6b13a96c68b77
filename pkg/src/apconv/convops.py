"""Convolution with weakly singular kernels and fractional derivatives on grids.

All convolutions share one discretization. The kernel is turned into a
vector of lag weights ``w[k]`` so that

    int_0^V R(v) g(t - v) dv  ~  sum_k w[k] g(t - k dt).

On (0, v_cut] each grid cell is integrated exactly against the linear
interpolant of g, using Gauss-Legendre nodes in w = v^beta, where the
kernel times the Jacobian is bounded. Past v_cut a composite trapezoid
is used.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, replace
from typing import Callable, Optional

import numpy as np
from scipy import integrate, optimize, signal

from .funcspace import HALF, WHOLE, GridError, SampledFunction, _cumtrapz, steps, stepanov_norm
from .specfun import (KernelSpec, envelope_check, gamma_fn, kernel_regular_part, kernel_values,
                      rgamma)

DEFAULT_V_CUT = 1.0
DEFAULT_TOL_TAIL = 1e-4
WEYL_V_TAIL = 200.0
_GAUSS_CELL = 8
_GAUSS_FIRST = 32
_TAIL_SAFETY = 2.0


class AdmissibilityError(ValueError):
    """The kernel/exponent pair violates the Hoelder pairing hypothesis."""


class TailBoundError(ValueError):
    """The requested tail tolerance needs a longer window than the data provide."""

    def __init__(self, message: str, required_window: float):
        super().__init__(message)
        self.required_window = required_window


# --------------------------------------------------------------------------
# Hypotheses and constants
# --------------------------------------------------------------------------


def conjugate_exponent(p: float) -> float:
    if p < 1:
        raise ValueError("p must be >= 1")
    return math.inf if p == 1 else p / (p - 1.0)


@dataclass
class Admissibility:
    ok: bool
    reason: str

    def __bool__(self) -> bool:
        return self.ok


HYPOTHESIS_Q = "q(beta-1)>-1"
HYPOTHESIS_BETA_ONE = "beta=1 when p=1"


def admissibility(p: float, spec: KernelSpec) -> Admissibility:
    """Check q(beta - 1) > -1 for p > 1, or beta = 1 for p = 1."""
    if p < 1:
        return Admissibility(False, "p must be >= 1")
    if p == 1:
        if spec.beta == 1:
            return Admissibility(True, f"{HYPOTHESIS_BETA_ONE} holds")
        return Admissibility(False, f"{HYPOTHESIS_BETA_ONE} violated: beta={spec.beta}")
    q = conjugate_exponent(p)
    val = q * (spec.beta - 1.0)
    if val > -1:
        return Admissibility(True, f"{HYPOTHESIS_Q} holds: q(beta-1)={val:.6g}")
    return Admissibility(False, f"{HYPOTHESIS_Q} violated: q(beta-1)={val:.6g}")


@dataclass
class ConvolutionConfig:
    p: float = 2.0
    q_conj: Optional[float] = None
    zeta: Optional[float] = None
    v_singular_cut: float = DEFAULT_V_CUT
    v_tail_cut: Optional[float] = None
    tol_tail: float = DEFAULT_TOL_TAIL
    C_zeta: Optional[float] = None
    M_prime: Optional[float] = None
    M_fit: Optional[float] = None

    def __post_init__(self):
        if self.p < 1:
            raise ValueError("p must be >= 1")
        q = conjugate_exponent(self.p)
        if self.q_conj is None:
            self.q_conj = q
        elif not math.isclose(self.q_conj, q, rel_tol=1e-12):
            raise ValueError("q_conj must be the Hoelder conjugate of p")
        if not self.v_singular_cut > 0:
            raise ValueError("v_singular_cut must be positive")
        if self.v_tail_cut is not None and not self.v_tail_cut > 0:
            raise ValueError("v_tail_cut must be positive")
        if not self.tol_tail > 0:
            raise ValueError("tol_tail must be positive")

    @property
    def bound(self) -> Optional[float]:
        """Envelope-derived defect amplification bound M' * C_zeta."""
        if self.C_zeta is None or self.M_prime is None:
            return None
        return self.M_prime * self.C_zeta

    def to_dict(self) -> dict:
        d = asdict(self)
        d["q_conj"] = None if math.isinf(self.q_conj) else self.q_conj
        d["bound"] = self.bound
        return d


def zeta_interval(p: float, beta: float, gamma_decay: float) -> tuple:
    if p == 1:
        return 1.0, gamma_decay
    return 1.0 / p, 1.0 / p + gamma_decay - beta


def _envelope_constant(spec: KernelSpec) -> float:
    if spec.kind == "envelope":
        return spec.M
    t = np.logspace(-6, 6, 4001)
    return envelope_check(spec, t).M_fit


def zeta_constant(p: float, spec: KernelSpec, **overrides) -> ConvolutionConfig:
    """Weight exponent zeta (midpoint of the admissible interval) and the constants

    C_zeta = (int_0^inf dv / (1 + v^zeta)^p)^(1/p),
    M'     = M || v^(beta-1) (1 + v^zeta) / (1 + v^gamma) ||_{L^q(0, inf)}.
    """
    adm = admissibility(p, spec)
    if not adm:
        raise AdmissibilityError(adm.reason)
    beta, gd = spec.beta, spec.gamma_decay
    lo, hi = zeta_interval(p, beta, gd)
    if not hi > lo:
        raise AdmissibilityError(f"empty zeta interval ({lo}, {hi})")
    zeta = 0.5 * (lo + hi)
    M = _envelope_constant(spec)

    def weight(v):
        return (1.0 + v ** zeta) ** (-p)

    c_int = integrate.quad(weight, 0, 1, epsabs=0, epsrel=1e-12)[0] \
        + integrate.quad(weight, 1, np.inf, epsabs=0, epsrel=1e-12, limit=200)[0]
    C_zeta = c_int ** (1.0 / p)

    if p == 1:
        res = optimize.minimize_scalar(lambda x: -(1 + math.exp(x) ** zeta) / (1 + math.exp(x) ** gd),
                                       bounds=(-30, 30), method="bounded")
        sup = max(1.0, -res.fun)
        M_prime = M * sup
    else:
        q = conjugate_exponent(p)

        def smooth(v):
            return ((1.0 + v ** zeta) / (1.0 + v ** gd)) ** q

        head = integrate.quad(smooth, 0, 1, weight="alg", wvar=(q * (beta - 1.0), 0.0),
                              epsabs=0, epsrel=1e-12)[0]
        tail = integrate.quad(lambda v: v ** (q * (beta - 1.0)) * smooth(v), 1, np.inf,
                              epsabs=0, epsrel=1e-12, limit=200)[0]
        M_prime = M * (head + tail) ** (1.0 / q)
    cfg = ConvolutionConfig(p=p, zeta=zeta, C_zeta=C_zeta, M_prime=M_prime, M_fit=M)
    if overrides.get("zeta") is not None and not lo < overrides["zeta"] < hi:
        raise ValueError(f"zeta={overrides['zeta']} outside the admissible interval ({lo}, {hi})")
    return replace(cfg, **overrides) if overrides else cfg


# --------------------------------------------------------------------------
# Hoelder window norms
# --------------------------------------------------------------------------


def _unit_sups(spec: KernelSpec, n: np.ndarray) -> np.ndarray:
    """Upper bounds for sup |R| on [n, n+1], n >= 1."""
    if spec.kind == "custom-sampled":
        samples = np.abs(np.asarray(spec.samples, dtype=float))
        grid = np.arange(samples.size) * spec.sample_dt
        out = np.zeros(n.size)
        for i, a in enumerate(n):
            sel = (grid >= a) & (grid <= a + 1)
            vals = [abs(float(np.interp(a, grid, samples, right=0.0))),
                    abs(float(np.interp(a + 1, grid, samples, right=0.0)))]
            if np.any(sel):
                vals.append(float(samples[sel].max()))
            out[i] = max(vals)
        return out
    # the analytic kernels are non-increasing in |R| on [1, inf)
    return np.abs(kernel_values(spec, n.astype(float)))


def _remainder(spec: KernelSpec, nb: int) -> float:
    """Bound for sum_{n >= nb} sup_[n,n+1] |R|."""
    if spec.kind == "custom-sampled":
        support = len(spec.samples) * spec.sample_dt
        if nb >= support:
            return 0.0
        n = np.arange(nb, int(math.ceil(support)) + 1)
        return float(np.sum(_unit_sups(spec, n)))
    r = float(abs(kernel_values(spec, np.array([float(nb)]))[0]))
    a = spec.decay_exponent
    if math.isinf(a):
        ratio = float(abs(kernel_values(spec, np.array([nb + 1.0]))[0])) / r if r > 0 else 0.0
        return r / (1.0 - ratio) if ratio < 1 else math.inf
    if a <= 1:
        return math.inf
    return _TAIL_SAFETY * r * (1.0 + nb / (a - 1.0))


def tail_sums(spec: KernelSpec, n_max: int) -> np.ndarray:
    """S[N] = upper bound for sum_{n >= N} ||R||_{L^q[n, n+1]}, N = 1..n_max (index N-1)."""
    n = np.arange(1, n_max + 1)
    sups = _unit_sups(spec, n)
    rem = _remainder(spec, n_max + 1)
    return np.cumsum(sups[::-1])[::-1] + rem


def head_norm(spec: KernelSpec, q: float) -> float:
    """||R||_{L^q[0,1]}; after w = v^kappa, kappa = q(beta-1)+1, the integrand is bounded."""
    if math.isinf(q):
        if spec.beta < 1:
            return math.inf
        v = np.linspace(1e-12, 1.0, 2001)
        return float(np.max(np.abs(kernel_values(spec, v))))
    kappa = q * (spec.beta - 1.0) + 1.0
    if kappa <= 0:
        return math.inf
    x, wts = np.polynomial.legendre.leggauss(64)
    w = 0.5 * (x + 1.0)
    v = w ** (1.0 / kappa)
    reg = np.abs(kernel_regular_part(spec, v))
    return float((0.5 * np.sum(wts * reg ** q) / kappa) ** (1.0 / q))


def kernel_constant(spec: KernelSpec, p: float, n_max: int = 4096) -> float:
    """C_kernel = sum_{n >= 0} ||R||_{L^q[n,n+1]} (upper bound)."""
    q = conjugate_exponent(p)
    return head_norm(spec, q) + float(tail_sums(spec, n_max)[0])


def required_tail_cut(spec: KernelSpec, stepanov: float, tol: float,
                      n_cap: int = 1 << 22) -> tuple:
    """Smallest integer V with stepanov * sum_{n >= V} ||R||_{L^q[n,n+1]} < tol.

    Returns ``(V, bound)``.
    """
    if stepanov == 0:
        return 1, 0.0
    n_max = 1024
    while True:
        s = tail_sums(spec, n_max) * stepanov
        ok = np.nonzero(s < tol)[0]
        # keep the explicit sum well past N so the loose remainder stays small
        if ok.size and (4 * (int(ok[0]) + 1) <= n_max or n_max >= n_cap):
            N = int(ok[0]) + 1
            return N, float(s[N - 1])
        if n_max >= n_cap:
            raise TailBoundError(f"tail bound {s[-1]:.3g} still above tol_tail={tol} at V={n_max}",
                                 required_window=math.inf)
        n_max *= 4


def tail_bound_at(spec: KernelSpec, stepanov: float, v_tail: float) -> float:
    N = max(1, int(math.floor(v_tail)))
    return float(tail_sums(spec, max(1024, 4 * N))[N - 1]) * stepanov


# --------------------------------------------------------------------------
# Lag weights
# --------------------------------------------------------------------------


def _cell_weights(reg: Callable, beta: float, dt: float, k_cut: int) -> tuple:
    """Left/right hat shares of int_cell R over cells j = 0..k_cut-1.

    Integration variable w = v^beta on each cell, so R dv = reg(v) dw / beta.
    """
    left = np.zeros(k_cut)
    right = np.zeros(k_cut)
    if k_cut == 0:
        return left, right
    x8, w8 = np.polynomial.legendre.leggauss(_GAUSS_CELL)
    x0, w0 = np.polynomial.legendre.leggauss(_GAUSS_FIRST)
    j = np.arange(k_cut, dtype=float)
    a = (j * dt) ** beta
    b = ((j + 1) * dt) ** beta
    for xs, ws, sel in ((x0, w0, slice(0, 1)), (x8, w8, slice(1, k_cut))):
        aa, bb = a[sel], b[sel]
        if aa.size == 0:
            continue
        wn = 0.5 * (bb - aa)[:, None] * (xs[None, :] + 1.0) + aa[:, None]
        v = wn ** (1.0 / beta)
        jac = 0.5 * (bb - aa)[:, None] * ws[None, :] / beta
        f = reg(v) * jac
        s = v / dt - j[sel][:, None]
        left[sel] = np.sum(f * (1.0 - s), axis=1)
        right[sel] = np.sum(f * s, axis=1)
    return left, right


@dataclass
class LagWeights:
    weights: np.ndarray
    left: np.ndarray      # share of cell i assigned to lag i (singular region)
    k_cut: int
    dt: float
    end_corr: np.ndarray  # weight to remove at lag i when integration stops at v = i dt


def lag_weights(reg: Callable, full: Callable, beta: float, dt: float, k_total: int,
                v_cut: float = DEFAULT_V_CUT, halve_end: bool = True) -> LagWeights:
    """Weights for lags 0..k_total, singular cells up to v_cut then trapezoid."""
    k_cut = min(k_total, max(1, int(round(v_cut / dt))))
    left, right = _cell_weights(reg, beta, dt, k_cut)
    w = np.zeros(k_total + 1)
    w[:k_cut] += left
    w[1:k_cut + 1] += right
    if k_total > k_cut:
        v = np.arange(k_cut, k_total + 1) * dt
        trap = full(v) * dt
        trap[0] *= 0.5
        if halve_end:
            trap[-1] *= 0.5
        w[k_cut:] += trap
    corr = np.zeros(k_total + 1)
    corr[:k_cut] = left
    if k_total >= k_cut:
        corr[k_cut] = 0.5 * dt * float(full(np.array([k_cut * dt]))[0]) if k_total > k_cut else 0.0
    if k_total > k_cut:
        corr[k_cut + 1:] = 0.5 * dt * full(np.arange(k_cut + 1, k_total + 1) * dt)
    return LagWeights(weights=w, left=left, k_cut=k_cut, dt=dt, end_corr=corr)


def kernel_lag_weights(spec: KernelSpec, dt: float, k_total: int, v_cut: float = DEFAULT_V_CUT,
                       halve_end: bool = True) -> LagWeights:
    return lag_weights(lambda v: kernel_regular_part(spec, v), lambda v: kernel_values(spec, v),
                       spec.beta, dt, k_total, v_cut, halve_end)


def _g_weights(zeta: float, dt: float, k_total: int, v_cut: float, halve_end: bool) -> LagWeights:
    c = float(rgamma(zeta))
    return lag_weights(lambda v: np.full_like(v, c), lambda v: c * np.power(v, zeta - 1.0),
                       zeta, dt, k_total, v_cut, halve_end)


def transfer(weights: np.ndarray, dt: float, freqs) -> np.ndarray:
    """Discrete transfer function sum_k w[k] exp(-i omega k dt)."""
    freqs = np.asarray(freqs, dtype=float)
    k = np.arange(weights.size) * dt
    return np.array([np.sum(weights * np.exp(-1j * w * k)) for w in freqs])


def spectral_tail(spec: KernelSpec, v_tail: float, freqs, terms: int = 3) -> np.ndarray:
    """int_V^inf R(v) exp(-i w v) dv by repeated integration by parts:
    exp(-i w V) sum_k R^(k)(V) / (i w)^(k+1), derivatives by central differences.

    Accurate when R is smooth on [V, inf) and |w| V is large against the
    number of terms.
    """
    freqs = np.asarray(freqs, dtype=float)
    h = 1e-2 * v_tail
    nodes = v_tail + h * np.arange(-2, 3)
    r = kernel_values(spec, nodes)
    derivs = [r[2], (r[3] - r[1]) / (2 * h), (r[3] - 2 * r[2] + r[1]) / h ** 2,
              (r[4] - 2 * r[3] + 2 * r[1] - r[0]) / (2 * h ** 3)][:terms]
    iw = 1j * freqs
    total = np.zeros(freqs.size, dtype=complex)
    for k, d in enumerate(derivs):
        total += d / iw ** (k + 1)
    return np.exp(-iw * v_tail) * total


def _apply_weights(values: np.ndarray, w: np.ndarray) -> np.ndarray:
    return signal.fftconvolve(values, w[:, None], mode="valid", axes=0)


# --------------------------------------------------------------------------
# Convolutions
# --------------------------------------------------------------------------


def infinite_convolution(spec: KernelSpec, g: SampledFunction, t_out: Optional[float] = None,
                         cfg: Optional[ConvolutionConfig] = None, full_output: bool = False,
                         tail_correction: bool = False):
    """G(t) = int_0^inf R(v) g(t - v) dv on the symmetric window [-t_out, t_out].

    The integral is truncated at V = cfg.v_tail_cut, or, when that is unset,
    at the smallest integer V whose Hoelder tail bound
    ||g||_{S^p} * sum_{n >= V} ||R||_{L^q[n,n+1]} is below cfg.tol_tail.
    The reported ``tail_bound`` always refers to the plain truncation.

    ``tail_correction`` (tagged trigonometric polynomials without zero
    frequency only) adds the integral over [V, inf) mode by mode via
    :func:`spectral_tail`.
    With ``full_output`` returns ``(G, info)``.
    """
    if g.domain != WHOLE:
        raise ValueError("infinite_convolution needs a whole-line function")
    cfg = cfg or ConvolutionConfig()
    adm = admissibility(cfg.p, spec)
    if not adm:
        raise AdmissibilityError(adm.reason)
    s_norm = stepanov_norm(g, cfg.p)
    if cfg.v_tail_cut is None:
        V, bound = required_tail_cut(spec, s_norm, cfg.tol_tail)
    else:
        V = cfg.v_tail_cut
        bound = tail_bound_at(spec, s_norm, V)
    k_v = steps(V, g.dt, exact=False)
    V = k_v * g.dt
    m_out = g.m - k_v if t_out is None else steps(t_out, g.dt, exact=False)
    if m_out < 1 or m_out + k_v > g.m:
        need = V + (m_out * g.dt if t_out is not None else g.dt)
        raise TailBoundError(
            f"window half-length {g.t_max} too short: tail cut V={V:g} needs at least {need:g}",
            required_window=need)
    lw = kernel_lag_weights(spec, g.dt, k_v, cfg.v_singular_cut)
    lo = g.m - m_out - k_v
    seg = g.values[lo:g.m + m_out + 1]
    out = _apply_weights(seg, lw.weights)
    spec_out = None
    if tail_correction:
        if g.spectrum is None:
            raise ValueError("tail_correction needs a tagged trigonometric polynomial")
        freqs = np.asarray(g.spectrum[0], dtype=float)
        if np.any(freqs == 0):
            raise ValueError("tail_correction needs nonzero frequencies")
    if g.spectrum is not None:
        freqs, coeffs = g.spectrum
        mult = transfer(lw.weights, g.dt, freqs)
        if tail_correction and freqs.size:
            tail = spectral_tail(spec, V, freqs)
            t = (np.arange(out.shape[0]) - m_out) * g.dt
            for w, c, a in zip(freqs, coeffs, tail):
                out = out + (a * np.exp(1j * w * t))[:, None] * c[None, :]
            mult = mult + tail
        spec_out = (freqs, coeffs * mult[:, None])
    G = SampledFunction(WHOLE, g.dt, out, spec_out)
    if not full_output:
        return G
    info = {"tail_bound": bound, "v_tail_cut": V, "v_singular_cut": lw.k_cut * g.dt,
            "stepanov_norm": s_norm, "C_kernel": kernel_constant(spec, cfg.p),
            "n_lags": int(k_v + 1), "dt": g.dt, "p": cfg.p,
            "tail_correction": bool(tail_correction)}
    info["sup_bound"] = info["C_kernel"] * s_norm
    return G, info


def _finite(weights: LagWeights, h: SampledFunction) -> np.ndarray:
    n = h.n
    w = weights.weights[:n]
    full = signal.fftconvolve(h.values, w[:, None], mode="full", axes=0)[:n]
    out = full - weights.end_corr[:n, None] * h.values[0][None, :]
    out[0] = 0.0
    return out


def finite_convolution(spec: KernelSpec, h: SampledFunction, t_max: Optional[float] = None,
                       cfg: Optional[ConvolutionConfig] = None) -> SampledFunction:
    """H(t) = int_0^t R(t - s) h(s) ds on [0, t_max] (default: h's window)."""
    if h.domain != HALF:
        raise ValueError("finite_convolution needs a half-line function")
    cfg = cfg or ConvolutionConfig()
    if t_max is not None:
        h = h.restrict(t_max)
    lw = kernel_lag_weights(spec, h.dt, h.n - 1, cfg.v_singular_cut, halve_end=False)
    return SampledFunction(HALF, h.dt, _finite(lw, h))


# --------------------------------------------------------------------------
# Fractional derivatives
# --------------------------------------------------------------------------


def _central(values: np.ndarray, dt: float) -> np.ndarray:
    return (values[2:] - values[:-2]) / (2.0 * dt)


def _principal_power(freqs: np.ndarray, gamma: float) -> np.ndarray:
    return np.power(1j * freqs.astype(complex), gamma)


def weyl_liouville(u: SampledFunction, gamma_frac: float, mode: str = "auto",
                   v_tail: float = WEYL_V_TAIL, v_cut: float = DEFAULT_V_CUT) -> SampledFunction:
    """Weyl-Liouville derivative d/dt int_{-inf}^t g_{1-gamma}(t-s) u(s) ds.

    ``spectral`` multiplies each mode e^{i w t} by (i w)^gamma and needs a
    tagged trigonometric polynomial without zero frequency. ``quadrature``
    truncates the kernel at ``v_tail``, adds g_{1-gamma}(V) U(t - V) for the
    rest (U an antiderivative of u) and takes central differences; its
    output window is shorter than u's by v_tail + dt.
    """
    if not 0 < gamma_frac <= 1:
        raise ValueError("gamma_frac must lie in (0, 1]")
    if u.domain != WHOLE:
        raise ValueError("weyl_liouville needs a whole-line function")
    if mode == "auto":
        mode = "spectral" if u.spectrum is not None else "quadrature"
    if mode == "spectral":
        if u.spectrum is None:
            raise ValueError("spectral mode needs a function tagged with its frequencies")
        freqs, coeffs = u.spectrum
        if np.any(freqs == 0) and np.any(np.abs(coeffs[freqs == 0]) > 0):
            raise ValueError("zero frequency present: the Weyl-Liouville integral diverges")
        mult = _principal_power(freqs, gamma_frac)
        new = coeffs * mult[:, None]
        t = u.t
        vals = np.zeros_like(u.values)
        for w, c in zip(freqs, new):
            vals += np.exp(1j * w * t)[:, None] * c[None, :]
        return SampledFunction(WHOLE, u.dt, vals, (freqs, new))
    if mode != "quadrature":
        raise ValueError(f"unknown mode {mode!r}")
    if u.spectrum is not None:
        freqs, coeffs = u.spectrum
        if np.any(freqs == 0) and np.any(np.abs(coeffs[freqs == 0]) > 0):
            raise ValueError("zero frequency present: the Weyl-Liouville integral diverges")
    if gamma_frac == 1.0:
        return SampledFunction(WHOLE, u.dt, _central(u.values, u.dt))
    zeta = 1.0 - gamma_frac
    k_v = steps(v_tail, u.dt, exact=False)
    m_phi = u.m - k_v
    if m_phi < 2:
        raise GridError(f"window {u.t_max} too short for v_tail={v_tail}")
    lw = _g_weights(zeta, u.dt, k_v, v_cut, halve_end=True)
    phi = _apply_weights(u.values, lw.weights)[:2 * m_phi + 1]
    U = _cumtrapz(u.values, u.dt)
    U = U - U.mean(axis=0)
    gV = float(rgamma(zeta)) * (k_v * u.dt) ** (zeta - 1.0)
    phi = phi + gV * U[:phi.shape[0]]
    return SampledFunction(WHOLE, u.dt, _central(phi, u.dt))


def caputo(u: SampledFunction, alpha: float, u0=None, atol: float = 1e-8,
           method: str = "exact", v_cut: float = DEFAULT_V_CUT) -> SampledFunction:
    """Caputo derivative d/dt [g_{1-alpha} * (u - u0)] on the half line.

    ``u0`` defaults to u(0); an explicit value must match u(0) within
    ``atol * (1 + |u0|)``.

    ``method='exact'`` differentiates the convolution of g_{1-alpha} with
    the piecewise-linear interpolant of u - u0 in closed form, which is
    exact for linear u. ``method='central'`` evaluates the convolution by
    quadrature and takes central differences (one-sided at the ends); the
    t^(1-alpha) behaviour near 0 then costs a few percent at t = dt.
    alpha = 1 is the ordinary derivative by central differences.
    """
    if u.domain != HALF:
        raise ValueError("caputo needs a half-line function")
    if not 0 < alpha <= 1:
        raise ValueError("alpha must lie in (0, 1]")
    if u.n < 3:
        raise GridError("caputo needs at least three grid points")
    first = u.values[0]
    if u0 is None:
        u0v = first
    else:
        u0v = np.broadcast_to(np.asarray(u0, dtype=complex), first.shape)
        if np.max(np.abs(first - u0v)) > atol * (1.0 + float(np.max(np.abs(u0v)))):
            raise ValueError(f"u(0)={first.tolist()} does not match u0={np.asarray(u0).tolist()}")
    w = u.values - u0v[None, :]
    if alpha == 1.0:
        return SampledFunction(HALF, u.dt, np.gradient(w, u.dt, axis=0, edge_order=2))
    if method == "exact":
        j = np.arange(u.n - 1, dtype=float)
        b = np.power(j + 1.0, 1.0 - alpha) - np.power(j, 1.0 - alpha)
        inc = np.diff(w, axis=0)
        acc = signal.fftconvolve(inc, b[:, None], mode="full", axes=0)[:u.n - 1]
        out = np.zeros_like(w)
        out[1:] = acc / (gamma_fn(2.0 - alpha) * u.dt ** alpha)
        return SampledFunction(HALF, u.dt, out)
    if method != "central":
        raise ValueError(f"unknown method {method!r}")
    lw = _g_weights(1.0 - alpha, u.dt, u.n - 1, v_cut, halve_end=False)
    psi = _finite(lw, SampledFunction(HALF, u.dt, w))
    return SampledFunction(HALF, u.dt, np.gradient(psi, u.dt, axis=0, edge_order=2))


def caputo_power_oracle(alpha: float, t) -> np.ndarray:
    """Caputo derivative of u(t) = t: t^(1-alpha) / Gamma(2-alpha)."""
    return np.power(np.asarray(t, dtype=float), 1.0 - alpha) / gamma_fn(2.0 - alpha)
