"""Special functions behind fractional resolvent kernels.

Gamma (Lanczos), the Riemann-Liouville kernel ``g_zeta``, the two-parameter
Mittag-Leffler function, the scalar resolvent families and the kernel
envelope fit.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

# Lanczos coefficients, g = 7, n = 9.
_LANCZOS_G = 7.0
_LANCZOS_COEF = np.array([
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
])
_HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)

KERNEL_KINDS = ("envelope", "resolvent", "exponential", "custom-sampled")


class DomainError(ValueError):
    """Argument outside the domain of a special function."""


def _lanczos_sum(x: np.ndarray) -> np.ndarray:
    # x is the shifted argument (original argument minus one)
    acc = np.full_like(x, _LANCZOS_COEF[0])
    for i in range(1, len(_LANCZOS_COEF)):
        acc = acc + _LANCZOS_COEF[i] / (x + i)
    return acc


def _lgamma_pos(x: np.ndarray) -> np.ndarray:
    """log Gamma for x >= 0.5 (vectorized)."""
    xm = x - 1.0
    t = xm + _LANCZOS_G + 0.5
    return _HALF_LOG_2PI + (xm + 0.5) * np.log(t) - t + np.log(_lanczos_sum(xm))


def _gamma_array(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    small = x < 0.5
    big = ~small
    if np.any(big):
        out[big] = np.exp(_lgamma_pos(x[big]))
    if np.any(small):
        xs = x[small]
        with np.errstate(divide="ignore", invalid="ignore"):
            out[small] = math.pi / (np.sin(math.pi * xs) * np.exp(_lgamma_pos(1.0 - xs)))
    return out


def rgamma(x) -> np.ndarray:
    """Reciprocal Gamma, exactly zero at the poles 0, -1, -2, ..."""
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    pole = (x <= 0) & (x == np.round(x))
    pos = (x >= 0.5) & ~pole
    neg = ~pos & ~pole
    out[pole] = 0.0
    if np.any(pos):
        lg = _lgamma_pos(x[pos])
        out[pos] = np.exp(-lg)
    if np.any(neg):
        xs = x[neg]
        # 1/Gamma(x) = sin(pi x) Gamma(1-x) / pi
        out[neg] = np.sin(math.pi * xs) * np.exp(_lgamma_pos(1.0 - xs)) / math.pi
    return out


def gamma_fn(x: float) -> float:
    """Euler Gamma function for x > 0 via the Lanczos approximation."""
    x = float(x)
    if not x > 0 or not math.isfinite(x):
        raise DomainError(f"gamma_fn requires a finite x > 0, got {x!r}")
    if x > 171.6:
        return math.inf
    return float(_gamma_array(np.array([x]))[0])


def g_kernel(zeta: float, t):
    """Riemann-Liouville kernel t^(zeta-1) / Gamma(zeta).

    Accepts a scalar or an array of ``t``. At ``t = 0`` the kernel is the
    limit value (1 for zeta = 1, 0 for zeta > 1); for zeta < 1 the kernel
    is singular there and a :class:`DomainError` is raised.
    """
    if not zeta > 0:
        raise DomainError(f"zeta must be positive, got {zeta!r}")
    arr = np.asarray(t, dtype=float)
    if np.any(arr < 0) or (zeta < 1 and np.any(arr == 0)):
        raise DomainError("g_kernel: t must be > 0 (>= 0 when zeta >= 1)")
    with np.errstate(divide="ignore"):
        out = np.power(arr, zeta - 1.0) * (1.0 / gamma_fn(zeta))
    if zeta == 1.0:
        out = np.full_like(arr, 1.0)
    return float(out) if np.ndim(t) == 0 else out


# --------------------------------------------------------------------------
# Mittag-Leffler function
# --------------------------------------------------------------------------

_SERIES_RADIUS = 1.0       # series used for |z| <= this on the negative axis
_ASYM_MIN_X = 20.0
_ASYM_TERMS = 40
_ASYM_RTOL = 1e-15
_ACCURACY_RTOL = 1e-8


def _series(alpha: float, beta: float, z: complex, kmax: int = 4000):
    """Truncated power series; returns (value, absolute-sum) for a cancellation check."""
    if z == 0:
        r = float(rgamma(np.array([beta]))[0])
        return complex(r), abs(r)
    args = alpha * np.arange(kmax) + beta
    lg = np.where(args > 170, 0.0, 0.0)
    big = args > 170
    lg[big] = _lgamma_pos(args[big])
    lg[~big] = -np.log(rgamma(args[~big]))
    logz = cmath.log(z)
    total = 0.0 + 0.0j
    abs_total = 0.0
    small_run = 0
    peak = abs(z) ** (1.0 / alpha)
    for k in range(kmax):
        expo = k * logz - lg[k]
        if expo.real > 700:
            return complex(math.inf, 0.0), math.inf
        term = cmath.exp(expo)
        total += term
        abs_total += abs(term)
        if abs(term) <= 1e-17 * max(abs(total), 1e-300) and k * alpha > peak:
            small_run += 1
            if small_run >= 3:
                break
        else:
            small_run = 0
    return total, abs_total


def _series_real_neg(alpha: float, beta: float, x: np.ndarray) -> np.ndarray:
    """Series for E_{alpha,beta}(-x), 0 <= x <= _SERIES_RADIUS (vectorized)."""
    kmax = 80
    while kmax < 4000 and float(rgamma(np.array([alpha * kmax + beta]))[0]) > 1e-19:
        kmax *= 2
    coef = rgamma(alpha * np.arange(kmax) + beta)
    out = np.zeros_like(x)
    # Horner in -x keeps the loop short and stable for |x| <= 1.
    for c in coef[::-1]:
        out = out * (-x) + c
    return out


def _strip_step(alpha: float) -> float:
    d = min((1.0 - alpha) * math.pi, alpha * math.pi / 2.0)
    return d / 6.0


def _integral_real_neg(alpha: float, beta: float, x: np.ndarray, chunk: int = 4096) -> np.ndarray:
    """E_{alpha,beta}(-x) for 0 < alpha < 1, 0 < beta <= 1 by a trapezoid rule
    in log-radius on the real-line integral representation.

    The integrand is analytic in a strip around the real axis so the
    trapezoid rule converges geometrically in the step.
    """
    h = _strip_step(alpha)
    y = np.arange(-45.0, alpha * math.log(50.0) + h, h)
    r = np.exp(y)
    s1 = math.sin(math.pi * (1.0 - beta))
    s2 = math.sin(math.pi * (1.0 - beta + alpha))
    c = math.cos(alpha * math.pi)
    base = (h / (alpha * math.pi)) * np.power(r, (1.0 - beta) / alpha + 1.0) * np.exp(-np.power(r, 1.0 / alpha))
    out = np.empty_like(x)
    for start in range(0, x.size, chunk):
        xs = x[start:start + chunk, None]
        num = r * s1 + xs * s2
        den = r * r + 2.0 * r * xs * c + xs * xs
        out[start:start + chunk] = (base * num / den).sum(axis=1)
    return out


def _asymptotic_real_neg(alpha: float, beta: float, x: np.ndarray):
    """Truncated large-|z| expansion; returns (values, ok-mask).

    Truncation is chosen on the envelope Gamma(alpha k + 1 - beta) x^-k / pi,
    which bounds every term and is immune to coefficients that happen to
    vanish near a pole of Gamma.
    """
    k = np.arange(1, _ASYM_TERMS + 1)
    coef = rgamma(beta - alpha * k)
    log_env = _lgamma_pos(np.maximum(alpha * k + 1.0 - beta, 0.5)) - math.log(math.pi)
    logx = np.log(x)[:, None]
    env = log_env[None, :] - k[None, :] * logx
    j = np.argmin(env, axis=1)
    powers = np.exp(-k[None, :] * logx) * (-1.0) ** k[None, :]
    mask = k[None, :] <= j[:, None]          # terms 1..j (k is 1-based, j index 0-based)
    vals = np.sum(np.where(mask, -coef[None, :] * powers, 0.0), axis=1)
    err = np.exp(env[np.arange(x.size), j])
    ok = (j > 0) & (vals != 0) & (err <= _ASYM_RTOL * np.abs(vals))
    return vals, ok


def _ml_neg_base(alpha: float, beta: float, x: np.ndarray) -> np.ndarray:
    """E_{alpha,beta}(-x) for 0<alpha<1, 0<beta<=1, x >= 0."""
    out = np.empty_like(x)
    small = x <= _SERIES_RADIUS
    if np.any(small):
        out[small] = _series_real_neg(alpha, beta, x[small])
    rest = ~small
    if np.any(rest):
        idx = np.nonzero(rest)[0]
        xr = x[idx]
        vals = np.empty_like(xr)
        todo = np.ones(xr.shape, dtype=bool)
        far = xr >= _ASYM_MIN_X
        if np.any(far):
            av, aok = _asymptotic_real_neg(alpha, beta, xr[far])
            far_idx = np.nonzero(far)[0]
            vals[far_idx[aok]] = av[aok]
            todo[far_idx[aok]] = False
        if np.any(todo):
            vals[todo] = _integral_real_neg(alpha, beta, xr[todo])
        out[idx] = vals
    return out


def ml_negative_real(alpha: float, beta: float, x) -> np.ndarray:
    """Vectorized E_{alpha,beta}(-x) for x >= 0 and 0 < alpha <= 1, beta > 0.

    This is the fast path behind the resolvent kernels. For alpha = 1 only
    beta in {1, 2} is exact; other cases go through :func:`mittag_leffler`.
    """
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise DomainError("ml_negative_real expects x >= 0")
    if alpha == 1.0:
        if beta == 1.0:
            return np.exp(-x)
        if beta == 2.0:
            with np.errstate(invalid="ignore", divide="ignore"):
                out = -np.expm1(-x) / x
            return np.where(x == 0, 1.0, out)
        flat = [mittag_leffler(alpha, beta, -xi).real for xi in x.ravel()]
        return np.array(flat).reshape(x.shape)
    if not 0 < alpha < 1:
        raise DomainError("ml_negative_real supports 0 < alpha <= 1")
    if beta <= 1.0:
        return _ml_neg_base(alpha, beta, x.ravel()).reshape(x.shape)
    # E_{a,b}(z) = (E_{a,b-a}(z) - 1/Gamma(b-a)) / z lowers beta into (0, 1]
    xf = x.ravel()
    out = np.empty_like(xf)
    small = xf <= _SERIES_RADIUS
    if np.any(small):
        out[small] = _series_real_neg(alpha, beta, xf[small])
    big = ~small
    if np.any(big):
        lower = ml_negative_real(alpha, beta - alpha, xf[big])
        out[big] = (lower - float(rgamma(np.array([beta - alpha]))[0])) / (-xf[big])
    return out.reshape(x.shape)


def mittag_leffler(alpha: float, beta: float, z, full_output: bool = False):
    """Two-parameter Mittag-Leffler function E_{alpha,beta}(z).

    Parameters
    ----------
    alpha, beta : float
        Positive parameters.
    z : real or complex scalar
    full_output : bool
        If True return ``(value, accurate)`` where ``accurate`` is False when
        the evaluation regime does not guarantee a relative error of 1e-8.

    Notes
    -----
    On the negative real axis with 0 < alpha < 1 the value comes from the
    power series near the origin, an integral representation in the middle
    range and the asymptotic expansion far out. Elsewhere the series is
    summed directly and its cancellation ratio decides the accuracy flag.
    """
    if not (alpha > 0 and beta > 0):
        raise DomainError("mittag_leffler requires alpha > 0 and beta > 0")
    zc = complex(z)
    accurate = True
    if alpha == 1.0 and beta == 1.0:
        value = cmath.exp(zc)
    elif zc.imag == 0 and zc.real <= 0 and 0 < alpha < 1 and alpha <= 0.99:
        value = complex(ml_negative_real(alpha, beta, np.array([-zc.real]))[0])
    elif zc.imag == 0 and zc.real <= 0 and alpha == 1.0 and beta == 2.0:
        value = complex(ml_negative_real(1.0, 2.0, np.array([-zc.real]))[0])
    else:
        value, abs_sum = _series(alpha, beta, zc)
        # each term carries ~1e-16 relative error; cancellation amplifies it
        scale = abs_sum / max(abs(value), 1e-300)
        accurate = scale * 1e-15 <= _ACCURACY_RTOL and math.isfinite(abs(value))
    if full_output:
        return value, accurate
    return value


# --------------------------------------------------------------------------
# Kernels
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class KernelSpec:
    """A convolution kernel and its envelope parameters.

    ``kind``:
      * ``envelope``: R(t) = M t^(beta-1) / (1 + t^gamma_decay)
      * ``resolvent``: R(t) = t^(gamma_frac-1) E_{g,g}(-lam t^gamma_frac)
      * ``exponential``: R(t) = M exp(-rate t)  (beta = 1)
      * ``custom-sampled``: values on a uniform lag grid, linear
        interpolation in between, zero past the last sample.
    """

    kind: str
    M: float = 1.0
    beta: float = 1.0
    gamma_decay: float = 2.0
    gamma_frac: Optional[float] = None
    lam: Optional[float] = None
    rate: float = 1.0
    samples: Optional[tuple] = field(default=None, repr=False)
    sample_dt: Optional[float] = None

    def __post_init__(self):
        if self.kind not in KERNEL_KINDS:
            raise ValueError(f"unknown kernel kind {self.kind!r}; expected one of {KERNEL_KINDS}")
        if not self.M > 0:
            raise ValueError("kernel constant M must be positive")
        if not 0 < self.beta <= 1:
            raise ValueError("beta must lie in (0, 1]")
        if self.kind == "resolvent":
            if self.gamma_frac is None or not 0 < self.gamma_frac <= 1:
                raise ValueError("resolvent kernel requires gamma_frac in (0, 1]")
            if self.lam is None or self.lam < 0:
                raise ValueError("resolvent kernel requires lam >= 0")
        else:
            if not self.gamma_decay > 1:
                raise ValueError("gamma_decay must exceed 1")
        if self.kind == "exponential" and not self.rate > 0:
            raise ValueError("exponential kernel requires rate > 0")
        if self.kind == "custom-sampled":
            if self.samples is None or self.sample_dt is None or not self.sample_dt > 0:
                raise ValueError("custom-sampled kernel requires samples and sample_dt > 0")

    @classmethod
    def envelope(cls, beta: float, gamma_decay: float, M: float = 1.0) -> "KernelSpec":
        return cls(kind="envelope", M=M, beta=beta, gamma_decay=gamma_decay)

    @classmethod
    def exponential(cls, rate: float = 1.0, M: float = 1.0, gamma_decay: float = 2.0) -> "KernelSpec":
        return cls(kind="exponential", M=M, beta=1.0, gamma_decay=gamma_decay, rate=rate)

    @classmethod
    def resolvent(cls, gamma_frac: float, lam: float) -> "KernelSpec":
        """Scalar resolvent kernel; beta = gamma_frac and gamma_decay = 2 gamma_frac
        reproduce the short- and long-time power laws of the kernel."""
        return cls(kind="resolvent", M=1.0, beta=gamma_frac, gamma_decay=2.0 * gamma_frac,
                   gamma_frac=gamma_frac, lam=lam)

    @classmethod
    def sampled(cls, values, sample_dt: float, beta: float = 1.0) -> "KernelSpec":
        return cls(kind="custom-sampled", beta=beta, samples=tuple(float(v) for v in values),
                   sample_dt=sample_dt)

    def __call__(self, t) -> np.ndarray:
        return kernel_values(self, t)

    @property
    def decay_exponent(self) -> float:
        """Power-law decay rate of |R(t)| as t -> infinity (inf for exponential decay)."""
        if self.kind == "envelope":
            return self.gamma_decay + 1.0 - self.beta
        if self.kind == "resolvent":
            if self.gamma_frac == 1.0 or self.lam == 0:
                return math.inf if self.gamma_frac == 1.0 else 1.0 - self.gamma_frac
            return 1.0 + self.gamma_frac
        return math.inf

    def to_dict(self) -> dict:
        d = {"kind": self.kind, "M": self.M, "beta": self.beta, "gamma_decay": self.gamma_decay}
        if self.kind == "resolvent":
            d.update(gamma_frac=self.gamma_frac, lam=self.lam)
        if self.kind == "exponential":
            d["rate"] = self.rate
        if self.kind == "custom-sampled":
            d.update(sample_dt=self.sample_dt, n_samples=len(self.samples))
        return d


def resolvent_kernel(spec: KernelSpec, t):
    """Scalar resolvent R_gamma(t; lam) = t^(gamma-1) E_{gamma,gamma}(-lam t^gamma)."""
    if spec.kind != "resolvent":
        raise ValueError("resolvent_kernel needs a KernelSpec of kind 'resolvent'")
    arr = np.asarray(t, dtype=float)
    if np.any(arr <= 0):
        raise DomainError("resolvent_kernel requires t > 0")
    g, lam = spec.gamma_frac, spec.lam
    if g == 1.0:
        out = np.exp(-lam * arr)
    elif lam == 0:
        out = np.power(arr, g - 1.0) / gamma_fn(g)
    else:
        out = np.power(arr, g - 1.0) * ml_negative_real(g, g, lam * np.power(arr, g))
    return float(out) if np.ndim(t) == 0 else out


def solution_family(gamma_frac: float, lam: float, t):
    """Scalar solution family S_gamma(t; lam) = E_gamma(-lam t^gamma), S(0) = 1."""
    if not 0 < gamma_frac <= 1:
        raise DomainError("gamma_frac must lie in (0, 1]")
    if lam < 0:
        raise DomainError("lam must be non-negative")
    arr = np.asarray(t, dtype=float)
    if np.any(arr < 0):
        raise DomainError("solution_family requires t >= 0")
    if gamma_frac == 1.0:
        out = np.exp(-lam * arr)
    else:
        out = ml_negative_real(gamma_frac, 1.0, lam * np.power(arr, gamma_frac))
    return float(out) if np.ndim(t) == 0 else out


def kernel_values(spec: KernelSpec, t) -> np.ndarray:
    """Evaluate R(t) for t > 0 (array in, array out)."""
    t = np.asarray(t, dtype=float)
    if spec.kind == "envelope":
        return spec.M * np.power(t, spec.beta - 1.0) / (1.0 + np.power(t, spec.gamma_decay))
    if spec.kind == "exponential":
        return spec.M * np.exp(-spec.rate * t)
    if spec.kind == "resolvent":
        return np.asarray(resolvent_kernel(spec, t), dtype=float)
    samples = np.asarray(spec.samples, dtype=float)
    grid = np.arange(samples.size) * spec.sample_dt
    return np.interp(t, grid, samples, right=0.0)


def kernel_regular_part(spec: KernelSpec, t) -> np.ndarray:
    """R(t) t^(1-beta): the bounded factor left after removing the singularity."""
    t = np.asarray(t, dtype=float)
    if spec.kind == "envelope":
        return spec.M / (1.0 + np.power(t, spec.gamma_decay))
    if spec.kind == "resolvent" and spec.gamma_frac < 1.0 and spec.beta == spec.gamma_frac:
        g = spec.gamma_frac
        if spec.lam == 0:
            return np.full_like(t, 1.0 / gamma_fn(g))
        return ml_negative_real(g, g, spec.lam * np.power(t, g))
    with np.errstate(divide="ignore", invalid="ignore"):
        out = kernel_values(spec, t) * np.power(t, 1.0 - spec.beta)
    return out


@dataclass
class EnvelopeFit:
    M_fit: float
    ok: bool
    beta: float
    gamma_decay: float
    argmax_t: float
    at_grid_end: bool
    m1: Optional[float] = None  # sup |R| t^(1-beta) on (0, 1]
    m2: Optional[float] = None  # sup |R| t^(1+gamma_frac) on [1, inf)

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def envelope_check(spec: KernelSpec, t_grid, beta: Optional[float] = None,
                   gamma_decay: Optional[float] = None) -> EnvelopeFit:
    """Smallest M with |R(t)| <= M t^(beta-1) / (1 + t^gamma_decay) on ``t_grid``.

    ``at_grid_end`` flags a maximizer at the largest grid point, i.e. the
    envelope may not hold beyond the sampled range. For resolvent kernels
    the two one-sided power bounds near zero and at infinity are fitted too.
    """
    t = np.asarray(t_grid, dtype=float).ravel()
    if t.size == 0 or np.any(t <= 0):
        raise ValueError("t_grid must be nonempty and strictly positive")
    b = spec.beta if beta is None else beta
    gd = spec.gamma_decay if gamma_decay is None else gamma_decay
    r = np.abs(kernel_values(spec, t))
    ratio = r * np.power(t, 1.0 - b) * (1.0 + np.power(t, gd))
    j = int(np.argmax(ratio))
    m_fit = float(ratio[j])
    fit = EnvelopeFit(M_fit=m_fit, ok=bool(np.isfinite(m_fit)), beta=b, gamma_decay=gd,
                      argmax_t=float(t[j]), at_grid_end=bool(t[j] == t.max() and t.size > 1))
    if spec.kind == "resolvent":
        near = t <= 1.0
        far = t >= 1.0
        if np.any(near):
            fit.m1 = float(np.max(r[near] * np.power(t[near], 1.0 - b)))
        if np.any(far):
            fit.m2 = float(np.max(r[far] * np.power(t[far], 1.0 + spec.gamma_frac)))
    return fit


def first_order_integrable(spec: KernelSpec) -> bool:
    """Whether int_0^inf (1 + t) |R(t)| dt < inf holds for the envelope.

    Only diagnostic: the convolution machinery never relies on it.
    """
    return spec.decay_exponent > 2.0
