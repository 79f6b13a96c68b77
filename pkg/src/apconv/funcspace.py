"""Sampled locally p-integrable functions and the Stepanov / Besicovitch estimators."""

from __future__ import annotations

import csv
import io
import math
import os
import tempfile
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

WHOLE = "whole-line"
HALF = "half-line"
DEFAULT_RTOL = 1e-3
DEFAULT_LEVELS = 12


class GridError(ValueError):
    """A requested window, shift or schedule does not fit the stored grid."""


class CSVFormatError(ValueError):
    def __init__(self, row: int, message: str):
        super().__init__(f"row {row}: {message}")
        self.row = row


@dataclass(frozen=True)
class Grid:
    """Uniform grid: ``[-t_max, t_max]`` (whole line) or ``[0, t_max]`` (half line)."""

    domain: str
    t_max: float
    dt: float

    def __post_init__(self):
        if self.domain not in (WHOLE, HALF):
            raise ValueError(f"domain must be {WHOLE!r} or {HALF!r}")
        if not self.dt > 0 or not self.t_max > 0:
            raise ValueError("grid needs dt > 0 and t_max > 0")

    @property
    def m(self) -> int:
        return int(round(self.t_max / self.dt))

    def times(self) -> np.ndarray:
        if self.domain == WHOLE:
            return np.arange(-self.m, self.m + 1) * self.dt
        return np.arange(0, self.m + 1) * self.dt


def whole_line(t_max: float, dt: float) -> Grid:
    return Grid(WHOLE, t_max, dt)


def half_line(t_max: float, dt: float) -> Grid:
    return Grid(HALF, t_max, dt)


@dataclass(frozen=True, eq=False)
class SampledFunction:
    """Vector-valued function sampled on a uniform grid.

    ``values`` has shape ``(n, d)``. Whole-line functions are stored on a
    symmetric window, so ``n`` is odd and index ``(n - 1) // 2`` is t = 0.
    ``spectrum`` optionally records ``(freqs, coeffs)`` when the samples are
    an exact trigonometric polynomial.
    """

    domain: str
    dt: float
    values: np.ndarray
    spectrum: Optional[tuple] = field(default=None, repr=False)

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=complex)
        if vals.ndim == 1:
            vals = vals[:, None]
        if vals.ndim != 2 or vals.shape[0] == 0 or vals.shape[1] == 0:
            raise ValueError("values must be a nonempty (n, d) array")
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.domain not in (WHOLE, HALF):
            raise ValueError(f"unknown domain {self.domain!r}")
        if self.domain == WHOLE and vals.shape[0] % 2 == 0:
            raise ValueError("whole-line samples must sit on a symmetric window (odd length)")
        if not np.all(np.isfinite(vals)):
            raise ValueError("values must be finite")
        vals = vals.copy()
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    # -- grid ------------------------------------------------------------
    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def d(self) -> int:
        return self.values.shape[1]

    @property
    def m(self) -> int:
        """Index of t = 0 on whole-line grids, number of steps to t_max on half-line grids."""
        return (self.n - 1) // 2 if self.domain == WHOLE else self.n - 1

    @property
    def t0(self) -> float:
        return -self.m * self.dt if self.domain == WHOLE else 0.0

    @property
    def t_max(self) -> float:
        return self.m * self.dt

    @property
    def zero_index(self) -> int:
        return self.m if self.domain == WHOLE else 0

    @property
    def t(self) -> np.ndarray:
        if self.domain == WHOLE:
            return np.arange(-self.m, self.m + 1) * self.dt
        return np.arange(self.n) * self.dt

    def norms(self) -> np.ndarray:
        """Pointwise Euclidean norm ||f(t)||."""
        if self.d == 1:
            return np.abs(self.values[:, 0])
        return np.sqrt(np.sum(np.abs(self.values) ** 2, axis=1))

    # -- construction helpers -------------------------------------------
    def with_values(self, values, spectrum=None) -> "SampledFunction":
        return SampledFunction(self.domain, self.dt, values, spectrum)

    def scaled(self, c: complex) -> "SampledFunction":
        spec = None
        if self.spectrum is not None:
            spec = (self.spectrum[0], self.spectrum[1] * c)
        return self.with_values(self.values * c, spec)

    def __add__(self, other: "SampledFunction") -> "SampledFunction":
        _check_same_grid(self, other)
        return self.with_values(self.values + other.values)

    def __sub__(self, other: "SampledFunction") -> "SampledFunction":
        _check_same_grid(self, other)
        return self.with_values(self.values - other.values)

    def restrict(self, t_max: float) -> "SampledFunction":
        """Restrict to the window of half-length (or length) ``t_max``."""
        k = steps(t_max, self.dt, what="t_max", exact=False)
        if k > self.m:
            raise GridError(f"cannot restrict to t_max={t_max}: stored window is {self.t_max}")
        if self.domain == WHOLE:
            vals = self.values[self.m - k:self.m + k + 1]
        else:
            vals = self.values[:k + 1]
        return self.with_values(vals, self.spectrum)

    def half(self) -> "SampledFunction":
        """Restriction of a whole-line function to [0, t_max]."""
        if self.domain == HALF:
            return self
        return SampledFunction(HALF, self.dt, self.values[self.m:], self.spectrum)


def _check_same_grid(a: SampledFunction, b: SampledFunction) -> None:
    if a.domain != b.domain or a.n != b.n or a.dt != b.dt or a.d != b.d:
        raise GridError("functions live on different grids")


def steps(x: float, dt: float, what: str = "value", exact: bool = True) -> int:
    """Convert a length to an integer number of grid steps.

    With ``exact`` the length must be an integer multiple of ``dt`` (up to
    rounding noise); otherwise it is floored onto the grid.
    """
    r = x / dt
    k = int(round(r))
    if abs(r - k) <= 1e-9 * max(1.0, abs(r)):
        return k
    if exact:
        raise GridError(f"{what}={x} is not an integer multiple of dt={dt}")
    return int(math.floor(r))


def sample(fn: Callable[[np.ndarray], np.ndarray], grid: Grid) -> SampledFunction:
    """Sample a vectorized callable on ``grid``."""
    t = grid.times()
    return SampledFunction(grid.domain, grid.dt, np.asarray(fn(t)))


def shift(f: SampledFunction, n_steps: int) -> SampledFunction:
    """Translate: result(t) = f(t + n_steps * dt).

    Whole-line results live on the largest symmetric window that stays
    inside the stored data; half-line shifts must be non-negative.
    """
    k = int(n_steps)
    spec = None
    if f.spectrum is not None:
        freqs, coeffs = f.spectrum
        spec = (freqs, coeffs * np.exp(1j * freqs * k * f.dt)[:, None])
    if f.domain == WHOLE:
        mm = f.m - abs(k)
        if mm < 0:
            raise GridError("shift exceeds the stored window")
        lo = f.m - mm + k
        return SampledFunction(WHOLE, f.dt, f.values[lo:lo + 2 * mm + 1], spec)
    if k < 0:
        raise GridError("half-line functions only admit non-negative shifts")
    if k >= f.n:
        raise GridError("shift exceeds the stored window")
    return SampledFunction(HALF, f.dt, f.values[k:], spec)


# --------------------------------------------------------------------------
# Generators
# --------------------------------------------------------------------------


def make_trig_polynomial(freqs: Sequence[float], coeffs, grid: Grid) -> SampledFunction:
    """Samples of sum_k c_k exp(i w_k t); ``coeffs`` is (m,) or (m, d)."""
    freqs = np.asarray(freqs, dtype=float).ravel()
    coeffs = np.asarray(coeffs, dtype=complex)
    if freqs.size == 0:
        d = coeffs.shape[1] if coeffs.ndim == 2 else 1
        t = grid.times()
        return SampledFunction(grid.domain, grid.dt, np.zeros((t.size, d), dtype=complex),
                               (freqs, np.zeros((0, d), dtype=complex)))
    if coeffs.ndim == 1:
        coeffs = coeffs[:, None]
    if coeffs.shape[0] != freqs.size:
        raise ValueError("freqs and coeffs must have the same length")
    t = grid.times()
    vals = np.zeros((t.size, coeffs.shape[1]), dtype=complex)
    for w, c in zip(freqs, coeffs):
        vals += np.exp(1j * w * t)[:, None] * c[None, :]
    return SampledFunction(grid.domain, grid.dt, vals, (freqs, coeffs))


def spike_profile(t, p: float = 2.0) -> np.ndarray:
    """Analytic shrinking spikes: height |n|, width |n|^(-2p), centred at each integer n != 0."""
    t = np.asarray(t, dtype=float)
    n = np.round(t)
    a = np.abs(n)
    with np.errstate(divide="ignore"):
        width = np.where(a > 0, a ** (-2.0 * p), 0.0)
    inside = (a > 0) & (np.abs(t - n) <= width / 2)
    return np.where(inside, a, 0.0)


def _spike_samples(grid: Grid, p: float) -> np.ndarray:
    # Each cell value carries the exact L^p mass of the spike inside the cell:
    # v_j = ((1/dt) int_cell |q|^p)^(1/p). Resolved spikes keep their height.
    t = grid.times()
    dt = grid.dt
    vals = np.zeros(t.size)
    nmax = int(math.floor(grid.t_max + 0.5))
    centers = np.arange(1, nmax + 1, dtype=float)
    if grid.domain == WHOLE:
        centers = np.concatenate([-centers[::-1], centers])
    i0 = 0 if grid.domain == HALF else grid.m
    for c in centers:
        a = abs(c)
        w = a ** (-2.0 * p)
        lo, hi = c - w / 2, c + w / 2
        j_lo = int(math.floor((lo + dt / 2) / dt))
        j_hi = int(math.floor((hi + dt / 2) / dt))
        for j in range(j_lo, j_hi + 1):
            idx = j + i0
            if idx < 0 or idx >= t.size:
                continue
            cell_lo, cell_hi = j * dt - dt / 2, j * dt + dt / 2
            overlap = max(0.0, min(hi, cell_hi) - max(lo, cell_lo))
            if overlap > 0:
                vals[idx] = (vals[idx] ** p + a ** p * overlap / dt) ** (1.0 / p)
    return vals


def make_vanishing(kind: str, grid: Grid, p: float = 2.0) -> SampledFunction:
    """Besicovitch p-vanishing test functions.

    ``reciprocal-decay``: q(t) = 1 / (1 + |t|).
    ``shrinking-spikes``: spikes of height n and width n^(-2p) at the
    integers; Stepanov p-bounded, Besicovitch p-vanishing, and pointwise
    unbounded as long as the grid resolves the spikes.
    """
    if kind == "reciprocal-decay":
        return sample(lambda t: 1.0 / (1.0 + np.abs(t)), grid)
    if kind == "shrinking-spikes":
        return SampledFunction(grid.domain, grid.dt, _spike_samples(grid, p))
    raise ValueError(f"unknown vanishing kind {kind!r}")


# --------------------------------------------------------------------------
# Estimators
# --------------------------------------------------------------------------


@dataclass
class SeminormEstimate:
    """Limsup surrogate: max of the window means over the tail half of the schedule."""

    value: float
    schedule: list           # (T_k, A_k) pairs
    converged: bool
    p: float
    rtol: float = DEFAULT_RTOL

    def to_dict(self) -> dict:
        return {"value": self.value, "schedule": [[float(a), float(b)] for a, b in self.schedule],
                "converged": self.converged, "p": self.p, "rtol": self.rtol}


def geometric_schedule(t_top: float, levels: int = DEFAULT_LEVELS) -> np.ndarray:
    """T_k = t_top * 2^(k - K), k = 1..K."""
    k = np.arange(1, levels + 1)
    return t_top * 2.0 ** (k - levels)


def _cumtrapz(y: np.ndarray, dt: float) -> np.ndarray:
    out = np.empty(y.shape, dtype=np.result_type(y, float))
    out[0] = 0
    np.cumsum((y[1:] + y[:-1]) * (dt / 2.0), axis=0, out=out[1:])
    return out


def window_means(f: SampledFunction, p: float, schedule) -> tuple:
    """Snapped windows and the raw means of ||f||^p over them (no p-th root)."""
    sched = np.asarray(schedule, dtype=float)
    if sched.size == 0 or np.any(np.diff(sched) <= 0) or sched[0] <= 0:
        raise GridError("schedule must be a nonempty increasing sequence of positive reals")
    ks = np.array([steps(T, f.dt, exact=False) for T in sched])
    if ks.max() > f.m:
        raise GridError(f"schedule maximum {sched.max()} exceeds the stored window {f.t_max}")
    if ks.min() < 1:
        raise GridError("schedule entries must span at least one grid step")
    y = f.norms() ** p
    z = f.zero_index
    lo = z - ks if f.domain == WHOLE else np.zeros_like(ks)
    hi = z + ks
    # per-window pairwise sums; cumulative-sum differences drift on long grids
    means = np.array([(np.sum(y[a:b + 1]) - 0.5 * (y[a] + y[b])) / (b - a)
                      for a, b in zip(lo, hi)])
    return ks * f.dt, means


def tail_max(values: np.ndarray) -> float:
    k = len(values)
    return float(np.max(values[k // 2:]))


def _estimate(T: np.ndarray, A: np.ndarray, p: float, rtol: float) -> SeminormEstimate:
    value = tail_max(A)
    if len(A) >= 2:
        prev = tail_max(A[:-1])
        converged = abs(value - prev) < rtol * (1.0 + value)
    else:
        converged = False
    return SeminormEstimate(value=value, schedule=list(zip(T.tolist(), A.tolist())),
                            converged=bool(converged), p=p, rtol=rtol)


def besicovitch_seminorm(f: SampledFunction, p: float = 2.0, schedule=None,
                         rtol: float = DEFAULT_RTOL) -> SeminormEstimate:
    """Windowed p-means A_k = ((1/|W_k|) int_{W_k} ||f||^p)^(1/p) and their tail max.

    ``W_k = [-T_k, T_k]`` on the whole line and ``[0, T_k]`` on the half
    line; ``schedule`` defaults to a 12-level geometric schedule ending at
    the stored window.
    """
    if p < 1:
        raise ValueError("p must be >= 1")
    if schedule is None:
        schedule = geometric_schedule(f.t_max)
        # short windows: drop levels finer than the grid
        schedule = schedule[schedule >= f.dt]
    T, means = window_means(f, p, schedule)
    return _estimate(T, np.power(np.maximum(means, 0.0), 1.0 / p), p, rtol)


def stepanov_norm(f: SampledFunction, p: float = 2.0) -> float:
    """sup over unit windows [t, t+1] inside the stored window of (int ||f||^p)^(1/p)."""
    if p < 1:
        raise ValueError("p must be >= 1")
    w = int(round(1.0 / f.dt))
    if w < 1 or w >= f.n:
        raise GridError("stored window is shorter than 1")
    c = _cumtrapz(f.norms() ** p, f.dt)
    sums = c[w:] - c[:-w]
    return float(np.max(np.maximum(sums, 0.0)) ** (1.0 / p))


# --------------------------------------------------------------------------
# CSV
# --------------------------------------------------------------------------


def _fmt(x: float) -> str:
    return repr(float(x)) if x != 0 else "0.0"


def to_csv_text(f: SampledFunction) -> str:
    buf = io.StringIO()
    header = ["t"]
    for j in range(1, f.d + 1):
        header += [f"re_{j}", f"im_{j}"]
    buf.write(",".join(header) + "\n")
    t = f.t
    re = f.values.real
    im = f.values.imag
    for i in range(f.n):
        row = [_fmt(t[i])]
        for j in range(f.d):
            row.append(_fmt(re[i, j]))
            row.append(_fmt(im[i, j]))
        buf.write(",".join(row) + "\n")
    return buf.getvalue()


def write_csv(f: SampledFunction, path) -> None:
    atomic_write_text(path, to_csv_text(f))


def atomic_write_text(path, text: str) -> None:
    path = os.fspath(path)
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", text=True)
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _infer_dt(t: np.ndarray, domain: str) -> float:
    n = t.size
    span = t[-1] - t[0]
    est = span / (n - 1)
    candidates = [float(f"{est:.15g}"), est, t[1] - t[0]]
    for dt in candidates:
        if dt <= 0:
            continue
        if domain == WHOLE:
            m = (n - 1) // 2
            grid = np.arange(-m, m + 1) * dt
        else:
            grid = np.arange(n) * dt
        if np.array_equal(grid, t):
            return dt
    # not bit-reproducible; accept if uniform to rounding noise
    if np.max(np.abs(np.diff(t) - est)) > 1e-6 * est:
        raise CSVFormatError(int(np.argmax(np.abs(np.diff(t) - est))) + 2,
                             "grid is not uniform")
    return est


def parse_csv_text(text: str) -> SampledFunction:
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise CSVFormatError(0, "empty file") from None
    header = [h.strip() for h in header]
    if not header or header[0] != "t" or len(header) < 3 or (len(header) - 1) % 2:
        raise CSVFormatError(0, "header must be t,re_1,im_1,...,re_d,im_d")
    d = (len(header) - 1) // 2
    for j in range(d):
        if header[1 + 2 * j] != f"re_{j + 1}" or header[2 + 2 * j] != f"im_{j + 1}":
            raise CSVFormatError(0, f"unexpected column names {header[1 + 2 * j:3 + 2 * j]}")
    rows = []
    for rowno, row in enumerate(reader, start=1):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != len(header):
            raise CSVFormatError(rowno, f"expected {len(header)} fields, got {len(row)}")
        try:
            nums = [float(c) for c in row]
        except ValueError:
            raise CSVFormatError(rowno, "unparseable number") from None
        if not all(math.isfinite(x) for x in nums):
            raise CSVFormatError(rowno, "non-finite value")
        rows.append(nums)
    if len(rows) < 2:
        raise CSVFormatError(len(rows), "need at least two grid points")
    arr = np.array(rows)
    t = arr[:, 0]
    if np.any(np.diff(t) <= 0):
        bad = int(np.argmax(np.diff(t) <= 0)) + 2
        raise CSVFormatError(bad, "t must be strictly increasing")
    if t[0] == 0.0:
        domain = HALF
    elif t[0] < 0 and t.size % 2 == 1 and t[t.size // 2] == 0.0:
        domain = WHOLE
    else:
        raise CSVFormatError(1, "grid must start at 0 (half line) or be symmetric about 0")
    dt = _infer_dt(t, domain)
    vals = arr[:, 1::2] + 1j * arr[:, 2::2]
    return SampledFunction(domain, dt, vals)


def read_csv(path) -> SampledFunction:
    with open(path, newline="") as fh:
        return parse_csv_text(fh.read())
