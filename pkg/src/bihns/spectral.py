"""Fourier bases on the unit interval and truncated Sobolev norms.

Functions on (0,1) are represented by truncated series

    f(x) = p0 + sum_k p_k cos(k pi x) + sum_k q_k sin(k pi x),   k = 1..N,

which is simultaneously a function on the two-periodic extension cell [-1,1]
(sine part = odd reflection, cosine part = even reflection).  Two transform
conventions coexist in the boundary-value machinery and are kept strictly
apart here:

* ``sine_coefficients``  -- q_k = 2 * int_0^1 f sin(k pi x) dx  (full sine
  transform; used by the hinged/Navier pipeline).
* ``odd_even_extend``    -- q_k = int_0^1 f sin, p_k = int_0^1 f cos,
  p0 = int_0^1 f  (half-weight coefficients of the odd/even *split*
  f = f_o + f_e; used by the clamped/Dirichlet pipeline).

Boundary signals h(t) are almost-periodic series over the frequency lattice
{n pi^4} (period 2/pi^3), see ``BoundaryTrace``.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Sequence, Union

import numpy as np

SINE = "sine"
COSINE = "cosine"
MIXED = "mixed"

#: fundamental time frequency of boundary-trace series
TRACE_FREQ = np.pi ** 4
#: period of the trace lattice, 2*pi/pi^4
TRACE_PERIOD = 2.0 / np.pi ** 3

S_SPACE_MAX = 4.5  # working range of the spatial regularity index


@dataclass(frozen=True)
class SobolevIndex:
    """A regularity exponent together with the domain it refers to."""

    s: float
    domain: str = "space"  # "space" (interval (0,1)) or "time"

    def __post_init__(self):
        if self.domain not in ("space", "time"):
            raise ValueError(f"unknown Sobolev domain {self.domain!r}")
        if not np.isfinite(self.s) or self.s < 0:
            raise ValueError("regularity index must be finite and >= 0")
        if self.domain == "space" and self.s > S_SPACE_MAX:
            raise ValueError(f"spatial regularity limited to s <= {S_SPACE_MAX}")


def _as_c128(a, n=None):
    arr = np.atleast_1d(np.asarray(a, dtype=np.complex128))
    if n is not None and arr.shape != (n,):
        raise ValueError("coefficient arrays must share length N")
    return arr


@dataclass(frozen=True)
class FourierState:
    """Immutable truncated series state at one time stamp.

    ``q`` holds sine coefficients q_1..q_N, ``p`` cosine coefficients
    p_1..p_N and ``p0`` the constant mode.  ``basis`` restricts which parts
    may be populated.
    """

    basis: str
    q: np.ndarray
    p: np.ndarray
    p0: complex = 0.0
    t: float = 0.0

    def __post_init__(self):
        if self.basis not in (SINE, COSINE, MIXED):
            raise ValueError(f"unknown basis {self.basis!r}")
        q = _as_c128(self.q)
        p = _as_c128(self.p, len(q))
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "p0", complex(self.p0))
        if len(q) < 1:
            raise ValueError("need N >= 1 modes")
        if not (np.all(np.isfinite(q.view(np.float64)))
                and np.all(np.isfinite(p.view(np.float64)))
                and np.isfinite(self.p0)):
            raise ValueError("non-finite coefficients rejected")
        if self.basis == SINE and (np.any(p != 0) or self.p0 != 0):
            raise ValueError("sine state must have zero cosine part")
        if self.basis == COSINE and np.any(q != 0):
            raise ValueError("cosine state must have zero sine part")
        q.setflags(write=False)
        p.setflags(write=False)

    @property
    def N(self) -> int:
        return len(self.q)

    # -- light algebra used by the solver pipelines ------------------------

    def __add__(self, other: "FourierState") -> "FourierState":
        if self.N != other.N:
            raise ValueError("mode counts differ")
        basis = self.basis if self.basis == other.basis else MIXED
        return FourierState(basis, self.q + other.q, self.p + other.p,
                            self.p0 + other.p0, self.t)

    def __sub__(self, other: "FourierState") -> "FourierState":
        return self + (-1.0) * other

    def __rmul__(self, c: complex) -> "FourierState":
        basis = self.basis
        if basis == SINE and c == 0:
            pass
        return FourierState(basis, c * self.q, c * self.p, c * self.p0, self.t)

    def with_time(self, t: float) -> "FourierState":
        return replace(self, t=t)


def sine_state(q, t: float = 0.0) -> FourierState:
    q = _as_c128(q)
    return FourierState(SINE, q, np.zeros_like(q), 0.0, t)


def cosine_state(p, p0: complex = 0.0, t: float = 0.0) -> FourierState:
    p = _as_c128(p)
    return FourierState(COSINE, np.zeros_like(p), p, p0, t)


def mixed_state(q, p, p0: complex = 0.0, t: float = 0.0) -> FourierState:
    q = _as_c128(q)
    return FourierState(MIXED, q, _as_c128(p, len(q)), p0, t)


def zero_state(N: int, basis: str = SINE) -> FourierState:
    z = np.zeros(N, dtype=np.complex128)
    return FourierState(basis, z, z.copy(), 0.0, 0.0)


# ---------------------------------------------------------------------------
# transforms


def _sample(f, M: int):
    """Evaluate callable/sample input on the closed uniform grid of M+1 points."""
    x = np.linspace(0.0, 1.0, M + 1)
    if callable(f):
        try:
            vals = np.asarray(f(x), dtype=np.complex128)
            if vals.shape != x.shape:
                raise TypeError
        except Exception:
            vals = np.asarray([f(xi) for xi in x], dtype=np.complex128)
    else:
        vals = np.asarray(f, dtype=np.complex128)
        x = np.linspace(0.0, 1.0, len(vals))
    if not np.all(np.isfinite(vals.view(np.float64))):
        raise ValueError("non-finite samples rejected")
    return x, vals


def _trapezoid(vals, x):
    h = x[1] - x[0]
    return h * (vals[..., 1:-1].sum(axis=-1) + 0.5 * (vals[..., 0] + vals[..., -1]))


def sine_coefficients(f, N: int, grid_points: Optional[int] = None) -> FourierState:
    """Full sine transform q_k = 2*int_0^1 f(x) sin(k pi x) dx, k=1..N.

    ``f`` may be a callable on [0,1] or uniform samples including both
    endpoints.  Composite trapezoid on >= 4N+1 points is the single transform
    convention used throughout (exact for band-limited input).
    """
    if N < 1:
        raise ValueError("need N >= 1")
    M = (grid_points - 1) if grid_points else max(4 * N, 8)
    x, vals = _sample(f, M)
    k = np.arange(1, N + 1)
    sines = np.sin(np.pi * np.outer(k, x))
    q = 2.0 * _trapezoid(sines * vals, x)
    return sine_state(q)


def odd_even_extend(f, N: int, grid_points: Optional[int] = None):
    """Split f on (0,1) into odd/even two-periodic parts f = f_o + f_e.

    Returns ``(f_o, f_e)`` as (Sine, Cosine) states with the half-weight
    coefficients q_k = int_0^1 f sin, p_k = int_0^1 f cos and the mean value
    p0 = (1/2) int_0^1 f (the period-2 cell average of the extension), so
    that reconstructing f_o + f_e reproduces f on the open interval.
    """
    if N < 1:
        raise ValueError("need N >= 1")
    M = (grid_points - 1) if grid_points else max(4 * N, 8)
    x, vals = _sample(f, M)
    k = np.arange(1, N + 1)
    arg = np.pi * np.outer(k, x)
    q = _trapezoid(np.sin(arg) * vals, x)
    p = _trapezoid(np.cos(arg) * vals, x)
    p0 = 0.5 * _trapezoid(vals, x)
    return sine_state(q), cosine_state(p, p0)


def reconstruct(state: FourierState, grid) -> np.ndarray:
    """Evaluate p0 + sum p_k cos(k pi x) + sum q_k sin(k pi x) on the grid."""
    x = np.atleast_1d(np.asarray(grid, dtype=np.float64))
    k = np.arange(1, state.N + 1)
    arg = np.pi * np.outer(x, k)
    out = np.sin(arg) @ state.q + np.cos(arg) @ state.p + state.p0
    return out


def reconstruct_derivative(state: FourierState, grid, order: int = 1) -> np.ndarray:
    """Term-by-term x-derivative of the series on the grid."""
    x = np.atleast_1d(np.asarray(grid, dtype=np.float64))
    k = np.arange(1, state.N + 1)
    w = (k * np.pi) ** order
    arg = np.pi * np.outer(x, k)
    # d/dx cycles sin -> cos -> -sin -> -cos; handle the four phases
    r = order % 4
    if r == 0:
        s_part, c_part = np.sin(arg), np.cos(arg)
    elif r == 1:
        s_part, c_part = np.cos(arg), -np.sin(arg)
    elif r == 2:
        s_part, c_part = -np.sin(arg), -np.cos(arg)
    else:
        s_part, c_part = -np.cos(arg), np.sin(arg)
    out = s_part @ (w * state.q) + c_part @ (w * state.p)
    if order == 0:
        out = out + state.p0
    return out


# ---------------------------------------------------------------------------
# norms


def sobolev_weights(N: int, s: float) -> np.ndarray:
    k = np.arange(1, N + 1, dtype=np.float64)
    return (1.0 + (k * np.pi) ** 2) ** s


def sobolev_norm(state: FourierState, idx: Union[SobolevIndex, float]) -> float:
    """Truncated H^s norm (|p0|^2 + sum (1+(k pi)^2)^s (|q_k|^2+|p_k|^2))^(1/2).

    The (1 + (k pi)^2)^s weight is the fixed convention here (equivalent to the
    homogeneous (k pi)^{2s} weight away from k=0, without the constant-mode
    degeneracy).
    """
    if isinstance(idx, SobolevIndex):
        if idx.domain != "space":
            raise ValueError("sobolev_norm takes a spatial index")
        s = idx.s
    else:
        s = float(idx)
    w = sobolev_weights(state.N, s)
    total = abs(state.p0) ** 2 + np.sum(w * (np.abs(state.q) ** 2 + np.abs(state.p) ** 2))
    return float(np.sqrt(total))


# ---------------------------------------------------------------------------
# boundary-trace signals


@dataclass(frozen=True)
class BoundaryTrace:
    """Time signal h(t) = sum_n a_n exp(i n pi^4 t) on the integer lattice.

    ``n`` holds the (sparse, sorted, unique) lattice indices and ``a`` the
    matching coefficients; the series has period 2/pi^3.  Optionally a dense
    sampled form (t_j, h_j) is carried alongside (used by the piecewise-linear
    convolution path when no series is available).
    """

    n: np.ndarray = field(default_factory=lambda: np.zeros(1, dtype=np.int64))
    a: np.ndarray = field(default_factory=lambda: np.zeros(1, dtype=np.complex128))
    sample_t: Optional[np.ndarray] = None
    sample_h: Optional[np.ndarray] = None

    def __post_init__(self):
        n = np.atleast_1d(np.asarray(self.n, dtype=np.int64))
        a = np.atleast_1d(np.asarray(self.a, dtype=np.complex128))
        if n.shape != a.shape:
            raise ValueError("index and coefficient arrays must match")
        if len(np.unique(n)) != len(n):
            raise ValueError("duplicate lattice indices")
        order = np.argsort(n)
        object.__setattr__(self, "n", n[order])
        object.__setattr__(self, "a", a[order])
        self.n.setflags(write=False)
        self.a.setflags(write=False)
        if (self.sample_t is None) != (self.sample_h is None):
            raise ValueError("sampled form needs both times and values")
        if self.sample_t is not None:
            st = np.asarray(self.sample_t, dtype=np.float64)
            sh = np.asarray(self.sample_h, dtype=np.complex128)
            if st.shape != sh.shape or st.ndim != 1:
                raise ValueError("bad sampled form")
            object.__setattr__(self, "sample_t", st)
            object.__setattr__(self, "sample_h", sh)

    @property
    def has_series(self) -> bool:
        return bool(np.any(self.a != 0)) or self.sample_t is None

    def __call__(self, t) -> np.ndarray:
        """Evaluate the series (preferred) or the sampled interpolant."""
        t = np.asarray(t, dtype=np.float64)
        if self.sample_t is not None and not np.any(self.a != 0):
            re = np.interp(t, self.sample_t, self.sample_h.real)
            im = np.interp(t, self.sample_t, self.sample_h.imag)
            return re + 1j * im
        # scale the lattice first so the phase argument is built exactly like
        # the flow's omega * t (phases ~ 1e8 rad make the op order visible)
        phases = np.exp(1j * np.multiply.outer(t, TRACE_FREQ * self.n.astype(np.float64)))
        return phases @ self.a

    def derivative(self) -> "BoundaryTrace":
        """d/dt of the signal: series termwise, sampled form by differences."""
        if np.any(self.a != 0) or self.sample_t is None:
            return BoundaryTrace(self.n, 1j * TRACE_FREQ
                                 * self.n.astype(np.float64) * self.a)
        dh = np.gradient(self.sample_h, self.sample_t)
        return BoundaryTrace(sample_t=self.sample_t, sample_h=dh)

    @staticmethod
    def zero() -> "BoundaryTrace":
        return BoundaryTrace()

    @staticmethod
    def from_series(n, a) -> "BoundaryTrace":
        return BoundaryTrace(np.asarray(n, dtype=np.int64), np.asarray(a, dtype=np.complex128))

    @staticmethod
    def from_samples(t, h, M: int) -> "BoundaryTrace":
        """Least-squares projection of samples onto the lattice n in [-M, M].

        The fit is taken over the provided grid (expected to cover one period
        uniformly); the sampled form is kept alongside the series.
        """
        t = np.asarray(t, dtype=np.float64)
        h = np.asarray(h, dtype=np.complex128)
        n = np.arange(-M, M + 1, dtype=np.int64)
        design = np.exp(1j * np.outer(t, TRACE_FREQ * n.astype(np.float64)))
        coef, *_ = np.linalg.lstsq(design, h, rcond=None)
        return BoundaryTrace(n, coef, sample_t=t, sample_h=h)

    @staticmethod
    def from_callable(fn: Callable, T: float, dt: float) -> "BoundaryTrace":
        """Sampled-only trace from a time callable (no series part)."""
        t = np.arange(0.0, T + 0.5 * dt, dt)
        h = np.asarray([fn(ti) for ti in t], dtype=np.complex128)
        return BoundaryTrace(np.zeros(1, dtype=np.int64),
                             np.zeros(1, dtype=np.complex128),
                             sample_t=t, sample_h=h)


def trace_sobolev_norm(h: BoundaryTrace, alpha: float) -> float:
    """Truncated time-regularity norm (sum_n (1+n^2)^alpha |a_n|^2)^(1/2)."""
    w = (1.0 + h.n.astype(np.float64) ** 2) ** alpha
    return float(np.sqrt(np.sum(w * np.abs(h.a) ** 2)))
