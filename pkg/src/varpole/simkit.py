"""Test models with known pole order, VAR simulation, integration diagnostics."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .matpoly import MatrixPolynomial, multiply, var_lags

MAX_ORDER = 4


@dataclass(frozen=True)
class SmithSpec:
    """A(z) = E(z) diag((1 - z)^d_i) F(z) with unimodular E, F.

    ``n_ops`` elementary operations of degree <= ``unimodular_degree`` are
    multiplied into each of E and F (default n); ``n_ops = 0`` gives E = F = I.
    """

    n: int
    degrees: tuple[int, ...]
    seed: int = 0
    unimodular_degree: int = 1
    n_ops: int | None = None

    def __post_init__(self):
        degs = tuple(int(d) for d in self.degrees)
        object.__setattr__(self, "degrees", degs)
        if self.n < 1 or len(degs) != self.n:
            raise ValueError(f"need {self.n} degrees, got {len(degs)}")
        if min(degs) < 0 or max(degs) > MAX_ORDER:
            raise ValueError(f"degrees must lie in 0..{MAX_ORDER}")
        if list(degs) != sorted(degs, reverse=True):
            raise ValueError("degrees must be non-increasing")
        if self.unimodular_degree < 0:
            raise ValueError("unimodular_degree must be non-negative")

    @property
    def known_m(self) -> int:
        return max(self.degrees)


def _elementary(n: int, i: int, j: int, p: np.ndarray) -> MatrixPolynomial:
    c = np.zeros((len(p), n, n))
    c[0] = np.eye(n)
    c[:, i, j] += p
    return MatrixPolynomial(c)


def random_unimodular(n: int, n_ops: int, degree: int, rng: np.random.Generator) -> MatrixPolynomial:
    """Product of I + p(z) e_i e_j^T, i != j, coefficients of p in [-1, 1]."""
    U = MatrixPolynomial(np.eye(n)[None])
    if n < 2:
        return U
    for _ in range(n_ops):
        i, j = rng.choice(n, size=2, replace=False)
        p = rng.uniform(-1, 1, degree + 1)
        U = multiply(U, _elementary(n, int(i), int(j), p))
    return U


def diagonal_unit_roots(degrees) -> MatrixPolynomial:
    degrees = list(degrees)
    n, top = len(degrees), max(degrees)
    c = np.zeros((top + 1, n, n))
    for i, d in enumerate(degrees):
        # (1 - z)^d via binomial coefficients
        c[: d + 1, i, i] = np.polynomial.polynomial.polypow([1.0, -1.0], d)
    return MatrixPolynomial(c)


def generate_smith_model(spec: SmithSpec) -> tuple[MatrixPolynomial, int]:
    """Build A(z) in VAR form (A_0 = I) with pole order max(d_i) at z = 1.

    The product E D F is premultiplied by (E(0) F(0))^{-1}, a constant
    unimodular matrix, which leaves the local structure at 1 unchanged.
    """
    rng = np.random.default_rng(spec.seed)
    n_ops = spec.n if spec.n_ops is None else spec.n_ops
    E = random_unimodular(spec.n, n_ops, spec.unimodular_degree, rng)
    F = random_unimodular(spec.n, n_ops, spec.unimodular_degree, rng)
    A = multiply(multiply(E, diagonal_unit_roots(spec.degrees)), F)
    A0inv = np.linalg.inv(A.coeffs[0])
    A = MatrixPolynomial(np.einsum("ij,kjl->kil", A0inv, A.coeffs))
    c = A.coeffs.copy()
    c[0] = np.eye(spec.n)
    return MatrixPolynomial(c), spec.known_m


def random_degrees(n: int, top: int, rng: np.random.Generator) -> tuple[int, ...]:
    """Non-increasing degree vector of length n whose maximum is ``top``."""
    rest = rng.integers(0, top + 1, n - 1)
    return tuple(sorted([top, *map(int, rest)], reverse=True))


def grid_specs(ns=(2, 3, 4, 5), tops=(1, 2, 3, 4), seeds=range(25)) -> list[SmithSpec]:
    """The standard validation grid: one spec per (n, top, seed).

    Degree vectors come from ``random_degrees`` with generator seed
    1000 n + 100 top + seed; the unimodular factors use ``seed``.
    """
    out = []
    for n in ns:
        for top in tops:
            for seed in seeds:
                degs = random_degrees(n, top, np.random.default_rng(1000 * n + 100 * top + seed))
                out.append(SmithSpec(n, degs, seed=seed))
    return out


# ---------------------------------------------------------------------------
# simulation

STATIONARY_SLOPE = 0.3


@dataclass(frozen=True)
class Trajectory:
    """y_1..y_T from A(L) y_t = eps_t with zero pre-sample values."""

    T: int
    values: np.ndarray
    noise_cov: np.ndarray
    seed: int | None
    initial: np.ndarray | None = None


def noise_factor(Sigma) -> np.ndarray:
    """L with L L^T = Sigma; Sigma must be symmetric positive semidefinite."""
    S = np.atleast_2d(np.asarray(Sigma, dtype=float))
    if S.shape[0] != S.shape[1]:
        raise ValueError("Sigma must be square")
    if not np.allclose(S, S.T, rtol=0, atol=1e-12 * max(1.0, np.abs(S).max())):
        raise ValueError("Sigma must be symmetric")
    w, V = np.linalg.eigh(S)
    if w.size and w[0] < -1e-12 * max(1.0, w[-1]):
        raise ValueError(f"Sigma is not positive semidefinite (min eigenvalue {w[0]:.3g})")
    return V * np.sqrt(np.clip(w, 0, None))


def run_recursion(lags: np.ndarray, eps: np.ndarray, initial: np.ndarray | None = None) -> np.ndarray:
    """y_t = sum_k lags[k-1] y_{t-k} + eps_t over the second-to-last axis of ``eps``.

    Leading axes of ``eps`` are independent batches.  ``initial`` holds the
    K pre-sample values y_{1-K}..y_0 (zeros when omitted).
    """
    K, n = lags.shape[0], eps.shape[-1]
    T = eps.shape[-2]
    # companion form: state (y_t, y_{t-1}, ..., y_{t-K+1}), one product per step
    C = np.zeros((K * n, K * n))
    C[:n] = np.hstack(list(lags))
    C[n:, :-n] = np.eye((K - 1) * n)
    state = np.zeros(eps.shape[:-2] + (K * n,))
    if initial is not None:
        state[...] = np.asarray(initial, dtype=float)[::-1].reshape(-1)
    y = np.empty(eps.shape)
    Ct = C.T
    for t in range(T):
        state = state @ Ct
        state[..., :n] += eps[..., t, :]
        y[..., t, :] = state[..., :n]
    return y


def simulate_var(P: MatrixPolynomial, T: int, Sigma=None, seed: int | None = None,
                 initial=None) -> Trajectory:
    """Iterate the VAR recursion with Gaussian noise of covariance Sigma.

    Sigma defaults to I; a singular (semidefinite) Sigma is accepted, Sigma = 0
    gives the homogeneous solution.
    """
    if not P.is_var:
        raise ValueError("P must be in VAR form (A_0 = I)")
    if T < 1:
        raise ValueError("T must be at least 1")
    n = P.dim
    Sigma = np.eye(n) if Sigma is None else np.atleast_2d(np.asarray(Sigma, dtype=float))
    if Sigma.shape != (n, n):
        raise ValueError(f"Sigma must be {n}x{n}")
    L = noise_factor(Sigma)
    lags = np.asarray(var_lags(P), dtype=float).reshape(-1, n, n)
    init = None
    if initial is not None:
        init = np.asarray(initial, dtype=float).reshape(max(len(lags), 1), n)
    eps = np.random.default_rng(seed).standard_normal((T, n)) @ L.T
    if len(lags) == 0:
        y = eps
    else:
        y = run_recursion(lags, eps, init)
    return Trajectory(T, y, Sigma, seed, init)


# ---------------------------------------------------------------------------
# diagnostics


def window_sizes(T: int, smallest: int | None = None, largest_fraction: float = 0.5) -> np.ndarray:
    """Dyadic window lengths from ``smallest`` up to ``largest_fraction * T``.

    ``smallest`` defaults to the power of two at or above T / 32 (at least
    16), so the fit looks at the large scales where integration shows.
    """
    if smallest is None:
        smallest = max(16, 1 << max(0, math.ceil(math.log2(max(T, 1) / 32))))
    out = []
    w = smallest
    while w <= int(largest_fraction * T):
        out.append(w)
        w *= 2
    return np.array(out, dtype=int)


def variance_growth_slope(x: np.ndarray, windows: np.ndarray) -> np.ndarray:
    """Per-column slope of log(mean within-window variance) against log(window).

    O(1) growth (stationary) gives a slope near 0, a random walk near 1.
    Columns with zero variance get slope 0.
    """
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    if len(windows) < 2:
        raise ValueError("need at least two window sizes; T is too short")
    logv = []
    for w in windows:
        k = x.shape[0] // w
        blocks = x[: k * w].reshape(k, w, -1)
        logv.append(blocks.var(axis=1).mean(axis=0))
    V = np.array(logv)
    out = np.zeros(x.shape[1])
    lw = np.log(windows.astype(float))
    for j in range(x.shape[1]):
        v = V[:, j]
        if np.all(v <= 1e-300 + 1e-24 * np.abs(x[:, j]).max(initial=0.0) ** 2):
            continue
        out[j] = np.polyfit(lw, np.log(np.maximum(v, 1e-300)), 1)[0]
    return out


@dataclass(frozen=True)
class SeriesVerdict:
    label: str
    slopes: np.ndarray
    max_slope: float
    stationary: bool
    confident: bool


@dataclass(frozen=True)
class DiagnosticsReport:
    """Variance-growth verdicts for y, dy, ..., d^m y and for P_m y."""

    m: int
    threshold: float
    windows: np.ndarray
    differences: list[SeriesVerdict]
    projected: SeriesVerdict | None
    estimated_order: int | None
    notes: tuple[str, ...] = field(default_factory=tuple)

    @property
    def consistent(self) -> bool:
        """d^m y stationary, d^(m-1) y not, and P_m y stationary."""
        ok = self.differences[self.m].stationary
        if self.m >= 1:
            ok = ok and not self.differences[self.m - 1].stationary
        if self.projected is not None:
            ok = ok and self.projected.stationary
        return ok


def _windows(T: int) -> np.ndarray:
    w = window_sizes(T)
    return w if len(w) >= 2 else window_sizes(T, smallest=2)


def _verdict(label: str, x: np.ndarray, windows: np.ndarray, threshold: float,
             margin: float) -> SeriesVerdict:
    if len(windows) < 2:
        # too few observations for any slope; report non-stationary, not confident
        s = np.full(x.shape[1] if x.ndim > 1 else 1, np.nan)
        return SeriesVerdict(label, s, math.nan, False, False)
    s = variance_growth_slope(x, windows)
    top = float(s.max(initial=0.0))
    return SeriesVerdict(label, s, top, top < threshold, abs(top - threshold) > margin)


def _drop_roundoff(P_m: np.ndarray, rel: float = 1e-8) -> np.ndarray:
    # roundoff-level directions of P_m would otherwise pick up the trend of y
    U, s, Vt = np.linalg.svd(P_m)
    keep = s > rel * max(1.0, s[0] if s.size else 0.0)
    return (U[:, keep] * s[keep]) @ Vt[keep]


def integration_diagnostics(traj: Trajectory, m: int, P_m=None, threshold: float = STATIONARY_SLOPE,
                            margin: float = 0.1) -> DiagnosticsReport:
    """Flag which differences of y (and P_m y) look stationary.

    A series is flagged stationary when the largest per-component slope is
    below ``threshold``; verdicts within ``margin`` of it are marked not
    confident.
    """
    if m < 0:
        raise ValueError("m must be non-negative")
    y = np.asarray(traj.values, dtype=float)
    notes = []
    if y.shape[0] < 2000:
        notes.append(f"T = {y.shape[0]} is short; verdicts are unreliable below 2000")
    diffs = []
    for d in range(m + 1):
        x = np.diff(y, n=d, axis=0) if d else y
        diffs.append(_verdict(f"diff{d}", x, _windows(x.shape[0]), threshold, margin))
    proj = None
    if P_m is not None:
        P_m = _drop_roundoff(np.asarray(P_m, dtype=float))
        proj = _verdict("P_m y", y @ P_m.T, _windows(y.shape[0]), threshold, margin)
    est = next((d for d, v in enumerate(diffs) if v.stationary), None)
    if any(math.isnan(v.max_slope) for v in diffs):
        notes.append("some series are too short for a variance-growth slope")
    return DiagnosticsReport(m, threshold, _windows(y.shape[0]), diffs, proj, est, tuple(notes))


def simulate_var_batch(P: MatrixPolynomial, T: int, seeds, Sigma=None) -> np.ndarray:
    """Stack of ``simulate_var(P, T, Sigma, s).values`` for s in ``seeds``, run in one pass."""
    if not P.is_var:
        raise ValueError("P must be in VAR form (A_0 = I)")
    n = P.dim
    Sigma = np.eye(n) if Sigma is None else np.atleast_2d(np.asarray(Sigma, dtype=float))
    L = noise_factor(Sigma)
    lags = np.asarray(var_lags(P), dtype=float).reshape(-1, n, n)
    eps = np.stack([np.random.default_rng(s).standard_normal((T, n)) for s in seeds]) @ L.T
    return eps if len(lags) == 0 else run_recursion(lags, eps)
