"""Real square matrix polynomials A(z) = sum_k A_k z^k."""
from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .numla import DEFAULT_TOL, Tolerances, numerical_rank


class DegeneratePolynomialError(ValueError):
    """det A(z) vanishes identically."""


@dataclass(frozen=True)
class MatrixPolynomial:
    """Coefficients stored as an array of shape (K + 1, n, n).

    Trailing zero coefficients are trimmed on construction so that the
    leading coefficient is nonzero unless the polynomial is constant.
    """

    coeffs: np.ndarray

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=float)
        if c.ndim == 2:
            c = c[None]
        if c.ndim != 3 or c.shape[1] != c.shape[2] or c.shape[1] == 0:
            raise ValueError(f"coefficients must be a stack of square matrices, got shape {c.shape}")
        if not np.all(np.isfinite(c)):
            raise ValueError("coefficients must be finite")
        last = c.shape[0]
        while last > 1 and not np.any(c[last - 1]):
            last -= 1
        c = c[:last].copy()
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @property
    def dim(self) -> int:
        return self.coeffs.shape[1]

    @property
    def degree(self) -> int:
        return self.coeffs.shape[0] - 1

    @property
    def is_var(self) -> bool:
        return np.array_equal(self.coeffs[0], np.eye(self.dim))

    def __call__(self, z):
        return evaluate(self, z)

    def __matmul__(self, other: "MatrixPolynomial") -> "MatrixPolynomial":
        return multiply(self, other)


def from_var(lag_matrices) -> MatrixPolynomial:
    """A(z) = I - sum_k A_k z^k from the VAR lag matrices A_1..A_K."""
    mats = [np.asarray(a, dtype=float) for a in lag_matrices]
    if not mats:
        raise ValueError("need at least one lag matrix")
    n = mats[0].shape[0] if mats[0].ndim == 2 else -1
    for a in mats:
        if a.ndim != 2 or a.shape != (n, n):
            raise ValueError(f"lag matrices must all be {n}x{n}, got {a.shape}")
    return MatrixPolynomial(np.stack([np.eye(n)] + [-a for a in mats]))


def var_lags(P: MatrixPolynomial) -> list[np.ndarray]:
    """Inverse of :func:`from_var`; requires A_0 = I."""
    if not P.is_var:
        raise ValueError("polynomial is not in VAR form (A_0 != I)")
    return [-a for a in P.coeffs[1:]]


def multiply(P: MatrixPolynomial, Q: MatrixPolynomial) -> MatrixPolynomial:
    if P.dim != Q.dim:
        raise ValueError("dimension mismatch")
    out = np.zeros((P.degree + Q.degree + 1, P.dim, P.dim))
    for i, a in enumerate(P.coeffs):
        for j, b in enumerate(Q.coeffs):
            out[i + j] += a @ b
    return MatrixPolynomial(out)


def evaluate(P: MatrixPolynomial, z):
    """Horner evaluation; ``z`` may be a scalar or a 1-d array of points.

    For an array of m points the result has shape (m, n, n).
    """
    z = np.asarray(z)
    scalar = z.ndim == 0
    zz = z.reshape(-1, 1, 1)
    dtype = np.result_type(P.coeffs.dtype, zz.dtype)
    acc = np.broadcast_to(P.coeffs[-1], (zz.shape[0],) + P.coeffs.shape[1:]).astype(dtype)
    for a in P.coeffs[-2::-1]:
        acc = acc * zz + a
    return acc[0] if scalar else acc


def derivative_at_one(P: MatrixPolynomial, k: int) -> np.ndarray:
    """A^(k) = sum_{j>=k} j!/(j-k)! A_j, exact from the coefficients."""
    if k < 0:
        raise ValueError("derivative order must be non-negative")
    out = np.zeros((P.dim, P.dim))
    for j in range(k, P.degree + 1):
        out += math.perm(j, k) * P.coeffs[j]
    return out


def taylor_coeffs_at_one(P: MatrixPolynomial) -> list[np.ndarray]:
    """Coefficients of A(1 + w) in powers of w: A^(k) / k!, k = 0..K."""
    return [derivative_at_one(P, k) / math.factorial(k) for k in range(P.degree + 1)]


def shifted(P: MatrixPolynomial) -> MatrixPolynomial:
    """The polynomial w -> A(1 + w)."""
    return MatrixPolynomial(np.stack(taylor_coeffs_at_one(P)))


def coeff_scale(P: MatrixPolynomial) -> float:
    """Largest spectral norm among the Taylor coefficients at z = 1."""
    return max(float(np.linalg.norm(a, 2)) for a in taylor_coeffs_at_one(P))


# ---------------------------------------------------------------------------
# determinant and its roots


def _det_poly_leibniz(coeffs: np.ndarray) -> np.ndarray:
    # coeffs[k] is the z^k coefficient; returns det coefficients low -> high
    n = coeffs.shape[1]
    entry = [[coeffs[:, i, j] for j in range(n)] for i in range(n)]
    total = np.zeros(1)
    for perm in itertools.permutations(range(n)):
        sign = _perm_sign(perm)
        term = np.ones(1)
        for i, j in enumerate(perm):
            term = np.convolve(term, entry[i][j])
        if term.size > total.size:
            total = np.pad(total, (0, term.size - total.size))
        total[: term.size] += sign * term
    return total


def _perm_sign(perm) -> int:
    sign, seen = 1, [False] * len(perm)
    for i in range(len(perm)):
        if seen[i]:
            continue
        j, length = i, 0
        while not seen[j]:
            seen[j] = True
            j = perm[j]
            length += 1
        if length % 2 == 0:
            sign = -sign
    return sign


def _det_poly_fft(P: MatrixPolynomial) -> np.ndarray:
    deg = P.dim * P.degree
    npts = 1 << int(math.ceil(math.log2(deg + 1)))
    z = np.exp(2j * np.pi * np.arange(npts) / npts)
    vals = np.linalg.det(evaluate(P, z))
    return (np.fft.fft(vals) / npts).real[: deg + 1]


def det_coeffs(P: MatrixPolynomial) -> np.ndarray:
    """Coefficients of det A(z), lowest power first.

    Exact expansion for n <= 4, interpolation at roots of unity beyond.
    """
    if P.dim <= 4:
        return _det_poly_leibniz(P.coeffs)
    return _det_poly_fft(P)


def is_degenerate(P: MatrixPolynomial, seed: int = 0, tol: float = 1e-12) -> bool:
    """True when A(z) is numerically singular at random sample points."""
    rng = np.random.default_rng(seed)
    pts = rng.uniform(0.5, 1.5, 4) * np.exp(2j * np.pi * rng.uniform(size=4))
    for A in evaluate(P, pts):
        s = np.linalg.svd(A, compute_uv=False)
        if s[-1] > tol * s[0]:
            return False
    return True


def unit_root_multiplicity(P: MatrixPolynomial, tol: Tolerances = DEFAULT_TOL) -> int:
    """Order of vanishing of det A(z) at z = 1, from block-Toeplitz ranks.

    The rank increments of the lower block-triangular Toeplitz matrices
    built from the Taylor coefficients at 1 count the local partial
    multiplicities; their sum is the multiplicity of the root.
    """
    a = taylor_coeffs_at_one(P)
    n, scale = P.dim, coeff_scale(P)
    mu, prev, k = 0, 0, 0
    cap = n * P.degree + 1
    while k <= cap:
        T = np.zeros(((k + 1) * n, (k + 1) * n))
        for i in range(k + 1):
            for j in range(i + 1):
                if i - j < len(a):
                    T[i * n:(i + 1) * n, j * n:(j + 1) * n] = a[i - j]
        rk = numerical_rank(T, tol, scale=scale)
        deficit = n - (rk - prev)
        if deficit <= 0:
            return mu
        mu += deficit
        prev, k = rk, k + 1
    raise DegeneratePolynomialError("partial multiplicities did not terminate")


@dataclass(frozen=True)
class RootReport:
    roots: list[tuple[complex, int]]
    unit_root_multiplicity: int
    premise_ok: bool
    min_outside_modulus: float
    warnings: list[str] = field(default_factory=list)

    @property
    def min_distance_from_one(self) -> float:
        d = [abs(r - 1) for r, _ in self.roots if not (r == 1)]
        return min(d) if d else math.inf


def _cluster(values: np.ndarray, tol: float) -> list[tuple[complex, int]]:
    out: list[list] = []
    for v in sorted(values, key=lambda x: (x.real, x.imag)):
        for c in out:
            if abs(c[0] - v) <= tol:
                c[1].append(v)
                break
        else:
            out.append([v, [v]])
    return [(complex(np.mean(m)), len(m)) for _, m in out]


def det_roots(P: MatrixPolynomial, cluster_tol: float = 1e-6, outside_margin: float = 1e-6,
              tol: Tolerances = DEFAULT_TOL, cond_cap: float = 1e12) -> RootReport:
    """Roots of det A(z) with multiplicities.

    The multiplicity at z = 1 comes from :func:`unit_root_multiplicity`;
    the remaining roots are eigenvalues of the companion matrix of the
    scalar determinant after the unit-root cluster has been removed.
    """
    if is_degenerate(P):
        raise DegeneratePolynomialError("det A(z) vanishes identically")
    mu = unit_root_multiplicity(P, tol)
    c = det_coeffs(P)
    notes = []
    top = np.max(np.abs(c))
    nz = np.nonzero(np.abs(c) > 1e-13 * top)[0]
    c = c[: nz[-1] + 1]
    lead = abs(c[-1])
    if top / lead > cond_cap:
        notes.append(f"companion eigenproblem ill-conditioned (coefficient ratio {top / lead:.3g})")
    raw = np.roots(c[::-1]) if c.size > 1 else np.zeros(0, dtype=complex)
    # drop the mu roots nearest to 1; they are reported as an exact cluster
    order = np.argsort(np.abs(raw - 1))
    rest = raw[order[mu:]] if mu <= raw.size else np.zeros(0, dtype=complex)
    if mu > raw.size:
        notes.append("unit-root multiplicity exceeds determinant degree")
    roots = ([(1 + 0j, mu)] if mu else []) + _cluster(rest, cluster_tol)
    mods = np.abs(rest)
    min_out = float(mods.min()) if mods.size else math.inf
    premise = bool(np.all(mods > 1 + outside_margin))
    for msg in notes:
        warnings.warn(msg, RuntimeWarning, stacklevel=2)
    return RootReport(roots, mu, premise, min_out, notes)
