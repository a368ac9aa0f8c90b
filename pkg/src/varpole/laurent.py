"""Laurent coefficients of A^{-1}(z) about z = 1.

Two independent routes:

* :func:`contour_coefficients` -- trapezoidal rule for the Cauchy
  coefficient integral on the circle |z - 1| = rho, evaluated with one FFT.
* :func:`toeplitz_reconstruct` -- least-squares solve of the stacked left and
  right identities obtained from A^{-1}(z) A(z) = A(z) A^{-1}(z) = I.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .matpoly import MatrixPolynomial, det_roots, evaluate, taylor_coeffs_at_one
from .numla import DEFAULT_TOL, Tolerances

MAX_RADIUS = 0.5
COEFF_FLOOR = 1e-6


class ContourError(RuntimeError):
    """The contour passes too close to a root of det A(z)."""


class ConvergenceError(RuntimeError):
    """Node doubling did not settle the coefficients."""


class ReconstructionError(RuntimeError):
    """The stacked identity system does not pin down the principal part."""


@dataclass(frozen=True)
class LaurentExpansion:
    """Coefficients N_j for j_min <= j <= j_max plus quadrature metadata.

    ``principal`` runs N_{-m}, ..., N_{-1}; ``regular`` runs N_0, ..., N_q.
    """

    m: int
    j_min: int
    coeffs: np.ndarray
    radius: float
    nodes: int
    imag_leak: float
    change_on_doubling: float = 0.0

    @property
    def j_max(self) -> int:
        return self.j_min + self.coeffs.shape[0] - 1

    @property
    def dim(self) -> int:
        return self.coeffs.shape[1]

    def coefficient(self, j: int) -> np.ndarray:
        """N_j; zero outside the computed range below -m."""
        if j < -self.m and j < self.j_min:
            return np.zeros((self.dim, self.dim))
        if not self.j_min <= j <= self.j_max:
            raise IndexError(f"N_{j} outside computed range [{self.j_min}, {self.j_max}]")
        return self.coeffs[j - self.j_min]

    @property
    def principal(self) -> list[np.ndarray]:
        return [self.coefficient(j) for j in range(-self.m, 0)]

    @property
    def regular(self) -> list[np.ndarray]:
        return [self.coefficient(j) for j in range(0, self.j_max + 1)]

    def with_pole_order(self, m: int) -> "LaurentExpansion":
        return LaurentExpansion(m, self.j_min, self.coeffs, self.radius, self.nodes,
                                self.imag_leak, self.change_on_doubling)

    def evaluate(self, z) -> np.ndarray:
        """Truncated Laurent sum at a single point."""
        w = complex(z) - 1
        return sum(self.coeffs[i] * w ** (self.j_min + i) for i in range(self.coeffs.shape[0]))


def default_radius(P: MatrixPolynomial) -> float:
    """min(MAX_RADIUS, half the distance from 1 to the nearest other root)."""
    rep = det_roots(P)
    return min(MAX_RADIUS, 0.5 * rep.min_distance_from_one)


def _refined_inverse(P: MatrixPolynomial, z: np.ndarray, X: np.ndarray, steps: int = 2) -> np.ndarray:
    # Near z = 1 the inverse carries an error of order eps * cond(A(z)), which
    # the 1 / rho^j scaling then amplifies.  Residuals in extended precision
    # bring the error down to roughly eps * |A^{-1}(z)|.
    wide = np.clongdouble
    zz = z.astype(wide)[:, None, None]
    Az = np.zeros((z.size, P.dim, P.dim), dtype=wide)
    for C in P.coeffs[::-1]:
        Az = Az * zz + C.astype(wide)
    I = np.eye(P.dim, dtype=wide)
    Xw = X.astype(wide)
    for _ in range(steps):
        R = I - Az @ Xw
        Xw = Xw + Xw @ R
    return Xw.astype(np.complex128)


def _fft_coeffs(P: MatrixPolynomial, j_min: int, j_max: int, radius: float, nodes: int,
                cond_cap: float):
    theta = 2 * np.pi * np.arange(nodes) / nodes
    z = 1 + radius * np.exp(1j * theta)
    Az = evaluate(P, z)
    s = np.linalg.svd(Az, compute_uv=False)
    worst = float(np.max(s[:, 0] / s[:, -1])) if np.all(s[:, -1] > 0) else math.inf
    if worst > cond_cap:
        raise ContourError(
            f"A(z) condition number {worst:.3g} on the contour exceeds {cond_cap:.3g}; "
            "try a smaller radius")
    F = _refined_inverse(P, z, np.linalg.inv(Az))
    G = np.fft.fft(F, axis=0) / nodes
    js = np.arange(j_min, j_max + 1)
    out = G[js % nodes] * (radius ** (-js.astype(float)))[:, None, None]
    return out.real.copy(), float(np.max(np.abs(out.imag), initial=0.0))


def _detect_order(coeffs: np.ndarray, j_min: int) -> int:
    norms = np.linalg.norm(coeffs, axis=(1, 2))
    floor = COEFF_FLOOR * norms.max() if norms.size else 0.0
    m = 0
    for i, nrm in enumerate(norms):
        j = j_min + i
        if j < 0 and nrm > floor:
            m = max(m, -j)
    return m


def contour_coefficients(P: MatrixPolynomial, j_min: int = -5, j_max: int = 4,
                         radius: float | None = None, nodes: int = 256,
                         max_nodes: int = 4096, quad_tol: float = 1e-10,
                         cond_cap: float = 1e13) -> LaurentExpansion:
    """N_j = (1 / rho^j) * mean_k A^{-1}(1 + rho e^{i t_k}) e^{-i j t_k}.

    The node count doubles until two successive estimates agree within
    ``quad_tol`` relative to the largest coefficient, up to ``max_nodes``.
    """
    if j_min > j_max:
        raise ValueError("empty coefficient range")
    if nodes < 64 or nodes & (nodes - 1):
        raise ValueError("nodes must be a power of two >= 64")
    if radius is None:
        radius = default_radius(P)
    if not radius > 0:
        raise ValueError("radius must be positive")
    prev, _ = _fft_coeffs(P, j_min, j_max, radius, nodes, cond_cap)
    while True:
        if 2 * nodes > max_nodes:
            raise ConvergenceError(f"coefficients not converged at {nodes} nodes")
        cur, leak = _fft_coeffs(P, j_min, j_max, radius, 2 * nodes, cond_cap)
        nodes *= 2
        scale = max(float(np.max(np.linalg.norm(cur, axis=(1, 2)))), 1e-300)
        change = float(np.max(np.linalg.norm(cur - prev, axis=(1, 2)))) / scale
        if change <= quad_tol:
            break
        prev = cur
    m = _detect_order(cur, j_min)
    return LaurentExpansion(m, j_min, cur, float(radius), nodes, leak, change)


# ---------------------------------------------------------------------------
# fundamental identities


def _taylor_blocks(P: MatrixPolynomial, count: int) -> list[np.ndarray]:
    a = taylor_coeffs_at_one(P)
    n = P.dim
    return [a[k] if k < len(a) else np.zeros((n, n)) for k in range(count)]


@dataclass(frozen=True)
class Reconstruction:
    m: int
    q: int
    coeffs: np.ndarray  # N_{-m} .. N_q
    residual: float
    rank: int
    unknowns: int

    @property
    def principal(self) -> list[np.ndarray]:
        return list(self.coeffs[: self.m])

    @property
    def regular(self) -> list[np.ndarray]:
        return list(self.coeffs[self.m:])


def _identity_system(P: MatrixPolynomial, m: int, q: int):
    n = P.dim
    nb = m + q + 1
    a = _taylor_blocks(P, nb)
    I = np.eye(n)
    rows, rhs = [], []
    for h in range(nb):
        target = (I if h == m else np.zeros((n, n))).reshape(-1, order="F")
        left = np.zeros((n * n, nb * n * n))
        right = np.zeros((n * n, nb * n * n))
        for i in range(h + 1):
            blk = slice(i * n * n, (i + 1) * n * n)
            left[:, blk] = np.kron(a[h - i].T, I)   # vec(N_i A) = (A^T kron I) vec(N_i)
            right[:, blk] = np.kron(I, a[h - i])    # vec(A N_i) = (I kron A) vec(N_i)
        rows += [left, right]
        rhs += [target, target]
    return np.vstack(rows), np.concatenate(rhs)


def toeplitz_reconstruct(P: MatrixPolynomial, m: int, q: int | None = None,
                         tol: Tolerances = DEFAULT_TOL) -> Reconstruction:
    """Solve the left/right identities for h = 0..m+q in N_{-m}..N_q.

    The trailing regular coefficients are never pinned down by a truncated
    system, so the solve is minimum-norm; what is required is that the
    null space of the system does not touch the principal unknowns.
    """
    if q is None:
        q = m
    if m < 0 or q < 0:
        raise ValueError("m and q must be non-negative")
    n = P.dim
    M, b = _identity_system(P, m, q)
    U, s, Vt = np.linalg.svd(M, full_matrices=True)
    cut = tol.rank_rel * s[0]
    r = int(np.count_nonzero(s > cut))
    x = Vt[:r].T @ ((U[:, :r].T @ b) / s[:r])
    null = Vt[r:]
    lead = m * n * n
    if lead and null.size and float(np.max(np.abs(null[:, :lead]))) > 1e-6:
        raise ReconstructionError(
            f"principal part not determined by identities up to h = {m + q}; increase q")
    res = float(np.linalg.norm(M @ x - b))
    blocks = np.stack([x[i * n * n:(i + 1) * n * n].reshape(n, n, order="F")
                       for i in range(m + q + 1)])
    return Reconstruction(m, q, blocks, res, r, M.shape[1])


@dataclass(frozen=True)
class IdentityResiduals:
    """Left/right residual norms per h, each relative to the size of its terms."""

    h: list[int]
    left: list[float]
    right: list[float]
    scale: list[float]
    tol: float

    @property
    def max_relative(self) -> float:
        vals = [max(l, r) / s for l, r, s in zip(self.left, self.right, self.scale)]
        return max(vals, default=0.0)

    @property
    def ok(self) -> bool:
        return self.max_relative <= self.tol


def verify_fundamental_identities(exp: LaurentExpansion, P: MatrixPolynomial, tol: float = 1e-8,
                                  h_max: int | None = None) -> IdentityResiduals:
    """Residuals of sum_j N_{h-m-j} A^(j)/j! = delta_{h,m} I (and mirrored).

    Each residual is divided by ``1 + sum_j |N_{h-m-j}| |A^(j)/j!|``.
    """
    m = exp.m
    if h_max is None:
        h_max = m + exp.j_max
    if h_max - m > exp.j_max:
        raise ValueError("expansion does not reach the requested h")
    n = P.dim
    a = _taylor_blocks(P, h_max + 1)
    I = np.eye(n)
    hs, ls, rs, sc = [], [], [], []
    for h in range(h_max + 1):
        L = np.zeros((n, n))
        R = np.zeros((n, n))
        size = 1.0
        for j in range(h + 1):
            N = exp.coefficient(h - m - j)
            L += N @ a[j]
            R += a[j] @ N
            size += np.linalg.norm(N) * np.linalg.norm(a[j])
        target = I if h == m else 0 * I
        hs.append(h)
        ls.append(float(np.linalg.norm(L - target)))
        rs.append(float(np.linalg.norm(R - target)))
        sc.append(float(size))
    return IdentityResiduals(hs, ls, rs, sc, tol)


@dataclass(frozen=True)
class AnnihilationVerdict:
    residuals: list[float]  # |P N_{-j}| / scale for j = 1..m
    scale: float
    tol: float

    @property
    def max_residual(self) -> float:
        return max(self.residuals, default=0.0)

    @property
    def ok(self) -> bool:
        return self.max_residual <= self.tol


def annihilation_check(P_m: np.ndarray, exp: LaurentExpansion, tol: float = 1e-8) -> AnnihilationVerdict:
    """Check P_m N_{-j} = 0 for j = 1..m, i.e. P_m A^{-1}(z) analytic at 1."""
    if exp.m < 1:
        raise ValueError("expansion has no principal part")
    principal = exp.principal
    scale = max(float(np.linalg.norm(N)) for N in principal)
    scale = scale if scale > 0 else 1.0
    res = [float(np.linalg.norm(P_m @ exp.coefficient(-j))) / scale for j in range(1, exp.m + 1)]
    return AnnihilationVerdict(res, scale, tol)


def growth_exponent(P: MatrixPolynomial, radii: tuple[float, float] = (1e-2, 5e-3),
                    nodes: int = 64) -> float:
    """Slope of log max_theta |A^{-1}(1 + rho e^{i theta})|_2 against -log rho.

    Estimated from two radii; rounds to the pole order for small enough rho.
    """
    r1, r2 = radii
    if not 0 < r2 < r1:
        raise ValueError("need 0 < radii[1] < radii[0]")
    theta = 2 * np.pi * (np.arange(nodes) + 0.5) / nodes
    peaks = []
    for r in (r1, r2):
        s = np.linalg.svd(evaluate(P, 1 + r * np.exp(1j * theta)), compute_uv=False)
        if np.any(s[:, -1] <= 0):
            raise ContourError(f"A(z) singular on |z - 1| = {r}")
        peaks.append(float(np.max(1.0 / s[:, -1])))
    return math.log(peaks[1] / peaks[0]) / math.log(r1 / r2)


def oracle_pole_order(P: MatrixPolynomial, radii: tuple[float, float] | None = None) -> int:
    """Pole order from the growth of |A^{-1}| near z = 1, independent of the K chain."""
    if radii is None:
        r = min(1e-2, 0.05 * default_radius(P))
        radii = (r, r / 2)
    return max(0, int(round(growth_exponent(P, radii))))
