"""Weighted finite-element discretization of the operator -K^{-1}(K phi')' on
the half line (K = exp(eta^2/4)), its Neumann/Dirichlet spectra, the boundary
functional J and its nontrivial minimizer."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

_GAUSS5 = np.polynomial.legendre.leggauss(5)


class ConvergedToZeroError(RuntimeError):
    """The minimizer collapsed to the trivial critical point; retry with a
    larger initial amplitude."""


class NoDescentError(RuntimeError):
    """Neither the Newton direction nor the preconditioned gradient decreased
    the objective."""


@dataclass(frozen=True)
class WeightedGrid:
    """Uniform nodes on [0, eta_inf] with the Gaussian weight tabulated."""
    eta_inf: float = 12.0
    n: int = 2048

    def __post_init__(self):
        if self.n < 256:
            raise ValueError("need at least 256 nodes")
        if self.eta_inf < 10.0:
            raise ValueError("eta_inf must be at least 10")

    @property
    def nodes(self):
        return np.linspace(0.0, self.eta_inf, self.n)

    @property
    def weight(self):
        return np.exp(self.nodes ** 2 / 4.0)


@dataclass(frozen=True)
class WeightedForms:
    """Assembled stiffness a(u,v) = int u'v'K and mass m(u,v) = int uvK with the
    far-end Dirichlet row removed; bc='dirichlet' also removes the eta=0 row."""
    grid: WeightedGrid
    bc: str
    A: sp.spmatrix = field(repr=False)
    M: sp.spmatrix = field(repr=False)
    offset: int  # first retained node index (0 neumann, 1 dirichlet)

    def embed(self, vec):
        """Pad a constrained-dof vector back to the full node set."""
        full = np.zeros(self.grid.n)
        full[self.offset:self.grid.n - 1] = vec
        return full


@dataclass(frozen=True)
class WeightedEigenResult:
    bc: str
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray = field(repr=False)  # columns, full grid, K-orthonormal
    grid: WeightedGrid = None


def assemble_LK(grid: WeightedGrid, bc: str = "neumann") -> WeightedForms:
    """Piecewise-linear FEM forms with the weight integrated by a 5-point Gauss
    rule per cell. Neumann at 0 is natural; Dirichlet constrains node 0; the
    far end is always Dirichlet (weight growth kills H^1_K tails)."""
    if bc not in ("neumann", "dirichlet"):
        raise ValueError(f"unknown bc {bc!r}")
    nodes = grid.nodes
    n = grid.n
    h = nodes[1] - nodes[0]
    gx, gw = _GAUSS5
    mid = 0.5 * (nodes[:-1] + nodes[1:])
    xq = mid[:, None] + 0.5 * h * gx[None, :]
    wq = 0.5 * h * gw[None, :]
    K = np.exp(xq ** 2 / 4.0)
    s = (xq - nodes[:-1, None]) / h
    intK = (K * wq).sum(1)
    m00 = (K * (1 - s) ** 2 * wq).sum(1)
    m01 = (K * s * (1 - s) * wq).sum(1)
    m11 = (K * s ** 2 * wq).sum(1)

    main_a = np.zeros(n)
    main_a[:-1] += intK / h ** 2
    main_a[1:] += intK / h ** 2
    off_a = -intK / h ** 2
    main_m = np.zeros(n)
    main_m[:-1] += m00
    main_m[1:] += m11
    A = sp.diags([off_a, main_a, off_a], [-1, 0, 1], format="csc")
    M = sp.diags([m01, main_m, m01], [-1, 0, 1], format="csc")
    i0 = 1 if bc == "dirichlet" else 0
    return WeightedForms(grid=grid, bc=bc, A=A[i0:n - 1, i0:n - 1],
                         M=M[i0:n - 1, i0:n - 1], offset=i0)


def apply_operator(forms: WeightedForms, values):
    """M^{-1} A applied to nodal samples (constrained dofs)."""
    v = np.asarray(values, dtype=float)[forms.offset:forms.grid.n - 1]
    return spla.spsolve(forms.M.tocsc(), forms.A @ v)


def eigen_smallest(grid: WeightedGrid, bc: str, count: int = 3) -> WeightedEigenResult:
    """Smallest generalized eigenpairs of (A, M); eigenvectors come back
    M-orthonormal, i.e. K-orthonormal in the discrete inner product."""
    if count > 8:
        raise ValueError("count must be <= 8")
    forms = assemble_LK(grid, bc)
    vals, vecs = spla.eigsh(forms.A.tocsc(), k=count, M=forms.M.tocsc(),
                            sigma=0.0, which="LM")
    order = np.argsort(vals)
    vecs = vecs[:, order]
    full = np.column_stack([forms.embed(vecs[:, j]) for j in range(count)])
    return WeightedEigenResult(bc=bc, eigenvalues=vals[order], eigenvectors=full,
                               grid=grid)


def functional_J(grid: WeightedGrid, phi, p: float) -> float:
    """J(phi) = 1/2 int (phi'^2 - phi^2/(2(p-1))) K deta + |phi(0)|^(p+1)/(p+1),
    both weighted integrals by the trapezoid rule on the grid."""
    if p <= 1:
        raise ValueError("need p > 1")
    phi = np.asarray(phi, dtype=float)
    eta = grid.nodes
    K = grid.weight
    dphi = np.diff(phi) / np.diff(eta)
    Kmid = 0.5 * (K[:-1] + K[1:])
    grad = float(np.sum(dphi ** 2 * Kmid * np.diff(eta)))
    mass = float(np.trapezoid(phi ** 2 * K, eta))
    lam = 1.0 / (2.0 * (p - 1.0))
    return 0.5 * (grad - lam * mass) + abs(phi[0]) ** (p + 1.0) / (p + 1.0)


def minimize_J(grid: WeightedGrid, p: float, eps0: float = 0.1, max_iter: int = 60):
    """Nontrivial minimizer of J via damped Newton on the discrete
    Euler-Lagrange system (A - M/(2(p-1))) phi + |phi(0)|^(p-1) phi(0) e_0 = 0.

    Starts from eps0 * exp(-eta^2/4) with backtracking on J.  The system is
    linear apart from the rank-one boundary term, so when the damped iteration
    stalls (the trivial root attracts everything below the amplitude
    psi0^(-1/(p-1)) p^(-1/(p-1)), far above eps0 for p near 3/2) the candidate
    is rebuilt exactly from the boundary response psi = -L^(-1) e_0 and Newton
    restarts there.  Returns (minimizer on the full grid, functional_J value).
    """
    if not (1.5 < p < 2.0):
        raise ValueError("nontrivial minimizers exist for 1.5 < p < 2 only")
    forms = assemble_LK(grid, "neumann")
    lam = 1.0 / (2.0 * (p - 1.0))
    L = (forms.A - lam * forms.M).tocsc()
    nred = L.shape[0]
    eta = grid.nodes[:nred]

    def J_fem(v):
        return 0.5 * float(v @ (L @ v)) + abs(v[0]) ** (p + 1.0) / (p + 1.0)

    def grad(v):
        g = L @ v
        g[0] += np.sign(v[0]) * abs(v[0]) ** p
        return g

    def newton_loop(x, iters):
        for _ in range(iters):
            g = grad(x)
            scale = max(1.0, float(np.max(np.abs(x))))
            if np.max(np.abs(g)) < 1e-12 * scale:
                return x, True
            Jx = (L + sp.csc_matrix(
                (np.array([p * abs(x[0]) ** (p - 1.0)]),
                 (np.array([0]), np.array([0]))), shape=L.shape)).tocsc()
            step = spla.spsolve(Jx, -g)
            J0 = J_fem(x)
            t = 1.0
            while t > 1e-14 and J_fem(x + t * step) >= J0 - 1e-16 * abs(J0):
                t *= 0.5
            if t <= 1e-14:
                return x, False  # stalled
            x = x + t * step
        return x, False

    x0 = eps0 * np.exp(-eta ** 2 / 4.0)
    x, converged = newton_loop(x0, max_iter)
    if not converged or np.max(np.abs(x)) < 1e-8 * np.max(np.abs(x0)):
        # rank-one rescue: phi = g(beta) psi with beta = psi(0)^(-1/(p-1))
        e0 = np.zeros(nred)
        e0[0] = 1.0
        psi = -spla.spsolve(L, e0)
        if psi[0] <= 0:
            raise NoDescentError("boundary response is not positive; no candidate")
        beta = psi[0] ** (-1.0 / (p - 1.0))
        x, converged = newton_loop(beta ** p * psi, max_iter)
        if not converged:
            raise NoDescentError("Newton polish failed from the rank-one candidate")
    if np.max(np.abs(x)) < 1e-8:
        raise ConvergedToZeroError("collapsed to the trivial critical point; raise eps0")
    if x[0] < 0:
        x = -x  # J is even; report the nonnegative representative
    full = forms.embed(x)
    return full, functional_J(grid, full, p)
