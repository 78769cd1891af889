"""First-order correction of the defeatured solution for internal features.

The defeatured solution ignores the feature entirely; its leading error
term is the mean of the boundary error on gamma.  That mean excites a
source-like response which is captured by the Green-type function
G = G_hat + g of the outer domain with pole at the feature barycenter,
where G_hat is the free-space fundamental solution of the Laplacian and
the corrector g cancels its outer boundary values.  Adding mu * mean * G
to the defeatured solution cancels the mean error component to first
order without ever meshing the exact domain.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .boundary import average, diameter, trace_of
from .errors import SolveError
from .fem import FEFunction, PoissonProblem, solve_poisson
from .mesh.core import Mesh


def fundamental_solution(points: np.ndarray, pole: np.ndarray) -> np.ndarray:
    """G_hat(x) = log|x - pole| / (2 pi), vectorized over points."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    pole = np.asarray(pole, dtype=float).reshape(2)
    r = np.hypot(points[:, 0] - pole[0], points[:, 1] - pole[1])
    if np.any(r == 0.0):
        raise ValueError("fundamental solution evaluated at its pole")
    return np.log(r) / (2.0 * np.pi)


def _normal_flux(pole: np.ndarray):
    """Outward normal derivative of G_hat as a flux callback."""
    px, py = float(pole[0]), float(pole[1])

    def flux(x, y, nx, ny):
        dx = x - px
        dy = y - py
        r2 = dx * dx + dy * dy
        return (dx * nx + dy * ny) / (2.0 * np.pi * r2)

    return flux


def solve_corrector(
    mesh: Mesh,
    pole,
    dirichlet_tags=("GammaD",),
    neumann_tags=(),
    tol: float = 1e-10,
    maxiter: int | None = None,
) -> FEFunction:
    """Harmonic corrector g with g = -G_hat on Dirichlet outer boundary
    and normal flux -dG_hat/dn on Neumann outer boundary."""
    pole = np.asarray(pole, dtype=float).reshape(2)
    ghat_flux = _normal_flux(pole)

    def neg_ghat(x, y):
        return -fundamental_solution(np.column_stack([x, y]), pole)

    def neg_flux(x, y, nx, ny):
        return -ghat_flux(x, y, nx, ny)

    problem = PoissonProblem(
        source=0.0,
        dirichlet={t: neg_ghat for t in dirichlet_tags},
        neumann={t: neg_flux for t in neumann_tags},
    )
    return solve_poisson(mesh, problem, tol=tol, maxiter=maxiter)


def mu_gamma(diam_gamma: float, g_avg_on_gamma: float) -> float:
    """Strength of the pole response matched to the feature scale.

    ``g_avg_on_gamma`` is the mean over gamma of the harmonic part of
    G_hat (the negative of the corrector's mean, see build_correction).
    The denominator vanishes when the feature scale hits the domain's
    logarithmic capacity radius; that configuration is rejected.
    """
    if not (diam_gamma > 0.0):
        raise ValueError("diameter must be positive")
    denom = np.log(0.5 * diam_gamma) - 2.0 * np.pi * g_avg_on_gamma
    if abs(denom) < 1e-12:
        raise ZeroDivisionError(
            "correction strength undefined: log(diam/2) equals the "
            "weighted corrector mean"
        )
    return float(2.0 * np.pi / denom)


@dataclass
class CorrectionData:
    """Everything needed to correct a defeatured solution in place."""

    pole: np.ndarray
    g_hat: np.ndarray          # nodal fundamental solution on the mesh
    corrector: FEFunction      # nodal corrector g
    mu: float
    d_avg: float               # mean boundary error being cancelled

    @property
    def green_values(self) -> np.ndarray:
        # the corrector carries -G_hat boundary data, so the sum is the
        # domain Green-type function, vanishing on the Dirichlet boundary
        return self.g_hat + self.corrector.values


def build_correction(
    mesh: Mesh,
    d_trace,
    pole,
    dirichlet_tags=("GammaD",),
    neumann_tags=(),
    gamma_tag: str = "gamma",
    tol: float = 1e-10,
    maxiter: int | None = None,
) -> CorrectionData:
    """Assemble the correction for a defeatured mesh and boundary error."""
    pole = np.asarray(pole, dtype=float).reshape(2)
    if gamma_tag not in mesh.facet_tags:
        raise SolveError(f"mesh has no facet tag {gamma_tag!r}")
    g = solve_corrector(
        mesh, pole, dirichlet_tags, neumann_tags, tol=tol, maxiter=maxiter
    )
    g_on_gamma = trace_of(g, gamma_tag)
    # -avg(g) is the mean of the harmonic part of G_hat, which is what
    # the strength formula expects
    mu = mu_gamma(diameter(mesh, gamma_tag), -average(g_on_gamma))
    g_hat = fundamental_solution(mesh.nodes, pole)
    return CorrectionData(
        pole=pole,
        g_hat=g_hat,
        corrector=g,
        mu=mu,
        d_avg=average(d_trace),
    )


def corrected_solution(u0: FEFunction, data: CorrectionData) -> FEFunction:
    """u1 = u0 + mu * mean(d) * (G_hat - g) on the defeatured mesh.

    Nodes inside the feature keep the corrected values but are excluded
    from error norms downstream, since those are taken on the exact
    domain only.
    """
    if data.corrector.mesh is not u0.mesh:
        if data.corrector.mesh.num_nodes != u0.mesh.num_nodes:
            raise SolveError("correction was built on a different mesh")
    values = u0.values + data.mu * data.d_avg * data.green_values
    return FEFunction(u0.mesh, values)
