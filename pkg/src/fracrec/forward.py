"""Well-posed forward problem: interior solve, exterior data, measurement map.

Given exterior values f and a potential q on the interior region, the
discrete state u satisfies the interior collocation equations
(A u)|_omega + q * u|_omega = 0 with u = f on the exterior, where A is the
fractional Laplacian matrix.  The measurement map sends f to (A u)
restricted to an exterior window.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .grid import (
    GridFunction,
    IndexSets,
    SobolevMachinery,
    hs_norm,
    l2_norm,
)

__all__ = [
    "Potential",
    "ForwardSolution",
    "EigenvalueConditionError",
    "check_dirichlet_uniqueness",
    "solve_dirichlet",
    "dtn_apply",
    "bq_eval",
]

# relative threshold on the smallest singular value of the interior block
UNIQUENESS_RTOL = 1e-8


class EigenvalueConditionError(RuntimeError):
    """Interior operator is singular: zero is (numerically) a Dirichlet eigenvalue."""


@dataclass
class Potential:
    """Potential values on the omega nodes, with a regularity tag.

    regularity_tag is "bounded" or "continuous"; with a merely bounded
    potential the recovery theory needs s >= 1/4, and the pipeline warns
    when that hypothesis is violated.
    """

    values: np.ndarray
    regularity_tag: str = "continuous"

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values, dtype=float)
        if not np.all(np.isfinite(self.values)):
            raise ValueError("potential has non-finite values")
        if self.regularity_tag not in ("bounded", "continuous"):
            raise ValueError(f"unknown regularity tag {self.regularity_tag!r}")

    @property
    def sup_norm(self) -> float:
        return float(np.abs(self.values).max()) if len(self.values) else 0.0


@dataclass
class ForwardSolution:
    """State u together with its exterior datum and solve diagnostics."""

    u: GridFunction
    f: GridFunction
    interior_residual: float
    solver_conditioning: float


def _interior_matrix(m: SobolevMachinery, sets: IndexSets, q: Potential) -> np.ndarray:
    if len(q.values) != len(sets.omega):
        raise ValueError(
            f"potential has {len(q.values)} values but omega has {len(sets.omega)} nodes"
        )
    a_oo = m.frac_lap[np.ix_(sets.omega, sets.omega)]
    return a_oo + np.diag(q.values)


def check_dirichlet_uniqueness(
    m: SobolevMachinery, sets: IndexSets, q: Potential
) -> dict:
    """Check that the interior operator is safely invertible.

    Returns {"ok": bool, "margin": smallest singular value}.  The check
    passes when the smallest singular value of the interior block exceeds
    ``UNIQUENESS_RTOL`` times its spectral norm.
    """
    mat = _interior_matrix(m, sets, q)
    svals = sla.svdvals(mat)
    margin = float(svals[-1])
    ok = margin > UNIQUENESS_RTOL * float(svals[0])
    return {"ok": ok, "margin": margin}


def solve_dirichlet(
    m: SobolevMachinery, sets: IndexSets, q: Potential, f: GridFunction
) -> ForwardSolution:
    """Solve the exterior-value problem for the state u.

    f must be supported in the exterior; the returned u equals f on every
    exterior node bit-exactly and solves the interior equations by a dense
    factorization.  Raises EigenvalueConditionError when the interior
    operator is numerically singular.
    """
    if np.any(f.values[sets.omega] != 0.0):
        raise ValueError("exterior datum f has nonzero values on omega nodes")
    check = check_dirichlet_uniqueness(m, sets, q)
    if not check["ok"]:
        raise EigenvalueConditionError(
            f"interior operator singular (margin {check['margin']:.3e})"
        )
    mat = _interior_matrix(m, sets, q)
    coupling = m.frac_lap[np.ix_(sets.omega, sets.exterior)]
    rhs = -(coupling @ f.values[sets.exterior])
    u_vals = f.values.copy()
    u_vals[sets.omega] = sla.solve(mat, rhs, assume_a="sym")
    u = GridFunction(u_vals, m.box)

    res_vec = (m.frac_lap @ u_vals)[sets.omega] + q.values * u_vals[sets.omega]
    un = hs_norm(m, u)
    residual = l2_norm(m, res_vec) / un if un > 0 else 0.0
    fn = hs_norm(m, f)
    conditioning = un / fn if fn > 0 else 0.0
    return ForwardSolution(u=u, f=f.copy(), interior_residual=residual,
                           solver_conditioning=conditioning)


def dtn_apply(
    m: SobolevMachinery,
    sets: IndexSets,
    q: Potential,
    f: GridFunction,
    where: np.ndarray,
) -> np.ndarray:
    """Measurement map: values of A u on the node set `where` (inside the exterior)."""
    if not np.isin(where, sets.exterior).all():
        raise ValueError("measurement nodes must lie in the exterior")
    sol = solve_dirichlet(m, sets, q, f)
    return (m.frac_lap @ sol.u.values)[where]


def bq_eval(
    m: SobolevMachinery,
    sets: IndexSets,
    q: Potential,
    u: GridFunction,
    w: GridFunction,
) -> float:
    """Symmetric energy form: (A u, w)_L2 + (q u, w)_L2(omega)."""
    h = m.box.spacing
    quad = h * float(u.values @ (m.frac_lap @ w.values))
    om = sets.omega
    quad += h * float(np.sum(q.values * u.values[om] * w.values[om]))
    return quad
