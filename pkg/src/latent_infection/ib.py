"""Infection Betweenness.

The walk-weight matrix ``N = sum_r alpha^r A^r = (I - alpha A)^-1`` counts
walks between node pairs, each walk of length ``r`` discounted by
``alpha^r``. Walk mass from ``i`` to ``j`` routed through ``u`` is
approximated by ``N[i, u] * N[u, j]``; dividing by the total
``(N @ N)[i, j]`` gives the betweenness ``B_u(i, j)``, and a hidden node's
infection probability is ``1 - prod (1 - B_u(i, j))`` over unordered pairs
of observed infected nodes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from latent_infection.errors import DivergenceError, NumericError, UndefinedPairError
from latent_infection.graph import Graph

__all__ = [
    "PathWeightMatrix",
    "spectral_radius",
    "path_weight_matrix",
    "neumann_series",
    "path_weight_columns",
    "infection_betweenness",
    "infection_probability",
    "probability_from_rows",
    "check_alpha",
    "DENSE_LIMIT",
    "SERIES_TOL",
]

# reduced graphs above this size use the truncated series on the needed rows only
DENSE_LIMIT = 5000
# bound on the max-entry truncation error of the series
SERIES_TOL = 1e-12


def spectral_radius(g: Graph, tol: float = 1e-9, max_iter: int = 10000) -> float:
    """Largest adjacency eigenvalue by power iteration.

    Iterates on ``A + I`` from the all-ones vector, which keeps bipartite
    graphs (spectrum symmetric about 0) from oscillating, and tracks the
    Rayleigh quotient until its relative change drops below ``tol``.
    """
    if g.n < 1:
        raise ValueError("spectral radius of an empty graph")
    if g.m == 0:
        return 0.0
    A = g.adjacency()
    x = np.ones(g.n) / math.sqrt(g.n)
    prev = None
    for _ in range(max_iter):
        y = A @ x + x
        rq = float(x @ y)
        nrm = np.linalg.norm(y)
        if nrm == 0.0:
            return 0.0
        x = y / nrm
        if prev is not None and abs(rq - prev) <= tol * abs(rq):
            return rq - 1.0
        prev = rq
    raise NumericError(f"power iteration did not converge in {max_iter} steps (last estimate {prev - 1.0!r})")


@dataclass(frozen=True)
class PathWeightMatrix:
    n_matrix: np.ndarray
    alpha: float
    spectral_radius: float

    @property
    def size(self) -> int:
        return self.n_matrix.shape[0]

    def m_matrix(self) -> np.ndarray:
        """``N @ N``: total weighted walk mass between each pair through any node."""
        return self.n_matrix @ self.n_matrix

    def residual(self, g: Graph) -> float:
        """``max |(I - alpha A) N - I|``."""
        A = g.adjacency()
        N = self.n_matrix
        R = N - self.alpha * (A @ N) - np.eye(self.size)
        return float(np.abs(R).max()) if self.size else 0.0


def check_alpha(alpha: float, rho: float) -> None:
    if alpha < 0:
        raise ValueError(f"alpha must be non-negative, got {alpha}")
    if alpha * rho >= 1.0:
        raise DivergenceError(
            f"alpha={alpha} with spectral radius {rho:.6g}: alpha * rho = {alpha * rho:.6g} >= 1, walk series diverges"
        )


def path_weight_matrix(g: Graph, alpha: float, rho: float | None = None) -> PathWeightMatrix:
    """Dense ``(I - alpha A)^-1`` via LU factorization."""
    if rho is None:
        rho = spectral_radius(g) if g.n else 0.0
    check_alpha(alpha, rho)
    n = g.n
    if n == 0:
        return PathWeightMatrix(np.zeros((0, 0)), alpha, rho)
    K = np.eye(n) - alpha * g.adjacency().toarray()
    try:
        lu = sla.lu_factor(K, check_finite=False)
    except (ValueError, sla.LinAlgError) as exc:
        raise NumericError(f"factorization of I - alpha A failed: {exc}") from exc
    if np.any(np.diag(lu[0]) == 0.0):
        raise NumericError("I - alpha A is singular")
    N = sla.lu_solve(lu, np.eye(n), check_finite=False)
    N = (N + N.T) / 2.0
    N.setflags(write=False)
    return PathWeightMatrix(N, float(alpha), float(rho))


def _series_terms(alpha: float, rho: float, tol: float) -> int:
    q = alpha * rho
    if q == 0.0:
        return 1
    # tail sum_{r>R} q^r = q^(R+1) / (1 - q) bounds every entry of the remainder
    return max(1, math.ceil(math.log(tol * (1.0 - q)) / math.log(q)))


def neumann_series(g: Graph, alpha: float, tol: float = SERIES_TOL, rho: float | None = None) -> np.ndarray:
    """Dense ``sum_{r=0}^{R} alpha^r A^r`` with ``R`` chosen so the dropped tail is below ``tol``."""
    return path_weight_columns(g, alpha, np.arange(g.n), tol=tol, rho=rho)


def path_weight_columns(g: Graph, alpha: float, cols, tol: float = SERIES_TOL, rho: float | None = None) -> np.ndarray:
    """Columns ``N[:, cols]`` by the truncated walk series, using sparse products only.

    The result is ``(n, len(cols))``; by symmetry its transpose holds the rows.
    """
    if rho is None:
        rho = spectral_radius(g) if g.n else 0.0
    check_alpha(alpha, rho)
    cols = np.asarray(cols, dtype=np.int64)
    out = np.zeros((g.n, len(cols)))
    out[cols, np.arange(len(cols))] = 1.0
    if g.n == 0 or alpha == 0.0:
        return out
    A = g.adjacency()
    term = out.copy()
    for _ in range(_series_terms(alpha, rho, tol)):
        term = alpha * (A @ term)
        out += term
    return out


def infection_betweenness(pwm: PathWeightMatrix, u: int, i: int, j: int) -> float:
    """Share of the weighted ``i``-``j`` walk mass that passes through ``u``."""
    if i == j:
        raise ValueError("i and j must differ")
    N = pwm.n_matrix
    total = float(N[i] @ N[:, j])
    if total == 0.0:
        raise UndefinedPairError(f"no weighted walk between {i} and {j}")
    return float(N[i, u] * N[u, j] / total)


def probability_from_rows(rows: np.ndarray) -> np.ndarray:
    """Infection probability of every node from the walk-weight rows of the observed infected nodes.

    ``rows[a]`` is ``N[i_a, :]`` for the ``a``-th observed infected node.
    Returns one probability per node (entries for the observed nodes
    themselves are meaningless and left to the caller to drop).
    """
    k, n = rows.shape
    log_keep = np.zeros(n)
    if k < 2:
        return np.zeros(n)
    M = rows @ rows.T
    with np.errstate(divide="ignore"):
        for a in range(k - 1):
            denom = M[a, a + 1 :]
            if np.any(denom <= 0.0):
                raise UndefinedPairError("observed infected pair with zero walk mass")
            B = rows[a] * rows[a + 1 :] / denom[:, None]
            np.clip(B, 0.0, 1.0, out=B)
            log_keep += np.log1p(-B).sum(axis=0)
    return -np.expm1(log_keep)


def infection_probability(pwm: PathWeightMatrix, observed_infected) -> dict[int, float]:
    """``P(u) = 1 - prod_{i<j in I_o} (1 - B_u(i, j))`` for every node ``u`` not in ``observed_infected``.

    The product runs over unordered pairs and is accumulated in log space.
    Fewer than two observed infected nodes gives an empty product, so
    ``P = 0`` everywhere.
    """
    obs = sorted(int(v) for v in observed_infected)
    n = pwm.size
    if any(v < 0 or v >= n for v in obs):
        raise ValueError("observed infected node outside the reduced graph")
    p = probability_from_rows(pwm.n_matrix[obs, :]) if len(obs) >= 2 else np.zeros(n)
    skip = set(obs)
    return {u: float(p[u]) for u in range(n) if u not in skip}
