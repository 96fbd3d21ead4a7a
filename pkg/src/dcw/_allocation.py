"""Minimum-variance allocation under the budget and gross-exposure constraints.

The exposure-constrained problem

    minimize (w - c)' Q (w - c)  subject to  i'w = 1,  sum_i |w_i| <= EC

is solved as a strictly convex QP in x = [u; v] with w = u - v and u, v >= 0.
A tiny ridge on u and v makes the QP strictly convex, keeps u_i v_i = 0 at the
optimum and selects the minimum-norm solution on degenerate faces. With Q = Omega
and c = 0 this is the constrained minimum-variance portfolio; with Q = I it is the
Euclidean projection of c onto the feasible set.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Callable

import numpy as np
from pydantic import Field
from scipy.optimize import minimize_scalar

from dcw._base import DCWBaseModel, FloatArray
from dcw._config import SolverConfig
from dcw._exceptions import AllocationError, DomainError, SingularMatrixError
from dcw._forecast import CovarianceForecast
from dcw._utils import solve_symmetric

logger = logging.getLogger(__name__)


class ActiveSet(DCWBaseModel):
    """Working set of inequality constraints at a solution.

    Indices 0..M-1 are the bounds u_i >= 0, M..2M-1 the bounds v_i >= 0 and 2M is
    the exposure row.
    """

    n_assets: int = Field(ge=1)
    constraints: tuple[int, ...] = ()


class AllocationResult(DCWBaseModel):
    """Weights chosen for one day.

    Attributes:
        weights: Portfolio weights (sum to one)
        objective: (w - c)' Q (w - c); the portfolio variance w' Omega w for allocations
        binding: Whether the exposure constraint is active
        iterations: Active-set iterations (0 for closed-form solutions)
        active_set: Final working set for warm-starting the next day
    """

    weights: FloatArray
    objective: float
    binding: bool = False
    iterations: int = 0
    active_set: ActiveSet | None = None

    @property
    def exposure(self) -> float:
        """Gross exposure sum_i |w_i|."""
        return float(np.abs(self.weights).sum())


def _matrix(omega: CovarianceForecast | np.ndarray) -> np.ndarray:
    values = omega.values if isinstance(omega, CovarianceForecast) else omega
    return np.asarray(values, dtype=np.float64)


def _check_exposure(ec: float) -> None:
    if not ec >= 1.0:
        raise DomainError(f"exposure constraint must be >= 1, got {ec}")


def min_variance(omega: CovarianceForecast | np.ndarray) -> AllocationResult:
    """Global minimum-variance weights (i'Omega^-1 i)^-1 Omega^-1 i.

    Raises:
        SingularMatrixError: If Omega is singular or ill-conditioned
    """
    q = _matrix(omega)
    x = solve_symmetric(q, np.ones(len(q)), "covariance forecast")
    total = float(x.sum())
    weights = x / total
    return AllocationResult(weights=weights, objective=float(weights @ q @ weights))


def _unconstrained(q: np.ndarray, center: np.ndarray) -> np.ndarray:
    """argmin (w - c)'Q(w - c) subject to i'w = 1."""
    x = solve_symmetric(q, np.ones(len(q)), "allocation matrix")
    return center + x * (1.0 - center.sum()) / x.sum()


class _SplitQP:
    """The u/v split of the exposure-constrained problem in 'A x >= b' form."""

    def __init__(self, q: np.ndarray, center: np.ndarray, ec: float, cfg: SolverConfig) -> None:
        m = len(center)
        self.m = m
        self.n = 2 * m
        self.cfg = cfg
        self.scale = max(float(np.trace(q)) / m, np.finfo(float).tiny)
        ridge = cfg.regularization * self.scale
        self.G = 2.0 * np.block([[q, -q], [-q, q]]) + 2.0 * ridge * np.eye(self.n)
        qc = q @ center
        self.g = np.concatenate([-2.0 * qc, 2.0 * qc])
        ones = np.ones(m)
        self.a_eq = np.concatenate([ones, -ones])
        self.a_in = np.vstack([np.eye(self.n), -np.concatenate([ones, ones])[None, :]])
        self.b_in = np.concatenate([np.zeros(self.n), [-ec]])

    def _kkt(self, working: list[int], rhs_top: np.ndarray, rhs_bottom: np.ndarray) -> np.ndarray:
        a = np.vstack([self.a_eq[None, :], self.a_in[working]]) if working else self.a_eq[None, :]
        k = a.shape[0]
        kkt = np.block([[self.G, -a.T], [a, np.zeros((k, k))]])
        rhs = np.concatenate([rhs_top, rhs_bottom])
        try:
            return np.linalg.solve(kkt, rhs)
        except np.linalg.LinAlgError:
            return np.linalg.lstsq(kkt, rhs, rcond=None)[0]

    def step(self, x: np.ndarray, working: list[int]) -> tuple[np.ndarray, np.ndarray]:
        """Step to the minimizer on the working set, and the working-set multipliers."""
        sol = self._kkt(working, -(self.G @ x + self.g), np.zeros(1 + len(working)))
        return sol[: self.n], sol[self.n + 1 :]

    def solve_on(self, working: list[int]) -> np.ndarray:
        """Minimizer with every working-set constraint held as an equality."""
        bottom = np.concatenate([[1.0], self.b_in[working]])
        return self._kkt(working, -self.g, bottom)[: self.n]

    def feasible(self, x: np.ndarray) -> bool:
        tol = self.cfg.constraint_tol
        return bool(
            abs(self.a_eq @ x - 1.0) <= tol and np.all(self.a_in @ x - self.b_in >= -tol)
        )

    def cold_start(self, q: np.ndarray, center: np.ndarray) -> tuple[np.ndarray, list[int]]:
        """Vertex u = e_k at the best single-asset portfolio; every other bound active."""
        eye = np.eye(self.m)
        costs = [float((eye[k] - center) @ q @ (eye[k] - center)) for k in range(self.m)]
        k = int(np.argmin(costs))
        x = np.zeros(self.n)
        x[k] = 1.0
        return x, [i for i in range(self.n) if i != k]

    def run(self, x: np.ndarray, working: list[int]) -> tuple[np.ndarray, list[int], int]:
        cfg = self.cfg
        multiplier_tol = cfg.kkt_tol * max(1.0, self.scale)
        for iteration in range(1, cfg.max_iter + 1):
            p, lam = self.step(x, working)
            if np.max(np.abs(p)) <= cfg.kkt_tol:
                if not working or lam.min() >= -multiplier_tol:
                    return x, working, iteration
                working.pop(int(np.argmin(lam)))
                continue
            ap = self.a_in @ p
            slack = self.a_in @ x - self.b_in
            alpha, blocking = 1.0, -1
            for i in range(len(ap)):
                if i in working or ap[i] >= -1e-14:
                    continue
                ratio = max(slack[i], 0.0) / -ap[i]
                if ratio < alpha:
                    alpha, blocking = ratio, i
            x = x + alpha * p
            if blocking >= 0:
                working.append(blocking)
        raise AllocationError(cfg.max_iter, float(-self.b_in[-1]))


def _solve_exposure_qp(
    q: np.ndarray,
    center: np.ndarray,
    ec: float,
    cfg: SolverConfig,
    warm: ActiveSet | None,
) -> AllocationResult:
    _check_exposure(ec)
    m = len(center)
    if math.isinf(ec):
        w = _unconstrained(q, center)
        return AllocationResult(weights=w, objective=float((w - center) @ q @ (w - center)))
    free: np.ndarray | None
    try:
        free = _unconstrained(q, center)
    except SingularMatrixError:
        free = None
    if free is not None and np.abs(free).sum() <= ec + cfg.constraint_tol:
        return AllocationResult(weights=free, objective=float((free - center) @ q @ (free - center)))

    qp = _SplitQP(q, center, ec, cfg)
    start: tuple[np.ndarray, list[int]] | None = None
    if cfg.warm_start and warm is not None and warm.n_assets == m:
        working = sorted(warm.constraints)
        candidate = qp.solve_on(working)
        if qp.feasible(candidate):
            start = candidate, working
        else:
            logger.debug("Warm start infeasible; falling back to cold start")
    if start is None:
        start = qp.cold_start(q, center)

    try:
        _, working, iterations = qp.run(*start)
    except AllocationError:
        if not cfg.fallback_long_only or ec == 1.0:
            raise
        logger.warning("Active-set method did not converge at EC=%g; retrying long-only", ec)
        return _solve_exposure_qp(q, center, 1.0, cfg, None)
    working = sorted(working)
    x = np.maximum(qp.solve_on(working), 0.0)
    w = x[:m] - x[m:]
    exposure = float(np.abs(w).sum())
    return AllocationResult(
        weights=w,
        objective=float((w - center) @ q @ (w - center)),
        binding=exposure >= ec - cfg.constraint_tol,
        iterations=iterations,
        active_set=ActiveSet(n_assets=m, constraints=tuple(working)),
    )


def constrained_min_variance(
    omega: CovarianceForecast | np.ndarray,
    ec: float,
    cfg: SolverConfig | None = None,
    warm: ActiveSet | None = None,
) -> AllocationResult:
    """Minimum-variance weights with gross exposure sum_i |w_i| <= EC.

    If the unconstrained solution already satisfies the exposure bound it is
    returned with binding=False. Otherwise an active-set method solves the
    u/v-split QP, optionally warm-started from a previous day's working set.

    Args:
        omega: Positive definite covariance forecast
        ec: Exposure bound >= 1 (math.inf for unconstrained)
        cfg: Solver tolerances and limits
        warm: Working set of a previous solution

    Returns:
        AllocationResult with objective w' Omega w

    Raises:
        DomainError: If ec < 1
        AllocationError: If the active-set method does not converge
    """
    q = _matrix(omega)
    return _solve_exposure_qp(q, np.zeros(len(q)), ec, cfg or SolverConfig(), warm)


def project_weights(
    target: np.ndarray,
    ec: float,
    cfg: SolverConfig | None = None,
    warm: ActiveSet | None = None,
) -> AllocationResult:
    """Closest weights (Euclidean) to target with i'w = 1 and sum_i |w_i| <= EC.

    Used to impose an exposure bound on strategies that forecast weights directly.
    """
    c = np.asarray(target, dtype=np.float64)
    return _solve_exposure_qp(np.eye(len(c)), c, ec, cfg or SolverConfig(), warm)


def _pattern_search_2d(
    evaluate: Callable[[np.ndarray, np.ndarray], np.ndarray],
    start: np.ndarray,
    step: float,
    levels: int,
) -> np.ndarray:
    """Refine a 2-D grid optimum with shrinking 41x41 windows.

    At each level the window recenters on its best point until that point is interior.
    """
    best = start
    for _ in range(levels):
        step /= 10.0
        offsets = step * np.arange(-20, 21)
        for _ in range(1000):
            t1, t2 = np.meshgrid(best[0] + offsets, best[1] + offsets, indexing="ij")
            values = evaluate(t1.ravel(), t2.ravel())
            k = int(np.argmin(values))
            i, j = divmod(k, len(offsets))
            best = np.array([t1.ravel()[k], t2.ravel()[k]])
            if 0 < i < len(offsets) - 1 and 0 < j < len(offsets) - 1:
                break
    return best


def _two_asset_search(q: np.ndarray, ec: float) -> np.ndarray:
    """Minimize over w = (t, 1 - t) piece by piece of sum_i |w_i|, kinked at t = 0 and t = 1."""

    def variance(t: float) -> float:
        w = np.array([t, 1.0 - t])
        return float(w @ q @ w)

    if math.isinf(ec):
        best = minimize_scalar(variance, method="brent", options={"xtol": 1e-14}).x
        return np.array([best, 1.0 - best])

    lo, hi = (1.0 - ec) / 2.0, (1.0 + ec) / 2.0
    knots = [lo] + [k for k in (0.0, 1.0) if lo < k < hi] + [hi]
    candidates = list(knots)
    for left, right in zip(knots[:-1], knots[1:]):
        found = minimize_scalar(
            variance, bounds=(left, right), method="bounded", options={"xatol": 1e-13}
        )
        candidates.append(float(found.x))
    best = min(candidates, key=variance)
    return np.array([best, 1.0 - best])


def qp_oracle(
    omega: CovarianceForecast | np.ndarray, ec: float, step: float = 1e-4, refine: int = 5
) -> np.ndarray:
    """Brute-force exposure-constrained minimum-variance weights for M <= 3.

    For M = 2 the weights are (t, 1 - t) with t in [(1 - EC)/2, (1 + EC)/2]; a bounded
    scalar search runs on each linear piece of the exposure and the best of the
    piece minima and knots wins. For M = 3 the budget hyperplane restricted to
    sum |w_i| <= EC is searched on a coarse grid of step max(step, 0.02), and the
    best grid point is refined by `refine` levels of local grids, each ten times
    finer than the last.

    Raises:
        DomainError: If M > 3 or ec < 1
    """
    q = _matrix(omega)
    m = len(q)
    _check_exposure(ec)
    if m > 3:
        raise DomainError(f"qp_oracle supports M <= 3, got M = {m}")
    if m == 1:
        return np.ones(1)
    if m == 2:
        return _two_asset_search(q, ec)
    if math.isinf(ec):
        return min_variance(q).weights

    bound = (ec + 1.0) / 2.0

    def objective(t1: np.ndarray, t2: np.ndarray) -> np.ndarray:
        w = np.stack([t1, t2, 1.0 - t1 - t2], axis=-1)
        values = np.einsum("...i,ij,...j->...", w, q, w)
        infeasible = np.abs(w).sum(axis=-1) > ec
        return np.where(infeasible, np.inf, values)

    coarse = max(step, 0.02)
    axis = np.arange(-bound, bound + coarse / 2, coarse)
    t1, t2 = np.meshgrid(axis, axis, indexing="ij")
    values = objective(t1, t2)
    k = np.unravel_index(int(np.argmin(values)), values.shape)
    best = _pattern_search_2d(objective, np.array([t1[k], t2[k]]), coarse, refine)
    return np.array([best[0], best[1], 1.0 - best[0] - best[1]])
