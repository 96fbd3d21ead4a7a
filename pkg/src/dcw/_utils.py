"""Numerical and concurrency helpers shared by the toolkit modules."""

from __future__ import annotations

from collections.abc import Callable, Iterable, Sequence
from concurrent.futures import ThreadPoolExecutor
from typing import TypeVar

import numpy as np

from dcw._exceptions import SingularMatrixError

T = TypeVar("T")
R = TypeVar("R")

MAX_CONDITION = 1e12
"""Condition number above which a matrix is treated as numerically singular."""

PSD_TOLERANCE = 1e-10
"""Relative tolerance: smallest eigenvalue >= -PSD_TOLERANCE * largest counts as psd."""


def symmetrize(matrix: np.ndarray) -> np.ndarray:
    """Return (A + A') / 2, which is exactly symmetric in floating point."""
    arr = np.asarray(matrix, dtype=np.float64)
    return (arr + arr.T) / 2.0


def eigen_extremes(matrix: np.ndarray) -> tuple[float, float]:
    """Smallest and largest eigenvalue of a symmetric matrix."""
    eigenvalues = np.linalg.eigvalsh(np.asarray(matrix, dtype=np.float64))
    return float(eigenvalues[0]), float(eigenvalues[-1])


def condition_number(matrix: np.ndarray) -> float:
    """Spectral condition number of a symmetric matrix (inf when singular or indefinite)."""
    low, high = eigen_extremes(matrix)
    if low <= 0.0:
        return float(np.inf)
    return high / low


def solve_symmetric(matrix: np.ndarray, rhs: np.ndarray, context: str = "matrix") -> np.ndarray:
    """Solve A x = b for a symmetric positive definite A.

    Raises:
        SingularMatrixError: If A is singular, indefinite, or has condition number above
            MAX_CONDITION
    """
    arr = np.asarray(matrix, dtype=np.float64)
    cond = condition_number(arr)
    if not np.isfinite(cond) or cond > MAX_CONDITION:
        raise SingularMatrixError(cond, context)
    try:
        return np.linalg.solve(arr, np.asarray(rhs, dtype=np.float64))
    except np.linalg.LinAlgError as e:
        raise SingularMatrixError(float("inf"), context) from e


def upper_triangle(stack: np.ndarray) -> np.ndarray:
    """Strict upper-triangle entries of an (..., M, M) stack as (..., K) vectors."""
    m = stack.shape[-1]
    rows, cols = np.triu_indices(m, k=1)
    return stack[..., rows, cols]


def parallel_map(func: Callable[[T], R], items: Iterable[T], threads: int = 1) -> list[R]:
    """Apply func to every item, optionally on a thread pool.

    Results are returned in input order whatever the scheduling, so output is
    deterministic. threads <= 1 runs sequentially in the calling thread.
    """
    work: Sequence[T] = list(items)
    if threads <= 1 or len(work) <= 1:
        return [func(item) for item in work]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(func, work))
