"""Discrete contour action matrix and its inverse.

The finite-difference contour action on an N-slice grid couples the
retained variables in contour order: forward slots 1..N (times t_1..t_N)
followed by backward slots N-1..0 (times t_{N-1}..t_0).  The quadratic
form matrix D of total dimension 2 N d has

* identity diagonal blocks,
* forward subdiagonal blocks ``-h`` with ``h = 1 - i eps dt``,
* a turning-point block ``-1`` (continuity between the branches, no
  evolution factor across the turn),
* backward subdiagonal blocks ``-hbar`` with ``hbar = 1 + i eps dt``
  (the backward action enters with an overall minus sign, reversing the
  finite-difference orientation),
* a corner block ``-zeta rho^T`` closing the contour through the
  initial distribution (plain transposition, matching the many-level
  Keldysh weight).

The discrete Green's function is ``-i D^{-1}``; its blocks approximate
the continuum branch components to first order in dt away from equal
times.  The partition function ``(det(1 - zeta rho))^zeta det(D)^{-zeta}``
equals one up to O(1/N), exactly for eps = 0 or nbar = 0.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import (
    DEFAULT_MAX_DIMENSION,
    DEFAULT_TOLERANCES,
    Branch,
    ContourIndex,
    GridTooLargeError,
    LevelSystem,
    TimeGrid,
    Tolerances,
    dense_invert,
    lu_factorization,
    validate_system,
)
from .continuum import ContourComponent, normalization_prefactor, rho_from_nbar

__all__ = [
    "ContourMatrix",
    "DiscreteGf",
    "build_contour_matrix",
    "contour_branch_signs",
    "contour_times",
    "discrete_green",
    "discrete_partition_function",
    "extract_component",
]


@dataclass(frozen=True)
class ContourMatrix:
    """The discrete quadratic-form matrix with its grid and system."""

    matrix: np.ndarray
    grid: TimeGrid
    system: LevelSystem


@dataclass(frozen=True)
class DiscreteGf:
    """Discrete Green's function ``-i D^{-1}`` with its grid and system."""

    matrix: np.ndarray
    grid: TimeGrid
    system: LevelSystem
    condition: float


def contour_times(grid: TimeGrid) -> np.ndarray:
    """Times of the 2N retained variables in contour order."""
    times = grid.times
    n = grid.n_slices
    return np.concatenate([times[1:], times[n - 1 :: -1]])


def contour_branch_signs(grid: TimeGrid) -> np.ndarray:
    """Branch sign (+1 forward, -1 backward) per contour position."""
    n = grid.n_slices
    return np.concatenate([np.ones(n), -np.ones(n)])


def build_contour_matrix(
    system: LevelSystem,
    grid: TimeGrid,
    tolerances: Tolerances = DEFAULT_TOLERANCES,
    max_dimension: int = DEFAULT_MAX_DIMENSION,
) -> ContourMatrix:
    """Assemble the discrete contour matrix D.

    Raises :class:`~contourgf.core.GridTooLargeError` when ``2 N d``
    exceeds ``max_dimension``.
    """
    validate_system(system, tolerances)
    d = system.dimension
    n = grid.n_slices
    total = 2 * n * d
    if total > max_dimension:
        raise GridTooLargeError(
            f"contour matrix dimension {total} exceeds cap {max_dimension}"
        )
    eye = np.eye(d, dtype=complex)
    dt = grid.dt
    forward = eye - 1j * system.epsilon * dt
    backward = eye + 1j * system.epsilon * dt
    rho = rho_from_nbar(system.nbar, system.statistics, tolerances)
    corner = np.atleast_2d(rho).T
    matrix = np.zeros((total, total), dtype=complex)
    for j in range(1, 2 * n + 1):
        matrix[(j - 1) * d : j * d, (j - 1) * d : j * d] = eye
    for j in range(2, n + 1):
        matrix[(j - 1) * d : j * d, (j - 2) * d : (j - 1) * d] = -forward
    matrix[n * d : (n + 1) * d, (n - 1) * d : n * d] = -eye
    for j in range(n + 2, 2 * n + 1):
        matrix[(j - 1) * d : j * d, (j - 2) * d : (j - 1) * d] = -backward
    matrix[0:d, (2 * n - 1) * d :] = -system.statistics.zeta * corner
    return ContourMatrix(matrix, grid, system)


def discrete_green(
    system: LevelSystem,
    grid: TimeGrid,
    tolerances: Tolerances = DEFAULT_TOLERANCES,
    max_dimension: int = DEFAULT_MAX_DIMENSION,
) -> DiscreteGf:
    """Invert the contour matrix: ``G = -i D^{-1}``.

    The inversion residual obeys the dense-inversion contract of
    :func:`~contourgf.core.dense_invert`; the condition estimate is
    carried on the result.
    """
    contour = build_contour_matrix(system, grid, tolerances, max_dimension)
    result = dense_invert(contour.matrix, tolerances)
    return DiscreteGf(-1j * result.matrix, grid, system, result.condition)


def discrete_partition_function(
    system: LevelSystem,
    grid: TimeGrid,
    tolerances: Tolerances = DEFAULT_TOLERANCES,
    max_dimension: int = DEFAULT_MAX_DIMENSION,
) -> complex:
    """Partition function ``(det(1 - zeta rho))^zeta det(D)^{-zeta}``.

    The determinant comes from the same LU factorization used for
    inversion (Gaussian integration gives ``det^{-1}`` for bosons and
    ``det`` for fermions).  Equals 1 exactly for ``eps = 0`` or
    ``nbar = 0`` and approaches 1 as O(1/N) otherwise.
    """
    contour = build_contour_matrix(system, grid, tolerances, max_dimension)
    factors = lu_factorization(contour.matrix, tolerances)
    zeta = system.statistics.zeta
    prefactor = normalization_prefactor(system.nbar, system.statistics, tolerances)
    return complex(prefactor * factors.determinant ** (-zeta))


def extract_component(
    gf: DiscreteGf,
    component: ContourComponent,
    n: int,
    m: int,
) -> tuple[np.ndarray, float, float]:
    """One ``(d, d)`` block of the discrete Green's function.

    ``n`` and ``m`` are slice indices on the row and column branches
    selected by ``component``.  Eliminated variables (forward slot 0,
    backward slot N) raise
    :class:`~contourgf.core.IndexOutOfRangeError`.

    Returns
    -------
    (block, t, t_prime)
        The block and the physical times of the two slots.
    """
    grid = gf.grid
    d = gf.system.dimension
    row = ContourIndex(component.row_branch, n)
    col = ContourIndex(component.col_branch, m)
    j = row.position(grid.n_slices)
    k = col.position(grid.n_slices)
    block = gf.matrix[(j - 1) * d : j * d, (k - 1) * d : k * d]
    return block, row.time(grid), col.time(grid)
