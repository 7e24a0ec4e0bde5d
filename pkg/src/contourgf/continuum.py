"""Closed-form contour Green's functions fixed by boundary conditions.

Conventions
-----------
The statistics sign is ``zeta`` (+1 bosons, -1 fermions).  The
distribution parameter is ``rho = nbar (1 + zeta nbar)^(-1)`` and the
thermal occupation is ``nbar = 1/(exp((eps - mu)/T) - zeta)``.  With the
step function theta (value 1/2 at coinciding times) the components are

* retarded   ``G_R(t, t') = -i theta(t - t') exp(-i eps (t - t'))``
* advanced   ``G_A(t, t') = +i theta(t' - t) exp(-i eps (t - t'))``
* Keldysh    ``G_K(t, t') = -i exp(-i eps (t - ti)) (1 + 2 zeta nbar^T)
  exp(+i eps (t' - ti))``

where ``ti`` is the reference (initial) time and the transpose is plain
transposition, not conjugation.  For a single level the Keldysh factor
reduces to ``1 + 2 zeta nbar`` and the reference time drops out.  The
remaining rotated-basis component vanishes identically.

Contour-branch components follow from the same three functions:
``G^{bb'} = (G_K + s(b') G_R + s(b) G_A)/2`` with branch signs
``s(+) = +1`` and ``s(-) = -1``, identical for both statistics.

All functions are pure; nothing here keeps state between calls.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .core import (
    DEFAULT_TOLERANCES,
    Branch,
    DegenerateBoundarySystemError,
    LevelSystem,
    OccupationOutOfRangeError,
    Statistics,
    ThermalDivergenceError,
    Tolerances,
    as_complex_matrix,
    hermitian_eigensystem,
    propagator_stack,
    validate_system,
)

__all__ = [
    "ContourComponent",
    "KeldyshComponent",
    "SolutionConstants",
    "component_table",
    "contour_component",
    "fix_constants",
    "gf_component",
    "initial_boundary_ratio",
    "keldysh_rotate_boson",
    "keldysh_rotate_fermion",
    "keldysh_unrotate_boson",
    "keldysh_unrotate_fermion",
    "keldysh_weight",
    "normalization_prefactor",
    "regularized_step",
    "rho_from_nbar",
    "rotated_block_layout",
    "solution_from_constants",
    "thermal_nbar",
]

_SQRT2 = math.sqrt(2.0)


class KeldyshComponent(enum.Enum):
    """Components in the rotated (Keldysh) basis."""

    RETARDED = "R"
    ADVANCED = "A"
    KELDYSH = "K"
    ZERO = "zero"


class ContourComponent(enum.Enum):
    """Components labelled by (row branch, column branch)."""

    PLUS_PLUS = "++"
    PLUS_MINUS = "+-"
    MINUS_PLUS = "-+"
    MINUS_MINUS = "--"

    @property
    def row_branch(self) -> Branch:
        return Branch.FORWARD if self.value[0] == "+" else Branch.BACKWARD

    @property
    def col_branch(self) -> Branch:
        return Branch.FORWARD if self.value[1] == "+" else Branch.BACKWARD


def regularized_step(x: float) -> float:
    """Unit step with the symmetric value 1/2 at exactly zero."""
    if x > 0:
        return 1.0
    if x < 0:
        return 0.0
    return 0.5


def _occupation_eigensystem(nbar, statistics, tolerances):
    occ = as_complex_matrix(nbar, "nbar")
    vals, vecs = hermitian_eigensystem(occ, "nbar", tolerances)
    slack = tolerances.eigenvalue
    if vals.min() < -slack:
        raise OccupationOutOfRangeError(
            f"occupation eigenvalue {vals.min():.6g} below 0"
        )
    if statistics is Statistics.FERMION and vals.max() > 1 + slack:
        raise OccupationOutOfRangeError(
            f"fermionic occupation eigenvalue {vals.max():.6g} above 1"
        )
    return vals, vecs


def rho_from_nbar(
    nbar,
    statistics: Statistics,
    tolerances: Tolerances = DEFAULT_TOLERANCES,
):
    """Distribution parameter ``rho = nbar (1 + zeta nbar)^(-1)``.

    Scalar input gives a scalar; matrix input is mapped through the
    eigenbasis of ``nbar``.  Raises
    :class:`~contourgf.core.OccupationOutOfRangeError` when the
    occupation leaves the range allowed by the statistics, including the
    divergent fermionic endpoint ``nbar -> 1``.
    """
    zeta = statistics.zeta
    if np.isscalar(nbar) or np.ndim(nbar) == 0:
        val = complex(nbar).real
        if abs(complex(nbar).imag) > tolerances.hermitian * max(abs(val), 1.0):
            raise OccupationOutOfRangeError("scalar occupation must be real")
        vals, vecs = _occupation_eigensystem(val, statistics, tolerances)
        denom = 1 + zeta * vals[0]
        if abs(denom) <= tolerances.eigenvalue:
            raise OccupationOutOfRangeError(
                f"distribution parameter diverges at occupation {val:.6g}"
            )
        return float(vals[0] / denom)
    vals, vecs = _occupation_eigensystem(nbar, statistics, tolerances)
    denom = 1 + zeta * vals
    if np.abs(denom).min() <= tolerances.eigenvalue:
        raise OccupationOutOfRangeError(
            "distribution parameter diverges at occupation "
            f"{vals[np.abs(denom).argmin()]:.6g}"
        )
    return (vecs * (vals / denom)) @ vecs.conj().T


def thermal_nbar(
    epsilon: float,
    mu: float,
    temperature: float,
    statistics: Statistics,
) -> float:
    """Equilibrium occupation ``1/(exp((eps - mu)/T) - zeta)``.

    Bose-Einstein for bosons, Fermi-Dirac for fermions.  Bosons require
    ``eps > mu``; otherwise :class:`~contourgf.core.ThermalDivergenceError`
    is raised.  ``temperature`` must be positive.
    """
    if not temperature > 0:
        raise ValueError(f"temperature must be positive, got {temperature}")
    x = (epsilon - mu) / temperature
    zeta = statistics.zeta
    if statistics is Statistics.BOSON and x <= 0:
        raise ThermalDivergenceError(
            f"bosonic occupation diverges for eps - mu = {epsilon - mu:.6g} <= 0"
        )
    if x > 700.0:
        # exp(x) overflows; the occupation is exp(-x) to double precision.
        return math.exp(-x) if x < 745.0 else 0.0
    if statistics is Statistics.BOSON:
        return 1.0 / math.expm1(x)
    return 1.0 / (math.exp(x) + 1.0)


def normalization_prefactor(
    nbar,
    statistics: Statistics,
    tolerances: Tolerances = DEFAULT_TOLERANCES,
) -> float:
    """Partition-sum prefactor ``(1 - zeta rho)^zeta``.

    Equals ``1/(1 + nbar)`` for bosons and ``1 - nbar`` for fermions
    (the reciprocal of the two-state trace); matrix occupations use the
    determinant form ``det(1 - zeta rho)^zeta``.
    """
    zeta = statistics.zeta
    rho = rho_from_nbar(nbar, statistics, tolerances)
    if np.isscalar(rho):
        return float((1.0 - zeta * rho) ** zeta)
    d = rho.shape[0]
    det = np.linalg.det(np.eye(d) - zeta * rho)
    return float(det.real ** zeta)


def keldysh_rotate_boson(phi_plus, phi_minus):
    """Rotate branch fields to (classical, quantum) components.

    ``phi_cl = (phi_plus + phi_minus)/sqrt(2)``,
    ``phi_q = (phi_plus - phi_minus)/sqrt(2)``; conjugate fields rotate
    identically.
    """
    plus = np.asarray(phi_plus)
    minus = np.asarray(phi_minus)
    return (plus + minus) / _SQRT2, (plus - minus) / _SQRT2


def keldysh_unrotate_boson(phi_cl, phi_q):
    """Inverse of :func:`keldysh_rotate_boson`."""
    cl = np.asarray(phi_cl)
    q = np.asarray(phi_q)
    return (cl + q) / _SQRT2, (cl - q) / _SQRT2


def keldysh_rotate_fermion(phi_plus, phi_minus, phibar_plus, phibar_minus):
    """Rotate fermionic branch fields; barred fields rotate differently.

    Unbarred: ``phi_1 = (phi_plus + phi_minus)/sqrt(2)``,
    ``phi_2 = (phi_plus - phi_minus)/sqrt(2)``.
    Barred: ``phibar_1 = (phibar_plus - phibar_minus)/sqrt(2)``,
    ``phibar_2 = (phibar_plus + phibar_minus)/sqrt(2)``.
    """
    p = np.asarray(phi_plus)
    m = np.asarray(phi_minus)
    bp = np.asarray(phibar_plus)
    bm = np.asarray(phibar_minus)
    return (
        (p + m) / _SQRT2,
        (p - m) / _SQRT2,
        (bp - bm) / _SQRT2,
        (bp + bm) / _SQRT2,
    )


def keldysh_unrotate_fermion(phi_1, phi_2, phibar_1, phibar_2):
    """Inverse of :func:`keldysh_rotate_fermion`."""
    f1 = np.asarray(phi_1)
    f2 = np.asarray(phi_2)
    b1 = np.asarray(phibar_1)
    b2 = np.asarray(phibar_2)
    return (
        (f1 + f2) / _SQRT2,
        (f1 - f2) / _SQRT2,
        (b2 + b1) / _SQRT2,
        (b2 - b1) / _SQRT2,
    )


def keldysh_weight(nbar, statistics: Statistics) -> np.ndarray:
    """Statistical weight ``1 + 2 zeta nbar^T`` entering the Keldysh
    component and the initial-time boundary condition.

    The transpose is plain transposition (no conjugation).
    """
    occ = as_complex_matrix(nbar, "nbar")
    return np.eye(occ.shape[0]) + 2 * statistics.zeta * occ.T


def component_table(
    system: LevelSystem,
    t_values,
    t_prime_values,
    component,
    t_ref: float,
    tolerances: Tolerances = DEFAULT_TOLERANCES,
) -> np.ndarray:
    """Tabulate one component over all pairs from two time arrays.

    Parameters
    ----------
    system : LevelSystem
        Validated on entry.
    t_values, t_prime_values : 1-d arrays
        Row and column times.
    component : KeldyshComponent or ContourComponent
        Which component to evaluate.
    t_ref : float
        Reference (initial) time entering the Keldysh component.

    Returns
    -------
    Array of shape ``(len(t_values), len(t_prime_values), d, d)``.
    """
    validate_system(system, tolerances)
    t_row = np.asarray(t_values, dtype=float).reshape(-1)
    t_col = np.asarray(t_prime_values, dtype=float).reshape(-1)
    d = system.dimension
    p_row = propagator_stack(system.epsilon, t_row - t_ref, tolerances)
    p_col = propagator_stack(system.epsilon, t_col - t_ref, tolerances)
    delta = t_row[:, None] - t_col[None, :]
    theta = np.where(delta > 0, 1.0, np.where(delta < 0, 0.0, 0.5))

    def retarded():
        free = np.einsum("nab,mcb->nmac", p_row, p_col.conj())
        return -1j * theta[:, :, None, None] * free

    def advanced():
        free = np.einsum("nab,mcb->nmac", p_row, p_col.conj())
        return 1j * (1.0 - theta)[:, :, None, None] * free

    def keldysh():
        weight = keldysh_weight(system.nbar, system.statistics)
        return -1j * np.einsum("nab,mcb->nmac", p_row @ weight, p_col.conj())

    if isinstance(component, KeldyshComponent):
        if component is KeldyshComponent.RETARDED:
            return retarded()
        if component is KeldyshComponent.ADVANCED:
            return advanced()
        if component is KeldyshComponent.KELDYSH:
            return keldysh()
        return np.zeros((t_row.size, t_col.size, d, d), dtype=complex)
    if isinstance(component, ContourComponent):
        s_row = component.row_branch.sign
        s_col = component.col_branch.sign
        return (keldysh() + s_col * retarded() + s_row * advanced()) / 2.0
    raise TypeError(f"unsupported component {component!r}")


def gf_component(
    system: LevelSystem,
    component: KeldyshComponent,
    t: float,
    t_prime: float,
    *,
    t_ref: float,
    tolerances: Tolerances = DEFAULT_TOLERANCES,
) -> np.ndarray:
    """One rotated-basis component at a single time pair.

    ``t_ref`` is the initial time of the contour; it is required even
    for a single level so the call shape does not change with dimension.
    Returns a ``(d, d)`` complex matrix.
    """
    return component_table(system, [t], [t_prime], component, t_ref, tolerances)[0, 0]


def contour_component(
    system: LevelSystem,
    component: ContourComponent,
    t: float,
    t_prime: float,
    *,
    t_ref: float,
    tolerances: Tolerances = DEFAULT_TOLERANCES,
) -> np.ndarray:
    """One branch-labelled component at a single time pair.

    Assembled from the rotated-basis components through
    ``G^{bb'} = (G_K + s(b') G_R + s(b) G_A)/2``.
    """
    return component_table(system, [t], [t_prime], component, t_ref, tolerances)[0, 0]


def initial_boundary_ratio(nbar: float) -> float:
    """Quantum-to-classical boundary weight ``1/(1 + 2 nbar)`` at the
    initial time of a bosonic single level.

    Decays toward zero with growing occupation, which is the classical
    limit of the boundary condition.
    """
    val = float(nbar)
    if val < 0:
        raise OccupationOutOfRangeError(f"occupation {val:.6g} below 0")
    return 1.0 / (1.0 + 2.0 * val)


@dataclass(frozen=True)
class SolutionConstants:
    """Constant blocks of the general two-by-two contour solution.

    Fields are named by position in the rotated-basis ansatz.  For
    bosons the off-diagonal positions carry the step structure and the
    solved values are ``c11 = 1 + 2 nbar^T``, ``c12 = 0``, ``c21 = -1``,
    ``c22 = 0``; for fermions the diagonal positions carry the step
    structure and the solved values are ``c11 = 0``,
    ``c12 = 1 - 2 nbar^T``, ``c21 = 0``, ``c22 = -1``.
    """

    c11: np.ndarray
    c12: np.ndarray
    c21: np.ndarray
    c22: np.ndarray

    def to_scalars(self) -> tuple[complex, complex, complex, complex]:
        """The four constants as scalars (single-level systems only)."""
        if self.c11.shape != (1, 1):
            raise ValueError("constants are matrix valued")
        return (
            complex(self.c11[0, 0]),
            complex(self.c12[0, 0]),
            complex(self.c21[0, 0]),
            complex(self.c22[0, 0]),
        )


# Positions of the step-structured blocks in the two-by-two ansatz:
# the entry there is (c + theta(t - t')) while plain positions hold c.
_THETA_POSITIONS = {
    Statistics.BOSON: ((0, 1), (1, 0)),
    Statistics.FERMION: ((0, 0), (1, 1)),
}


def rotated_block_layout(
    statistics: Statistics,
) -> tuple[tuple[KeldyshComponent, KeldyshComponent], ...]:
    """Which physical component sits at each rotated-basis position.

    Bosons: ``[[K, R], [A, 0]]``.  Fermions: ``[[R, K], [0, A]]``.
    """
    if statistics is Statistics.BOSON:
        return (
            (KeldyshComponent.KELDYSH, KeldyshComponent.RETARDED),
            (KeldyshComponent.ADVANCED, KeldyshComponent.ZERO),
        )
    return (
        (KeldyshComponent.RETARDED, KeldyshComponent.KELDYSH),
        (KeldyshComponent.ZERO, KeldyshComponent.ADVANCED),
    )


def fix_constants(
    statistics: Statistics,
    nbar,
    tolerances: Tolerances = DEFAULT_TOLERANCES,
) -> SolutionConstants:
    """Solve the boundary conditions for the four constant blocks.

    The general solution of the contour equations of motion leaves one
    constant block per rotated-basis position.  Two conditions fix them:
    the second-row components vanish at the final time, and at the
    initial time the first row equals ``-(1 + 2 zeta nbar^T)`` times the
    second row.  Both are linear, so the blocks follow from one stacked
    least-squares solve sampled at interior column times; nothing is
    hard coded.

    Raises
    ------
    DegenerateBoundarySystemError
        If the stacked system is rank deficient.
    """
    occ = as_complex_matrix(nbar, "nbar")
    _occupation_eigensystem(occ, statistics, tolerances)
    d = occ.shape[0]
    dim = d * d
    weight = keldysh_weight(occ, statistics)
    theta_positions = _THETA_POSITIONS[statistics]
    eye_small = np.eye(d, dtype=complex)
    eye_vec = eye_small.reshape(-1)
    kron_eye = np.eye(dim, dtype=complex)
    kron_weight = np.kron(weight, np.eye(d))

    t_initial, t_final = 0.0, 1.0
    # Chebyshev-interior sample times; the step values they induce are
    # what enters the equations.
    k = np.arange(3)
    samples = 0.5 * (t_initial + t_final) + 0.5 * (t_final - t_initial) * np.cos(
        (2 * k + 1) * math.pi / 6
    )

    def block_column(row: int, col: int) -> slice:
        offset = (2 * row + col) * dim
        return slice(offset, offset + dim)

    rows = []
    rhs = []
    for t_prime in samples:
        step_final = regularized_step(t_final - t_prime)
        step_initial = regularized_step(t_initial - t_prime)
        # Second row vanishes at the final time.
        for col in range(2):
            coeff = np.zeros((dim, 4 * dim), dtype=complex)
            coeff[:, block_column(1, col)] = kron_eye
            shift = step_final if (1, col) in theta_positions else 0.0
            rows.append(coeff)
            rhs.append(-shift * eye_vec)
        # First row plus weight times second row vanishes at the initial
        # time.
        for col in range(2):
            coeff = np.zeros((dim, 4 * dim), dtype=complex)
            coeff[:, block_column(0, col)] = kron_eye
            coeff[:, block_column(1, col)] = kron_weight
            shift = step_initial if (0, col) in theta_positions else 0.0
            shift2 = step_initial if (1, col) in theta_positions else 0.0
            rows.append(coeff)
            rhs.append(-(shift * eye_vec + shift2 * (kron_weight @ eye_vec)))
    big_a = np.concatenate(rows, axis=0)
    big_b = np.concatenate(rhs, axis=0)
    solution, _, rank, _ = np.linalg.lstsq(big_a, big_b, rcond=None)
    if rank < 4 * dim:
        raise DegenerateBoundarySystemError(
            f"boundary system rank {rank} < {4 * dim}"
        )
    blocks = [
        solution[block_column(r, c)].reshape(d, d)
        for r in range(2)
        for c in range(2)
    ]
    return SolutionConstants(*blocks)


def solution_from_constants(
    system: LevelSystem,
    constants: SolutionConstants,
    row: int,
    col: int,
    t: float,
    t_prime: float,
    *,
    t_ref: float,
    tolerances: Tolerances = DEFAULT_TOLERANCES,
) -> np.ndarray:
    """Evaluate the general solution at one rotated-basis position.

    The constant block sits between the two propagators:
    ``-i exp(-i eps (t - t_ref)) [c + theta(t - t')] exp(+i eps
    (t' - t_ref))``, with the step term present only at the
    step-structured positions of the statistics' layout.  For a single
    level this is the familiar closed form; for many levels it is the
    solution whose boundary conditions stay time independent.
    """
    block = {
        (0, 0): constants.c11,
        (0, 1): constants.c12,
        (1, 0): constants.c21,
        (1, 1): constants.c22,
    }[(row, col)]
    d = system.dimension
    middle = np.array(block, dtype=complex, copy=True)
    if (row, col) in _THETA_POSITIONS[system.statistics]:
        middle += regularized_step(t - t_prime) * np.eye(d)
    left = propagator_stack(system.epsilon, np.array([t - t_ref]), tolerances)[0]
    right = propagator_stack(system.epsilon, np.array([t_prime - t_ref]), tolerances)[0]
    return -1j * left @ middle @ right.conj().T
