"""Structure and convergence suites binding the two computation routes.

The structure suite evaluates the closed-form components on a
deterministic sample of time pairs and checks the exact relations they
must satisfy (causality, the equal-time jump, conjugation, Keldysh
anti-Hermiticity, the vanishing rotated block, thermal proportionality
where defined, the contour boundary conditions, and consistency of the
solved constants).  The oracle suite compares the closed forms against
the independently built discrete contour inverse on a sequence of grids
and fits the convergence order.

Both suites are deterministic given their seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import (
    DEFAULT_TOLERANCES,
    LevelSystem,
    TimeGrid,
    Tolerances,
    max_abs,
    propagator_stack,
    validate_system,
)
from .continuum import (
    ContourComponent,
    KeldyshComponent,
    component_table,
    fix_constants,
    keldysh_weight,
    rotated_block_layout,
    solution_from_constants,
)
from .discrete import (
    contour_branch_signs,
    contour_times,
    discrete_green,
    discrete_partition_function,
)

__all__ = [
    "CheckResult",
    "ConvergenceReport",
    "assemble_report",
    "chebyshev_interior",
    "continuum_contour_matrix",
    "oracle_checks",
    "oracle_error_bound",
    "run_oracle_suite",
    "run_structure_suite",
    "unequal_time_mask",
]

DEFAULT_THRESHOLD = 1e-12
# Below this error floor a convergence-order fit is meaningless.
ORDER_FLOOR = 1e-12
KELDYSH_SIGN_FLIP = "keldysh_sign_flip"


@dataclass(frozen=True)
class CheckResult:
    """Outcome of one structure check.

    ``passed`` is derived: it is true exactly when ``observed`` does not
    exceed ``threshold``.
    """

    name: str
    observed: float
    threshold: float
    details: str = ""
    passed: bool = field(init=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "passed", bool(self.observed <= self.threshold))

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "passed": self.passed,
            "observed": self.observed,
            "threshold": self.threshold,
            "details": self.details,
        }


@dataclass(frozen=True)
class ConvergenceReport:
    """Grid-resolved oracle comparison and fitted convergence order.

    ``fitted_order`` is None when every error sits at the roundoff
    floor (for example eps = 0, where the discrete inverse is exact)
    and an order fit would be meaningless.
    """

    grid_sizes: tuple[int, ...]
    errors: tuple[float, ...]
    error_bounds: tuple[float, ...]
    partition_deviations: tuple[float, ...]
    fitted_order: float | None
    details: str = ""

    def to_dict(self) -> dict:
        return {
            "grid_sizes": list(self.grid_sizes),
            "errors": list(self.errors),
            "error_bounds": list(self.error_bounds),
            "partition_deviations": list(self.partition_deviations),
            "fitted_order": self.fitted_order,
            "details": self.details,
        }


def chebyshev_interior(t_initial: float, t_final: float, count: int) -> np.ndarray:
    """Chebyshev-spaced points strictly inside (t_initial, t_final)."""
    k = np.arange(count)
    mid = 0.5 * (t_initial + t_final)
    half = 0.5 * (t_final - t_initial)
    return np.sort(mid + half * np.cos((2 * k + 1) * math.pi / (2 * count)))


def _component_tables(system, t_row, t_col, t_ref, tolerances, corruption):
    """R, A, K tables over t_row x t_col with optional Keldysh corruption."""
    ret = component_table(system, t_row, t_col, KeldyshComponent.RETARDED, t_ref, tolerances)
    adv = component_table(system, t_row, t_col, KeldyshComponent.ADVANCED, t_ref, tolerances)
    kel = component_table(system, t_row, t_col, KeldyshComponent.KELDYSH, t_ref, tolerances)
    if corruption == KELDYSH_SIGN_FLIP:
        flip = (np.asarray(t_row)[:, None] > np.asarray(t_col)[None, :])
        kel = np.where(flip[:, :, None, None], -kel, kel)
    elif corruption is not None:
        raise ValueError(f"unknown corruption {corruption!r}")
    return ret, adv, kel


def run_structure_suite(
    system: LevelSystem,
    *,
    t_initial: float = 0.0,
    t_final: float = 1.0,
    seed: int = 0,
    threshold: float = DEFAULT_THRESHOLD,
    tolerances: Tolerances = DEFAULT_TOLERANCES,
    corruption: str | None = None,
) -> list[CheckResult]:
    """Run all structure checks on a deterministic sample of time pairs.

    The sample crosses seven Chebyshev-spaced interior column times with
    the two endpoints plus three seeded interior row times.  Results are
    sorted by check name.  ``corruption`` is a test hook that flips the
    sign of the Keldysh component for t > t' before the checks run.
    """
    validate_system(system, tolerances)
    rng = np.random.default_rng(seed)
    d = system.dimension
    eye = np.eye(d)
    span = t_final - t_initial
    t_col = chebyshev_interior(t_initial, t_final, 7)
    t_interior = np.sort(t_initial + span * rng.uniform(0.05, 0.95, size=3))
    t_row = np.concatenate([[t_initial], t_interior, [t_final]])

    ret, adv, kel = _component_tables(
        system, t_row, t_col, t_initial, tolerances, corruption
    )
    ret_rev, adv_rev, kel_rev = _component_tables(
        system, t_col, t_row, t_initial, tolerances, corruption
    )
    delta = t_row[:, None] - t_col[None, :]
    results = []

    # Causality: retarded vanishes for t < t', advanced for t > t'.
    later = delta > 0
    earlier = delta < 0
    obs = 0.0
    if earlier.any():
        obs = max(obs, float(np.abs(ret[earlier]).max()))
    if later.any():
        obs = max(obs, float(np.abs(adv[later]).max()))
    results.append(CheckResult("causality", obs, threshold))

    # Equal-time jump: R(t,t) - A(t,t) = -i.
    diag = component_table(
        system, t_row, t_row, KeldyshComponent.RETARDED, t_initial, tolerances
    ) - component_table(
        system, t_row, t_row, KeldyshComponent.ADVANCED, t_initial, tolerances
    )
    idx = np.arange(t_row.size)
    obs = float(np.abs(diag[idx, idx] + 1j * eye).max())
    results.append(CheckResult("equal_time_jump", obs, threshold))

    # Conjugation: R(t,t')^dag = A(t',t).
    obs = float(
        np.abs(np.conjugate(np.swapaxes(ret, 2, 3)) - adv_rev.transpose(1, 0, 2, 3)).max()
    )
    results.append(CheckResult("conjugation", obs, threshold))

    # Keldysh anti-Hermiticity: K(t,t')^dag = -K(t',t).
    obs = float(
        np.abs(np.conjugate(np.swapaxes(kel, 2, 3)) + kel_rev.transpose(1, 0, 2, 3)).max()
    )
    results.append(CheckResult("keldysh_antihermiticity", obs, threshold))

    # The rotated zero block, assembled from the branch components.
    combo = {}
    for comp in ContourComponent:
        s_row = comp.row_branch.sign
        s_col = comp.col_branch.sign
        combo[comp.value] = (kel + s_col * ret + s_row * adv) / 2.0
    zero = (combo["++"] + combo["--"] - combo["+-"] - combo["-+"]) / 2.0
    results.append(CheckResult("zero_block", float(np.abs(zero).max()), threshold))

    # Thermal proportionality K = (R - A) (1 + 2 zeta nbar^T), defined
    # only when the occupation commutes with the energy matrix (the
    # transposed occupation must commute as well for the identity to
    # close).
    weight = keldysh_weight(system.nbar, system.statistics)
    comm = max_abs(system.epsilon @ system.nbar - system.nbar @ system.epsilon)
    comm_t = max_abs(system.epsilon @ system.nbar.T - system.nbar.T @ system.epsilon)
    if comm <= 1e-12 and comm_t <= 1e-12:
        mask = delta != 0
        diff = kel - (ret - adv) @ weight
        obs = float(np.abs(diff[mask]).max()) if mask.any() else 0.0
        results.append(CheckResult("fdt_proportionality", obs, threshold))
    else:
        results.append(
            CheckResult(
                "fdt_proportionality",
                0.0,
                threshold,
                details=(
                    "not applicable: occupation does not commute with the "
                    f"energy matrix (max |[eps, nbar]| = {comm:.3e})"
                ),
            )
        )

    # Boundary conditions: the second rotated row vanishes at the final
    # time; at the initial time the first row is -(1 + 2 zeta nbar^T)
    # times the second.
    layout = rotated_block_layout(system.statistics)

    def layout_value(row_idx, col_idx, table_row):
        comp = layout[row_idx][col_idx]
        if comp is KeldyshComponent.RETARDED:
            return ret[table_row]
        if comp is KeldyshComponent.ADVANCED:
            return adv[table_row]
        if comp is KeldyshComponent.KELDYSH:
            return kel[table_row]
        return np.zeros_like(ret[table_row])

    final_row = t_row.size - 1
    obs_final = 0.0
    for col_idx in range(2):
        obs_final = max(obs_final, float(np.abs(layout_value(1, col_idx, final_row)).max()))
    results.append(CheckResult("boundary_final", obs_final, threshold))

    obs_initial = 0.0
    for col_idx in range(2):
        top = layout_value(0, col_idx, 0)
        bottom = layout_value(1, col_idx, 0)
        obs_initial = max(obs_initial, float(np.abs(top + weight @ bottom).max()))
    results.append(CheckResult("boundary_initial", obs_initial, threshold))

    # Solved constants reproduce the closed forms at every position.
    constants = fix_constants(system.statistics, system.nbar, tolerances)
    obs = 0.0
    pairs = [(float(t), float(tp)) for t in t_row for tp in t_col]
    for row_idx in range(2):
        for col_idx in range(2):
            comp = layout[row_idx][col_idx]
            for t, tp in pairs:
                ansatz = solution_from_constants(
                    system, constants, row_idx, col_idx, t, tp,
                    t_ref=t_initial, tolerances=tolerances,
                )
                direct = component_table(
                    system, [t], [tp], comp, t_initial, tolerances
                )[0, 0]
                obs = max(obs, float(np.abs(ansatz - direct).max()))
    results.append(CheckResult("constant_fixing", obs, threshold))

    return sorted(results, key=lambda r: r.name)


def continuum_contour_matrix(
    system: LevelSystem,
    grid: TimeGrid,
    tolerances: Tolerances = DEFAULT_TOLERANCES,
) -> np.ndarray:
    """Continuum prediction for every block of the discrete inverse.

    Assembles the branch components at the contour-ordered times of the
    grid into one ``(2 N d, 2 N d)`` matrix.
    """
    validate_system(system, tolerances)
    d = system.dimension
    tau = contour_times(grid)
    signs = contour_branch_signs(grid)
    props = propagator_stack(system.epsilon, tau - grid.t_initial, tolerances)
    free = np.einsum("nab,mcb->nmac", props, props.conj())
    weight = keldysh_weight(system.nbar, system.statistics)
    kel = -1j * np.einsum("nab,mcb->nmac", props @ weight, props.conj())
    delta = tau[:, None] - tau[None, :]
    theta = np.where(delta > 0, 1.0, np.where(delta < 0, 0.0, 0.5))
    ret = -1j * theta[:, :, None, None] * free
    adv = 1j * (1.0 - theta)[:, :, None, None] * free
    full = (kel + signs[None, :, None, None] * ret + signs[:, None, None, None] * adv) / 2.0
    total = 2 * grid.n_slices * d
    return full.transpose(0, 2, 1, 3).reshape(total, total)


def unequal_time_mask(grid: TimeGrid, dimension: int) -> np.ndarray:
    """Boolean mask selecting blocks whose row and column times differ.

    Equal-time entries (the same-index diagonal and the cross-branch
    duplicates of one physical time) are excluded from continuum
    comparisons: the discrete inverse is contour ordered there while the
    closed forms carry the symmetric step value.
    """
    tau = contour_times(grid)
    distinct = tau[:, None] != tau[None, :]
    return np.kron(distinct, np.ones((dimension, dimension), dtype=bool))


def oracle_error_bound(system: LevelSystem, grid: TimeGrid) -> float:
    """First-order error allowance ``5 dt (1 + ||eps|| T)``."""
    span = grid.t_final - grid.t_initial
    norm = float(np.linalg.norm(system.epsilon, 2))
    return 5.0 * grid.dt * (1.0 + norm * span)


def run_oracle_suite(
    system: LevelSystem,
    grids: list[TimeGrid],
    tolerances: Tolerances = DEFAULT_TOLERANCES,
) -> ConvergenceReport:
    """Compare the discrete inverse against the closed forms per grid.

    Requires at least two grids with strictly increasing slice counts
    and identical endpoints.  Reports the maximum block error away from
    equal times, the error allowance, the partition-function deviation
    |Z - 1|, and the order fitted by least squares on the log-log error
    curve (None when all errors sit at the roundoff floor).
    """
    validate_system(system, tolerances)
    if len(grids) < 2:
        raise ValueError("need at least two grids for a convergence fit")
    sizes = [g.n_slices for g in grids]
    if any(b <= a for a, b in zip(sizes, sizes[1:])):
        raise ValueError("grid sizes must be strictly increasing")
    first = grids[0]
    if any(
        g.t_initial != first.t_initial or g.t_final != first.t_final for g in grids
    ):
        raise ValueError("grids must share their endpoints")
    errors = []
    bounds = []
    deviations = []
    for grid in grids:
        disc = discrete_green(system, grid, tolerances)
        cont = continuum_contour_matrix(system, grid, tolerances)
        mask = unequal_time_mask(grid, system.dimension)
        errors.append(float(np.abs((disc.matrix - cont))[mask].max()))
        bounds.append(oracle_error_bound(system, grid))
        z = discrete_partition_function(system, grid, tolerances)
        deviations.append(float(abs(z - 1.0)))
    if max(errors) < ORDER_FLOOR:
        order = None
        details = "errors at roundoff floor; order fit not applicable"
    else:
        slope = np.polyfit(np.log(sizes), np.log(errors), 1)[0]
        order = float(-slope)
        details = ""
    return ConvergenceReport(
        tuple(sizes),
        tuple(errors),
        tuple(bounds),
        tuple(deviations),
        order,
        details,
    )


def oracle_checks(report: ConvergenceReport) -> list[CheckResult]:
    """Pass/fail view of a convergence report for exit-code decisions."""
    checks = [
        CheckResult(
            f"oracle_error_n{size}",
            err,
            bound,
            details="max block deviation vs closed forms, off equal times",
        )
        for size, err, bound in zip(report.grid_sizes, report.errors, report.error_bounds)
    ]
    if report.fitted_order is None:
        checks.append(
            CheckResult(
                "oracle_order",
                0.0,
                0.2,
                details="not applicable: " + report.details,
            )
        )
    else:
        checks.append(
            CheckResult(
                "oracle_order",
                abs(report.fitted_order - 1.0),
                0.2,
                details=f"fitted order {report.fitted_order:.4f}",
            )
        )
    return checks


def assemble_report(
    structure: list[CheckResult],
    convergence: ConvergenceReport | None = None,
    extra_checks: list[CheckResult] | None = None,
) -> dict:
    """Versioned report document for serialization."""
    checks = list(structure) + list(extra_checks or [])
    return {
        "schema": 1,
        "checks": [c.to_dict() for c in checks],
        "convergence": convergence.to_dict() if convergence else None,
        "passed": all(c.passed for c in checks),
    }
