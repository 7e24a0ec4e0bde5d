"""Command-line interface.

Subcommands
-----------
``gf``        tabulate components over the time grid (CSV or JSON)
``verify``    run the structure suite and, when a list of slice counts
              is configured, the discrete-oracle convergence suite;
              always writes a JSON report, exits 0 only if every check
              passed
``z``         print the discrete partition function per slice count
``converge``  run the convergence suite and emit its report

Configuration is a JSON file passed with ``--config``.  Any scalar
field can be overridden on the command line by its dotted path, for
example ``--grid.n_slices 64`` or ``--statistics fermion``.

Exit codes: 0 success, 1 verification failure, 2 configuration error,
3 numerical error.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass

import numpy as np

from .continuum import (
    ContourComponent,
    KeldyshComponent,
    component_table,
    thermal_nbar,
)
from .core import (
    DEFAULT_MAX_DIMENSION,
    DEFAULT_TOLERANCES,
    DegenerateBoundarySystemError,
    GridTooLargeError,
    LevelSystem,
    NonHermitianError,
    OccupationOutOfRangeError,
    SingularMatrixError,
    Statistics,
    ThermalDivergenceError,
    TimeGrid,
    Tolerances,
    max_abs,
    validate_system,
)
from .discrete import discrete_partition_function
from .verify import (
    KELDYSH_SIGN_FLIP,
    assemble_report,
    oracle_checks,
    run_oracle_suite,
    run_structure_suite,
)

__all__ = ["ConfigError", "entry_point", "main"]

EXIT_OK = 0
EXIT_VERIFICATION = 1
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3

COMPONENT_NAMES = {
    "R": KeldyshComponent.RETARDED,
    "A": KeldyshComponent.ADVANCED,
    "K": KeldyshComponent.KELDYSH,
    "qq": KeldyshComponent.ZERO,
    "++": ContourComponent.PLUS_PLUS,
    "+-": ContourComponent.PLUS_MINUS,
    "-+": ContourComponent.MINUS_PLUS,
    "--": ContourComponent.MINUS_MINUS,
    # Aliases by position in the fermionic rotated-block layout.
    "11": KeldyshComponent.RETARDED,
    "12": KeldyshComponent.KELDYSH,
    "21": KeldyshComponent.ZERO,
    "22": KeldyshComponent.ADVANCED,
}

CSV_HEADER = "t,t_prime,component,row,col,re,im"


class ConfigError(Exception):
    """Invalid or inconsistent run configuration."""


@dataclass(frozen=True)
class GfSample:
    """One tabulated matrix entry of one component."""

    t: float
    t_prime: float
    component: str
    row: int
    col: int
    value: complex

    def to_dict(self) -> dict:
        return {
            "t": self.t,
            "t_prime": self.t_prime,
            "component": self.component,
            "row": self.row,
            "col": self.col,
            "re": self.value.real,
            "im": self.value.imag,
        }


@dataclass
class RunConfig:
    """Validated run configuration."""

    system: LevelSystem
    t_initial: float
    t_final: float
    n_slices: int | None
    n_slices_list: list[int]
    output_format: str
    components: list[str]
    output_path: str | None
    seed: int
    threshold: float
    max_dimension: int
    tolerances: Tolerances

    def grid(self) -> TimeGrid:
        if self.n_slices is None:
            raise ConfigError("grid.n_slices must be a single integer here")
        return TimeGrid(self.t_initial, self.t_final, self.n_slices)

    def grids(self) -> list[TimeGrid]:
        return [TimeGrid(self.t_initial, self.t_final, n) for n in self.n_slices_list]


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def _parse_matrix(value, name: str) -> np.ndarray:
    if isinstance(value, (int, float)):
        return np.array([[value]], dtype=complex)
    if isinstance(value, list):
        try:
            return np.array(value, dtype=complex)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"{name} is not a numeric matrix: {exc}") from exc
    if isinstance(value, dict) and set(value) <= {"re", "im"}:
        try:
            real = np.array(value.get("re", 0), dtype=float)
            imag = np.array(value.get("im", 0), dtype=float)
            return real + 1j * imag
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"{name} is not a numeric matrix: {exc}") from exc
    raise ConfigError(f"{name} must be a number, a nested list, or re/im parts")


def _build_system(raw: dict, tolerances: Tolerances) -> LevelSystem:
    try:
        statistics = Statistics(str(raw["statistics"]).lower())
    except KeyError as exc:
        raise ConfigError("missing field: statistics") from exc
    except ValueError as exc:
        raise ConfigError(f"unknown statistics {raw['statistics']!r}") from exc
    if "epsilon" not in raw:
        raise ConfigError("missing field: epsilon")
    if "nbar" not in raw:
        raise ConfigError("missing field: nbar")
    epsilon = _parse_matrix(raw["epsilon"], "epsilon")
    occ_raw = raw["nbar"]
    if isinstance(occ_raw, dict) and "mu" in occ_raw:
        extra = set(occ_raw) - {"mu", "T"}
        if extra or "T" not in occ_raw:
            raise ConfigError("thermal nbar must be exactly {mu, T}")
        mu = float(occ_raw["mu"])
        temperature = float(occ_raw["T"])
        if temperature <= 0:
            raise ConfigError(f"temperature must be positive, got {temperature}")
        diag = np.diag(np.diag(epsilon))
        if max_abs(epsilon - diag) > 0:
            raise ConfigError(
                "thermal nbar requires a diagonal epsilon (one energy per level)"
            )
        levels = np.diag(epsilon).real
        occ = np.diag(
            [thermal_nbar(float(e), mu, temperature, statistics) for e in levels]
        )
    else:
        occ = _parse_matrix(occ_raw, "nbar")
    try:
        system = LevelSystem(epsilon, occ, statistics)
        validate_system(system, tolerances)
    except (ValueError, NonHermitianError, OccupationOutOfRangeError) as exc:
        raise ConfigError(str(exc)) from exc
    return system


def build_run_config(raw: dict) -> RunConfig:
    """Validate the raw config dict into a RunConfig."""
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a JSON object")
    tol_raw = raw.get("tolerances", {})
    if not isinstance(tol_raw, dict):
        raise ConfigError("tolerances must be an object")
    known = {"hermitian", "eigenvalue", "unitarity", "inverse", "condition_warn"}
    if set(tol_raw) - known:
        raise ConfigError(f"unknown tolerance keys {sorted(set(tol_raw) - known)}")
    try:
        tolerances = Tolerances(
            **{key: float(val) for key, val in tol_raw.items()}
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad tolerances: {exc}") from exc

    system = _build_system(raw, tolerances)

    t_initial, t_final = 0.0, 1.0
    n_single: int | None = None
    n_list: list[int] = []
    grid_raw = raw.get("grid")
    if grid_raw is not None:
        if not isinstance(grid_raw, dict):
            raise ConfigError("grid must be an object")
        try:
            t_initial = float(grid_raw.get("t_initial", 0.0))
            t_final = float(grid_raw.get("t_final", 1.0))
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad grid endpoints: {exc}") from exc
        if not t_final > t_initial:
            raise ConfigError("grid.t_final must exceed grid.t_initial")
        slices = grid_raw.get("n_slices")
        if slices is None:
            raise ConfigError("grid.n_slices is required when grid is present")
        if isinstance(slices, list):
            if not slices or not all(
                isinstance(n, int) and not isinstance(n, bool) and n >= 1
                for n in slices
            ):
                raise ConfigError("grid.n_slices list must hold positive integers")
            n_list = list(slices)
        elif isinstance(slices, int) and not isinstance(slices, bool) and slices >= 1:
            n_single = slices
            n_list = [slices]
        else:
            raise ConfigError(f"bad grid.n_slices: {slices!r}")

    out_raw = raw.get("output", {})
    if not isinstance(out_raw, dict):
        raise ConfigError("output must be an object")
    output_format = out_raw.get("format", "csv")
    if output_format not in ("csv", "json"):
        raise ConfigError(f"unknown output format {output_format!r}")
    components = out_raw.get("components", ["R", "A", "K"])
    if not isinstance(components, list) or not components:
        raise ConfigError("output.components must be a nonempty list")
    for name in components:
        if name not in COMPONENT_NAMES:
            raise ConfigError(
                f"unknown component {name!r}; valid: {sorted(COMPONENT_NAMES)}"
            )
    output_path = out_raw.get("path")
    if output_path is not None and not isinstance(output_path, str):
        raise ConfigError("output.path must be a string or null")

    try:
        seed = int(raw.get("seed", 0))
        threshold = float(raw.get("threshold", 1e-12))
        max_dimension = int(raw.get("max_dimension", DEFAULT_MAX_DIMENSION))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad scalar field: {exc}") from exc

    return RunConfig(
        system=system,
        t_initial=t_initial,
        t_final=t_final,
        n_slices=n_single,
        n_slices_list=n_list,
        output_format=output_format,
        components=list(components),
        output_path=output_path,
        seed=seed,
        threshold=threshold,
        max_dimension=max_dimension,
        tolerances=tolerances,
    )


def apply_overrides(raw: dict, overrides: list[str]) -> dict:
    """Apply ``--dotted.path value`` pairs onto the config dict."""
    if len(overrides) % 2 != 0:
        raise ConfigError(f"dangling override {overrides[-1]!r} (expected a value)")
    for flag, text in zip(overrides[::2], overrides[1::2]):
        if not flag.startswith("--"):
            raise ConfigError(f"expected --path value pairs, got {flag!r}")
        path = flag[2:].split(".")
        if not all(path):
            raise ConfigError(f"bad override path {flag!r}")
        try:
            value = json.loads(text)
        except json.JSONDecodeError:
            value = text
        node = raw
        for key in path[:-1]:
            node = node.setdefault(key, {})
            if not isinstance(node, dict):
                raise ConfigError(f"cannot override through non-object at {key!r}")
        node[path[-1]] = value
    return raw


def load_config(path: str, overrides: list[str]) -> RunConfig:
    try:
        with open(path, encoding="utf-8") as handle:
            raw = json.load(handle)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    apply_overrides(raw, overrides)
    return build_run_config(raw)


def _write_output(text: str, path: str | None) -> None:
    if path is None:
        sys.stdout.write(text)
        if not text.endswith("\n"):
            sys.stdout.write("\n")
    else:
        with open(path, "w", encoding="utf-8") as handle:
            handle.write(text if text.endswith("\n") else text + "\n")


# Row-chunk size for streaming tabulation; bounds peak memory at
# chunk * (N + 1) * d^2 complex entries per component.
GF_ROW_CHUNK = 256


def iter_samples(config: RunConfig):
    """Yield samples of every configured component over the time grid.

    Ordering is fixed: components in config order, then row-major over
    (t, t'), then row-major over matrix indices.  Evaluation is chunked
    over rows so arbitrary grids stream in bounded memory.
    """
    grid = config.grid()
    times = grid.times
    d = config.system.dimension
    if (grid.n_slices + 1) * d > config.max_dimension:
        raise GridTooLargeError(
            f"component table dimension {(grid.n_slices + 1) * d} "
            f"exceeds cap {config.max_dimension}"
        )
    for name in config.components:
        component = COMPONENT_NAMES[name]
        for start in range(0, times.size, GF_ROW_CHUNK):
            chunk = times[start : start + GF_ROW_CHUNK]
            table = component_table(
                config.system, chunk, times, component, grid.t_initial,
                config.tolerances,
            )
            for n_idx, t in enumerate(chunk):
                for m_idx, t_prime in enumerate(times):
                    block = table[n_idx, m_idx]
                    for r in range(d):
                        for c in range(d):
                            yield GfSample(
                                float(t), float(t_prime), name, r, c,
                                complex(block[r, c]),
                            )


def tabulate_samples(config: RunConfig) -> list[GfSample]:
    """Materialized form of :func:`iter_samples`."""
    return list(iter_samples(config))


def _write_gf(config: RunConfig, handle) -> None:
    if config.output_format == "csv":
        handle.write(CSV_HEADER + "\n")
        for s in iter_samples(config):
            handle.write(
                f"{_fmt(s.t)},{_fmt(s.t_prime)},{s.component},{s.row},{s.col},"
                f"{_fmt(s.value.real)},{_fmt(s.value.imag)}\n"
            )
    else:
        handle.write("[\n")
        first = True
        for s in iter_samples(config):
            if not first:
                handle.write(",\n")
            handle.write("  " + json.dumps(s.to_dict()))
            first = False
        handle.write("\n]\n")


def cmd_gf(config: RunConfig) -> int:
    if config.output_path is None:
        _write_gf(config, sys.stdout)
    else:
        with open(config.output_path, "w", encoding="utf-8") as handle:
            _write_gf(config, handle)
    return EXIT_OK


def cmd_z(config: RunConfig) -> int:
    if not config.n_slices_list:
        raise ConfigError("z requires grid.n_slices (integer or list)")
    rows = []
    for n in config.n_slices_list:
        grid = TimeGrid(config.t_initial, config.t_final, n)
        z = discrete_partition_function(
            config.system, grid, config.tolerances, config.max_dimension
        )
        rows.append(
            {
                "n_slices": n,
                "z_re": z.real,
                "z_im": z.imag,
                "abs_deviation": abs(z - 1.0),
            }
        )
    if config.output_format == "csv":
        lines = ["n_slices,z_re,z_im,abs_deviation"]
        for row in rows:
            lines.append(
                f"{row['n_slices']},{_fmt(row['z_re'])},{_fmt(row['z_im'])},"
                f"{_fmt(row['abs_deviation'])}"
            )
        text = "\n".join(lines)
    else:
        text = json.dumps(rows, indent=2)
    _write_output(text, config.output_path)
    return EXIT_OK


def cmd_converge(config: RunConfig) -> int:
    if len(config.n_slices_list) < 2:
        raise ConfigError("converge requires grid.n_slices as a list of >= 2 sizes")
    report = run_oracle_suite(config.system, config.grids(), config.tolerances)
    if config.output_format == "csv":
        lines = ["n_slices,error,error_bound,partition_deviation,fitted_order"]
        order = "" if report.fitted_order is None else _fmt(report.fitted_order)
        for size, err, bound, dev in zip(
            report.grid_sizes,
            report.errors,
            report.error_bounds,
            report.partition_deviations,
        ):
            lines.append(
                f"{size},{_fmt(err)},{_fmt(bound)},{_fmt(dev)},{order}"
            )
        text = "\n".join(lines)
    else:
        text = json.dumps({"schema": 1, **report.to_dict()}, indent=2)
    _write_output(text, config.output_path)
    return EXIT_OK


def cmd_verify(config: RunConfig, corruption: str | None) -> int:
    structure = run_structure_suite(
        config.system,
        t_initial=config.t_initial,
        t_final=config.t_final,
        seed=config.seed,
        threshold=config.threshold,
        tolerances=config.tolerances,
        corruption=corruption,
    )
    convergence = None
    extra = None
    if len(config.n_slices_list) >= 2:
        convergence = run_oracle_suite(
            config.system, config.grids(), config.tolerances
        )
        extra = oracle_checks(convergence)
    report = assemble_report(structure, convergence, extra)
    _write_output(json.dumps(report, indent=2), config.output_path)
    return EXIT_OK if report["passed"] else EXIT_VERIFICATION


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="contourgf",
        description="Closed-time-contour Green's functions with a discrete cross-check",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("gf", "tabulate components over the time grid"),
        ("verify", "run structure (and optionally convergence) checks"),
        ("z", "discrete partition function per slice count"),
        ("converge", "convergence of the discrete inverse to the closed forms"),
    ):
        cmd = sub.add_parser(name, help=help_text)
        cmd.add_argument("--config", required=True, help="path to JSON config")
        if name == "verify":
            cmd.add_argument(
                "--corrupt-keldysh",
                action="store_true",
                help=argparse.SUPPRESS,
            )
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args, overrides = parser.parse_known_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code not in (0, None) else EXIT_OK
    try:
        config = load_config(args.config, overrides)
        if args.command == "gf":
            return cmd_gf(config)
        if args.command == "z":
            return cmd_z(config)
        if args.command == "converge":
            return cmd_converge(config)
        corruption = KELDYSH_SIGN_FLIP if getattr(args, "corrupt_keldysh", False) else None
        return cmd_verify(config, corruption)
    except (ConfigError, GridTooLargeError, ThermalDivergenceError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (
        SingularMatrixError,
        DegenerateBoundarySystemError,
        NonHermitianError,
        OccupationOutOfRangeError,
        np.linalg.LinAlgError,
        FloatingPointError,
    ) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


def entry_point() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry_point()
