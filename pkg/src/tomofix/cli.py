"""Command-line interface for the experiment harness.

Every flag can also be supplied through a JSON config file (``--config``);
explicit command-line values win over config-file values, which win over the
built-in defaults. Exit codes: 0 on success, 2 on configuration errors, 3 on
count-file ingestion errors.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .bench import (
    ALGORITHMS,
    ExperimentConfig,
    reconstruct_file,
    run_counts_sweep,
    run_derive_fit,
    run_purity_sweep,
    run_qubit_sweep,
)
from .correction import load_fit_curve
from .errors import ConfigError, SchemaError, TomofixError, UnknownProjectorLabel

_KIND_BY_COMMAND = {
    "sweep-counts": "counts-sweep",
    "sweep-purity": "purity-sweep",
    "sweep-qubits": "qubit-sweep",
    "derive-fit": "derive-fit",
}


def _float_tuple(value) -> tuple[float, ...]:
    if isinstance(value, (list, tuple)):
        return tuple(float(x) for x in value)
    try:
        return tuple(float(part) for part in str(value).split(",") if part.strip())
    except ValueError as exc:
        raise ConfigError(f"expected comma-separated numbers, got {value!r}") from exc


def _int_tuple(value) -> tuple[int, ...]:
    if isinstance(value, (list, tuple)):
        return tuple(int(x) for x in value)
    try:
        return tuple(int(part) for part in str(value).split(",") if part.strip())
    except ValueError as exc:
        raise ConfigError(f"expected comma-separated integers, got {value!r}") from exc


def _algo_tuple(value) -> tuple[str, ...]:
    if isinstance(value, (list, tuple)):
        return tuple(str(x) for x in value)
    return tuple(part.strip() for part in str(value).split(",") if part.strip())


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON file mirroring the flags of this command")
    common.add_argument("--seed", type=int, help="master seed (default 0)")
    common.add_argument("--trials", type=int, help="trials per sweep point (default 200)")
    common.add_argument(
        "--algos",
        help=f"comma-separated subset of {{{','.join(ALGORITHMS)}}}",
    )
    common.add_argument("--out", help="output path (CSV for sweeps, JSON otherwise)")
    common.add_argument("--fit-curve", help="weighting-curve JSON for the eo algorithm")
    common.add_argument("--threads", type=int, help="worker processes for trials (default 1)")
    common.add_argument(
        "--noise",
        choices=("gaussian", "multinomial"),
        help="count noise model (default gaussian)",
    )

    parser = argparse.ArgumentParser(
        prog="tomofix",
        description="Density-matrix reconstruction benchmarks and ingestion.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser(
        "sweep-counts",
        parents=[common],
        help="mean infidelity vs total measurement counts",
    )
    p.add_argument("--n", type=int, help="qubit count (default 2)")
    p.add_argument("--counts", help="comma-separated total-count grid")
    p.add_argument("--target-purity", type=float, help="truth purity (default 0.94)")
    p.add_argument("--zero-fraction", type=float, help="zeroed eigenvalue fraction")
    p.add_argument("--rotation-strength", type=float, help="basis rotation strength")

    p = sub.add_parser(
        "sweep-purity",
        parents=[common],
        help="mean infidelity vs truth purity at fixed counts",
    )
    p.add_argument("--n", type=int, help="qubit count (default 2)")
    p.add_argument("--purities", help="comma-separated purity grid")
    p.add_argument("--total-counts", help="total counts (single value)")
    p.add_argument("--zero-fraction", type=float, help="zeroed eigenvalue fraction")
    p.add_argument("--rotation-strength", type=float, help="basis rotation strength")

    p = sub.add_parser(
        "sweep-qubits",
        parents=[common],
        help="infidelity and runtime vs qubit count",
    )
    p.add_argument("--qubits", help="comma-separated qubit grid (default 2,3,4,5)")
    p.add_argument("--total-counts", help="per-n total counts (default 4^n*1e3)")
    p.add_argument("--target-purity", type=float, help="truth purity (default 0.94)")
    p.add_argument("--zero-fraction", type=float, help="zeroed eigenvalue fraction")
    p.add_argument("--rotation-strength", type=float, help="basis rotation strength")
    p.add_argument("--mle-max-qubits", type=int, help="largest n that runs mle (default 3)")
    p.add_argument("--timing-trials", type=int, help="serial timing repetitions (default 25)")

    p = sub.add_parser(
        "derive-fit",
        parents=[common],
        help="rebuild the eigenvalue weighting curve from simulations",
    )
    p.add_argument("--n", type=int, help="qubit count (default 2)")
    p.add_argument("--total-counts", help="total counts (single value)")
    p.add_argument("--bins", type=int, help="profile bins (default 64)")
    p.add_argument("--purity-range", help="lo,hi purity range (default 0.5,1.0)")
    p.add_argument("--zero-fraction", type=float, help="zeroed eigenvalue fraction")
    p.add_argument("--rotation-strength", type=float, help="basis rotation strength")

    p = sub.add_parser(
        "reconstruct",
        parents=[common],
        help="reconstruct a density matrix from a counts file",
    )
    p.add_argument("counts_file", nargs="?", help="counts JSON file")
    p.add_argument("--reference", help="reference density-matrix JSON for infidelity")

    return parser


def _load_config_file(path: str) -> dict:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"config file {path} must hold a JSON object")
    return data


class _Options:
    """Flag values merged with the config file (CLI wins)."""

    def __init__(self, args: argparse.Namespace):
        self._args = vars(args)
        self._file = (
            _load_config_file(self._args["config"]) if self._args.get("config") else {}
        )
        unknown = set(self._file) - set(self._args)
        if unknown:
            raise ConfigError(
                f"config file keys {sorted(unknown)} do not match any flag of "
                f"command {args.command!r}"
            )

    def get(self, key: str, default=None):
        value = self._args.get(key)
        if value is None:
            value = self._file.get(key)
        return default if value is None else value

    def put_if_set(self, kwargs: dict, config_field: str, key: str, convert=None) -> None:
        value = self.get(key)
        if value is not None:
            kwargs[config_field] = convert(value) if convert else value


def _check_fit_curve(path) -> None:
    """Surface unreadable or malformed curve files as configuration errors."""
    if path is None:
        return
    try:
        load_fit_curve(path)
    except (OSError, ValueError) as exc:
        raise ConfigError(f"cannot load fit curve {path}: {exc}") from exc


def _build_config(kind: str, opts: _Options) -> ExperimentConfig:
    kwargs: dict = {"kind": kind}
    opts.put_if_set(kwargs, "seed", "seed", int)
    opts.put_if_set(kwargs, "trials", "trials", int)
    opts.put_if_set(kwargs, "algorithms", "algos", _algo_tuple)
    opts.put_if_set(kwargs, "out", "out", str)
    opts.put_if_set(kwargs, "fit_curve_path", "fit_curve", str)
    _check_fit_curve(kwargs.get("fit_curve_path"))
    opts.put_if_set(kwargs, "threads", "threads", int)
    opts.put_if_set(kwargs, "noise", "noise", str)
    opts.put_if_set(kwargs, "n", "n", int)
    opts.put_if_set(kwargs, "target_purity", "target_purity", float)
    opts.put_if_set(kwargs, "zero_fraction", "zero_fraction", float)
    opts.put_if_set(kwargs, "rotation_strength", "rotation_strength", float)
    opts.put_if_set(kwargs, "mle_max_qubits", "mle_max_qubits", int)
    opts.put_if_set(kwargs, "timing_trials", "timing_trials", int)
    opts.put_if_set(kwargs, "bins", "bins", int)
    if kind == "counts-sweep":
        opts.put_if_set(kwargs, "total_counts", "counts", _float_tuple)
    else:
        opts.put_if_set(kwargs, "total_counts", "total_counts", _float_tuple)
    opts.put_if_set(kwargs, "purities", "purities", _float_tuple)
    opts.put_if_set(kwargs, "qubits", "qubits", _int_tuple)
    rng = opts.get("purity_range")
    if rng is not None:
        pair = _float_tuple(rng)
        if len(pair) != 2:
            raise ConfigError("purity range needs exactly two values: lo,hi")
        kwargs["derive_purity_range"] = pair
    return ExperimentConfig(**kwargs)


_PRINT_FIELDS = ("trials", "mean_infidelity", "std_infidelity", "nonphysical_fraction")


def _print_rows(rows: list[dict], point_key: str) -> None:
    for row in rows:
        head = f"{point_key}={row[point_key]:g}" if point_key else ""
        body = " ".join(
            f"{k}={row[k]:.6g}" if isinstance(row[k], float) else f"{k}={row[k]}"
            for k in _PRINT_FIELDS
            if k in row
        )
        print(f"{head} algorithm={row['algorithm']} {body}".strip())


def _run_sweep(command: str, opts: _Options) -> int:
    cfg = _build_config(_KIND_BY_COMMAND[command], opts)
    if command == "sweep-counts":
        rows = run_counts_sweep(cfg)
        _print_rows(rows, "total_counts")
    elif command == "sweep-purity":
        rows = run_purity_sweep(cfg)
        _print_rows(rows, "target_purity")
    elif command == "sweep-qubits":
        rows, timing_rows = run_qubit_sweep(cfg)
        _print_rows(rows, "n")
        for row in timing_rows:
            core = row["mean_core_time"]
            core_text = f" mean_core_time={core:.3e}" if isinstance(core, float) else ""
            print(
                f"timing n={row['n']} algorithm={row['algorithm']} "
                f"mean_wall_time={row['mean_wall_time']:.3e}{core_text}"
            )
    else:  # derive-fit
        curve, profile, chi2 = run_derive_fit(cfg)
        coeffs = " ".join(f"{c:.6g}" for c in curve.coefficients)
        print(f"coefficients: {coeffs}")
        print(f"chi_squared: {chi2:.6g}")
        print(f"profile_bins: {profile.num_bins}")
    if cfg.out:
        print(f"wrote {cfg.out}")
    return 0


def _run_reconstruct(opts: _Options) -> int:
    counts_file = opts.get("counts_file")
    if counts_file is None:
        raise ConfigError("reconstruct needs a counts file (argument or config key)")
    algos = _algo_tuple(opts.get("algos", "eo"))
    if len(algos) != 1:
        raise ConfigError("reconstruct runs exactly one algorithm")
    _check_fit_curve(opts.get("fit_curve"))
    try:
        _, report = reconstruct_file(
            counts_file,
            algorithm=algos[0],
            fit_path=opts.get("fit_curve"),
            reference_path=opts.get("reference"),
            out_path=opts.get("out"),
        )
    except (SchemaError, UnknownProjectorLabel, OSError) as exc:
        print(f"ingestion error: {exc}", file=sys.stderr)
        return 3
    print(json.dumps(report, indent=2, sort_keys=True))
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        opts = _Options(args)
        if args.command == "reconstruct":
            return _run_reconstruct(opts)
        return _run_sweep(args.command, opts)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except TomofixError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
