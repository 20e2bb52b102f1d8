"""Experiment harness: infidelity sweeps, timing runs, curve derivation, ingestion.

Every sweep draws per-trial seeds from a single ``numpy.random.SeedSequence``
spawned off the master seed, so results are reproducible and independent of
worker scheduling. Aggregates are always reduced in trial order; a run with
``threads > 1`` produces the same CSV as a serial run. Wall times exclude
state generation and measurement simulation. Timing sweeps always execute
serially even when a worker pool is configured.
"""

from __future__ import annotations

import csv
import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from ._version import __version__
from .correction import (
    FitCurve,
    default_fit_curve,
    eo_correct,
    eo_correct_values,
    fit_curve_to_json_dict,
    imle_correct,
    load_fit_curve,
    mle_correct,
    sgs_correct,
    sgs_correct_values,
)
from .density import (
    DensityMatrix,
    eigendecompose,
    infidelity,
    load_density_matrix,
    purity,
    save_density_matrix,
)
from .derivation import aggregate_profiles, fit_odd_series, optimize_distances, profile_to_csv
from .errors import ConfigError, DegenerateInput, IllConditioned
from .measurement import cube_projectors, load_count_record, shots_for_total, simulate_counts
from .reconstruction import linear_reconstruct
from .stategen import StateRecipe, rank_deficient_state, solve_purity_param

KINDS = ("counts-sweep", "purity-sweep", "qubit-sweep", "derive-fit", "reconstruct")
ALGORITHMS = ("linear", "sgs", "eo", "mle", "imle")
NOISE_MODELS = ("gaussian", "multinomial", "exact")

DEFAULT_COUNTS_GRID = tuple(float(x) for x in np.logspace(3.0, 6.0, 7))
DEFAULT_PURITY_GRID = tuple(round(float(x), 3) for x in np.linspace(0.5, 1.0, 11))
DEFAULT_QUBIT_GRID = (2, 3, 4, 5)
DEFAULT_SWEEP_ZERO_FRACTION = 0.25
DEFAULT_DERIVE_ZERO_FRACTION = 0.0

A_MOD_SIGN_CONVENTION = (
    "a_mod is the signed (non-positive) sum of the eigenvalues removed in the "
    "current round; per-round corrections add up to a_mod exactly, so the "
    "trace is preserved"
)
TOTAL_COUNTS_CONVENTION = (
    "total counts N are accounted per setting: shots = round(N / 3^n) and the "
    "2^n outcomes of one setting share those shots"
)
LINEAR_INFIDELITY_CONVENTION = (
    "the linear row records NaN infidelity whenever the raw reconstruction is "
    "non-physical; NaN trials are excluded from that row's mean and count"
)


@dataclass(frozen=True)
class ExperimentConfig:
    """Declarative description of one harness run.

    ``total_counts``, ``purities`` and ``qubits`` are the sweep grids; empty
    tuples select the default grid of the corresponding sweep. For
    ``qubit-sweep`` the per-point budget is N = 4^n * 10^3 unless
    ``total_counts`` supplies one value per swept n. ``zero_fraction=None``
    resolves to 0.25 for sweeps and 0.0 for derive-fit.
    """

    kind: str
    n: int = 2
    trials: int = 200
    total_counts: tuple[float, ...] = ()
    purities: tuple[float, ...] = ()
    qubits: tuple[int, ...] = ()
    algorithms: tuple[str, ...] = ("sgs", "eo", "mle", "imle")
    seed: int = 0
    noise: str = "gaussian"
    target_purity: float = 0.94
    zero_fraction: float | None = None
    rotation_strength: float = 0.0
    threads: int = 1
    mle_max_qubits: int = 3
    timing_trials: int = 25
    out: str | None = None
    fit_curve_path: str | None = None
    counts_path: str | None = None
    reference_path: str | None = None
    derive_purity_range: tuple[float, float] = (0.5, 1.0)
    bins: int = 64

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise ConfigError(f"unknown experiment kind {self.kind!r}; expected one of {KINDS}")
        object.__setattr__(self, "total_counts", tuple(float(x) for x in self.total_counts))
        object.__setattr__(self, "purities", tuple(float(x) for x in self.purities))
        object.__setattr__(self, "qubits", tuple(int(x) for x in self.qubits))
        object.__setattr__(self, "algorithms", tuple(self.algorithms))
        object.__setattr__(self, "derive_purity_range", tuple(self.derive_purity_range))
        if not self.algorithms:
            raise ConfigError("at least one algorithm is required")
        bad = [a for a in self.algorithms if a not in ALGORITHMS]
        if bad:
            raise ConfigError(f"unknown algorithms {bad}; expected a subset of {ALGORITHMS}")
        if len(set(self.algorithms)) != len(self.algorithms):
            raise ConfigError("duplicate algorithm names")
        if self.trials < 1:
            raise ConfigError("trial count must be >= 1")
        if self.n < 1:
            raise ConfigError("qubit count must be >= 1")
        if any(N <= 0 for N in self.total_counts):
            raise ConfigError("total counts must be > 0")
        if any(not 0.0 < p <= 1.0 for p in self.purities):
            raise ConfigError("purities must lie in (0, 1]")
        if any(q < 1 for q in self.qubits):
            raise ConfigError("qubit grid entries must be >= 1")
        if self.noise not in NOISE_MODELS:
            raise ConfigError(f"unknown noise model {self.noise!r}; expected one of {NOISE_MODELS}")
        if not 0.0 < self.target_purity <= 1.0:
            raise ConfigError("target purity must lie in (0, 1]")
        if self.zero_fraction is not None and not 0.0 <= self.zero_fraction < 1.0:
            raise ConfigError("zero fraction must lie in [0, 1)")
        if self.rotation_strength < 0.0:
            raise ConfigError("rotation strength must be >= 0")
        if self.threads < 1:
            raise ConfigError("thread count must be >= 1")
        if self.timing_trials < 1:
            raise ConfigError("timing trial count must be >= 1")
        if self.bins < 4:
            raise ConfigError("profile needs at least 4 bins")
        lo, hi = self.derive_purity_range
        if not 0.0 < lo < hi <= 1.0:
            raise ConfigError("derive purity range must satisfy 0 < lo < hi <= 1")

    @property
    def resolved_zero_fraction(self) -> float:
        if self.zero_fraction is not None:
            return self.zero_fraction
        if self.kind == "derive-fit":
            return DEFAULT_DERIVE_ZERO_FRACTION
        return DEFAULT_SWEEP_ZERO_FRACTION


@dataclass(frozen=True)
class TrialResult:
    """Per-trial record. NaN infidelity marks an undefined comparison
    (fidelity against a non-physical linear estimate); ``error`` records a
    failed trial that the aggregation skips."""

    seed: int
    truth_purity: float
    reconstruction_physical: bool
    infidelity: dict[str, float]
    wall_time: dict[str, float]
    iterations: dict[str, int]
    error: str | None = None


def _order_algorithms(algorithms: tuple[str, ...]) -> tuple[str, ...]:
    # canonical order so eo output can seed mle within the same trial
    return tuple(a for a in ALGORITHMS if a in algorithms)


def _sweep_trial(payload: tuple) -> TrialResult:
    (n, purity_param, zero_fraction, rotation_strength, S, noise, algorithms,
     coeffs, state_seed, data_seed) = payload
    try:
        curve = FitCurve(coeffs)
        recipe = StateRecipe(
            n=n,
            purity_param=purity_param,
            zero_fraction=zero_fraction,
            rotation_strength=rotation_strength,
            seed=state_seed,
        )
        truth = rank_deficient_state(recipe)
        projectors = cube_projectors(n)
        record = simulate_counts(truth, projectors, S, seed=data_seed, noise=noise)

        infid: dict[str, float] = {}
        wall: dict[str, float] = {}
        iters: dict[str, int] = {}

        t0 = time.perf_counter()
        rho_r = linear_reconstruct(record)
        linear_time = time.perf_counter() - t0
        physical = rho_r.is_physical()

        eo_state: DensityMatrix | None = None
        for algo in _order_algorithms(algorithms):
            if algo == "linear":
                infid[algo] = infidelity(truth, rho_r) if physical else float("nan")
                wall[algo] = linear_time
                iters[algo] = 0
            elif algo in ("sgs", "eo"):
                t0 = time.perf_counter()
                spectrum = eigendecompose(rho_r)
                report = (
                    sgs_correct(spectrum) if algo == "sgs" else eo_correct(spectrum, curve)
                )
                wall[algo] = time.perf_counter() - t0
                infid[algo] = infidelity(truth, report.state)
                iters[algo] = report.iterations
                if algo == "eo":
                    eo_state = report.state
            elif algo == "mle":
                t0 = time.perf_counter()
                init = eo_state if eo_state is not None else eo_correct(
                    eigendecompose(rho_r), curve
                ).state
                report = mle_correct(record, init)
                wall[algo] = time.perf_counter() - t0
                infid[algo] = infidelity(truth, report.state)
                iters[algo] = report.iterations
            else:  # imle
                t0 = time.perf_counter()
                report = imle_correct(record)
                wall[algo] = time.perf_counter() - t0
                infid[algo] = infidelity(truth, report.state)
                iters[algo] = report.iterations
        return TrialResult(
            seed=state_seed,
            truth_purity=purity(truth),
            reconstruction_physical=physical,
            infidelity=infid,
            wall_time=wall,
            iterations=iters,
        )
    except Exception as exc:  # recorded, not fatal
        return TrialResult(
            seed=state_seed,
            truth_purity=float("nan"),
            reconstruction_physical=False,
            infidelity={},
            wall_time={},
            iterations={},
            error=f"{type(exc).__name__}: {exc}",
        )


def _seed_pair(seq: np.random.SeedSequence) -> tuple[int, int]:
    a, b = seq.generate_state(2, dtype=np.uint64)
    return int(a), int(b)


def _run_pool(worker, payloads: list[tuple], threads: int) -> list:
    if threads <= 1 or len(payloads) <= 1:
        return [worker(p) for p in payloads]
    chunk = max(1, len(payloads) // (threads * 4))
    with ProcessPoolExecutor(max_workers=threads) as pool:
        # executor.map preserves input order, keeping the reduction deterministic
        return list(pool.map(worker, payloads, chunksize=chunk))


def _aggregate_point(
    results: list[TrialResult], algorithms: tuple[str, ...]
) -> tuple[list[dict], int]:
    ok = [r for r in results if r.error is None]
    failed = len(results) - len(ok)
    rows = []
    nonphys = (
        float(np.mean([not r.reconstruction_physical for r in ok])) if ok else float("nan")
    )
    for algo in _order_algorithms(algorithms):
        vals = np.array([r.infidelity.get(algo, float("nan")) for r in ok], dtype=float)
        good = vals[np.isfinite(vals)]
        walls = [r.wall_time[algo] for r in ok if algo in r.wall_time]
        its = [r.iterations[algo] for r in ok if algo in r.iterations]
        rows.append(
            {
                "algorithm": algo,
                "trials": int(good.size),
                "failed_trials": failed,
                "mean_infidelity": float(np.mean(good)) if good.size else float("nan"),
                "std_infidelity": float(np.std(good, ddof=1)) if good.size > 1 else 0.0,
                "mean_wall_time": float(np.mean(walls)) if walls else float("nan"),
                "mean_iterations": float(np.mean(its)) if its else float("nan"),
                "nonphysical_fraction": nonphys,
            }
        )
    return rows, failed


def _format_cell(value) -> str:
    if isinstance(value, float):
        return f"{value:.12g}"
    return str(value)


def _write_csv(path: str | Path, fieldnames: list[str], rows: list[dict]) -> None:
    # extra in-memory columns (wall times) stay out of the CSV so that equal
    # configs produce byte-identical files
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=fieldnames, extrasaction="ignore")
        writer.writeheader()
        for row in rows:
            writer.writerow(
                {k: _format_cell(v) for k, v in row.items() if k in fieldnames}
            )


def _sidecar_path(out: str | Path) -> Path:
    out = Path(out)
    return out.with_name(out.stem + ".meta.json")


def _write_sidecar(out: str | Path, cfg: ExperimentConfig, extra: dict) -> None:
    payload = {
        "config": asdict(cfg),
        "version": __version__,
        "noise_model": cfg.noise,
        "a_mod_sign_convention": A_MOD_SIGN_CONVENTION,
        "total_counts_convention": TOTAL_COUNTS_CONVENTION,
        "linear_infidelity_convention": LINEAR_INFIDELITY_CONVENTION,
    }
    payload.update(extra)
    with open(_sidecar_path(out), "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _load_curve(cfg: ExperimentConfig) -> FitCurve:
    if cfg.fit_curve_path:
        return load_fit_curve(cfg.fit_curve_path)
    return default_fit_curve()


def _require_kind(cfg: ExperimentConfig, kind: str) -> None:
    if cfg.kind != kind:
        raise ConfigError(f"config kind {cfg.kind!r} does not match operation {kind!r}")


def _sweep_point(
    cfg: ExperimentConfig,
    *,
    n: int,
    purity_param: float,
    S: int,
    algorithms: tuple[str, ...],
    curve: FitCurve,
    point_seq: np.random.SeedSequence,
) -> list[TrialResult]:
    zero_fraction = cfg.resolved_zero_fraction
    payloads = []
    for child in point_seq.spawn(cfg.trials):
        state_seed, data_seed = _seed_pair(child)
        payloads.append(
            (n, purity_param, zero_fraction, cfg.rotation_strength, S, cfg.noise,
             algorithms, curve.coefficients, state_seed, data_seed)
        )
    return _run_pool(_sweep_trial, payloads, cfg.threads)


SWEEP_FIELDS = [
    "algorithm",
    "trials",
    "failed_trials",
    "mean_infidelity",
    "std_infidelity",
    "mean_iterations",
    "nonphysical_fraction",
]


def run_counts_sweep(cfg: ExperimentConfig) -> list[dict]:
    """Mean infidelity per algorithm over a grid of total measurement counts."""
    _require_kind(cfg, "counts-sweep")
    grid = cfg.total_counts or DEFAULT_COUNTS_GRID
    projectors = cube_projectors(cfg.n)
    curve = _load_curve(cfg)
    purity_param = solve_purity_param(
        cfg.n,
        cfg.target_purity,
        zero_fraction=cfg.resolved_zero_fraction,
        rotation_strength=cfg.rotation_strength,
    )
    master = np.random.SeedSequence(cfg.seed)
    rows: list[dict] = []
    failures: dict[str, int] = {}
    for N, point_seq in zip(grid, master.spawn(len(grid))):
        S = shots_for_total(projectors, N)
        results = _sweep_point(
            cfg,
            n=cfg.n,
            purity_param=purity_param,
            S=S,
            algorithms=cfg.algorithms,
            curve=curve,
            point_seq=point_seq,
        )
        point_rows, failed = _aggregate_point(results, cfg.algorithms)
        if failed:
            failures[f"{N:g}"] = failed
        for row in point_rows:
            rows.append({"total_counts": float(N), **row})
    if cfg.out:
        _write_csv(cfg.out, ["total_counts", *SWEEP_FIELDS], rows)
        _write_sidecar(cfg.out, cfg, {"failures_per_point": failures})
    return rows


def run_purity_sweep(cfg: ExperimentConfig) -> list[dict]:
    """Mean infidelity per algorithm over a grid of target purities at fixed N."""
    _require_kind(cfg, "purity-sweep")
    grid = cfg.purities or DEFAULT_PURITY_GRID
    if len(cfg.total_counts) > 1:
        raise ConfigError("purity-sweep takes at most one total-counts value")
    N = cfg.total_counts[0] if cfg.total_counts else 4**cfg.n * 1e3
    projectors = cube_projectors(cfg.n)
    curve = _load_curve(cfg)
    S = shots_for_total(projectors, N)
    master = np.random.SeedSequence(cfg.seed)
    rows: list[dict] = []
    failures: dict[str, int] = {}
    for target, point_seq in zip(grid, master.spawn(len(grid))):
        purity_param = solve_purity_param(
            cfg.n,
            target,
            zero_fraction=cfg.resolved_zero_fraction,
            rotation_strength=cfg.rotation_strength,
        )
        results = _sweep_point(
            cfg,
            n=cfg.n,
            purity_param=purity_param,
            S=S,
            algorithms=cfg.algorithms,
            curve=curve,
            point_seq=point_seq,
        )
        point_rows, failed = _aggregate_point(results, cfg.algorithms)
        if failed:
            failures[f"{target:g}"] = failed
        for row in point_rows:
            rows.append({"target_purity": float(target), **row})
    if cfg.out:
        _write_csv(cfg.out, ["target_purity", *SWEEP_FIELDS], rows)
        _write_sidecar(cfg.out, cfg, {"failures_per_point": failures, "total_counts": N})
    return rows


TIMING_FIELDS = [
    "n",
    "algorithm",
    "timing_trials",
    "mean_wall_time",
    "median_wall_time",
    "std_wall_time",
    "mean_core_time",
]


def _time_point(
    cfg: ExperimentConfig,
    n: int,
    S: int,
    algorithms: tuple[str, ...],
    curve: FitCurve,
    purity_param: float,
    seq: np.random.SeedSequence,
) -> list[dict]:
    """Serial wall-time measurement on pregenerated inputs.

    sgs/eo are timed matrix-to-matrix (eigendecomposition included) in
    alternating order, and additionally on precomputed eigenvalues
    (``mean_core_time``: the redistribution arithmetic alone).
    """
    reps = cfg.timing_trials
    mle_reps = min(reps, 5)
    inputs = []
    for child in seq.spawn(reps):
        state_seed, data_seed = _seed_pair(child)
        truth = rank_deficient_state(
            StateRecipe(
                n=n,
                purity_param=purity_param,
                zero_fraction=cfg.resolved_zero_fraction,
                rotation_strength=cfg.rotation_strength,
                seed=state_seed,
            )
        )
        record = simulate_counts(
            truth, cube_projectors(n), S, seed=data_seed, noise=cfg.noise
        )
        rho_r = linear_reconstruct(record)
        inputs.append((record, rho_r, eigendecompose(rho_r).eigenvalues))

    walls: dict[str, list[float]] = {a: [] for a in algorithms}
    cores: dict[str, list[float]] = {a: [] for a in ("sgs", "eo") if a in algorithms}
    eigen_pair = [a for a in ("sgs", "eo") if a in algorithms]
    rest = [a for a in algorithms if a not in ("sgs", "eo")]
    # untimed warmup so allocator and cache effects hit neither contestant
    if inputs and eigen_pair:
        warm = eigendecompose(inputs[0][1])
        for algo in eigen_pair:
            sgs_correct(warm) if algo == "sgs" else eo_correct(warm, curve)
    for rep, (record, rho_r, values) in enumerate(inputs):
        ordered = eigen_pair if rep % 2 == 0 else eigen_pair[::-1]
        for algo in ordered:
            t0 = time.perf_counter()
            spectrum = eigendecompose(rho_r)
            if algo == "sgs":
                sgs_correct(spectrum)
            else:
                eo_correct(spectrum, curve)
            walls[algo].append(time.perf_counter() - t0)
            t0 = time.perf_counter()
            if algo == "sgs":
                sgs_correct_values(values)
            else:
                eo_correct_values(values, curve)
            cores[algo].append(time.perf_counter() - t0)
        for algo in rest:
            if algo == "mle" and len(walls[algo]) >= mle_reps:
                continue
            t0 = time.perf_counter()
            if algo == "linear":
                linear_reconstruct(record)
            elif algo == "mle":
                init = eo_correct(eigendecompose(rho_r), curve).state
                mle_correct(record, init)
            else:
                imle_correct(record)
            walls[algo].append(time.perf_counter() - t0)

    rows = []
    for algo in _order_algorithms(algorithms):
        times = np.array(walls[algo])
        rows.append(
            {
                "n": n,
                "algorithm": algo,
                "timing_trials": int(times.size),
                "mean_wall_time": float(times.mean()),
                "median_wall_time": float(np.median(times)),
                "std_wall_time": float(times.std(ddof=1)) if times.size > 1 else 0.0,
                "mean_core_time": float(np.mean(cores[algo])) if algo in cores else "",
            }
        )
    return rows


def run_qubit_sweep(cfg: ExperimentConfig) -> tuple[list[dict], list[dict]]:
    """Infidelity and wall time per algorithm as the qubit count grows.

    The per-point budget is N = 4^n * 10^3 unless ``total_counts`` supplies
    one value per swept n. mle is dropped above ``mle_max_qubits``. Returns
    (result rows, timing rows); timing always runs serially.
    """
    _require_kind(cfg, "qubit-sweep")
    grid = cfg.qubits or DEFAULT_QUBIT_GRID
    if cfg.total_counts and len(cfg.total_counts) != len(grid):
        raise ConfigError("total_counts must be empty or match the qubit grid length")
    curve = _load_curve(cfg)
    master = np.random.SeedSequence(cfg.seed)
    point_seqs = master.spawn(2 * len(grid))  # one for trials, one for timing
    rows: list[dict] = []
    timing_rows: list[dict] = []
    failures: dict[str, int] = {}
    for i, n in enumerate(grid):
        N = cfg.total_counts[i] if cfg.total_counts else 4**n * 1e3
        projectors = cube_projectors(n)
        S = shots_for_total(projectors, N)
        algorithms = tuple(
            a for a in cfg.algorithms if a != "mle" or n <= cfg.mle_max_qubits
        )
        if not algorithms:
            raise ConfigError(f"no algorithms left to run at n={n}")
        purity_param = solve_purity_param(
            n,
            cfg.target_purity,
            zero_fraction=cfg.resolved_zero_fraction,
            rotation_strength=cfg.rotation_strength,
        )
        results = _sweep_point(
            cfg,
            n=n,
            purity_param=purity_param,
            S=S,
            algorithms=algorithms,
            curve=curve,
            point_seq=point_seqs[2 * i],
        )
        point_rows, failed = _aggregate_point(results, algorithms)
        if failed:
            failures[str(n)] = failed
        for row in point_rows:
            rows.append({"n": n, "total_counts": float(N), **row})
        timing_rows.extend(
            _time_point(cfg, n, S, algorithms, curve, purity_param, point_seqs[2 * i + 1])
        )
    if cfg.out:
        _write_csv(cfg.out, ["n", "total_counts", *SWEEP_FIELDS], rows)
        timing_path = Path(cfg.out).with_name(Path(cfg.out).stem + "_timing.csv")
        _write_csv(timing_path, TIMING_FIELDS, timing_rows)
        _write_sidecar(
            cfg.out, cfg, {"failures_per_point": failures, "timing_csv": str(timing_path)}
        )
    return rows, timing_rows


def _derive_trial(payload: tuple):
    (n, p_lo, p_hi, zero_fraction, rotation_strength, S, noise,
     purity_seed, state_seed, data_seed) = payload
    try:
        rng = np.random.default_rng(purity_seed)
        target = float(rng.uniform(p_lo, p_hi))
        purity_param = solve_purity_param(
            n,
            target,
            zero_fraction=zero_fraction,
            rotation_strength=rotation_strength,
            seed=state_seed,
        )
        truth = rank_deficient_state(
            StateRecipe(
                n=n,
                purity_param=purity_param,
                zero_fraction=zero_fraction,
                rotation_strength=rotation_strength,
                seed=state_seed,
            )
        )
        record = simulate_counts(truth, cube_projectors(n), S, seed=data_seed, noise=noise)
        spectrum = eigendecompose(linear_reconstruct(record))
        if spectrum.eigenvalues[-1] >= 0:
            return ("physical",)
        try:
            distances = optimize_distances(spectrum, record)
        except DegenerateInput:
            return ("physical",)
        return ("ok", distances, spectrum.n_positive)
    except Exception as exc:
        return ("error", f"{type(exc).__name__}: {exc}")


def run_derive_fit(cfg: ExperimentConfig):
    """Rebuild the weighting curve: optimize eigenvalue displacements on
    simulated non-physical reconstructions, aggregate the scaled profile, fit
    the odd power series. Returns (curve, profile, chi2)."""
    _require_kind(cfg, "derive-fit")
    if len(cfg.total_counts) > 1:
        raise ConfigError("derive-fit takes at most one total-counts value")
    N = cfg.total_counts[0] if cfg.total_counts else 4**cfg.n * 1e3
    projectors = cube_projectors(cfg.n)
    S = shots_for_total(projectors, N)
    lo, hi = cfg.derive_purity_range
    master = np.random.SeedSequence(cfg.seed)
    payloads = []
    for child in master.spawn(cfg.trials):
        s1, s2, s3 = (int(x) for x in child.generate_state(3, dtype=np.uint64))
        payloads.append(
            (cfg.n, lo, hi, cfg.resolved_zero_fraction, cfg.rotation_strength,
             S, cfg.noise, s1, s2, s3)
        )
    outcomes = _run_pool(_derive_trial, payloads, cfg.threads)
    pairs = [(o[1], o[2]) for o in outcomes if o[0] == "ok"]
    skipped = sum(1 for o in outcomes if o[0] == "physical")
    errors = [o[1] for o in outcomes if o[0] == "error"]
    if not pairs:
        raise DegenerateInput(
            "no non-physical reconstructions in the derivation sample; "
            "increase trials or counts"
        )
    profile = aggregate_profiles(
        pairs, cfg.n, bins=cfg.bins, purity_range=cfg.derive_purity_range
    )
    # the odd series is determined by the distinct index magnitudes the
    # profile supports (few at small n), so step terms down until the design
    # has full rank, then zero-pad back to the six-coefficient wire shape
    curve = None
    for terms in range(6, 0, -1):
        try:
            curve, chi2 = fit_odd_series(profile, terms=terms)
        except IllConditioned:
            continue
        break
    if curve is None:
        raise IllConditioned("profile supports no odd-series fit at any order")
    if len(curve.coefficients) < 6:
        curve = FitCurve(curve.coefficients + (0.0,) * (6 - len(curve.coefficients)))
    if cfg.out:
        out = Path(cfg.out)
        with open(out, "w") as fh:
            json.dump(fit_curve_to_json_dict(curve), fh, indent=2)
            fh.write("\n")
        profile_path = out.with_name(out.stem + "_profile.csv")
        profile_to_csv(profile, profile_path)
        _write_sidecar(
            out,
            cfg,
            {
                "chi_squared": chi2,
                "trials_used": len(pairs),
                "trials_physical_skipped": skipped,
                "trial_errors": errors,
                "profile_csv": str(profile_path),
            },
        )
    return curve, profile, chi2


def reconstruct_file(
    counts_path: str | Path,
    algorithm: str = "eo",
    fit_path: str | Path | None = None,
    reference_path: str | Path | None = None,
    out_path: str | Path | None = None,
) -> tuple[DensityMatrix, dict]:
    """Reconstruct a density matrix from a counts file on disk.

    Returns the estimate plus a report with physicality diagnostics, purity,
    and infidelity against the optional reference matrix file.
    """
    if algorithm not in ALGORITHMS:
        raise ConfigError(
            f"unknown algorithm {algorithm!r}; expected one of {ALGORITHMS}"
        )
    record = load_count_record(counts_path)
    curve = load_fit_curve(fit_path) if fit_path else default_fit_curve()

    t0 = time.perf_counter()
    rho_r = linear_reconstruct(record)
    physical = rho_r.is_physical()
    iterations = 0
    converged = True
    if algorithm == "linear":
        estimate = rho_r
    elif algorithm in ("sgs", "eo"):
        spectrum = eigendecompose(rho_r)
        report = sgs_correct(spectrum) if algorithm == "sgs" else eo_correct(spectrum, curve)
        estimate, iterations, converged = report.state, report.iterations, report.converged
    elif algorithm == "mle":
        init = eo_correct(eigendecompose(rho_r), curve).state
        report = mle_correct(record, init)
        estimate, iterations, converged = report.state, report.iterations, report.converged
    else:
        report = imle_correct(record)
        estimate, iterations, converged = report.state, report.iterations, report.converged
    wall = time.perf_counter() - t0

    info: dict = {
        "algorithm": algorithm,
        "n": record.projectors.n,
        "num_settings": record.projectors.num_settings,
        "shots_per_setting": record.shots_per_setting,
        "total_counts": record.total_counts,
        "reconstruction_physical": bool(physical),
        "min_reconstruction_eigenvalue": rho_r.min_eigenvalue(),
        "estimate_purity": float(purity(estimate)),
        "estimate_min_eigenvalue": estimate.min_eigenvalue(),
        "iterations": int(iterations),
        "converged": bool(converged),
        "wall_time": wall,
    }
    if reference_path is not None:
        reference = load_density_matrix(reference_path)
        if algorithm == "linear" and not physical:
            info["infidelity_vs_reference"] = None
        else:
            info["infidelity_vs_reference"] = float(infidelity(reference, estimate))
    if out_path is not None:
        save_density_matrix(estimate, out_path)
        info["output_path"] = str(out_path)
    return estimate, info


def loglog_slope(x, y) -> float:
    """OLS slope of log(y) against log(x), ignoring non-positive entries."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    mask = np.isfinite(x) & np.isfinite(y) & (x > 0) & (y > 0)
    if mask.sum() < 2:
        raise ValueError("need at least two positive points for a log-log slope")
    return float(np.polyfit(np.log(x[mask]), np.log(y[mask]), 1)[0])
