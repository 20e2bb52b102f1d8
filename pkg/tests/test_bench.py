import json

import numpy as np
import pytest

from tomofix.bench import (
    DEFAULT_COUNTS_GRID,
    DEFAULT_PURITY_GRID,
    DEFAULT_QUBIT_GRID,
    SWEEP_FIELDS,
    TIMING_FIELDS,
    ExperimentConfig,
    loglog_slope,
    reconstruct_file,
    run_counts_sweep,
    run_derive_fit,
    run_purity_sweep,
    run_qubit_sweep,
)
from tomofix.correction import default_fit_curve, eo_correct, load_fit_curve
from tomofix.density import (
    eigendecompose,
    infidelity,
    load_density_matrix,
    save_density_matrix,
)
from tomofix.errors import ConfigError, DegenerateInput
from tomofix.measurement import cube_projectors, save_count_record, simulate_counts
from tomofix.reconstruction import linear_reconstruct
from tomofix.stategen import (
    StateRecipe,
    mixed_state,
    rank_deficient_state,
    solve_purity_param,
)


@pytest.mark.parametrize(
    "kwargs, message",
    [
        ({"kind": "bogus"}, "unknown experiment kind"),
        ({"kind": "counts-sweep", "algorithms": ()}, "at least one algorithm"),
        ({"kind": "counts-sweep", "algorithms": ("sgs", "bogus")}, "unknown algorithms"),
        ({"kind": "counts-sweep", "algorithms": ("eo", "eo")}, "duplicate algorithm"),
        ({"kind": "counts-sweep", "trials": 0}, "trial count"),
        ({"kind": "counts-sweep", "n": 0}, "qubit count"),
        ({"kind": "counts-sweep", "total_counts": (0.0,)}, "total counts"),
        ({"kind": "purity-sweep", "purities": (1.2,)}, "purities"),
        ({"kind": "qubit-sweep", "qubits": (0,)}, "qubit grid"),
        ({"kind": "counts-sweep", "noise": "poisson"}, "unknown noise model"),
        ({"kind": "counts-sweep", "target_purity": 0.0}, "target purity"),
        ({"kind": "counts-sweep", "zero_fraction": 1.0}, "zero fraction"),
        ({"kind": "counts-sweep", "rotation_strength": -0.1}, "rotation strength"),
        ({"kind": "counts-sweep", "threads": 0}, "thread count"),
        ({"kind": "qubit-sweep", "timing_trials": 0}, "timing trial count"),
        ({"kind": "derive-fit", "bins": 3}, "at least 4 bins"),
        ({"kind": "derive-fit", "derive_purity_range": (0.9, 0.5)}, "purity range"),
    ],
)
def test_config_validation(kwargs, message):
    with pytest.raises(ConfigError, match=message):
        ExperimentConfig(**kwargs)


def test_zero_fraction_defaults_by_kind():
    assert ExperimentConfig(kind="counts-sweep").resolved_zero_fraction == 0.25
    assert ExperimentConfig(kind="derive-fit").resolved_zero_fraction == 0.0
    explicit = ExperimentConfig(kind="derive-fit", zero_fraction=0.5)
    assert explicit.resolved_zero_fraction == 0.5


def test_runner_rejects_mismatched_kind():
    cfg = ExperimentConfig(kind="purity-sweep")
    with pytest.raises(ConfigError, match="does not match operation"):
        run_counts_sweep(cfg)


def test_single_count_guards():
    with pytest.raises(ConfigError, match="at most one total-counts"):
        run_purity_sweep(
            ExperimentConfig(kind="purity-sweep", total_counts=(1e3, 1e4))
        )
    with pytest.raises(ConfigError, match="at most one total-counts"):
        run_derive_fit(ExperimentConfig(kind="derive-fit", total_counts=(1e3, 1e4)))
    with pytest.raises(ConfigError, match="match the qubit grid"):
        run_qubit_sweep(
            ExperimentConfig(kind="qubit-sweep", qubits=(2, 3), total_counts=(1e3,))
        )


def test_default_grids():
    assert len(DEFAULT_COUNTS_GRID) == 7
    assert DEFAULT_COUNTS_GRID[0] == pytest.approx(1e3)
    assert DEFAULT_COUNTS_GRID[-1] == pytest.approx(1e6)
    assert DEFAULT_PURITY_GRID[0] == 0.5
    assert DEFAULT_PURITY_GRID[-1] == 1.0
    assert DEFAULT_QUBIT_GRID == (2, 3, 4, 5)


def test_counts_sweep_noiseless_round_trip():
    cfg = ExperimentConfig(
        kind="counts-sweep",
        n=2,
        trials=2,
        total_counts=(4000.0,),
        algorithms=("linear",),
        noise="exact",
        seed=5,
    )
    rows = run_counts_sweep(cfg)
    assert len(rows) == 1
    row = rows[0]
    assert row["algorithm"] == "linear"
    assert row["trials"] == 2
    assert row["failed_trials"] == 0
    assert row["mean_infidelity"] < 1e-6
    assert row["nonphysical_fraction"] == 0.0


def test_counts_sweep_error_shrinks_with_counts():
    cfg = ExperimentConfig(
        kind="counts-sweep",
        n=2,
        trials=6,
        total_counts=(1e3, 1e5),
        algorithms=("eo",),
        seed=11,
    )
    rows = run_counts_sweep(cfg)
    assert rows[0]["total_counts"] == 1e3
    assert rows[1]["total_counts"] == 1e5
    assert rows[1]["mean_infidelity"] < rows[0]["mean_infidelity"]


def test_sweep_csv_deterministic_across_threads(tmp_path):
    paths = []
    for name, threads in (("a.csv", 1), ("b.csv", 2), ("c.csv", 1)):
        out = tmp_path / name
        cfg = ExperimentConfig(
            kind="counts-sweep",
            n=2,
            trials=4,
            total_counts=(1000.0, 4000.0),
            algorithms=("sgs", "eo"),
            seed=7,
            threads=threads,
            out=str(out),
        )
        run_counts_sweep(cfg)
        paths.append(out)
    blobs = [p.read_bytes() for p in paths]
    assert blobs[0] == blobs[1] == blobs[2]
    header = blobs[0].decode().splitlines()[0]
    assert header == "total_counts," + ",".join(SWEEP_FIELDS)
    meta = json.loads((tmp_path / "a.meta.json").read_text())
    assert meta["config"]["seed"] == 7
    assert meta["version"]
    assert "a_mod_sign_convention" in meta
    assert "total_counts_convention" in meta
    assert "linear_infidelity_convention" in meta


def test_purity_sweep_rows_and_csv(tmp_path):
    out = tmp_path / "purity.csv"
    cfg = ExperimentConfig(
        kind="purity-sweep",
        n=2,
        trials=3,
        purities=(0.7, 0.94),
        total_counts=(4000.0,),
        algorithms=("sgs", "eo"),
        seed=3,
        out=str(out),
    )
    rows = run_purity_sweep(cfg)
    assert len(rows) == 4
    assert [r["target_purity"] for r in rows] == [0.7, 0.7, 0.94, 0.94]
    assert [r["algorithm"] for r in rows] == ["sgs", "eo", "sgs", "eo"]
    header = out.read_text().splitlines()[0]
    assert header == "target_purity," + ",".join(SWEEP_FIELDS)
    meta = json.loads((tmp_path / "purity.meta.json").read_text())
    assert meta["total_counts"] == 4000.0


def test_qubit_sweep_structure_and_mle_cap(tmp_path):
    out = tmp_path / "qubits.csv"
    cfg = ExperimentConfig(
        kind="qubit-sweep",
        qubits=(2, 3),
        trials=2,
        timing_trials=3,
        algorithms=("sgs", "eo", "mle"),
        mle_max_qubits=2,
        seed=2,
        out=str(out),
    )
    rows, timing_rows = run_qubit_sweep(cfg)
    by_n: dict[int, list[str]] = {}
    for row in rows:
        by_n.setdefault(row["n"], []).append(row["algorithm"])
    assert by_n[2] == ["sgs", "eo", "mle"]
    # mle is dropped above the cap
    assert by_n[3] == ["sgs", "eo"]
    assert rows[0]["total_counts"] == 4**2 * 1e3

    for row in timing_rows:
        assert row["timing_trials"] >= 1
        assert row["mean_wall_time"] > 0.0
        assert row["median_wall_time"] > 0.0
        if row["algorithm"] in ("sgs", "eo"):
            assert row["mean_core_time"] > 0.0
        else:
            assert row["mean_core_time"] == ""
    timing_path = tmp_path / "qubits_timing.csv"
    assert timing_path.exists()
    header = timing_path.read_text().splitlines()[0]
    assert header == ",".join(TIMING_FIELDS)


def test_qubit_sweep_needs_surviving_algorithm():
    cfg = ExperimentConfig(
        kind="qubit-sweep",
        qubits=(3,),
        trials=1,
        algorithms=("mle",),
        mle_max_qubits=2,
    )
    with pytest.raises(ConfigError, match="no algorithms left"):
        run_qubit_sweep(cfg)


def test_derive_fit_smoke_writes_artifacts(tmp_path):
    out = tmp_path / "curve.json"
    cfg = ExperimentConfig(kind="derive-fit", n=2, trials=1, seed=0, out=str(out))
    curve, profile, chi2 = run_derive_fit(cfg)
    # a single 2-qubit trial supports two odd terms; the wire shape pads to six
    assert len(curve.coefficients) == 6
    assert curve.coefficients[2:] == (0.0, 0.0, 0.0, 0.0)
    assert profile.n == 2
    assert chi2 >= 0.0
    reloaded = load_fit_curve(out)
    assert reloaded.coefficients == curve.coefficients
    profile_csv = tmp_path / "curve_profile.csv"
    assert profile_csv.exists()
    meta = json.loads((tmp_path / "curve.meta.json").read_text())
    assert meta["trials_used"] == 1
    assert meta["chi_squared"] == pytest.approx(chi2)
    assert meta["profile_csv"] == str(profile_csv)


def test_derive_fit_needs_nonphysical_samples():
    cfg = ExperimentConfig(kind="derive-fit", n=2, trials=2, seed=0, noise="exact")
    with pytest.raises(DegenerateInput, match="no non-physical reconstructions"):
        run_derive_fit(cfg)


def test_derived_curve_tracks_shipped_curve(tmp_path):
    """A freshly derived 2-qubit curve corrects about as well as the
    shipped one: mean infidelity within 10% at every counts point."""
    derived = tmp_path / "derived.json"
    cfg = ExperimentConfig(
        kind="derive-fit", n=2, trials=200, seed=9, threads=4, out=str(derived)
    )
    run_derive_fit(cfg)
    base = dict(
        kind="counts-sweep",
        n=2,
        trials=100,
        total_counts=(1e3, 16e3, 1e5),
        algorithms=("eo",),
        seed=4,
        threads=4,
    )
    shipped_rows = run_counts_sweep(ExperimentConfig(**base))
    derived_rows = run_counts_sweep(
        ExperimentConfig(**base, fit_curve_path=str(derived))
    )
    for a, b in zip(shipped_rows, derived_rows):
        assert a["total_counts"] == b["total_counts"]
        rel = abs(a["mean_infidelity"] - b["mean_infidelity"]) / a["mean_infidelity"]
        assert rel < 0.10


def test_reconstruct_file_matches_in_memory(tmp_path):
    p = solve_purity_param(2, 0.94, zero_fraction=0.25)
    truth = rank_deficient_state(
        StateRecipe(n=2, purity_param=p, zero_fraction=0.25, seed=8)
    )
    record = simulate_counts(truth, cube_projectors(2), 400, seed=8)
    counts_path = tmp_path / "counts.json"
    save_count_record(record, counts_path)
    truth_path = tmp_path / "truth.json"
    save_density_matrix(truth, truth_path)
    est_path = tmp_path / "estimate.json"

    estimate, info = reconstruct_file(
        counts_path, algorithm="eo", reference_path=truth_path, out_path=est_path
    )
    direct = eo_correct(
        eigendecompose(linear_reconstruct(record)), default_fit_curve()
    ).state
    np.testing.assert_allclose(estimate.matrix, direct.matrix, atol=1e-14)
    assert info["algorithm"] == "eo"
    assert info["n"] == 2
    assert info["num_settings"] == 9
    assert info["shots_per_setting"] == 400
    assert info["total_counts"] == 3600
    assert info["estimate_min_eigenvalue"] >= -1e-10
    assert info["iterations"] >= 1
    assert info["converged"] is True
    # zero eigenvalues make the fidelity sqrt-sensitive to last-bit wiggle,
    # so the file path and the in-memory path agree to ~sqrt(eps) only
    assert info["infidelity_vs_reference"] == pytest.approx(
        infidelity(truth, direct), abs=1e-6
    )
    assert info["output_path"] == str(est_path)
    reloaded = load_density_matrix(est_path)
    np.testing.assert_allclose(reloaded.matrix, estimate.matrix, atol=1e-12)


def test_reconstruct_file_linear_nonphysical_reports_null_infidelity(tmp_path):
    p = solve_purity_param(2, 0.94, zero_fraction=0.25)
    truth = rank_deficient_state(
        StateRecipe(n=2, purity_param=p, zero_fraction=0.25, seed=0)
    )
    record = simulate_counts(truth, cube_projectors(2), 400, seed=0)
    assert not linear_reconstruct(record).is_physical()
    counts_path = tmp_path / "counts.json"
    save_count_record(record, counts_path)
    truth_path = tmp_path / "truth.json"
    save_density_matrix(truth, truth_path)

    _, info = reconstruct_file(
        counts_path, algorithm="linear", reference_path=truth_path
    )
    assert info["reconstruction_physical"] is False
    assert info["min_reconstruction_eigenvalue"] < 0.0
    assert info["infidelity_vs_reference"] is None


def test_reconstruct_file_exact_counts_round_trip(tmp_path):
    truth = mixed_state(StateRecipe(n=2, purity_param=0.8, seed=4))
    record = simulate_counts(truth, cube_projectors(2), 1000, seed=4, noise="exact")
    counts_path = tmp_path / "exact.json"
    save_count_record(record, counts_path)
    truth_path = tmp_path / "truth.json"
    save_density_matrix(truth, truth_path)
    _, info = reconstruct_file(
        counts_path, algorithm="linear", reference_path=truth_path
    )
    assert info["reconstruction_physical"] is True
    assert info["infidelity_vs_reference"] <= 1e-8


def test_reconstruct_file_unknown_algorithm(tmp_path):
    with pytest.raises(ConfigError, match="unknown algorithm"):
        reconstruct_file(tmp_path / "missing.json", algorithm="bogus")


def test_loglog_slope_recovers_power_law():
    x = np.array([1e3, 1e4, 1e5, 1e6])
    y = 3.0 * x**-0.5
    assert loglog_slope(x, y) == pytest.approx(-0.5, abs=1e-12)


def test_loglog_slope_ignores_nonpositive_and_needs_two():
    x = np.array([10.0, 100.0, 1000.0])
    y = np.array([1.0, float("nan"), 0.1])
    # the NaN point drops out; the remaining two span one decade per half
    assert loglog_slope(x, y) == pytest.approx(-0.5, abs=1e-12)
    with pytest.raises(ValueError, match="two positive points"):
        loglog_slope(np.array([10.0]), np.array([1.0]))
