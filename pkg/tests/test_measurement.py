import numpy as np
import pytest

from tomofix.density import DensityMatrix, maximally_mixed, pure_state
from tomofix.errors import SchemaError, UnknownProjectorLabel
from tomofix.measurement import (
    CountRecord,
    born_probabilities,
    count_record_from_json_dict,
    count_record_to_json_dict,
    cube_projectors,
    load_count_record,
    pauli_basis,
    pauli_labels,
    save_count_record,
    shots_for_total,
    simulate_counts,
)
from tomofix.stategen import random_pure_state

BELL = pure_state(np.array([1.0, 0.0, 0.0, 1.0]) / np.sqrt(2.0))
BELL_1Q = pure_state(np.array([1.0, 1.0]) / np.sqrt(2.0))


def test_pauli_labels_enumeration():
    assert pauli_labels(1) == ("I", "X", "Y", "Z")
    labels2 = pauli_labels(2)
    assert len(labels2) == 16
    assert labels2[0] == "II"
    assert "XZ" in labels2


def test_pauli_basis_orthogonality():
    for n in (1, 2):
        basis = pauli_basis(n)
        d = 2**n
        assert basis.shape == (4**n, d, d)
        for a in range(4**n):
            np.testing.assert_allclose(
                basis[a], basis[a].conj().T, atol=1e-14
            )
            for b in range(4**n):
                inner = np.trace(basis[a] @ basis[b]).real
                assert inner == pytest.approx(d if a == b else 0.0, abs=1e-12)


def test_cube_projectors_shape_and_labels():
    for n in (1, 2, 3):
        ps = cube_projectors(n)
        assert ps.num_settings == 3**n
        assert ps.num_projectors == 6**n
        assert ps.kind == "cube"
        ps.validate()
    ps = cube_projectors(2)
    assert ps.labels[0] == "XX:00"
    assert all(":" in label for label in ps.labels)


def test_cube_projectors_known_single_qubit_kets():
    ps = cube_projectors(1)
    kets = {label: ps.vectors[i] for i, label in enumerate(ps.labels)}
    s = 1.0 / np.sqrt(2.0)
    np.testing.assert_allclose(kets["Z:0"], [1.0, 0.0], atol=1e-15)
    np.testing.assert_allclose(kets["Z:1"], [0.0, 1.0], atol=1e-15)
    np.testing.assert_allclose(kets["X:0"], [s, s], atol=1e-15)
    np.testing.assert_allclose(kets["X:1"], [s, -s], atol=1e-15)
    np.testing.assert_allclose(kets["Y:0"], [s, 1j * s], atol=1e-15)
    np.testing.assert_allclose(kets["Y:1"], [s, -1j * s], atol=1e-15)


def test_cube_projectors_cached():
    assert cube_projectors(2) is cube_projectors(2)


def test_born_probabilities_match_direct_quadratic_form():
    rng = np.random.default_rng(6)
    a = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    m = a @ a.conj().T
    state = DensityMatrix.from_matrix(m / np.trace(m).real)
    ps = cube_projectors(2)
    p = born_probabilities(state, ps)
    for j in range(ps.num_projectors):
        v = ps.vectors[j]
        assert p[j] == pytest.approx(np.real(v.conj() @ state.matrix @ v), abs=1e-12)


def test_born_probabilities_bell_correlations():
    ps = cube_projectors(2)
    p = {label: v for label, v in zip(ps.labels, born_probabilities(BELL, ps))}
    # perfect ZZ and XX correlation, perfect YY anticorrelation
    assert p["ZZ:00"] == pytest.approx(0.5)
    assert p["ZZ:01"] == pytest.approx(0.0, abs=1e-12)
    assert p["ZZ:10"] == pytest.approx(0.0, abs=1e-12)
    assert p["ZZ:11"] == pytest.approx(0.5)
    assert p["XX:00"] == pytest.approx(0.5)
    assert p["XX:11"] == pytest.approx(0.5)
    assert p["YY:00"] == pytest.approx(0.0, abs=1e-12)
    assert p["YY:01"] == pytest.approx(0.5)


def test_born_probabilities_settings_sum_to_one():
    state = random_pure_state(2, seed=3)
    ps = cube_projectors(2)
    p = born_probabilities(state, ps)
    for _, idx in ps.settings:
        assert np.sum(p[list(idx)]) == pytest.approx(1.0, abs=1e-10)


def test_shots_for_total():
    ps = cube_projectors(2)
    assert shots_for_total(ps, 16_000) == round(16_000 / 9)
    assert shots_for_total(ps, 1.0) == 1


def test_simulate_counts_exact_matches_born():
    ps = cube_projectors(2)
    record = simulate_counts(BELL, ps, 100, noise="exact")
    np.testing.assert_allclose(
        record.probabilities, born_probabilities(BELL, ps), atol=1e-12
    )
    assert record.noise_model == "exact"
    assert record.total_counts == 900


def test_simulate_counts_deterministic_by_seed():
    ps = cube_projectors(2)
    a = simulate_counts(BELL, ps, 500, seed=42)
    b = simulate_counts(BELL, ps, 500, seed=42)
    c = simulate_counts(BELL, ps, 500, seed=43)
    np.testing.assert_array_equal(a.counts, b.counts)
    assert np.max(np.abs(a.counts - c.counts)) > 0


def test_simulate_counts_gaussian_noise_scale():
    # raw deviations (counts/S - p) should follow sigma = sqrt(p(1-p)/S);
    # pooled over many projectors the normalized std is near 1
    state = maximally_mixed(2)
    ps = cube_projectors(2)
    s = 4000
    p = born_probabilities(state, ps)
    sigma = np.sqrt(p * (1.0 - p) / s)
    devs = []
    for seed in range(60):
        record = simulate_counts(state, ps, s, seed=seed)
        devs.append((record.counts / s - p) / sigma)
    ratio = float(np.std(np.concatenate(devs)))
    assert 0.95 < ratio < 1.05


def test_simulate_counts_probabilities_renormalized():
    state = random_pure_state(2, seed=9)
    ps = cube_projectors(2)
    record = simulate_counts(state, ps, 50, seed=1)
    ids = ps.setting_ids()
    for sidx in range(ps.num_settings):
        block = record.probabilities[ids == sidx]
        assert np.sum(block) == pytest.approx(1.0, abs=1e-12)


def test_simulate_counts_multinomial_integer_counts():
    ps = cube_projectors(2)
    record = simulate_counts(BELL, ps, 300, seed=5, noise="multinomial")
    np.testing.assert_array_equal(record.counts, np.round(record.counts))
    ids = ps.setting_ids()
    for sidx in range(ps.num_settings):
        assert np.sum(record.counts[ids == sidx]) == pytest.approx(300)


def test_simulate_counts_input_validation():
    ps = cube_projectors(1)
    with pytest.raises(ValueError, match="at least 1"):
        simulate_counts(BELL, cube_projectors(2), 0)
    with pytest.raises(ValueError, match="unknown noise model"):
        simulate_counts(maximally_mixed(1), ps, 10, noise="poisson")


def test_count_record_json_round_trip():
    ps = cube_projectors(2)
    record = simulate_counts(BELL, ps, 200, seed=7, noise="multinomial")
    again = count_record_from_json_dict(count_record_to_json_dict(record))
    assert again.shots_per_setting == record.shots_per_setting
    assert again.projectors.kind == "cube"
    np.testing.assert_allclose(again.counts, record.counts, atol=0)
    np.testing.assert_allclose(again.probabilities, record.probabilities, atol=1e-15)


def test_count_record_file_round_trip(tmp_path):
    ps = cube_projectors(1)
    record = simulate_counts(BELL_1Q, ps, 100, seed=0)
    path = tmp_path / "counts.json"
    save_count_record(record, path)
    loaded = load_count_record(path)
    np.testing.assert_allclose(loaded.counts, record.counts, atol=1e-12)
    assert loaded.noise_model == "ingested"


def _wire(n=1, label="Z", shots=10, outcomes=None):
    if outcomes is None:
        outcomes = [
            {"label": "0", "count": 6},
            {"label": "1", "count": 4},
        ]
    return {"n": n, "settings": [{"label": label, "shots": shots, "outcomes": outcomes}]}


def test_schema_missing_keys():
    with pytest.raises(SchemaError, match="top level: expected an object"):
        count_record_from_json_dict([])
    with pytest.raises(SchemaError, match="missing key 'n'"):
        count_record_from_json_dict({"settings": []})
    with pytest.raises(SchemaError, match="missing key 'settings'"):
        count_record_from_json_dict({"n": 1})
    with pytest.raises(SchemaError, match="nonempty array"):
        count_record_from_json_dict({"n": 1, "settings": []})


def test_schema_bad_setting_label():
    with pytest.raises(UnknownProjectorLabel, match="axis string"):
        count_record_from_json_dict(_wire(label="Q"))
    with pytest.raises(UnknownProjectorLabel, match="axis string"):
        count_record_from_json_dict(_wire(label="ZZ"))


def test_schema_bad_shots():
    with pytest.raises(SchemaError, match="shots: expected a positive integer"):
        count_record_from_json_dict(_wire(shots=0))
    wire = {
        "n": 1,
        "settings": [
            _wire()["settings"][0],
            {"label": "X", "shots": 99, "outcomes": _wire()["settings"][0]["outcomes"]},
        ],
    }
    with pytest.raises(SchemaError, match="must be uniform"):
        count_record_from_json_dict(wire)


def test_schema_bad_outcomes():
    with pytest.raises(UnknownProjectorLabel, match="bit string"):
        count_record_from_json_dict(
            _wire(outcomes=[{"label": "2", "count": 5}, {"label": "1", "count": 5}])
        )
    with pytest.raises(SchemaError, match="count: expected a nonnegative number"):
        count_record_from_json_dict(
            _wire(outcomes=[{"label": "0", "count": -1}, {"label": "1", "count": 5}])
        )
    with pytest.raises(SchemaError, match="duplicate outcome"):
        count_record_from_json_dict(
            _wire(outcomes=[{"label": "0", "count": 5}, {"label": "0", "count": 5}])
        )
    with pytest.raises(SchemaError, match="missing outcome '1'"):
        count_record_from_json_dict(_wire(outcomes=[{"label": "0", "count": 5}]))


def test_schema_duplicate_setting():
    wire = {"n": 1, "settings": [_wire()["settings"][0], _wire()["settings"][0]]}
    with pytest.raises(SchemaError, match="duplicate setting"):
        count_record_from_json_dict(wire)


def test_partial_design_keeps_file_order():
    wire = {
        "n": 1,
        "settings": [
            {"label": "X", "shots": 10, "outcomes": _wire()["settings"][0]["outcomes"]},
            {"label": "Z", "shots": 10, "outcomes": _wire()["settings"][0]["outcomes"]},
        ],
    }
    record = count_record_from_json_dict(wire)
    assert record.projectors.kind == "cube-partial"
    assert [label for label, _ in record.projectors.settings] == ["X", "Z"]


def test_load_count_record_rejects_malformed_json(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text("{not json")
    with pytest.raises(SchemaError):
        load_count_record(path)
