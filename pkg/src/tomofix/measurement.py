"""Projective measurement model: Pauli basis, cube projectors, count simulation.

The cube design measures every qubit along x, y, or z, giving ``3^n`` settings
of ``2^n`` orthonormal outcome projectors each. Counts carry Gaussian noise
matched to the multinomial variance by default; a true multinomial sampler and
an exact (infinite-shot) mode are available behind the ``noise`` flag.
"""

from __future__ import annotations

import functools
import itertools
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .density import DensityMatrix, _frozen
from .errors import SchemaError, UnknownProjectorLabel

PROB_SUM_TOL = 1e-9

_SQ = 1.0 / np.sqrt(2.0)
# Eigenvector pairs per measurement axis; index 0 is the +1 outcome.
_AXIS_KETS = {
    "X": (np.array([_SQ, _SQ], dtype=complex), np.array([_SQ, -_SQ], dtype=complex)),
    "Y": (np.array([_SQ, 1j * _SQ], dtype=complex), np.array([_SQ, -1j * _SQ], dtype=complex)),
    "Z": (np.array([1.0, 0.0], dtype=complex), np.array([0.0, 1.0], dtype=complex)),
}
_AXES = "XYZ"

_PAULI_1Q = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def pauli_labels(n: int) -> tuple[str, ...]:
    """All ``4^n`` Pauli-string labels in lexicographic I, X, Y, Z order."""
    return tuple("".join(p) for p in itertools.product("IXYZ", repeat=n))


def pauli_basis(n: int) -> np.ndarray:
    """Stack of all ``4^n`` Pauli-string matrices, shape ``(4^n, 2^n, 2^n)``.

    Ordered lexicographically with qubit 0 as the most significant factor, so
    index ``a`` read in base 4 gives the per-qubit letters. The set is
    trace-orthogonal: ``Tr(G_a G_b) = 2^n delta_ab``.
    """
    mats = [np.array([[1.0]], dtype=complex)]
    for _ in range(n):
        mats = [np.kron(m, _PAULI_1Q[c]) for m in mats for c in "IXYZ"]
    return np.stack(mats)


@dataclass(frozen=True, eq=False)
class ProjectorSet:
    """A collection of rank-1 projectors grouped into measurement settings.

    Attributes:
        n: qubit count.
        labels: one label per projector, ``"<setting>:<outcome>"``.
        vectors: ``(m, 2^n)`` complex array; row ``j`` is the unit ket of
            projector ``j``.
        settings: tuple of ``(setting_label, projector_indices)`` pairs; the
            projectors of one setting are orthonormal and complete.
        kind: ``"cube"`` for the full canonical cube design (which enables the
            closed-form reconstruction path), anything else for general sets.

    Instances hash by identity, so derived quantities can be cached per set.
    """

    n: int
    labels: tuple[str, ...]
    vectors: np.ndarray
    settings: tuple[tuple[str, tuple[int, ...]], ...]
    kind: str = "custom"

    @property
    def num_projectors(self) -> int:
        return len(self.labels)

    @property
    def num_settings(self) -> int:
        return len(self.settings)

    def setting_ids(self) -> np.ndarray:
        """Setting index of each projector, aligned with ``vectors`` rows."""
        ids = np.empty(self.num_projectors, dtype=int)
        for s, (_, idx) in enumerate(self.settings):
            ids[list(idx)] = s
        return ids

    def validate(self, *, tol: float = 1e-10) -> None:
        """Check unit norms and per-setting completeness; raises ValueError."""
        norms = np.linalg.norm(self.vectors, axis=1)
        if np.max(np.abs(norms - 1.0)) > tol:
            raise ValueError("projector vectors must be unit norm")
        d = 2**self.n
        for label, idx in self.settings:
            block = self.vectors[list(idx)]
            gram = block @ block.conj().T
            if np.max(np.abs(gram - np.eye(len(idx)))) > tol:
                raise ValueError(f"setting {label!r} is not orthonormal")
            total = block.conj().T @ block
            if np.max(np.abs(total - np.eye(d))) > tol:
                raise ValueError(f"setting {label!r} does not resolve the identity")


def _cube_ket(setting: str, outcome: str) -> np.ndarray:
    ket = np.array([1.0], dtype=complex)
    for axis, bit in zip(setting, outcome):
        ket = np.kron(ket, _AXIS_KETS[axis][int(bit)])
    return ket


@functools.lru_cache(maxsize=None)
def cube_projectors(n: int) -> ProjectorSet:
    """The full cube design: ``3^n`` settings of ``2^n`` outcome projectors.

    Settings enumerate axis strings over X, Y, Z lexicographically; outcomes
    enumerate bit strings, bit 0 marking the +1 eigenvector of that qubit's
    axis. Qubit 0 is the most significant tensor factor.
    """
    d = 2**n
    labels: list[str] = []
    vectors = np.empty((3**n * d, d), dtype=complex)
    settings: list[tuple[str, tuple[int, ...]]] = []
    row = 0
    for axes in itertools.product(_AXES, repeat=n):
        setting = "".join(axes)
        idx = []
        for bits in itertools.product("01", repeat=n):
            outcome = "".join(bits)
            vectors[row] = _cube_ket(setting, outcome)
            labels.append(f"{setting}:{outcome}")
            idx.append(row)
            row += 1
        settings.append((setting, tuple(idx)))
    return ProjectorSet(
        n=n,
        labels=tuple(labels),
        vectors=_frozen(vectors),
        settings=tuple(settings),
        kind="cube",
    )


def born_probabilities(state: DensityMatrix, projectors: ProjectorSet) -> np.ndarray:
    """Outcome probabilities ``<m_j| rho |m_j>`` for every projector.

    Within each complete setting the probabilities sum to the trace of the
    state, and they are nonnegative for physical inputs.
    """
    v = projectors.vectors
    return np.real(np.einsum("jb,jb->j", v.conj() @ state.matrix, v))


@dataclass(frozen=True, eq=False)
class CountRecord:
    """Measured (or simulated) counts for one projector set.

    Attributes:
        projectors: the measurement design.
        shots_per_setting: shot budget ``S`` of every setting.
        probabilities: per-projector observed probabilities, renormalized so
            each setting sums to 1.
        counts: raw per-projector counts before renormalization (integers for
            multinomial noise, real-valued for the Gaussian model).
        noise_model: which sampler produced the record.
    """

    projectors: ProjectorSet
    shots_per_setting: int
    probabilities: np.ndarray
    counts: np.ndarray
    noise_model: str = "gaussian"

    @property
    def total_counts(self) -> int:
        """Total shot budget ``S * number_of_settings``."""
        return self.shots_per_setting * self.projectors.num_settings


def shots_for_total(projectors: ProjectorSet, total_counts: float) -> int:
    """Per-setting shot budget for a total budget split across all settings."""
    return max(1, int(round(total_counts / projectors.num_settings)))


def _renormalize(raw: np.ndarray, projectors: ProjectorSet) -> np.ndarray:
    ids = projectors.setting_ids()
    sums = np.bincount(ids, weights=raw, minlength=projectors.num_settings)
    d = 2**projectors.n
    # A setting whose entries all clipped to zero carries no information;
    # fall back to the uniform distribution there.
    safe = np.where(sums > 0.0, sums, 1.0)
    probs = raw / safe[ids]
    probs[sums[ids] <= 0.0] = 1.0 / d
    return probs


def simulate_counts(
    state: DensityMatrix,
    projectors: ProjectorSet,
    shots_per_setting: int,
    seed: int = 0,
    *,
    noise: str = "gaussian",
) -> CountRecord:
    """Simulate one tomography run.

    ``noise="gaussian"`` perturbs each Born probability by
    ``Normal(0, sqrt(p(1-p)/S))``, clips to ``[0, 1]`` and renormalizes within
    each setting; the raw clipped values scaled by ``S`` are kept as counts.
    ``noise="multinomial"`` draws true multinomial counts per setting.
    ``noise="exact"`` is the infinite-shot limit.
    """
    if shots_per_setting < 1:
        raise ValueError("shots_per_setting must be at least 1")
    p = np.maximum(born_probabilities(state, projectors), 0.0)
    rng = np.random.default_rng(seed)
    if noise == "gaussian":
        sigma = np.sqrt(p * (1.0 - p) / shots_per_setting)
        observed = np.clip(p + rng.standard_normal(p.shape) * sigma, 0.0, 1.0)
        counts = observed * shots_per_setting
    elif noise == "multinomial":
        counts = np.empty_like(p)
        for _, idx in projectors.settings:
            idx = list(idx)
            block = p[idx]
            counts[idx] = rng.multinomial(shots_per_setting, block / block.sum())
        observed = counts / shots_per_setting
    elif noise == "exact":
        observed = p.copy()
        counts = p * shots_per_setting
    else:
        raise ValueError(f"unknown noise model {noise!r}")
    probs = _renormalize(observed, projectors)
    return CountRecord(
        projectors=projectors,
        shots_per_setting=int(shots_per_setting),
        probabilities=_frozen(probs),
        counts=_frozen(counts),
        noise_model=noise,
    )


def count_record_to_json_dict(record: CountRecord) -> dict:
    """Serialize a record to the nested setting/outcome wire format."""
    settings = []
    for label, idx in record.projectors.settings:
        outcomes = []
        for j in idx:
            outcome = record.projectors.labels[j].split(":", 1)[1]
            outcomes.append({"label": outcome, "count": float(record.counts[j])})
        settings.append(
            {
                "label": label,
                "shots": record.shots_per_setting,
                "outcomes": outcomes,
            }
        )
    return {"n": record.projectors.n, "settings": settings}


def _expect(obj: dict, key: str, where: str):
    if key not in obj:
        raise SchemaError(f"{where}: missing key {key!r}")
    return obj[key]


def count_record_from_json_dict(obj: dict) -> CountRecord:
    """Parse the wire format into a CountRecord over cube-style projectors.

    Setting labels are axis strings over X, Y, Z and outcome labels are bit
    strings, both of length ``n``. A file covering every one of the ``3^n``
    settings is canonicalized to the standard cube ordering, which keeps the
    closed-form reconstruction path available.

    Raises:
        SchemaError: structural problems, with the offending field named.
        UnknownProjectorLabel: labels that cannot be resolved to projectors.
    """
    if not isinstance(obj, dict):
        raise SchemaError("top level: expected an object")
    n = _expect(obj, "n", "top level")
    if not isinstance(n, int) or n < 1:
        raise SchemaError(f"n: expected a positive integer, got {n!r}")
    raw_settings = _expect(obj, "settings", "top level")
    if not isinstance(raw_settings, list) or not raw_settings:
        raise SchemaError("settings: expected a nonempty array")

    d = 2**n
    parsed: dict[str, np.ndarray] = {}
    shots: int | None = None
    for s_i, entry in enumerate(raw_settings):
        where = f"settings[{s_i}]"
        if not isinstance(entry, dict):
            raise SchemaError(f"{where}: expected an object")
        label = _expect(entry, "label", where)
        if not isinstance(label, str) or len(label) != n or any(c not in _AXES for c in label):
            raise UnknownProjectorLabel(
                f"{where}.label: {label!r} is not an axis string of length {n}"
            )
        if label in parsed:
            raise SchemaError(f"{where}.label: duplicate setting {label!r}")
        entry_shots = _expect(entry, "shots", where)
        if not isinstance(entry_shots, int) or entry_shots < 1:
            raise SchemaError(f"{where}.shots: expected a positive integer")
        if shots is None:
            shots = entry_shots
        elif entry_shots != shots:
            raise SchemaError(
                f"{where}.shots: {entry_shots} differs from {shots}; "
                "shots must be uniform across settings"
            )
        outcomes = _expect(entry, "outcomes", where)
        if not isinstance(outcomes, list):
            raise SchemaError(f"{where}.outcomes: expected an array")
        counts = np.full(d, np.nan)
        for o_i, out in enumerate(outcomes):
            o_where = f"{where}.outcomes[{o_i}]"
            if not isinstance(out, dict):
                raise SchemaError(f"{o_where}: expected an object")
            o_label = _expect(out, "label", o_where)
            if (
                not isinstance(o_label, str)
                or len(o_label) != n
                or any(c not in "01" for c in o_label)
            ):
                raise UnknownProjectorLabel(
                    f"{o_where}.label: {o_label!r} is not a bit string of length {n}"
                )
            value = _expect(out, "count", o_where)
            if not isinstance(value, (int, float)) or isinstance(value, bool) or value < 0:
                raise SchemaError(f"{o_where}.count: expected a nonnegative number")
            slot = int(o_label, 2)
            if not np.isnan(counts[slot]):
                raise SchemaError(f"{o_where}.label: duplicate outcome {o_label!r}")
            counts[slot] = float(value)
        missing = np.nonzero(np.isnan(counts))[0]
        if missing.size:
            bits = format(missing[0], f"0{n}b")
            raise SchemaError(f"{where}.outcomes: missing outcome {bits!r}")
        parsed[label] = counts

    cube_labels = ["".join(a) for a in itertools.product(_AXES, repeat=n)]
    if set(parsed) == set(cube_labels):
        projectors = cube_projectors(n)
        ordered = cube_labels
    else:
        # Partial designs keep file order and go through the general
        # least-squares reconstruction path.
        ordered = list(parsed)
        labels: list[str] = []
        vectors = np.empty((len(ordered) * d, d), dtype=complex)
        settings = []
        row = 0
        for label in ordered:
            idx = []
            for k in range(d):
                bits = format(k, f"0{n}b")
                vectors[row] = _cube_ket(label, bits)
                labels.append(f"{label}:{bits}")
                idx.append(row)
                row += 1
            settings.append((label, tuple(idx)))
        projectors = ProjectorSet(
            n=n,
            labels=tuple(labels),
            vectors=_frozen(vectors),
            settings=tuple(settings),
            kind="cube-partial",
        )

    counts = np.concatenate([parsed[label] for label in ordered])
    probs = _renormalize(counts.astype(float), projectors)
    return CountRecord(
        projectors=projectors,
        shots_per_setting=int(shots),  # type: ignore[arg-type]
        probabilities=_frozen(probs),
        counts=_frozen(counts.astype(float)),
        noise_model="ingested",
    )


def save_count_record(record: CountRecord, path: str | Path) -> None:
    Path(path).write_text(json.dumps(count_record_to_json_dict(record)))


def load_count_record(path: str | Path) -> CountRecord:
    """Load a count file; raises SchemaError on malformed JSON or structure."""
    try:
        obj = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: not valid JSON ({exc})") from exc
    return count_record_from_json_dict(obj)
