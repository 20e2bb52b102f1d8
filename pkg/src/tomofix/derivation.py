"""Derivation of the eigenvalue-weighting curve from optimized corrections.

For a non-physical reconstruction with spectrum ``v`` (descending) and
``n_+`` positive eigenvalues, the eigenbasis-restricted correction ``d`` that
best re-fits the measured probabilities minimizes

    C(d) = sum_j [ sum_{i <= n_+} d_i |<v_i|m_j>|^2 + c_0(j) ]^2,
    c_0(j) = - sum_{i > n_+} v_i |<v_i|m_j>|^2,

subject to ``d_i >= -v_i`` (physical output) with the nullified block pinned
at ``d_i = -v_i`` and the trace fixed through the dependent last coordinate
``d_{n_+} = -sum_{i < n_+} d_i + sum_{i > n_+} v_i``. Optimized distance
vectors from many random states collapse, after index and magnitude scaling,
onto a single odd curve which ``fit_odd_series`` extracts.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.optimize import minimize

from .correction import FitCurve, sgs_correct_values
from .density import Spectrum, _frozen
from .errors import DegenerateInput, IllConditioned
from .measurement import CountRecord

FEASIBILITY_TOL = 1e-9
PROFILE_BINS = 64

logger = logging.getLogger(__name__)


def sgs_start_distances(values: np.ndarray) -> np.ndarray:
    """Distance vector of the uniform-spreading correction (the search start)."""
    corrected, _ = sgs_correct_values(values)
    return corrected - np.asarray(values, dtype=float)


def optimize_distances(
    spectrum: Spectrum,
    record: CountRecord,
    *,
    maxiter: int | None = None,
    rhobeg: float | None = None,
    tol: float = 1e-12,
) -> np.ndarray:
    """Best eigenbasis-restricted correction distances for one reconstruction.

    Starts from the uniform-spreading distances and refines them with COBYLA
    under the physicality and trace constraints. Deterministic given the
    inputs. Returns the full distance vector over all ``2^n`` eigenvalue
    slots; entries past ``n_+`` equal ``-v_i`` exactly. If the optimizer ends
    on an infeasible point, the best feasible evaluated point is returned and
    a warning is logged.

    Raises:
        DegenerateInput: if no eigenvalue is strictly positive.
    """
    v = np.asarray(spectrum.eigenvalues, dtype=float)
    dim = len(v)
    n_pos = spectrum.n_positive
    if n_pos == 0:
        raise DegenerateInput("no positive eigenvalues")
    full = np.zeros(dim)
    full[n_pos:] = -v[n_pos:]
    tail_sum = float(np.sum(v[n_pos:]))
    if n_pos == dim:
        return full
    if n_pos == 1:
        full[0] = tail_sum
        return full

    overlaps = np.abs(record.projectors.vectors @ spectrum.eigenvectors) ** 2
    a = overlaps[:, :n_pos]
    c0 = -overlaps[:, n_pos:] @ v[n_pos:]
    # Quadratic (Gram) form of the residual objective: evaluations are
    # O(n_+^2) instead of O(projectors * n_+).
    gram = a.T @ a
    lin = a.T @ c0
    const = float(c0 @ c0)

    def expand(z: np.ndarray) -> np.ndarray:
        return np.concatenate([z, [tail_sum - float(np.sum(z))]])

    def cost(z: np.ndarray) -> float:
        d = expand(z)
        return float(d @ gram @ d + 2.0 * (lin @ d) + const)

    z0 = sgs_start_distances(v)[: n_pos - 1]
    best = {"cost": cost(z0), "z": np.array(z0)}

    def tracked_cost(z: np.ndarray) -> float:
        value = cost(z)
        d = expand(z)
        if value < best["cost"] and np.all(d + v[:n_pos] >= -FEASIBILITY_TOL):
            best["cost"] = value
            best["z"] = np.array(z)
        return value

    constraints = [
        {"type": "ineq", "fun": (lambda z, i=i: z[i] + v[i])}
        for i in range(n_pos - 1)
    ]
    constraints.append(
        {"type": "ineq", "fun": lambda z: tail_sum - float(np.sum(z)) + v[n_pos - 1]}
    )
    scale = max(abs(tail_sum), 1e-4)
    result = minimize(
        tracked_cost,
        z0,
        method="COBYLA",
        constraints=constraints,
        options={
            "rhobeg": rhobeg if rhobeg is not None else 0.5 * scale,
            "maxiter": maxiter if maxiter is not None else 2000 + 200 * n_pos,
            "tol": tol,
            "catol": FEASIBILITY_TOL,
        },
    )
    z = np.asarray(result.x, dtype=float)
    d_active = expand(z)
    if not np.all(d_active + v[:n_pos] >= -FEASIBILITY_TOL):
        logger.warning(
            "optimizer returned an infeasible point; falling back to the best "
            "feasible evaluation"
        )
        d_active = expand(best["z"])
    elif cost(z) > best["cost"]:
        d_active = expand(best["z"])
    full[:n_pos] = d_active
    return full


def distance_cost(
    spectrum: Spectrum, record: CountRecord, distances: np.ndarray
) -> float:
    """Residual objective ``C(d)`` for a full distance vector, exact form.

    Only the active block ``d_1..d_{n_+}`` enters; the nullified block is
    folded into the constant ``c_0``.
    """
    v = np.asarray(spectrum.eigenvalues, dtype=float)
    n_pos = spectrum.n_positive
    overlaps = np.abs(record.projectors.vectors @ spectrum.eigenvectors) ** 2
    c0 = -overlaps[:, n_pos:] @ v[n_pos:]
    r = overlaps[:, :n_pos] @ np.asarray(distances, dtype=float)[:n_pos] + c0
    return float(r @ r)


def scale_distances(
    distances: np.ndarray, n_positive: int, n: int
) -> tuple[np.ndarray, np.ndarray]:
    """Normalize one trial's distances onto the shared curve axes.

    The index axis is ``(i - 1) / (2^n - 1)`` in ``[0, 1]``; the distance axis
    is ``d_i * 2^n / sum_{i > n_+} |d_i|``, dividing out the trial's removed
    negative weight.

    Raises:
        ValueError: if the nullified block carries no weight (physical input).
    """
    d = np.asarray(distances, dtype=float)
    dim = len(d)
    denom = float(np.sum(np.abs(d[n_positive:])))
    if denom == 0.0:
        raise ValueError("no removed negative weight; nothing to normalize")
    idx = np.arange(dim) / (dim - 1)
    return idx, d * dim / denom


@dataclass(frozen=True)
class DistanceProfile:
    """Binned aggregate of scaled distance observations.

    ``scaled_index`` holds the centroid of each nonempty bin's member
    positions, so single-size profiles keep their exact index grid.
    """

    scaled_index: np.ndarray
    mean_scaled_distance: np.ndarray
    std_scaled_distance: np.ndarray
    count: np.ndarray
    n: int
    trials: int
    purity_range: tuple[float, float]

    @property
    def num_bins(self) -> int:
        return len(self.scaled_index)


def aggregate_profiles(
    trials: list[tuple[np.ndarray, int]],
    n: int,
    *,
    bins: int = PROFILE_BINS,
    purity_range: tuple[float, float] = (float("nan"), float("nan")),
) -> DistanceProfile:
    """Pool per-trial ``(distances, n_positive)`` pairs into a binned profile.

    Scaled observations land in ``bins`` uniform bins over ``[0, 1]``; each
    nonempty bin reports the mean, standard deviation, and count of its
    members. Trials with no removed weight are skipped.
    """
    xs: list[np.ndarray] = []
    ys: list[np.ndarray] = []
    used = 0
    for distances, n_positive in trials:
        try:
            idx, scaled = scale_distances(distances, n_positive, n)
        except ValueError:
            continue
        xs.append(idx)
        ys.append(scaled)
        used += 1
    if not xs:
        raise ValueError("no usable trials to aggregate")
    x = np.concatenate(xs)
    y = np.concatenate(ys)
    which = np.minimum((x * bins).astype(int), bins - 1)
    centroids, means, stds, counts = [], [], [], []
    for b in range(bins):
        members = which == b
        k = int(np.sum(members))
        if k == 0:
            continue
        centroids.append(float(np.mean(x[members])))
        means.append(float(np.mean(y[members])))
        stds.append(float(np.std(y[members])))
        counts.append(k)
    return DistanceProfile(
        scaled_index=_frozen(np.array(centroids)),
        mean_scaled_distance=_frozen(np.array(means)),
        std_scaled_distance=_frozen(np.array(stds)),
        count=_frozen(np.array(counts, dtype=int)),
        n=n,
        trials=used,
        purity_range=purity_range,
    )


def profile_to_csv(profile: DistanceProfile, path: str | Path) -> None:
    """Write the binned profile as CSV rows of (index, mean, std, count)."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["scaled_index", "mean_scaled_distance", "std_scaled_distance", "count"]
        )
        for i in range(profile.num_bins):
            writer.writerow(
                [
                    f"{profile.scaled_index[i]:.12g}",
                    f"{profile.mean_scaled_distance[i]:.12g}",
                    f"{profile.std_scaled_distance[i]:.12g}",
                    int(profile.count[i]),
                ]
            )


def fit_odd_series(
    profile: DistanceProfile, terms: int = 6
) -> tuple[FitCurve, float]:
    """Least-squares fit of an odd power series to a distance profile.

    The profile's index axis ``[0, 1]`` maps onto the curve domain ``[0, 2]``
    via ``x = 2 * scaled_index``. The bin at index 0 (the untouched largest
    eigenvalue) is excluded; the fitted family is antisymmetric about
    ``x = 1`` by construction, which pins ``F(1) = 0``.

    Returns:
        ``(curve, chi_square)`` with ``chi_square`` the mean squared residual
        over the fitted bins.

    Raises:
        IllConditioned: if the design matrix has rank below ``terms``.
    """
    if terms < 1:
        raise ValueError("terms must be at least 1")
    mask = profile.scaled_index > 1e-9
    x = 2.0 * profile.scaled_index[mask]
    y = profile.mean_scaled_distance[mask]
    u = x - 1.0
    design = np.stack([u ** (2 * k - 1) for k in range(1, terms + 1)], axis=1)
    coeffs, _, rank, _ = np.linalg.lstsq(design, y, rcond=None)
    if rank < terms:
        raise IllConditioned(
            f"design rank {rank} < {terms} terms; reduce the number of terms"
        )
    residuals = design @ coeffs - y
    chi_square = float(np.mean(residuals**2))
    return FitCurve(coefficients=tuple(float(c) for c in coeffs)), chi_square
