"""Random state generation: pure states, tunable-purity mixtures, rank deficiency.

Sampling is deterministic given the recipe seed. Pure states are drawn from
the Haar measure by normalizing complex Gaussian vectors.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .density import DensityMatrix, Spectrum, eigendecompose, from_spectrum, purity
from .errors import NonPhysicalRecipe

RECIPE_PHYSICALITY_TOL = 1e-12

_PAULIS = {
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


@dataclass(frozen=True)
class StateRecipe:
    """Parameters for one random mixed state.

    Attributes:
        n: qubit count.
        purity_param: mixing weight ``p`` in ``(0, 1]``; 1 returns the pure
            state itself and smaller values approach the maximally mixed state.
        zero_fraction: fraction of the spectrum forced to zero afterwards, in
            ``[0, 1)``; ``floor(zero_fraction * 2^n)`` eigenvalues are removed.
        rotation_strength: scale ``eps >= 0`` of the coherent error term built
            from a random small-angle unitary.
        seed: RNG seed; fixes the pure state and the error rotation.
    """

    n: int
    purity_param: float
    zero_fraction: float = 0.0
    rotation_strength: float = 0.0
    seed: int = 0

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ValueError("n must be at least 1")
        if not 0.0 < self.purity_param <= 1.0:
            raise ValueError("purity_param must lie in (0, 1]")
        if not 0.0 <= self.zero_fraction < 1.0:
            raise ValueError("zero_fraction must lie in [0, 1)")
        if self.rotation_strength < 0.0:
            raise ValueError("rotation_strength must be nonnegative")


def _haar_ket(n: int, rng: np.random.Generator) -> np.ndarray:
    z = rng.standard_normal(2**n) + 1j * rng.standard_normal(2**n)
    return z / np.linalg.norm(z)


def random_pure_state(n: int, seed: int = 0) -> DensityMatrix:
    """Haar-random pure state ``|psi><psi|`` on ``n`` qubits."""
    rng = np.random.default_rng(seed)
    psi = _haar_ket(n, rng)
    return DensityMatrix.from_matrix(np.outer(psi, psi.conj()))


def _small_random_unitary(n: int, eps: float, rng: np.random.Generator) -> np.ndarray:
    """Tensor product of single-qubit rotations with angles ~ Normal(0, eps).

    Each qubit rotates about a Haar-random Bloch axis, so the operator stays
    close to the identity for small ``eps``.
    """
    out = np.array([[1.0]], dtype=complex)
    for _ in range(n):
        theta = rng.normal(0.0, eps)
        axis = rng.standard_normal(3)
        axis = axis / np.linalg.norm(axis)
        gen = axis[0] * _PAULIS["X"] + axis[1] * _PAULIS["Y"] + axis[2] * _PAULIS["Z"]
        u = np.cos(theta / 2) * np.eye(2) - 1j * np.sin(theta / 2) * gen
        out = np.kron(out, u)
    return out


def mixed_state(recipe: StateRecipe) -> DensityMatrix:
    """Mix a Haar-random pure state toward the identity, with optional coherent error.

    The raw combination is
    ``p * rho_pure + (1 - p)/3 * (2 * I/2^n + eps * (U rho_pure U^dag - rho_pure))``
    which is then re-Hermitized and renormalized to unit trace. With
    ``eps = 0`` the spectrum depends only on ``p``, purity is monotone in
    ``p``, and the ``p -> 0`` limit is the maximally mixed state.

    Raises:
        NonPhysicalRecipe: if the error term drives an eigenvalue below
            ``-RECIPE_PHYSICALITY_TOL``.
    """
    rng = np.random.default_rng(recipe.seed)
    n, p = recipe.n, recipe.purity_param
    d = 2**n
    psi = _haar_ket(n, rng)
    rho_pure = np.outer(psi, psi.conj())
    raw = p * rho_pure + (1.0 - p) / 3.0 * (2.0 * np.eye(d) / d)
    if recipe.rotation_strength > 0.0:
        u = _small_random_unitary(n, recipe.rotation_strength, rng)
        rotated = u @ rho_pure @ u.conj().T
        raw = raw + (1.0 - p) / 3.0 * recipe.rotation_strength * (rotated - rho_pure)
    raw = (raw + raw.conj().T) / 2.0
    raw = raw / np.trace(raw).real
    low = float(np.linalg.eigvalsh(raw)[0])
    if low < -RECIPE_PHYSICALITY_TOL:
        raise NonPhysicalRecipe(
            f"recipe yields eigenvalue {low:.3e}; reduce rotation_strength"
        )
    return DensityMatrix.from_matrix(raw)


def rank_deficient_state(recipe: StateRecipe) -> DensityMatrix:
    """Mixed state with its smallest ``floor(zero_fraction * 2^n)`` eigenvalues zeroed.

    The surviving eigenvalues are renormalized to sum to 1 and the state is
    rebuilt in the same eigenbasis. ``zero_fraction = 0`` returns the mixed
    state unchanged.
    """
    state = mixed_state(recipe)
    k = int(np.floor(recipe.zero_fraction * 2**recipe.n))
    if k == 0:
        return state
    spec = eigendecompose(state)
    values = spec.eigenvalues.copy()
    values[len(values) - k :] = 0.0
    values = values / values.sum()
    return from_spectrum(Spectrum(values, spec.eigenvectors))


def solve_purity_param(
    n: int,
    target_purity: float,
    *,
    zero_fraction: float = 0.0,
    rotation_strength: float = 0.0,
    seed: int = 0,
    tol: float = 1e-10,
    max_iter: int = 200,
) -> float:
    """Find ``p`` so the generated state hits a target purity, by bisection.

    With ``rotation_strength = 0`` the purity is a strictly increasing
    function of ``p`` independent of the seed, so the returned value serves
    every seed of the same shape.

    Raises:
        ValueError: if the target is outside the achievable purity range.
    """

    def purity_of(p: float) -> float:
        recipe = StateRecipe(
            n=n,
            purity_param=p,
            zero_fraction=zero_fraction,
            rotation_strength=rotation_strength,
            seed=seed,
        )
        return purity(rank_deficient_state(recipe))

    lo, hi = 1e-12, 1.0
    f_lo = purity_of(lo) - target_purity
    f_hi = purity_of(hi) - target_purity
    if f_hi < -tol or f_lo > tol:
        raise ValueError(
            f"target purity {target_purity} outside achievable range "
            f"[{f_lo + target_purity:.6f}, {f_hi + target_purity:.6f}]"
        )
    for _ in range(max_iter):
        mid = (lo + hi) / 2.0
        if purity_of(mid) < target_purity:
            lo = mid
        else:
            hi = mid
        if hi - lo < tol:
            break
    return hi
