"""Density-matrix algebra: eigendecomposition, reconstruction, and state metrics.

Every operation is a pure function over immutable inputs. Tolerances are
module-level constants and each operation accepts an override, so callers can
tighten or relax them without monkey-patching.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import NonHermitian, NonPhysicalInput

# Default tolerances. Functions take these as keyword overrides.
HERMITICITY_TOL = 1e-10
TRACE_TOL = 1e-10
TRACE_IMAG_TOL = 1e-12
PHYSICALITY_TOL = 1e-10
FIDELITY_INPUT_TOL = 1e-6
SQRT_CLIP = 1e-12


def _frozen(a: np.ndarray) -> np.ndarray:
    """Return ``a`` marked read-only, so dataclass holders stay immutable."""
    a.flags.writeable = False
    return a


def _hermiticity_defect(matrix: np.ndarray) -> float:
    return float(np.max(np.abs(matrix - matrix.conj().T)))


@dataclass(frozen=True)
class DensityMatrix:
    """A ``2^n x 2^n`` complex matrix tagged with its qubit count ``n``.

    The wrapped array is expected to be Hermitian within ``HERMITICITY_TOL``
    and trace-normalized when it represents a state. Matrices produced by
    linear reconstruction keep unit trace but may carry negative eigenvalues;
    ``is_physical`` distinguishes the two cases. Instances built through
    ``from_matrix`` hold a read-only copy and are safe to share across threads.
    """

    matrix: np.ndarray
    n: int

    @classmethod
    def from_matrix(
        cls, matrix: np.ndarray, *, hermiticity_tol: float | None = None
    ) -> "DensityMatrix":
        """Validate and wrap a square complex array.

        Args:
            matrix: square array of side ``2^n``.
            hermiticity_tol: maximum allowed entrywise ``|A - A^dag|``;
                defaults to ``HERMITICITY_TOL``.

        Raises:
            ValueError: if the array is not square with a power-of-two side.
            NonHermitian: if the Hermiticity defect exceeds the tolerance.
        """
        tol = HERMITICITY_TOL if hermiticity_tol is None else hermiticity_tol
        arr = np.array(matrix, dtype=complex)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise ValueError(f"expected a square matrix, got shape {arr.shape}")
        n = int(round(math.log2(arr.shape[0])))
        if 2**n != arr.shape[0]:
            raise ValueError(f"matrix side {arr.shape[0]} is not a power of two")
        defect = _hermiticity_defect(arr)
        if defect > tol:
            raise NonHermitian(
                f"max |A - A^dag| = {defect:.3e} exceeds tolerance {tol:.1e}"
            )
        return cls(matrix=_frozen(arr), n=n)

    @property
    def dim(self) -> int:
        return 2**self.n

    def trace(self) -> complex:
        return complex(np.trace(self.matrix))

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(self.matrix)[0])

    def is_physical(self, tol: float | None = None) -> bool:
        """True when every eigenvalue is at least ``-tol``."""
        tol = PHYSICALITY_TOL if tol is None else tol
        return self.min_eigenvalue() >= -tol

    def is_normalized(
        self, tol: float | None = None, imag_tol: float | None = None
    ) -> bool:
        """True when the trace is 1 within ``tol`` and imaginary within ``imag_tol``."""
        tol = TRACE_TOL if tol is None else tol
        imag_tol = TRACE_IMAG_TOL if imag_tol is None else imag_tol
        tr = self.trace()
        return abs(tr.real - 1.0) <= tol and abs(tr.imag) <= imag_tol


@dataclass(frozen=True)
class Spectrum:
    """Eigenvalues in descending order paired with orthonormal eigenvectors.

    ``eigenvectors[:, i]`` is the unit eigenvector for ``eigenvalues[i]``.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    @property
    def n_positive(self) -> int:
        """Number of strictly positive eigenvalues."""
        return int(np.sum(self.eigenvalues > 0.0))

    @property
    def dim(self) -> int:
        return int(self.eigenvalues.shape[0])


def eigendecompose(
    state: DensityMatrix, *, hermiticity_tol: float | None = None
) -> Spectrum:
    """Eigendecompose a Hermitian matrix into a descending spectrum.

    Ties are broken stably so repeated eigenvalues keep the solver's original
    column order. Eigenvalues of analytically diagonal inputs are returned
    exactly.

    Raises:
        NonHermitian: if the input fails the Hermiticity check.
    """
    tol = HERMITICITY_TOL if hermiticity_tol is None else hermiticity_tol
    defect = _hermiticity_defect(state.matrix)
    if defect > tol:
        raise NonHermitian(
            f"max |A - A^dag| = {defect:.3e} exceeds tolerance {tol:.1e}"
        )
    values, vectors = np.linalg.eigh(state.matrix)
    order = np.argsort(-values, kind="stable")
    return Spectrum(
        eigenvalues=_frozen(values[order]),
        eigenvectors=_frozen(vectors[:, order]),
    )


def from_spectrum(spectrum: Spectrum) -> DensityMatrix:
    """Rebuild ``sum_i lambda_i |v_i><v_i|`` from an eigenvalue/vector pairing.

    The result is symmetrized, so it is Hermitian to machine precision and its
    trace equals the eigenvalue sum. Eigenvalues do not need to be sorted; the
    pairing with columns of ``eigenvectors`` is what matters.
    """
    v = spectrum.eigenvectors
    out = (v * spectrum.eigenvalues) @ v.conj().T
    out = (out + out.conj().T) / 2.0
    n = int(round(math.log2(out.shape[0])))
    return DensityMatrix(matrix=_frozen(out), n=n)


def pure_state(ket: np.ndarray) -> DensityMatrix:
    """Density matrix ``|psi><psi|`` of a normalized state vector."""
    psi = np.asarray(ket, dtype=complex).ravel()
    norm = np.linalg.norm(psi)
    if norm == 0.0:
        raise ValueError("state vector must be nonzero")
    psi = psi / norm
    return DensityMatrix.from_matrix(np.outer(psi, psi.conj()))


def maximally_mixed(n: int) -> DensityMatrix:
    """The maximally mixed state ``I / 2^n``."""
    d = 2**n
    return DensityMatrix.from_matrix(np.eye(d, dtype=complex) / d)


def purity(state: DensityMatrix) -> float:
    """``Tr(rho^2)`` as a real number.

    Lies in ``[1/2^n, 1]`` for physical states; defined for any Hermitian
    input.
    """
    m = state.matrix
    return float(np.real(np.einsum("ij,ji->", m, m)))


def _sqrt_psd(matrix: np.ndarray) -> np.ndarray:
    """Matrix square root with negative eigenvalues clipped to zero."""
    values, vectors = np.linalg.eigh(matrix)
    values = np.where(values < SQRT_CLIP, np.maximum(values, 0.0), values)
    return (vectors * np.sqrt(values)) @ vectors.conj().T


def fidelity(
    a: DensityMatrix, b: DensityMatrix, *, input_tol: float | None = None
) -> float:
    """Uhlmann fidelity ``Tr^2 sqrt( sqrt(a) b sqrt(a) )``.

    Square roots are taken through eigendecomposition with negative
    eigenvalues clipped to zero, which absorbs harmless rounding negativity.
    The result is clamped to ``[0, 1]``.

    Raises:
        NonPhysicalInput: if either input has an eigenvalue below
            ``-input_tol`` (default ``FIDELITY_INPUT_TOL``).
    """
    tol = FIDELITY_INPUT_TOL if input_tol is None else input_tol
    if a.matrix.shape != b.matrix.shape:
        raise ValueError("fidelity inputs must have matching dimensions")
    for name, state in (("first", a), ("second", b)):
        low = state.min_eigenvalue()
        if low < -tol:
            raise NonPhysicalInput(
                f"{name} input has eigenvalue {low:.3e} below -{tol:.1e}"
            )
    root_a = _sqrt_psd(a.matrix)
    inner = root_a @ b.matrix @ root_a
    inner = (inner + inner.conj().T) / 2.0
    mu = np.maximum(np.linalg.eigvalsh(inner), 0.0)
    value = float(np.sum(np.sqrt(mu)) ** 2)
    return min(max(value, 0.0), 1.0)


def infidelity(
    a: DensityMatrix, b: DensityMatrix, *, input_tol: float | None = None
) -> float:
    """``1 - fidelity(a, b)``, clamped to ``[0, 1]``."""
    return min(max(1.0 - fidelity(a, b, input_tol=input_tol), 0.0), 1.0)


def to_json_dict(state: DensityMatrix) -> dict:
    """Serialize to ``{"n": ..., "re": [[...]], "im": [[...]]}`` (row-major)."""
    return {
        "n": state.n,
        "re": state.matrix.real.tolist(),
        "im": state.matrix.imag.tolist(),
    }


def from_json_dict(obj: dict, *, hermiticity_tol: float | None = None) -> DensityMatrix:
    """Parse the wire format produced by ``to_json_dict``.

    Raises:
        ValueError: on missing keys or shape mismatches.
        NonHermitian: if the decoded matrix fails the Hermiticity check.
    """
    if not isinstance(obj, dict):
        raise ValueError("expected a JSON object for a density matrix")
    for key in ("n", "re", "im"):
        if key not in obj:
            raise ValueError(f"density-matrix object is missing key {key!r}")
    n = obj["n"]
    if not isinstance(n, int) or n < 1:
        raise ValueError(f"n: expected a positive integer, got {n!r}")
    d = 2**n
    re = np.asarray(obj["re"], dtype=float)
    im = np.asarray(obj["im"], dtype=float)
    if re.shape != (d, d) or im.shape != (d, d):
        raise ValueError(
            f"matrix parts must have shape ({d}, {d}); got re {re.shape}, im {im.shape}"
        )
    return DensityMatrix.from_matrix(re + 1j * im, hermiticity_tol=hermiticity_tol)


def save_density_matrix(state: DensityMatrix, path: str | Path) -> None:
    Path(path).write_text(json.dumps(to_json_dict(state)))


def load_density_matrix(path: str | Path) -> DensityMatrix:
    return from_json_dict(json.loads(Path(path).read_text()))
