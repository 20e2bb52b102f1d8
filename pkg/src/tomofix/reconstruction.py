"""Linear least-squares reconstruction of a density matrix from counts.

The state is expanded as ``rho = (1/2^n) sum_a s_a G_a`` over the Pauli-string
basis with ``s_0`` fixed to 1 by the trace constraint, and the remaining
coefficients solve the unweighted least-squares problem matching predicted to
observed probabilities. The output is Hermitian with unit trace by
construction; nothing forces its eigenvalues to be nonnegative.
"""

from __future__ import annotations

import functools

import numpy as np

from .density import DensityMatrix, _frozen
from .errors import SingularDesign
from .measurement import CountRecord, ProjectorSet, pauli_basis

# Single-qubit table <b| sigma |b> for cube outcome kets b (rows X+, X-, Y+,
# Y-, Z+, Z-) against Paulis (columns I, X, Y, Z).
_CUBE_TABLE = np.array(
    [
        [1.0, 1.0, 0.0, 0.0],
        [1.0, -1.0, 0.0, 0.0],
        [1.0, 0.0, 1.0, 0.0],
        [1.0, 0.0, -1.0, 0.0],
        [1.0, 0.0, 0.0, 1.0],
        [1.0, 0.0, 0.0, -1.0],
    ]
)

_PAULI_STACK_1Q = pauli_basis(1)


def pauli_coeffs_to_matrix(coeffs: np.ndarray, n: int) -> np.ndarray:
    """Evaluate ``(1/2^n) sum_a s_a G_a`` without materializing the basis.

    Contracts one qubit axis at a time, which costs ``O(n 4^n)`` instead of
    the ``O(16^n)`` dense sum.
    """
    t = np.asarray(coeffs, dtype=complex).reshape((4,) * n)
    for _ in range(n):
        t = np.tensordot(t, _PAULI_STACK_1Q, axes=([0], [0]))
    # Axes are now (r_0, c_0, r_1, c_1, ...); split rows from columns.
    perm = list(range(0, 2 * n, 2)) + list(range(1, 2 * n, 2))
    return t.transpose(perm).reshape(2**n, 2**n) / 2**n


def _cube_pauli_coeffs(probabilities: np.ndarray, n: int) -> np.ndarray:
    """Closed-form least-squares Pauli coefficients for the full cube design.

    The cube design matrix is a tensor power of the single-qubit table, so its
    normal matrix is diagonal and the solution reduces to per-qubit table
    contractions.
    """
    # Reorder (settings..., outcomes...) axes into per-qubit (axis, outcome)
    # digits so the tensor factorizes qubit by qubit.
    t = probabilities.reshape((3,) * n + (2,) * n)
    t = t.transpose([ax for q in range(n) for ax in (q, n + q)]).reshape((6,) * n)
    for _ in range(n):
        t = np.tensordot(t, _CUBE_TABLE, axes=([0], [0]))
    y = t.reshape(-1)
    weights = functools.reduce(np.kron, [np.array([6.0, 2.0, 2.0, 2.0])] * n)
    return 2**n * y / weights


@functools.lru_cache(maxsize=8)
def _general_design(projectors: ProjectorSet) -> tuple[np.ndarray, int]:
    """Pseudoinverse of the free-coefficient design matrix, cached per set.

    The cache key is the ProjectorSet instance itself (identity hash), so the
    handle is immutable and shareable across threads.
    """
    n = projectors.n
    basis = pauli_basis(n)
    v = projectors.vectors
    left = np.einsum("xab,jb->xja", basis, v)
    design = np.real(np.einsum("ja,xja->jx", v.conj(), left))
    free = design[:, 1:]
    rank = int(np.linalg.matrix_rank(free))
    if rank < 4**n - 1:
        raise SingularDesign(
            f"design rank {rank} < {4**n - 1}; the projector set does not "
            "determine the state"
        )
    return _frozen(np.linalg.pinv(free)), rank


def linear_reconstruct(record: CountRecord) -> DensityMatrix:
    """Least-squares estimate of the state behind a count record.

    Complete cube designs use the closed-form path; arbitrary projector sets
    fall back to a cached-pseudoinverse solve. Exact probabilities of any
    trace-1 Hermitian input are recovered exactly for informationally complete
    designs.

    Raises:
        SingularDesign: if the design matrix is rank-deficient.
    """
    projectors = record.projectors
    n = projectors.n
    m = np.asarray(record.probabilities, dtype=float)
    if projectors.kind == "cube":
        coeffs = _cube_pauli_coeffs(m, n)
    else:
        pinv, _ = _general_design(projectors)
        rhs = 2**n * m - 1.0
        coeffs = np.concatenate(([1.0], pinv @ rhs))
    coeffs[0] = 1.0
    matrix = pauli_coeffs_to_matrix(coeffs, n)
    matrix = (matrix + matrix.conj().T) / 2.0
    return DensityMatrix.from_matrix(matrix)
