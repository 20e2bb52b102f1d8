"""Physicality correction of reconstructed density matrices.

Four algorithms repair a trace-1 Hermitian matrix whose spectrum dips below
zero:

* ``sgs_correct``: nullify the negative eigenvalues and spread their total
  uniformly over the strictly positive ones, repeating if the spreading
  creates new negatives.
* ``eo_correct``: nullify the negatives but spread their total non-uniformly,
  weighting eigenvalue ``i`` of the positive block by an odd power-series
  curve evaluated at ``(i - 1) / (n_+ - 0.5)``; the largest eigenvalue is
  never touched.
* ``mle_correct``: maximize a Gaussian log-likelihood over the Cholesky-style
  parameterization ``rho = T^dag T / Tr(T^dag T)`` with a derivative-free
  simplex search.
* ``imle_correct``: the fixed-point iteration ``rho <- N[R(rho) rho R(rho)]``
  with ``R(rho) = sum_j (m_j / <m_j|rho|m_j>) |m_j><m_j|``.

SGS and EO act on a precomputed spectrum and leave the eigenvectors alone;
MLE and iMLE consume the measured probabilities directly.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np
from scipy.optimize import minimize

from .density import DensityMatrix, Spectrum, from_spectrum, maximally_mixed
from .errors import DegenerateInput, DomainError, NoConvergence
from .measurement import CountRecord, born_probabilities

LOGLIKE_FLOOR = 1e-12
TRACE_PRECONDITION_TOL = 1e-9
EO_MAX_ROUNDS = 1000
MLE_COST_TOL = 1e-10
MLE_STEP_TOL = 1e-10
MLE_RESTARTS = 3
IMLE_STEP_TOL = 1e-10
IMLE_MAX_ITERS = 10_000

# Default weighting-curve coefficients c_1..c_6 of the odd series
# F(x) = sum_k c_k (x - 1)^(2k - 1), shipped with the package and rederivable
# through the derivation module.
DEFAULT_CURVE_COEFFS = (1.21, 21.03, -119.80, 339.23, -418.31, 188.26)
_DEFAULT_CURVE_RESOURCE = "default_curve.json"


@dataclass(frozen=True)
class FitCurve:
    """Odd power series ``F(x) = sum_k c_k (x - 1)^(2k - 1)`` on ``[0, 2]``.

    Antisymmetric about ``x = 1`` with ``F(1) = 0`` by construction.
    """

    coefficients: tuple[float, ...]

    def __post_init__(self) -> None:
        if not self.coefficients:
            raise ValueError("a fit curve needs at least one coefficient")


def eval_fit(curve: FitCurve, x) -> np.ndarray | float:
    """Evaluate the curve at scalar or array ``x`` inside ``[0, 2]``.

    Uses a Horner scheme in ``(x - 1)^2``, so ``F(1) = 0`` exactly and the odd
    symmetry ``F(1 + t) = -F(1 - t)`` holds to the last bit.

    Raises:
        DomainError: if any point lies outside ``[0, 2]``.
    """
    arr = np.asarray(x, dtype=float)
    if np.any(arr < 0.0) or np.any(arr > 2.0):
        raise DomainError("fit curve domain is [0, 2]; got values outside it")
    u = arr - 1.0
    u2 = u * u
    acc = np.zeros_like(arr)
    for c in reversed(curve.coefficients):
        acc = acc * u2 + c
    out = u * acc
    if np.isscalar(x) or arr.ndim == 0:
        return float(out)
    return out


def default_fit_curve() -> FitCurve:
    """The weighting curve shipped with the package."""
    return FitCurve(coefficients=DEFAULT_CURVE_COEFFS)


def fit_curve_to_json_dict(curve: FitCurve) -> dict:
    return {"c": list(curve.coefficients)}


def fit_curve_from_json_dict(obj: dict) -> FitCurve:
    if not isinstance(obj, dict) or "c" not in obj:
        raise ValueError('fit-curve JSON must be an object with key "c"')
    coeffs = obj["c"]
    if not isinstance(coeffs, list) or not all(
        isinstance(c, (int, float)) and not isinstance(c, bool) for c in coeffs
    ):
        raise ValueError('"c" must be an array of numbers')
    return FitCurve(coefficients=tuple(float(c) for c in coeffs))


def save_fit_curve(curve: FitCurve, path: str | Path) -> None:
    Path(path).write_text(json.dumps(fit_curve_to_json_dict(curve)))


def load_fit_curve(path: str | Path) -> FitCurve:
    return fit_curve_from_json_dict(json.loads(Path(path).read_text()))


def _shipped_curve_file() -> FitCurve:
    """Parse the packaged curve file (kept in sync with DEFAULT_CURVE_COEFFS)."""
    text = resources.files("tomofix.data").joinpath(_DEFAULT_CURVE_RESOURCE).read_text()
    return fit_curve_from_json_dict(json.loads(text))


@dataclass(frozen=True)
class CorrectionReport:
    """Outcome of one correction run.

    ``cost_before``/``cost_after`` are the algorithm's own objective: total
    negative eigenvalue weight for the spectrum algorithms (SGS, EO), the
    Gaussian log-likelihood cost for MLE and iMLE. ``cost_history`` is filled
    only when iteration tracking was requested.
    """

    state: DensityMatrix
    iterations: int
    cost_before: float
    cost_after: float
    wall_time: float
    converged: bool = True
    cost_history: tuple[float, ...] | None = None


def loglike_cost(
    candidate: DensityMatrix, record: CountRecord, *, floor: float = LOGLIKE_FLOOR
) -> float:
    """Gaussian log-likelihood cost ``sum_j (p_j - m_j)^2 / (2 p_j)``.

    ``p_j`` are the candidate's predicted probabilities and ``m_j`` the
    observed ones; predictions are floored at ``floor`` to keep the quotient
    finite. Zero for a candidate reproducing the data exactly.
    """
    p = born_probabilities(candidate, record.projectors)
    m = record.probabilities
    return float(np.sum((p - m) ** 2 / (2.0 * np.maximum(p, floor))))


def quadratic_cost(candidate: DensityMatrix, record: CountRecord) -> float:
    """Plain residual sum ``sum_j (p_j - m_j)^2``."""
    p = born_probabilities(candidate, record.projectors)
    return float(np.sum((p - record.probabilities) ** 2))


def negativity(values: np.ndarray) -> float:
    """Total weight of the negative part of an eigenvalue vector."""
    return float(-np.sum(np.minimum(values, 0.0)))


def _check_trace(values: np.ndarray, tol: float) -> None:
    total = float(np.sum(values))
    if abs(total - 1.0) > tol:
        raise ValueError(f"eigenvalues sum to {total:.12f}, expected 1 within {tol:.1e}")


def sgs_correct_values(
    values: np.ndarray, *, max_rounds: int | None = None
) -> tuple[np.ndarray, int]:
    """Eigenvalue core of SGS; returns the corrected values and round count.

    Each round nullifies every negative entry and adds their (negative) total
    divided by the number of strictly positive entries to each positive entry.
    Terminates in at most ``len(values)`` rounds.

    Raises:
        DegenerateInput: if no entry is strictly positive.
    """
    vals = np.array(values, dtype=float)
    limit = len(vals) + 1 if max_rounds is None else max_rounds
    rounds = 0
    if 0 < vals.size <= _SCALAR_DIM_MAX and vals.ndim == 1:
        lst = vals.tolist()
        while min(lst) < 0.0:
            if rounds >= limit:
                raise NoConvergence(f"negative eigenvalues remain after {rounds} rounds")
            removed = 0.0
            n_pos = 0
            for v in lst:
                if v < 0.0:
                    removed += v
                elif v > 0.0:
                    n_pos += 1
            if n_pos == 0:
                raise DegenerateInput("no positive eigenvalues to absorb the correction")
            share = removed / n_pos
            for i, v in enumerate(lst):
                if v < 0.0:
                    lst[i] = 0.0
                elif v > 0.0:
                    lst[i] = v + share
            rounds += 1
        vals[:] = lst
        return vals, rounds
    while np.any(vals < 0.0):
        if rounds >= limit:
            raise NoConvergence(f"negative eigenvalues remain after {rounds} rounds")
        neg = vals < 0.0
        pos = vals > 0.0
        n_pos = int(np.sum(pos))
        if n_pos == 0:
            raise DegenerateInput("no positive eigenvalues to absorb the correction")
        removed = float(np.sum(vals[neg]))
        vals[neg] = 0.0
        vals[pos] += removed / n_pos
        rounds += 1
    return vals, rounds


def sgs_correct(
    spectrum: Spectrum, *, trace_tol: float = TRACE_PRECONDITION_TOL
) -> CorrectionReport:
    """Uniform eigenvalue spreading in the reconstruction's own eigenbasis.

    Preserves the eigenvalue ordering and the trace; the output shares the
    input's eigenvectors.
    """
    _check_trace(spectrum.eigenvalues, trace_tol)
    start = time.perf_counter()
    values, rounds = sgs_correct_values(spectrum.eigenvalues)
    state = from_spectrum(Spectrum(values, spectrum.eigenvectors))
    elapsed = time.perf_counter() - start
    return CorrectionReport(
        state=state,
        iterations=rounds,
        cost_before=negativity(spectrum.eigenvalues),
        cost_after=negativity(values),
        wall_time=elapsed,
    )


def _eval_fit_ranks(coefficients: tuple[float, ...], x: np.ndarray) -> np.ndarray:
    """Horner evaluation of the odd series without domain checks.

    Internal fast path for rank arguments, which lie in ``(0, 1)`` by
    construction; the public ``eval_fit`` keeps the domain contract.
    """
    u = x - 1.0
    u2 = u * u
    acc = np.full_like(u, coefficients[-1])
    for c in coefficients[-2::-1]:
        acc *= u2
        acc += c
    acc *= u
    return acc


_SCALAR_DIM_MAX = 32


def _eo_round_scalar(lst: list[float], coefficients: tuple[float, ...]) -> tuple[float, float]:
    """One weighted-redistribution round on a plain list, in place.

    Scalar twin of ``_eo_round`` for small spectra, where interpreter-level
    float arithmetic beats array dispatch. Kept in arithmetic lockstep with
    the array path so both produce the same values up to rounding.
    """
    removed = 0.0
    has_neg = False
    pos: list[int] = []
    for i, v in enumerate(lst):
        if v < 0.0:
            removed += v
            lst[i] = 0.0
            has_neg = True
        elif v > 0.0:
            pos.append(i)
    if not has_neg:
        return 0.0, 0.0
    k = len(pos)
    if k == 0:
        raise DegenerateInput("no positive eigenvalues to absorb the correction")
    if k == 1:
        delta = 1.0 - lst[pos[0]]
        for i in range(len(lst)):
            lst[i] = 0.0
        lst[pos[0]] = 1.0
        return removed, delta
    descending = True
    prev = lst[pos[0]]
    for i in pos[1:]:
        v = lst[i]
        if v > prev:
            descending = False
            break
        prev = v
    ranked = pos if descending else sorted(pos, key=lambda j: -lst[j])
    half = k - 0.5
    rev = coefficients[::-1]
    weights: list[float] = []
    norm = 0.0
    for r in range(1, k):
        u = r / half - 1.0
        u2 = u * u
        acc = rev[0]
        for c in rev[1:]:
            acc = acc * u2 + c
        w = acc * u
        weights.append(w)
        norm += w
    if norm == 0.0:
        raise DegenerateInput("curve weights sum to zero; cannot normalize")
    scale = removed / norm
    applied = 0.0
    for i, w in zip(ranked[1:], weights):
        c = scale * w
        lst[i] += c
        applied += c
    return removed, applied


def _eo_round(vals: np.ndarray, curve: FitCurve) -> tuple[float, float]:
    """Apply one weighted-redistribution round to ``vals`` in place.

    Returns ``(removed_total, correction_sum)``; both zero when ``vals`` had
    no negative entry.
    """
    if 0 < vals.size <= _SCALAR_DIM_MAX:
        lst = vals.tolist()
        removed, applied = _eo_round_scalar(lst, curve.coefficients)
        if removed != 0.0:
            vals[:] = lst
        return removed, applied
    neg = vals < 0.0
    if not np.any(neg):
        return 0.0, 0.0
    pos_idx = np.nonzero(vals > 0.0)[0]
    k = len(pos_idx)
    if k == 0:
        raise DegenerateInput("no positive eigenvalues to absorb the correction")
    removed = float(np.sum(vals[neg]))
    vals[neg] = 0.0
    if k == 1:
        delta = 1.0 - float(vals[pos_idx[0]])
        vals[:] = 0.0
        vals[pos_idx[0]] = 1.0
        return removed, delta
    pv = vals[pos_idx]
    if np.all(pv[:-1] >= pv[1:]):
        # Spectra arrive descending, so the rank order is usually free.
        ranked = pos_idx
    else:
        ranked = pos_idx[np.argsort(-pv, kind="stable")]
    x = np.arange(1, k) / (k - 0.5)
    weights = _eval_fit_ranks(curve.coefficients, x)
    norm = float(np.sum(weights))
    if norm == 0.0:
        raise DegenerateInput("curve weights sum to zero; cannot normalize")
    corrections = (removed / norm) * weights
    vals[ranked[1:]] += corrections
    return removed, float(np.sum(corrections))


def eo_step(values: np.ndarray, curve: FitCurve) -> tuple[np.ndarray, float, float]:
    """One weighted-redistribution round.

    Nullifies every negative entry and corrects the strictly positive entries,
    ranked in descending order, by ``(a / N_f) F((r - 1) / (K - 0.5))`` for
    ranks ``r = 2..K``; the top-ranked entry is untouched. ``a`` is the signed
    sum of the removed negatives and ``N_f`` normalizes the curve weights so
    the corrections sum to ``a`` exactly, preserving the trace.

    Returns:
        ``(new_values, removed_total, correction_sum)``; the last two are
        equal up to rounding.

    Raises:
        DegenerateInput: if no entry is strictly positive, or the curve
            weights sum to zero.
    """
    vals = np.array(values, dtype=float)
    removed, applied = _eo_round(vals, curve)
    return vals, removed, applied


def eo_correct_values(
    values: np.ndarray, curve: FitCurve, *, max_rounds: int = EO_MAX_ROUNDS
) -> tuple[np.ndarray, int]:
    """Iterate ``eo_step`` until no negative entries remain.

    Raises:
        NoConvergence: if negatives persist after ``max_rounds`` rounds.
    """
    vals = np.array(values, dtype=float)
    rounds = 0
    if 0 < vals.size <= _SCALAR_DIM_MAX and vals.ndim == 1:
        lst = vals.tolist()
        coeffs = curve.coefficients
        while min(lst) < 0.0:
            if rounds >= max_rounds:
                raise NoConvergence(f"negative eigenvalues remain after {rounds} rounds")
            _eo_round_scalar(lst, coeffs)
            rounds += 1
        vals[:] = lst
        return vals, rounds
    while np.any(vals < 0.0):
        if rounds >= max_rounds:
            raise NoConvergence(f"negative eigenvalues remain after {rounds} rounds")
        _eo_round(vals, curve)
        rounds += 1
    return vals, rounds


def eo_correct(
    spectrum: Spectrum,
    curve: FitCurve | None = None,
    *,
    max_rounds: int = EO_MAX_ROUNDS,
    trace_tol: float = TRACE_PRECONDITION_TOL,
) -> CorrectionReport:
    """Weighted eigenvalue redistribution in the reconstruction's eigenbasis.

    The largest eigenvalue stays fixed and the removed negative weight is
    drawn from the remaining positive eigenvalues according to the weighting
    curve (the shipped default unless one is supplied). Runs in the same
    eigendecompose-modify-rebuild frame as SGS, so the two share their cost
    profile up to the curve evaluation.
    """
    _check_trace(spectrum.eigenvalues, trace_tol)
    fit = default_fit_curve() if curve is None else curve
    start = time.perf_counter()
    values, rounds = eo_correct_values(spectrum.eigenvalues, fit, max_rounds=max_rounds)
    state = from_spectrum(Spectrum(values, spectrum.eigenvectors))
    elapsed = time.perf_counter() - start
    return CorrectionReport(
        state=state,
        iterations=rounds,
        cost_before=negativity(spectrum.eigenvalues),
        cost_after=negativity(values),
        wall_time=elapsed,
    )


def _tri_indices(d: int) -> tuple[np.ndarray, np.ndarray]:
    return np.tril_indices(d, -1)


def _params_from_state(state: DensityMatrix, *, shift: float = 1e-12) -> np.ndarray:
    """Parameter vector of the lower-triangular factor ``T`` with ``T^dag T = rho``.

    A small diagonal shift keeps the factorization defined for rank-deficient
    inputs. The lower factor is obtained by conjugating the Cholesky factor of
    the index-reversed matrix with the exchange permutation.
    """
    d = state.matrix.shape[0]
    low = float(np.linalg.eigvalsh(state.matrix)[0])
    bump = max(0.0, -low) + shift
    mat = state.matrix + bump * np.eye(d)
    mat = mat / np.trace(mat).real
    flipped = mat[::-1, ::-1]
    upper = np.linalg.cholesky(flipped).conj().T
    t = upper[::-1, ::-1]
    rows, cols = _tri_indices(d)
    return np.concatenate(
        [np.real(np.diag(t)), np.real(t[rows, cols]), np.imag(t[rows, cols])]
    )


def _factor_from_params(params: np.ndarray, d: int) -> np.ndarray:
    k = d * (d - 1) // 2
    t = np.zeros((d, d), dtype=complex)
    t[np.diag_indices(d)] = params[:d]
    rows, cols = _tri_indices(d)
    t[rows, cols] = params[d : d + k] + 1j * params[d + k :]
    return t


def _state_from_params(params: np.ndarray, d: int, n: int) -> DensityMatrix:
    t = _factor_from_params(params, d)
    rho = t.conj().T @ t
    rho = rho / np.trace(rho).real
    rho = (rho + rho.conj().T) / 2.0
    return DensityMatrix(matrix=rho, n=n)


def mle_correct(
    record: CountRecord,
    init: DensityMatrix,
    *,
    cost_tol: float = MLE_COST_TOL,
    step_tol: float = MLE_STEP_TOL,
    restarts: int = MLE_RESTARTS,
    max_evals: int | None = None,
) -> CorrectionReport:
    """Direct likelihood maximization over ``rho = T^dag T / Tr(T^dag T)``.

    Minimizes ``loglike_cost`` with Nelder-Mead simplex searches restarted
    from the best point until the improvement drops below ``cost_tol``. The
    parameterization makes every iterate physical. The returned state never
    scores worse than the initial guess; if the evaluation budget runs out the
    best point so far is returned with ``converged=False``.
    """
    projectors = record.projectors
    d = 2**projectors.n
    v_t = projectors.vectors.T.copy()
    m = record.probabilities

    def cost_of(params: np.ndarray) -> float:
        t = _factor_from_params(params, d)
        amps = t @ v_t
        norm = float(np.sum(np.abs(t) ** 2))
        p = np.sum(np.abs(amps) ** 2, axis=0) / norm
        return float(np.sum((p - m) ** 2 / (2.0 * np.maximum(p, LOGLIKE_FLOOR))))

    start = time.perf_counter()
    x = _params_from_state(init)
    best_cost = cost_of(x)
    cost_before = best_cost
    total_evals = 1
    converged = best_cost <= cost_tol
    budget = max_evals if max_evals is not None else 200 * d * d
    if not converged:
        for _ in range(restarts):
            result = minimize(
                cost_of,
                x,
                method="Nelder-Mead",
                options={
                    "xatol": step_tol,
                    "fatol": cost_tol,
                    "maxfev": budget,
                    "adaptive": d >= 8,
                },
            )
            total_evals += int(result.nfev)
            improvement = best_cost - float(result.fun)
            if result.fun < best_cost:
                best_cost = float(result.fun)
                x = result.x
            if improvement <= cost_tol:
                converged = True
                break
        else:
            converged = False
    state = _state_from_params(x, d, projectors.n)
    elapsed = time.perf_counter() - start
    return CorrectionReport(
        state=state,
        iterations=total_evals,
        cost_before=cost_before,
        cost_after=min(best_cost, cost_before),
        wall_time=elapsed,
        converged=converged,
    )


def imle_correct(
    record: CountRecord,
    init: DensityMatrix | None = None,
    *,
    step_tol: float = IMLE_STEP_TOL,
    max_iters: int = IMLE_MAX_ITERS,
    track_costs: bool = False,
) -> CorrectionReport:
    """Iterative ``R rho R`` likelihood fixed point.

    Starting from the maximally mixed state (or ``init``), repeatedly applies
    ``rho <- N[R(rho) rho R(rho)]`` with
    ``R(rho) = sum_j (m_j / <m_j|rho|m_j>) |m_j><m_j|`` until the largest
    entrywise change drops below ``step_tol``. Data reproducing the current
    iterate's probabilities exactly is a fixed point. If the iteration cap is
    hit the last iterate is returned with ``converged=False``.
    """
    projectors = record.projectors
    d = 2**projectors.n
    v = projectors.vectors
    vc = v.conj()
    m = record.probabilities
    rho = (init.matrix if init is not None else np.eye(d, dtype=complex) / d).copy()

    start = time.perf_counter()
    history: list[float] = []
    if track_costs:
        history.append(loglike_cost(DensityMatrix(matrix=rho, n=projectors.n), record))
    converged = False
    iterations = 0
    for iterations in range(1, max_iters + 1):
        p = np.real(np.einsum("jb,jb->j", vc @ rho, v))
        ratio = m / np.maximum(p, LOGLIKE_FLOOR)
        r = (v * ratio[:, None]).T @ vc
        new = r @ rho @ r
        new = new / np.trace(new).real
        new = (new + new.conj().T) / 2.0
        delta = float(np.max(np.abs(new - rho)))
        rho = new
        if track_costs:
            history.append(
                loglike_cost(DensityMatrix(matrix=rho, n=projectors.n), record)
            )
        if delta < step_tol:
            converged = True
            break
    elapsed = time.perf_counter() - start
    state = DensityMatrix(matrix=rho, n=projectors.n)
    cost_before = (
        history[0]
        if track_costs
        else loglike_cost(
            DensityMatrix(
                matrix=(init.matrix if init is not None else np.eye(d) / d),
                n=projectors.n,
            ),
            record,
        )
    )
    return CorrectionReport(
        state=state,
        iterations=iterations,
        cost_before=cost_before,
        cost_after=loglike_cost(state, record),
        wall_time=elapsed,
        converged=converged,
        cost_history=tuple(history) if track_costs else None,
    )
