"""Greedy sparse recovery kernels: least squares on a fixed support, OMP
with optional warm starting, and the centralized SOMP baseline.

Support estimates are plain tuples of atom indices; every result carries
its support in canonical ascending order with coefficients aligned to it.
Atom selection breaks ties by lowest index using exact float comparison,
so results are reproducible across runs and platforms.
"""

from dataclasses import dataclass, replace
from typing import Sequence, Tuple

import numpy as np

# A support estimate is an ordered, duplicate-free tuple of atom indices.
SupportEstimate = Tuple[int, ...]

EARLY_STOP_RTOL = 1e-12
SPAN_TOL = 1e-10


@dataclass(frozen=True)
class RecoveryResult:
    """Sparse recovery output for one user.

    ``support`` is sorted ascending and ``coefficients`` aligns with it.
    ``rank_deficient`` marks a degenerate least-squares system solved in the
    minimum-norm sense; ``padded`` marks filler indices appended after the
    residual vanished before the requested sparsity was reached.
    """

    support: SupportEstimate
    coefficients: np.ndarray
    residual_norm: float
    rank_deficient: bool = False
    padded: bool = False


def _check_support(support, num_atoms: int) -> list:
    idx = [int(i) for i in support]
    if len(set(idx)) != len(idx):
        raise ValueError("support contains duplicate indices")
    if any(i < 0 or i >= num_atoms for i in idx):
        raise ValueError("support index out of range")
    return idx


def least_squares_on_support(A: np.ndarray, y: np.ndarray,
                             support) -> RecoveryResult:
    """Least-squares fit of y on the columns of A selected by ``support``.

    Solved through an orthogonal factorization (SVD); a rank-deficient
    column subset yields the minimum-norm solution and sets the
    ``rank_deficient`` flag. The returned residual is orthogonal to the
    selected columns up to numerical precision.
    """
    idx = sorted(_check_support(support, A.shape[1]))
    if not idx:
        return RecoveryResult(support=(), coefficients=np.zeros(0, dtype=A.dtype),
                              residual_norm=float(np.linalg.norm(y)))
    cols = A[:, idx]
    coeffs, _, rank, _ = np.linalg.lstsq(cols, y, rcond=None)
    residual = y - cols @ coeffs
    return RecoveryResult(
        support=tuple(idx),
        coefficients=coeffs,
        residual_norm=float(np.linalg.norm(residual)),
        rank_deficient=rank < len(idx),
    )


def _span_basis(cols: np.ndarray) -> np.ndarray:
    """Orthonormal basis of the column span, zero-padded to full width."""
    u, s, _ = np.linalg.svd(cols, full_matrices=False)
    rank = int(np.sum(s > s[0] * 1e-12)) if s.size else 0
    basis = np.zeros_like(cols)
    basis[:, :rank] = u[:, :rank]
    return basis


def _greedy_select(A, Ah, Y, sparsity, initial_supports, require_full_support):
    """Batched greedy atom selection shared by OMP and the protocol drivers.

    All users share the sensing matrix ``A`` (columns of ``Y``) and start
    from initial supports of equal cardinality. Residuals are maintained
    with an incrementally built orthonormal basis (modified Gram-Schmidt
    with reorthogonalization); the basis spans exactly the selected columns,
    so each update realizes the least-squares residual.

    Returns (supports sorted ascending, padded flags, degenerate flags).
    """
    num_slots, num_atoms = A.shape
    num_users = Y.shape[1]
    init_len = len(initial_supports[0])

    selection = [list(s) for s in initial_supports]
    used = np.zeros((num_atoms, num_users), dtype=bool)
    for k, s in enumerate(selection):
        used[s, k] = True

    basis = np.zeros((num_users, num_slots, sparsity), dtype=complex)
    basis_c = np.zeros_like(basis)
    degenerate = np.zeros(num_users, dtype=bool)
    resid = Y.astype(complex, copy=True)
    if init_len:
        cols = np.stack([A[:, s] for s in selection])  # (K, T, init_len)
        q, r = np.linalg.qr(cols)
        diag = np.abs(np.diagonal(r, axis1=-2, axis2=-1))
        basis[:, :, :init_len] = q
        for k in np.nonzero(diag.min(axis=1) <= SPAN_TOL)[0]:
            degenerate[k] = True
            basis[k, :, :init_len] = _span_basis(cols[k])
        np.conjugate(basis[:, :, :init_len], out=basis_c[:, :, :init_len])
        sub = basis[:, :, :init_len]
        d = np.einsum("ktj,tk->kj", basis_c[:, :, :init_len], Y)
        resid = Y - np.einsum("ktj,kj->tk", sub, d)

    y_norm = np.sqrt(np.einsum("tk,tk->k", Y.conj(), Y).real)
    resid_norm = np.sqrt(np.einsum("tk,tk->k", resid.conj(), resid).real)
    active = resid_norm >= EARLY_STOP_RTOL * y_norm

    for j in range(init_len, sparsity):
        if not active.any():
            break
        mag = np.abs(Ah @ resid)
        mag[used] = -1.0
        picks = np.argmax(mag, axis=0)  # first maximum = lowest index
        for k in range(num_users):
            if active[k]:
                selection[k].append(int(picks[k]))
                used[picks[k], k] = True
        atoms = A[:, picks]  # (T, K); inactive columns are masked below
        if j:
            sub = basis[:, :, :j]
            subc = basis_c[:, :, :j]
            d = np.einsum("ktj,tk->kj", subc, atoms)
            w = atoms - np.einsum("ktj,kj->tk", sub, d)
            d = np.einsum("ktj,tk->kj", subc, w)
            w = w - np.einsum("ktj,kj->tk", sub, d)
        else:
            w = atoms.copy()
        norms = np.sqrt(np.einsum("tk,tk->k", w.conj(), w).real)
        ok = active & (norms > SPAN_TOL)
        degenerate |= active & ~ok
        qcol = np.zeros((num_slots, num_users), dtype=complex)
        qcol[:, ok] = w[:, ok] / norms[ok]
        basis[:, :, j] = qcol.T
        np.conjugate(qcol.T, out=basis_c[:, :, j])
        proj = np.einsum("tk,tk->k", basis_c[:, :, j].T, resid)
        resid = resid - qcol * proj[None, :]
        resid_norm = np.sqrt(np.einsum("tk,tk->k", resid.conj(), resid).real)
        active &= resid_norm >= EARLY_STOP_RTOL * y_norm

    padded = np.zeros(num_users, dtype=bool)
    if require_full_support:
        for k in range(num_users):
            missing = sparsity - len(selection[k])
            if missing > 0:
                fill = np.nonzero(~used[:, k])[0][:missing]
                selection[k].extend(int(i) for i in fill)
                padded[k] = True
    supports = [tuple(sorted(s)) for s in selection]
    return supports, padded, degenerate


def _fit_batch(A, Y, supports):
    """Least-squares fits on per-user supports of equal cardinality.

    One stacked QR factorization covers all users; rank-deficient subsets
    (detected from the R diagonal) fall back to the minimum-norm SVD solve
    of :func:`least_squares_on_support`. Returns one RecoveryResult per
    column of ``Y``; supports must already be sorted ascending.
    """
    num_users = Y.shape[1]
    width = len(supports[0])
    if width == 0:
        return [
            RecoveryResult(support=(), coefficients=np.zeros(0, dtype=A.dtype),
                           residual_norm=float(np.linalg.norm(Y[:, k])))
            for k in range(num_users)
        ]
    cols = np.stack([A[:, list(s)] for s in supports])  # (K, T, width)
    q, r = np.linalg.qr(cols)
    diag = np.abs(np.diagonal(r, axis1=-2, axis2=-1))
    healthy = diag.min(axis=1) > SPAN_TOL * diag.max(axis=1)
    rhs = np.einsum("ktj,tk->kj", q.conj(), Y)
    coeffs = np.linalg.solve(r, rhs[:, :, None])[:, :, 0]
    resid = Y - np.einsum("ktj,kj->tk", cols, coeffs)
    norms = np.linalg.norm(resid, axis=0)
    results = []
    for k in range(num_users):
        if healthy[k]:
            results.append(RecoveryResult(
                support=tuple(supports[k]),
                coefficients=coeffs[k],
                residual_norm=float(norms[k]),
            ))
        else:
            results.append(least_squares_on_support(A, Y[:, k], supports[k]))
    return results


def _validate_omp_args(A, sparsity, initial_supports):
    num_slots, num_atoms = A.shape
    if sparsity < 0 or sparsity > min(num_slots, num_atoms):
        raise ValueError(
            f"sparsity must lie in [0, min(T={num_slots}, atoms={num_atoms})]")
    for init in initial_supports:
        idx = _check_support(init, num_atoms)
        if len(idx) > sparsity:
            raise ValueError("initial support larger than the target sparsity")


def omp(A: np.ndarray, y: np.ndarray, sparsity: int,
        initial_support: Sequence[int] = (),
        require_full_support: bool = False) -> RecoveryResult:
    """Orthogonal matching pursuit up to ``sparsity`` atoms.

    Parameters
    ----------
    A : ndarray, shape (T, num_atoms)
        Sensing matrix (pilots times dictionary).
    y : ndarray, shape (T,)
        Measurement vector.
    sparsity : int
        Target support cardinality, at most min(T, num_atoms).
    initial_support : sequence of int, optional
        Warm-start indices; the residual starts from the least-squares fit
        on these columns and greedy selection continues from there.
    require_full_support : bool, optional
        When the residual vanishes early (below 1e-12 * ||y||), fill the
        remaining slots with the lowest-index unused atoms and flag the
        result as padded instead of returning a short support.

    Returns
    -------
    RecoveryResult
        Sorted support, least-squares coefficients on it, residual norm.
    """
    _validate_omp_args(A, sparsity, [initial_support])
    Ah = np.ascontiguousarray(A.conj().T)
    Y = np.asarray(y)[:, None]
    supports, padded, degenerate = _greedy_select(
        A, Ah, Y, sparsity, [tuple(initial_support)], require_full_support)
    result = _fit_batch(A, Y, supports)[0]
    return replace(result, padded=bool(padded[0]),
                   rank_deficient=result.rank_deficient or bool(degenerate[0]))


def somp(A: np.ndarray, ys: Sequence[np.ndarray], sparsity: int,
         require_full_support: bool = False):
    """Simultaneous OMP: one shared support for all measurement vectors.

    Each iteration selects the atom maximizing the sum over users of
    correlation magnitudes with the per-user least-squares residuals.

    Returns
    -------
    (support, results) : (tuple of int, list of RecoveryResult)
        The shared sorted support and per-user least-squares fits on it.
    """
    Y = np.column_stack(ys)
    _validate_omp_args(A, sparsity, [()])
    Ah = np.ascontiguousarray(A.conj().T)
    num_slots, num_atoms = A.shape
    selection = []
    used = np.zeros(num_atoms, dtype=bool)
    basis = np.zeros((num_slots, sparsity), dtype=complex)
    resid = Y.astype(complex, copy=True)
    y_norm = float(np.linalg.norm(Y))
    padded = False
    for j in range(sparsity):
        if float(np.linalg.norm(resid)) < EARLY_STOP_RTOL * y_norm:
            break
        score = np.abs(Ah @ resid).sum(axis=1)
        score[used] = -1.0
        pick = int(np.argmax(score))
        selection.append(pick)
        used[pick] = True
        sub = basis[:, :j]
        w = A[:, pick] - sub @ (sub.conj().T @ A[:, pick])
        w = w - sub @ (sub.conj().T @ w)
        norm = np.linalg.norm(w)
        if norm > SPAN_TOL:
            basis[:, j] = w / norm
            resid = resid - np.outer(basis[:, j], basis[:, j].conj() @ resid)
    if require_full_support and len(selection) < sparsity:
        fill = np.nonzero(~used)[0][: sparsity - len(selection)]
        selection.extend(int(i) for i in fill)
        padded = True
    support = tuple(sorted(selection))
    results = [
        replace(res, padded=padded)
        for res in _fit_batch(A, Y, [support] * Y.shape[1])
    ]
    return support, results
