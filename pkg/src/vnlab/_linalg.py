"""Subspace arithmetic on spaces of d x d complex matrices.

Matrices are treated as vectors under the trace inner product
<x, y> = Tr(x^dagger y); a subspace is an array of shape (k, d, d) holding an
orthonormal basis.
"""

import numpy as np

from vnlab.errors import DimensionMismatchError


def as_matrices(mats, d=None):
    arrs = [np.asarray(m, dtype=complex) for m in mats]
    for m in arrs:
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise DimensionMismatchError(f"expected square matrices, got shape {m.shape}")
    dims = {m.shape[0] for m in arrs}
    if d is not None:
        dims.add(int(d))
    if len(dims) > 1:
        raise DimensionMismatchError(f"ambient dimensions disagree: {sorted(dims)}")
    if not arrs:
        return np.zeros((0, d, d), dtype=complex)
    return np.array(arrs)


def dagger(x):
    return np.swapaxes(np.conj(x), -1, -2)


def hermitian_parts(mats, with_norms=False):
    """Hermitian pieces (x + x^dag)/2 and (x - x^dag)/2i, dropping negligible ones.

    A piece below 1e-12 ||x|| is rounding noise from an (almost) Hermitian x;
    keeping it would impose a spurious commutation constraint.
    With ``with_norms`` each piece is paired with the operator norm of x.
    """
    out = []
    for x in mats:
        nx = np.linalg.norm(x, 2)
        for h in ((x + x.conj().T) / 2, (x - x.conj().T) / 2j):
            if nx > 0 and np.linalg.norm(h, 2) > 1e-12 * nx:
                out.append((h, nx) if with_norms else h)
    return out


def orthonormal_span(mats, tol, d=None):
    mats = as_matrices(mats, d)
    if len(mats) == 0:
        return mats
    d = mats.shape[-1]
    rows = mats.reshape(len(mats), -1)
    _, s, vh = np.linalg.svd(rows, full_matrices=False)
    if s.size == 0 or s[0] == 0:
        return np.zeros((0, d, d), dtype=complex)
    rank = int(np.sum(s > tol * s[0]))
    return vh[:rank].reshape(rank, d, d)


def project(basis, x):
    """Orthogonal projection of ``x`` (or a stack of matrices) onto span(basis)."""
    x = np.asarray(x, dtype=complex)
    if len(basis) == 0:
        return np.zeros_like(x)
    coeff = np.tensordot(basis.conj(), x, axes=([1, 2], [-2, -1]))
    return np.tensordot(coeff, basis, axes=([0], [0])) if x.ndim == 2 else np.einsum("kn,kab->nab", coeff, basis)


def coordinates(basis, x):
    return np.tensordot(basis.conj(), np.asarray(x, dtype=complex), axes=([1, 2], [-2, -1]))


def membership_residual(basis, x):
    """||x - P x|| / max(||x||, 1): relative distance of ``x`` from span(basis)."""
    x = np.asarray(x, dtype=complex)
    return float(np.linalg.norm(x - project(basis, x)) / max(np.linalg.norm(x), 1.0))


def split_clusters(values, tol, scale=None):
    """Group sorted real ``values`` into clusters.

    Returns ``(labels, ambiguous)``. A gap larger than sqrt(tol) * scale
    separates clusters; a gap between 100 * tol * scale and that bound is
    flagged as ambiguous since it can be neither noise nor a clean split.
    """
    values = np.asarray(values, dtype=float)
    order = np.argsort(values)
    if scale is None:
        scale = max(1.0, float(np.max(np.abs(values))) if values.size else 1.0)
    split = np.sqrt(tol) * scale
    noise = 100 * tol * scale
    labels = np.empty(len(values), dtype=int)
    label = 0
    ambiguous = False
    for pos, idx in enumerate(order):
        if pos > 0:
            gap = values[idx] - values[order[pos - 1]]
            if gap > split:
                label += 1
            elif gap > noise:
                ambiguous = True
        labels[idx] = label
    return labels, ambiguous


def eigenspace_blocks(h, tol):
    """Eigenvector groups of Hermitian ``h``, merging near-equal eigenvalues.

    Merging is the safe direction here: callers only need a subspace that
    contains the exact commutant of ``h``.
    """
    w, v = np.linalg.eigh(h)
    scale = max(np.abs(w).max(), 1e-300)
    labels, _ = split_clusters(w, tol, scale)
    return [v[:, labels == k] for k in range(labels.max() + 1)]


def commutant_of_hermitian(h, tol):
    blocks = eigenspace_blocks(h, tol)
    d = h.shape[0]
    mats = []
    for q in blocks:
        for a in range(q.shape[1]):
            for b in range(q.shape[1]):
                mats.append(np.outer(q[:, a], q[:, b].conj()))
    return np.array(mats).reshape(-1, d, d)


def commuting_subspace(start, gens, tol):
    """Largest subspace of span(start) whose elements commute with every generator
    and its adjoint.

    Each Hermitian part h contributes the constraint [h, X] = 0; the nullspace
    is taken from the SVD of the commutator map restricted to the current
    subspace, thresholded at tol * 2||a|| for the generator a that h came
    from. Scaling by ||h|| instead would let rounding noise in a small but
    genuine piece of a remove valid directions.
    """
    basis = np.asarray(start, dtype=complex)
    for h, norm in hermitian_parts(gens, with_norms=True):
        if len(basis) <= 1 and _is_identity_span(basis):
            break
        scale = 2 * norm
        images = h[None] @ basis - basis @ h[None]
        if np.linalg.norm(images) <= tol * scale:
            continue
        r = len(basis)
        mat = images.reshape(r, -1).T
        if mat.shape[0] > 2 * r:
            # same singular values and right vectors, much cheaper for tall maps
            mat = np.linalg.qr(mat, mode="r")
        _, s, vh = np.linalg.svd(mat, full_matrices=False)
        null = vh[s <= tol * scale]
        d = basis.shape[-1]
        basis = (null.conj() @ basis.reshape(r, -1)).reshape(-1, d, d)
    return basis


def _is_identity_span(basis):
    if len(basis) != 1:
        return False
    b = basis[0]
    d = b.shape[0]
    return np.allclose(b, b[0, 0] * np.eye(d), atol=1e-10) and abs(b[0, 0]) > 0


def intersect(b1, b2, tol):
    """Orthonormal basis of span(b1) & span(b2) via the nullspace of [b1, -b2]."""
    if len(b1) == 0 or len(b2) == 0:
        d = (b1 if len(b1) else b2).shape[-1]
        return np.zeros((0, d, d), dtype=complex)
    d = b1.shape[-1]
    q1 = b1.reshape(len(b1), -1).T
    q2 = b2.reshape(len(b2), -1).T
    mat = np.hstack([q1, -q2])
    _, s, vh = np.linalg.svd(mat, full_matrices=True)
    s_full = np.zeros(mat.shape[1])
    s_full[: len(s)] = s
    null = vh[s_full <= tol * max(s_full.max(), 1.0)].conj()
    if len(null) == 0:
        return np.zeros((0, d, d), dtype=complex)
    vecs = q1 @ null[:, : len(b1)].T
    return orthonormal_span(vecs.T.reshape(-1, d, d), tol)


def same_subspace(b1, b2, tol):
    """Mutual projection residual below tol (spans agree)."""
    if len(b1) != len(b2):
        return False
    return subspace_distance(b1, b2) < tol


def subspace_distance(b1, b2):
    """Largest relative residual of either basis projected onto the other."""
    if len(b1) == 0 and len(b2) == 0:
        return 0.0
    if len(b1) == 0 or len(b2) == 0:
        return 1.0
    r1 = max(membership_residual(b2, x) for x in b1)
    r2 = max(membership_residual(b1, x) for x in b2)
    return max(r1, r2)


def is_unitary(u, tol=1e-10):
    u = np.asarray(u)
    return u.ndim == 2 and u.shape[0] == u.shape[1] and np.linalg.norm(u.conj().T @ u - np.eye(len(u))) < tol * max(1, len(u))


def range_basis(p, tol):
    """Orthonormal columns spanning the range of Hermitian ``p``."""
    w, v = np.linalg.eigh((p + p.conj().T) / 2)
    scale = max(np.abs(w).max(), 1e-300)
    return v[:, np.abs(w) > np.sqrt(tol) * scale]


def hermitian_power(h, power):
    """h^power for Hermitian positive-definite h (power may be complex)."""
    w, v = np.linalg.eigh((h + h.conj().T) / 2)
    return (v * w.astype(complex) ** power) @ v.conj().T
