"""Dense complex linear-algebra kernel shared by every other module.

Hermitian eigendecompositions, PSD square roots, covariance-shaped
circularly-symmetric Gaussian sampling, and the Kronecker / Hadamard
products used to vectorize relay weight matrices.

Conventions
-----------
* ``vec`` stacks columns: ``vec(V)[c*L + l] = V[l, c]``, which makes
  ``q^H V f == (conj(f) kron q)^H vec(V)`` hold exactly.
* A standard complex normal has N(0, 1/2) real and imaginary parts, so
  E|x|^2 = 1.
* Eigenvalues of a PSD matrix below ``-PSD_TOL`` relative to the largest
  magnitude are an error; anything in ``(-PSD_TOL*scale, 0)`` is treated
  as roundoff and clamped to zero.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

HERM_TOL = 1e-12
PSD_TOL = 1e-9


class NotHermitianError(ValueError):
    pass


class NotPsdError(ValueError):
    pass


class EigPair(NamedTuple):
    """Eigenvalues in descending order and a unitary basis (columns)."""

    eigenvalues: np.ndarray
    basis: np.ndarray


def require_hermitian(m, tol=HERM_TOL, name="matrix"):
    """Validate that ``m`` is square Hermitian and return its symmetrization.

    The tolerance is relative to the largest entry magnitude (with a floor
    of 1) so that well-scaled matrices carrying roundoff still pass.
    """
    m = np.asarray(m, dtype=np.complex128)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise NotHermitianError(f"{name} must be square, got shape {m.shape}")
    scale = max(1.0, float(np.abs(m).max())) if m.size else 1.0
    if float(np.abs(m - m.conj().T).max()) > tol * scale:
        raise NotHermitianError(f"{name} is not Hermitian within tolerance {tol}")
    return 0.5 * (m + m.conj().T)


def hermitize(m):
    """Cheap (M + M^H)/2 without validation, for known-Hermitian roundoff."""
    return 0.5 * (m + np.conj(np.swapaxes(m, -1, -2)))


def herm_eig(m, tol=HERM_TOL) -> EigPair:
    """Eigendecomposition of a Hermitian matrix, eigenvalues descending.

    ``basis @ diag(eigenvalues) @ basis^H`` reconstructs the input and
    ``basis^H @ basis`` is the identity (both to LAPACK accuracy).
    """
    m = require_hermitian(m, tol=tol)
    vals, vecs = np.linalg.eigh(m)
    order = np.argsort(vals)[::-1]
    return EigPair(vals[order], vecs[:, order])


def psd_sqrt(m, tol=PSD_TOL):
    """Hermitian square root S of a PSD matrix, S @ S == m.

    Raises NotPsdError when an eigenvalue falls below ``-tol`` relative to
    the largest eigenvalue magnitude; smaller negatives (SDP roundoff) are
    clamped to zero.
    """
    vals, vecs = herm_eig(m)
    scale = float(np.abs(vals).max()) if vals.size else 0.0
    if scale > 0.0 and float(vals.min()) < -tol * scale:
        raise NotPsdError(
            f"matrix is not PSD: min eigenvalue {vals.min():.3e} vs scale {scale:.3e}"
        )
    root = np.sqrt(np.clip(vals, 0.0, None))
    return hermitize((vecs * root) @ vecs.conj().T)


def std_cn(n, rng):
    """Standard circularly-symmetric complex normal vector, E|x_i|^2 = 1.

    Draw order is fixed (all real parts, then all imaginary parts) so a
    seeded generator yields a bit-identical sequence across runs.
    """
    re = rng.standard_normal(n)
    im = rng.standard_normal(n)
    return np.sqrt(0.5) * (re + 1j * im)


def cn_matrix(rng, shape):
    """I.i.d. CN(0, 1) array of the given shape (real block then imag block)."""
    re = rng.standard_normal(shape)
    im = rng.standard_normal(shape)
    return np.sqrt(0.5) * (re + 1j * im)


def sample_cn(cov, rng):
    """One draw from CN(0, cov) as psd_sqrt(cov) @ standard normal."""
    s = psd_sqrt(cov)
    return s @ std_cn(s.shape[0], rng)


def kron(a, b):
    """Kronecker product of vectors; entry (c*|b| + l) = a_c * b_l."""
    return np.kron(np.asarray(a), np.asarray(b))


def hadamard(a, b):
    """Elementwise product of equal-length vectors."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise ValueError(f"length mismatch: {a.shape} vs {b.shape}")
    return a * b


def vec(v):
    """Column-stacking vectorization, vec(V)[c*L + l] = V[l, c]."""
    return np.asarray(v).ravel(order="F")


def unvec(w, rows):
    """Inverse of ``vec`` for a square-compatible weight vector."""
    w = np.asarray(w)
    cols = w.size // rows
    return w.reshape((rows, cols), order="F")


def outer(v):
    """Rank-1 Hermitian outer product v v^H."""
    v = np.asarray(v)
    return np.outer(v, v.conj())
