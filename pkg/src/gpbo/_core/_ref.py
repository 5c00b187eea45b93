"""NumPy reference backend for covariance assembly.

Conventions shared with the compiled backend:

* ``X`` is (n, d) and ``Z`` is (m, d), both float64 and C-contiguous.
* ``ell`` is the per-dimension length-scale vector of length d. Isotropic
  kernels pass the same value in every slot; ``ard`` only controls how
  many length-scale gradient channels are produced.
* Squared scaled distance: u = sum_i (x_i - x'_i)^2 / ell_i^2 (no 1/2
  factor), clamped at zero against round-off.
* Gradient stacks have shape (p + 1, n, n) with p = d if ``ard`` else 1:
  one channel per length-scale followed by the output-scale channel.
"""

from __future__ import annotations

import numpy as np

SQRT5 = np.sqrt(5.0)


def _scaled_sqdist(X: np.ndarray, Z: np.ndarray, ell: np.ndarray) -> np.ndarray:
    diff = X[:, None, :] - Z[None, :, :]
    u = np.einsum("ijk,k->ij", diff * diff, 1.0 / ell**2)
    return np.maximum(u, 0.0)


def lml_grad_contract(
    ainv: np.ndarray, alpha: np.ndarray, G: np.ndarray
) -> tuple[np.ndarray, float]:
    """Gradient contractions 0.5 * sum(W o G_c) with W = aa^T - A^{-1}.

    ``ainv`` carries the inverse in its lower triangle only (LAPACK potri
    output); the upper triangle is ignored. Returns the per-channel
    contractions and trace(W), which the caller scales into the noise
    gradient.
    """
    low = np.tril(ainv)
    full = low + low.T
    full[np.diag_indices_from(full)] -= np.diag(ainv)
    w = np.outer(alpha, alpha) - full
    grad = 0.5 * np.tensordot(G, w, axes=([1, 2], [0, 1]))
    return grad, float(np.trace(w))


def se_matrix(X: np.ndarray, ell: np.ndarray, sf2: float) -> np.ndarray:
    return sf2 * np.exp(-_scaled_sqdist(X, X, ell))


def se_cross(X: np.ndarray, Z: np.ndarray, ell: np.ndarray, sf2: float) -> np.ndarray:
    return sf2 * np.exp(-_scaled_sqdist(X, Z, ell))


def se_matrix_with_gradients(
    X: np.ndarray, ell: np.ndarray, sf2: float, ard: bool
) -> tuple[np.ndarray, np.ndarray]:
    n, d = X.shape
    diff2 = (X[:, None, :] - X[None, :, :]) ** 2
    u = np.maximum(np.einsum("ijk,k->ij", diff2, 1.0 / ell**2), 0.0)
    K = sf2 * np.exp(-u)
    p = d if ard else 1
    G = np.empty((p + 1, n, n))
    if ard:
        for i in range(d):
            G[i] = K * (2.0 * diff2[:, :, i] / ell[i] ** 3)
    else:
        G[0] = K * (2.0 * u / ell[0])
    G[p] = (2.0 / np.sqrt(sf2)) * K
    return K, G


def matern52_matrix(X: np.ndarray, ell: np.ndarray, sf2: float) -> np.ndarray:
    r = np.sqrt(_scaled_sqdist(X, X, ell))
    return sf2 * (1.0 + SQRT5 * r + (5.0 / 3.0) * r * r) * np.exp(-SQRT5 * r)


def matern52_cross(
    X: np.ndarray, Z: np.ndarray, ell: np.ndarray, sf2: float
) -> np.ndarray:
    r = np.sqrt(_scaled_sqdist(X, Z, ell))
    return sf2 * (1.0 + SQRT5 * r + (5.0 / 3.0) * r * r) * np.exp(-SQRT5 * r)


def matern52_matrix_with_gradients(
    X: np.ndarray, ell: np.ndarray, sf2: float, ard: bool
) -> tuple[np.ndarray, np.ndarray]:
    n, d = X.shape
    diff2 = (X[:, None, :] - X[None, :, :]) ** 2
    u = np.maximum(np.einsum("ijk,k->ij", diff2, 1.0 / ell**2), 0.0)
    r = np.sqrt(u)
    e = np.exp(-SQRT5 * r)
    K = sf2 * (1.0 + SQRT5 * r + (5.0 / 3.0) * u) * e
    # dK/d(ell_i) = (5/3) sf2 (1 + sqrt5 r) e^{-sqrt5 r} * diff2_i / ell_i^3
    # (the 1/r from the chain rule cancels; no singularity at r = 0)
    common = (5.0 / 3.0) * sf2 * (1.0 + SQRT5 * r) * e
    p = d if ard else 1
    G = np.empty((p + 1, n, n))
    if ard:
        for i in range(d):
            G[i] = common * (diff2[:, :, i] / ell[i] ** 3)
    else:
        G[0] = common * (u / ell[0])
    G[p] = (2.0 / np.sqrt(sf2)) * K
    return K, G
