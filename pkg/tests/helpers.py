"""Shared random-state generators and naive reference implementations.

The naive loops here are deliberately independent of the vectorized
package code so they can serve as oracles.
"""

import numpy as np

from qcool.qmat import DensityMatrix


def random_density_matrix(rng, dims) -> DensityMatrix:
    """Ginibre-induced random state."""
    d = int(np.prod(dims))
    g = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    rho = g @ g.conj().T
    return DensityMatrix(rho / np.trace(rho).real, tuple(dims))


def random_pure_ket(rng, d) -> np.ndarray:
    v = rng.standard_normal(d) + 1j * rng.standard_normal(d)
    return v / np.linalg.norm(v)


def random_product_dm(rng) -> DensityMatrix:
    """Random pure product two-qubit state."""
    a = random_pure_ket(rng, 2)
    b = random_pure_ket(rng, 2)
    v = np.kron(a, b)
    return DensityMatrix(np.outer(v, v.conj()), (2, 2))


def random_separable_dm(rng, n_terms=6) -> DensityMatrix:
    """Random convex combination of product states."""
    weights = rng.dirichlet(np.ones(n_terms))
    rho = np.zeros((4, 4), dtype=complex)
    for w in weights:
        rho += w * random_product_dm(rng).data
    return DensityMatrix(rho, (2, 2))


def random_unitary(rng, d) -> np.ndarray:
    g = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    q, r = np.linalg.qr(g)
    return q * (np.diagonal(r) / np.abs(np.diagonal(r)))


def naive_partial_trace(mat, dims, k) -> np.ndarray:
    """Index-loop partial trace, oracle for the reshape implementation."""
    dims = list(dims)
    keep = [i for i in range(len(dims)) if i != k]
    d_out = int(np.prod([dims[i] for i in keep]))
    out = np.zeros((d_out, d_out), dtype=complex)
    idx_all = list(np.ndindex(*dims))
    flat = {tuple(ix): n for n, ix in enumerate(idx_all)}

    def reduced_index(ix):
        n = 0
        for i in keep:
            n = n * dims[i] + ix[i]
        return n

    for row in idx_all:
        for col in idx_all:
            if row[k] == col[k]:
                out[reduced_index(row), reduced_index(col)] += mat[
                    flat[tuple(row)], flat[tuple(col)]
                ]
    return out


def naive_partial_transpose(mat, dims, k) -> np.ndarray:
    """Index-loop partial transpose, oracle for the reshape implementation."""
    dims = list(dims)
    idx_all = list(np.ndindex(*dims))
    flat = {tuple(ix): n for n, ix in enumerate(idx_all)}
    out = np.zeros_like(np.asarray(mat, dtype=complex))
    for row in idx_all:
        for col in idx_all:
            row2 = list(row)
            col2 = list(col)
            row2[k], col2[k] = col2[k], row2[k]
            out[flat[tuple(row2)], flat[tuple(col2)]] = mat[flat[tuple(row)], flat[tuple(col)]]
    return out
