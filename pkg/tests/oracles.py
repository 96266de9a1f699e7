"""Brute-force reference constructions: explicit Kronecker products and matrix exponentials."""

from functools import reduce

import numpy as np
import scipy.linalg

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)


def kron_all(ops):
    return reduce(np.kron, ops)


def site_op(op, site, L):
    """``op`` on 1-based ``site``; site 1 is the leftmost Kronecker factor."""
    ops = [I2] * L
    ops[site - 1] = op
    return kron_all(ops)


def pair_op(op, i, j, L):
    return site_op(op, i, L) @ site_op(op, j, L)


def hz(J, h, L):
    out = sum(J * pair_op(Z, j, j % L + 1, L) for j in range(1, L + 1))
    return out + sum(h[j - 1] * site_op(Z, j, L) for j in range(1, L + 1))


def hx_kfim(b, L):
    return sum(b * site_op(X, j, L) for j in range(1, L + 1))


def hx_chain(g, L, nnnn=False):
    out = np.zeros((2**L, 2**L), dtype=complex)
    for j in range(1, L + 1):
        out += site_op(X, j, L) + pair_op(X, j, j % L + 1, L)
        if nnnn:
            out += (2 / 3) * pair_op(X, j, (j + 2) % L + 1, L)
    return 0.5 * g * out


def expm_hermitian(Hm):
    """``exp(-i H)`` from a dense eigendecomposition."""
    w, V = np.linalg.eigh(Hm)
    return (V * np.exp(-1j * w)) @ V.conj().T


def kfim(params):
    L = params.L
    return scipy.linalg.expm(-1j * hz(params.J, params.h, L)) @ scipy.linalg.expm(-1j * hx_kfim(params.b, L))


def cnn(params, nnnn=False):
    L = params.L
    return expm_hermitian(hx_chain(params.g, L, nnnn)) @ expm_hermitian(hz(params.J, params.h, L))


def tensor_rmt(factors, xi):
    return np.diag(np.exp(1j * np.asarray(xi))) @ kron_all(factors)
