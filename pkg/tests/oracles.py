"""Independent reference computations used by several test modules."""

import numpy as np


def algebraic_curvature(space):
    """Riemann and Ricci tensors of a left-invariant metric from structure constants.

    With c[i, j, k] = <[e_i, e_j], e_k> in an orthonormal basis the Koszul
    formula gives nabla_{e_i} e_j = sum_k G[i, j, k] e_k with
    G[i, j, k] = (c[i, j, k] - c[j, k, i] + c[k, i, j]) / 2.
    Returns (R, Ric) with R[i, j, k, l] = <R(e_i, e_j) e_k, e_l>.
    """
    c = space.bracket_table()
    g = 0.5 * (c - np.einsum("jki->ijk", c) + np.einsum("kij->ijk", c))
    # nabla_i nabla_j e_k = sum_l G[j,k,l] nabla_i e_l
    nn = np.einsum("jkl,ilm->ijkm", g, g)
    r = nn - np.transpose(nn, (1, 0, 2, 3)) - np.einsum("ijs,skm->ijkm", c, g)
    ric = np.einsum("ijki->jk", r)
    return r, ric


def complex_component(m, c1, c2, z, w):
    val = complex(c1, c2) * complex(z, w) ** m
    return val.real, val.imag
