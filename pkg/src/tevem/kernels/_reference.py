"""Pure-Python element loop built on :mod:`tevem.vem_local`."""

from __future__ import annotations

import numpy as np

from ..vem_local import LocalElement, element_operators


def element_blocks(coords, offsets, vertex_h_local, n_index):
    """Local matrices for every cell of a flattened mesh.

    ``coords`` holds the vertex coordinates of all cells back to back, cell
    ``k`` spanning rows ``offsets[k]:offsets[k+1]``; ``vertex_h_local`` is
    aligned with ``coords``.  Returns a list of per-cell tuples
    ``(A_W, A_V, B_uu, B_uphi, B_psiu)``.
    """
    out = []
    for k in range(len(offsets) - 1):
        sl = slice(offsets[k], offsets[k + 1])
        ops = element_operators(LocalElement(np.asarray(coords[sl])), n_index, vertex_h_local[sl])
        out.append((ops.A_W, ops.A_V, ops.B_uu, ops.B_uphi, ops.B_psiu))
    return out
