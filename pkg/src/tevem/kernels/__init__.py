"""Batched element kernels with a compiled fast path.

The Cython extension ``tevem.kernels._fast`` is used when it was built;
otherwise the pure-Python reference loop is selected.  Set
``TEVEM_KERNEL=reference`` to force the fallback.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from . import _reference

try:
    from . import _fast
except ImportError:  # extension not compiled
    _fast = None

BACKENDS = ("fast", "reference")


def available_backends() -> list[str]:
    return [b for b in BACKENDS if b != "fast" or _fast is not None]


def default_backend() -> str:
    forced = os.environ.get("TEVEM_KERNEL", "").strip().lower()
    if forced:
        if forced not in BACKENDS:
            raise ValueError(f"TEVEM_KERNEL must be one of {BACKENDS}, got {forced!r}")
        if forced == "fast" and _fast is None:
            raise ImportError("TEVEM_KERNEL=fast but the compiled extension is not available")
        return forced
    return "fast" if _fast is not None else "reference"


@dataclass
class ElementGroup:
    """Stacked local matrices of all cells with the same vertex count."""

    cells: np.ndarray
    A_W: np.ndarray
    A_V: np.ndarray
    B_uu: np.ndarray
    B_uphi: np.ndarray
    B_psiu: np.ndarray


def flatten_cells(mesh, cell_ids, vertex_h):
    idx = np.concatenate([mesh.cells[k] for k in cell_ids])
    sizes = np.array([len(mesh.cells[k]) for k in cell_ids])
    offsets = np.concatenate([[0], np.cumsum(sizes)]).astype(np.int64)
    return np.ascontiguousarray(mesh.vertices[idx]), offsets, np.ascontiguousarray(vertex_h[idx])


def element_blocks(mesh, n_index: float, vertex_h, backend: str | None = None) -> dict[int, ElementGroup]:
    """Local stiffness and right-hand blocks of every cell, grouped by vertex count."""
    backend = backend or default_backend()
    if backend not in available_backends():
        raise ValueError(f"kernel backend {backend!r} not available; have {available_backends()}")
    sizes = np.array([len(c) for c in mesh.cells])
    groups = {}
    for nk in np.unique(sizes).tolist():
        ids = np.flatnonzero(sizes == nk)
        coords, offsets, hloc = flatten_cells(mesh, ids, vertex_h)
        if backend == "fast":
            mats = _fast.element_blocks(coords, offsets, hloc, n_index, nk)
        else:
            per_cell = _reference.element_blocks(coords, offsets, hloc, n_index)
            mats = [np.stack(m) for m in zip(*per_cell)]
        groups[nk] = ElementGroup(ids, *mats)
    return groups
