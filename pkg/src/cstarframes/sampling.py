"""Batched computations on flattened module coordinates.

A module vector flattens to one (m*d, d) complex matrix per algebra block
(see :func:`cstarframes.module.flatten_vector`); a batch stacks those into
(n, m*d, d) arrays.  Everything here is plain numpy over such batches, which
keeps large sampled checks off the per-object code path.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "gaussian_coordinate_batch",
    "batch_norm_sq",
    "batch_image",
    "batch_gram",
    "batch_min_eig",
    "normalize_batch",
]


def gaussian_coordinate_batch(spec, rank: int, rng: np.random.Generator, count: int):
    """Per-block (count, rank*d, d) stacks with standard complex Gaussian entries."""
    out = []
    for d in spec.block_dims:
        shape = (count, rank * d, d)
        out.append(
            (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)
        )
    return out


def batch_norm_sq(xis) -> np.ndarray:
    """Squared module norms ||<x, x>|| per sample: max over blocks of sigma_max^2."""
    out = None
    for xi in xis:
        s = np.linalg.svd(xi, compute_uv=False)[..., 0] ** 2
        out = s if out is None else np.maximum(out, s)
    return out


def batch_image(phi_blocks, xis):
    """Apply a realized operator to every sample: phi @ xi per block."""
    return [phi[None, :, :] @ xi for phi, xi in zip(phi_blocks, xis)]


def batch_gram(xis):
    """Per-block (n, d, d) Gram matrices xi^H xi.

    These are the transposes of the algebra values <x, x>, which share their
    eigenvalues; fine for norm and positivity checks.
    """
    return [np.einsum("nra,nrb->nab", xi.conj(), xi) for xi in xis]


def batch_min_eig(mats_per_block) -> np.ndarray:
    """Per sample, the minimum eigenvalue over all Hermitized blocks."""
    out = None
    for mb in mats_per_block:
        h = (mb + np.conj(np.swapaxes(mb, -1, -2))) / 2.0
        w = np.linalg.eigvalsh(h)[..., 0]
        out = w if out is None else np.minimum(out, w)
    return out


def normalize_batch(xis):
    """Scale every sample to unit module norm (zero samples are left alone)."""
    norms = np.sqrt(batch_norm_sq(xis))
    safe = np.where(norms > 0, norms, 1.0)
    return [xi / safe[:, None, None] for xi in xis]
