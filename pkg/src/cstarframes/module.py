"""The free Hilbert module A^m over a finite-dimensional C*-algebra.

Vectors are m-tuples of algebra elements with the algebra-valued inner
product ``<x, y> = sum_i x_i y_i*`` (linear in the first slot).  Adjointable
operators T: A^m -> A^k are stored as m x k matrices of algebra elements
acting by right coefficients, ``(Tx)_j = sum_i x_i M_ij``; the adjoint is
then the entrywise-*-transpose.

:func:`realize` maps an operator to one complex matrix per algebra block by
transposing the operator matrix without conjugating entries.  Composition of
operators multiplies their matrices in reverse order, and the transpose
repairs exactly that, so the realization is a faithful *-homomorphism.  All
spectral computations (norms, positivity, pseudo-inverses) happen on the
realized blocks.
"""

from __future__ import annotations

import hashlib
from numbers import Number
from typing import Sequence

import numpy as np

from .algebra import AlgebraElement, AlgebraSpec, cstar_norm, is_positive
from .errors import StructuralError

__all__ = [
    "ModuleVector",
    "ModuleOperator",
    "BlockRealization",
    "inner",
    "vector_norm",
    "apply",
    "adjoint_op",
    "compose",
    "realize",
    "operator_norm",
    "is_positive_operator",
    "pseudo_inverse",
    "identity_operator",
    "zero_operator",
    "operator_from_realization",
    "flatten_vector",
    "unflatten_vector",
]

#: Relative singular-value threshold below which a direction counts as zero.
RANK_TOL = 1e-10


class ModuleVector:
    """An element of A^m: a nonempty tuple of algebra elements."""

    __slots__ = ("spec", "entries")

    def __init__(self, entries: Sequence[AlgebraElement]):
        entries = tuple(entries)
        if not entries:
            raise StructuralError("module vectors must have rank >= 1")
        spec = entries[0].spec
        for e in entries:
            if e.spec != spec:
                raise StructuralError("vector entries must share one algebra spec")
        object.__setattr__(self, "spec", spec)
        object.__setattr__(self, "entries", entries)

    def __setattr__(self, name, value):
        raise AttributeError("ModuleVector is immutable")

    @property
    def rank(self) -> int:
        return len(self.entries)

    def block_stack(self, b: int) -> np.ndarray:
        """Entries of block b stacked into shape (m, d, d)."""
        return np.stack([e.blocks[b] for e in self.entries])

    def __add__(self, other):
        _check_vector_pair(self, other)
        return ModuleVector([a + b for a, b in zip(self.entries, other.entries)])

    def __sub__(self, other):
        _check_vector_pair(self, other)
        return ModuleVector([a - b for a, b in zip(self.entries, other.entries)])

    def __neg__(self):
        return ModuleVector([-e for e in self.entries])

    def __rmul__(self, coeff):
        # module action a.x for an algebra coefficient, plus scalar scaling
        if isinstance(coeff, AlgebraElement):
            return ModuleVector([coeff @ e for e in self.entries])
        if isinstance(coeff, Number):
            return ModuleVector([coeff * e for e in self.entries])
        return NotImplemented

    __mul__ = __rmul__

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, ModuleVector)
            and self.rank == other.rank
            and all(a == b for a, b in zip(self.entries, other.entries))
        )

    def __repr__(self) -> str:
        return f"ModuleVector(rank={self.rank}, spec={self.spec!r})"

    def fingerprint(self) -> str:
        return _digest(self.spec, (e.blocks for e in self.entries))


class ModuleOperator:
    """An adjointable map A^m -> A^k given by an m x k algebra-valued matrix."""

    __slots__ = ("spec", "dom_rank", "cod_rank", "mat")

    def __init__(self, mat: Sequence[Sequence[AlgebraElement]]):
        rows = tuple(tuple(r) for r in mat)
        if not rows or not rows[0]:
            raise StructuralError("operator matrices must be at least 1 x 1")
        k = len(rows[0])
        spec = rows[0][0].spec
        for r in rows:
            if len(r) != k:
                raise StructuralError("ragged operator matrix")
            for e in r:
                if e.spec != spec:
                    raise StructuralError("operator entries must share one algebra spec")
        object.__setattr__(self, "spec", spec)
        object.__setattr__(self, "dom_rank", len(rows))
        object.__setattr__(self, "cod_rank", k)
        object.__setattr__(self, "mat", rows)

    def __setattr__(self, name, value):
        raise AttributeError("ModuleOperator is immutable")

    def block_array(self, b: int) -> np.ndarray:
        """Matrix entries of block b as an (m, k, d, d) array."""
        return np.stack(
            [np.stack([e.blocks[b] for e in row]) for row in self.mat]
        )

    def adjoint(self) -> "ModuleOperator":
        return adjoint_op(self)

    def __add__(self, other):
        _check_operator_pair(self, other)
        return ModuleOperator(
            [[a + b for a, b in zip(ra, rb)] for ra, rb in zip(self.mat, other.mat)]
        )

    def __sub__(self, other):
        _check_operator_pair(self, other)
        return ModuleOperator(
            [[a - b for a, b in zip(ra, rb)] for ra, rb in zip(self.mat, other.mat)]
        )

    def __neg__(self):
        return ModuleOperator([[-e for e in row] for row in self.mat])

    def __mul__(self, scalar):
        if isinstance(scalar, Number):
            return ModuleOperator([[scalar * e for e in row] for row in self.mat])
        return NotImplemented

    __rmul__ = __mul__

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, ModuleOperator)
            and self.dom_rank == other.dom_rank
            and self.cod_rank == other.cod_rank
            and all(
                a == b for ra, rb in zip(self.mat, other.mat) for a, b in zip(ra, rb)
            )
        )

    def __repr__(self) -> str:
        return (
            f"ModuleOperator(dom={self.dom_rank}, cod={self.cod_rank}, "
            f"spec={self.spec!r})"
        )

    def fingerprint(self) -> str:
        return _digest(self.spec, (e.blocks for row in self.mat for e in row))


class BlockRealization:
    """One complex matrix per algebra block representing an operator."""

    __slots__ = ("spec", "dom_rank", "cod_rank", "blocks")

    def __init__(self, spec, dom_rank, cod_rank, blocks):
        frozen = []
        for arr in blocks:
            arr = np.asarray(arr, dtype=np.complex128)
            arr.setflags(write=False)
            frozen.append(arr)
        object.__setattr__(self, "spec", spec)
        object.__setattr__(self, "dom_rank", dom_rank)
        object.__setattr__(self, "cod_rank", cod_rank)
        object.__setattr__(self, "blocks", tuple(frozen))

    def __setattr__(self, name, value):
        raise AttributeError("BlockRealization is immutable")


def _digest(spec: AlgebraSpec, block_groups) -> str:
    h = hashlib.sha256()
    h.update(repr(spec.block_dims).encode())
    for blocks in block_groups:
        for b in blocks:
            h.update(np.ascontiguousarray(b).tobytes())
    return h.hexdigest()[:16]


def _check_vector_pair(x: ModuleVector, y) -> None:
    if not isinstance(y, ModuleVector):
        raise StructuralError(f"expected ModuleVector, got {type(y).__name__}")
    if x.spec != y.spec:
        raise StructuralError("vectors live over different algebras")
    if x.rank != y.rank:
        raise StructuralError(f"vector ranks differ: {x.rank} vs {y.rank}")


def _check_operator_pair(s: ModuleOperator, t) -> None:
    if not isinstance(t, ModuleOperator):
        raise StructuralError(f"expected ModuleOperator, got {type(t).__name__}")
    if s.spec != t.spec or s.dom_rank != t.dom_rank or s.cod_rank != t.cod_rank:
        raise StructuralError("operators have mismatched shapes or algebras")


def inner(x: ModuleVector, y: ModuleVector) -> AlgebraElement:
    """Algebra-valued inner product sum_i x_i y_i*."""
    _check_vector_pair(x, y)
    out = []
    for b in range(x.spec.num_blocks):
        xs = x.block_stack(b)
        ys = y.block_stack(b)
        out.append(np.einsum("iab,icb->ac", xs, ys.conj()))
    return AlgebraElement(x.spec, out)


def vector_norm(x: ModuleVector) -> float:
    """Module norm ||<x, x>||^(1/2)."""
    return float(np.sqrt(cstar_norm(inner(x, x))))


def apply(T: ModuleOperator, x: ModuleVector) -> ModuleVector:
    """Evaluate (Tx)_j = sum_i x_i M_ij."""
    if not isinstance(x, ModuleVector):
        raise StructuralError(f"expected ModuleVector, got {type(x).__name__}")
    if T.spec != x.spec:
        raise StructuralError("operator and vector live over different algebras")
    if T.dom_rank != x.rank:
        raise StructuralError(
            f"operator domain rank {T.dom_rank} does not match vector rank {x.rank}"
        )
    per_block = [
        np.einsum("iab,ijbc->jac", x.block_stack(b), T.block_array(b))
        for b in range(T.spec.num_blocks)
    ]
    entries = [
        AlgebraElement(T.spec, [blk[j] for blk in per_block])
        for j in range(T.cod_rank)
    ]
    return ModuleVector(entries)


def adjoint_op(T: ModuleOperator) -> ModuleOperator:
    """The adjoint: entrywise-*-transposed matrix, (T*)_ji = (M_ij)*."""
    return ModuleOperator(
        [[T.mat[i][j].adjoint() for i in range(T.dom_rank)] for j in range(T.cod_rank)]
    )


def compose(T1: ModuleOperator, T2: ModuleOperator) -> ModuleOperator:
    """The composition T1 after T2.

    By the right-coefficient action the matrix of T1 o T2 is
    mat(T2) @ mat(T1), in that order.
    """
    _require_operator(T1)
    _require_operator(T2)
    if T1.spec != T2.spec:
        raise StructuralError("operators live over different algebras")
    if T2.cod_rank != T1.dom_rank:
        raise StructuralError(
            f"cannot compose: inner ranks {T2.cod_rank} vs {T1.dom_rank}"
        )
    spec = T1.spec
    rows = []
    per_block = [
        np.einsum("ijab,jkbc->ikac", T2.block_array(b), T1.block_array(b))
        for b in range(spec.num_blocks)
    ]
    for i in range(T2.dom_rank):
        rows.append(
            [
                AlgebraElement(spec, [blk[i, k] for blk in per_block])
                for k in range(T1.cod_rank)
            ]
        )
    return ModuleOperator(rows)


def _require_operator(T) -> None:
    if not isinstance(T, ModuleOperator):
        raise StructuralError(f"expected ModuleOperator, got {type(T).__name__}")


def realize(T: ModuleOperator) -> BlockRealization:
    """Per-block complex matrices of the transposed (unconjugated) matrix.

    For T: A^m -> A^k the block-b matrix has shape (k*d_b, m*d_b) and acts on
    flattened coordinates from the left: ``flatten(Tx) = realize(T) @
    flatten(x)``.  The map is multiplicative and *-preserving.
    """
    blocks = []
    for b, d in enumerate(T.spec.block_dims):
        arr = T.block_array(b)  # (m, k, d, d)
        blocks.append(
            arr.transpose(1, 3, 0, 2).reshape(T.cod_rank * d, T.dom_rank * d)
        )
    return BlockRealization(T.spec, T.dom_rank, T.cod_rank, blocks)


def operator_from_realization(
    spec: AlgebraSpec, dom_rank: int, cod_rank: int, blocks: Sequence[np.ndarray]
) -> ModuleOperator:
    """Inverse of :func:`realize`."""
    if len(blocks) != spec.num_blocks:
        raise StructuralError("block count does not match the spec")
    per_block = []
    for arr, d in zip(blocks, spec.block_dims):
        arr = np.asarray(arr, dtype=np.complex128)
        if arr.shape != (cod_rank * d, dom_rank * d):
            raise StructuralError(
                f"realized block has shape {arr.shape}, expected "
                f"({cod_rank * d}, {dom_rank * d})"
            )
        per_block.append(arr.reshape(cod_rank, d, dom_rank, d).transpose(2, 0, 3, 1))
    rows = []
    for i in range(dom_rank):
        rows.append(
            [
                AlgebraElement(spec, [blk[i, j] for blk in per_block])
                for j in range(cod_rank)
            ]
        )
    return ModuleOperator(rows)


def flatten_vector(x: ModuleVector) -> list[np.ndarray]:
    """Per-block coordinates of shape (m*d, d) matching :func:`realize`."""
    out = []
    for b, d in enumerate(x.spec.block_dims):
        out.append(x.block_stack(b).transpose(0, 2, 1).reshape(x.rank * d, d))
    return out


def unflatten_vector(spec: AlgebraSpec, rank: int, mats: Sequence[np.ndarray]) -> ModuleVector:
    """Inverse of :func:`flatten_vector`."""
    per_block = []
    for arr, d in zip(mats, spec.block_dims):
        arr = np.asarray(arr, dtype=np.complex128)
        if arr.shape != (rank * d, d):
            raise StructuralError(
                f"flattened block has shape {arr.shape}, expected ({rank * d}, {d})"
            )
        per_block.append(arr.reshape(rank, d, d).transpose(0, 2, 1))
    return ModuleVector(
        [AlgebraElement(spec, [blk[i] for blk in per_block]) for i in range(rank)]
    )


def operator_norm(T: ModuleOperator) -> float:
    """Largest singular value over the realized blocks."""
    return max(float(np.linalg.norm(b, 2)) for b in realize(T).blocks)


def is_positive_operator(T: ModuleOperator, tol: float = 1e-8) -> bool:
    """Hermitian-PSD test of every realized block, with relative tolerance."""
    if T.dom_rank != T.cod_rank:
        raise StructuralError("positivity needs a square operator")
    scale = max(1.0, operator_norm(T))
    for b in realize(T).blocks:
        if float(np.linalg.norm(b - b.conj().T, 2)) > tol * scale:
            return False
        h = (b + b.conj().T) / 2.0
        if float(np.linalg.eigvalsh(h)[0]) < -tol * scale:
            return False
    return True


def pseudo_inverse(T: ModuleOperator, rank_tol: float = RANK_TOL) -> ModuleOperator:
    """Moore-Penrose pseudo-inverse, computed blockwise on the realization.

    Singular values below ``rank_tol`` times the block's largest singular
    value are treated as zero.
    """
    blocks = []
    for phi in realize(T).blocks:
        u, s, vh = np.linalg.svd(phi)
        inv = np.zeros_like(s)
        if s.size and s[0] > 0:
            keep = s > rank_tol * s[0]
            inv[keep] = 1.0 / s[keep]
        blocks.append((vh.conj().T * inv) @ u.conj().T)
    return operator_from_realization(T.spec, T.cod_rank, T.dom_rank, blocks)


def identity_operator(spec: AlgebraSpec, rank: int) -> ModuleOperator:
    if rank < 1:
        raise StructuralError("operator ranks must be >= 1")
    unit = spec.unit()
    zero = spec.zero()
    return ModuleOperator(
        [[unit if i == j else zero for j in range(rank)] for i in range(rank)]
    )


def zero_operator(spec: AlgebraSpec, dom_rank: int, cod_rank: int) -> ModuleOperator:
    if dom_rank < 1 or cod_rank < 1:
        raise StructuralError("operator ranks must be >= 1")
    zero = spec.zero()
    return ModuleOperator([[zero] * cod_rank for _ in range(dom_rank)])
