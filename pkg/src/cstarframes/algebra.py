"""Arithmetic in a finite-dimensional C*-algebra.

The algebra is a direct sum of full complex matrix blocks; an element is
one square complex matrix per block.  Positivity, order comparison, norms
and square roots all reduce to dense Hermitian eigenvalue / singular value
computations on the blocks.

Values are immutable: block arrays are copied and marked read-only at
construction, and every operation returns a fresh element.
"""

from __future__ import annotations

from numbers import Number
from typing import Iterable, Sequence

import numpy as np

from .errors import DomainError, StructuralError

__all__ = [
    "AlgebraSpec",
    "AlgebraElement",
    "cstar_norm",
    "is_positive",
    "loewner_leq",
    "positive_sqrt",
    "is_minimal_projection",
]


class AlgebraSpec:
    """Block sizes (d_1, ..., d_B) of a direct sum of matrix algebras."""

    __slots__ = ("block_dims",)

    def __init__(self, block_dims: Iterable[int]):
        dims = tuple(int(d) for d in block_dims)
        if not dims:
            raise StructuralError("an algebra needs at least one block")
        if any(d < 1 for d in dims):
            raise StructuralError(f"block dimensions must be >= 1, got {dims}")
        object.__setattr__(self, "block_dims", dims)

    def __setattr__(self, name, value):
        raise AttributeError("AlgebraSpec is immutable")

    @property
    def num_blocks(self) -> int:
        return len(self.block_dims)

    @property
    def total_dim(self) -> int:
        """Complex dimension sum(d_b^2)."""
        return sum(d * d for d in self.block_dims)

    def zero(self) -> "AlgebraElement":
        return AlgebraElement(self, [np.zeros((d, d)) for d in self.block_dims])

    def unit(self) -> "AlgebraElement":
        return AlgebraElement(self, [np.eye(d) for d in self.block_dims])

    def __eq__(self, other) -> bool:
        return isinstance(other, AlgebraSpec) and self.block_dims == other.block_dims

    def __hash__(self) -> int:
        return hash(self.block_dims)

    def __repr__(self) -> str:
        return f"AlgebraSpec({list(self.block_dims)})"


def _freeze_block(block, dim: int) -> np.ndarray:
    arr = np.array(block, dtype=np.complex128)
    if arr.shape != (dim, dim):
        raise StructuralError(f"block has shape {arr.shape}, expected ({dim}, {dim})")
    arr.setflags(write=False)
    return arr


class AlgebraElement:
    """An element of the algebra: one complex d_b x d_b matrix per block.

    Supports ``+``, ``-``, scalar ``*``, the algebra product ``@`` and the
    involution :meth:`adjoint`.  Equality is bitwise on the block entries.
    """

    __slots__ = ("spec", "blocks")

    def __init__(self, spec: AlgebraSpec, blocks: Sequence):
        if len(blocks) != spec.num_blocks:
            raise StructuralError(
                f"expected {spec.num_blocks} blocks, got {len(blocks)}"
            )
        object.__setattr__(self, "spec", spec)
        object.__setattr__(
            self,
            "blocks",
            tuple(_freeze_block(b, d) for b, d in zip(blocks, spec.block_dims)),
        )

    def __setattr__(self, name, value):
        raise AttributeError("AlgebraElement is immutable")

    def adjoint(self) -> "AlgebraElement":
        """The involution a -> a*: conjugate transpose of every block."""
        return AlgebraElement(self.spec, [b.conj().T for b in self.blocks])

    def __add__(self, other):
        _check_same_spec(self, other)
        return AlgebraElement(self.spec, [a + b for a, b in zip(self.blocks, other.blocks)])

    def __sub__(self, other):
        _check_same_spec(self, other)
        return AlgebraElement(self.spec, [a - b for a, b in zip(self.blocks, other.blocks)])

    def __neg__(self):
        return AlgebraElement(self.spec, [-b for b in self.blocks])

    def __matmul__(self, other):
        """Algebra product: blockwise matrix product."""
        _check_same_spec(self, other)
        return AlgebraElement(self.spec, [a @ b for a, b in zip(self.blocks, other.blocks)])

    def __mul__(self, scalar):
        if isinstance(scalar, Number):
            return AlgebraElement(self.spec, [b * scalar for b in self.blocks])
        return NotImplemented

    __rmul__ = __mul__

    def __eq__(self, other) -> bool:
        if not isinstance(other, AlgebraElement) or self.spec != other.spec:
            return False
        return all(np.array_equal(a, b) for a, b in zip(self.blocks, other.blocks))

    def __repr__(self) -> str:
        return f"AlgebraElement(spec={self.spec!r}, blocks={[b.tolist() for b in self.blocks]})"

    def hermitian_part(self) -> "AlgebraElement":
        return AlgebraElement(
            self.spec, [(b + b.conj().T) / 2.0 for b in self.blocks]
        )


def _check_same_spec(a: AlgebraElement, b: AlgebraElement) -> None:
    if not isinstance(b, AlgebraElement):
        raise StructuralError(f"expected AlgebraElement, got {type(b).__name__}")
    if a.spec != b.spec:
        raise StructuralError(f"algebra specs differ: {a.spec} vs {b.spec}")


def cstar_norm(a: AlgebraElement) -> float:
    """The C*-norm: maximum over blocks of the largest singular value."""
    return max(float(np.linalg.norm(b, 2)) for b in a.blocks)


def is_positive(a: AlgebraElement, tol: float = 1e-8) -> bool:
    """Whether ``a`` is positive within a relative tolerance.

    True iff ``a`` is self-adjoint up to ``tol * max(1, ||a||)`` and every
    eigenvalue of every Hermitized block is at least the negated threshold.
    """
    if tol < 0:
        raise DomainError("tolerance must be nonnegative")
    scale = max(1.0, cstar_norm(a))
    if cstar_norm(a - a.adjoint()) > tol * scale:
        return False
    for b in a.blocks:
        h = (b + b.conj().T) / 2.0
        if float(np.linalg.eigvalsh(h)[0]) < -tol * scale:
            return False
    return True


def loewner_leq(a: AlgebraElement, b: AlgebraElement, tol: float = 1e-8) -> bool:
    """Order comparison a <= b, i.e. b - a is positive within tolerance."""
    _check_same_spec(a, b)
    return is_positive(b - a, tol)


def positive_sqrt(a: AlgebraElement, tol: float = 1e-8) -> AlgebraElement:
    """The positive square root of a positive element.

    Eigenvalues within ``tol * max(1, ||a||)`` below zero are clamped to
    zero; anything more negative raises :class:`DomainError`.
    """
    scale = max(1.0, cstar_norm(a))
    if cstar_norm(a - a.adjoint()) > tol * scale:
        raise DomainError("element is not self-adjoint within tolerance")
    roots = []
    for b in a.blocks:
        h = (b + b.conj().T) / 2.0
        w, u = np.linalg.eigh(h)
        if float(w[0]) < -tol * scale:
            raise DomainError(
                f"element is not positive within tolerance (min eigenvalue {w[0]:.3e})"
            )
        s = (u * np.sqrt(np.clip(w, 0.0, None))) @ u.conj().T
        roots.append((s + s.conj().T) / 2.0)
    return AlgebraElement(a.spec, roots)


def is_minimal_projection(e: AlgebraElement, tol: float = 1e-8) -> bool:
    """Whether ``e`` is a self-adjoint idempotent of total rank one.

    Rank counts eigenvalues above 1/2 across all blocks; a projection has
    spectrum in {0, 1}, so the midpoint threshold is scale-free.
    """
    if cstar_norm(e @ e - e) > tol:
        return False
    if cstar_norm(e - e.adjoint()) > tol:
        return False
    rank = 0
    for b in e.blocks:
        h = (b + b.conj().T) / 2.0
        rank += int(np.count_nonzero(np.linalg.eigvalsh(h) > 0.5))
    return rank == 1
