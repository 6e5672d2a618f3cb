"""Finite frames in the free module: transforms, bounds, duals, reconstruction.

A frame system caches its analysis operator T (x -> {<x, f_n>}), the
synthesis operator theta = T* ({c_n} -> sum c_n f_n) and the frame operator
S = theta o T.  Optimal bounds are the extreme eigenvalues of the realized
frame operator; a lower bound of zero marks a Bessel system that is not a
frame.
"""

from __future__ import annotations

import warnings
from typing import Sequence

import numpy as np

from .algebra import AlgebraElement, AlgebraSpec, cstar_norm
from .errors import DomainError, GenerationError, StructuralError
from .module import (
    ModuleOperator,
    ModuleVector,
    adjoint_op,
    apply,
    compose,
    inner,
    operator_from_realization,
    realize,
)
from .algebra import is_minimal_projection
from . import sampling

__all__ = [
    "FrameSystem",
    "FrameBounds",
    "analysis_operator",
    "synthesis_operator",
    "frame_operator",
    "optimal_frame_bounds",
    "verify_frame",
    "canonical_dual",
    "reconstruct",
    "standard_generator_frame",
    "is_orthonormal_system",
    "random_frame",
]

#: Default threshold separating frames from numerically singular systems.
FRAME_TOL = 1e-8

#: Condition number beyond which dual computations warn about lost accuracy.
ILL_CONDITIONED = 1e12

_NORM_CHECK_SAMPLES = 1000
_NORM_CHECK_SEED = 0x5EEDC57A


class FrameSystem:
    """A finite sequence of module vectors with cached frame operators."""

    __slots__ = ("spec", "module_rank", "vectors", "analysis", "synthesis", "frame_op")

    def __init__(self, vectors: Sequence[ModuleVector]):
        vectors = tuple(vectors)
        if not vectors:
            raise StructuralError("a frame system needs at least one vector")
        spec = vectors[0].spec
        m = vectors[0].rank
        for v in vectors:
            if v.spec != spec or v.rank != m:
                raise StructuralError("frame vectors must share spec and rank")
        analysis = ModuleOperator(
            [[f.entries[i].adjoint() for f in vectors] for i in range(m)]
        )
        synthesis = adjoint_op(analysis)
        object.__setattr__(self, "spec", spec)
        object.__setattr__(self, "module_rank", m)
        object.__setattr__(self, "vectors", vectors)
        object.__setattr__(self, "analysis", analysis)
        object.__setattr__(self, "synthesis", synthesis)
        object.__setattr__(self, "frame_op", compose(synthesis, analysis))

    def __setattr__(self, name, value):
        raise AttributeError("FrameSystem is immutable")

    def __len__(self) -> int:
        return len(self.vectors)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, FrameSystem)
            and self.module_rank == other.module_rank
            and len(self) == len(other)
            and all(a == b for a, b in zip(self.vectors, other.vectors))
        )

    def __repr__(self) -> str:
        return (
            f"FrameSystem(count={len(self)}, module_rank={self.module_rank}, "
            f"spec={self.spec!r})"
        )

    def fingerprint(self) -> str:
        import hashlib

        h = hashlib.sha256()
        h.update(repr(self.spec.block_dims).encode())
        h.update(str(self.module_rank).encode())
        for v in self.vectors:
            h.update(v.fingerprint().encode())
        return h.hexdigest()[:16]


class FrameBounds:
    """A pair of frame bounds with its inequality flavor.

    ``flavor`` is "loewner" (algebra-order inequalities) or "norm"
    (scalar-norm inequalities).  ``is_frame`` is False when the lower bound
    degenerated to zero, i.e. the system is Bessel but not a frame.
    """

    __slots__ = ("lower", "upper", "flavor", "is_frame")

    def __init__(self, lower: float, upper: float, flavor: str = "loewner", is_frame: bool = True):
        if flavor not in ("loewner", "norm"):
            raise StructuralError(f"unknown bound flavor {flavor!r}")
        lower = float(lower)
        upper = float(upper)
        if is_frame and not 0 < lower <= upper:
            raise StructuralError(f"frame bounds need 0 < C <= D, got ({lower}, {upper})")
        if not is_frame and lower != 0.0:
            raise StructuralError("non-frame bounds must carry a zero lower bound")
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)
        object.__setattr__(self, "flavor", flavor)
        object.__setattr__(self, "is_frame", is_frame)

    def __setattr__(self, name, value):
        raise AttributeError("FrameBounds is immutable")

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, FrameBounds)
            and self.lower == other.lower
            and self.upper == other.upper
            and self.flavor == other.flavor
            and self.is_frame == other.is_frame
        )

    def __repr__(self) -> str:
        return (
            f"FrameBounds(lower={self.lower}, upper={self.upper}, "
            f"flavor={self.flavor!r}, is_frame={self.is_frame})"
        )


def analysis_operator(F: FrameSystem) -> ModuleOperator:
    """The transform x -> {<x, f_n>}."""
    return F.analysis


def synthesis_operator(F: FrameSystem) -> ModuleOperator:
    """The adjoint of the analysis operator, {c_n} -> sum c_n f_n."""
    return F.synthesis


def frame_operator(F: FrameSystem) -> ModuleOperator:
    """S = synthesis o analysis, i.e. Sx = sum <x, f_n> f_n."""
    return F.frame_op


def _frame_spectrum(F: FrameSystem) -> tuple[float, float]:
    """Global (min, max) eigenvalue of the realized frame operator."""
    lo, hi = np.inf, -np.inf
    for blk in realize(F.frame_op).blocks:
        w = np.linalg.eigvalsh((blk + blk.conj().T) / 2.0)
        lo = min(lo, float(w[0]))
        hi = max(hi, float(w[-1]))
    return lo, hi


def optimal_frame_bounds(F: FrameSystem, frame_tol: float = FRAME_TOL) -> FrameBounds:
    """The extreme eigenvalues of the realized frame operator.

    A minimum eigenvalue at or below ``frame_tol`` is reported as a zero
    lower bound with ``is_frame=False``.
    """
    lo, hi = _frame_spectrum(F)
    lo = max(lo, 0.0)
    if lo <= frame_tol:
        return FrameBounds(0.0, hi, "loewner", is_frame=False)
    return FrameBounds(lo, hi, "loewner", is_frame=True)


def verify_frame(
    F: FrameSystem,
    lower: float,
    upper: float,
    flavor: str = "loewner",
    tol: float = 1e-8,
) -> bool:
    """Check the two-sided frame inequalities for given bounds.

    The "loewner" flavor decides the algebra-order inequalities exactly via
    blockwise eigenvalue bounds of the frame operator.  The "norm" flavor
    checks the scalar inequalities on a fixed battery of sampled vectors:
    a refutation is sound, acceptance is probabilistic.
    """
    if lower <= 0 or upper <= 0:
        raise DomainError("frame bounds must be positive")
    if flavor == "loewner":
        lo, hi = _frame_spectrum(F)
        return lo >= lower - tol and hi <= upper + tol
    if flavor == "norm":
        rng = np.random.default_rng(_NORM_CHECK_SEED)
        xis = sampling.gaussian_coordinate_batch(
            F.spec, F.module_rank, rng, _NORM_CHECK_SAMPLES
        )
        norm_sq = sampling.batch_norm_sq(xis)
        images = sampling.batch_image(realize(F.analysis).blocks, xis)
        gram_norm = sampling.batch_norm_sq(images)
        if np.any(lower * norm_sq - gram_norm > tol):
            return False
        if np.any(gram_norm - upper * norm_sq > tol):
            return False
        return True
    raise StructuralError(f"unknown bound flavor {flavor!r}")


def _frame_operator_inverse(F: FrameSystem, tol: float) -> tuple[ModuleOperator, float, float]:
    """Invert the frame operator through its realization.

    Raises :class:`DomainError` when the smallest eigenvalue is at or below
    ``tol``; warns when the condition number exceeds 1e12.
    """
    inv_blocks = []
    lo, hi = np.inf, -np.inf
    for blk in realize(F.frame_op).blocks:
        h = (blk + blk.conj().T) / 2.0
        w, u = np.linalg.eigh(h)
        lo = min(lo, float(w[0]))
        hi = max(hi, float(w[-1]))
        inv_blocks.append((w, u))
    if lo <= tol:
        raise DomainError(
            f"not a frame: frame operator is numerically singular (min eig {lo:.3e})"
        )
    if hi / lo > ILL_CONDITIONED:
        warnings.warn(
            f"frame operator condition number {hi / lo:.3e} exceeds {ILL_CONDITIONED:.0e}; "
            "dual and reconstruction accuracy is degraded",
            RuntimeWarning,
        )
    blocks = []
    for w, u in inv_blocks:
        inv = (u / w) @ u.conj().T
        blocks.append((inv + inv.conj().T) / 2.0)
    m = F.module_rank
    return operator_from_realization(F.spec, m, m, blocks), lo, hi


def canonical_dual(F: FrameSystem, tol: float = FRAME_TOL) -> FrameSystem:
    """The dual system obtained by applying the inverse frame operator."""
    s_inv, _, _ = _frame_operator_inverse(F, tol)
    return FrameSystem([apply(s_inv, f) for f in F.vectors])


def reconstruct(F: FrameSystem, x: ModuleVector, tol: float = FRAME_TOL) -> ModuleVector:
    """Expand x against the canonical dual: sum <x, S^-1 f_n> f_n."""
    if x.spec != F.spec or x.rank != F.module_rank:
        raise StructuralError("vector does not live in the frame's module")
    s_inv, _, _ = _frame_operator_inverse(F, tol)
    total = None
    for f in F.vectors:
        term = inner(x, apply(s_inv, f)) * f
        total = term if total is None else total + term
    return total


def standard_generator_frame(spec: AlgebraSpec, m: int) -> FrameSystem:
    """The generators e_1..e_m of A^m; their frame operator is the identity."""
    if m < 1:
        raise StructuralError("module rank must be >= 1")
    unit = spec.unit()
    zero = spec.zero()
    return FrameSystem(
        [ModuleVector([unit if i == j else zero for j in range(m)]) for i in range(m)]
    )


def is_orthonormal_system(vs: Sequence[ModuleVector], tol: float = 1e-8) -> bool:
    """Each <v_i, v_i> a minimal projection, and <v_i, v_j> = 0 off-diagonal."""
    vs = list(vs)
    for i, v in enumerate(vs):
        if not is_minimal_projection(inner(v, v), tol):
            return False
        for w in vs[i + 1 :]:
            if cstar_norm(inner(v, w)) > tol:
                return False
    return True


def random_frame(
    spec: AlgebraSpec,
    m: int,
    count: int,
    seed: int,
    min_lower_bound: float = 0.0,
    max_retries: int = 64,
) -> FrameSystem:
    """A frame of ``count`` vectors with standard complex Gaussian entries.

    Deterministic in (spec, m, count, seed).  When ``min_lower_bound > 0``
    the draw is retried with derived seeds until the realized frame operator
    has minimum eigenvalue at least that bound.
    """
    if count < 1:
        raise StructuralError("a frame system needs at least one vector")
    if m < 1:
        raise StructuralError("module rank must be >= 1")
    for attempt in range(max_retries):
        rng = np.random.default_rng(
            np.random.SeedSequence(entropy=seed, spawn_key=(attempt,))
        )
        vectors = []
        for _ in range(count):
            entries = []
            for _ in range(m):
                blocks = [
                    (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d)))
                    / np.sqrt(2.0)
                    for d in spec.block_dims
                ]
                entries.append(AlgebraElement(spec, blocks))
            vectors.append(ModuleVector(entries))
        F = FrameSystem(vectors)
        if min_lower_bound <= 0.0:
            return F
        lo, _ = _frame_spectrum(F)
        if lo >= min_lower_bound:
            return F
    raise GenerationError(
        f"no frame with lower bound >= {min_lower_bound} after {max_retries} draws "
        f"(spec={spec}, m={m}, count={count}, seed={seed})"
    )
