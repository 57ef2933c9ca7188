"""Region-adaptive hierarchical transform (weighted Haar butterflies) and quantizers.

The transform walks the 3J bit-levels of the Morton codes bottom-up.  At each
level, adjacent survivors whose codes agree on all bits above the level are
siblings: an orthonormal 2x2 butterfly replaces them with a low-pass value
(kept at the left row, carrying the pair onward) and a high-pass value
(finalized at the right row).  Weights count how many original voxels each
survivor covers; they drive both the butterfly angles and the serialization
order of the coefficients, and the decoder can recompute them from geometry
alone.  After the top level a single low-pass value remains: sqrt(sum of
weights) times the weighted mean of the input rows.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import VoxelSet
from .errors import ConsistencyError, EmptySetError, ParameterError

MIDSTEP = "midstep"
MIDRISE = "midrise"


def round_half_away(values) -> np.ndarray:
    """Round to nearest integer, halves away from zero (np.round is banker's)."""
    values = np.asarray(values, dtype=np.float64)
    return np.floor(np.abs(values) + 0.5) * np.sign(values)


def quantize(values, step: float, mode: str) -> np.ndarray:
    """Uniform scalar quantization, reconstruction included.

    midstep reproduces integer multiples of the step (0 is a level); midrise
    reproduces half-integer multiples (levels straddle 0).
    """
    step = float(step)
    if not (step > 0.0):
        raise ParameterError(f"step must be positive, got {step}")
    values = np.asarray(values, dtype=np.float64)
    if mode == MIDSTEP:
        return round_half_away(values / step) * step
    if mode == MIDRISE:
        return (round_half_away(values / step - 0.5) + 0.5) * step
    raise ParameterError(f"unknown quantizer mode {mode!r}")


def quantize_indices(values, step: float) -> np.ndarray:
    """Midstep quantizer bin indices (the integers the entropy coder sees)."""
    step = float(step)
    if not (step > 0.0):
        raise ParameterError(f"step must be positive, got {step}")
    return round_half_away(np.asarray(values, dtype=np.float64) / step).astype(np.int64)


def dequantize_indices(indices, step: float) -> np.ndarray:
    return np.asarray(indices, dtype=np.float64) * float(step)


@dataclass(frozen=True)
class _PlanLevel:
    """One bit-level of the transform: survivors and their sibling pairings."""

    indices: np.ndarray   # original rows surviving into this level
    weights: np.ndarray   # covered-voxel counts, aligned with indices
    flags: np.ndarray     # flags[p]: indices[p] and indices[p+1] are siblings
    left_rows: np.ndarray
    right_rows: np.ndarray
    left_weights: np.ndarray
    right_weights: np.ndarray


@dataclass(frozen=True)
class RahtPlan:
    """Precomputed pairing schedule for one voxel geometry (reusable across frames)."""

    depth: int
    n: int
    levels: tuple


def raht_plan(voxel_set, depth: int | None = None) -> RahtPlan:
    """Build the level-by-level pairing schedule from sorted unique Morton codes."""
    if isinstance(voxel_set, VoxelSet):
        codes = voxel_set.codes
        depth = voxel_set.depth
    else:
        if depth is None:
            raise ParameterError("depth is required when passing raw codes")
        codes = np.asarray(voxel_set, dtype=np.int64)
    n = int(codes.size)
    if n == 0:
        raise EmptySetError("cannot build a transform plan for an empty voxel set")
    if n > 1 and not np.all(codes[1:] > codes[:-1]):
        raise ConsistencyError("voxel codes must be strictly increasing")

    top = np.int64(1) << (3 * depth)
    indices = np.arange(n, dtype=np.int64)
    levels = []
    for level in range(1, 3 * depth + 1):
        if level > 1:
            drop = np.concatenate([[False], levels[-1].flags])
            indices = indices[~drop]
        weights = np.diff(indices, append=n)
        lcodes = codes[indices]
        if indices.size > 1:
            diff = lcodes[:-1] ^ lcodes[1:]
            mask = top - (np.int64(1) << level)
            flags = (diff & mask) == 0
        else:
            flags = np.zeros(0, dtype=bool)
        # adjacent pairs can never chain (at most two survivors share a cell)
        assert not np.any(flags[:-1] & flags[1:]), "overlapping sibling pairs"
        levels.append(
            _PlanLevel(
                indices=indices,
                weights=weights,
                flags=flags,
                left_rows=indices[:-1][flags],
                right_rows=indices[1:][flags],
                left_weights=weights[:-1][flags],
                right_weights=weights[1:][flags],
            )
        )
    return RahtPlan(depth=int(depth), n=n, levels=tuple(levels))


@dataclass(frozen=True)
class CoefficientBlock:
    """Transformed attribute rows plus the propagated weight of each row."""

    coefficients: np.ndarray
    weights: np.ndarray


def _as_plan(geometry) -> RahtPlan:
    if isinstance(geometry, RahtPlan):
        return geometry
    return raht_plan(geometry)


def _as_matrix(values, n: int, what: str) -> np.ndarray:
    arr = np.array(values, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr.reshape(-1, 1)
    if arr.ndim != 2 or arr.shape[0] != n:
        raise ConsistencyError(f"{what} must have one row per voxel ({n}), got {arr.shape}")
    return arr


def raht_forward(geometry, attributes) -> CoefficientBlock:
    """Transform attribute rows over the voxel geometry (VoxelSet or RahtPlan).

    Returns the coefficient rows in voxel order together with the propagated
    weights.  The map is orthonormal, so energies are preserved exactly.
    """
    plan = _as_plan(geometry)
    ta = _as_matrix(attributes, plan.n, "attributes")
    weights = np.ones(plan.n, dtype=np.int64)
    for level in plan.levels:
        i0, i1 = level.left_rows, level.right_rows
        if i0.size == 0:
            continue
        w0 = level.left_weights.astype(np.float64)
        w1 = level.right_weights.astype(np.float64)
        # the plan's per-level weights and the running update must agree
        assert np.array_equal(weights[i0], level.left_weights)
        assert np.array_equal(weights[i1], level.right_weights)
        a = np.sqrt(w0 / (w0 + w1))[:, None]
        b = np.sqrt(w1 / (w0 + w1))[:, None]
        x0 = ta[i0]
        x1 = ta[i1]
        ta[i0] = a * x0 + b * x1
        ta[i1] = -b * x0 + a * x1
        weights[i0] += weights[i1]
        weights[i1] = weights[i0]
    return CoefficientBlock(coefficients=ta, weights=weights)


def raht_inverse(geometry, coefficients) -> np.ndarray:
    """Invert :func:`raht_forward`: coefficient rows back to attribute rows."""
    plan = _as_plan(geometry)
    if isinstance(coefficients, CoefficientBlock):
        coefficients = coefficients.coefficients
    ta = _as_matrix(coefficients, plan.n, "coefficients")
    for level in reversed(plan.levels):
        i0, i1 = level.left_rows, level.right_rows
        if i0.size == 0:
            continue
        w0 = level.left_weights.astype(np.float64)
        w1 = level.right_weights.astype(np.float64)
        a = np.sqrt(w0 / (w0 + w1))[:, None]
        b = np.sqrt(w1 / (w0 + w1))[:, None]
        x0 = ta[i0]
        x1 = ta[i1]
        ta[i0] = a * x0 - b * x1
        ta[i1] = b * x0 + a * x1
    return ta


def transform_weights(geometry) -> np.ndarray:
    """Propagated weights only (what a decoder derives from geometry alone)."""
    plan = _as_plan(geometry)
    weights = np.ones(plan.n, dtype=np.int64)
    for level in plan.levels:
        i0, i1 = level.left_rows, level.right_rows
        if i0.size == 0:
            continue
        weights[i0] += weights[i1]
        weights[i1] = weights[i0]
    return weights


def serialize_order(block) -> np.ndarray:
    """Permutation putting coefficients in decreasing-weight order.

    Stable: ties keep ascending row order, so encoder and decoder derive the
    same permutation from the weights alone.  Accepts a CoefficientBlock or a
    bare weight vector.
    """
    weights = block.weights if isinstance(block, CoefficientBlock) else np.asarray(block)
    return np.argsort(-np.asarray(weights, dtype=np.int64), kind="stable")
