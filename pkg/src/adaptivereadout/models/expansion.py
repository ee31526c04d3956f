"""Expanded-state HMMs whose states remember the last output."""

from __future__ import annotations

from typing import Dict, Optional, Sequence, Tuple

import numpy as np

from adaptivereadout.core.errors import ModelValidationError
from adaptivereadout.core.types import CountRange, ExpandedHmm, Hmm
from adaptivereadout.models.fluorescence import RateModel, step_kernel


def assemble_expanded(
    kernel: np.ndarray,
    joint_prior: np.ndarray,
    bins: Optional[Sequence[CountRange]] = None,
    permutations: Optional[Dict[str, Tuple[int, ...]]] = None,
    physical_labels: Optional[Sequence[str]] = None,
) -> ExpandedHmm:
    """Build the expanded model from a step kernel and a prior over (s, o).

    Args:
        kernel: ``U[s, o, s']``, shape (|S|, |Y|, |S|)
        joint_prior: Prior over pairs, shape (|S|, |Y|)
        bins: Raw-count range of each output, if outputs are bins
        permutations: Named physical permutations
        physical_labels: Optional level names
    """
    size, outputs, size_src = kernel.shape
    if size != size_src:
        raise ModelValidationError(f"step kernel must have shape (S, Y, S), got {kernel.shape}")
    if joint_prior.shape != (size, outputs):
        raise ModelValidationError(f"prior must have shape {(size, outputs)}")
    # trans[(s, o), (s', o')] = U[s, o, s'] for every remembered o'
    trans = np.repeat(kernel.reshape(size * outputs, size), outputs, axis=1)
    out = np.tile(np.eye(outputs), size)
    expanded_labels = None
    if physical_labels is not None:
        expanded_labels = tuple(f"{s}|{o}" for s in physical_labels for o in range(outputs))
    hmm = Hmm(trans=trans, out=out, prior=joint_prior.reshape(-1), state_labels=expanded_labels)
    index = np.arange(size * outputs)
    return ExpandedHmm(
        hmm=hmm,
        num_physical=size,
        alpha=index // outputs,
        rho=index % outputs,
        bins=None if bins is None else tuple(bins),
        permutations=dict(permutations or {}),
        physical_labels=None if physical_labels is None else tuple(physical_labels),
    )


def expand(
    kernel: np.ndarray,
    prior: np.ndarray,
    permutations: Optional[Dict[str, Tuple[int, ...]]] = None,
    physical_labels: Optional[Sequence[str]] = None,
) -> ExpandedHmm:
    """Expanded model with the physical prior placed at remembered output 0.

    Args:
        kernel: Step kernel ``U[s, o, s']``
        prior: Distribution over physical levels

    Returns:
        ExpandedHmm over ``|S| * |Y|`` states with deterministic outputs
    """
    prior = np.asarray(prior, dtype=float)
    size, outputs, _ = kernel.shape
    if prior.shape != (size,):
        raise ModelValidationError(f"prior must have length {size}, got {prior.shape}")
    joint = np.zeros((size, outputs))
    joint[:, 0] = prior
    return assemble_expanded(kernel, joint, None, permutations, physical_labels)


def expand_rate_model(model: RateModel, quad_points: Optional[int] = None) -> ExpandedHmm:
    """Integrate a rate model over one step and expand it."""
    return expand(
        step_kernel(model, quad_points),
        model.prior,
        model.permutations,
        model.state_labels,
    )


def step_kernel_of(model: ExpandedHmm) -> np.ndarray:
    """Recover ``U[s, o, s']`` from an expanded model.

    Raises:
        ModelValidationError: If the model has no output memory or its
            transitions depend on the remembered output
    """
    if model.rho is None:
        raise ModelValidationError("model has no output memory")
    size, outputs = model.num_physical, model.num_outputs
    blocks = np.asarray(model.trans).reshape(size * outputs, size, outputs)
    spread = np.abs(blocks - blocks[:, :, :1]).max()
    if spread > 1e-12:
        raise ModelValidationError(
            f"transitions depend on the remembered output (max difference {spread:.3g})"
        )
    return blocks[:, :, 0].reshape(size, outputs, size)
