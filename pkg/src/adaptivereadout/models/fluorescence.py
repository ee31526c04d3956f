"""Discretized continuous-time fluorescence models with Poisson photon counts.

A rate model describes a set of atomic levels with a rate matrix ``Q``
(column ``s'`` holds the rates out of ``s'``, diagonal = minus the total
departure rate) and a detected-photon rate per level. Integrating over one
step of length ``dt`` gives the step kernel
``U[s, o, s'] = J(o | s, s') * R(s | s')`` with ``R = exp(Q dt)`` and ``J``
the photon-count distribution collected during the step.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from typing import Any, Dict, Optional, Tuple

import numpy as np
from scipy.linalg import expm
from scipy.stats import poisson

from adaptivereadout.core.errors import ModelValidationError, NumericError
from adaptivereadout.structs.permutation import Permutation

logger = logging.getLogger(__name__)

DEFAULT_N_MAX = 15
DEFAULT_QUAD_POINTS = 32
RATE_TOL = 1e-9
CLAMP_TOL = 1e-12
EXP_COLUMN_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class RateModel:
    """Continuous-time level structure sampled in steps of ``dt``.

    Attributes:
        rate_matrix: Q in 1/s, columns sum to 0
        emission_rates: Detected photons per second for each level
        dt: Step duration in seconds
        n_max: Photon count at which the output is capped
        prior: Distribution over levels at the start of the readout
        quad_points: Midpoint nodes for the transition-time mixture
        state_labels: Optional level names
        permutations: Named level permutations (e.g. the shelving pulse ``tau``)
    """

    rate_matrix: np.ndarray
    emission_rates: np.ndarray
    dt: float
    n_max: int = DEFAULT_N_MAX
    prior: Optional[np.ndarray] = None
    quad_points: int = DEFAULT_QUAD_POINTS
    state_labels: Optional[Tuple[str, ...]] = None
    permutations: Dict[str, Tuple[int, ...]] = field(default_factory=dict)

    def __post_init__(self) -> None:
        q = np.array(self.rate_matrix, dtype=float)
        rates = np.array(self.emission_rates, dtype=float)
        size = q.shape[0] if q.ndim == 2 else 0
        prior = (
            np.full(size, 1.0 / max(size, 1))
            if self.prior is None
            else np.array(self.prior, dtype=float)
        )
        for arr in (q, rates, prior):
            arr.setflags(write=False)
        object.__setattr__(self, "rate_matrix", q)
        object.__setattr__(self, "emission_rates", rates)
        object.__setattr__(self, "prior", prior)
        self._validate()

    def _validate(self) -> None:
        q = self.rate_matrix
        if q.ndim != 2 or q.shape[0] != q.shape[1] or q.shape[0] < 1:
            raise ModelValidationError(f"rate matrix must be square, got shape {q.shape}")
        size = q.shape[0]
        off = q - np.diag(np.diag(q))
        negative = np.argwhere(off < 0)
        if negative.size:
            row, col = (int(v) for v in negative[0])
            raise ModelValidationError(f"negative rate {q[row, col]!r} at Q[{row}, {col}]")
        sums = q.sum(axis=0)
        scale = np.maximum(np.abs(np.diag(q)), 1.0)
        bad = np.flatnonzero(np.abs(sums) > RATE_TOL * scale)
        if bad.size:
            raise ModelValidationError(
                f"rate matrix column {int(bad[0])} sums to {sums[bad[0]]!r}, expected 0"
            )
        if self.emission_rates.shape != (size,):
            raise ModelValidationError(f"expected {size} emission rates")
        if np.any(self.emission_rates < 0):
            raise ModelValidationError("emission rates must be >= 0")
        if not self.dt > 0:
            raise ModelValidationError(f"dt must be > 0, got {self.dt!r}")
        if self.n_max < 1:
            raise ModelValidationError(f"n_max must be >= 1, got {self.n_max}")
        if self.quad_points < 1:
            raise ModelValidationError(f"quad_points must be >= 1, got {self.quad_points}")
        if self.prior.shape != (size,) or np.any(self.prior < 0):
            raise ModelValidationError("prior must be a nonnegative vector over the levels")
        if abs(self.prior.sum() - 1.0) > 1e-9:
            raise ModelValidationError(f"prior sums to {self.prior.sum()!r}, expected 1")
        if self.state_labels is not None and len(self.state_labels) != size:
            raise ModelValidationError(f"expected {size} state labels")

    @property
    def num_states(self) -> int:
        return int(self.rate_matrix.shape[0])

    @property
    def num_outputs(self) -> int:
        return self.n_max + 1

    def with_dt(self, dt: float) -> RateModel:
        """Same levels sampled with a different step duration."""
        return replace(self, dt=dt)

    @classmethod
    def from_json(cls, data: Dict[str, Any]) -> RateModel:
        """Create a RateModel from its JSON form.

        ``dt_us`` is given in microseconds. Named permutations are either
        index arrays under ``permutations`` or transposition lists under
        ``<name>_swaps``, composed in list order.

        Raises:
            ModelValidationError: On missing fields or invalid values
        """
        try:
            q = np.array(data["Q"], dtype=float)
            size = q.shape[0]
            perms: Dict[str, Tuple[int, ...]] = {
                str(k): tuple(int(v) for v in p) for k, p in data.get("permutations", {}).items()
            }
            for key, swaps in data.items():
                if key.endswith("_swaps"):
                    name = key[: -len("_swaps")]
                    perms[name] = Permutation.from_swaps(size, swaps, name).mapping
            labels = data.get("states")
            return cls(
                rate_matrix=q,
                emission_rates=np.array(data["emission_rates"], dtype=float),
                dt=float(data["dt_us"]) * 1e-6,
                n_max=int(data.get("n_max", DEFAULT_N_MAX)),
                prior=None if data.get("prior") is None else np.array(data["prior"], dtype=float),
                quad_points=int(data.get("quad_points", DEFAULT_QUAD_POINTS)),
                state_labels=None if labels is None else tuple(str(s) for s in labels),
                permutations=perms,
            )
        except (KeyError, TypeError, ValueError) as e:
            if isinstance(e, ModelValidationError):
                raise
            raise ModelValidationError(f"invalid rate model document: {e}") from e

    def to_json(self) -> Dict[str, Any]:
        data: Dict[str, Any] = {
            "Q": self.rate_matrix.tolist(),
            "emission_rates": self.emission_rates.tolist(),
            "dt_us": self.dt * 1e6,
            "n_max": self.n_max,
            "prior": self.prior.tolist(),
            "quad_points": self.quad_points,
            "permutations": {k: list(v) for k, v in self.permutations.items()},
        }
        if self.state_labels is not None:
            data["states"] = list(self.state_labels)
        return data


def matrix_exp(rate_matrix: np.ndarray, dt: float) -> np.ndarray:
    """Column-stochastic transition matrix ``exp(Q dt)``.

    Entries in [-1e-12, 0) from round-off are clamped to 0.

    Raises:
        NumericError: If the exponential fails, has larger negative entries,
            or a column sum is off by more than 1e-10
    """
    try:
        result = expm(np.asarray(rate_matrix, dtype=float) * dt)
    except (ValueError, np.linalg.LinAlgError) as e:
        raise NumericError(f"matrix exponential failed: {e}") from e
    if not np.all(np.isfinite(result)):
        raise NumericError("matrix exponential produced non-finite entries")
    if np.any(result < -CLAMP_TOL):
        row, col = (int(v) for v in np.argwhere(result < -CLAMP_TOL)[0])
        raise NumericError(f"exp(Q dt) has negative entry {result[row, col]!r} at [{row}, {col}]")
    result[result < 0] = 0.0
    sums = result.sum(axis=0)
    bad = np.flatnonzero(np.abs(sums - 1.0) > EXP_COLUMN_TOL)
    if bad.size:
        raise NumericError(f"exp(Q dt) column {int(bad[0])} sums to {sums[bad[0]]!r}")
    return result


def _truncated_poisson(means: np.ndarray, n_max: int) -> np.ndarray:
    """Poisson pmfs for several means with the tail folded into ``n_max``.

    Returns an array of shape (len(means), n_max + 1).
    """
    counts = np.arange(n_max)
    dist = np.zeros((len(means), n_max + 1))
    positive = means > 0
    dist[~positive, 0] = 1.0
    if np.any(positive):
        mu = means[positive][:, None]
        dist[positive, :n_max] = poisson.pmf(counts[None, :], mu)
        dist[positive, n_max] = poisson.sf(n_max - 1, mu[:, 0])
    return dist


def photon_distribution(
    rate_from: float,
    rate_to: float,
    dt: float,
    n_max: int,
    quad_points: int = DEFAULT_QUAD_POINTS,
) -> np.ndarray:
    """Distribution of photon counts collected during one step.

    With equal rates this is Poisson(rate * dt). Otherwise the level changes
    at a time ``t`` uniform in (0, dt) and the count is Poisson with mean
    ``rate_from * t + rate_to * (dt - t)``, averaged over ``quad_points``
    midpoint nodes. Counts of ``n_max`` or more are reported as ``n_max``.

    Args:
        rate_from: Photon rate of the starting level (1/s)
        rate_to: Photon rate of the final level (1/s)
        dt: Step duration (s)
        n_max: Output cap
        quad_points: Number of midpoint quadrature nodes

    Returns:
        Probability vector of length ``n_max + 1``
    """
    if rate_from < 0 or rate_to < 0 or dt <= 0 or n_max < 1 or quad_points < 1:
        raise ModelValidationError(
            f"invalid photon distribution arguments: rates ({rate_from}, {rate_to}), "
            f"dt {dt}, n_max {n_max}, quad_points {quad_points}"
        )
    if rate_from == rate_to:
        return _truncated_poisson(np.array([rate_from * dt]), n_max)[0]
    nodes = (np.arange(quad_points) + 0.5) * dt / quad_points
    means = rate_from * nodes + rate_to * (dt - nodes)
    return _truncated_poisson(means, n_max).mean(axis=0)


def step_kernel(model: RateModel, quad_points: Optional[int] = None) -> np.ndarray:
    """Joint next-level / photon-count kernel of one step.

    Returns:
        Array ``U`` of shape (|S|, n_max + 1, |S|) with
        ``U[s, o, s'] = J(o | s, s') * R(s | s')``
    """
    points = model.quad_points if quad_points is None else quad_points
    trans = matrix_exp(model.rate_matrix, model.dt)
    size = model.num_states
    kernel = np.zeros((size, model.num_outputs, size))
    for src in range(size):
        for dest in range(size):
            if trans[dest, src] == 0.0:
                continue
            counts = photon_distribution(
                model.emission_rates[src],
                model.emission_rates[dest],
                model.dt,
                model.n_max,
                points,
            )
            kernel[dest, :, src] = counts * trans[dest, src]
    logger.debug("step kernel: %d levels, dt=%.4g s, n_max=%d", size, model.dt, model.n_max)
    return kernel
