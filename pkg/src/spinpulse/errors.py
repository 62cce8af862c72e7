"""Systematic-error models and deterministic ensemble distributions.

Two systematic error channels are modeled:

* a fractional amplitude error ``epsilon`` (field inhomogeneity or
  miscalibration), uniform across a whole sequence for a given ensemble
  member, scaling every pulse angle by ``1 + epsilon``;
* per-phase-channel offsets: each programmed nominal phase value may
  carry its own miscalibration ``dphi``, applied to every pulse whose
  nominal phase matches that channel.

Ensembles over ``epsilon`` (and optionally over detuning) are evaluated
with deterministic quadrature - Gauss-Hermite for Gaussian weights,
Gauss-Legendre for uniform ones - so that every downstream number is
bit-reproducible.  A seeded Monte Carlo sampler exists for cross-checks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Union

import numpy as np

from .sequence import Pulse
from .su2 import RotationSpec

__all__ = [
    "Gaussian",
    "Uniform",
    "Discrete",
    "Distribution",
    "DELTA_ZERO",
    "ErrorModel",
    "NO_ERROR",
    "EnsembleSpec",
    "PHASE_MATCH_TOL",
    "apply_error",
    "ensemble_nodes",
    "monte_carlo_nodes",
]

# A pulse phase matches an offset channel when within this tolerance (rad).
PHASE_MATCH_TOL = 1e-9

WEIGHT_SUM_TOL = 1e-12


@dataclass(frozen=True)
class Gaussian:
    mean: float
    sigma: float

    def __post_init__(self):
        if not (math.isfinite(self.mean) and math.isfinite(self.sigma)):
            raise ValueError("Gaussian parameters must be finite")
        if self.sigma < 0:
            raise ValueError("Gaussian sigma must be >= 0")


@dataclass(frozen=True)
class Uniform:
    lo: float
    hi: float

    def __post_init__(self):
        if not (math.isfinite(self.lo) and math.isfinite(self.hi)):
            raise ValueError("Uniform bounds must be finite")
        if self.lo > self.hi:
            raise ValueError("Uniform requires lo <= hi")


@dataclass(frozen=True)
class Discrete:
    """Weighted atoms; weights must be positive and sum to 1 within 1e-12."""

    atoms: tuple[tuple[float, float], ...]

    def __post_init__(self):
        atoms = tuple((float(v), float(w)) for v, w in self.atoms)
        if not atoms:
            raise ValueError("Discrete needs at least one atom")
        for v, w in atoms:
            if not (math.isfinite(v) and math.isfinite(w)):
                raise ValueError("Discrete atoms must be finite")
            if w <= 0:
                raise ValueError("Discrete weights must be positive")
        total = math.fsum(w for _, w in atoms)
        if abs(total - 1.0) > WEIGHT_SUM_TOL:
            raise ValueError("Discrete weights must sum to 1 within 1e-12")
        object.__setattr__(self, "atoms", atoms)


Distribution = Union[Gaussian, Uniform, Discrete]

DELTA_ZERO = Discrete(((0.0, 1.0),))


@dataclass(frozen=True)
class ErrorModel:
    """Systematic errors: amplitude error plus per-channel phase offsets.

    ``phase_offsets`` maps nominal phase values (rad) to their offsets
    (rad); it accepts a mapping or an iterable of pairs and is stored as
    a sorted tuple.  Offsets must satisfy ``|dphi| < pi/2`` and the
    amplitude error ``|epsilon| < 1``.
    """

    epsilon: float = 0.0
    phase_offsets: tuple[tuple[float, float], ...] = ()

    def __post_init__(self):
        if not math.isfinite(self.epsilon) or abs(self.epsilon) >= 1.0:
            raise ValueError("epsilon must be finite with |epsilon| < 1")
        raw = self.phase_offsets
        pairs = raw.items() if isinstance(raw, Mapping) else raw
        offsets = tuple(sorted((float(p), float(d)) for p, d in pairs))
        for p, d in offsets:
            if not (math.isfinite(p) and math.isfinite(d)):
                raise ValueError("phase offsets must be finite")
            if abs(d) >= math.pi / 2:
                raise ValueError("phase offsets must satisfy |dphi| < pi/2")
        object.__setattr__(self, "phase_offsets", offsets)

    def offset_for(self, phi: float) -> float:
        """Offset of the phase channel matching ``phi``, or 0 if none does."""
        for nominal, delta in self.phase_offsets:
            if abs(nominal - phi) <= PHASE_MATCH_TOL:
                return delta
        return 0.0


NO_ERROR = ErrorModel()


def apply_error(p: Pulse, e: ErrorModel) -> RotationSpec:
    """Turn a nominal pulse into the rotation it actually performs.

    The nominal angle is kept (the amplitude error lives in the spec's
    ``epsilon``) and the phase picks up the offset of its channel, if any.
    """
    return RotationSpec(theta=p.theta, phi=p.phi + e.offset_for(p.phi), epsilon=e.epsilon)


@dataclass(frozen=True)
class EnsembleSpec:
    """Distributions over amplitude error and detuning, plus node count.

    ``nodes`` is the quadrature order used per continuous distribution;
    ``Discrete`` distributions contribute their atoms regardless of it.
    """

    epsilon_dist: Distribution
    detuning_dist: Distribution = DELTA_ZERO
    nodes: int = 41

    def __post_init__(self):
        if not isinstance(self.nodes, int) or self.nodes < 1:
            raise ValueError("node count must be an integer >= 1")


def _dist_nodes(dist: Distribution, n: int) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(dist, Discrete):
        values = np.array([v for v, _ in dist.atoms])
        weights = np.array([w for _, w in dist.atoms])
        return values, weights
    if isinstance(dist, Gaussian):
        x, w = np.polynomial.hermite.hermgauss(n)
        return dist.mean + math.sqrt(2.0) * dist.sigma * x, w / math.sqrt(math.pi)
    if isinstance(dist, Uniform):
        x, w = np.polynomial.legendre.leggauss(n)
        mid = 0.5 * (dist.hi + dist.lo)
        half = 0.5 * (dist.hi - dist.lo)
        return mid + half * x, w / 2.0
    raise TypeError(f"unknown distribution {dist!r}")


def ensemble_nodes(spec: EnsembleSpec) -> list[tuple[float, float, float]]:
    """Deterministic (epsilon, delta, weight) nodes for an ensemble.

    The product grid of the two marginal node sets, epsilon-major, with
    weights multiplying; the weights sum to 1 within 1e-10.
    """
    evals, ewts = _dist_nodes(spec.epsilon_dist, spec.nodes)
    dvals, dwts = _dist_nodes(spec.detuning_dist, spec.nodes)
    return [
        (float(e), float(d), float(we * wd))
        for e, we in zip(evals, ewts)
        for d, wd in zip(dvals, dwts)
    ]


def _dist_samples(dist: Distribution, count: int, rng: np.random.Generator) -> np.ndarray:
    if isinstance(dist, Discrete):
        values = np.array([v for v, _ in dist.atoms])
        weights = np.array([w for _, w in dist.atoms])
        return rng.choice(values, size=count, p=weights / weights.sum())
    if isinstance(dist, Gaussian):
        return rng.normal(dist.mean, dist.sigma, size=count)
    if isinstance(dist, Uniform):
        return rng.uniform(dist.lo, dist.hi, size=count)
    raise TypeError(f"unknown distribution {dist!r}")


def monte_carlo_nodes(
    spec: EnsembleSpec, count: int, seed: int = 0
) -> list[tuple[float, float, float]]:
    """Seeded equal-weight samples; cross-check companion to the quadrature."""
    if count < 1:
        raise ValueError("sample count must be >= 1")
    rng = np.random.default_rng(seed)
    eps = _dist_samples(spec.epsilon_dist, count, rng)
    dlt = _dist_samples(spec.detuning_dist, count, rng)
    w = 1.0 / count
    return [(float(e), float(d), w) for e, d in zip(eps, dlt)]
