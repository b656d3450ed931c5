"""Continuous relaxation of CNF assignments.

A continuous assignment is a float vector ``x`` in ``[0, 1]^n`` where
``x[i]`` is read as the probability that variable ``i + 1`` is true.
Under that reading a literal has probability ``x[i]`` (positive) or
``1 - x[i]`` (negated), a clause is satisfied with probability
``1 - prod(1 - p(lit))`` and the fitness is the product over clauses,
treating clauses as independent events.

Note on the operator convention: the OR/AND formulas this method was
published with, ``Y = X1*X2`` for OR and ``Y = X1 + X2 - X1*X2`` for
AND, are the ones you get when ``X`` is the probability of *false*.
The probability-of-true reading is used here because the search stops
when the fitness reaches 1, which only marks satisfaction under it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .formula import CnfFormula

DEFAULT_STAY_PROBABILITY = 1.0 / 3.0
_ONE = np.ones(1)


@dataclass(frozen=True)
class QuantizationGrid:
    """Grid of multiples of ``resolution`` inside ``[0, 1]``.

    ``resolution = mu ** -k`` stands for a precision of ``k`` base-``mu``
    digits; ``resolution = 1`` is the binary grid ``{0, 1}``.
    """

    resolution: float

    def __post_init__(self):
        if not 0.0 < self.resolution <= 1.0:
            raise ValueError(f"grid resolution must lie in (0, 1], got {self.resolution}")

    @classmethod
    def from_digits(cls, digits: int, mu: float = 2.0) -> "QuantizationGrid":
        if digits < 0:
            raise ValueError("digits must be >= 0")
        return cls(float(mu) ** -digits)

    def contains(self, x) -> bool:
        x = np.asarray(x, dtype=float)
        return bool(np.array_equal(quantize(x, self), x))


@dataclass(frozen=True)
class FluxParams:
    delta: float
    stay_probability: float = DEFAULT_STAY_PROBABILITY

    def __post_init__(self):
        if not self.delta > 0:
            raise ValueError("delta must be positive")
        if not 0.0 <= self.stay_probability <= 1.0:
            raise ValueError("stay_probability must lie in [0, 1]")


def as_assignment(values) -> np.ndarray:
    x = np.array(values, dtype=np.float64)
    if x.ndim != 1:
        raise ValueError("assignment must be one-dimensional")
    if np.any((x < 0.0) | (x > 1.0)) or np.any(np.isnan(x)):
        raise ValueError("assignment components must lie in [0, 1]")
    return x


def embed(binary) -> np.ndarray:
    """Boolean vector -> corner of the unit cube."""
    return np.asarray(binary, dtype=bool).astype(np.float64)


def clause_probabilities(formula: CnfFormula, x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (formula.num_variables,):
        raise ValueError(
            f"assignment has length {x.size}, formula has {formula.num_variables} variables"
        )
    index, offset, sign = formula.false_probability_terms
    # sentinel 1.0 at position n: pad cells are negated, so their
    # probability-of-false factor is exactly 1
    extended = np.concatenate((x, _ONE))
    p_false = offset + sign * extended[index]
    return 1.0 - np.multiply.reduce(p_false, axis=1)


def eval_fitness(formula: CnfFormula, x) -> float:
    """Smooth fitness in [0, 1]; 1 exactly at satisfying corners."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (formula.num_variables,):
        raise ValueError(
            f"assignment has length {x.size}, formula has {formula.num_variables} variables"
        )
    return float(_kernels.fitness(x, *formula.false_probability_terms))


def quantize(x, grid: QuantizationGrid | float) -> np.ndarray:
    """Round each component to the nearest multiple of the grid step.

    Ties round up; the result is clamped to ``[0, 1]``.
    """
    g = grid.resolution if isinstance(grid, QuantizationGrid) else float(grid)
    if not 0.0 < g <= 1.0:
        raise ValueError(f"grid resolution must lie in (0, 1], got {g}")
    x = np.asarray(x, dtype=np.float64)
    return np.clip(np.floor(x / g + 0.5) * g, 0.0, 1.0)


def apply_moves(x, delta: float, moves) -> np.ndarray:
    """Shift ``x`` by ``delta * moves`` (moves in {-1, 0, +1}) and clamp."""
    x = np.asarray(x, dtype=np.float64)
    moves = np.asarray(moves)
    out = x + delta * moves
    np.minimum(out, 1.0, out=out)
    np.maximum(out, 0.0, out=out)
    return out


def draw_moves(n: int, stay_probability: float, rng: np.random.Generator) -> np.ndarray:
    u = rng.random(n)
    up = stay_probability + (1.0 - stay_probability) / 2.0
    moves = np.zeros(n, dtype=np.int8)
    moves[(u >= stay_probability) & (u < up)] = 1
    moves[u >= up] = -1
    return moves


def flux(x, params: FluxParams, rng: np.random.Generator) -> np.ndarray:
    """Random perturbation: each component stays, or moves by +delta or -delta."""
    x = np.asarray(x, dtype=np.float64)
    moves = draw_moves(x.size, params.stay_probability, rng)
    return apply_moves(x, params.delta, moves)


def to_binary(x) -> np.ndarray:
    """Round to the nearest corner, 0.5 going to true."""
    return np.asarray(x, dtype=np.float64) >= 0.5
