"""Ground truth for tests and benchmarks: exhaustive solving and instance generation."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .formula import CnfFormula

MAX_BRUTE_FORCE_VARIABLES = 30
_CHUNK_BITS = 16


@dataclass(frozen=True)
class InstanceSpec:
    num_variables: int
    num_clauses: int
    clause_width: int = 3
    seed: int = 0
    require_satisfiable: bool = True

    def __post_init__(self):
        if self.num_variables < 1:
            raise ValueError("num_variables must be >= 1")
        if self.num_clauses < 0:
            raise ValueError("num_clauses must be >= 0")
        if not 1 <= self.clause_width <= self.num_variables:
            raise ValueError(
                f"clause width k={self.clause_width} must lie in [1, n={self.num_variables}]"
            )
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")


def brute_force_solve(formula: CnfFormula) -> Optional[np.ndarray]:
    """Lexicographically smallest model (x1 most significant, false < true), or None if UNSAT."""
    n = formula.num_variables
    if n > MAX_BRUTE_FORCE_VARIABLES:
        raise ValueError(f"brute force is limited to {MAX_BRUTE_FORCE_VARIABLES} variables, got {n}")
    clauses = formula.to_ints()
    total = 1 << n
    chunk = 1 << min(n, _CHUNK_BITS)
    for start in range(0, total, chunk):
        codes = np.arange(start, start + chunk, dtype=np.int64)
        # bits[i] is the value of variable i+1 for every code in the chunk
        bits = [((codes >> (n - 1 - i)) & 1).astype(bool) for i in range(n)]
        ok = np.ones(chunk, dtype=bool)
        for clause in clauses:
            sat = np.zeros(chunk, dtype=bool)
            for lit in clause:
                v = bits[abs(lit) - 1]
                sat |= v if lit > 0 else ~v
            ok &= sat
            if not ok.any():
                break
        hits = np.flatnonzero(ok)
        if hits.size:
            code = start + int(hits[0])
            return np.array([(code >> (n - 1 - i)) & 1 for i in range(n)], dtype=bool)
    return None


def planted_assignment(spec: InstanceSpec) -> np.ndarray:
    """The hidden model :func:`generate_random_ksat` plants for ``spec``."""
    rng = np.random.default_rng(spec.seed)
    return rng.integers(0, 2, size=spec.num_variables).astype(bool)


def generate_random_ksat(spec: InstanceSpec) -> CnfFormula:
    """Uniform random k-SAT, or planted k-SAT when ``require_satisfiable``.

    Planted clauses are resampled until the hidden assignment satisfies
    them, which biases the distribution towards that assignment.
    """
    rng = np.random.default_rng(spec.seed)
    # drawn unconditionally so the stream layout does not depend on the flag
    hidden = rng.integers(0, 2, size=spec.num_variables).astype(bool)
    n, k = spec.num_variables, spec.clause_width
    clauses = []
    for _ in range(spec.num_clauses):
        while True:
            variables = rng.choice(n, size=k, replace=False)
            negated = rng.random(k) < 0.5
            if not spec.require_satisfiable or np.any(hidden[variables] != negated):
                break
        clauses.append([-(v + 1) if neg else v + 1 for v, neg in zip(variables.tolist(), negated.tolist())])
    return CnfFormula.from_ints(n, clauses)
