"""CNF formulas, DIMACS parsing/serialization and exact boolean evaluation.

Variables are 1-indexed in :class:`Literal` and in DIMACS text, and
0-indexed in assignment vectors (``assignment[i]`` is the value of
variable ``i + 1``).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np


class DimacsError(ValueError):
    """Raised for input that does not follow the DIMACS CNF grammar."""


class DimacsWarning(UserWarning):
    """Emitted for recoverable irregularities, e.g. a wrong clause count."""


@dataclass(frozen=True, order=True)
class Literal:
    variable_index: int  # 1-based
    negated: bool = False

    def __post_init__(self):
        if self.variable_index < 1:
            raise ValueError(f"variable index must be >= 1, got {self.variable_index}")

    @classmethod
    def from_int(cls, lit: int) -> "Literal":
        if lit == 0:
            raise ValueError("0 is not a literal")
        return cls(abs(lit), lit < 0)

    def to_int(self) -> int:
        return -self.variable_index if self.negated else self.variable_index

    def __str__(self):
        return str(self.to_int())


@dataclass(frozen=True)
class Clause:
    literals: tuple[Literal, ...]

    def __post_init__(self):
        if not self.literals:
            raise ValueError("empty clause")
        # drop repeated literals, keep first occurrence order
        unique = tuple(dict.fromkeys(self.literals))
        if len(unique) != len(self.literals):
            object.__setattr__(self, "literals", unique)

    @classmethod
    def from_ints(cls, lits: Iterable[int]) -> "Clause":
        return cls(tuple(Literal.from_int(l) for l in lits))

    def to_ints(self) -> list[int]:
        return [l.to_int() for l in self.literals]

    def __len__(self):
        return len(self.literals)

    def __iter__(self):
        return iter(self.literals)


@dataclass(frozen=True)
class CnfFormula:
    num_variables: int
    clauses: tuple[Clause, ...] = ()

    def __post_init__(self):
        if self.num_variables < 0:
            raise ValueError("num_variables must be non-negative")
        object.__setattr__(self, "clauses", tuple(self.clauses))
        for clause in self.clauses:
            for lit in clause:
                if lit.variable_index > self.num_variables:
                    raise ValueError(
                        f"literal {lit} out of range for {self.num_variables} variables"
                    )

    @classmethod
    def from_ints(cls, num_variables: int, clauses: Iterable[Iterable[int]]) -> "CnfFormula":
        return cls(num_variables, tuple(Clause.from_ints(c) for c in clauses))

    @property
    def num_clauses(self) -> int:
        return len(self.clauses)

    def to_ints(self) -> list[list[int]]:
        return [c.to_ints() for c in self.clauses]

    @cached_property
    def padded(self) -> tuple[np.ndarray, np.ndarray]:
        """Clause table as ``(index, negated)`` arrays of shape (m, max_width).

        Short clauses are padded with index ``num_variables`` and
        ``negated=True``; evaluators append a sentinel ``1.0`` to the
        assignment so pad cells contribute a neutral factor.
        """
        m = len(self.clauses)
        width = max((len(c) for c in self.clauses), default=1)
        index = np.full((m, width), self.num_variables, dtype=np.intp)
        negated = np.ones((m, width), dtype=bool)
        for row, clause in enumerate(self.clauses):
            for col, lit in enumerate(clause):
                index[row, col] = lit.variable_index - 1
                negated[row, col] = lit.negated
        index.flags.writeable = False
        negated.flags.writeable = False
        return index, negated

    @cached_property
    def false_probability_terms(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """``(index, offset, sign)`` with P(literal false) = offset + sign * x[index]."""
        index, negated = self.padded
        offset = np.where(negated, 0.0, 1.0)
        sign = np.where(negated, 1.0, -1.0)
        offset.flags.writeable = False
        sign.flags.writeable = False
        return index, offset, sign

    def to_dimacs(self, comments: Sequence[str] = ()) -> str:
        lines = [f"c {c}" for c in comments]
        lines.append(f"p cnf {self.num_variables} {len(self.clauses)}")
        lines.extend(" ".join(map(str, c.to_ints() + [0])) for c in self.clauses)
        return "\n".join(lines) + "\n"


def _clause_truth(formula: CnfFormula, assignment) -> np.ndarray:
    values = np.asarray(assignment, dtype=bool)
    if values.shape != (formula.num_variables,):
        raise ValueError(
            f"assignment has length {values.size}, formula has {formula.num_variables} variables"
        )
    index, negated = formula.padded
    extended = np.append(values, False)
    # pad cells are (index n, negated) -> extended[n] ^ True would be True,
    # so mask them out explicitly
    valid = index < formula.num_variables
    lit_true = (extended[index] != negated) & valid
    return lit_true.any(axis=1)


def eval_boolean(formula: CnfFormula, assignment) -> bool:
    """True iff every clause has a literal made true by ``assignment``."""
    return bool(_clause_truth(formula, assignment).all())


def count_satisfied(formula: CnfFormula, assignment) -> int:
    return int(_clause_truth(formula, assignment).sum())


def parse_dimacs(text: str | bytes) -> CnfFormula:
    """Parse a DIMACS CNF document.

    A clause count that disagrees with the header only triggers a
    :class:`DimacsWarning`. Everything else that is off raises
    :class:`DimacsError`. A line starting with ``%`` ends the clause
    section (SATLIB files carry such a trailer).
    """
    if isinstance(text, bytes):
        text = text.decode("ascii", errors="strict")

    header = None
    clauses: list[list[int]] = []
    current: list[int] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("c"):
            continue
        if line.startswith("%"):
            break
        if line.startswith("p"):
            if header is not None:
                raise DimacsError(f"line {lineno}: duplicate problem line")
            fields = line.split()
            if len(fields) != 4 or fields[0] != "p" or fields[1] != "cnf":
                raise DimacsError(f"line {lineno}: malformed problem line {line!r}")
            try:
                nvars, nclauses = int(fields[2]), int(fields[3])
            except ValueError:
                raise DimacsError(f"line {lineno}: malformed problem line {line!r}") from None
            if nvars < 0 or nclauses < 0:
                raise DimacsError(f"line {lineno}: negative counts in problem line")
            header = (nvars, nclauses)
            continue
        if header is None:
            raise DimacsError(f"line {lineno}: clause data before problem line")
        for token in line.split():
            try:
                lit = int(token)
            except ValueError:
                raise DimacsError(f"line {lineno}: bad token {token!r}") from None
            if lit == 0:
                if not current:
                    raise DimacsError(f"line {lineno}: empty clause")
                clauses.append(current)
                current = []
            elif abs(lit) > header[0]:
                raise DimacsError(
                    f"line {lineno}: literal {lit} out of range for {header[0]} variables"
                )
            else:
                current.append(lit)

    if header is None:
        raise DimacsError("missing problem line")
    if current:
        raise DimacsError("unterminated final clause")
    if len(clauses) != header[1]:
        warnings.warn(
            f"header declares {header[1]} clauses, found {len(clauses)}",
            DimacsWarning,
            stacklevel=2,
        )
    return CnfFormula.from_ints(header[0], clauses)


def read_dimacs(path) -> CnfFormula:
    with open(path, "rb") as f:
        return parse_dimacs(f.read())


def write_dimacs(formula: CnfFormula, path, comments: Sequence[str] = ()) -> None:
    with open(path, "w", newline="\n") as f:
        f.write(formula.to_dimacs(comments))
