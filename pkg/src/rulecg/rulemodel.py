"""Conjunctions, DNF/CNF rule sets and the clause-count complexity metric."""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .tabular import BinarizedDataset, LiteralDescriptor

DNF = "DNF"
CNF = "CNF"


@dataclass(frozen=True, order=True)
class Conjunction:
    """AND of binary literals, stored as a sorted tuple of literal indices."""

    literals: tuple[int, ...]

    def __post_init__(self):
        lits = tuple(sorted(int(j) for j in self.literals))
        if not lits:
            raise ValueError("a conjunction needs at least one literal")
        if len(set(lits)) != len(lits):
            raise ValueError(f"duplicate literal indices in {lits}")
        if lits[0] < 0:
            raise ValueError(f"negative literal index in {lits}")
        object.__setattr__(self, "literals", lits)

    @classmethod
    def of(cls, *literals: int) -> "Conjunction":
        return cls(tuple(literals))

    @property
    def degree(self) -> int:
        return len(self.literals)

    def sort_key(self):
        return (self.degree, self.literals)

    def coverage(self, X: np.ndarray) -> np.ndarray:
        """Boolean vector: which rows of ``X`` satisfy every literal."""
        if self.literals[-1] >= X.shape[1]:
            raise IndexError(f"literal {self.literals[-1]} out of range for width {X.shape[1]}")
        return np.all(X[:, list(self.literals)], axis=1)

    def __str__(self):
        return "{" + ",".join(map(str, self.literals)) + "}"


def covers(c: Conjunction, sample_bits) -> bool:
    """True iff the row satisfies every literal of ``c``."""
    bits = np.asarray(sample_bits)
    if c.literals[-1] >= bits.shape[0]:
        raise IndexError(f"literal {c.literals[-1]} out of range for width {bits.shape[0]}")
    return bool(np.all(bits[list(c.literals)]))


@dataclass(frozen=True)
class ComplexityReport:
    num_clauses: int
    total_conditions: int

    @property
    def complexity(self) -> int:
        return self.num_clauses + self.total_conditions


@dataclass(frozen=True)
class RuleSet:
    """Ordered clause list with DNF or CNF semantics.

    Under DNF a sample is positive iff some clause covers it.  A CNF rule set
    is stored as the DNF learned for the negated label: a sample is positive
    iff no stored conjunction covers it, which is the same as every CNF clause
    (the OR of the negated literals) being satisfied.
    """

    clauses: tuple[Conjunction, ...]
    form: str = DNF
    descriptors: tuple[LiteralDescriptor, ...] | None = None

    def __post_init__(self):
        if self.form not in (DNF, CNF):
            raise ValueError(f"unknown rule form {self.form!r}")
        if len(set(self.clauses)) != len(self.clauses):
            raise ValueError("duplicate clauses in rule set")

    def __len__(self):
        return len(self.clauses)

    def clause_matrix(self, X: np.ndarray) -> np.ndarray:
        if not self.clauses:
            return np.zeros((X.shape[0], 0), dtype=bool)
        return np.column_stack([c.coverage(X) for c in self.clauses])

    def to_json(self) -> dict:
        return {
            "form": self.form,
            "clauses": [list(c.literals) for c in self.clauses],
            "descriptors": [d.to_json() for d in self.descriptors] if self.descriptors else [],
        }

    @classmethod
    def from_json(cls, obj) -> "RuleSet":
        descriptors = tuple(LiteralDescriptor.from_json(d) for d in obj.get("descriptors", []))
        return cls(tuple(Conjunction(tuple(c)) for c in obj["clauses"]), obj["form"],
                   descriptors or None)

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2)


def _check_vocabulary(rs: RuleSet, data: BinarizedDataset):
    if rs.descriptors is not None and tuple(rs.descriptors) != tuple(data.descriptors):
        raise ValueError("rule set vocabulary does not match the dataset's literals")
    for c in rs.clauses:
        if c.literals[-1] >= data.d:
            raise ValueError(f"clause {c} references literals beyond width {data.d}")


def predict(rs: RuleSet, data: BinarizedDataset | np.ndarray) -> np.ndarray:
    """0/1 predictions under the rule set's form."""
    if isinstance(data, BinarizedDataset):
        _check_vocabulary(rs, data)
        X = data.X
    else:
        X = np.asarray(data, dtype=bool)
    any_cover = rs.clause_matrix(X).any(axis=1)
    if rs.form == DNF:
        return any_cover.astype(np.int8)
    return (~any_cover).astype(np.int8)


def complexity(rs: RuleSet) -> ComplexityReport:
    return ComplexityReport(len(rs.clauses), sum(c.degree for c in rs.clauses))


def prune_supersets(clauses: Iterable[Conjunction]) -> list[Conjunction]:
    """Drop duplicates and clauses whose literal set contains another clause's."""
    uniq = sorted(set(clauses), key=Conjunction.sort_key)
    kept: list[Conjunction] = []
    for c in uniq:
        s = set(c.literals)
        if not any(set(k.literals) <= s for k in kept):
            kept.append(c)
    return kept


def finalize(clauses: Sequence[Conjunction], X: np.ndarray, form: str = DNF,
             descriptors=None) -> RuleSet:
    """Prune redundant clauses and order by coverage on ``X``.

    Order: descending coverage count, then degree, then literal indices.
    """
    kept = prune_supersets(clauses)
    cover = {c: int(c.coverage(X).sum()) for c in kept}
    kept.sort(key=lambda c: (-cover[c], c.degree, c.literals))
    return RuleSet(tuple(kept), form, tuple(descriptors) if descriptors is not None else None)


def _literal_text(rs: RuleSet, j: int, negate: bool = False) -> str:
    if rs.descriptors is None:
        return f"NOT x{j}" if negate else f"x{j}"
    dsc = rs.descriptors[j]
    return (dsc.negated() if negate else dsc).text()


def render(rs: RuleSet) -> str:
    """Human-readable rule text, one clause per line."""
    if rs.form == DNF:
        if not rs.clauses:
            return "IF (false) THEN 1\nELSE 0"
        lines = []
        for k, c in enumerate(rs.clauses):
            body = " AND ".join(_literal_text(rs, j) for j in c.literals)
            lines.append(("IF " if k == 0 else "OR ") + f"({body})")
        if len(lines) == 1:
            return f"{lines[0]} THEN 1"
        return "\n".join(lines) + "\nTHEN 1"
    header = "CNF rule: predict 1 iff every clause holds"
    if not rs.clauses:
        return header + "\n(true)"
    lines = []
    for k, c in enumerate(rs.clauses):
        body = " OR ".join(_literal_text(rs, j, negate=True) for j in c.literals)
        lines.append(("    " if k == 0 else "AND ") + f"({body})")
    return header + "\n" + "\n".join(lines)
