"""Exact data model for flat constraint logic programs over linear arithmetic.

Everything here is immutable after construction and uses arbitrary-precision
rationals (`fractions.Fraction`), so no rounding can occur anywhere in an
analysis.  Variables are interned to dense integer ids; their source names
live in a :class:`VariablePool` side table used only for reporting.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import ClassVar, Iterable, Mapping, Sequence

Rational = Fraction

EQ = "="
GEQ = ">="


class AlmtermError(Exception):
    """Base class for all errors raised by this package."""


class ModelError(AlmtermError):
    """Structural violation in programs, constraints, or level mappings."""


def rat(value: int | str | Fraction) -> Fraction:
    """Coerce an int, a Fraction, or a string like ``-3/4`` to an exact rational.

    Floats are rejected on purpose: admitting one would silently break the
    exactness guarantee of the whole pipeline.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, (int, str)):
        return Fraction(value)
    raise ModelError(f"not an exact rational: {value!r}")


@dataclass(frozen=True)
class Domain:
    """Numeric domain a program is interpreted over.

    ``q+``, ``r+`` and ``n`` place an implicit ``x >= 0`` on every variable.
    ``n`` is special: the analysis is sound but not complete there, so
    affirmative answers become "sound-yes" and negative ones "unknown".
    """

    tag: str

    _TAGS: ClassVar[tuple[str, ...]] = ("q", "q+", "r", "r+", "n")

    def __post_init__(self) -> None:
        if self.tag not in self._TAGS:
            raise ModelError(f"unknown domain {self.tag!r}; expected one of {self._TAGS}")

    @property
    def nonneg(self) -> bool:
        return self.tag in ("q+", "r+", "n")

    @property
    def sound_only(self) -> bool:
        return self.tag == "n"

    @property
    def integral(self) -> bool:
        return self.tag == "n"

    @classmethod
    def parse(cls, text: str) -> "Domain":
        return cls(text.strip().lower())


Q = Domain("q")
QPLUS = Domain("q+")
R = Domain("r")
RPLUS = Domain("r+")
N = Domain("n")

DOMAINS = (Q, QPLUS, R, RPLUS, N)


class VariablePool:
    """Interns variables as dense integer ids and remembers display names.

    Ids are never reused.  Analyses that need scratch variables must work on
    a :meth:`clone` so that programs stay shareable across threads.
    """

    __slots__ = ("_names",)

    def __init__(self, names: Iterable[str] = ()):
        self._names: list[str] = list(names)

    def fresh(self, name: str) -> int:
        self._names.append(name)
        return len(self._names) - 1

    def name(self, vid: int) -> str:
        if 0 <= vid < len(self._names):
            return self._names[vid]
        return f"_v{vid}"

    def clone(self) -> "VariablePool":
        return VariablePool(self._names)

    def __len__(self) -> int:
        return len(self._names)


@dataclass(frozen=True)
class LinearExpr:
    """A linear expression ``sum(coeffs[v] * v) + const`` over variable ids.

    Zero coefficients are never stored, so structural equality coincides with
    mathematical equality.
    """

    coeffs: Mapping[int, Fraction] = field(default_factory=dict)
    const: Fraction = Fraction(0)

    def __post_init__(self) -> None:
        cleaned = {v: rat(c) for v, c in self.coeffs.items() if c != 0}
        object.__setattr__(self, "coeffs", cleaned)
        object.__setattr__(self, "const", rat(self.const))

    @staticmethod
    def of_var(vid: int, coeff: int | Fraction = 1) -> "LinearExpr":
        return LinearExpr({vid: rat(coeff)})

    @staticmethod
    def of_const(value: int | str | Fraction) -> "LinearExpr":
        return LinearExpr({}, rat(value))

    def variables(self) -> set[int]:
        return set(self.coeffs)

    def coeff(self, vid: int) -> Fraction:
        return self.coeffs.get(vid, Fraction(0))

    @property
    def is_const(self) -> bool:
        return not self.coeffs

    def __add__(self, other: "LinearExpr") -> "LinearExpr":
        merged = dict(self.coeffs)
        for v, c in other.coeffs.items():
            merged[v] = merged.get(v, Fraction(0)) + c
        return LinearExpr(merged, self.const + other.const)

    def __sub__(self, other: "LinearExpr") -> "LinearExpr":
        return self + (-other)

    def __neg__(self) -> "LinearExpr":
        return self.scale(Fraction(-1))

    def scale(self, k: int | Fraction) -> "LinearExpr":
        k = rat(k)
        return LinearExpr({v: c * k for v, c in self.coeffs.items()}, self.const * k)

    def evaluate(self, assignment: Mapping[int, Fraction]) -> Fraction:
        total = self.const
        for v, c in self.coeffs.items():
            if v not in assignment:
                raise ModelError(f"no value for variable id {v}")
            total += c * assignment[v]
        return total

    def render(self, names: "VariablePool | None" = None) -> str:
        def vname(v: int) -> str:
            return names.name(v) if names is not None else f"_v{v}"

        parts: list[str] = []
        for v in sorted(self.coeffs):
            c = self.coeffs[v]
            term = vname(v) if abs(c) == 1 else f"{abs(c)}*{vname(v)}"
            if not parts:
                parts.append(term if c > 0 else f"-{term}")
            else:
                parts.append(f"+ {term}" if c > 0 else f"- {term}")
        if self.const != 0 or not parts:
            if not parts:
                parts.append(str(self.const))
            elif self.const > 0:
                parts.append(f"+ {self.const}")
            else:
                parts.append(f"- {-self.const}")
        return " ".join(parts)


def as_expr(value: "LinearExpr | int | str | Fraction") -> LinearExpr:
    if isinstance(value, LinearExpr):
        return value
    return LinearExpr.of_const(rat(value))


@dataclass(frozen=True)
class LinearConstraint:
    """``lhs = rhs`` or ``lhs >= rhs`` between two linear expressions."""

    lhs: LinearExpr
    rel: str
    rhs: LinearExpr

    def __post_init__(self) -> None:
        if self.rel not in (EQ, GEQ):
            raise ModelError(f"unsupported relation {self.rel!r}")

    def gap(self) -> LinearExpr:
        """lhs - rhs, i.e. the expression constrained to be = 0 or >= 0."""
        return self.lhs - self.rhs

    def variables(self) -> set[int]:
        return self.lhs.variables() | self.rhs.variables()

    def holds(self, assignment: Mapping[int, Fraction]) -> bool:
        g = self.gap().evaluate(assignment)
        return g == 0 if self.rel == EQ else g >= 0

    def render(self, names: "VariablePool | None" = None) -> str:
        return f"{self.lhs.render(names)} {self.rel} {self.rhs.render(names)}"


def geq(lhs, rhs) -> LinearConstraint:
    return LinearConstraint(as_expr(lhs), GEQ, as_expr(rhs))


def equal(lhs, rhs) -> LinearConstraint:
    return LinearConstraint(as_expr(lhs), EQ, as_expr(rhs))


@dataclass(frozen=True)
class Atom:
    """A user-predicate applied to a tuple of distinct variables."""

    pred: str
    args: tuple[int, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "args", tuple(self.args))
        if len(set(self.args)) != len(self.args):
            raise ModelError(f"repeated variable in atom {self.pred}")

    @property
    def arity(self) -> int:
        return len(self.args)

    def render(self, names: "VariablePool | None" = None) -> str:
        if not self.args:
            return self.pred
        shown = ", ".join(names.name(v) if names else f"_v{v}" for v in self.args)
        return f"{self.pred}({shown})"


@dataclass(frozen=True)
class Rule:
    """``head :- constraints, body.``  The body atoms are user predicates.

    ``origin`` records, for rules produced by splitting a multi-atom body,
    the source rule id and the body position the kept atom came from.
    """

    rule_id: str
    head: Atom
    constraints: tuple[LinearConstraint, ...]
    body: tuple[Atom, ...]
    origin: tuple[str, int] | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "constraints", tuple(self.constraints))
        object.__setattr__(self, "body", tuple(self.body))

    @property
    def is_fact(self) -> bool:
        return not self.body

    def atoms(self) -> tuple[Atom, ...]:
        return (self.head,) + self.body

    def atom_vars(self) -> set[int]:
        out: set[int] = set()
        for a in self.atoms():
            out.update(a.args)
        return out

    def constraint_vars(self) -> set[int]:
        out: set[int] = set()
        for c in self.constraints:
            out.update(c.variables())
        return out

    def all_vars(self) -> set[int]:
        return self.atom_vars() | self.constraint_vars()

    def check_flatness(self, require_local_constraint_vars: bool = True) -> None:
        """Raise ModelError unless atom tuples are pairwise disjoint (and,
        optionally, every constraint variable occurs in some atom)."""
        seen: set[int] = set()
        for a in self.atoms():
            hit = seen.intersection(a.args)
            if hit:
                raise ModelError(
                    f"rule {self.rule_id}: variable shared between atom tuples"
                )
            seen.update(a.args)
        if require_local_constraint_vars and not self.constraint_vars() <= seen:
            raise ModelError(
                f"rule {self.rule_id}: constraint mentions a variable outside its atoms"
            )


class Program:
    """An immutable flat program with its predicate arity table."""

    def __init__(
        self,
        rules: Iterable[Rule],
        pool: VariablePool,
        arities: Mapping[str, int] | None = None,
        check_constraint_vars: bool = True,
    ):
        self._rules = tuple(rules)
        self._pool = pool
        table: dict[str, int] = dict(arities) if arities else {}
        for rule in self._rules:
            rule.check_flatness(require_local_constraint_vars=check_constraint_vars)
            for atom in rule.atoms():
                known = table.setdefault(atom.pred, atom.arity)
                if known != atom.arity:
                    raise ModelError(
                        f"predicate {atom.pred} used with arities {known} and {atom.arity}"
                    )
        self._arities = table

    @property
    def rules(self) -> tuple[Rule, ...]:
        return self._rules

    @property
    def arities(self) -> Mapping[str, int]:
        return self._arities

    @property
    def pool(self) -> VariablePool:
        return self._pool

    def predicates(self) -> tuple[str, ...]:
        return tuple(self._arities)

    def rules_for(self, pred: str) -> tuple[Rule, ...]:
        return tuple(r for r in self._rules if r.head.pred == pred)

    def rule(self, rule_id: str) -> Rule:
        for r in self._rules:
            if r.rule_id == rule_id:
                return r
        raise ModelError(f"no rule named {rule_id}")

    def var_name(self, vid: int) -> str:
        return self._pool.name(vid)

    def is_binary(self) -> bool:
        return all(len(r.body) <= 1 for r in self._rules)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Program):
            return NotImplemented
        return self._rules == other._rules and self._arities == other._arities

    def __repr__(self) -> str:
        return f"Program({len(self._rules)} rules, predicates={list(self._arities)})"


@dataclass(frozen=True)
class LevelMapping:
    """Per-predicate affine measures: a constant plus one coefficient per
    argument position.  This is the termination certificate the decider
    produces and the verifier checks."""

    coeffs: Mapping[str, tuple[Fraction, ...]]

    def __post_init__(self) -> None:
        cleaned = {p: tuple(rat(c) for c in cs) for p, cs in self.coeffs.items()}
        object.__setattr__(self, "coeffs", cleaned)

    def arity(self, pred: str) -> int:
        return len(self._vector(pred)) - 1

    def _vector(self, pred: str) -> tuple[Fraction, ...]:
        try:
            return self.coeffs[pred]
        except KeyError:
            raise ModelError(f"level mapping does not cover predicate {pred}") from None

    def level_of(self, pred: str, args: Sequence[int | Fraction]) -> Fraction:
        """Exact measure of the ground atom ``pred(args)``."""
        vec = self._vector(pred)
        if len(args) != len(vec) - 1:
            raise ModelError(
                f"{pred} expects {len(vec) - 1} arguments, got {len(args)}"
            )
        total = vec[0]
        for c, a in zip(vec[1:], args):
            total += c * rat(a)
        return total

    def bound_for(self, pred: str, args: Sequence[int | Fraction]) -> int:
        """Derivation-length budget from a ground start atom: the measure,
        floored and clamped at zero, plus one final step."""
        return max(0, math.floor(self.level_of(pred, args))) + 1

    def scale(self, k: int | Fraction) -> "LevelMapping":
        k = rat(k)
        return LevelMapping({p: tuple(c * k for c in cs) for p, cs in self.coeffs.items()})

    def render(self, pred: str) -> str:
        vec = self._vector(pred)
        args = [f"a{i}" for i in range(1, len(vec))]
        text = str(vec[0])
        for i, a in enumerate(args, start=1):
            c = vec[i]
            if c == 0:
                continue
            text += f" + {c}*{a}" if c > 0 else f" - {-c}*{a}"
        head = f"{pred}({', '.join(args)})" if args else pred
        return f"|{head}| = {text}"
