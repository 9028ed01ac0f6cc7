"""Shared test utilities: corpus paths and seeded program generators."""

from __future__ import annotations

import random
from pathlib import Path

PROGRAMS = Path(__file__).resolve().parent.parent / "programs"

PRED_NAMES = ("p", "q", "r")


def load(name: str) -> str:
    return (PROGRAMS / name).read_text(encoding="utf-8")


def _random_constraints(rng: random.Random, variables: list[str], min_count: int) -> list[str]:
    out: list[str] = []
    for _ in range(rng.randint(min_count, 2)):
        if not variables:
            out.append(rng.choice(["0 = 0", "1 >= 0", "0 = 1"]))
            continue
        terms = []
        for v in variables:
            c = rng.randint(-5, 5)
            if c:
                terms.append(f"{c}*{v}")
        lhs = " + ".join(terms) if terms else "0"
        op = rng.choice(["=", ">=", "<="])
        out.append(f"{lhs} {op} {rng.randint(-5, 5)}")
    return out


def _decreasing_link(rng: random.Random, hvar: str, bvar: str) -> list[str]:
    # a guarded decrement: the kind of rule a level mapping can certify
    return [
        f"{bvar} = {hvar} - {rng.randint(1, 3)}",
        f"{hvar} >= {rng.randint(0, 3)}",
        f"{rng.randint(4, 9)} >= {hvar}",
    ]


def random_binary_program_text(rng: random.Random) -> str:
    """Binary program: <= 3 predicates, <= 4 rules, <= 3 variables per rule,
    integer coefficients in [-5, 5]."""
    arities = {PRED_NAMES[i]: rng.randint(0, 2) for i in range(rng.randint(1, 3))}
    preds = list(arities)
    lines: list[str] = []
    for _ in range(rng.randint(1, 4)):
        head = rng.choice(preds)
        fits = [q for q in preds if arities[head] + arities[q] <= 3]
        body = rng.choice(fits) if fits and rng.random() < 0.85 else None
        hvars = [f"x{i}" for i in range(1, arities[head] + 1)]
        bvars = [f"y{i}" for i in range(1, arities[body] + 1)] if body else []
        cons: list[str] = []
        if body and hvars and bvars and rng.random() < 0.6:
            cons += _decreasing_link(rng, hvars[0], bvars[0])
        cons += _random_constraints(rng, hvars + bvars, 0 if cons else 1)
        items = list(cons)
        if body is not None:
            items.append(f"{body}({', '.join(bvars)})" if bvars else body)
        head_txt = f"{head}({', '.join(hvars)})" if hvars else head
        lines.append(f"{head_txt} :- {', '.join(items)}." if items else f"{head_txt}.")
    return "\n".join(lines)


def random_flat_program_text(rng: random.Random, max_body: int = 3) -> str:
    """Like the binary generator but bodies may hold up to ``max_body`` atoms."""
    arities = {PRED_NAMES[i]: rng.randint(0, 2) for i in range(rng.randint(1, 3))}
    preds = list(arities)
    lines: list[str] = []
    for _ in range(rng.randint(1, 4)):
        head = rng.choice(preds)
        hvars = [f"x{i}" for i in range(1, arities[head] + 1)]
        body: list[tuple[str, list[str]]] = []
        for b in range(rng.randint(0, max_body)):
            pred = rng.choice(preds)
            body.append(
                (pred, [f"z{b}_{i}" for i in range(1, arities[pred] + 1)])
            )
        allvars = hvars + [v for _, vs in body for v in vs]
        cons = _random_constraints(rng, allvars, 1)
        if body and hvars and body[0][1] and rng.random() < 0.5:
            cons = _decreasing_link(rng, hvars[0], body[0][1][0]) + cons
        items = cons + [f"{p}({', '.join(vs)})" if vs else p for p, vs in body]
        head_txt = f"{head}({', '.join(hvars)})" if hvars else head
        lines.append(f"{head_txt} :- {', '.join(items)}." if items else f"{head_txt}.")
    return "\n".join(lines)


def synthetic_family_text(n: int) -> str:
    """n structurally identical guarded-decrement rules over one predicate."""
    return "\n".join(
        f"p(x) :- x >= 0, {k} >= x, y = x - 1, p(y)." for k in range(1, n + 1)
    )
