"""Built-in model Hamiltonians."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import InvalidArgument
from .expr import OperatorExpr, operator_text
from .numerics import BasisSpec, GridSpec, hermite_functions, make_grid
from .parser import parse_expression, parse_scalar

__all__ = [
    "ModelSpec",
    "paper_example",
    "harmonic_oscillator",
    "bender_family",
    "custom_model",
    "model_by_name",
    "parse_expression",
    "parse_scalar",
]


@dataclass(frozen=True)
class ModelSpec:
    """A Hamiltonian with parameters, a default representation and known results.

    Attributes
    ----------
    template : OperatorExpr or None
        Hermitian operator that ``expr`` becomes after the similarity
        transform ``transform`` (coefficients in x, powers of p).
    transform : str or None
        Scalar expression for a diagonal map T with ``T H T^-1 = template``.
    energies : callable or None
        ``energies(n)`` gives the exact n-th eigenvalue when known.
    eigenfunction : callable or None
        ``eigenfunction(n, x)`` gives an (unnormalized) exact eigenfunction.
    """

    name: str
    parameters: dict
    expr: OperatorExpr
    recommended_rep: GridSpec | BasisSpec
    template: OperatorExpr | None = None
    transform: str | None = None
    energies: Callable[[int], float] | None = None
    eigenfunction: Callable | None = None
    notes: tuple = field(default=())

    @property
    def text(self) -> str:
        return operator_text(self.expr)

    @property
    def singular(self) -> bool:
        """True if some coefficient blows up at x = 0 (grid representation required)."""
        from .expr import power_terms

        for t in self.expr.terms:
            pt = power_terms(t.coeff)
            if pt is not None and any(s <= -1 for s in pt):
                return True
        return False


def _positive(name: str, value: float) -> float:
    v = float(value)
    if not (v > 0 and math.isfinite(v)):
        raise InvalidArgument(f"{name} must be positive, got {value!r}")
    return v


def _oscillator_text(w: float) -> str:
    return f"p^2 + {w * w!r}*x^2"


def paper_example(omega: float = 1.0) -> ModelSpec:
    """``p^2 + (2i/x) p - 2/x^2 + omega^2 x^2``, similar to the oscillator via T = 1/x.

    Eigenvalues are ``omega (2n + 1)`` with eigenfunctions ``x psi_n(x)``.
    """
    w = _positive("omega", omega)
    expr = parse_expression(f"p^2 + (2i/x)*p - 2/x^2 + {w * w!r}*x^2")

    def eigenfunction(n, x):
        return np.asarray(x) * hermite_functions(n + 1, w, x)[n]

    return ModelSpec(
        name="paper-example",
        parameters={"omega": w},
        expr=expr,
        recommended_rep=make_grid(10.0, 400),
        template=parse_expression(_oscillator_text(w)),
        transform="1/x",
        energies=lambda n: w * (2 * n + 1),
        eigenfunction=eigenfunction,
    )


def harmonic_oscillator(omega: float = 1.0) -> ModelSpec:
    w = _positive("omega", omega)
    expr = parse_expression(_oscillator_text(w))
    return ModelSpec(
        name="harmonic",
        parameters={"omega": w},
        expr=expr,
        recommended_rep=make_grid(10.0, 400),
        template=expr,
        transform="1",
        energies=lambda n: w * (2 * n + 1),
        eigenfunction=lambda n, x: hermite_functions(n + 1, w, x)[n],
    )


def bender_family(nu: float) -> ModelSpec:
    """``p^2 + x^2 (ix)^nu`` on the real line, valid for nu > -2."""
    v = float(nu)
    if not (v > -2 and math.isfinite(v)):
        raise InvalidArgument(f"nu must exceed -2, got {nu!r}")
    expr = parse_expression(f"p^2 + ipow(x, {v!r})*x^2")
    notes = ()
    if v > 1 or v < -1:
        notes = ("outside the window -1 <= nu <= 1 where real-line results are trusted",)
    return ModelSpec(
        name="bender",
        parameters={"nu": v},
        expr=expr,
        recommended_rep=BasisSpec(200, 1.0, 400),
        energies=(lambda n: 2 * n + 1.0) if v == 0 else None,
        notes=notes,
    )


def custom_model(text: str) -> ModelSpec:
    expr = parse_expression(text)
    spec = ModelSpec("expr", {}, expr, make_grid(10.0, 400))
    if not spec.singular:
        spec = ModelSpec("expr", {}, expr, BasisSpec(100, 1.0, 200))
    return spec


def model_by_name(name: str, omega: float = 1.0, nu: float = 0.0) -> ModelSpec:
    if name in ("paper-example", "paper"):
        return paper_example(omega)
    if name in ("harmonic", "oscillator"):
        return harmonic_oscillator(omega)
    if name == "bender":
        return bender_family(nu)
    raise InvalidArgument(f"unknown model {name!r} (choose paper-example, harmonic or bender)")
