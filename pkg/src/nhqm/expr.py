"""
Scalar coefficient expressions in x and the operator expressions built from them.

An :class:`OperatorExpr` is a sum of terms ``coeff(x) * p**order`` with
``p = -i d/dx`` and ``order`` in {0, 1, 2}. The coefficient always stands to
the left of ``p`` (differentiate first, then multiply), which is the ordering
used when writing ``(2i/x) p``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgument


class Node:
    """Base class of scalar expression trees. Subclasses are frozen dataclasses."""

    def __str__(self) -> str:
        return to_text(self)


@dataclass(frozen=True)
class Num(Node):
    value: complex


@dataclass(frozen=True)
class Var(Node):
    """The coordinate x."""


@dataclass(frozen=True)
class Neg(Node):
    arg: Node


@dataclass(frozen=True)
class Add(Node):
    left: Node
    right: Node


@dataclass(frozen=True)
class Sub(Node):
    left: Node
    right: Node


@dataclass(frozen=True)
class Mul(Node):
    left: Node
    right: Node


@dataclass(frozen=True)
class Div(Node):
    left: Node
    right: Node


@dataclass(frozen=True)
class Pow(Node):
    base: Node
    exponent: int


@dataclass(frozen=True)
class Func(Node):
    name: str  # "abs" or "exp"
    arg: Node


@dataclass(frozen=True)
class IPow(Node):
    """Principal branch of (i * arg) ** nu for real arg."""

    arg: Node
    nu: float


X = Var()
ONE = Num(1 + 0j)
ZERO = Num(0j)

_BINARY = {Add: "+", Sub: "-", Mul: "*", Div: "/"}


# ---------------------------------------------------------------------------
# construction helpers with light constant folding

def num(v) -> Num:
    return Num(complex(v))


def is_constant(node: Node) -> bool:
    if isinstance(node, Var):
        return False
    if isinstance(node, Num):
        return True
    if isinstance(node, (Neg, Func, IPow)):
        return is_constant(node.arg)
    if isinstance(node, Pow):
        return is_constant(node.base)
    return is_constant(node.left) and is_constant(node.right)


def fold(node: Node) -> Node:
    """Fold the one-level constant patterns the parser relies on."""
    if isinstance(node, Neg) and isinstance(node.arg, Num):
        return Num(-node.arg.value)
    if isinstance(node, Pow) and isinstance(node.base, Num):
        try:
            return Num(node.base.value ** node.exponent)
        except ZeroDivisionError:
            return node
    if type(node) in _BINARY:
        a, b = node.left, node.right
        if isinstance(node, Mul):
            if b == ONE:
                return a
            if a == ONE:
                return b
        if isinstance(a, Num) and isinstance(b, Num):
            if isinstance(node, Add):
                return Num(a.value + b.value)
            if isinstance(node, Sub):
                return Num(a.value - b.value)
            if isinstance(node, Mul):
                return Num(a.value * b.value)
            if b.value != 0:
                return Num(a.value / b.value)
    return node


# ---------------------------------------------------------------------------
# evaluation

def ipow(x, nu: float):
    """(i x)**nu on the branch arg(i x) = +-pi/2 for x >< 0."""
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        mag = np.abs(x) ** nu
    return mag * np.exp(0.5j * nu * math.pi * np.sign(x))


def evaluate(node: Node, x) -> np.ndarray:
    """Evaluate a scalar expression at real points ``x`` (complex result)."""
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        out = _eval(node, x)
    return np.broadcast_to(np.asarray(out, dtype=complex), x.shape).copy()


def _eval(node, x):
    if isinstance(node, Num):
        return node.value
    if isinstance(node, Var):
        return x.astype(complex)
    if isinstance(node, Neg):
        return -_eval(node.arg, x)
    if isinstance(node, Add):
        return _eval(node.left, x) + _eval(node.right, x)
    if isinstance(node, Sub):
        return _eval(node.left, x) - _eval(node.right, x)
    if isinstance(node, Mul):
        return _eval(node.left, x) * _eval(node.right, x)
    if isinstance(node, Div):
        return np.asarray(_eval(node.left, x), dtype=complex) / _eval(node.right, x)
    if isinstance(node, Pow):
        base = np.asarray(_eval(node.base, x), dtype=complex)
        if node.exponent >= 0:
            return base**node.exponent
        return 1.0 / base ** (-node.exponent)
    if isinstance(node, Func):
        a = _eval(node.arg, x)
        return np.abs(a) if node.name == "abs" else np.exp(a)
    if isinstance(node, IPow):
        a = np.asarray(_eval(node.arg, x))
        if np.any(np.abs(a.imag) > 0):
            raise InvalidArgument("ipow is only defined for real arguments")
        return ipow(a.real, node.nu)
    raise TypeError(f"not an expression node: {node!r}")


def evaluate_matrix(node: Node, X: np.ndarray) -> np.ndarray:
    """Substitute the matrix ``X`` for x in a polynomial expression."""
    n = X.shape[0]
    if isinstance(node, Num):
        return node.value * np.eye(n, dtype=complex)
    if isinstance(node, Var):
        return np.asarray(X, dtype=complex)
    if isinstance(node, Neg):
        return -evaluate_matrix(node.arg, X)
    if isinstance(node, Add):
        return evaluate_matrix(node.left, X) + evaluate_matrix(node.right, X)
    if isinstance(node, Sub):
        return evaluate_matrix(node.left, X) - evaluate_matrix(node.right, X)
    if isinstance(node, Mul):
        return evaluate_matrix(node.left, X) @ evaluate_matrix(node.right, X)
    if isinstance(node, Div) and isinstance(node.right, Num):
        return evaluate_matrix(node.left, X) / node.right.value
    if isinstance(node, Pow) and node.exponent >= 0:
        return np.linalg.matrix_power(evaluate_matrix(node.base, X), node.exponent)
    raise InvalidArgument(f"template coefficient {to_text(node)!r} is not a polynomial in x")


# ---------------------------------------------------------------------------
# power-law form: f(x) = sum_s c+_s |x|^s (x > 0), c-_s |x|^s (x < 0)

def power_terms(node: Node) -> dict[float, tuple[complex, complex]] | None:
    """Decompose ``node`` into signed power laws, or None if that is impossible."""
    if isinstance(node, Num):
        return {0.0: (node.value, node.value)}
    if isinstance(node, Var):
        return {1.0: (1.0, -1.0)}
    if isinstance(node, Neg):
        a = power_terms(node.arg)
        return None if a is None else {s: (-p, -m) for s, (p, m) in a.items()}
    if isinstance(node, (Add, Sub)):
        a, b = power_terms(node.left), power_terms(node.right)
        if a is None or b is None:
            return None
        sign = 1 if isinstance(node, Add) else -1
        out = dict(a)
        for s, (p, m) in b.items():
            p0, m0 = out.get(s, (0j, 0j))
            out[s] = (p0 + sign * p, m0 + sign * m)
        return _prune(out)
    if isinstance(node, Mul):
        a, b = power_terms(node.left), power_terms(node.right)
        if a is None or b is None:
            return None
        return _prune(_pmul(a, b))
    if isinstance(node, Div):
        a, b = power_terms(node.left), power_terms(node.right)
        inv = _pinv(b)
        if a is None or inv is None:
            return None
        return _prune(_pmul(a, inv))
    if isinstance(node, Pow):
        a = power_terms(node.base)
        if a is None:
            return None
        if node.exponent < 0:
            a = _pinv(a)
            if a is None:
                return None
        out = {0.0: (1 + 0j, 1 + 0j)}
        for _ in range(abs(node.exponent)):
            out = _pmul(out, a)
        return _prune(out)
    if isinstance(node, Func) and node.name == "abs":
        a = power_terms(node.arg)
        if a is None or len(a) != 1:
            return None
        (s, (p, m)), = a.items()
        return {s: (abs(p), abs(m))}
    if isinstance(node, IPow) and isinstance(node.arg, Var):
        nu = node.nu
        return {float(nu): (np.exp(0.5j * nu * math.pi), np.exp(-0.5j * nu * math.pi))}
    return None


def _pmul(a, b):
    out: dict[float, tuple[complex, complex]] = {}
    for sa, (pa, ma) in a.items():
        for sb, (pb, mb) in b.items():
            s = sa + sb
            p0, m0 = out.get(s, (0j, 0j))
            out[s] = (p0 + pa * pb, m0 + ma * mb)
    return out


def _pinv(a):
    if a is None or len(a) != 1:
        return None
    (s, (p, m)), = a.items()
    if p == 0 or m == 0:
        return None
    return {-s: (1 / p, 1 / m)}


def _prune(d):
    return {s: c for s, c in d.items() if c[0] != 0 or c[1] != 0} or {0.0: (0j, 0j)}


# ---------------------------------------------------------------------------
# printing with the parser's precedence, so the text re-parses to the identical tree

# binding levels: sum < product < unary minus < power < atom
_SUM, _PRODUCT, _UNARY, _POWER, _ATOM = range(1, 6)
_LEVEL = {Add: _SUM, Sub: _SUM, Mul: _PRODUCT, Div: _PRODUCT}


def _fmt_real(v: float) -> str:
    v = float(v)
    if v.is_integer() and abs(v) < 1e15:
        return str(int(v))
    return repr(v)


def _num_text(c: complex) -> tuple[str, int]:
    re, im = c.real, c.imag
    if im == 0:
        if re >= 0 and not math.copysign(1, re) < 0:
            return _fmt_real(re), _ATOM
        return f"-{_fmt_real(-re)}", _UNARY
    if re == 0:
        return (f"{_fmt_real(im)}i", _ATOM) if im > 0 else (f"-{_fmt_real(-im)}i", _UNARY)
    sign = "+" if im > 0 else "-"
    left = _fmt_real(re) if re > 0 else f"-{_fmt_real(-re)}"
    return f"{left} {sign} {_fmt_real(abs(im))}i", _SUM


def _fmt_num(c: complex) -> str:
    text, level = _num_text(c)
    return text if level == _ATOM else f"({text})"


def _text(node: Node) -> tuple[str, int]:
    if isinstance(node, Num):
        return _num_text(node.value)
    if isinstance(node, Var):
        return "x", _ATOM
    if isinstance(node, Neg):
        return f"-{_at(node.arg, _UNARY)}", _UNARY
    if type(node) in _LEVEL:
        level = _LEVEL[type(node)]
        # left-associative: the right operand must bind strictly tighter
        sep = f" {_BINARY[type(node)]} " if level == _SUM else _BINARY[type(node)]
        return f"{_at(node.left, level)}{sep}{_at(node.right, level + 1)}", level
    if isinstance(node, Pow):
        return f"{_at(node.base, _ATOM)}^{node.exponent}", _POWER
    if isinstance(node, Func):
        return f"{node.name}({to_text(node.arg)})", _ATOM
    if isinstance(node, IPow):
        return f"ipow({to_text(node.arg)}, {_num_text(complex(node.nu))[0]})", _ATOM
    raise TypeError(f"not an expression node: {node!r}")


def _at(node: Node, minimum: int) -> str:
    text, level = _text(node)
    return text if level >= minimum else f"({text})"


def to_text(node: Node) -> str:
    return _text(node)[0]


# ---------------------------------------------------------------------------
# operator expressions

@dataclass(frozen=True)
class Term:
    """``coeff(x) * p**order``."""

    coeff: Node
    order: int


@dataclass(frozen=True)
class OperatorExpr:
    terms: tuple[Term, ...]

    def __post_init__(self):
        for t in self.terms:
            if t.order not in (0, 1, 2):
                raise InvalidArgument(f"derivative order {t.order} not supported")
        orders = [t.order for t in self.terms]
        if orders != sorted(set(orders)):
            raise InvalidArgument("terms must have distinct orders in ascending order")

    @classmethod
    def from_dict(cls, d: dict[int, Node]) -> "OperatorExpr":
        return cls(tuple(Term(c, k) for k, c in sorted(d.items()) if c != ZERO))

    def coefficient(self, order: int) -> Node:
        for t in self.terms:
            if t.order == order:
                return t.coeff
        return ZERO

    @property
    def max_order(self) -> int:
        return max((t.order for t in self.terms), default=0)

    def __str__(self) -> str:
        return operator_text(self)


def operator_text(op: OperatorExpr) -> str:
    parts = []
    for t in op.terms:
        if t.order == 0:
            parts.append(to_text(t.coeff))
            continue
        sym = "p" if t.order == 1 else "p^2"
        parts.append(sym if t.coeff == ONE else f"{_at(t.coeff, _ATOM)}*{sym}")
    return " + ".join(parts) if parts else "0"
