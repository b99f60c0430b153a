"""Catalog of real functions used as state maps ``u``, outer functions ``F``
and level integrands ``f``.

Every descriptor evaluates a value and one fixed version of its derivative.
At kinks the derivative is taken from the left, so that ``NegPart(a)`` has
``F'(x) = -1{x <= a}`` (closed on the right).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np


class UnsupportedFunction(ValueError):
    pass


_SMOOTH = {
    "tanh": (np.tanh, lambda x: 1.0 - np.tanh(x) ** 2,
             lambda x: -2.0 * np.tanh(x) * (1.0 - np.tanh(x) ** 2)),
    "square": (lambda x: x * x, lambda x: 2.0 * x, lambda x: 2.0 + 0.0 * x),
    "atan": (np.arctan, lambda x: 1.0 / (1.0 + x * x),
             lambda x: -2.0 * x / (1.0 + x * x) ** 2),
    "sin": (np.sin, np.cos, lambda x: -np.sin(x)),
}


@dataclass(frozen=True)
class FunctionDescriptor:
    """A named real function with a chosen derivative version.

    ``form`` is one of ``identity``, ``constant``, ``smooth``,
    ``piecewise_linear``, ``abs_shift``, ``neg_part``, ``indicator``,
    ``sign``, ``clip`` or ``custom``.
    """

    form: str
    params: tuple = ()
    label: str = ""
    _fn: Callable | None = field(default=None, compare=False, repr=False)
    _dfn: Callable | None = field(default=None, compare=False, repr=False)

    def __call__(self, x):
        return self.value(x)

    def __str__(self):
        return self.label or f"{self.form}{self.params}"

    # -- evaluation ---------------------------------------------------------
    def value(self, x):
        x = np.asarray(x, dtype=float)
        f = self.form
        if f == "identity":
            return x.copy()
        if f == "constant":
            return np.full_like(x, self.params[0])
        if f == "smooth":
            return _SMOOTH[self.params[0]][0](x)
        if f == "abs_shift":
            return np.abs(x - self.params[0])
        if f == "neg_part":
            return np.maximum(self.params[0] - x, 0.0)
        if f == "piecewise_linear":
            return _pl_value(x, *self.params)
        if f == "indicator":
            lo, hi = self.params
            return ((x >= lo) & (x <= hi)).astype(float)
        if f == "sign":
            return np.sign(x)
        if f == "clip":
            base, n = self.params
            return np.clip(base.value(x), -n, n)
        if f == "custom":
            return np.asarray(self._fn(x), dtype=float)
        raise UnsupportedFunction(f)

    def deriv(self, x):
        x = np.asarray(x, dtype=float)
        f = self.form
        if f == "identity":
            return np.ones_like(x)
        if f in ("constant", "indicator", "sign"):
            # a.e. derivative of a step function
            return np.zeros_like(x)
        if f == "smooth":
            return _SMOOTH[self.params[0]][1](x)
        if f == "abs_shift":
            return np.where(x > self.params[0], 1.0, -1.0)
        if f == "neg_part":
            return -(x <= self.params[0]).astype(float)
        if f == "piecewise_linear":
            return _pl_deriv(x, *self.params)
        if f == "clip":
            base, n = self.params
            v = base.value(x)
            return np.where(np.abs(v) < n, base.deriv(x), 0.0)
        if f == "custom":
            if self._dfn is None:
                raise UnsupportedFunction(f"{self} has no derivative")
            return np.asarray(self._dfn(x), dtype=float)
        raise UnsupportedFunction(f)

    def second(self, x):
        """Second derivative, only for the smooth forms (used by oracles)."""
        x = np.asarray(x, dtype=float)
        if self.form == "identity":
            return np.zeros_like(x)
        if self.form == "smooth":
            return _SMOOTH[self.params[0]][2](x)
        raise UnsupportedFunction(f"{self} is not C2")

    # -- structure ----------------------------------------------------------
    @property
    def is_identity(self) -> bool:
        return self.form == "identity"

    @property
    def is_differentiable(self) -> bool:
        return self.form in ("identity", "constant", "smooth") or (
            self.form == "custom" and self._dfn is not None)

    @property
    def increasing_inverse(self) -> Callable | None:
        """Inverse map for strictly increasing forms, else None."""
        if self.form == "identity":
            return lambda z: np.asarray(z, dtype=float)
        if self.form == "smooth" and self.params[0] == "tanh":
            return lambda z: np.arctanh(np.clip(z, -1.0, 1.0))
        if self.form == "smooth" and self.params[0] == "atan":
            return lambda z: np.tan(np.clip(z, -np.pi / 2, np.pi / 2))
        return None

    @property
    def range_bounds(self) -> tuple[float, float]:
        if self.form == "smooth" and self.params[0] == "tanh":
            return -1.0, 1.0
        if self.form == "smooth" and self.params[0] == "atan":
            return -np.pi / 2, np.pi / 2
        if self.form == "constant":
            return self.params[0], self.params[0]
        return -np.inf, np.inf

    def clip(self, n: float) -> FunctionDescriptor:
        """The truncation ``(-n) v f ^ n``."""
        return FunctionDescriptor("clip", (self, float(n)), label=f"clip({self},{n})")

    def sup_abs_deriv(self, lo: float, hi: float, n: int = 4097) -> float:
        """Bound of ``|F'|`` on ``[lo, hi]`` (grid maximum plus endpoints)."""
        x = np.linspace(lo, hi, n)
        return float(np.max(np.abs(self.deriv(x))))


def _pl_value(x, breakpoints, slopes, offset=0.0):
    bp = np.asarray(breakpoints, dtype=float)
    sl = np.asarray(slopes, dtype=float)
    # anchored so that value(0) == offset
    out = sl[0] * x
    for j, b in enumerate(bp):
        ramp = np.maximum(x - b, 0.0) - max(0.0 - b, 0.0)
        out = out + (sl[j + 1] - sl[j]) * ramp
    return out + offset


def _pl_deriv(x, breakpoints, slopes, offset=0.0):
    bp = np.asarray(breakpoints, dtype=float)
    sl = np.asarray(slopes, dtype=float)
    idx = np.searchsorted(bp, x, side="left")  # x == b counts as left piece
    return sl[idx]


# -- constructors -----------------------------------------------------------

def identity() -> FunctionDescriptor:
    return FunctionDescriptor("identity", label="identity")


def constant(c: float) -> FunctionDescriptor:
    return FunctionDescriptor("constant", (float(c),), label=f"const({c})")


def smooth(name: str) -> FunctionDescriptor:
    if name not in _SMOOTH:
        raise UnsupportedFunction(name)
    return FunctionDescriptor("smooth", (name,), label=name)


def piecewise_linear(breakpoints, slopes, offset: float = 0.0) -> FunctionDescriptor:
    bp = tuple(float(b) for b in breakpoints)
    sl = tuple(float(s) for s in slopes)
    if len(sl) != len(bp) + 1 or list(bp) != sorted(set(bp)):
        raise ValueError("need strictly increasing breakpoints and len(slopes) == len(breakpoints) + 1")
    return FunctionDescriptor("piecewise_linear", (bp, sl, float(offset)), label=f"pl{bp}")


def abs_shift(a: float) -> FunctionDescriptor:
    return FunctionDescriptor("abs_shift", (float(a),), label=f"|x-{a}|")


def neg_part(a: float) -> FunctionDescriptor:
    return FunctionDescriptor("neg_part", (float(a),), label=f"(x-{a})^-")


def indicator(lo: float, hi: float) -> FunctionDescriptor:
    """``1_{[lo, hi]}``; infinite endpoints allowed."""
    return FunctionDescriptor("indicator", (float(lo), float(hi)), label=f"1[{lo},{hi}]")


def sign() -> FunctionDescriptor:
    return FunctionDescriptor("sign", label="sign")


def custom(fn: Callable, dfn: Callable | None = None, label: str = "custom") -> FunctionDescriptor:
    return FunctionDescriptor("custom", (label,), label=label, _fn=fn, _dfn=dfn)


def parse(text: str) -> FunctionDescriptor:
    """Parse the short textual names used in config files.

    Examples: ``identity``, ``tanh``, ``square``, ``const:0``, ``negpart:0``,
    ``abs:1.5``, ``indicator:-1,1``, ``sign``.
    """
    name, _, arg = text.strip().partition(":")
    name = name.lower()
    if name == "identity":
        return identity()
    if name in _SMOOTH:
        return smooth(name)
    if name == "sign":
        return sign()
    if name in ("const", "constant"):
        return constant(float(arg))
    if name == "negpart":
        return neg_part(float(arg))
    if name == "abs":
        return abs_shift(float(arg))
    if name == "indicator":
        lo, hi = (float(v) for v in arg.split(","))
        return indicator(lo, hi)
    raise UnsupportedFunction(text)


# -- functions of two variables (multidimensional Ito) ----------------------

@dataclass(frozen=True)
class Function2D:
    """``F(x, y)`` together with its partial derivatives ``f_1``, ``f_2``."""

    fn: Callable
    d1: Callable
    d2: Callable
    label: str = "F2"

    def value(self, z):
        z = np.asarray(z, dtype=float)
        return np.asarray(self.fn(z[..., 0], z[..., 1]), dtype=float)

    def partial(self, i: int, z):
        z = np.asarray(z, dtype=float)
        d = self.d1 if i == 0 else self.d2
        return np.asarray(d(z[..., 0], z[..., 1]), dtype=float) + 0.0 * z[..., 0]


def f2_sum() -> Function2D:
    return Function2D(lambda x, y: x + y, lambda x, y: 1.0, lambda x, y: 1.0, "x+y")


def f2_product() -> Function2D:
    return Function2D(lambda x, y: x * y, lambda x, y: y, lambda x, y: x, "xy")


def f2_constant(c: float = 0.0) -> Function2D:
    return Function2D(lambda x, y: c + 0.0 * x, lambda x, y: 0.0, lambda x, y: 0.0, f"const({c})")


def f2_sincos() -> Function2D:
    return Function2D(lambda x, y: np.sin(x) * np.cos(y),
                      lambda x, y: np.cos(x) * np.cos(y),
                      lambda x, y: -np.sin(x) * np.sin(y), "sin(x)cos(y)")


def parse_2d(text: str) -> Function2D:
    name = text.strip().lower()
    table = {"sum": f2_sum, "product": f2_product, "xy": f2_product,
             "sincos": f2_sincos, "zero": f2_constant}
    if name not in table:
        raise UnsupportedFunction(text)
    return table[name]()
