"""Dense truncated multivariate Taylor jets.

A :class:`Jet` stores, for every multi-index ``alpha`` with ``|alpha| <= order``,
the normalised Taylor coefficient ``d^alpha f(point) / alpha!``.  Coefficients
live on the trailing axis of ``coeffs`` so a single Jet can carry a whole
tensor of scalar jets (Christoffel symbols, curvature, ...) and all arithmetic
broadcasts over the leading tensor axes.

Multi-indices are enumerated in graded order, so truncating a jet to a lower
order is a slice of the coefficient axis.
"""
from __future__ import annotations

import math
from functools import lru_cache
from itertools import combinations_with_replacement
from typing import Sequence

import numpy as np

__all__ = [
    "Jet",
    "JetError",
    "multi_indices",
    "jet_variables",
    "jexp",
    "jsin",
    "jcos",
    "jlog",
    "jeinsum",
    "jstack",
    "jinv",
    "as_jet",
]


class JetError(ArithmeticError):
    """Raised for jet arithmetic that has no truncated-series meaning."""


# ---------------------------------------------------------------------------
# multi-index bookkeeping (cached per (nvars, order))


@lru_cache(maxsize=None)
def multi_indices(nvars: int, order: int) -> tuple[tuple[int, ...], ...]:
    """All multi-indices of total degree <= order, graded."""
    out = []
    for deg in range(order + 1):
        for combo in combinations_with_replacement(range(nvars), deg):
            alpha = [0] * nvars
            for v in combo:
                alpha[v] += 1
            out.append(tuple(alpha))
    return tuple(out)


@lru_cache(maxsize=None)
def _lookup(nvars: int, order: int) -> dict[tuple[int, ...], int]:
    return {a: i for i, a in enumerate(multi_indices(nvars, order))}


@lru_cache(maxsize=None)
def _size(nvars: int, order: int) -> int:
    return math.comb(nvars + order, order)


@lru_cache(maxsize=None)
def _product_table(nvars: int, order: int):
    """Index pairs (i, j) contributing to each output slot, sorted by slot."""
    alphas = multi_indices(nvars, order)
    look = _lookup(nvars, order)
    deg = [sum(a) for a in alphas]
    rows = []
    for i, a in enumerate(alphas):
        for j, b in enumerate(alphas):
            if deg[i] + deg[j] > order:
                continue
            k = look[tuple(x + y for x, y in zip(a, b))]
            rows.append((k, i, j))
    rows.sort()
    k_idx = np.array([r[0] for r in rows])
    i_idx = np.array([r[1] for r in rows])
    j_idx = np.array([r[2] for r in rows])
    starts = np.flatnonzero(np.r_[True, k_idx[1:] != k_idx[:-1]])
    return i_idx, j_idx, starts


@lru_cache(maxsize=None)
def _diff_table(nvars: int, order: int, var: int):
    """Source slots and factors for d/dx_var, from an order-`order` jet."""
    look = _lookup(nvars, order)
    src, fac = [], []
    for alpha in multi_indices(nvars, order - 1):
        up = list(alpha)
        up[var] += 1
        src.append(look[tuple(up)])
        fac.append(float(up[var]))
    return np.array(src, dtype=int), np.array(fac)


@lru_cache(maxsize=None)
def _restrict_table(nvars: int, order: int, keep: int):
    look = _lookup(nvars, order)
    return np.array([look[a + (0,) * (nvars - keep)] for a in multi_indices(keep, order)])


@lru_cache(maxsize=None)
def _extend_table(nvars: int, order: int, extra: int):
    look = _lookup(nvars + extra, order)
    return np.array([look[a + (0,) * extra] for a in multi_indices(nvars, order)])


# ---------------------------------------------------------------------------


class Jet:
    """Tensor of truncated Taylor expansions around a common base point."""

    __slots__ = ("coeffs", "order", "nvars", "point")
    __array_ufunc__ = None  # ndarray (op) Jet defers to the Jet operators

    def __init__(self, coeffs, order: int, nvars: int, point=None):
        coeffs = np.asarray(coeffs, dtype=float)
        if coeffs.shape[-1:] != (_size(nvars, order),):
            raise JetError(
                f"coefficient axis has length {coeffs.shape[-1:]} but "
                f"{_size(nvars, order)} multi-indices exist for "
                f"nvars={nvars}, order={order}"
            )
        self.coeffs = coeffs
        self.order = order
        self.nvars = nvars
        self.point = None if point is None else np.asarray(point, dtype=float)

    # -- constructors -----------------------------------------------------
    @classmethod
    def constant(cls, value, nvars: int, order: int, point=None) -> "Jet":
        value = np.asarray(value, dtype=float)
        coeffs = np.zeros(value.shape + (_size(nvars, order),))
        coeffs[..., 0] = value
        return cls(coeffs, order, nvars, point)

    @classmethod
    def from_dict(cls, table: dict, nvars: int, order: int, point=None) -> "Jet":
        coeffs = np.zeros(_size(nvars, order))
        look = _lookup(nvars, order)
        for alpha, c in table.items():
            coeffs[look[tuple(alpha)]] = c
        return cls(coeffs, order, nvars, point)

    # -- views ------------------------------------------------------------
    @property
    def shape(self) -> tuple[int, ...]:
        return self.coeffs.shape[:-1]

    @property
    def value(self):
        v = self.coeffs[..., 0]
        return float(v) if v.ndim == 0 else v.copy()

    def coefficient(self, alpha: Sequence[int]):
        alpha = tuple(int(a) for a in alpha)
        if len(alpha) != self.nvars:
            raise JetError(f"multi-index {alpha} has wrong length for {self.nvars} variables")
        if sum(alpha) > self.order:
            raise JetError(f"|alpha| = {sum(alpha)} exceeds jet order {self.order}")
        c = self.coeffs[..., _lookup(self.nvars, self.order)[alpha]]
        return float(c) if np.ndim(c) == 0 else c

    def partial(self, alpha: Sequence[int]):
        """The mixed partial derivative d^alpha at the base point."""
        fact = math.prod(math.factorial(a) for a in alpha)
        return fact * self.coefficient(alpha)

    def as_dict(self) -> dict[tuple[int, ...], float]:
        if self.shape:
            raise JetError("as_dict is only defined for scalar jets")
        return {a: float(c) for a, c in zip(multi_indices(self.nvars, self.order), self.coeffs)}

    def __getitem__(self, key) -> "Jet":
        if not isinstance(key, tuple):
            key = (key,)
        if any(k is Ellipsis for k in key):
            raise JetError("ellipsis indexing is not supported on jets")
        return Jet(self.coeffs[key + (Ellipsis, slice(None))], self.order, self.nvars, self.point)

    def __len__(self) -> int:
        return self.shape[0]

    def __repr__(self) -> str:
        return f"Jet(shape={self.shape}, order={self.order}, nvars={self.nvars})"

    # -- structural -------------------------------------------------------
    def truncate(self, order: int) -> "Jet":
        if order > self.order:
            raise JetError(f"cannot raise jet order from {self.order} to {order}")
        if order == self.order:
            return self
        return Jet(self.coeffs[..., : _size(self.nvars, order)], order, self.nvars, self.point)

    def diff(self, var: int) -> "Jet":
        """d/dx_var; the result has order one less."""
        if self.order < 1:
            raise JetError("cannot differentiate an order-0 jet")
        src, fac = _diff_table(self.nvars, self.order, var)
        return Jet(self.coeffs[..., src] * fac, self.order - 1, self.nvars, self.point)

    def grad(self) -> "Jet":
        """Gradient with the derivative index as the new leading axis."""
        return jstack([self.diff(v) for v in range(self.nvars)])

    def transpose(self, *axes) -> "Jet":
        axes = tuple(axes) + (len(self.shape),)
        return Jet(self.coeffs.transpose(axes), self.order, self.nvars, self.point)

    def reshape(self, *shape) -> "Jet":
        return Jet(self.coeffs.reshape(tuple(shape) + (self.coeffs.shape[-1],)),
                   self.order, self.nvars, self.point)

    def sum(self, axis=None) -> "Jet":
        if axis is None:
            axis = tuple(range(len(self.shape)))
        return Jet(self.coeffs.sum(axis=axis), self.order, self.nvars, self.point)

    def restrict(self, keep: int) -> "Jet":
        """Drop the trailing variables (fix them at the base point)."""
        idx = _restrict_table(self.nvars, self.order, keep)
        point = None if self.point is None else self.point[:keep]
        return Jet(self.coeffs[..., idx], self.order, keep, point)

    def extend(self, extra: int, point_tail=None) -> "Jet":
        """View as a jet in `extra` more (trailing) variables it does not depend on."""
        idx = _extend_table(self.nvars, self.order, extra)
        coeffs = np.zeros(self.shape + (_size(self.nvars + extra, self.order),))
        coeffs[..., idx] = self.coeffs
        point = None
        if self.point is not None:
            tail = np.zeros(extra) if point_tail is None else np.asarray(point_tail, float)
            point = np.concatenate([self.point, tail])
        return Jet(coeffs, self.order, self.nvars + extra, point)

    # -- arithmetic -------------------------------------------------------
    def _align(self, other: "Jet"):
        if other.nvars != self.nvars:
            raise JetError(f"jets over {self.nvars} and {other.nvars} variables do not mix")
        k = min(self.order, other.order)
        return self.truncate(k), other.truncate(k), k

    def __neg__(self) -> "Jet":
        return Jet(-self.coeffs, self.order, self.nvars, self.point)

    def __pos__(self) -> "Jet":
        return self

    def __add__(self, other) -> "Jet":
        if isinstance(other, Jet):
            a, b, k = self._align(other)
            return Jet(a.coeffs + b.coeffs, k, self.nvars, self.point)
        other = np.asarray(other, dtype=float)
        coeffs = np.array(np.broadcast_to(self.coeffs, np.broadcast_shapes(
            self.coeffs.shape, other.shape + (1,))))
        coeffs[..., 0] += other
        return Jet(coeffs, self.order, self.nvars, self.point)

    __radd__ = __add__

    def __sub__(self, other) -> "Jet":
        return self + (-other)

    def __rsub__(self, other) -> "Jet":
        return (-self) + other

    def __mul__(self, other) -> "Jet":
        if isinstance(other, Jet):
            a, b, k = self._align(other)
            i_idx, j_idx, starts = _product_table(self.nvars, k)
            prod = a.coeffs[..., i_idx] * b.coeffs[..., j_idx]
            return Jet(np.add.reduceat(prod, starts, axis=-1), k, self.nvars, self.point)
        other = np.asarray(other, dtype=float)
        return Jet(self.coeffs * other[..., None], self.order, self.nvars, self.point)

    __rmul__ = __mul__

    def __truediv__(self, other) -> "Jet":
        if isinstance(other, Jet):
            return self * other.reciprocal()
        other = np.asarray(other, dtype=float)
        if np.any(other == 0):
            raise ZeroDivisionError("jet divided by zero")
        return Jet(self.coeffs / other[..., None], self.order, self.nvars, self.point)

    def __rtruediv__(self, other) -> "Jet":
        return self.reciprocal() * other

    def __pow__(self, n) -> "Jet":
        if not isinstance(n, (int, np.integer)):
            raise JetError("jets support integer powers only")
        n = int(n)
        if n < 0:
            return (self ** (-n)).reciprocal()
        result = Jet.constant(np.ones(self.shape), self.nvars, self.order, self.point)
        base = self
        while n:
            if n & 1:
                result = result * base
            n >>= 1
            if n:
                base = base * base
        return result

    def reciprocal(self) -> "Jet":
        c0 = self.coeffs[..., 0]
        if np.any(c0 == 0):
            raise ZeroDivisionError("reciprocal of a jet with zero constant term")
        k = np.arange(self.order + 1)
        # d^k/dy^k (1/y) / k! = (-1)^k / y^(k+1)
        series = [((-1.0) ** j) / c0 ** (j + 1) for j in k]
        return _compose(self, series)


def as_jet(x, like: Jet) -> Jet:
    if isinstance(x, Jet):
        return x
    return Jet.constant(x, like.nvars, like.order, like.point)


def jet_variables(point: Sequence[float], order: int) -> list[Jet]:
    """Coordinate jets x_i = point_i + (x_i - point_i) around `point`."""
    point = np.asarray(point, dtype=float)
    nvars = len(point)
    out = []
    look = _lookup(nvars, order)
    for i in range(nvars):
        coeffs = np.zeros(_size(nvars, order))
        coeffs[0] = point[i]
        if order >= 1:
            e = [0] * nvars
            e[i] = 1
            coeffs[look[tuple(e)]] = 1.0
        out.append(Jet(coeffs, order, nvars, point))
    return out


# ---------------------------------------------------------------------------
# univariate functions by composition with a nilpotent increment


def _compose(x: Jet, series) -> Jet:
    """sum_k series[k] * (x - x0)^k, with series[k] broadcastable to x.shape."""
    h = Jet(x.coeffs.copy(), x.order, x.nvars, x.point)
    h.coeffs[..., 0] = 0.0
    result = Jet.constant(np.broadcast_to(series[x.order], x.shape), x.nvars, x.order, x.point)
    for k in range(x.order - 1, -1, -1):
        result = result * h + series[k]
    return result


def jexp(x: Jet) -> Jet:
    e0 = np.exp(x.coeffs[..., 0])
    return _compose(x, [e0 / math.factorial(k) for k in range(x.order + 1)])


def jsin(x: Jet) -> Jet:
    s, c = np.sin(x.coeffs[..., 0]), np.cos(x.coeffs[..., 0])
    cyc = [s, c, -s, -c]
    return _compose(x, [cyc[k % 4] / math.factorial(k) for k in range(x.order + 1)])


def jcos(x: Jet) -> Jet:
    s, c = np.sin(x.coeffs[..., 0]), np.cos(x.coeffs[..., 0])
    cyc = [c, -s, -c, s]
    return _compose(x, [cyc[k % 4] / math.factorial(k) for k in range(x.order + 1)])


def jlog(x: Jet) -> Jet:
    c0 = x.coeffs[..., 0]
    if np.any(c0 <= 0):
        raise ValueError("logarithm of a jet with nonpositive constant term")
    series = [np.log(c0)] + [((-1.0) ** (k + 1)) / (k * c0 ** k) for k in range(1, x.order + 1)]
    return _compose(x, series)


# ---------------------------------------------------------------------------
# tensor helpers


def jstack(jets: Sequence[Jet], axis: int = 0) -> Jet:
    k = min(j.order for j in jets)
    first = jets[0]
    if axis < 0:
        axis -= 1
    coeffs = np.stack([j.truncate(k).coeffs for j in jets], axis=axis)
    return Jet(coeffs, k, first.nvars, first.point)


def jeinsum(subscripts: str, *operands) -> Jet:
    """einsum over tensor axes with jet multiplication on the coefficient axis.

    Operands may be Jets or plain arrays; at most two may be Jets.
    """
    ins, out = subscripts.replace(" ", "").split("->")
    terms = ins.split(",")
    if len(terms) != len(operands):
        raise ValueError("subscripts do not match operand count")
    jets = [i for i, op in enumerate(operands) if isinstance(op, Jet)]
    if not jets:
        raise ValueError("jeinsum needs at least one Jet operand")
    if len(jets) > 2:
        # fold the first two jets, then continue
        a, b = jets[0], jets[1]
        ta, tb = terms[a], terms[b]
        keep = set("".join(t for i, t in enumerate(terms) if i not in (a, b)) + out)
        mid = "".join(dict.fromkeys(c for c in ta + tb if c in keep))
        folded = jeinsum(f"{ta},{tb}->{mid}", operands[a], operands[b])
        rest_terms = [t for i, t in enumerate(terms) if i not in (a, b)] + [mid]
        rest_ops = [op for i, op in enumerate(operands) if i not in (a, b)] + [folded]
        return jeinsum(",".join(rest_terms) + "->" + out, *rest_ops)
    ref = operands[jets[0]]
    if len(jets) == 1:
        arrays = []
        new_terms = []
        for i, (t, op) in enumerate(zip(terms, operands)):
            if i == jets[0]:
                arrays.append(op.coeffs)
                new_terms.append(t + "Z")
            else:
                arrays.append(np.asarray(op, dtype=float))
                new_terms.append(t)
        coeffs = np.einsum(",".join(new_terms) + "->" + out + "Z", *arrays)
        return Jet(coeffs, ref.order, ref.nvars, ref.point)
    a, b = operands[jets[0]], operands[jets[1]]
    a, b, k = a._align(b)
    i_idx, j_idx, starts = _product_table(a.nvars, k)
    arrays, new_terms = [], []
    for i, (t, op) in enumerate(zip(terms, operands)):
        if i == jets[0]:
            arrays.append(a.coeffs[..., i_idx])
            new_terms.append(t + "Z")
        elif i == jets[1]:
            arrays.append(b.coeffs[..., j_idx])
            new_terms.append(t + "Z")
        else:
            arrays.append(np.asarray(op, dtype=float))
            new_terms.append(t)
    prod = np.einsum(",".join(new_terms) + "->" + out + "Z", *arrays)
    return Jet(np.add.reduceat(prod, starts, axis=-1), k, a.nvars, a.point)


def jinv(m: Jet) -> Jet:
    """Inverse of a square matrix of jets (Neumann series around the value)."""
    if len(m.shape) != 2 or m.shape[0] != m.shape[1]:
        raise JetError(f"jinv needs a square matrix jet, got shape {m.shape}")
    m0 = m.coeffs[..., 0]
    inv0 = np.linalg.inv(m0)
    # m = m0 (I + inv0 h), so m^{-1} = sum_k (-inv0 h)^k inv0, and h is nilpotent
    h = Jet(m.coeffs.copy(), m.order, m.nvars, m.point)
    h.coeffs[..., 0] = 0.0
    step = -jeinsum("ij,jk->ik", inv0, h)
    result = Jet.constant(inv0, m.nvars, m.order, m.point)
    term = result
    for _ in range(m.order):
        term = jeinsum("ij,jk->ik", step, term)
        result = result + term
    return result
