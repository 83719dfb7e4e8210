"""Chart-based tensor calculus for a symplectic manifold with a connection.

Conventions used throughout:

* ``gamma[k, i, j]`` is the Christoffel symbol with nabla_{d_i} d_j = gamma^k_ij d_k.
* ``R[l, k, i, j]`` is the curvature with R(d_i, d_j) d_k = R^l_kij d_l and
  R(X, Y) = [nabla_X, nabla_Y] - nabla_[X,Y].
* ``ricci[i, j] = R[l, j, i, l]``, i.e. r(X, Y) = Tr[Z -> R(X, Z) Y].  With
  this trace the induced connection below is Ricci-flat for
  shat = -r / (2(n+1)) and the E-part of the curvature carries the full
  Ricci trace.
* A 2-form ``w[i, j]`` is the full antisymmetric matrix w(d_i, d_j).
* Endomorphisms ``A[k, j]`` act as (A d_j) = A^k_j d_k; covariant derivatives
  carry the differentiation index first: ``nablaA[i, k, j]``.

All fields hand out :class:`~scl.jet.Jet` tensors; every differentiation costs
one jet order, so quantities computed from order-K inputs automatically come
out at the order they are exact to.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Mapping, Sequence

import numpy as np

from .expr import Const, Expression, as_expression
from .jet import Jet, jeinsum, jet_variables, jinv, jstack

__all__ = [
    "Chart",
    "DegenerateFormError",
    "Verdict",
    "DerivedField",
    "OneFormField",
    "TwoFormField",
    "ExactTwoForm",
    "VectorField",
    "Connection",
    "ConnectionField",
    "PotentialConnection",
    "LocalGeometry",
    "eval_components",
    "d_one_form",
    "d_two_form",
    "check_symplectic",
    "omega_inverse",
    "torsion",
    "nabla_two_form",
    "curvature",
    "ricci",
    "endo_from_bilinear",
    "rho_endomorphism",
    "covariant_derivative_endo",
    "covariant_derivative_vector",
    "e_component",
    "w_component",
    "is_ricci_type",
    "lie_derivative_connection",
    "lie_derivative_form",
    "lie_bracket",
    "interior",
    "curvature_fd",
    "ricci_fd",
    "derivative_engine_gap",
]


class DegenerateFormError(np.linalg.LinAlgError):
    """The 2-form is singular at the requested point."""


@dataclass(frozen=True)
class Chart:
    dim: int
    labels: tuple[str, ...] = ()
    allow_low_dim: bool = False

    def __post_init__(self):
        if self.dim % 2:
            raise ValueError(f"chart dimension must be even, got {self.dim}")
        floor = 2 if self.allow_low_dim else 4
        if self.dim < floor:
            raise ValueError(f"chart dimension must be >= {floor}, got {self.dim}")
        if not self.labels:
            object.__setattr__(self, "labels", tuple(f"x{i + 1}" for i in range(self.dim)))
        elif len(self.labels) != self.dim:
            raise ValueError("one label per coordinate is required")

    @property
    def n(self) -> int:
        return self.dim // 2


@dataclass
class Verdict:
    passed: bool
    residuals: dict[str, float] = field(default_factory=dict)
    failures: list[str] = field(default_factory=list)

    def __bool__(self) -> bool:
        return self.passed


# ---------------------------------------------------------------------------
# fields


def eval_components(exprs, point, order: int) -> Jet:
    """Evaluate an array of Expressions on shared coordinate jets."""
    exprs = np.asarray(exprs, dtype=object)
    xs = jet_variables(point, order)
    flat = []
    for e in exprs.ravel():
        v = e.evaluate(xs)
        flat.append(v if isinstance(v, Jet) else Jet.constant(v, len(xs), order, xs[0].point))
    if not flat:
        raise ValueError("no components to evaluate")
    return jstack(flat).reshape(*exprs.shape)


class DerivedField:
    """A tensor field given by a jet evaluator.

    ``compute(point, order)`` must return jets of at least ``order``; `depth`
    records how many derivatives of the underlying base expressions the
    definition consumes.
    """

    def __init__(self, dim: int, compute: Callable[[np.ndarray, int], Jet],
                 depth: int = 0, shape: tuple[int, ...] = (), name: str = ""):
        self.dim = dim
        self._compute = compute
        self.depth = depth
        self.shape = shape
        self.name = name

    def jets(self, point, order: int) -> Jet:
        return self._compute(np.asarray(point, dtype=float), order).truncate(order)

    def __call__(self, point):
        return self.jets(point, 0).value


class OneFormField:
    def __init__(self, components: Sequence, dim: int | None = None):
        dim = len(components) if dim is None else dim
        if len(components) != dim:
            raise ValueError(f"one-form needs {dim} components, got {len(components)}")
        self.dim = dim
        self.components = tuple(as_expression(c, dim) for c in components)

    def jets(self, point, order: int) -> Jet:
        return eval_components(self.components, point, order)

    def __call__(self, point):
        return self.jets(point, 0).value


class TwoFormField:
    """Antisymmetric 2-form; only entries with i < j are stored."""

    def __init__(self, dim: int, upper: Mapping[tuple[int, int], object]):
        self.dim = dim
        stored = {}
        for (i, j), e in upper.items():
            if not (0 <= i < j < dim):
                raise ValueError(f"2-form entries are keyed by 0-based i < j, got {(i, j)}")
            stored[(i, j)] = as_expression(e, dim)
        self.upper = stored

    @classmethod
    def from_matrix(cls, matrix) -> "TwoFormField":
        m = np.asarray(matrix, dtype=float)
        if not np.allclose(m, -m.T, atol=0):
            raise ValueError("matrix is not antisymmetric")
        d = m.shape[0]
        return cls(d, {(i, j): Const(float(m[i, j])) for i in range(d) for j in range(i + 1, d)
                       if m[i, j] != 0})

    def jets(self, point, order: int) -> Jet:
        exprs = np.full((self.dim, self.dim), Const(0.0), dtype=object)
        for (i, j), e in self.upper.items():
            exprs[i, j] = e
        upper = eval_components(exprs, point, order)
        return upper - upper.transpose(1, 0)

    def __call__(self, point):
        return self.jets(point, 0).value


class ExactTwoForm:
    """The exterior derivative d(lambda) of a one-form, as a field."""

    depth = 1

    def __init__(self, lam: OneFormField):
        self.lam = lam
        self.dim = lam.dim

    def jets(self, point, order: int) -> Jet:
        return _d_one_form_jets(self.lam.jets(point, order + 1))

    def __call__(self, point):
        return self.jets(point, 0).value


class VectorField:
    def __init__(self, components: Sequence, dim: int | None = None):
        dim = len(components) if dim is None else dim
        if len(components) != dim:
            raise ValueError(f"vector field needs {dim} components, got {len(components)}")
        self.dim = dim
        self.components = tuple(as_expression(c, dim) for c in components)

    @classmethod
    def coordinate(cls, index: int, dim: int) -> "VectorField":
        return cls([Const(1.0) if k == index else Const(0.0) for k in range(dim)])

    @classmethod
    def constant(cls, vec) -> "VectorField":
        return cls([Const(float(v)) for v in vec])

    def jets(self, point, order: int) -> Jet:
        return eval_components(self.components, point, order)

    def __call__(self, point):
        return self.jets(point, 0).value


class Connection:
    """A linear connection on a chart, known through its Christoffel jets."""

    dim: int

    def christoffel_jets(self, point, order: int) -> Jet:
        raise NotImplementedError

    def __call__(self, point):
        return self.christoffel_jets(point, 0).value


class ConnectionField(Connection):
    """Torsion-free connection from explicit Christoffel expressions.

    `symbols` maps 0-based ``(k, i, j)`` with ``i <= j`` to expressions;
    missing entries are zero and ``gamma^k_ji = gamma^k_ij`` by construction.
    """

    def __init__(self, chart: Chart, symbols: Mapping[tuple[int, int, int], object],
                 omega=None):
        self.chart = chart
        self.dim = chart.dim
        self.omega = omega
        stored = {}
        for (k, i, j), e in symbols.items():
            if i > j:
                i, j = j, i
            if (k, i, j) in stored:
                raise ValueError(f"duplicate Christoffel entry for (k, i, j) = {(k, i, j)}")
            if not all(0 <= a < self.dim for a in (k, i, j)):
                raise ValueError(f"Christoffel index {(k, i, j)} out of range")
            stored[(k, i, j)] = as_expression(e, self.dim)
        self.symbols = stored

    @classmethod
    def flat(cls, chart: Chart, omega=None) -> "ConnectionField":
        return cls(chart, {}, omega)

    def christoffel_jets(self, point, order: int) -> Jet:
        d = self.dim
        exprs = np.full((d, d, d), Const(0.0), dtype=object)
        for (k, i, j), e in self.symbols.items():
            exprs[k, i, j] = e
            exprs[k, j, i] = e
        return eval_components(exprs, point, order)


class PotentialConnection(Connection):
    """gamma^l_ki = pi^{jl} d_j d_k d_i phi, with pi the inverse of omega.

    For constant omega the lowered symbols are totally symmetric, which makes
    the connection torsion-free and omega-parallel.
    """

    depth = 3

    def __init__(self, chart: Chart, omega, phi):
        self.chart = chart
        self.dim = chart.dim
        self.omega = omega
        self.phi = as_expression(phi, chart.dim)

    def christoffel_jets(self, point, order: int) -> Jet:
        phi = eval_components([self.phi], point, order + 3)[0]
        third = phi.grad().grad().grad()  # [a, b, c] = d_a d_b d_c phi
        pi = jinv(self.omega.jets(point, order))
        return jeinsum("jl,jki->lki", pi, third)


# ---------------------------------------------------------------------------
# jet-level tensor algebra


def _d_one_form_jets(lam: Jet) -> Jet:
    g = lam.grad()  # [i, j] = d_i lam_j
    return g - g.transpose(1, 0)


def _d_two_form_jets(w: Jet) -> Jet:
    g = w.grad()  # [i, j, k] = d_i w_jk
    return g + jeinsum("jki->ijk", g) + jeinsum("kij->ijk", g)


def curvature_jets(gamma: Jet) -> Jet:
    dg = gamma.grad()  # [i, l, j, k] = d_i gamma^l_jk
    return (jeinsum("iljk->lkij", dg) - jeinsum("jlik->lkij", dg)
            + jeinsum("lim,mjk->lkij", gamma, gamma)
            - jeinsum("ljm,mik->lkij", gamma, gamma))


def ricci_jets(R: Jet) -> Jet:
    return jeinsum("ljil->ij", R)


def torsion_jets(gamma: Jet) -> Jet:
    return gamma - gamma.transpose(0, 2, 1)


def nabla_form_jets(gamma: Jet, w: Jet) -> Jet:
    """[k, i, j] = (nabla_k w)_ij."""
    return (w.grad() - jeinsum("lki,lj->kij", gamma, w)
            - jeinsum("lkj,il->kij", gamma, w))


def cov_endo_jets(gamma: Jet, A: Jet) -> Jet:
    return (A.grad() + jeinsum("kil,lj->ikj", gamma, A)
            - jeinsum("lij,kl->ikj", gamma, A))


def cov_vector_jets(gamma: Jet, V: Jet) -> Jet:
    return V.grad() + jeinsum("kil,l->ik", gamma, V)


def lie_connection_jets(V: Jet, gamma: Jet) -> Jet:
    dV = V.grad()  # [l, k] = d_l V^k
    ddV = dV.grad()  # [i, l, k]
    return (jeinsum("ijk->kij", ddV)
            + jeinsum("l,lkij->kij", V, gamma.grad())
            - jeinsum("lij,lk->kij", gamma, dV)
            + jeinsum("klj,il->kij", gamma, dV)
            + jeinsum("kil,jl->kij", gamma, dV))


def lie_form_jets(V: Jet, w: Jet) -> Jet:
    dV = V.grad()
    return (jeinsum("k,kij->ij", V, w.grad())
            + jeinsum("kj,ik->ij", w, dV)
            + jeinsum("ik,jk->ij", w, dV))


def bracket_jets(V: Jet, W: Jet) -> Jet:
    return jeinsum("i,ik->k", V, W.grad()) - jeinsum("i,ik->k", W, V.grad())


def interior_jets(V: Jet, w: Jet) -> Jet:
    return jeinsum("i,ij->j", V, w)


def _endo_jets(pi: Jet, b: Jet) -> Jet:
    return jeinsum("ki,ij->kj", pi, b)


class LocalGeometry:
    """Jets of every curvature quantity of (omega, connection) around a point.

    Built once per point at a chosen order; each derived quantity is computed
    lazily and comes out at the order it is exact to.
    """

    def __init__(self, connection: Connection, omega, point, order: int):
        self.point = np.asarray(point, dtype=float)
        self.dim = connection.dim
        self.n = self.dim // 2
        self.gamma = connection.christoffel_jets(self.point, order)
        self.omega = omega.jets(self.point, order)

    @cached_property
    def pi(self) -> Jet:
        w0 = self.omega.value
        if abs(np.linalg.det(w0)) < 1e-14:
            raise DegenerateFormError(f"2-form is degenerate at {self.point.tolist()}")
        return jinv(self.omega)

    @cached_property
    def curvature(self) -> Jet:
        return curvature_jets(self.gamma)

    @cached_property
    def ricci(self) -> Jet:
        return ricci_jets(self.curvature)

    @cached_property
    def rho(self) -> Jet:
        return _endo_jets(self.pi, self.ricci)

    @cached_property
    def nabla_omega(self) -> Jet:
        return nabla_form_jets(self.gamma, self.omega)

    @cached_property
    def e_component(self) -> Jet:
        d = self.dim
        eye = np.eye(d)
        w, rho, r = self.omega, self.rho, self.ricci
        total = (2.0 * jeinsum("ij,lk->lkij", w, rho)
                 - jeinsum("jk,li->lkij", w, rho)
                 + jeinsum("ik,lj->lkij", w, rho)
                 - jeinsum("jk,li->lkij", r, eye)
                 + jeinsum("ik,lj->lkij", r, eye))
        return total * (1.0 / (2 * (self.n + 1)))

    @cached_property
    def w_component(self) -> Jet:
        return self.curvature - self.e_component

    def endo(self, b: Jet) -> Jet:
        return _endo_jets(self.pi, b)

    def nabla_endo(self, A: Jet) -> Jet:
        return cov_endo_jets(self.gamma, A)

    def nabla_vector(self, V: Jet) -> Jet:
        return cov_vector_jets(self.gamma, V)


# ---------------------------------------------------------------------------
# point-level operations


def _pt(point) -> np.ndarray:
    return np.asarray(point, dtype=float)


def d_one_form(lam: OneFormField, point) -> np.ndarray:
    return _d_one_form_jets(lam.jets(_pt(point), 1)).value


def d_two_form(omega, point) -> np.ndarray:
    return _d_two_form_jets(omega.jets(_pt(point), 1)).value


def omega_inverse(omega, point) -> np.ndarray:
    w = omega.jets(_pt(point), 0).value if not isinstance(omega, np.ndarray) else omega
    if not np.all(np.isfinite(w)) or abs(np.linalg.det(w)) < 1e-14 or np.linalg.cond(w) > 1e13:
        raise DegenerateFormError(f"2-form is degenerate at {np.asarray(point).tolist()}")
    return np.linalg.inv(w)


def check_symplectic(omega, points, tol: float = 1e-9, det_floor: float | None = None) -> Verdict:
    """Closedness and nondegeneracy of a 2-form at sample points.

    Nondegeneracy requires |det omega| >= det_floor (default: `tol`).
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    if len(points) == 0:
        raise ValueError("at least one sample point is required")
    floor = tol if det_floor is None else det_floor
    failures = []
    max_d, min_det = 0.0, np.inf
    for p in points:
        jets = omega.jets(p, 1)
        dw = float(np.max(np.abs(_d_two_form_jets(jets).value)))
        det = float(abs(np.linalg.det(jets.value)))
        max_d, min_det = max(max_d, dw), min(min_det, det)
        if dw > tol:
            failures.append(f"not closed at {p.tolist()}: max|d omega| = {dw:.3e}")
        if det < floor:
            failures.append(f"degenerate at {p.tolist()}: |det omega| = {det:.3e}")
    return Verdict(not failures, {"closedness": max_d, "min_abs_det": min_det}, failures)


def torsion(connection: Connection, point) -> np.ndarray:
    return torsion_jets(connection.christoffel_jets(_pt(point), 0)).value


def nabla_two_form(connection: Connection, omega, point) -> np.ndarray:
    p = _pt(point)
    return nabla_form_jets(connection.christoffel_jets(p, 0), omega.jets(p, 1)).value


def curvature(connection: Connection, point) -> np.ndarray:
    return curvature_jets(connection.christoffel_jets(_pt(point), 1)).value


def ricci(connection: Connection, point) -> np.ndarray:
    return ricci_jets(curvature_jets(connection.christoffel_jets(_pt(point), 1))).value


def endo_from_bilinear(omega, b, point) -> np.ndarray:
    """sigma with b(X, Y) = omega(X, sigma Y), for a symmetric bilinear b."""
    p = _pt(point)
    bv = b.jets(p, 0).value if hasattr(b, "jets") else np.asarray(b, dtype=float)
    if not np.allclose(bv, bv.T, rtol=0, atol=1e-12):
        raise ValueError("bilinear form must be symmetric")
    return omega_inverse(omega, p) @ bv


def rho_endomorphism(connection: Connection, omega, point) -> np.ndarray:
    return LocalGeometry(connection, omega, point, 1).rho.value


def covariant_derivative_endo(connection: Connection, A, point) -> np.ndarray:
    p = _pt(point)
    return cov_endo_jets(connection.christoffel_jets(p, 0), A.jets(p, 1)).value


def covariant_derivative_vector(connection: Connection, V, point) -> np.ndarray:
    p = _pt(point)
    return cov_vector_jets(connection.christoffel_jets(p, 0), V.jets(p, 1)).value


def e_component(connection: Connection, omega, point) -> np.ndarray:
    return LocalGeometry(connection, omega, point, 1).e_component.value


def w_component(connection: Connection, omega, point) -> np.ndarray:
    return LocalGeometry(connection, omega, point, 1).w_component.value


def is_ricci_type(connection: Connection, omega, samples, tol: float = 1e-9) -> Verdict:
    worst = 0.0
    failures = []
    for p in np.atleast_2d(np.asarray(samples, dtype=float)):
        w = float(np.max(np.abs(w_component(connection, omega, p))))
        worst = max(worst, w)
        if w > tol:
            failures.append(f"W = {w:.3e} at {p.tolist()}")
    return Verdict(not failures, {"max_abs_W": worst}, failures)


def lie_derivative_connection(V, connection: Connection, point) -> np.ndarray:
    """(L_V nabla)(d_i, d_j) components [k, i, j]."""
    p = _pt(point)
    return lie_connection_jets(V.jets(p, 2), connection.christoffel_jets(p, 1)).value


def lie_derivative_form(V, omega, point) -> np.ndarray:
    p = _pt(point)
    return lie_form_jets(V.jets(p, 1), omega.jets(p, 1)).value


def lie_bracket(V, W, point) -> np.ndarray:
    p = _pt(point)
    return bracket_jets(V.jets(p, 1), W.jets(p, 1)).value


def interior(V, omega, point) -> np.ndarray:
    p = _pt(point)
    return interior_jets(V.jets(p, 0), omega.jets(p, 0)).value


# ---------------------------------------------------------------------------
# finite-difference oracle: only order-0 Christoffel values are used


def _christoffel_gradient_fd(connection: Connection, point, h: float) -> np.ndarray:
    p = _pt(point)
    d = len(p)
    out = []
    for i in range(d):
        e = np.zeros(d)
        e[i] = h
        out.append((connection(p + e) - connection(p - e)) / (2 * h))
    return np.array(out)  # [i, l, j, k]


def curvature_fd(connection: Connection, point, h: float = 1e-4) -> np.ndarray:
    g = connection(_pt(point))
    dg = _christoffel_gradient_fd(connection, point, h)
    return (np.einsum("iljk->lkij", dg) - np.einsum("jlik->lkij", dg)
            + np.einsum("lim,mjk->lkij", g, g) - np.einsum("ljm,mik->lkij", g, g))


def ricci_fd(connection: Connection, point, h: float = 1e-4) -> np.ndarray:
    return np.einsum("ljil->ij", curvature_fd(connection, point, h))


def derivative_engine_gap(connection: Connection, points, h: float = 1e-4) -> dict[str, float]:
    """Relative gap between jet and central-difference curvature and Ricci.

    The gap is max|jet - fd| / max(max|jet|, 1) so that vanishing tensors are
    measured on an absolute scale.
    """
    worst = {"curvature": 0.0, "ricci": 0.0}
    for p in np.atleast_2d(np.asarray(points, dtype=float)):
        R = curvature(connection, p)
        Rfd = curvature_fd(connection, p, h)
        r = ricci_jets(curvature_jets(connection.christoffel_jets(_pt(p), 1))).value
        rfd = np.einsum("ljil->ij", Rfd)
        for key, a, b in (("curvature", R, Rfd), ("ricci", r, rfd)):
            scale = max(float(np.abs(a).max()), 1.0)
            worst[key] = max(worst[key], float(np.abs(a - b).max()) / scale)
    return worst
