"""Lifting Hamiltonian and conformal vector fields from M to the induced space P."""
from __future__ import annotations

from typing import Callable

import numpy as np

from . import geometry as geo
from .expr import Expression, as_expression
from .geometry import DerivedField, VectorField
from .induction import ExactSymplecticSpec, InducedSpace, _pad, sample_points
from .jet import Jet, jeinsum, jinv
from .report import VerificationReport

__all__ = [
    "LiftError",
    "HamiltonianPair",
    "ConformalData",
    "hamiltonian_lift",
    "verify_hamiltonian_lift",
    "poisson_bracket_pair",
    "bracket_residual",
    "conformal_lift_1",
    "conformal_lift_2",
    "verify_conformal_lift_1",
    "verify_conformal_lift_2",
    "lifts_report",
    "POTENTIAL_SIGN",
]

# Both potentials b and a satisfy d(potential) = alpha - i(C)omega.
POTENTIAL_SIGN = "d(potential) = alpha - i(C)omega"


class LiftError(ValueError):
    pass


def _base_field(dim: int, compute: Callable[[np.ndarray, int], Jet], name: str) -> DerivedField:
    return DerivedField(dim, compute, name=name)


def _max(value) -> float:
    return float(np.max(np.abs(value)))


class HamiltonianPair:
    """A vector field X on M together with f_X, i(X)omega = df_X.

    When `X` is omitted it is derived from `f` through the inverse of omega.
    """

    def __init__(self, spec: ExactSymplecticSpec, f, X: VectorField | None = None,
                 name: str = ""):
        self.spec = spec
        self.f = as_expression(f, spec.dim)
        self.name = name or str(self.f)
        if X is not None and X.dim != spec.dim:
            raise ValueError(f"vector field must have {spec.dim} components")
        self._explicit = X

    def f_jets(self, x, order: int) -> Jet:
        return geo.eval_components([self.f], x, order)[0]

    def vector_jets(self, x, order: int) -> Jet:
        if self._explicit is not None:
            return self._explicit.jets(x, order)
        df = self.f_jets(x, order + 1).grad()
        pi = jinv(self.spec.omega.jets(x, order))
        return jeinsum("ji,j->i", pi, df)

    @property
    def X(self):
        return self._explicit or _base_field(self.spec.dim, self.vector_jets, f"X[{self.name}]")

    def residual(self, samples) -> float:
        """max |i(X)omega - df_X| over samples of M."""
        worst = 0.0
        for x in np.atleast_2d(np.asarray(samples, dtype=float))[:, : self.spec.dim]:
            X = self.vector_jets(x, 0)
            w = self.spec.omega.jets(x, 0)
            df = self.f_jets(x, 1).grad().value
            worst = max(worst, _max(geo.interior_jets(X, w).value - df))
        return worst


class ConformalData:
    """C with L_C omega = omega, plus optional potentials b and a.

    Potentials are expressions in ``(x_1 .. x_2n, t)``; t is accepted by name.
    """

    def __init__(self, spec: ExactSymplecticSpec, C: VectorField, b=None, a=None):
        if C.dim != spec.dim:
            raise ValueError(f"conformal field must have {spec.dim} components")
        self.spec = spec
        self.C = C
        aliases = {"t": spec.dim}
        self.b = None if b is None else as_expression(b, spec.dim + 1, aliases)
        self.a = None if a is None else as_expression(a, spec.dim + 1, aliases)

    def _eta(self, y) -> np.ndarray:
        """alpha - i(C)omega as a 1-form in (x, t)."""
        d = self.spec.dim
        x = y[:d]
        iC = geo.interior_jets(self.C.jets(x, 0), self.spec.omega.jets(x, 0)).value
        alpha = np.append(self.spec.lam(x), 1.0)
        return alpha - np.append(iC, 0.0)

    def _potential_residuals(self, pot: Expression, samples) -> dict[str, float]:
        d = self.spec.dim
        reeb, exact = 0.0, 0.0
        for y in np.atleast_2d(np.asarray(samples, dtype=float)):
            grad = geo.eval_components([pot], y[: d + 1], 1)[0].grad().value
            reeb = max(reeb, abs(grad[d] - 1.0))
            exact = max(exact, _max(grad - self._eta(y)))
        return {"reeb": reeb, "exact": exact}

    def residuals(self, samples) -> dict[str, float]:
        d = self.spec.dim
        pts = np.atleast_2d(np.asarray(samples, dtype=float))
        out = {"conformal": max(
            _max(geo.lie_derivative_form(self.C, self.spec.omega, y[:d]) - self.spec.omega(y[:d]))
            for y in pts)}
        if self.b is not None:
            out.update({f"b_{k}": v for k, v in self._potential_residuals(self.b, pts).items()})
        if self.a is not None:
            out["a_exact"] = self._potential_residuals(self.a, pts)["exact"]
        return out


# ---------------------------------------------------------------------------
# lifts


def _lift(space: InducedSpace, vector: Callable[[np.ndarray, int], Jet],
          e_coeff: Callable[[np.ndarray, int], Jet], s_coeff: float, name: str) -> DerivedField:
    """Xbar + e_coeff E + s_coeff S, with e_coeff already a jet on P."""
    d = space.base_dim

    def compute(y, k):
        tail = y[d:]
        X = vector(y[:d], k).extend(2, tail)
        lam = space.spec.lam.jets(y[:d], k).extend(2, tail)
        out = _pad(X, space.dim, (0.0, s_coeff))
        shift = e_coeff(y, k) - jeinsum("i,i->", lam, X)
        coeffs = out.coeffs.copy()
        coeffs[space.t_index] += shift.coeffs
        return Jet(coeffs, k, space.dim, y)

    return DerivedField(space.dim, compute, shape=(space.dim,), name=name)


def hamiltonian_lift(hp: HamiltonianPair, space: InducedSpace) -> DerivedField:
    """X^i (d_i - lambda_i d_t) - f_X d_t."""
    d = space.base_dim
    return _lift(space, hp.vector_jets,
                 lambda y, k: -hp.f_jets(y[:d], k).extend(2, y[d:]), 0.0, f"lift[{hp.name}]")


def _moment_residual(space: InducedSpace, field: DerivedField, moment, y) -> float:
    """max |i(V)mu - d(moment)| at y, moment a jet-valued callable on P."""
    iv = geo.interior_jets(field.jets(y, 0), space.mu_jets(y, 0)).value
    return _max(iv - moment(y, 1).grad().value)


def verify_hamiltonian_lift(hp: HamiltonianPair, space: InducedSpace, samples,
                            tol: float = 1e-9) -> dict[str, float]:
    """Residuals of the lift identities; ``passed`` is included as 0.0/1.0."""
    d = space.base_dim
    lift = hamiltonian_lift(hp, space)

    def moment(y, k):
        return space.weight_jets(y, k) * hp.f_jets(y[:d], k).extend(2, y[d:])

    res = {"hamiltonian_pair": hp.residual(samples), "interior": 0.0, "symplectic": 0.0,
           "ds": 0.0, "commutes_with_E": 0.0}
    for y in np.atleast_2d(np.asarray(samples, dtype=float)):
        res["interior"] = max(res["interior"], _moment_residual(space, lift, moment, y))
        res["symplectic"] = max(res["symplectic"], _max(geo.lie_derivative_form(lift, space.mu, y)))
        res["ds"] = max(res["ds"], abs(lift(y)[space.s_index]))
        res["commutes_with_E"] = max(res["commutes_with_E"], _max(geo.lie_bracket(space.E, lift, y)))
    return res


def poisson_bracket_pair(hp1: HamiltonianPair, hp2: HamiltonianPair) -> "_BracketPair":
    """The pair ([X, Y], {f_X, f_Y}) with {f, g} = X_f(g)."""
    return _BracketPair(hp1, hp2)


class _BracketPair:
    def __init__(self, hp1: HamiltonianPair, hp2: HamiltonianPair):
        self.hp1, self.hp2 = hp1, hp2
        self.spec = hp1.spec
        self.name = f"[{hp1.name}, {hp2.name}]"

    def vector_jets(self, x, order: int) -> Jet:
        return geo.bracket_jets(self.hp1.vector_jets(x, order + 1),
                                self.hp2.vector_jets(x, order + 1))

    def f_jets(self, x, order: int) -> Jet:
        X = self.hp1.vector_jets(x, order)
        return jeinsum("i,i->", X, self.hp2.f_jets(x, order + 1).grad())


def bracket_residual(hp1: HamiltonianPair, hp2: HamiltonianPair, space: InducedSpace,
                     samples) -> float:
    """max |[X~, Y~] - ([X, Y])~| over samples."""
    d = space.base_dim
    pair = poisson_bracket_pair(hp1, hp2)
    lifted = _lift(space, pair.vector_jets,
                   lambda y, k: -pair.f_jets(y[:d], k).extend(2, y[d:]), 0.0, pair.name)
    l1, l2 = hamiltonian_lift(hp1, space), hamiltonian_lift(hp2, space)
    return max(_max(geo.lie_bracket(l1, l2, y) - lifted(y))
               for y in np.atleast_2d(np.asarray(samples, dtype=float)))


def _potential_jets(space: InducedSpace, pot: Expression):
    d = space.base_dim

    def compute(y, k):
        return geo.eval_components([pot], y[: d + 1], k)[0].extend(1, y[d + 1:])

    return compute


def conformal_lift_1(cd: ConformalData, space: InducedSpace) -> DerivedField:
    """Cbar + b E."""
    if cd.b is None:
        raise LiftError("the first conformal lift needs a potential b")
    return _lift(space, cd.C.jets, _potential_jets(space, cd.b), 0.0, "conformal_lift_1")


def conformal_lift_2(cd: ConformalData, space: InducedSpace) -> DerivedField:
    """Cbar + a E - 1/2 d_s."""
    if cd.a is None:
        raise LiftError("the second conformal lift needs a potential a")
    return _lift(space, cd.C.jets, _potential_jets(space, cd.a), -0.5, "conformal_lift_2")


def verify_conformal_lift_1(cd: ConformalData, space: InducedSpace, samples) -> dict[str, float]:
    lift = conformal_lift_1(cd, space)
    res = cd.residuals(samples)
    res["lie_mu_minus_mu"] = 0.0
    res["ds"] = 0.0
    for y in np.atleast_2d(np.asarray(samples, dtype=float)):
        res["lie_mu_minus_mu"] = max(
            res["lie_mu_minus_mu"], _max(geo.lie_derivative_form(lift, space.mu, y) - mu_value(space, y)))
        res["ds"] = max(res["ds"], abs(lift(y)[space.s_index]))
    return res


def verify_conformal_lift_2(cd: ConformalData, space: InducedSpace, samples) -> dict[str, float]:
    lift = conformal_lift_2(cd, space)
    pot = _potential_jets(space, cd.a)

    def moment(y, k):
        return -(space.weight_jets(y, k) * pot(y, k))

    res = cd.residuals(samples)
    res.update(lie_mu=0.0, moment=0.0, ds=0.0)
    for y in np.atleast_2d(np.asarray(samples, dtype=float)):
        res["lie_mu"] = max(res["lie_mu"], _max(geo.lie_derivative_form(lift, space.mu, y)))
        res["moment"] = max(res["moment"], _moment_residual(space, lift, moment, y))
        res["ds"] = max(res["ds"], abs(lift(y)[space.s_index] + 0.5))
    return res


def mu_value(space: InducedSpace, y) -> np.ndarray:
    return space.mu_jets(np.asarray(y, dtype=float), 0).value


# ---------------------------------------------------------------------------


ANCHORS = {
    "hamiltonian": "Hamiltonian lift is Hamiltonian with moment e^{2s} f_X",
    "bracket": "Hamiltonian lifts form a Lie algebra homomorphism",
    "conformal_1": "first conformal lift scales mu",
    "conformal_2": "second conformal lift is Hamiltonian with moment -a e^{2s}",
}


def lifts_report(spec: ExactSymplecticSpec, hamiltonians, conformal: ConformalData | None = None,
                 samples=None, tol: float = 1e-9, seed: int = 0,
                 count: int = 20) -> VerificationReport:
    space = InducedSpace(spec)
    pts = sample_points(spec.n, count, seed) if samples is None else np.atleast_2d(samples)
    rep = VerificationReport(fixture=spec.name, seed=seed)
    hamiltonians = list(hamiltonians)
    for hp in hamiltonians:
        res = verify_hamiltonian_lift(hp, space, pts, tol)
        rep.add(f"hamiltonian_lift[{hp.name}]", ANCHORS["hamiltonian"], max(res.values()), tol)
    if len(hamiltonians) > 1:
        worst = max(bracket_residual(h1, h2, space, pts)
                    for i, h1 in enumerate(hamiltonians) for h2 in hamiltonians[i + 1:])
        rep.add("bracket_homomorphism", ANCHORS["bracket"], worst, tol)
    if conformal is not None:
        if conformal.b is not None:
            res = verify_conformal_lift_1(conformal, space, pts)
            rep.add("conformal_lift_1", ANCHORS["conformal_1"], max(res.values()), tol)
        if conformal.a is not None:
            res = verify_conformal_lift_2(conformal, space, pts)
            rep.add("conformal_lift_2", ANCHORS["conformal_2"], max(res.values()), tol)
        rep.notes.append(f"conformal potentials use {POTENTIAL_SIGN}")
        rep.notes.append("conformal-Hamiltonian bracket is not checked")
    return rep
