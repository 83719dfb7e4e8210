"""Reducing an induced space back to M along the level set mu(S, E) = 1.

Sigma is the hypersurface ``s = s0`` with ``2 e^{2 s0} = 1``.  The horizontal
lift of a vector on M is obtained by making it mu-orthogonal to E and S; the
reduced form and connection are read off from mu and the induced connection
along Sigma and then pulled back to M.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.optimize import brentq

from . import geometry as geo
from .geometry import Connection, DerivedField
from .induction import (
    CoordConnectionP,
    ExactSymplecticSpec,
    InducedSpace,
    RicciFlatParameters,
    induced_connection,
    sample_points,
)
from .jet import Jet, jeinsum, jinv
from .report import VerificationReport

__all__ = [
    "SigmaLevel",
    "NotTangentError",
    "ReducedConnection",
    "ReducedStructures",
    "locate_sigma",
    "horizontal_lift_jets",
    "reduced_form",
    "reduced_form_field",
    "sigma_connection",
    "reduced_connection",
    "reduce",
    "roundtrip_report",
]


class NotTangentError(ValueError):
    """A vector handed to the Sigma connection is not tangent to Sigma."""


@dataclass(frozen=True)
class SigmaLevel:
    space: InducedSpace
    s0: float

    def point(self, x, t: float = 0.0) -> np.ndarray:
        return np.concatenate([np.asarray(x, dtype=float), [t, self.s0]])

    def mu_SE(self, s: float | None = None, x=None, t: float = 0.0) -> float:
        sp = self.space
        x = np.zeros(sp.base_dim) if x is None else x
        y = np.concatenate([x, [t, self.s0 if s is None else s]])
        return float(sp.mu_jets(y, 0).value[sp.s_index, sp.t_index])

    def tangency_residual(self, y) -> float:
        """max |i(E)mu| on the horizontal lifts and on E at a point of Sigma."""
        sp = self.space
        mu = sp.mu_jets(np.asarray(y, dtype=float), 0).value
        H = horizontal_lift_jets(sp, y, 0).value
        return float(max(np.abs(mu[sp.t_index] @ H).max(), abs(mu[sp.t_index, sp.t_index])))


def locate_sigma(space: InducedSpace, bracket=(-5.0, 5.0)) -> SigmaLevel:
    """Solve mu(S, E) = 1 for s; mu(S, E) depends on s only."""
    probe = SigmaLevel(space, 0.0)
    s0 = brentq(lambda s: probe.mu_SE(s) - 1.0, *bracket, xtol=1e-16, rtol=4 * np.finfo(float).eps)
    return SigmaLevel(space, float(s0))


def horizontal_lift_jets(space: InducedSpace, y, order: int) -> Jet:
    """H[nu, i]: the lift of d_i that is mu-orthogonal to E and S and projects to d_i."""
    D, d = space.dim, space.base_dim
    mu = space.mu_jets(np.asarray(y, dtype=float), order)
    vert = np.zeros((D, 2))
    vert[space.t_index, 0] = vert[space.s_index, 1] = 1.0
    base = np.eye(D)[:, :d]
    gram = jeinsum("nb,nm,ma->ab", vert, mu, vert)  # [a, b] = mu(v_b, v_a)
    rhs = jeinsum("ni,nm,ma->ai", base, mu, vert)  # [a, i] = mu(d_i, v_a)
    c = -jeinsum("ba,ai->bi", jinv(gram), rhs)
    return jeinsum("nb,bi->ni", vert, c) + base


def reduced_form_field(level: SigmaLevel, t: float = 0.0) -> DerivedField:
    """omega_red on M: mu on horizontal lifts at (x, t, s0)."""
    sp = level.space

    def compute(x, k):
        y = level.point(x, t)
        H = horizontal_lift_jets(sp, y, k)
        return jeinsum("ni,nm,mj->ij", H, sp.mu_jets(y, k), H).restrict(sp.base_dim)

    return DerivedField(sp.base_dim, compute, shape=(sp.base_dim,) * 2, name="omega_red")


def reduced_form(level: SigmaLevel, x, Y1, Y2, t: float = 0.0) -> float:
    w = reduced_form_field(level, t)(x)
    return float(np.asarray(Y1, dtype=float) @ w @ np.asarray(Y2, dtype=float))


def _nabla(G: Jet, A: Jet, B: Jet) -> Jet:
    """Coordinate covariant derivative nabla_A B of vector jets (B one order higher)."""
    k = min(G.order, A.order, B.order - 1)
    A, G = A.truncate(k), G.truncate(k)
    return jeinsum("m,mn->n", A, B.grad().truncate(k)) + jeinsum("nmk,m,k->n", G, A, B.truncate(k))


def sigma_connection(level: SigmaLevel, ccp: Connection, A, B, y, tol: float = 1e-10) -> np.ndarray:
    """nabla^P_A B - mu(nabla^P_A B, E) S for fields A, B tangent to Sigma."""
    sp = level.space
    y = np.asarray(y, dtype=float)
    if abs(y[sp.s_index] - level.s0) > tol:
        raise NotTangentError("point is not on Sigma")
    Aj, Bj = A.jets(y, 0), B.jets(y, 1)
    for name, v in (("A", Aj.value), ("B", Bj.value)):
        if abs(v[sp.s_index]) > tol:
            raise NotTangentError(f"{name} has a d_s component {v[sp.s_index]:.3e}")
    v = _nabla(ccp.christoffel_jets(y, 0), Aj, Bj).value
    mu = sp.mu_jets(y, 0).value
    out = v.copy()
    out[sp.s_index] -= v @ mu[:, sp.t_index]
    return out


class ReducedConnection(Connection):
    """nabla^M on M, read off along Sigma at a fixed fiber coordinate t."""

    def __init__(self, level: SigmaLevel, ccp: CoordConnectionP, t: float = 0.0):
        self.level = level
        self.ccp = ccp
        self.t = t
        self.dim = level.space.base_dim
        self._cache = lru_cache(maxsize=64)(self._lifted)

    def _lifted(self, key: tuple, order: int) -> tuple[Jet, Jet]:
        sp = self.level.space
        y = self.level.point(np.array(key), self.t)
        G = self.ccp.christoffel_jets(y, order)
        mu = sp.mu_jets(y, order)
        H = horizontal_lift_jets(sp, y, order + 1)
        Hk = H.truncate(order)
        V = (jeinsum("mi,mnj->nij", Hk, H.grad())
             + jeinsum("nmk,mi,kj->nij", G, Hk, Hk))  # nabla^P_{H_i} H_j
        V = V - jeinsum("n,ij->nij", np.eye(sp.dim)[sp.s_index],
                        jeinsum("nij,n->ij", V, mu[:, sp.t_index]))
        W = jeinsum("nmk,mi,k->ni", G, Hk, np.eye(sp.dim)[sp.s_index])  # nabla^P_{H_i} S
        corr = jeinsum("nj,nm,mi->ij", Hk, mu, W)
        lifted = V - jeinsum("n,ij->nij", np.eye(sp.dim)[sp.t_index], corr)
        return lifted, Hk

    def lifted_jets(self, x, order: int) -> Jet:
        """(nabla^M_{d_i} d_j)-bar as a vector on P, indexed [nu, i, j]."""
        return self._cache(tuple(float(v) for v in x), order)[0]

    def christoffel_jets(self, x, order: int) -> Jet:
        lifted = self.lifted_jets(x, order)
        d = self.dim
        return jeinsum("kn,nij->kij", np.eye(lifted.shape[0])[:d], lifted).restrict(d)

    def horizontality(self, x) -> float:
        """max |lifted - H gamma^M|: the lifted derivative must be a horizontal lift."""
        lifted, H = self._cache(tuple(float(v) for v in x), 0)
        G = self.christoffel_jets(x, 0).value
        return float(np.abs(lifted.value - np.einsum("nk,kij->nij", H.value, G)).max())


@dataclass
class ReducedStructures:
    level: SigmaLevel
    omega_red: DerivedField
    connection: ReducedConnection
    scale_ledger: dict[str, float] = field(default_factory=dict)


def reduced_connection(level: SigmaLevel, ccp: CoordConnectionP, x, Y1, Y2, t: float = 0.0) -> np.ndarray:
    gamma = ReducedConnection(level, ccp, t)(x)
    return np.einsum("kij,i,j->k", gamma, Y1, Y2)


def reduce(space: InducedSpace, params: RicciFlatParameters | None = None,
           t: float = 0.0) -> ReducedStructures:
    level = locate_sigma(space)
    ccp = CoordConnectionP(induced_connection(space, params))
    return ReducedStructures(level, reduced_form_field(level, t), ReducedConnection(level, ccp, t),
                             {"reduced_form_factor": float(np.exp(2 * level.s0))})


ANCHORS = {
    "sigma_level": "constraint hypersurface mu(S, E) = 1",
    "s0_closed_form": "constraint hypersurface sits at s0 = -ln(2)/2",
    "horizontal_lift": "mu-orthogonal complement of E and S is spanned by the lifts",
    "sigma_tangent": "Sigma connection is tangent to Sigma",
    "omega_red": "reduced 2-form is e^{2 s0} omega",
    "christoffel_roundtrip": "reducing the induced connection recovers the input",
    "reduced_torsion": "reduced connection is torsion free",
    "reduced_symplectic": "reduced connection preserves the reduced form",
    "fiber_independence": "reduced connection does not depend on the fiber point",
}


def roundtrip_report(spec: ExactSymplecticSpec, samples=None, tol: float | None = None, *,
                     params: RicciFlatParameters | None = None, scale_ledger: bool = True,
                     seed: int = 0, count: int = 20, fiber_ts=(-0.7, 0.0, 0.9)) -> VerificationReport:
    """Induce, reduce and compare.  With `scale_ledger` off the reduced form is
    compared to omega itself, which exposes the factor e^{2 s0}."""
    pts = sample_points(spec.n, count, seed) if samples is None else np.atleast_2d(samples)
    d = spec.dim
    space = InducedSpace(spec)
    red = reduce(space, params)
    level, nabla_M = red.level, red.connection
    factor = red.scale_ledger["reduced_form_factor"] if scale_ledger else 1.0
    others = [ReducedConnection(level, nabla_M.ccp, t) for t in fiber_ts]

    def t(default):
        return default if tol is None else tol

    worst = dict.fromkeys(["horizontal_lift", "sigma_tangent", "omega_red", "christoffel_roundtrip",
                           "reduced_torsion", "reduced_symplectic", "fiber_independence"], 0.0)

    def bump(key, value):
        worst[key] = max(worst[key], float(np.max(np.abs(value))))

    frame = space.frame
    for p in pts:
        x = p[:d]
        y = level.point(x, p[space.t_index])
        bump("horizontal_lift", horizontal_lift_jets(space, y, 0).value - frame(y)[:, :d])
        bump("horizontal_lift", level.tangency_residual(y))
        bump("sigma_tangent", nabla_M.lifted_jets(x, 0).value[space.s_index])
        bump("omega_red", red.omega_red(x) - factor * spec.omega(x))
        G = nabla_M.christoffel_jets(x, 1)
        bump("christoffel_roundtrip", G.value - spec.connection(x))
        bump("reduced_torsion", geo.torsion_jets(G.truncate(0)).value)
        bump("reduced_symplectic", geo.nabla_form_jets(G.truncate(0), red.omega_red.jets(x, 1)).value)
        bump("fiber_independence", max(np.abs(o(x) - G.value).max() for o in others))
        bump("horizontal_lift", nabla_M.horizontality(x))

    rep = VerificationReport(fixture=spec.name, seed=seed)
    rep.add("sigma_level", ANCHORS["sigma_level"], abs(level.mu_SE() - 1.0), t(1e-14))
    rep.add("s0_closed_form", ANCHORS["s0_closed_form"], abs(level.s0 + 0.5 * np.log(2.0)), t(1e-12))
    defaults = {"horizontal_lift": 1e-10, "sigma_tangent": 1e-10, "omega_red": 1e-10,
                "christoffel_roundtrip": 1e-9, "reduced_torsion": 1e-10,
                "reduced_symplectic": 1e-9, "fiber_independence": 1e-11}
    for key, value in worst.items():
        rep.add(key, ANCHORS[key], value, t(defaults[key]))
    if scale_ledger:
        rep.scale_ledger.update(red.scale_ledger)
    else:
        rep.notes.append("scale ledger disabled: reduced form compared against omega itself")
    rep.notes.append("Sigma is defined by mu(S, E) = 1, where f_E = -mu(S, E)/2 equals -1/2")
    return rep
