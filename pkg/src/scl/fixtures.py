"""Named test manifolds on R^4 with lambda = x3 dx1 + x4 dx2."""
from __future__ import annotations

from .geometry import Chart, ConnectionField, OneFormField, PotentialConnection, VectorField
from .induction import ExactSymplecticSpec
from .lifts import ConformalData, HamiltonianPair

__all__ = ["FIXTURES", "flat4", "quartic4", "fixture", "default_hamiltonians",
           "default_conformal", "QUARTIC_POTENTIAL"]

LAMBDA4 = ("x3", "x4", "0", "0")
QUARTIC_POTENTIAL = "x1^4/24 + x1^2*x2^2/8 + x1*x2*x3*x4"


def flat4() -> ExactSymplecticSpec:
    chart = Chart(4)
    lam = OneFormField(LAMBDA4)
    spec = ExactSymplecticSpec(chart, lam, ConnectionField.flat(chart), "flat4")
    spec.connection.omega = spec.omega
    return spec


def quartic4() -> ExactSymplecticSpec:
    """Non-flat, not of Ricci type; gamma^l_ki = pi^{jl} d_j d_k d_i phi."""
    chart = Chart(4)
    lam = OneFormField(LAMBDA4)
    spec = ExactSymplecticSpec(chart, lam, ConnectionField.flat(chart), "quartic4")
    spec.connection = PotentialConnection(chart, spec.omega, QUARTIC_POTENTIAL)
    return spec


FIXTURES = {"flat4": flat4, "quartic4": quartic4}


def fixture(name: str) -> ExactSymplecticSpec:
    try:
        return FIXTURES[name]()
    except KeyError:
        raise KeyError(f"unknown fixture {name!r}; choose from {sorted(FIXTURES)}") from None


def default_hamiltonians(spec: ExactSymplecticSpec) -> list[HamiltonianPair]:
    return [HamiltonianPair(spec, "x1*x3", name="x1x3"),
            HamiltonianPair(spec, "x1^2/2", name="x1sq"),
            HamiltonianPair(spec, "x3^2/2", name="x3sq")]


def default_conformal(spec: ExactSymplecticSpec) -> ConformalData:
    """C = x3 d_3 + x4 d_4 satisfies i(C)omega = lambda, so b = a = t."""
    return ConformalData(spec, VectorField(["0", "0", "x3", "x4"]), b="t", a="t")
