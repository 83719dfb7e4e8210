"""TOML configuration: schema validation, positioned diagnostics, spec assembly."""
from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import jsonschema
import tomli

from .expr import ExprSyntaxError, parse
from .fixtures import FIXTURES, default_conformal, default_hamiltonians
from .geometry import Chart, ConnectionField, OneFormField, PotentialConnection, VectorField
from .induction import ExactSymplecticSpec
from .lifts import ConformalData, HamiltonianPair

__all__ = ["ConfigError", "ManifoldConfig", "load_config", "load_config_text", "schema"]

DEFAULT_SAMPLES = 20
DEFAULT_SEED = 0
DEFAULT_MAX_ORDER = 6
# jet order of the Christoffel symbols on M consumed by the deepest check
PIPELINE_ORDER = 5


class ConfigError(ValueError):
    def __init__(self, message: str, source: str = "<config>", line: int | None = None,
                 column: int | None = None):
        self.message = message
        self.source = source
        self.line = line
        self.column = column
        where = source
        if line is not None:
            where += f":{line}"
            if column is not None:
                where += f":{column}"
        super().__init__(f"{where}: {message}")


def schema() -> dict:
    text = resources.files("scl").joinpath("config.schema.json").read_text()
    return json.loads(text)


@dataclass
class ManifoldConfig:
    spec: ExactSymplecticSpec
    fixture: str | None = None
    hamiltonians: list[HamiltonianPair] = field(default_factory=list)
    conformal: ConformalData | None = None
    samples: int = DEFAULT_SAMPLES
    seed: int = DEFAULT_SEED
    tol: float | None = None
    max_order: int = DEFAULT_MAX_ORDER
    source: str = "<config>"

    @property
    def has_lifts(self) -> bool:
        return bool(self.hamiltonians) or self.conformal is not None

    def required_order(self) -> int:
        return PIPELINE_ORDER


class _Locator:
    """Maps a key path to the line/column where it is written."""

    def __init__(self, text: str, source: str):
        self.lines = text.splitlines()
        self.source = source

    def find(self, path) -> tuple[int | None, int | None]:
        keys = [str(p) for p in path if not isinstance(p, int)]
        start = 0
        if len(keys) > 1:
            header = re.compile(r"^\s*\[+\s*" + re.escape(".".join(keys[:-1])))
            for n, line in enumerate(self.lines):
                if header.match(line):
                    start = n
                    break
        if keys:
            pat = re.compile(r"^\s*\"?" + re.escape(keys[-1]) + r"\"?\s*=")
            for n in range(start, len(self.lines)):
                m = pat.match(self.lines[n])
                if m:
                    return n + 1, self.lines[n].index("=") + 2
            header = re.compile(r"^\s*\[+\s*" + re.escape(".".join(keys)) + r"\s*\]")
            for n, line in enumerate(self.lines):
                if header.match(line):
                    return n + 1, 1
        return None, None

    def error(self, message: str, path=()) -> ConfigError:
        line, col = self.find(path)
        return ConfigError(message, self.source, line, col)


def load_config(path) -> ManifoldConfig:
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc.strerror}", str(p)) from None
    return load_config_text(text, str(p))


def load_config_text(text: str, source: str = "<config>") -> ManifoldConfig:
    try:
        data = tomli.loads(text)
    except tomli.TOMLDecodeError as exc:
        msg = str(exc).split(" (at line")[0]
        raise ConfigError(msg, source, getattr(exc, "lineno", None), getattr(exc, "colno", None)) from None
    loc = _Locator(text, source)
    validator = jsonschema.Draft202012Validator(schema())
    errors = sorted(validator.iter_errors(data), key=lambda e: list(e.absolute_path))
    if errors:
        err = errors[0]
        path = list(err.absolute_path)
        label = ".".join(str(p) for p in path) or "<root>"
        raise loc.error(f"{label}: {err.message}", path)
    return _build(data, loc)


def _expr(loc: _Locator, src, dim: int, path, aliases=None):
    try:
        return parse(str(src), dim, aliases)
    except ExprSyntaxError as exc:
        line, col = loc.find(path)
        if line is not None:
            text = loc.lines[line - 1]
            at = text.find(str(src))
            col = (at if at >= 0 else text.index("=") + 2) + exc.position + 1
        raise ConfigError(f"{'.'.join(map(str, path))}: {exc}", loc.source, line, col) from None


def _build(data: dict, loc: _Locator) -> ManifoldConfig:
    man = data.get("manifold", {})
    verify = data.get("verify", {})
    fixture_name = man.get("fixture")
    if fixture_name is not None:
        extra = sorted(set(man) - {"fixture", "name"})
        if extra or "connection" in data:
            key = extra[0] if extra else "connection"
            path = ["manifold", key] if extra else ["connection"]
            raise loc.error(f"fixture {fixture_name!r} cannot be combined with {key!r}", path)
        spec = FIXTURES[fixture_name]()
    else:
        spec = _custom_spec(data, loc)
    if "name" in man:
        spec.name = man["name"]

    cfg = ManifoldConfig(spec=spec, fixture=fixture_name, source=loc.source,
                         samples=verify.get("samples", DEFAULT_SAMPLES),
                         seed=verify.get("seed", DEFAULT_SEED), tol=verify.get("tol"),
                         max_order=verify.get("max_order", DEFAULT_MAX_ORDER))
    if cfg.required_order() > cfg.max_order:
        raise loc.error(f"verify.max_order = {cfg.max_order} is below the order "
                        f"{cfg.required_order()} the checks need", ["verify", "max_order"])
    _lifts(cfg, data.get("lifts"), loc)
    return cfg


def _custom_spec(data: dict, loc: _Locator) -> ExactSymplecticSpec:
    man = data["manifold"]
    if "dimension" not in man:
        raise loc.error("manifold.dimension is required without a fixture", ["manifold"])
    dim = man["dimension"]
    if dim % 2 or dim < 4:
        raise loc.error(f"dimension must be even and at least 4, got {dim}", ["manifold", "dimension"])
    lam_src = man.get("lambda")
    if lam_src is None:
        raise loc.error("manifold.lambda is required without a fixture", ["manifold"])
    if len(lam_src) != dim:
        raise loc.error(f"lambda needs {dim} components, got {len(lam_src)}", ["manifold", "lambda"])
    chart = Chart(dim)
    lam = OneFormField([_expr(loc, e, dim, ["manifold", "lambda"]) for e in lam_src])
    conn_cfg = data.get("connection")
    if conn_cfg is None:
        raise loc.error("a [connection] section is required without a fixture", ["manifold"])
    spec = ExactSymplecticSpec(chart, lam, ConnectionField.flat(chart), "custom")
    mode = conn_cfg["mode"]
    if mode == "potential":
        if "potential" not in conn_cfg:
            raise loc.error("potential mode needs connection.potential", ["connection", "mode"])
        phi = _expr(loc, conn_cfg["potential"], dim, ["connection", "potential"])
        spec.connection = PotentialConnection(chart, spec.omega, phi)
    elif mode == "explicit":
        symbols = {}
        entries = conn_cfg.get("symbol", [])
        if not entries:
            raise loc.error("explicit mode needs at least one [[connection.symbol]]",
                            ["connection", "mode"])
        for n, entry in enumerate(entries):
            k, i, j = entry["k"] - 1, entry["i"] - 1, entry["j"] - 1
            path = ["connection", "symbol"]
            if max(k, i, j) >= dim:
                raise loc.error(f"symbol #{n + 1}: index out of range for dimension {dim}", path)
            key = (k, min(i, j), max(i, j))
            if key in symbols:
                raise loc.error(f"symbol #{n + 1}: duplicate entry for k={k + 1}, (i, j) = "
                                f"({i + 1}, {j + 1}); symbols are symmetric in i, j", path)
            symbols[key] = _expr(loc, entry["expr"], dim, path)
        spec.connection = ConnectionField(chart, symbols, spec.omega)
    else:
        spec.connection = ConnectionField.flat(chart, spec.omega)
    return spec


def _lifts(cfg: ManifoldConfig, lifts: dict | None, loc: _Locator) -> None:
    if not lifts:
        return
    spec, dim = cfg.spec, cfg.spec.dim
    for name, entry in lifts.get("hamiltonian", {}).items():
        path = ["lifts", "hamiltonian", name]
        f = _expr(loc, entry["f"], dim, path + ["f"])
        X = None
        if "X" in entry:
            if len(entry["X"]) != dim:
                raise loc.error(f"X needs {dim} components", path + ["X"])
            X = VectorField([_expr(loc, e, dim, path + ["X"]) for e in entry["X"]])
        cfg.hamiltonians.append(HamiltonianPair(spec, f, X, name=name))
    conf = lifts.get("conformal")
    if conf is not None:
        path = ["lifts", "conformal"]
        if len(conf["C"]) != dim:
            raise loc.error(f"C needs {dim} components", path + ["C"])
        C = VectorField([_expr(loc, e, dim, path + ["C"]) for e in conf["C"]])
        pots = {k: _expr(loc, conf[k], dim + 1, path + [k], {"t": dim})
                for k in ("b", "a") if k in conf}
        cfg.conformal = ConformalData(spec, C, **pots)


def fixture_config(name: str, with_lifts: bool = True) -> ManifoldConfig:
    """A config equivalent to ``fixture = name`` plus the default lift family."""
    spec = FIXTURES[name]()
    cfg = ManifoldConfig(spec=spec, fixture=name, source=f"<fixture {name}>")
    if with_lifts:
        cfg.hamiltonians = default_hamiltonians(spec)
        cfg.conformal = default_conformal(spec)
    return cfg
