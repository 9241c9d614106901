"""Run configuration: parsing, validation and catalog assembly.

Configs are YAML (or JSON, picked by the ``.json`` suffix).  Complex numbers
are written either as plain numbers or as ``{re: ..., im: ...}`` mappings.
Unknown keys are rejected everywhere and every default is echoed back in
the report, so a report fully describes the run that produced it.
"""

from __future__ import annotations

import copy
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np
import yaml

from . import catalog
from .catalog import CatalogEntry
from .errors import ConfigError
from .manifolds import Kind, ManifoldSpec, parse_manifold

CHECKS = (
    "eigenfamily",
    "polynomial",
    "lemma-eigenvalues",
    "hc-first-order",
    "regularity",
    "minimality",
    "bg-identity",
    "product-rule",
)

DEFAULT_TOLERANCES = {
    "eigenfamily": 1e-4,
    "polynomial": 1e-4,
    "lemma_eigenvalues": 1e-6,
    "hc_point": 1e-8,
    "hc_derivative": 1e-5,
    "hc_off_fibre": 1e-4,
    "regularity": 1e-3,
    "minimality": 1e-3,
    "bg_identity": 1e-3,
    "product_rule": 1e-4,
    "fibre": 1e-10,
    "estimate": 1e-4,
}

DEFAULT_SAMPLES = {"points": 50, "fibre_points": 20, "directions": 10}
DEFAULT_STEPS = {"first": 1e-4, "second": 1e-3, "curve": 1e-2, "hc": 1e-3}
EXPORT_KEYS = ("report", "csv", "json")
TOP_KEYS = ("seed", "manifold", "family", "checks", "target", "samples", "tolerances", "steps", "export")

_FAMILY_KEYS = {
    "SphereBasic": ({"j"}, set()),
    "CPBasic": ({"j", "k", "alpha"}, set()),
    "SOTrace": ({"p", "a"}, set()),
    "UTrace": ({"p", "a"}, set()),
    "SpTrace": ({"p", "a", "b"}, set()),
    "HomogeneousPoly": ({"base", "degree", "terms"}, set()),
    "SphereQuadraticA": ({"A"}, set()),
    "CPDiagonal": ({"a"}, set()),
    "SO2nDegreeD": ({"a", "d"}, set()),
    "UFirstRowDegreeD": ({"a", "d"}, set()),
    "UMinor": (set(), set()),
    "SpZ11": (set(), set()),
}

_FAMILY_KIND = {
    "SphereBasic": Kind.SPHERE,
    "CPBasic": Kind.CP,
    "SOTrace": Kind.SO,
    "UTrace": Kind.U,
    "SpTrace": Kind.SP,
    "SphereQuadraticA": Kind.SPHERE,
    "CPDiagonal": Kind.CP,
    "SO2nDegreeD": Kind.SO,
    "UFirstRowDegreeD": Kind.U,
    "UMinor": Kind.U,
    "SpZ11": Kind.SP,
}

BASE_FAMILIES = ("SphereBasic", "CPBasic", "SOTrace", "UTrace", "SpTrace")


# ---------------------------------------------------------------------------
# YAML with line numbers


class _Lines(dict):
    """Maps key paths (tuples) to 1-based source lines."""


def _construct(node, path, lines: _Lines):
    lines[path] = node.start_mark.line + 1
    if isinstance(node, yaml.MappingNode):
        out = {}
        for knode, vnode in node.value:
            key = knode.value
            if key in out:
                raise ConfigError(f"line {knode.start_mark.line + 1}: duplicate key {key!r}")
            out[key] = _construct(vnode, path + (key,), lines)
        return out
    if isinstance(node, yaml.SequenceNode):
        return [_construct(v, path + (i,), lines) for i, v in enumerate(node.value)]
    return _scalar(node)


def _scalar(node):
    loader = yaml.SafeLoader("")
    try:
        return loader.construct_object(node, deep=True)
    finally:
        loader.dispose()


def load_config_text(text: str, suffix: str = ".yaml"):
    """Parse config text; returns ``(data, lines)``."""
    lines = _Lines()
    if suffix.lower() == ".json":
        try:
            return json.loads(text), lines
        except json.JSONDecodeError as exc:
            raise ConfigError(f"line {exc.lineno}: {exc.msg}") from None
    try:
        node = yaml.compose(text, Loader=yaml.SafeLoader)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f"line {mark.line + 1}: " if mark is not None else ""
        msg = getattr(exc, "problem", None) or str(exc)
        opened = getattr(exc, "context_mark", None)
        if opened is not None and getattr(exc, "context", None):
            msg += f" ({exc.context} at line {opened.line + 1})"
        raise ConfigError(f"{where}{msg}") from None
    if node is None:
        raise ConfigError("config file is empty")
    return _construct(node, (), lines), lines


# ---------------------------------------------------------------------------
# value coercion


def parse_complex(value, where: str = "value") -> complex:
    if isinstance(value, bool):
        raise ConfigError(f"{where}: expected a number, got a boolean")
    if isinstance(value, (int, float)):
        return complex(value)
    if isinstance(value, dict):
        extra = set(value) - {"re", "im"}
        if extra:
            raise ConfigError(f"{where}: unknown keys {sorted(extra)} in complex number")
        return complex(_parse_float(value.get("re", 0.0), where), _parse_float(value.get("im", 0.0), where))
    raise ConfigError(f"{where}: expected a number or {{re, im}}, got {value!r}")


def _parse_float(value, where: str) -> float:
    if isinstance(value, bool):
        raise ConfigError(f"{where}: expected a number")
    if isinstance(value, (int, float)):
        return float(value)
    if isinstance(value, str):
        # YAML 1.1 reads exponent-only literals such as 1e-4 as strings
        try:
            return float(value)
        except ValueError:
            pass
    raise ConfigError(f"{where}: expected a number, got {value!r}")


def _parse_int(value, where: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{where}: expected an integer, got {value!r}")
    return value


def complex_to_json(z) -> dict:
    z = complex(z)
    # adding 0.0 folds negative zero into zero
    return {"re": float(z.real) + 0.0, "im": float(z.imag) + 0.0}


def _vector(value, where: str, size: int | None = None) -> np.ndarray:
    if not isinstance(value, list):
        raise ConfigError(f"{where}: expected a list")
    arr = np.array([parse_complex(v, f"{where}[{i}]") for i, v in enumerate(value)], dtype=complex)
    if size is not None and arr.size != size:
        raise ConfigError(f"{where}: expected {size} entries, got {arr.size}")
    return arr


def _matrix(value, where: str, size: int) -> np.ndarray:
    if not isinstance(value, list) or len(value) != size:
        raise ConfigError(f"{where}: expected {size} rows")
    return np.vstack([_vector(row, f"{where}[{i}]", size) for i, row in enumerate(value)])


# ---------------------------------------------------------------------------
# run config


@dataclass
class RunConfig:
    seed: int
    manifold: ManifoldSpec
    family: dict
    checks: list[str]
    target: complex = 0j
    samples: dict = field(default_factory=lambda: dict(DEFAULT_SAMPLES))
    tolerances: dict = field(default_factory=lambda: dict(DEFAULT_TOLERANCES))
    steps: dict = field(default_factory=lambda: dict(DEFAULT_STEPS))
    export: dict = field(default_factory=dict)
    source: str | None = None

    def echo(self) -> dict:
        """JSON-ready copy of the effective configuration."""
        return {
            "seed": self.seed,
            "manifold": self.manifold.to_dict(),
            "family": _jsonable(self.family),
            "checks": list(self.checks),
            "target": complex_to_json(self.target),
            "samples": dict(self.samples),
            "tolerances": dict(self.tolerances),
            "steps": dict(self.steps),
            "export": dict(self.export),
        }

    def build_entry(self) -> CatalogEntry:
        return build_family(self.family, self.manifold)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, complex):
        return complex_to_json(obj)
    return obj


def _check_keys(data: dict, allowed, where: str, lines: _Lines, path=()):
    if not isinstance(data, dict):
        raise ConfigError(f"{_line(lines, path)}{where}: expected a mapping")
    for key in data:
        if key not in allowed:
            raise ConfigError(f"{_line(lines, path + (key,))}unknown key {key!r} in {where}")


def _line(lines: _Lines, path) -> str:
    while path and path not in lines:
        path = path[:-1]
    return f"line {lines[path]}: " if path in lines else ""


def parse_config(data: Any, lines: _Lines | None = None, source: str | None = None) -> RunConfig:
    lines = lines if lines is not None else _Lines()
    _check_keys(data, TOP_KEYS, "config", lines)
    if "seed" not in data:
        raise ConfigError("config must set 'seed'")
    seed = _parse_int(data["seed"], "seed")
    if seed < 0 or seed >= 2**64:
        raise ConfigError(f"{_line(lines, ('seed',))}seed must fit in an unsigned 64-bit integer")

    mdata = data.get("manifold")
    _check_keys(mdata, ("kind", "n"), "manifold", lines, ("manifold",))
    try:
        manifold = parse_manifold(mdata.get("kind"), _parse_int(mdata.get("n"), "manifold.n"))
    except ValueError as exc:
        raise ConfigError(f"{_line(lines, ('manifold',))}{exc}") from None

    family = normalise_family(data.get("family"), manifold, lines, ("family",))

    checks = data.get("checks", [])
    if not isinstance(checks, list) or not all(isinstance(c, str) for c in checks):
        raise ConfigError(f"{_line(lines, ('checks',))}checks must be a list of names")
    for i, c in enumerate(checks):
        if c not in CHECKS:
            raise ConfigError(f"{_line(lines, ('checks', i))}unknown check {c!r}")

    target = parse_complex(data.get("target", 0), "target")

    samples = dict(DEFAULT_SAMPLES)
    sdata = data.get("samples", {})
    _check_keys(sdata, DEFAULT_SAMPLES, "samples", lines, ("samples",))
    for k, v in sdata.items():
        samples[k] = _parse_int(v, f"samples.{k}")
        if samples[k] < 1:
            raise ConfigError(f"{_line(lines, ('samples', k))}samples.{k} must be positive")

    tolerances = dict(DEFAULT_TOLERANCES)
    tdata = data.get("tolerances", {})
    _check_keys(tdata, DEFAULT_TOLERANCES, "tolerances", lines, ("tolerances",))
    for k, v in tdata.items():
        tolerances[k] = _parse_float(v, f"tolerances.{k}")
        if not tolerances[k] > 0:
            raise ConfigError(f"{_line(lines, ('tolerances', k))}tolerances.{k} must be positive")

    steps = dict(DEFAULT_STEPS)
    stdata = data.get("steps", {})
    _check_keys(stdata, DEFAULT_STEPS, "steps", lines, ("steps",))
    for k, v in stdata.items():
        steps[k] = _parse_float(v, f"steps.{k}")
        if not steps[k] > 0:
            raise ConfigError(f"{_line(lines, ('steps', k))}steps.{k} must be positive")

    export = {}
    edata = data.get("export", {})
    _check_keys(edata, EXPORT_KEYS, "export", lines, ("export",))
    for k, v in edata.items():
        if not isinstance(v, str):
            raise ConfigError(f"{_line(lines, ('export', k))}export.{k} must be a path")
        export[k] = v

    cfg = RunConfig(seed, manifold, family, list(checks), target, samples, tolerances, steps, export, source)
    try:
        cfg.build_entry()
    except ConfigError:
        raise
    except (ValueError, ArithmeticError) as exc:
        raise ConfigError(f"{_line(lines, ('family',))}invalid family parameters: {exc}") from None
    return cfg


def normalise_family(fdata, manifold: ManifoldSpec, lines: _Lines, path) -> dict:
    """Validate a family mapping and convert numbers to Python complex values."""
    if not isinstance(fdata, dict) or "id" not in fdata:
        raise ConfigError(f"{_line(lines, path)}family must be a mapping with an 'id'")
    fid = fdata["id"]
    if fid not in _FAMILY_KEYS:
        raise ConfigError(f"{_line(lines, path + ('id',))}unknown family id {fid!r}")
    allowed = _FAMILY_KEYS[fid][0] | {"id"}
    _check_keys(fdata, allowed, f"family {fid}", lines, path)
    if fid == "HomogeneousPoly":
        base = fdata.get("base")
        if not isinstance(base, dict) or base.get("id") not in BASE_FAMILIES:
            raise ConfigError(f"{_line(lines, path + ('base',))}HomogeneousPoly.base must name one of {BASE_FAMILIES}")
        _check_keys(base, {"id", "p", "alpha"}, "HomogeneousPoly.base", lines, path + ("base",))
        kind = _FAMILY_KIND[base["id"]]
    else:
        kind = _FAMILY_KIND[fid]
    if manifold.kind is not kind:
        raise ConfigError(f"{_line(lines, path + ('id',))}family {fid} does not live on {manifold.name}")
    out = copy.deepcopy(fdata)
    n = manifold.n
    try:
        if fid in ("SOTrace", "UTrace"):
            out["p"] = list(_vector(fdata.get("p", [1] + [0] * (n - 1)), "family.p", n))
            out["a"] = list(_vector(fdata["a"], "family.a", n))
        elif fid == "SpTrace":
            out["p"] = list(_vector(fdata.get("p", [1] + [0] * (n - 1)), "family.p", n))
            out["a"] = list(_vector(fdata.get("a", [0] * n), "family.a", n))
            out["b"] = list(_vector(fdata.get("b", [0] * n), "family.b", n))
        elif fid == "SphereQuadraticA":
            out["A"] = [list(r) for r in _matrix(fdata["A"], "family.A", n)]
        elif fid == "CPDiagonal":
            if n % 2 == 0:
                raise ConfigError("CPDiagonal lives on CP^(2k-1); manifold n must be odd")
            out["a"] = list(_vector(fdata["a"], "family.a", (n + 1) // 2))
        elif fid in ("SO2nDegreeD",):
            if n % 2:
                raise ConfigError("SO2nDegreeD lives on SO(2k); manifold n must be even")
            out["a"] = list(_vector(fdata["a"], "family.a", n // 2))
            out["d"] = _parse_int(fdata.get("d", 1), "family.d")
        elif fid == "UFirstRowDegreeD":
            out["a"] = list(_vector(fdata["a"], "family.a", n))
            out["d"] = _parse_int(fdata.get("d", 1), "family.d")
        elif fid in ("SphereBasic",):
            out["j"] = _parse_int(fdata.get("j", 1), "family.j")
        elif fid == "CPBasic":
            for k in ("j", "k", "alpha"):
                if k not in fdata:
                    raise ConfigError(f"CPBasic needs '{k}'")
                out[k] = _parse_int(fdata[k], f"family.{k}")
        elif fid == "HomogeneousPoly":
            base = dict(fdata["base"])
            if "p" in base:
                base["p"] = list(_vector(base["p"], "family.base.p", n))
            if "alpha" in base:
                base["alpha"] = _parse_int(base["alpha"], "family.base.alpha")
            out["base"] = base
            out["degree"] = _parse_int(fdata.get("degree"), "family.degree")
            terms = fdata.get("terms")
            if not isinstance(terms, list) or not terms:
                raise ConfigError("HomogeneousPoly needs a non-empty 'terms' list")
            parsed = []
            for i, t in enumerate(terms):
                _check_keys(t, ("powers", "coeff"), f"terms[{i}]", lines, path + ("terms", i))
                powers = t.get("powers")
                if not isinstance(powers, list):
                    raise ConfigError(f"terms[{i}].powers must be a list of integers")
                parsed.append({
                    "powers": [_parse_int(k, f"terms[{i}].powers") for k in powers],
                    "coeff": parse_complex(t.get("coeff", 1), f"terms[{i}].coeff"),
                })
            out["terms"] = parsed
    except KeyError as exc:
        raise ConfigError(f"{_line(lines, path)}family {fid} is missing {exc.args[0]!r}") from None
    except ConfigError as exc:
        raise ConfigError(f"{_line(lines, path)}{exc}") from None
    return out


def build_family(family: dict, manifold: ManifoldSpec) -> CatalogEntry:
    fid = family["id"]
    n = manifold.n
    if fid == "SphereBasic":
        return catalog.sphere_basic(n, family["j"])
    if fid == "CPBasic":
        return catalog.cp_basic(n, family["j"], family["k"], family["alpha"])
    if fid == "SOTrace":
        return catalog.so_trace_family(n, family["p"], family["a"])
    if fid == "UTrace":
        return catalog.u_trace_family(n, family["p"], family["a"])
    if fid == "SpTrace":
        return catalog.sp_trace_family(n, family["p"], family["a"], family["b"])
    if fid == "SphereQuadraticA":
        return catalog.sphere_quadratic(np.array(family["A"], dtype=complex))
    if fid == "CPDiagonal":
        return catalog.cp_diagonal((n + 1) // 2, family["a"])
    if fid == "SO2nDegreeD":
        return catalog.so2n_degree_d(n // 2, family["a"], family["d"])
    if fid == "UFirstRowDegreeD":
        return catalog.u_first_row_degree_d(n, family["a"], family["d"])
    if fid == "UMinor":
        return catalog.u_minor(n)
    if fid == "SpZ11":
        return catalog.sp_z11(n)
    if fid == "HomogeneousPoly":
        base = family["base"]
        members = catalog.family_members(base["id"], manifold, p=base.get("p"), alpha=base.get("alpha"))
        coeffs = {}
        for t in family["terms"]:
            key = tuple(t["powers"])
            coeffs[key] = coeffs.get(key, 0) + t["coeff"]
        return catalog.homogeneous_poly(members, coeffs, family["degree"])
    raise ConfigError(f"unknown family id {fid!r}")


def load_config(path: str | Path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from None
    data, lines = load_config_text(text, path.suffix)
    return parse_config(data, lines, str(path))
