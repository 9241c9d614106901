"""Check execution and report assembly for the command-line harness.

Every check returns one or more records of the form::

    {"name", "statistic", "points", "value", "tolerance", "comparator",
     "passed", "wall_time", "note"}

Records are emitted in config declaration order.  ``wall_time`` is ``null``
unless timing is requested, since timings would break byte-identical
reports.
"""

from __future__ import annotations

import itertools
import json
import math
import time
from typing import Callable

import numpy as np

from . import __version__
from .calculus import (
    conformality,
    estimate_eigenpair,
    first_fundamental_eigenvalues,
    product_rule_check,
    tension,
)
from .catalog import CatalogEntry, family_members
from .config import BASE_FAMILIES, RunConfig, complex_to_json
from .errors import DegeneratePoint, EigenfibreError, FibreNotFound, InsufficientSamples
from .fibres import (
    bg_identity_check,
    hc_first_order_check,
    hc_gap,
    mean_curvature,
    regularity_certificate,
    sample_fibre,
)
from .manifolds import random_point
from .numerics import Stencil, make_rng, split_rng

TOOL = "eigenfibre"
OFF_FIBRE_MIN = 0.1
MAX_MEMBERS = 4
PRODUCT_PAIRS = 10


def _finite(x):
    if x is None:
        return None
    x = float(x)
    return x if math.isfinite(x) else None


def record(name, statistic, points, value, tolerance, comparator="<=", note=None) -> dict:
    value = _finite(value)
    if value is None:
        passed = False
    elif comparator == "<=":
        passed = value <= tolerance
    else:
        passed = value > tolerance
    rec = {
        "name": name,
        "statistic": statistic,
        "points": int(points),
        "value": value,
        "tolerance": float(tolerance),
        "comparator": comparator,
        "passed": bool(passed),
        "wall_time": None,
    }
    if note:
        rec["note"] = note
    return rec


def failure(name, statistic, tolerance, note, comparator="<=") -> dict:
    return record(name, statistic, 0, None, tolerance, comparator, note)


class Runner:
    """Runs the checks of one :class:`RunConfig`."""

    def __init__(self, cfg: RunConfig, timing: bool = False):
        self.cfg = cfg
        self.timing = timing
        self.entry: CatalogEntry = cfg.build_entry()
        self.spec = self.entry.spec
        self.first = Stencil(order=1, points=5, step=cfg.steps["first"])
        self.second = Stencil(order=2, points=5, step=cfg.steps["second"])
        self.tol = cfg.tolerances
        self._fibre = None
        self._fibre_error: FibreNotFound | None = None

    # -- helpers ------------------------------------------------------------

    def _members(self) -> list[CatalogEntry]:
        fam = self.cfg.family
        out = [self.entry]
        if fam["id"] in BASE_FAMILIES:
            extra = family_members(fam["id"], self.spec, p=fam.get("p"), alpha=fam.get("alpha"))
            out += extra[: MAX_MEMBERS - 1]
        return out

    def _points(self, rng, count):
        return [random_point(self.spec, rng) for _ in range(count)]

    def _fibre_rng(self):
        return split_rng(make_rng(self.cfg.seed), 1)[0]

    def fibre(self):
        """Fibre sample shared by every fibre check (always the first child stream)."""
        if self._fibre is None and self._fibre_error is None:
            rng = self._fibre_rng()
            try:
                self._fibre = sample_fibre(self.entry.field, self.cfg.target, self.cfg.samples["fibre_points"], rng,
                                           tol=self.tol["fibre"])
            except FibreNotFound as exc:
                self._fibre_error = exc
        return self._fibre

    def _fibre_note(self) -> str:
        exc = self._fibre_error
        return f"fibre not found: best residual {exc.best_residual:.3e}"

    # -- checks ---------------------------------------------------------------

    def check_eigenfamily(self, rng):
        pred = self.entry.predicted
        members = self._members()
        pts = self._points(rng, self.cfg.samples["points"])
        tau_err = kap_err = 0.0
        for p in pts:
            vals = [m.field(p) for m in members]
            for m, v in zip(members, vals):
                tau_err = max(tau_err, abs(tension(m.field, p, self.second) - pred.lam * v))
            for (a, va), (b, vb) in itertools.combinations_with_replacement(list(zip(members, vals)), 2):
                k = conformality(a.field, b.field, p, self.first)
                kap_err = max(kap_err, abs(k - pred.mu * va * vb))
        tol = self.tol["eigenfamily"]
        note = f"{len(members)} family members"
        return [
            record("eigenfamily", "max |tau(phi) - lambda phi|", len(pts), tau_err, tol, note=note),
            record("eigenfamily", "max |kappa(phi, psi) - mu phi psi|", len(pts), kap_err, tol, note=note),
        ]

    def _fit(self, rng, tol_key, name):
        pred = self.entry.predicted
        tol = self.tol[tol_key]
        try:
            fit, res = estimate_eigenpair(self.entry.field, self.spec, self.cfg.samples["points"], rng,
                                          first=self.first, second=self.second)
        except InsufficientSamples as exc:
            return None, None, [failure(name, "fitted eigenpair", tol, f"InsufficientSamples: {exc}")]
        recs = [
            record(name, "|fitted lambda - predicted lambda|", res["samples_lambda"], abs(fit.lam - pred.lam), tol),
            record(name, "|fitted mu - predicted mu|", res["samples_mu"], abs(fit.mu - pred.mu), tol),
        ]
        return fit, res, recs

    def check_polynomial(self, rng):
        return self._fit(rng, "polynomial", "polynomial")[2]

    def check_lemma_eigenvalues(self, rng):
        mu = self.entry.predicted.mu.real
        worst, used = 0.0, 0
        for p in self._points(rng, self.cfg.samples["points"]):
            data = first_fundamental_eigenvalues(self.entry.field, p, self.first)
            if data.degenerate:
                continue
            c1, c2 = data.closed_form(mu)
            worst = max(worst, abs(data.lam1 - c1), abs(data.lam2 - c2))
            used += 1
        tol = self.tol["lemma_eigenvalues"]
        if used == 0:
            return [failure("lemma-eigenvalues", "max |lambda_i - closed form|", tol, "no non-degenerate points")]
        return [record("lemma-eigenvalues", "max |lambda_i - closed form|", used, worst, tol)]

    def check_hc_first_order(self, rng):
        dir_rng, off_rng = split_rng(rng, 2)
        tp, td, toff = self.tol["hc_point"], self.tol["hc_derivative"], self.tol["hc_off_fibre"]
        pts = self.fibre()
        if pts is None:
            note = self._fibre_note()
            return [failure("hc-first-order", "max |lambda1^2 - lambda2^2| on fibre", tp, note),
                    failure("hc-first-order", "max directional derivative on fibre", td, note)]
        f = self.entry.field
        gap = deriv = 0.0
        try:
            for fp in pts:
                g, d = hc_first_order_check(f, fp, self.cfg.samples["directions"], dir_rng, self.cfg.steps["hc"])
                gap, deriv = max(gap, g), max(deriv, d)
        except DegeneratePoint as exc:
            note = f"DegeneratePoint: {exc}"
            return [failure("hc-first-order", "max |lambda1^2 - lambda2^2| on fibre", tp, note),
                    failure("hc-first-order", "max directional derivative on fibre", td, note)]
        recs = [
            record("hc-first-order", "max |lambda1^2 - lambda2^2| on fibre", len(pts), gap, tp),
            record("hc-first-order", "max directional derivative on fibre", len(pts), deriv, td,
                   note=f"{self.cfg.samples['directions']} random directions per point"),
        ]
        # negative control: points well away from the fibre
        c = self.cfg.target
        smallest, used = math.inf, 0
        attempts = 0
        while used < self.cfg.samples["points"] and attempts < 20 * self.cfg.samples["points"]:
            attempts += 1
            p = random_point(self.spec, off_rng)
            if abs(f(p) - c) < OFF_FIBRE_MIN:
                continue
            try:
                smallest = min(smallest, abs(hc_gap(f, p)))
            except DegeneratePoint:
                continue
            used += 1
        recs.append(record("hc-first-order", "min |lambda1^2 - lambda2^2| off fibre", used, smallest, toff, ">",
                           note=f"points with |phi - c| >= {OFF_FIBRE_MIN}"))
        return recs

    def check_regularity(self, rng):
        tol = self.tol["regularity"]
        pts = self.fibre()
        stat = "min Jacobian singular value on fibre"
        if pts is None:
            best = self._fibre_error.best_point
            if best is None:
                return [failure("regularity", stat, tol, self._fibre_note(), ">")]
            cert = regularity_certificate(self.entry.field, self.cfg.target, [best], tol)
            rec = record("regularity", stat, 1, cert.min_singular_value, tol, ">",
                         note=self._fibre_note() + "; certificate taken at the best point")
            rec["passed"] = False
            return [rec]
        cert = regularity_certificate(self.entry.field, self.cfg.target, pts, tol)
        return [record("regularity", stat, cert.points_tested, cert.min_singular_value, tol, ">")]

    def _per_fibre_point(self, rng, name, stat, tol_key, fn: Callable):
        tol = self.tol[tol_key]
        pts = self.fibre()
        if pts is None:
            return [failure(name, stat, tol, self._fibre_note())]
        worst = 0.0
        try:
            for fp in pts:
                worst = max(worst, fn(fp))
        except (DegeneratePoint, EigenfibreError) as exc:
            return [failure(name, stat, tol, f"{type(exc).__name__}: {exc}")]
        return [record(name, stat, len(pts), worst, tol)]

    def check_minimality(self, rng):
        h = self.cfg.steps["curve"]
        sigma = self.tol["regularity"]
        return self._per_fibre_point(
            rng, "minimality", "max |H| on fibre", "minimality",
            lambda fp: mean_curvature(self.entry.field, fp, h, sigma).norm,
        )

    def check_bg_identity(self, rng):
        h = self.cfg.steps["curve"]
        return self._per_fibre_point(
            rng, "bg-identity", "max |tau(phi) + (m-2) dphi(H)| on fibre", "bg_identity",
            lambda fp: bg_identity_check(self.entry.field, fp, h),
        )

    def check_product_rule(self, rng):
        pool = [m.field for m in self._members()]
        pool.append(self.entry.field.conj())
        pair_rng, pt_rng = split_rng(rng, 2)
        idx = pair_rng.integers(0, len(pool), size=(PRODUCT_PAIRS, 2))
        worst = 0.0
        pts = self._points(pt_rng, self.cfg.samples["points"])
        for p in pts:
            for i, j in idx:
                worst = max(worst, product_rule_check(pool[i], pool[j], p, self.first, self.second))
        return [record("product-rule", "max |tau(phi psi) - product rule|", len(pts), worst,
                       self.tol["product_rule"], note=f"{PRODUCT_PAIRS} pairs")]

    # -- drivers --------------------------------------------------------------

    def run_checks(self) -> list[dict]:
        root = make_rng(self.cfg.seed)
        # child 0 is reserved for the fibre sample
        _, *rngs = split_rng(root, 1 + len(self.cfg.checks))
        out = []
        for name, rng in zip(self.cfg.checks, rngs):
            method = getattr(self, "check_" + name.replace("-", "_"))
            t0 = time.perf_counter()
            recs = method(rng)
            if self.timing:
                elapsed = time.perf_counter() - t0
                for r in recs:
                    r["wall_time"] = elapsed
            out.extend(recs)
        return out

    def verify_report(self) -> dict:
        return assemble("verify", self.cfg, self.run_checks())

    def estimate_report(self) -> dict:
        root = make_rng(self.cfg.seed)
        t0 = time.perf_counter()
        fit, res, recs = self._fit(split_rng(root, 2)[1], "estimate", "estimate")
        if self.timing:
            for r in recs:
                r["wall_time"] = time.perf_counter() - t0
        report = assemble("estimate", self.cfg, recs)
        pred = self.entry.predicted
        report["estimate"] = {
            "fitted": None if fit is None else {"lambda": complex_to_json(fit.lam), "mu": complex_to_json(fit.mu)},
            "predicted": {"lambda": complex_to_json(pred.lam), "mu": complex_to_json(pred.mu)},
            "residuals": res,
        }
        return report

    def fibre_points(self):
        """Fibre sample for export, using the same stream as the fibre checks."""
        return sample_fibre(self.entry.field, self.cfg.target, self.cfg.samples["fibre_points"],
                            self._fibre_rng(), tol=self.tol["fibre"])


def assemble(command: str, cfg: RunConfig, checks: list[dict]) -> dict:
    return {
        "tool": TOOL,
        "version": __version__,
        "command": command,
        "config": cfg.echo(),
        "checks": checks,
        "passed": bool(checks) and all(r["passed"] for r in checks),
    }


def dumps(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=False, allow_nan=False) + "\n"


def load_schema(name: str) -> dict:
    """One of the shipped JSON schemas: ``"report"`` or ``"config"``."""
    from importlib.resources import files

    return json.loads(files("eigenfibre").joinpath("schemas", f"{name}.schema.json").read_text())
