"""Scenario runner: ``qsflow run|validate|list``.

A scenario is a JSON object::

    {"kind": "...", "params": {...}, "seed": 0, "output_path": "out/name"}

Complex numbers are ``[re, im]`` (plain numbers are accepted as real),
matrices are row-major nested lists. Every kind writes ``<kind>.csv`` and
``manifest.json`` into ``output_path``.
"""

from __future__ import annotations

import argparse
import json
import os
import platform
import sys
import tempfile
import time
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

import numpy as np
import scipy

from . import __version__

SECTIONS = ("kind", "params", "seed", "output_path")


class ConfigError(ValueError):
    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


# -- schema ------------------------------------------------------------------


@dataclass(frozen=True)
class Field:
    type: str
    default: object = None
    required: bool = False
    choices: tuple | None = None
    minimum: float | None = None


def _complex(v, path):
    if isinstance(v, bool):
        raise ConfigError(path, "expected a number or [re, im]")
    if isinstance(v, (int, float)):
        return complex(v)
    if isinstance(v, list) and len(v) == 2 and all(isinstance(p, (int, float)) and not isinstance(p, bool)
                                                   for p in v):
        return complex(v[0], v[1])
    raise ConfigError(path, "expected a number or [re, im]")


def _cvector(v, path):
    if not isinstance(v, list):
        raise ConfigError(path, "expected a list of complex numbers")
    return np.array([_complex(x, f"{path}[{i}]") for i, x in enumerate(v)], dtype=complex)


def _cmatrix(v, path):
    if not isinstance(v, list) or not v or not all(isinstance(r, list) for r in v):
        raise ConfigError(path, "expected a row-major nested list")
    rows = [_cvector(r, f"{path}[{i}]") for i, r in enumerate(v)]
    if len({len(r) for r in rows}) != 1:
        raise ConfigError(path, "rows have different lengths")
    return np.array(rows)


def _step(v, path):
    from .cocycle import StepFunction

    if not isinstance(v, list):
        raise ConfigError(path, "expected a list of [duration, value] segments")
    segs = []
    for i, seg in enumerate(v):
        p = f"{path}[{i}]"
        if not (isinstance(seg, list) and len(seg) == 2):
            raise ConfigError(p, "expected [duration, value]")
        dur = seg[0]
        if isinstance(dur, bool) or not isinstance(dur, (int, float)) or dur <= 0:
            raise ConfigError(f"{p}[0]", "duration must be a positive number")
        segs.append((dur, _cvector(seg[1], f"{p}[1]")))
    try:
        return StepFunction(tuple(segs))
    except ValueError as exc:
        raise ConfigError(path, str(exc)) from None


def _scalar(kind):
    def conv(v, path):
        if kind == "int":
            if isinstance(v, bool) or not isinstance(v, int):
                raise ConfigError(path, "expected an integer")
            return v
        if kind == "float":
            if isinstance(v, bool) or not isinstance(v, (int, float)):
                raise ConfigError(path, "expected a number")
            return float(v)
        if kind == "str":
            if not isinstance(v, str):
                raise ConfigError(path, "expected a string")
            return v
        if kind == "bool":
            if not isinstance(v, bool):
                raise ConfigError(path, "expected true or false")
            return v
        if kind == "turns":
            # "p/q" string for an exact angle, or a float in turns
            if isinstance(v, str):
                try:
                    return Fraction(v)
                except (ValueError, ZeroDivisionError):
                    raise ConfigError(path, "expected a fraction like \"1/7\"") from None
            if isinstance(v, (int, float)) and not isinstance(v, bool):
                return float(v)
            raise ConfigError(path, "expected a fraction string or a number of turns")
        raise AssertionError(kind)
    return conv


CONVERTERS = {
    "int": _scalar("int"),
    "float": _scalar("float"),
    "str": _scalar("str"),
    "bool": _scalar("bool"),
    "turns": _scalar("turns"),
    "complex": _complex,
    "cvector": _cvector,
    "cmatrix": _cmatrix,
    "step": _step,
}


def _list_of(kind):
    def conv(v, path):
        if not isinstance(v, list) or not v:
            raise ConfigError(path, "expected a non-empty list")
        return [CONVERTERS[kind](x, f"{path}[{i}]") for i, x in enumerate(v)]
    return conv


def convert(ftype: str, value, path: str):
    if ftype.startswith("list:"):
        return _list_of(ftype[5:])(value, path)
    return CONVERTERS[ftype](value, path)


SCHEMAS: dict[str, dict[str, Field]] = {
    "validate-generator": {
        "h": Field("cmatrix"),
        "t": Field("cmatrix"),
        "samples": Field("int", 0, minimum=0),
        "d": Field("int", 2, minimum=1),
        "multiplicity": Field("int", 1, minimum=0),
        "tol": Field("float", 1e-10),
    },
    "classify-qF": {
        "d": Field("int", 2, minimum=1),
        "multiplicity": Field("int", 1, minimum=1),
        "samples": Field("int", 20, minimum=1),
        "tol": Field("float", 1e-10),
    },
    "perturb": {
        "d": Field("int", 2, minimum=1),
        "multiplicity": Field("int", 1, minimum=1),
        "samples": Field("int", 20, minimum=1),
        "tol": Field("float", 1e-10),
    },
    "weyl-demo": {
        "max_d": Field("int", 3, minimum=1),
        "max_multiplicity": Field("int", 3, minimum=1),
        "samples": Field("int", 50, minimum=1),
        "tol": Field("float", 1e-10),
    },
    "cocycle-eval": {
        "d": Field("int", 2, minimum=1),
        "multiplicity": Field("int", 1, minimum=0),
        "samples": Field("int", 10, minimum=1),
        "segments": Field("int", 3, minimum=1),
        "T": Field("float", 1.0, minimum=0),
    },
    "toyfock-convergence": {
        "d": Field("int", 2, minimum=1),
        "multiplicity": Field("int", 1, minimum=1),
        "T": Field("float", 1.0, minimum=0),
        "Ns": Field("list:int", [64, 128, 256, 512]),
        "mode": Field("str", "full", choices=("full", "flow", "multiplier")),
        "route": Field("str", "auto", choices=("auto", "state", "transfer")),
        "weyl_h": Field("float", 0.4),
        "weyl_c": Field("cvector"),
        "weyl_angle": Field("float", 0.7),
        "f": Field("step"),
        "g": Field("step"),
    },
    "exclusion-demo": {
        "sites": Field("list:int", [2, 3]),
        "samples": Field("int", 5, minimum=1),
        "tol": Field("float", 1e-9),
    },
    "torus-demo": {
        "theta": Field("turns", "1/7"),
        "samples": Field("int", 10, minimum=1),
        "degree_bound": Field("int", 3, minimum=0),
        "identity_checks": Field("int", 200, minimum=0),
    },
    "presentation-analyze": {
        "builtin": Field("str"),
        "source": Field("str"),
        "N": Field("int", minimum=1),
    },
    "mc-randomized-action": {
        "m": Field("list:int", [1]),
        "n": Field("list:int", [0]),
        "c1": Field("list:complex", [[1.0, 0.0]]),
        "c2": Field("list:complex", [[0.0, 0.0]]),
        "t": Field("float", 1.0, minimum=0),
        "paths": Field("int", 100000, minimum=100),
    },
}


@dataclass
class Scenario:
    kind: str
    params: dict
    seed: int | None
    output_path: Path
    source: Path | None = None


def validate_scenario(raw, source: Path | None = None) -> Scenario:
    if not isinstance(raw, dict):
        raise ConfigError("$", "scenario must be a JSON object")
    for key in raw:
        if key not in SECTIONS:
            raise ConfigError(key, "unknown field")
    kind = raw.get("kind")
    if kind is None:
        raise ConfigError("kind", "missing required field")
    if kind not in SCHEMAS:
        raise ConfigError("kind", f"unknown kind {kind!r}; expected one of {sorted(SCHEMAS)}")
    seed = raw.get("seed")
    if seed is not None and (isinstance(seed, bool) or not isinstance(seed, int)):
        raise ConfigError("seed", "expected an integer")
    out = raw.get("output_path")
    if out is not None and not isinstance(out, str):
        raise ConfigError("output_path", "expected a string")
    params_raw = raw.get("params", {})
    if not isinstance(params_raw, dict):
        raise ConfigError("params", "expected an object")
    schema = SCHEMAS[kind]
    params = {}
    for key, value in params_raw.items():
        if key not in schema:
            raise ConfigError(f"params.{key}", "unknown field")
    for key, fld in schema.items():
        path = f"params.{key}"
        if key in params_raw:
            val = convert(fld.type, params_raw[key], path)
        elif fld.required:
            raise ConfigError(path, "missing required field")
        else:
            val = convert(fld.type, fld.default, path) if fld.default is not None else None
        if val is not None and fld.choices is not None and val not in fld.choices:
            raise ConfigError(path, f"expected one of {list(fld.choices)}")
        if val is not None and fld.minimum is not None and isinstance(val, (int, float)) and val < fld.minimum:
            raise ConfigError(path, f"must be >= {fld.minimum}")
        params[key] = val
    if kind == "presentation-analyze" and (params["builtin"] is None) == (params["source"] is None):
        raise ConfigError("params", "give exactly one of 'builtin' and 'source'")
    if out is None:
        stem = source.stem if source is not None else kind
        out = str(Path("out") / stem)
    return Scenario(kind, params, seed, Path(out), source)


def load_scenario(path) -> Scenario:
    """Load a scenario file; a bare name falls back to the shipped scenarios."""
    path = Path(path)
    if not path.exists():
        path = shipped_scenario(path) or path
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError("$", f"invalid JSON: {exc}") from None
    return validate_scenario(raw, path)


# -- output ------------------------------------------------------------------


def fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return "%.17g" % v
    return str(v)


def write_atomic(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def table_text(columns, rows) -> str:
    lines = [",".join(columns)]
    for r in rows:
        lines.append(",".join(fmt(v) for v in r))
    return "\n".join(lines) + "\n"


@dataclass
class Result:
    columns: tuple
    rows: list
    summary: dict
    csv_text: str | None = None

    def text(self) -> str:
        return self.csv_text if self.csv_text is not None else table_text(self.columns, self.rows)


# -- kinds -------------------------------------------------------------------


def _rng(sc: Scenario):
    return np.random.default_rng(0 if sc.seed is None else sc.seed)


def run_validate_generator(sc: Scenario) -> Result:
    from .opcore import random_complex, random_hermitian
    from .stdgen import build_inner_generator, validate_standard_form

    p = sc.params
    rng = _rng(sc)
    cases = []
    if p["h"] is not None or p["t"] is not None:
        if p["h"] is None or p["t"] is None:
            raise ConfigError("params", "give both 'h' and 't' or neither")
        cases.append(("given", p["h"], p["t"]))
    elif not p["samples"]:
        cases.append(("builtin", np.diag([1.0, -1.0]), np.array([[0.0, 1.0], [0.0, 0.0]])))
    for i in range(p["samples"]):
        d, n = p["d"], p["multiplicity"]
        cases.append((f"random-{i}", random_hermitian(d, rng), random_complex((d * n, d), rng)))
    rows = []
    for label, h, t in cases:
        rep = validate_standard_form(build_inner_generator(h, t), p["tol"])
        r = rep.residuals
        rows.append((label, r["cohomology"], r["leibniz"], r["dagger"], r["pi_homomorphism"],
                     r["pi_unital"], r["star_linearity"], rep.passed))
    cols = ("case", "cohomology", "leibniz", "dagger", "pi_homomorphism", "pi_unital", "star_linearity", "pass")
    return Result(cols, rows, {"pass": all(r[-1] for r in rows)})


def run_classify_qf(sc: Scenario) -> Result:
    from .opcore import SpaceDims, random_complex, random_hermitian, random_unitary
    from .perturb import (BlockCoefficient, classify_contractive, make_isometric_coefficient,
                          random_contractive_coefficient)

    p = sc.params
    rng = _rng(sc)
    dims = SpaceDims(p["d"], p["multiplicity"])
    rows = []
    for i in range(p["samples"]):
        which = ("random", "contractive", "isometric")[i % 3]
        if which == "random":
            F = BlockCoefficient.from_matrix(random_complex((dims.big, dims.big), rng, 0.5), dims)
        elif which == "contractive":
            F = random_contractive_coefficient(dims, rng)
        else:
            dn = dims.d * dims.n
            F = make_isometric_coefficient(random_hermitian(dims.d, rng), random_complex((dn, dims.d), rng),
                                           random_unitary(dn, rng))
        rep = classify_contractive(F, p["tol"])
        rows.append((i, which, rep.is_contractive, rep.block_contractive, rep.is_isometric_coefficient,
                     rep.min_eigenvalue, rep.m_residual, rep.v_unique, float(np.max(np.abs(rep.q_matrix)))))
    cols = ("index", "family", "contractive", "block_route_contractive", "isometric", "min_eig_minus_q",
            "m_residual", "v_unique", "q_max")
    return Result(cols, rows, {"contractive": sum(bool(r[2]) for r in rows)})


def run_perturb(sc: Scenario) -> Result:
    from .opcore import SpaceDims, random_complex, random_hermitian, random_unitary
    from .perturb import (make_isometric_coefficient, perturbed_generator, perturbed_generator_blocks,
                          random_contractive_coefficient)
    from .stdgen import build_inner_generator, generator_residual, validate_standard_form

    p = sc.params
    rng = _rng(sc)
    d, n = p["d"], p["multiplicity"]
    dims = SpaceDims(d, n)
    rows = []
    for i in range(p["samples"]):
        phi = build_inner_generator(random_hermitian(d, rng), random_complex((d * n, d), rng))
        F = random_contractive_coefficient(dims, rng)
        G = random_contractive_coefficient(dims, rng)
        agree = generator_residual(perturbed_generator(phi, F, G), perturbed_generator_blocks(phi, F, G))
        H = make_isometric_coefficient(random_hermitian(d, rng), random_complex((d * n, d), rng),
                                       random_unitary(d * n, rng))
        psi = perturbed_generator(phi, H, H)
        rep = validate_standard_form(psi, 1e-9)
        unit = float(np.max(np.abs(psi(np.eye(d)))))
        rows.append((i, agree, max(rep.residuals.values()), unit))
    cols = ("index", "psi_formula_residual", "isometric_std_form_residual", "psi_unit_residual")
    worst = max(r[1] for r in rows)
    return Result(cols, rows, {"max_formula_residual": worst, "pass": worst < p["tol"]})


def run_weyl_demo(sc: Scenario) -> Result:
    from .opcore import random_complex, random_hermitian, random_unitary
    from .perturb import weyl_shift_check
    from .stdgen import build_inner_generator

    p = sc.params
    rng = _rng(sc)
    rows = []
    for i in range(p["samples"]):
        d = int(rng.integers(1, p["max_d"] + 1))
        n = int(rng.integers(1, p["max_multiplicity"] + 1))
        phi = build_inner_generator(random_hermitian(d, rng), random_complex((d * n, d), rng))
        h = float(rng.normal())
        c, z, w = (random_complex(n, rng) for _ in range(3))
        res = weyl_shift_check(phi, h, c, random_unitary(n, rng), z, w)
        rows.append((i, d, n, res, res < p["tol"]))
    return Result(("index", "d", "multiplicity", "residual", "pass"), rows,
                  {"pass": all(r[-1] for r in rows)})


def _random_step(rng, n, T, segments):
    from .cocycle import StepFunction

    cuts = np.sort(rng.uniform(0, T, size=segments - 1))
    durs = np.diff(np.concatenate([[0.0], cuts, [T]]))
    return StepFunction(tuple((float(dd), rng.normal(size=n) + 1j * rng.normal(size=n)) for dd in durs if dd > 0))


def run_cocycle_eval(sc: Scenario) -> Result:
    from .cocycle import check_cocycle_identity, eval_cocycle_element, integrate_cocycle
    from .opcore import random_complex, random_hermitian
    from .stdgen import build_inner_generator

    p = sc.params
    rng = _rng(sc)
    d, n, T = p["d"], p["multiplicity"], p["T"]
    rows = []
    for i in range(p["samples"]):
        phi = build_inner_generator(random_hermitian(d, rng), random_complex((d * n, d), rng))
        f = _random_step(rng, n, T, p["segments"])
        g = _random_step(rng, n, T, p["segments"])
        s = float(rng.uniform(0, T))
        defect = check_cocycle_identity(phi, f, g, s, T - s)
        exact = eval_cocycle_element(phi, f, g, T).superop
        ref = integrate_cocycle(phi, f, g, T)
        rows.append((i, s, defect, float(np.max(np.abs(exact - ref)))))
    return Result(("index", "s", "cocycle_defect", "integrator_residual"), rows,
                  {"max_defect": max(r[2] for r in rows), "max_integrator_residual": max(r[3] for r in rows)})


def run_toyfock(sc: Scenario) -> Result:
    from .cocycle import StepFunction
    from .opcore import SpaceDims, random_complex, random_hermitian
    from .perturb import BlockCoefficient, weyl_coefficient
    from .toyfock import InnerFlowSpec, cross_validate

    p = sc.params
    rng = _rng(sc)
    d, n, T = p["d"], p["multiplicity"], p["T"]
    dims = SpaceDims(d, n)
    spec = InnerFlowSpec(random_hermitian(d, rng, 0.5), random_complex((d * n, d), rng, 0.7))
    c = p["weyl_c"] if p["weyl_c"] is not None else random_complex(n, rng, 0.5)
    if c.shape[0] != n:
        raise ConfigError("params.weyl_c", f"expected {n} entries")
    U = np.diag(np.exp(1j * p["weyl_angle"] * np.arange(1, n + 1)))
    F = weyl_coefficient(p["weyl_h"], c, U, d)
    if p["mode"] == "flow":
        F = BlockCoefficient.zero(dims)
    if p["mode"] == "multiplier":
        spec = InnerFlowSpec.trivial(dims)
    x = random_hermitian(d, rng) + np.eye(d)
    f = p["f"] or StepFunction(((T / 2, random_complex(n, rng, 0.5)), (T / 2, random_complex(n, rng, 0.5))))
    g = p["g"] or StepFunction(((T / 4, random_complex(n, rng, 0.5)), (3 * T / 4, random_complex(n, rng, 0.5))))
    for name, s in (("f", f), ("g", g)):
        if s.n != n:
            raise ConfigError(f"params.{name}", f"values must have {n} entries")
    u = random_complex(d, rng)
    v = random_complex(d, rng)
    workers = int(os.environ.get("QSFLOW_THREADS", "1"))
    table = cross_validate(spec, F, F, x, f, g, T, p["Ns"], u / np.linalg.norm(u), v / np.linalg.norm(v),
                           route=p["route"], workers=workers)
    summary = {"fitted_order": table.fitted_order, "final_rel_error": float(table.errors[-1]),
               "monotone": table.monotone()}
    return Result(table.COLUMNS, [], summary, csv_text=table.to_csv())


def run_exclusion(sc: Scenario) -> Result:
    from .carmodel import ExclusionSpec, verify_amplitude_addition

    p = sc.params
    rng = _rng(sc)
    rows = []
    for m in p["sites"]:
        if not 1 <= m <= 4:
            raise ConfigError("params.sites", "site counts must lie in 1..4 for the demo")
        for i in range(p["samples"]):
            a = rng.normal(size=(m, m)) + 1j * rng.normal(size=(m, m))
            b = rng.normal(size=(m, m)) + 1j * rng.normal(size=(m, m))
            rep = verify_amplitude_addition(ExclusionSpec(m, rng.normal(size=m), a, b), p["tol"])
            rows.append((m, i, rep.delta_residual, rep.tau_residual, rep.h_closed_form_residual, rep.symmetric))
    cols = ("sites", "index", "delta_residual", "tau_residual", "h0_closed_form_residual", "symmetric")
    return Result(cols, rows, {"max_tau_residual": max(r[3] for r in rows)})


def run_torus(sc: Scenario) -> Result:
    from .wordalg.torus import (TorusElement, gauge_perturb_check, lattice_apply, lattice_residual,
                                random_self_adjoint)

    p = sc.params
    rng = _rng(sc)
    th = p["theta"]
    rows = []
    U, V = TorusElement.U(th), TorusElement.V(th)
    rows.append(("UV-lambdaVU", 0, float((U * V).max_abs_diff(U.lam * (V * U)))))
    worst = 0.0
    for _ in range(p["identity_checks"]):
        a = random_self_adjoint(th, rng) + 1j * random_self_adjoint(th, rng)
        b = random_self_adjoint(th, rng) + 1j * random_self_adjoint(th, rng)
        worst = max(worst, lattice_residual(a * b, lambda e, a=a, b=b: lattice_apply(a, lattice_apply(b, e))))
    rows.append(("product-vs-lattice", p["identity_checks"], worst))
    for i in range(p["samples"]):
        ns = [random_self_adjoint(th, rng), random_self_adjoint(th, rng)]
        betas = rng.normal(size=2)
        rows.append(("sum-of-squares", i, gauge_perturb_check(betas, ns, p["degree_bound"], theta=th)))
        rows.append(("negative-control", i,
                     gauge_perturb_check(betas, ns, p["degree_bound"], theta=th, drop_dn_term=True)))
    return Result(("check", "index", "residual"), rows, {"theta_turns": str(th)})


def run_presentation(sc: Scenario) -> Result:
    from .wordalg import balance_check, builtin_source, parse_presentation

    p = sc.params
    if p["builtin"] is not None:
        try:
            text = builtin_source(p["builtin"], p["N"])
        except KeyError as exc:
            raise ConfigError("params.builtin", str(exc)) from None
    else:
        src = Path(p["source"])
        if sc.source is not None and not src.is_absolute():
            src = sc.source.parent / src
        text = src.read_text(encoding="utf-8")
    pres = parse_presentation(text)
    rows = []
    for i, name in enumerate(pres.names):
        res = balance_check(pres, i)
        rows.append((name, pres.flags[i] or "", res.balanced, "" if res.balanced else res.describe(pres)))
    return Result(("generator", "flag", "balanced", "witness"), rows,
                  {"generators": len(pres.names), "relations": len(pres.relations)})


def run_mc(sc: Scenario) -> Result:
    from .wordalg.mc import mc_randomized_action

    p = sc.params
    seed = 0 if sc.seed is None else sc.seed
    ms, ns, c1s, c2s = p["m"], p["n"], p["c1"], p["c2"]
    k = max(len(ms), len(ns), len(c1s), len(c2s))
    for name, lst in (("m", ms), ("n", ns), ("c1", c1s), ("c2", c2s)):
        if len(lst) not in (1, k):
            raise ConfigError(f"params.{name}", f"expected 1 or {k} entries")
    pick = lambda lst, i: lst[i if len(lst) > 1 else 0]  # noqa: E731
    rows = []
    for i in range(k):
        r = mc_randomized_action(pick(ms, i), pick(ns, i), pick(c1s, i), pick(c2s, i), p["t"], p["paths"],
                                 seed=seed + i)
        rows.append((i, pick(ms, i), pick(ns, i), r.estimate.real, r.estimate.imag, r.stderr,
                     r.reference.real, r.z_score))
    cols = ("index", "m", "n", "estimate_re", "estimate_im", "stderr", "reference", "z_score")
    return Result(cols, rows, {"max_z": max(r[-1] for r in rows)})


RUNNERS = {
    "validate-generator": run_validate_generator,
    "classify-qF": run_classify_qf,
    "perturb": run_perturb,
    "weyl-demo": run_weyl_demo,
    "cocycle-eval": run_cocycle_eval,
    "toyfock-convergence": run_toyfock,
    "exclusion-demo": run_exclusion,
    "torus-demo": run_torus,
    "presentation-analyze": run_presentation,
    "mc-randomized-action": run_mc,
}

MODULE_OF = {
    "validate-generator": "stdgen",
    "classify-qF": "perturb",
    "perturb": "perturb",
    "weyl-demo": "perturb",
    "cocycle-eval": "cocycle",
    "toyfock-convergence": "toyfock",
    "exclusion-demo": "carmodel",
    "torus-demo": "wordalg",
    "presentation-analyze": "wordalg",
    "mc-randomized-action": "wordalg",
}


class ComputationError(RuntimeError):
    pass


def _jsonable(v):
    if isinstance(v, Path):
        return str(v)
    if isinstance(v, np.ndarray):
        return [_jsonable(x) for x in v.tolist()]
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, complex):
        return [v.real, v.imag]
    if isinstance(v, (np.floating, np.integer, np.bool_)):
        return v.item()
    if isinstance(v, Fraction):
        return str(v)
    if hasattr(v, "segments"):
        return [[float(dd), _jsonable(val)] for dd, val in v.segments]
    return v


def run_scenario(sc: Scenario) -> tuple[Path, Result]:
    t0 = time.perf_counter()
    try:
        result = RUNNERS[sc.kind](sc)
    except ConfigError:
        raise
    except Exception as exc:
        raise ComputationError(f"{MODULE_OF[sc.kind]}: {type(exc).__name__}: {exc}") from exc
    wall = time.perf_counter() - t0
    out = sc.output_path
    csv_path = out / f"{sc.kind}.csv"
    write_atomic(csv_path, result.text())
    manifest = {
        "kind": sc.kind,
        "seed": sc.seed,
        "params": {k: _jsonable(v) for k, v in sc.params.items()},
        "summary": {k: _jsonable(v) for k, v in result.summary.items()},
        "outputs": [csv_path.name],
        "wall_time_s": wall,
        "versions": {"qsflow": __version__, "numpy": np.__version__, "scipy": scipy.__version__,
                     "python": platform.python_version()},
        "scenario_file": str(sc.source) if sc.source else None,
    }
    write_atomic(out / "manifest.json", json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return csv_path, result


# -- listing -------------------------------------------------------------------


def builtin_models() -> list[tuple[str, str, str]]:
    from .wordalg.builtins import list_builtins

    rows = [(b.name, "presentation", b.description) for b in list_builtins()]
    rows += [
        ("exclusion", "model", "CAR exclusion generator on m <= 6 sites"),
        ("inner-d2", "model", "inner generator h = diag(1,-1), t = [[0,1],[0,0]]"),
        ("torus", "model", "noncommutative torus with derivations d_1, d_2"),
        ("weyl", "model", "Weyl perturbation I (x) C"),
    ]
    return sorted(rows)


def list_scenarios() -> list[str]:
    from importlib import resources

    root = resources.files("qsflow").joinpath("data", "scenarios")
    return sorted(p.name for p in root.iterdir() if p.name.endswith(".json"))


def shipped_scenario(name) -> Path | None:
    from importlib import resources

    name = Path(name).name
    if not name.endswith(".json"):
        name += ".json"
    if name not in list_scenarios():
        return None
    return Path(str(resources.files("qsflow").joinpath("data", "scenarios", name)))


# -- entry point ---------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="qsflow", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"qsflow {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run a scenario file or a shipped scenario by name")
    run.add_argument("scenario")
    run.add_argument("-o", "--output", help="override output_path")
    val = sub.add_parser("validate", help="check a scenario file against its schema")
    val.add_argument("scenario")
    sub.add_parser("list", help="list built-in models, presentations and shipped scenarios")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "list":
        for name, kind, desc in builtin_models():
            print(f"{name:<26} {kind:<13} {desc}")
        for name in list_scenarios():
            print(f"{name:<26} {'scenario':<13} shipped example")
        return 0
    try:
        sc = load_scenario(args.scenario)
    except FileNotFoundError:
        print(f"error: no such file: {args.scenario}", file=sys.stderr)
        return 2
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    if args.command == "validate":
        print(f"ok: {sc.kind}")
        return 0
    if args.output:
        sc.output_path = Path(args.output)
    try:
        csv_path, result = run_scenario(sc)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except ComputationError as exc:
        print(f"error in {exc}", file=sys.stderr)
        return 1
    print(f"wrote {csv_path}")
    for k, v in result.summary.items():
        print(f"  {k}: {_jsonable(v)}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
