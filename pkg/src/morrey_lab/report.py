"""Experiment configs, dispatch to the library, JSON reports and CSV profiles."""
from __future__ import annotations

import csv
import json
import math
import os
import tempfile
import time
from dataclasses import asdict

import jsonschema
import numpy as np

from . import __version__
from .approximation import (
    converges,
    kernel_from_dict,
    mollifier_convergence,
    truncation_convergence,
    young_check,
    zorko_modulus,
)
from .catalog import BallSumPhi, from_dict
from .core import MorreyParams, SearchConfig, morrey_norm
from .errors import ComputeError, ConfigError, MorreyError
from .geometry import ball_volume
from .quadrature import SCHEMES, QuadratureConfig
from .vanishing import (
    DEFAULT_N_SCHEDULE,
    FLAG_RULES,
    phi_counting_bound,
    sup_average,
    truncation_profile,
    vanishing_profiles,
)
from .weighted import embedding_scan, weight_from_dict

COMMANDS = ("norm", "classify", "mollify", "truncate", "zorko", "young", "embed", "phi-bounds")
DEFAULT_OUT = "morrey_report.json"

_descriptor = {"type": "object", "required": ["fn"]}
_number_list = {"type": "array", "items": {"type": "number"}, "minItems": 1}

CONFIG_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["command"],
    "properties": {
        "command": {"enum": list(COMMANDS)},
        "function": _descriptor,
        "functions": {"type": "array", "items": _descriptor},
        "kernel": {
            "type": "object",
            "additionalProperties": False,
            "required": ["base"],
            "properties": {"base": _descriptor, "normalized": {"type": "boolean"}, "t": {"type": "number", "exclusiveMinimum": 0}},
        },
        "weight": {"type": "object", "required": ["weight"]},
        "params": {
            "type": "object",
            "additionalProperties": False,
            "required": ["n"],
            "properties": {
                "n": {"enum": [1, 2, 3]},
                "p": {"type": "number", "minimum": 1},
                "lambda": {"type": "number", "minimum": 0},
                "variant": {"enum": ["homogeneous", "inhomogeneous"]},
            },
        },
        "search": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "k_min": {"type": "integer"},
                "k_max": {"type": "integer"},
                "lattice_spacing": {"type": "number", "exclusiveMinimum": 0},
                "lattice_max": {"type": "integer", "minimum": 1},
                "refine_steps": {"type": "integer", "minimum": 0},
                "max_pairs": {"type": "integer", "minimum": 1},
                "threads": {"type": "integer", "minimum": 1},
            },
        },
        "quadrature": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "scheme": {"enum": list(SCHEMES)},
                "radial_nodes": {"type": "integer", "minimum": 2},
                "angular_nodes": {"type": "integer", "minimum": 4},
                "mc_samples": {"type": "integer", "minimum": 1},
                "mc_shells": {"type": "integer", "minimum": 1},
                "rtol": {"type": "number", "exclusiveMinimum": 0},
                "fail_rtol": {"type": "number", "exclusiveMinimum": 0},
                "check_error": {"type": "boolean"},
                "max_refine": {"type": "integer", "minimum": 0},
                "batch_rtol": {"type": "number", "minimum": 0},
            },
        },
        "seed": {"type": "integer", "minimum": 0, "maximum": 2**64 - 1},
        "out": {"type": "string", "minLength": 1},
        "schedule": _number_list,
        "xi": {"type": "array", "items": {"type": "array", "items": {"type": "number"}}, "minItems": 1},
        "K": {"type": "integer", "minimum": 2},
    },
    "allOf": [
        {"if": {"properties": {"command": {"enum": ["norm", "classify", "mollify", "truncate", "zorko", "young"]}}},
         "then": {"required": ["function", "params"]}},
        {"if": {"properties": {"command": {"enum": ["mollify", "young"]}}}, "then": {"required": ["kernel"]}},
        {"if": {"properties": {"command": {"const": "embed"}}}, "then": {"required": ["functions", "weight", "params"]}},
        {"if": {"properties": {"command": {"const": "phi-bounds"}}}, "then": {"required": ["params"]}},
    ],
}


def validate_config(config) -> None:
    try:
        jsonschema.validate(config, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"invalid config at {where}: {exc.message}") from None


def load_config(path) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: not valid JSON ({exc})") from None


def _params(config):
    d = config["params"]
    return MorreyParams(int(d["n"]), float(d.get("p", 1.0)), float(d.get("lambda", 0.0)), d.get("variant", "homogeneous"))


def _quadrature(config):
    q = dict(config.get("quadrature", {}))
    if "seed" in config:
        q["seed"] = int(config["seed"])
    return QuadratureConfig(**q)


def _search(config):
    return SearchConfig(**config.get("search", {}), quadrature=_quadrature(config))


def _build(config):
    """Parse every descriptor up front so that config mistakes surface before any computation."""
    try:
        built = {"search": _search(config)}
        if "params" in config:
            built["params"] = _params(config)
        if "function" in config:
            built["function"] = from_dict(config["function"])
        if "functions" in config:
            built["functions"] = [from_dict(d) for d in config["functions"]]
        if "kernel" in config:
            built["kernel"] = kernel_from_dict(config["kernel"])
        if "weight" in config:
            built["weight"] = weight_from_dict(config["weight"])
    except MorreyError as exc:
        if isinstance(exc, ComputeError):
            raise
        raise ConfigError(str(exc)) from None
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc)) from None
    fs = [built["function"]] if "function" in built else built.get("functions", [])
    if "params" in built:
        for f in fs:
            if f.n != built["params"].n:
                raise ConfigError(f"function lives in R^{f.n} but params.n = {built['params'].n}")
    if "kernel" in built and "function" in built and built["kernel"].n != built["function"].n:
        raise ConfigError("kernel and function dimensions differ")
    return built


def _profile(columns, rows):
    return {"columns": list(columns), "rows": [list(r) for r in rows]}


def _entries_profile(entries, n):
    return _profile(["k", "radius", "value"] + [f"argmax_x{i + 1}" for i in range(n)],
                    [[e.k, e.radius, e.sup, *e.center] for e in entries])


def _run_norm(b, config):
    est, prof = morrey_norm(b["function"], b["params"], b["search"])
    best = prof.best()
    return {
        "estimate": est,
        "argmax": {"k": best.k, "radius": best.radius, "center": list(best.center)} if best else None,
        "profiles": {"sup_profile": _profile(prof.columns(), prof.rows())},
    }


def _run_classify(b, config):
    schedule = config.get("schedule", DEFAULT_N_SCHEDULE)
    rep = vanishing_profiles(b["function"], b["params"], b["search"], schedule)
    n = b["params"].n
    return {
        "norm": rep.norm,
        "flags": rep.flags,
        "confidence": rep.confidence,
        "profiles": {
            "v0_profile": _entries_profile(rep.v0_profile, n),
            "vinf_profile": _entries_profile(rep.vinf_profile, n),
            "truncation_profile": _profile(["N", "value"], rep.truncation.rows()),
        },
    }


def _table_result(table):
    return {
        "norm": table.norm,
        "fit": table.fit,
        "converges": converges(table),
        "profiles": {"error_table": _profile([table.label, "error"], table.rows)},
    }


def _run_mollify(b, config):
    schedule = config.get("schedule", [2.0**-j for j in range(7)])
    return _table_result(mollifier_convergence(b["function"], b["kernel"], schedule, b["params"], b["search"]))


def _run_truncate(b, config):
    schedule = config.get("schedule", [2.0**j for j in range(1, 11)])
    return _table_result(truncation_convergence(b["function"], schedule, b["params"], b["search"]))


def _run_zorko(b, config):
    f, params = b["function"], b["params"]
    shifts = config.get("xi") or [[2.0**-j] + [0.0] * (params.n - 1) for j in range(1, 7)]
    for xi in shifts:
        if len(xi) != params.n:
            raise ConfigError(f"shift {xi} does not live in R^{params.n}")
    norm, _ = morrey_norm(f, params, b["search"])
    rows = []
    for xi in shifts:
        rows.append([float(np.linalg.norm(xi)), zorko_modulus(f, xi, params, b["search"]), *map(float, xi)])
    cols = ["xi_norm", "value"] + [f"xi_{i + 1}" for i in range(params.n)]
    return {"norm": norm, "profiles": {"modulus": _profile(cols, rows)}}


def _run_young(b, config):
    lhs, rhs = young_check(b["function"], b["kernel"], b["params"], b["search"])
    return {
        "lhs": lhs,
        "rhs": rhs,
        "kernel_l1": b["kernel"].l1_norm(),
        "kernel_mass_defect": b["kernel"].mass_defect(),
        "ratio": lhs / rhs if rhs > 0 else None,
    }


def _run_embed(b, config):
    rep = embedding_scan(b["functions"], b["weight"], b["params"], b["search"])
    return rep.to_dict()


def _run_phi_bounds(b, config):
    params, cfg = b["params"], b["search"]
    if not params.homogeneous:
        raise ConfigError("phi-bounds uses the homogeneous norm")
    if not 0 < params.lam < params.n:
        raise ConfigError("phi-bounds needs 0 < lambda < n")
    K = int(config.get("K", 40))
    phi = BallSumPhi(K, params.n)
    ks = [k for k in cfg.exponents(params) if 2.0 ** (K - 3) >= 2.0**k]
    C = ball_volume(params.n)
    rows = []
    for k in ks:
        r = 2.0**k
        sup = sup_average(phi, params, r, cfg).sup
        if r > 1:
            bound = math.log(4 * r) / r**params.lam
        else:
            bound = C * r ** (params.n - params.lam)
        counting = phi_counting_bound(params, r)
        rows.append([k, r, sup, bound, counting, bool(sup <= bound), bool(sup <= counting * (1 + 1e-9))])
    schedule = config.get("schedule", DEFAULT_N_SCHEDULE)
    trunc = truncation_profile(phi, params.p, schedule, cfg)
    return {
        "K": K,
        "C": C,
        "bound_rules": {
            "r<=1": "C * r^(n - lambda), C = |B(0,1)|",
            "r>1": "log(4 r) / r^lambda",
            "counting": "|B(0,1)| * min(log2(2 r + 2), r^n) / r^lambda",
        },
        "log_bound_holds": all(r[5] for r in rows),
        "counting_bound_holds": all(r[6] for r in rows),
        "profiles": {
            "sup_profile": _profile(["k", "radius", "value", "bound", "counting_bound", "bound_ok", "counting_ok"], rows),
            "truncation_profile": _profile(["N", "value"], trunc.rows()),
        },
    }


_DISPATCH = {
    "norm": _run_norm,
    "classify": _run_classify,
    "mollify": _run_mollify,
    "truncate": _run_truncate,
    "zorko": _run_zorko,
    "young": _run_young,
    "embed": _run_embed,
    "phi-bounds": _run_phi_bounds,
}


def _clean(x):
    """JSON-safe copy: numpy scalars to Python, tuples to lists, non-finite floats to None."""
    if isinstance(x, dict):
        return {str(k): _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, np.ndarray):
        return [_clean(v) for v in x.tolist()]
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else None
    return x


def _provenance(config, b):
    cfg = b["search"]
    prov = {
        "quadrature": asdict(cfg.quadrature),
        "search": {k: v for k, v in asdict(cfg).items() if k not in ("quadrature", "threads")},
        "seed": cfg.quadrature.seed,
        "flag_rules": FLAG_RULES,
        "lower_bound_note": "sup estimates are lower bounds over dyadic radii and candidate centres",
    }
    if "params" in b:
        prov["discretization_factor"] = b["params"].discretization_factor
    return prov


def dumps(obj) -> str:
    return json.dumps(_clean(obj), sort_keys=True, indent=2, allow_nan=False) + "\n"


def results_digest(report) -> str:
    """Canonical text of the results section, for byte comparisons."""
    return json.dumps(_clean(report["results"]), sort_keys=True, allow_nan=False)


def write_report(report, path) -> None:
    text = dumps(report)
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(prefix=".morrey-", suffix=".json", dir=directory)
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def run(config, write=True) -> dict:
    """Validate, dispatch, and (optionally) write the report to ``config['out']``."""
    validate_config(config)
    b = _build(config)
    start = time.perf_counter()
    results = _DISPATCH[config["command"]](b, config)
    elapsed = time.perf_counter() - start
    report = _clean({
        "tool_version": __version__,
        "config": config,
        "results": results,
        "provenance": _provenance(config, b),
        "timing": {"seconds": elapsed},
    })
    if write:
        write_report(report, config.get("out", DEFAULT_OUT))
    return report


def _csv_cell(v):
    if isinstance(v, bool):
        return str(v).lower()
    if isinstance(v, float):
        return repr(v)
    if v is None:
        return ""
    return str(v)


def emit_profile_csv(report, path) -> list:
    """One CSV per profile/table of ``report`` in directory ``path``; returns the file paths."""
    profiles = report.get("results", {}).get("profiles")
    if not profiles:
        raise ValueError("report contains no profile or table")
    os.makedirs(path, exist_ok=True)
    written = []
    for name in sorted(profiles):
        prof = profiles[name]
        target = os.path.join(path, f"{name}.csv")
        with open(target, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(prof["columns"])
            for row in prof["rows"]:
                w.writerow([_csv_cell(v) for v in row])
        written.append(target)
    return written
