"""Command-line front end: JSON config in, JSON/CSV artifacts out.

Subcommands: diffusivity, converge, concentrate, hamming, walk, spectral,
surface-tension, resolvent.  Configs are validated against CONFIG_SCHEMA
(unknown keys rejected) before any computation; dotted --set overrides are
applied after file parsing.  Exit codes: 0 success, 2 config/schema
violation, 3 solver non-convergence, 4 size-guard violation.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import jsonschema
import numpy as np

from . import __version__
from .environment import DisorderLaw, TorusGeometry, sample_environment
from .diffusivity import effective_matrix
from .solver import ConvergenceError, SizeGuardError
from .spectral import (diffusivity_via_spectrum, semigroup_moment,
                       semigroup_moment_mc, spectral_measure)
from .walker import WalkConfig, msd_estimate
from .experiments import (CampaignConfig, concentration_study, config_hash,
                          convergence_study, hamming_sensitivity,
                          records_to_csv, resolvent_convergence, run_campaign,
                          summary_to_json, surface_tension)

EXIT_CONFIG = 2
EXIT_SOLVER = 3
EXIT_GUARD = 4

_NUM = {"type": "number"}
_INT = {"type": "integer"}

CONFIG_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["geometry", "law", "seed"],
    "properties": {
        "geometry": {
            "type": "object",
            "additionalProperties": False,
            "required": ["dimension", "half_period"],
            "properties": {
                "dimension": {"type": "integer", "minimum": 1},
                "half_period": {"type": "integer", "minimum": 1},
            },
        },
        "law": {
            "type": "object",
            "additionalProperties": False,
            "required": ["kind", "params"],
            "properties": {
                "kind": {"enum": ["constant", "uniform", "two_point", "discrete"]},
                "params": {"type": "array", "items": _NUM},
                "probs": {"type": "array", "items": _NUM},
            },
        },
        "seed": {"type": "integer", "minimum": 0},
        "vector": {"type": "array", "items": _NUM, "minItems": 1},
        "solver": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"tol": _NUM, "max_iterations": _INT,
                           "jacobi": {"type": "boolean"}},
        },
        "output_dir": {"type": "string"},
        "threads": {"type": "integer", "minimum": 1},
        "campaign": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "N_list": {"type": "array", "items": {"type": "integer", "minimum": 1}},
                "replicas": {"type": "integer", "minimum": 2},
                "epsilons": {"type": "array", "items": _NUM},
            },
        },
        "walk": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"t": _NUM, "walkers": {"type": "integer", "minimum": 1},
                           "start": {"enum": ["origin", "uniform"]}},
        },
        "spectral": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"n": _NUM, "walkers": {"type": "integer", "minimum": 1}},
        },
        "hamming": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "perturb_counts": {"type": "array",
                                   "items": {"type": "integer", "minimum": 0}},
                "trials": {"type": "integer", "minimum": 1},
            },
        },
        "resolvent": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"lambdas": {"type": "array",
                                       "items": {"type": "number",
                                                 "exclusiveMinimum": 0}}},
        },
        "surface": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"max_steps": {"type": "integer", "minimum": 1}},
        },
    },
}


class ConfigError(ValueError):
    pass


def _parse_override(text: str):
    if "=" not in text:
        raise ConfigError(f"override {text!r} is not of the form key=value")
    key, raw = text.split("=", 1)
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return key.split("."), value


def apply_overrides(config: dict, overrides) -> dict:
    """Apply dotted-path overrides (e.g. solver.tol=1e-8) after parsing."""
    for text in overrides:
        path, value = _parse_override(text)
        node = config
        for part in path[:-1]:
            node = node.setdefault(part, {})
            if not isinstance(node, dict):
                raise ConfigError(f"override path {text!r} crosses a non-object")
        node[path[-1]] = value
    return config


def load_config(path: str, overrides=()) -> dict:
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"config file {path!r} does not exist")
    try:
        config = json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path!r} is not valid JSON: {exc}") from exc
    config = apply_overrides(config, overrides)
    try:
        jsonschema.validate(config, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        raise ConfigError(f"config violates schema: {exc.message}") from exc
    return config


def _threads(config: dict) -> int:
    if "threads" in config:
        return config["threads"]
    env = os.environ.get("HOMOGENIZE_THREADS")
    if env is not None:
        try:
            return max(1, int(env))
        except ValueError as exc:
            raise ConfigError(f"HOMOGENIZE_THREADS={env!r} is not an integer") from exc
    return 1


def _common(config: dict):
    geom = TorusGeometry(**config["geometry"])
    law = DisorderLaw.from_json(config["law"])
    tol = config.get("solver", {}).get("tol", 1e-10)
    vector = config.get("vector")
    v = np.asarray(vector, dtype=float) if vector is not None \
        else np.eye(geom.dimension)[0]
    if v.shape != (geom.dimension,):
        raise ConfigError(f"vector has length {v.size}, expected {geom.dimension}")
    return geom, law, tol, v


def _artifact(config: dict, payload: dict) -> dict:
    payload["config_hash"] = config_hash(config)
    payload["version"] = __version__
    return payload


def _write_json(path: Path, payload: dict):
    path.write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n")


def _campaign_config(config: dict, geom, law, tol) -> CampaignConfig:
    camp = config.get("campaign", {})
    return CampaignConfig(
        law=law, dimension=geom.dimension,
        N_list=tuple(camp.get("N_list", [geom.half_period])),
        replicas=camp.get("replicas", 50), tol=tol,
        master_seed=config["seed"], threads=_threads(config))


def run(subcommand: str, config: dict, outdir: Path) -> list[Path]:
    """Execute one subcommand; returns the written artifact paths."""
    geom, law, tol, v = _common(config)
    seed = config["seed"]
    tag = f"seed{seed}_{config_hash(config)}"
    outdir.mkdir(parents=True, exist_ok=True)
    written = []

    if subcommand == "diffusivity":
        fld = sample_environment(law, geom, seed)
        mat = effective_matrix(fld, tol=tol)
        path = outdir / f"diffusivity_{tag}.json"
        _write_json(path, _artifact(config, {"effective_matrix": mat.to_json()}))
        written.append(path)

    elif subcommand in ("converge", "concentrate"):
        camp_cfg = _campaign_config(config, geom, law, tol)
        records = run_campaign(camp_cfg)
        if subcommand == "converge":
            study = convergence_study(camp_cfg, records=records)
        else:
            eps = tuple(config.get("campaign", {}).get("epsilons", (0.05, 0.1, 0.2)))
            study = concentration_study(camp_cfg, epsilons=eps, records=records)
        csv_path = outdir / f"{subcommand}_{tag}.csv"
        csv_path.write_text(records_to_csv(records, camp_cfg))
        json_path = outdir / f"{subcommand}_{tag}.json"
        _write_json(json_path, _artifact(config,
                                         summary_to_json(study, camp_cfg, __version__)))
        written += [csv_path, json_path]

    elif subcommand == "hamming":
        fld = sample_environment(law, geom, seed)
        ham = config.get("hamming", {})
        result = hamming_sensitivity(
            fld, ham.get("perturb_counts", [1, 4, 16]),
            ham.get("trials", 20), tol=tol, law=law, seed=seed)
        path = outdir / f"hamming_{tag}.json"
        _write_json(path, _artifact(config, {
            "pairs": [[f, d] for f, d in result["pairs"]],
            "medians": {str(k): val for k, val in result["medians"].items()},
            "exponent": result["exponent"],
            "baseline": result["baseline"],
        }))
        written.append(path)

    elif subcommand == "walk":
        fld = sample_environment(law, geom, seed)
        walk = config.get("walk", {})
        wc = WalkConfig(walk.get("t", 100.0), walk.get("walkers", 10_000), seed=seed)
        est, se = msd_estimate(fld, v, wc, start=walk.get("start", "origin"))
        path = outdir / f"walk_{tag}.json"
        _write_json(path, _artifact(config, {
            "msd_estimate": est, "standard_error": se,
            "t": wc.t, "walkers": wc.walkers}))
        written.append(path)

    elif subcommand == "spectral":
        fld = sample_environment(law, geom, seed)
        spec = config.get("spectral", {})
        meas = spectral_measure(fld, v)
        payload = {
            "spectral_measure": meas.to_json(),
            "total_mass": meas.total_mass,
            "max_eigenvalue": meas.max_eigenvalue,
            "diffusivity_via_spectrum": diffusivity_via_spectrum(fld, v),
        }
        n = spec.get("n")
        if n is not None:
            payload["semigroup_moment"] = {"n": n,
                                           "value": semigroup_moment(fld, v, n)}
            walkers = spec.get("walkers")
            if walkers:
                est, se = semigroup_moment_mc(fld, v, n, walkers, seed=seed)
                payload["semigroup_moment_mc"] = {
                    "estimate": est, "standard_error": se, "walkers": walkers}
        path = outdir / f"spectral_{tag}.json"
        _write_json(path, _artifact(config, payload))
        written.append(path)

    elif subcommand == "surface-tension":
        fld = sample_environment(law, geom, seed)
        max_steps = config.get("surface", {}).get("max_steps", 100_000)
        sigma, quarter, residual = surface_tension(fld, v, tol=tol,
                                                   max_steps=max_steps)
        path = outdir / f"surface_tension_{tag}.json"
        _write_json(path, _artifact(config, {
            "sigma": sigma, "quarter_form": quarter, "residual": residual}))
        written.append(path)

    elif subcommand == "resolvent":
        fld = sample_environment(law, geom, seed)
        lambdas = config.get("resolvent", {}).get("lambdas", [1.0, 0.1, 0.01, 0.001])
        rows = resolvent_convergence(fld, v, lambdas, tol=tol)
        path = outdir / f"resolvent_{tag}.json"
        _write_json(path, _artifact(config, {"table": rows}))
        written.append(path)

    else:
        raise ConfigError(f"unknown subcommand {subcommand!r}")
    return written


SUBCOMMANDS = ("diffusivity", "converge", "concentrate", "hamming", "walk",
               "spectral", "surface-tension", "resolvent")


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="homogenize",
        description="Finite-volume effective diffusivity toolkit")
    parser.add_argument("subcommand", choices=SUBCOMMANDS)
    parser.add_argument("--config", required=True, help="path to a JSON config")
    parser.add_argument("--set", dest="overrides", action="append", default=[],
                        metavar="KEY=VALUE",
                        help="dotted-path override, e.g. solver.tol=1e-8")
    parser.add_argument("--output-dir", default=None,
                        help="output root (defaults to the config's output_dir or .)")
    parser.add_argument("--version", action="version", version=__version__)
    args = parser.parse_args(argv)

    def fail(code: int, kind: str, message: str) -> int:
        print(json.dumps({"error": {"code": code, "kind": kind,
                                    "message": message}}), file=sys.stderr)
        return code

    try:
        config = load_config(args.config, args.overrides)
    except ConfigError as exc:
        return fail(EXIT_CONFIG, "config", str(exc))
    outdir = Path(args.output_dir or config.get("output_dir", "."))
    try:
        written = run(args.subcommand, config, outdir)
    except ConfigError as exc:
        return fail(EXIT_CONFIG, "config", str(exc))
    except ConvergenceError as exc:
        return fail(EXIT_SOLVER, "solver",
                    f"{exc} (residual {exc.residual:.3e})")
    except SizeGuardError as exc:
        return fail(EXIT_GUARD, "guard", str(exc))
    except ValueError as exc:
        return fail(EXIT_CONFIG, "config", str(exc))
    for path in written:
        print(str(path))
    return 0


if __name__ == "__main__":
    sys.exit(main())
