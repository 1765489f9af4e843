"""Campaign drivers: convergence, concentration, sensitivity and identities.

A campaign draws independent environments (one deterministic seed per
replica, split off the master seed and shared across torus sizes so that
successive sizes are positively coupled), computes the effective matrix for
each, and aggregates.  Aggregation is deterministic: records are sorted by
(N, replica) before any reduction, so thread pools cannot change output.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .environment import (BondField, DisorderLaw, TorusGeometry,
                          periodize, resample_bonds, rng_for,
                          sample_environment)
from .operators import grad, local_drift, mean_rho, div_star
from .diffusivity import effective_matrix, effective_quadratic, corrector
from .solver import DEFAULT_TOL, ConvergenceError, solve_resolvent


@dataclass(frozen=True)
class CampaignConfig:
    law: DisorderLaw
    dimension: int
    N_list: tuple
    replicas: int
    tol: float = DEFAULT_TOL
    master_seed: int = 0
    threads: int = 1

    def __post_init__(self):
        if list(self.N_list) != sorted(self.N_list) or len(self.N_list) == 0:
            raise ValueError("N_list must be nonempty and increasing")
        if self.replicas < 2:
            raise ValueError("need at least 2 replicas for variance estimates")

    def to_json(self) -> dict:
        return {
            "law": self.law.to_json(),
            "dimension": self.dimension,
            "N_list": list(self.N_list),
            "replicas": self.replicas,
            "tol": self.tol,
            "master_seed": self.master_seed,
        }


@dataclass
class ExperimentRecord:
    N: int
    replica: int
    seed: int
    entries: np.ndarray
    asymmetry: float
    diagnostics: dict = field(default_factory=dict)
    iterations: int = 0


def replica_seed(master_seed: int, replica: int) -> int:
    """Deterministic, order-independent per-replica seed."""
    return int(rng_for(master_seed, replica).integers(2 ** 63))


def run_campaign(config: CampaignConfig) -> list[ExperimentRecord]:
    """Effective matrices for every (N, replica) pair, sorted.

    Each replica samples one environment on the largest torus and restricts
    it to the smaller sizes, so the per-replica family D_N is the periodized
    sequence of a single environment and successive sizes are coupled.
    """
    n_max = max(config.N_list)

    def one(task):
        n, r = task
        seed = replica_seed(config.master_seed, r)
        big = sample_environment(config.law,
                                 TorusGeometry(config.dimension, n_max), seed)
        fld = periodize(big, n)
        mat = effective_matrix(fld, tol=config.tol)
        diag = mat.diagnostics[0]
        return ExperimentRecord(
            N=n, replica=r, seed=seed, entries=mat.entries,
            asymmetry=mat.asymmetry,
            diagnostics={
                "orthogonality_residual": max(d.orthogonality_residual
                                              for d in mat.diagnostics),
                "curl_residual": max(d.curl_residual for d in mat.diagnostics),
                "flux_divergence_residual": max(d.flux_divergence_residual
                                                for d in mat.diagnostics),
                "l2_bound_margin": min(d.l2_bound_margin for d in mat.diagnostics),
                "quadratic_linear_gap": max(d.quadratic_linear_gap
                                            for d in mat.diagnostics),
                "lp_norms": dict(diag.lp_norms),
            },
            iterations=mat.iterations)

    tasks = [(n, r) for n in config.N_list for r in range(config.replicas)]
    if config.threads > 1:
        with ThreadPoolExecutor(max_workers=config.threads) as pool:
            records = list(pool.map(one, tasks))
    else:
        records = [one(t) for t in tasks]
    records.sort(key=lambda rec: (rec.N, rec.replica))
    return records


def convergence_study(config: CampaignConfig,
                      records: list[ExperimentRecord] | None = None) -> dict:
    """Monte Carlo means of D_N per torus size with normal CIs.

    The successive-difference column |mean_N - mean_2N| (max over entries)
    is the convergence proxy; CI halfwidths are 1.96 * sem.
    """
    if records is None:
        records = run_campaign(config)
    table = []
    means = {}
    for n in config.N_list:
        block = np.stack([rec.entries for rec in records if rec.N == n])
        mean = block.mean(axis=0)
        sem = block.std(axis=0, ddof=1) / np.sqrt(block.shape[0])
        means[n] = mean
        table.append({"N": n, "mean": mean, "ci_halfwidth": 1.96 * sem})
    for row, nxt in zip(table, table[1:]):
        row["diff_to_next"] = float(np.abs(row["mean"] - nxt["mean"]).max())
    return {"records": records, "table": table, "means": means}


def concentration_study(config: CampaignConfig, epsilons=(0.05, 0.1, 0.2),
                        records: list[ExperimentRecord] | None = None) -> dict:
    """Spread of D_N^{11} across replicas per torus size.

    Reports the empirical standard deviation, the tail frequency beyond
    each epsilon, and the fitted exponent of std ~ N^-exponent.
    """
    if records is None:
        records = run_campaign(config)
    table = []
    for n in config.N_list:
        vals = np.array([rec.entries[0, 0] for rec in records if rec.N == n])
        centered = np.abs(vals - vals.mean())
        table.append({
            "N": n,
            "std": float(vals.std(ddof=1)),
            "mean": float(vals.mean()),
            "tail_frequency": {eps: float((centered > eps).mean())
                               for eps in epsilons},
        })
    stds = np.array([row["std"] for row in table])
    exponent = None
    if len(table) >= 2 and np.all(stds > 0):
        slope = np.polyfit(np.log([row["N"] for row in table]), np.log(stds), 1)[0]
        exponent = float(-slope)
    return {"records": records, "table": table, "decay_exponent": exponent}


def hamming_sensitivity(fld: BondField, perturb_counts, trials: int,
                        tol: float = DEFAULT_TOL,
                        law: DisorderLaw | None = None, seed: int = 0) -> dict:
    """Response of D_N^{11} to resampling a few bonds.

    For each count, resamples that many uniformly chosen bonds and records
    (hamming fraction, |delta D_N^{11}|) pairs; a log-log fit over the
    nonzero pairs gives the reported exponent.  Only the decay to zero is a
    contract; the true Hoelder exponent is not asserted.
    """
    if law is None:
        raise ValueError("a disorder law for resampling must be provided")
    nbonds = fld.geometry.bond_count
    if max(perturb_counts) > nbonds:
        raise ValueError(f"cannot perturb more than {nbonds} bonds")
    e1 = np.zeros(fld.dimension)
    e1[0] = 1.0
    base, _ = effective_quadratic(fld, e1, tol=tol)
    pairs = []
    for count in perturb_counts:
        for trial in range(trials):
            rng = rng_for(seed, count, trial)
            bonds = rng.choice(nbonds, size=count, replace=False)
            perturbed = resample_bonds(fld, bonds, law,
                                       seed=int(rng.integers(2 ** 63)))
            val, _ = effective_quadratic(perturbed, e1, tol=tol)
            pairs.append((count / nbonds, abs(val - base)))
    fracs = np.array([p[0] for p in pairs])
    deltas = np.array([p[1] for p in pairs])
    ok = (fracs > 0) & (deltas > 0)
    exponent = None
    if ok.sum() >= 2 and len(set(np.round(np.log(fracs[ok]), 12))) >= 2:
        exponent = float(np.polyfit(np.log(fracs[ok]), np.log(deltas[ok]), 1)[0])
    medians = {int(c): float(np.median(deltas[np.isclose(fracs, c / nbonds)]))
               for c in perturb_counts}
    return {"pairs": pairs, "medians": medians, "exponent": exponent,
            "baseline": base}


def surface_tension(fld: BondField, v, tol: float = DEFAULT_TOL,
                    max_steps: int = 100_000) -> tuple[float, float, float]:
    """Tilting free energy per site, and its quarter-form cross-check.

    The energy  mean over sites of sum_i xi_i (v_i + grad_i f)^2  is
    minimized by projected Barzilai-Borwein gradient descent (mean removed
    every step), deliberately a different algorithm family from the
    conjugate-gradient corrector route so the check is non-circular.
    Returns (sigma, quarter_form, |sigma - quarter_form|).
    """
    v = np.asarray(v, dtype=float)
    xi = fld.rates
    d = fld.dimension
    vol = fld.geometry.volume
    vgrid = v.reshape((d,) + (1,) * d)

    def energy(f):
        w = vgrid + grad(f)
        return float(np.sum(xi * w * w)) / vol

    def gradient(f):
        g = (2.0 / vol) * div_star(xi * (vgrid + grad(f)))
        return g - g.mean()

    gtol = 1e-8 * fld.ellipticity * max(np.linalg.norm(v), 1e-300)
    f = np.zeros(fld.geometry.grid_shape)
    g = gradient(f)
    f_prev = g_prev = None
    for step in range(max_steps):
        gnorm = np.linalg.norm(g)
        if gnorm <= gtol:
            break
        if f_prev is None:
            # exact line search on the quadratic for the first step
            dir_curv = float(np.sum(xi * grad(g) ** 2)) * 2.0 / vol
            alpha = gnorm ** 2 / dir_curv
        else:
            s = f - f_prev
            y = g - g_prev
            sy = float(np.vdot(s, y))
            alpha = float(np.vdot(s, s)) / sy if sy > 0 else 1.0 / fld.ellipticity
        f_prev, g_prev = f, g
        f = f - alpha * g
        f -= f.mean()
        g = gradient(f)
    else:
        raise ConvergenceError(
            f"descent exhausted {max_steps} steps (gradient norm {gnorm:.3e})",
            residual=float(gnorm), iterations=max_steps)
    sigma = 0.5 * energy(f)
    quarter, _ = effective_quadratic(fld, v, tol=tol)
    quarter *= 0.25
    return sigma, quarter, abs(sigma - quarter)


def resolvent_convergence(fld: BondField, v, lam_list,
                          tol: float = DEFAULT_TOL) -> list[dict]:
    """Weighted gradient gap between resolvent and corrector solutions.

    For each lam the discrepancy sum_i mean(xi_i (grad_i chi_lam - psi^i)^2)
    is reported; it decreases to zero as lam drops below the spectral gap.
    """
    v = np.asarray(v, dtype=float)
    phi = local_drift(fld, v)
    psi = grad(corrector(fld, v, tol=tol).solution)
    rows = []
    for lam in lam_list:
        chi_lam = solve_resolvent(fld, phi, lam, tol=tol).solution
        delta = grad(chi_lam) - psi
        disc = sum(mean_rho(fld.rates[i] * delta[i] ** 2)
                   for i in range(fld.dimension))
        rows.append({"lam": float(lam), "discrepancy": float(disc)})
    return rows


# -- artifact serialization ---------------------------------------------------

def config_hash(doc: dict) -> str:
    """Stable 8-hex digest of a JSON-serializable configuration."""
    blob = json.dumps(doc, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:8]


def records_to_csv(records: list[ExperimentRecord], config: CampaignConfig) -> str:
    """One CSV row per record; '.' decimals, '\\n' endings, repr floats."""
    d = config.dimension
    law_desc = json.dumps(config.law.to_json(), sort_keys=True,
                          separators=(",", ":"))
    c = config.law.ellipticity()
    header = (["seed", "d", "N", "c", "law"]
              + [f"D_{i}{j}" for i in range(d) for j in range(d)]
              + ["asymmetry", "orthogonality_residual", "curl_residual",
                 "flux_divergence_residual", "l2_bound_margin",
                 "quadratic_linear_gap"]
              + [f"lp_{p}" for p in (2.0, 2.5, 3.0, 4.0)]
              + ["iterations"])
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for rec in records:
        row = [rec.seed, d, rec.N, repr(float(c)), law_desc]
        row += [repr(float(x)) for x in rec.entries.reshape(-1)]
        row += [repr(float(rec.asymmetry))]
        row += [repr(float(rec.diagnostics[k]))
                for k in ("orthogonality_residual", "curl_residual",
                          "flux_divergence_residual", "l2_bound_margin",
                          "quadratic_linear_gap")]
        row += [repr(float(rec.diagnostics["lp_norms"][p]))
                for p in (2.0, 2.5, 3.0, 4.0)]
        row += [rec.iterations]
        writer.writerow(row)
    return buf.getvalue()


def summary_to_json(study: dict, config: CampaignConfig, version: str) -> dict:
    """Plot-ready JSON summary of a convergence or concentration study."""
    cfg = config.to_json()
    out = {
        "config": cfg,
        "config_hash": config_hash(cfg),
        "version": version,
        "table": [],
    }
    for row in study["table"]:
        item = {"N": row["N"]}
        for key, val in row.items():
            if key == "N":
                continue
            item[key] = val.tolist() if isinstance(val, np.ndarray) else val
        out["table"].append(item)
    if "decay_exponent" in study:
        out["decay_exponent"] = study["decay_exponent"]
    return out
