"""Continuous-time random walk among the bond conductances.

Exact event-driven (Gillespie) simulation: at site x the walk jumps to
x + e_i at rate xi_i(x) and to x - e_i at rate xi_i(x - e_i); holding times
are exponential with the total incident rate.  Positions are tracked
unwrapped on Z^d while rates are read off the periodized torus.

Batches of walkers are advanced in lock-step numpy sweeps; the result is a
pure function of (environment, horizon, walkers, seed).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .environment import BondField, rng_for


@dataclass(frozen=True)
class WalkConfig:
    t: float
    walkers: int
    seed: int = 0

    def __post_init__(self):
        if self.t <= 0:
            raise ValueError(f"horizon must be positive, got {self.t}")
        if self.walkers < 1:
            raise ValueError(f"need at least one walker, got {self.walkers}")


class _JumpTables:
    """Per-site move rates, cumulative probabilities and neighbor indices."""

    def __init__(self, fld: BondField):
        geom = fld.geometry
        d, vol = geom.dimension, geom.volume
        idx = np.arange(vol).reshape(geom.grid_shape)
        self.rates = np.empty((vol, 2 * d))
        self.neighbors = np.empty((vol, 2 * d), dtype=np.int64)
        self.moves = np.zeros((2 * d, d), dtype=np.int64)
        for i in range(d):
            self.rates[:, 2 * i] = fld.rates[i].reshape(-1)
            self.rates[:, 2 * i + 1] = np.roll(fld.rates[i], 1, axis=i).reshape(-1)
            self.neighbors[:, 2 * i] = np.roll(idx, -1, axis=i).reshape(-1)
            self.neighbors[:, 2 * i + 1] = np.roll(idx, 1, axis=i).reshape(-1)
            self.moves[2 * i, i] = 1
            self.moves[2 * i + 1, i] = -1
        self.total = self.rates.sum(axis=1)
        self.cum = np.cumsum(self.rates, axis=1) / self.total[:, None]


def walk_batch(fld: BondField, t: float, walkers: int, seed: int,
               start: np.ndarray | str = "origin"
               ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Advance a batch of independent walkers to time t.

    start is "origin", "uniform" (uniform torus site) or an array of linear
    site indices.  Returns (displacements, start_sites, end_sites) with
    displacements unwrapped in Z^d and sites as linear indices.
    """
    geom = fld.geometry
    tab = _JumpTables(fld)
    rng = rng_for(seed)
    if isinstance(start, str):
        if start == "origin":
            pos = np.zeros(walkers, dtype=np.int64)
        elif start == "uniform":
            pos = rng.integers(0, geom.volume, size=walkers)
        else:
            raise ValueError(f"unknown start mode {start!r}")
    else:
        pos = np.asarray(start, dtype=np.int64).copy()
        if pos.shape != (walkers,):
            raise ValueError("start array must have one site per walker")
    start_sites = pos.copy()
    disp = np.zeros((walkers, geom.dimension), dtype=np.int64)
    clock = np.zeros(walkers)
    active = np.arange(walkers)
    while active.size:
        p = pos[active]
        dt = rng.standard_exponential(active.size) / tab.total[p]
        clock[active] += dt
        alive = clock[active] <= t
        act = active[alive]
        if act.size:
            u = rng.random(act.size)
            choice = (u[:, None] > tab.cum[pos[act]]).sum(axis=1)
            disp[act] += tab.moves[choice]
            pos[act] = tab.neighbors[pos[act], choice]
        active = act
    return disp, start_sites, pos


def simulate_walk(fld: BondField, t: float, seed: int,
                  jump_log: list | None = None) -> np.ndarray:
    """One walker started at the origin; returns the unwrapped displacement.

    If jump_log is a list, every jump is appended as a dict
    {"time", "site", "direction"} (site = linear index before the jump,
    direction in 0..2d-1 encoding +e_1, -e_1, +e_2, ...).
    """
    if t <= 0:
        raise ValueError(f"horizon must be positive, got {t}")
    geom = fld.geometry
    tab = _JumpTables(fld)
    rng = rng_for(seed)
    pos = 0
    disp = np.zeros(geom.dimension, dtype=np.int64)
    clock = 0.0
    while True:
        clock += rng.standard_exponential() / tab.total[pos]
        if clock > t:
            return disp
        choice = int((rng.random() > tab.cum[pos]).sum())
        if jump_log is not None:
            jump_log.append({"time": clock, "site": int(pos), "direction": choice})
        disp += tab.moves[choice]
        pos = int(tab.neighbors[pos, choice])


def msd_estimate(fld: BondField, v, config: WalkConfig,
                 start: np.ndarray | str = "origin") -> tuple[float, float]:
    """Estimate (v, D_N v) as mean((X_t . v)^2) / t with its standard error.

    The estimator carries an O(1/t) finite-horizon bias on top of the
    reported Monte Carlo error; pick t large enough that the bias is below
    the standard error.
    """
    v = np.asarray(v, dtype=float)
    disp, _, _ = walk_batch(fld, config.t, config.walkers, config.seed, start=start)
    y = (disp @ v) ** 2 / config.t
    se = float(y.std(ddof=1) / np.sqrt(config.walkers)) if config.walkers > 1 else np.inf
    return float(y.mean()), se


def annealed_msd(law, geometry, v, config: WalkConfig, replicas: int
                 ) -> tuple[float, float]:
    """Average the quenched MSD estimate over fresh environments.

    One fresh environment per replica (seeds split off config.seed); the
    reported standard error is the spread of the per-replica estimates and
    therefore combines walker noise with environment noise.
    """
    from .environment import sample_environment

    if replicas < 1:
        raise ValueError(f"need at least one replica, got {replicas}")
    estimates = []
    for r in range(replicas):
        fld = sample_environment(law, geometry, seed=int(
            rng_for(config.seed, 0, r).integers(2 ** 63)))
        sub = WalkConfig(config.t, config.walkers,
                         seed=int(rng_for(config.seed, 1, r).integers(2 ** 63)))
        estimates.append(msd_estimate(fld, v, sub)[0])
    estimates = np.asarray(estimates)
    if replicas == 1:
        return float(estimates[0]), np.inf
    return float(estimates.mean()), float(estimates.std(ddof=1) / np.sqrt(replicas))
