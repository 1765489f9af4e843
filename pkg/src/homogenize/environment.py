"""Random bond environments on the discrete torus.

A geometry is the lattice torus of side 2N in dimension d.  An environment
assigns one positive conductance to every nearest-neighbour bond (site x,
direction i), all confined to the ellipticity window [1/c, c].  Sampling is
a pure function of (law, geometry, seed).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np


class GeometryMismatchError(ValueError):
    """Two fields with different tori were combined."""


class SupportError(ValueError):
    """A disorder law whose support leaves the ellipticity window."""


def rng_for(seed: int, *stream: int) -> np.random.Generator:
    """Deterministic generator for (seed, stream ids).

    Uses numpy's splittable SeedSequence so that derived streams are
    independent and order-insensitive: replica 7 gets the same stream no
    matter how many replicas ran before it.
    """
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=tuple(stream)))


@dataclass(frozen=True)
class TorusGeometry:
    """The torus Z^d / 2N Z^d with sites indexed by {0,...,2N-1}^d."""

    dimension: int
    half_period: int

    def __post_init__(self):
        if self.dimension < 1:
            raise ValueError(f"dimension must be >= 1, got {self.dimension}")
        if self.half_period < 1:
            raise ValueError(f"half_period must be >= 1, got {self.half_period}")

    @property
    def side(self) -> int:
        return 2 * self.half_period

    @property
    def volume(self) -> int:
        return self.side ** self.dimension

    @property
    def grid_shape(self) -> tuple[int, ...]:
        return (self.side,) * self.dimension

    @property
    def bond_count(self) -> int:
        return self.dimension * self.volume

    def wrap(self, x) -> tuple[int, ...]:
        return tuple(int(c) % self.side for c in x)

    def site_index(self, x) -> int:
        """Linear site index: mixed-radix (C-order) encoding of coordinates."""
        k = 0
        for c in x:
            k = k * self.side + (int(c) % self.side)
        return k

    def site_coords(self, k: int) -> tuple[int, ...]:
        out = []
        for _ in range(self.dimension):
            out.append(k % self.side)
            k //= self.side
        return tuple(reversed(out))


@dataclass(frozen=True)
class DisorderLaw:
    """Single-bond marginal of the product environment measure.

    Kinds: constant(a), uniform(a, b), two_point(a, b, p) and
    discrete(values, probs).  Support must be strictly positive; the
    ellipticity constant c is the smallest c >= 1 with support in [1/c, c].
    """

    kind: str
    params: tuple = ()
    probs: tuple = field(default=())

    def __post_init__(self):
        if self.kind == "constant":
            (a,) = self.params
            if a <= 0:
                raise SupportError(f"constant law needs a > 0, got {a}")
        elif self.kind == "uniform":
            a, b = self.params
            if not (0 < a <= b):
                raise SupportError(f"uniform law needs 0 < a <= b, got ({a}, {b})")
        elif self.kind == "two_point":
            a, b, p = self.params
            if a <= 0 or b <= 0:
                raise SupportError(f"two_point values must be positive, got ({a}, {b})")
            if not (0 <= p <= 1):
                raise ValueError(f"two_point probability must be in [0, 1], got {p}")
        elif self.kind == "discrete":
            if len(self.params) == 0 or len(self.params) != len(self.probs):
                raise ValueError("discrete law needs matching values and probs")
            if min(self.params) <= 0:
                raise SupportError("discrete law values must be positive")
            if any(p < 0 for p in self.probs) or abs(sum(self.probs) - 1.0) > 1e-12:
                raise ValueError("discrete law probabilities must be >= 0 and sum to 1")
        else:
            raise ValueError(f"unknown law kind {self.kind!r}")

    @classmethod
    def constant(cls, a: float) -> "DisorderLaw":
        return cls("constant", (float(a),))

    @classmethod
    def uniform(cls, a: float, b: float) -> "DisorderLaw":
        return cls("uniform", (float(a), float(b)))

    @classmethod
    def two_point(cls, a: float, b: float, p: float = 0.5) -> "DisorderLaw":
        return cls("two_point", (float(a), float(b), float(p)))

    @classmethod
    def discrete(cls, values, probs) -> "DisorderLaw":
        return cls("discrete", tuple(float(v) for v in values),
                   tuple(float(p) for p in probs))

    def support_bounds(self) -> tuple[float, float]:
        if self.kind == "constant":
            return self.params[0], self.params[0]
        if self.kind == "uniform":
            return self.params[0], self.params[1]
        if self.kind == "two_point":
            a, b, _ = self.params
            return min(a, b), max(a, b)
        return min(self.params), max(self.params)

    def ellipticity(self) -> float:
        """Smallest c >= 1 such that the support lies in [1/c, c]."""
        lo, hi = self.support_bounds()
        return max(hi, 1.0 / lo, 1.0)

    def mean_inverse(self) -> float:
        """E[1/xi] under the law; exact for every supported kind."""
        if self.kind == "constant":
            return 1.0 / self.params[0]
        if self.kind == "uniform":
            a, b = self.params
            return 1.0 / a if a == b else float(np.log(b / a) / (b - a))
        if self.kind == "two_point":
            a, b, p = self.params
            return p / a + (1 - p) / b
        return float(sum(q / v for v, q in zip(self.params, self.probs)))

    def draw(self, rng: np.random.Generator, size) -> np.ndarray:
        if self.kind == "constant":
            return np.full(size, self.params[0])
        if self.kind == "uniform":
            a, b = self.params
            return rng.uniform(a, b, size)
        if self.kind == "two_point":
            a, b, p = self.params
            return np.where(rng.random(size) < p, a, b)
        return rng.choice(np.asarray(self.params), size=size, p=np.asarray(self.probs))

    def to_json(self) -> dict:
        d = {"kind": self.kind, "params": list(self.params)}
        if self.kind == "discrete":
            d["probs"] = list(self.probs)
        return d

    @classmethod
    def from_json(cls, d: dict) -> "DisorderLaw":
        return cls(d["kind"], tuple(d["params"]), tuple(d.get("probs", ())))


@dataclass(frozen=True)
class BondField:
    """One environment realization: a conductance per (site, direction).

    Rates are stored direction-major as an array of shape (d, 2N, ..., 2N);
    component i holds xi_i(x), the rate of the bond (x, x + e_i).  External
    (JSON) order is site-major with direction fastest.  Instances are
    immutable and safe to share across threads.
    """

    geometry: TorusGeometry
    ellipticity: float
    rates: np.ndarray

    def __post_init__(self):
        g = self.geometry
        r = np.asarray(self.rates, dtype=float)
        if r.shape != (g.dimension,) + g.grid_shape:
            raise ValueError(f"rates shape {r.shape} does not match geometry {g}")
        if not np.all(np.isfinite(r)):
            raise ValueError("rates must be finite")
        c = self.ellipticity
        if c < 1:
            raise ValueError(f"ellipticity must be >= 1, got {c}")
        if r.min() < 1.0 / c - 1e-12 or r.max() > c + 1e-12:
            raise SupportError(
                f"rates in [{r.min()}, {r.max()}] escape the window [1/{c}, {c}]")
        r.flags.writeable = False
        object.__setattr__(self, "rates", r)

    @property
    def dimension(self) -> int:
        return self.geometry.dimension

    def bond_id(self, x, direction: int) -> int:
        """Linear bond index: site-major, direction fastest."""
        return self.geometry.site_index(x) * self.dimension + direction

    def bond_coords(self, bond: int) -> tuple[tuple[int, ...], int]:
        site, direction = divmod(int(bond), self.dimension)
        return self.geometry.site_coords(site), direction

    def rate_at(self, x, direction: int) -> float:
        return float(self.rates[(direction,) + self.geometry.wrap(x)])

    def flat_rates(self) -> np.ndarray:
        """Rates in external order: site-major, direction fastest."""
        return np.moveaxis(self.rates, 0, -1).reshape(-1)

    def to_json(self, include_rates: bool = True, law: DisorderLaw | None = None,
                seed: int | None = None) -> dict:
        doc = {
            "dimension": self.geometry.dimension,
            "half_period": self.geometry.half_period,
            "ellipticity": self.ellipticity,
        }
        if law is not None:
            doc["law"] = law.to_json()
        if seed is not None:
            doc["seed"] = seed
        if include_rates:
            doc["rates"] = self.flat_rates().tolist()
        return doc

    @classmethod
    def from_json(cls, doc: dict) -> "BondField":
        geom = TorusGeometry(doc["dimension"], doc["half_period"])
        if "rates" in doc:
            flat = np.asarray(doc["rates"], dtype=float)
            rates = np.moveaxis(flat.reshape(geom.grid_shape + (geom.dimension,)), -1, 0)
            return cls(geom, float(doc["ellipticity"]), rates)
        law = DisorderLaw.from_json(doc["law"])
        return sample_environment(law, geom, int(doc["seed"]))

    def dumps(self, **kw) -> str:
        return json.dumps(self.to_json(**kw))

    @classmethod
    def loads(cls, s: str) -> "BondField":
        return cls.from_json(json.loads(s))


def sample_environment(law: DisorderLaw, geometry: TorusGeometry, seed: int) -> BondField:
    """Draw every bond i.i.d. from the law.  Deterministic given the seed.

    Bonds are filled in external (site-major, direction fastest) order, so
    for d = 1 a torus of side 2N consumes the first 2N draws of the stream:
    environments at different N with the same seed are nested.
    """
    rng = rng_for(seed)
    flat = law.draw(rng, (geometry.volume, geometry.dimension))
    rates = np.moveaxis(flat.reshape(geometry.grid_shape + (geometry.dimension,)), -1, 0)
    return BondField(geometry, law.ellipticity(), rates)


def periodize(fld: BondField, half_period: int) -> BondField:
    """Restriction of the environment to a smaller torus.

    The sub-torus of side 2n reads the same bond rates as the big torus on
    the box {0,...,2n-1}^d, so a family of sizes cut from one sample is the
    periodized sequence of a single environment.
    """
    if 2 * half_period > fld.geometry.side:
        raise ValueError(
            f"cannot periodize side {fld.geometry.side} down to {2 * half_period}")
    if 2 * half_period == fld.geometry.side:
        return fld
    box = (slice(None),) + (slice(0, 2 * half_period),) * fld.dimension
    return BondField(TorusGeometry(fld.dimension, half_period),
                     fld.ellipticity, fld.rates[box].copy())


def shift(fld: BondField, x) -> BondField:
    """Translate the environment: returned rates are xi_i(. - x) mod 2N."""
    if len(x) != fld.dimension:
        raise GeometryMismatchError(f"shift vector {x} has wrong dimension")
    shifted = np.roll(fld.rates, [int(c) for c in x],
                      axis=tuple(range(1, fld.dimension + 1)))
    return BondField(fld.geometry, fld.ellipticity, shifted)


def hamming_distance(f1: BondField, f2: BondField) -> int:
    """Number of bonds at which the two environments differ exactly."""
    if f1.geometry != f2.geometry:
        raise GeometryMismatchError(f"{f1.geometry} vs {f2.geometry}")
    return int(np.count_nonzero(f1.rates != f2.rates))


def resample_bonds(fld: BondField, bonds, law: DisorderLaw, seed: int) -> BondField:
    """Redraw the listed bonds (linear ids) i.i.d. from the law.

    All other bonds are untouched, so the Hamming distance to the input is
    at most len(bonds).  The law must fit the field's ellipticity window.
    """
    bonds = np.asarray(bonds, dtype=int)
    if bonds.size == 0:
        return fld
    if bonds.min() < 0 or bonds.max() >= fld.geometry.bond_count:
        raise IndexError(f"bond ids must lie in [0, {fld.geometry.bond_count})")
    lo, hi = law.support_bounds()
    c = fld.ellipticity
    if lo < 1.0 / c - 1e-12 or hi > c + 1e-12:
        raise SupportError(f"law support [{lo}, {hi}] escapes the window [1/{c}, {c}]")
    flat = fld.flat_rates().copy()
    flat[bonds] = law.draw(rng_for(seed), bonds.shape)
    grid = np.moveaxis(flat.reshape(fld.geometry.grid_shape + (fld.dimension,)), -1, 0)
    return BondField(fld.geometry, c, grid)
