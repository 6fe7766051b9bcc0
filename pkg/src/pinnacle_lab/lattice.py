"""Integer height configurations on an L x L box and their gradient energies.

A surface is an integer height per site of the box {0..L-1}^2 together with
a constant height outside the box.  The energy of a configuration is the sum
of |gradient|^p over every nearest-neighbor bond with at least one endpoint
inside the box; bonds between two outside sites carry zero gradient under a
constant boundary and are not summed.

Exponents p = 1, p = 2 and p = infinity (gradients restricted to {-1, 0, 1},
each non-flat bond costing 1) are evaluated in exact integer arithmetic;
other finite p use floating point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import AdmissibilityError, ConfigError

INFINITY = math.inf


@dataclass(frozen=True)
class ModelParams:
    """Model parameters: gradient exponent, inverse temperature, floor,
    boundary height."""

    p: float = 2.0
    beta: float = 1.0
    floor: bool = False
    boundary_height: int = 0

    def __post_init__(self):
        if not (self.p == 1 or self.p > 1):
            raise ConfigError(f"exponent p must be 1, >1 or inf, got {self.p}")
        if not self.beta > 0:
            raise ConfigError(f"beta must be positive, got {self.beta}")
        if self.floor and self.boundary_height < 0:
            raise ConfigError("floor requires boundary_height >= 0")
        if self.boundary_height != int(self.boundary_height):
            raise ConfigError("boundary_height must be an integer")

    @property
    def is_rsos(self) -> bool:
        return math.isinf(self.p)

    @property
    def exact(self) -> bool:
        """Whether bond energies are exactly representable as integers."""
        return self.is_rsos or self.p in (1.0, 2.0)


@dataclass(frozen=True)
class Bond:
    """A nearest-neighbor bond; one endpoint may lie outside the box."""

    a: tuple[int, int]
    b: tuple[int, int]

    def __post_init__(self):
        if abs(self.a[0] - self.b[0]) + abs(self.a[1] - self.b[1]) != 1:
            raise ConfigError(f"bond endpoints {self.a}, {self.b} not adjacent")


class HeightConfig:
    """Heights on the L x L box plus a constant boundary height.

    ``heights[y, x]`` is the height of site (x, y), both 0-based; the text
    snapshot format stores rows in increasing y.  The object is a plain
    value: share it read-only, copy before mutating.
    """

    __slots__ = ("heights", "boundary_height")

    def __init__(self, heights, boundary_height: int = 0):
        h = np.asarray(heights, dtype=np.int64)
        if h.ndim != 2 or h.shape[0] != h.shape[1] or h.shape[0] < 1:
            raise ConfigError(f"heights must be a square grid, got shape {h.shape}")
        self.heights = h
        self.boundary_height = int(boundary_height)

    @classmethod
    def flat(cls, L: int, value: int = 0, boundary_height: int = 0) -> "HeightConfig":
        return cls(np.full((L, L), value, dtype=np.int64), boundary_height)

    @property
    def L(self) -> int:
        return self.heights.shape[0]

    def copy(self) -> "HeightConfig":
        return HeightConfig(self.heights.copy(), self.boundary_height)

    def shifted(self, c: int) -> "HeightConfig":
        """Global shift eta -> eta + c with the boundary shifted equally."""
        return HeightConfig(self.heights + c, self.boundary_height + c)

    def __eq__(self, other):
        return (isinstance(other, HeightConfig)
                and self.boundary_height == other.boundary_height
                and np.array_equal(self.heights, other.heights))

    def __hash__(self):
        return hash((self.boundary_height, self.heights.tobytes()))


def _bond_gradients(config: HeightConfig):
    """All bond gradients incident to the box, as flat integer arrays."""
    h = config.heights
    b = config.boundary_height
    grads = [
        (h[:, 1:] - h[:, :-1]).ravel(),
        (h[1:, :] - h[:-1, :]).ravel(),
        h[0, :] - b, h[-1, :] - b,
        h[:, 0] - b, h[:, -1] - b,
    ]
    return np.concatenate(grads)


def find_rsos_violation(config: HeightConfig):
    """Return an offending Bond if some gradient exceeds 1, else None."""
    h = config.heights
    L = config.L
    b = config.boundary_height
    dx = np.abs(h[:, 1:] - h[:, :-1]) > 1
    if dx.any():
        y, x = np.argwhere(dx)[0]
        return Bond((int(x), int(y)), (int(x) + 1, int(y)))
    dy = np.abs(h[1:, :] - h[:-1, :]) > 1
    if dy.any():
        y, x = np.argwhere(dy)[0]
        return Bond((int(x), int(y)), (int(x), int(y) + 1))
    for edge, mk in (
        (h[0, :], lambda x: ((x, 0), (x, -1))),
        (h[-1, :], lambda x: ((x, L - 1), (x, L))),
        (h[:, 0], lambda y: ((0, y), (-1, y))),
        (h[:, -1], lambda y: ((L - 1, y), (L, y))),
    ):
        bad = np.abs(edge - b) > 1
        if bad.any():
            k = int(np.argwhere(bad)[0][0])
            a, out = mk(k)
            return Bond(a, out)
    return None


def assert_admissible(config: HeightConfig, params: ModelParams) -> None:
    """Raise AdmissibilityError if config violates the RSOS or floor rule."""
    if params.floor and (config.heights < 0).any():
        y, x = np.argwhere(config.heights < 0)[0]
        raise AdmissibilityError(
            f"floor violated at site ({x}, {y})", site=(int(x), int(y)))
    if params.is_rsos:
        bond = find_rsos_violation(config)
        if bond is not None:
            raise AdmissibilityError(
                f"RSOS gradient restriction violated on bond {bond.a}-{bond.b}",
                bond=bond)


def hamiltonian(config: HeightConfig, params: ModelParams):
    """Total gradient energy sum over bonds incident to the box.

    Returns a Python int for p in {1, 2, inf}, a float otherwise.
    """
    grads = _bond_gradients(config)
    if params.is_rsos:
        assert_admissible(config, params)
        return int(np.count_nonzero(grads))
    p = params.p
    if p == 2.0:
        return int((grads * grads).sum())
    if p == 1.0:
        return int(np.abs(grads).sum())
    return float((np.abs(grads).astype(float) ** p).sum())


def _neighbor_heights(config: HeightConfig, x: int, y: int):
    h = config.heights
    L = config.L
    b = config.boundary_height
    out = []
    for nx, ny in ((x + 1, y), (x - 1, y), (x, y + 1), (x, y - 1)):
        if 0 <= nx < L and 0 <= ny < L:
            out.append(int(h[ny, nx]))
        else:
            out.append(b)
    return out


def energy_delta(config: HeightConfig, site: tuple[int, int], new_height: int,
                 params: ModelParams):
    """hamiltonian(after) - hamiltonian(before) for a single-site move,
    computed from the incident bonds only."""
    x, y = site
    if not (0 <= x < config.L and 0 <= y < config.L):
        raise ConfigError(f"site {site} not interior to the {config.L}-box")
    old = int(config.heights[y, x])
    nbs = _neighbor_heights(config, x, y)
    if params.floor and new_height < 0:
        raise AdmissibilityError(
            f"floor violated by height {new_height} at {site}", site=site)
    if params.is_rsos:
        for nb in nbs:
            if abs(new_height - nb) > 1:
                raise AdmissibilityError(
                    f"RSOS gradient restriction violated: {new_height} next to {nb}",
                    site=site)
        return sum(int(new_height != nb) - int(old != nb) for nb in nbs)
    p = params.p
    if p == 2.0:
        return sum((new_height - nb) ** 2 - (old - nb) ** 2 for nb in nbs)
    if p == 1.0:
        return sum(abs(new_height - nb) - abs(old - nb) for nb in nbs)
    return float(sum(abs(new_height - nb) ** p - abs(old - nb) ** p for nb in nbs))


# -- text snapshot format ----------------------------------------------------
#
# line 1:            "L p beta floor boundary_height"
# lines 2 .. L+1:    L space-separated integer heights (row y = line - 2)
#
# beta and finite p are written with repr() so the round trip is bit-exact.

def _format_p(p: float) -> str:
    return "inf" if math.isinf(p) else repr(float(p))


def write_snapshot(path, config: HeightConfig, params: ModelParams) -> None:
    with open(path, "w") as fh:
        fh.write(f"{config.L} {_format_p(params.p)} {params.beta!r} "
                 f"{int(params.floor)} {config.boundary_height}\n")
        for row in config.heights:
            fh.write(" ".join(str(int(v)) for v in row) + "\n")


def read_snapshot(path) -> tuple[HeightConfig, ModelParams]:
    with open(path) as fh:
        header = fh.readline().split()
        if len(header) != 5:
            raise ConfigError(f"bad snapshot header in {path}")
        L = int(header[0])
        p = float(header[1])
        beta = float(header[2])
        floor = bool(int(header[3]))
        boundary = int(header[4])
        rows = []
        for _ in range(L):
            rows.append([int(v) for v in fh.readline().split()])
    config = HeightConfig(np.array(rows, dtype=np.int64), boundary)
    if config.L != L:
        raise ConfigError(f"snapshot row count does not match header L={L}")
    return config, ModelParams(p=p, beta=beta, floor=floor, boundary_height=boundary)
