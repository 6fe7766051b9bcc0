"""Down-right path families, the six-vertex model, and alternating sign
matrices.

The objects counted here are families of h edge-disjoint, non-crossing
down-right paths with the tight staircase endpoints: path i runs from
(1/2, h-i+1/2) on the y-axis to (h-i+1/2, 1/2) on the x-axis.  Two paths may
touch at a grid vertex (each turning its own corner) but never share an edge
or cross transversally.

Attaching the forced entry stubs on the west side and exit stubs on the
south side, the presence pattern of path edges at each vertex takes one of
six shapes with equal in/out degree: this is the six-vertex model with
domain-wall boundary conditions on the h x h grid.  Reading each row's
horizontal-edge transitions (+1 where a path-free stretch starts, -1 where
one ends) produces a {0,+-1} matrix with unit row and column sums and
alternating signs: an ASM.  Three independent counts of the same families
are provided:

* exhaustive DFS over staircase tuples (h <= 5),
* row-by-row transfer enumeration of six-vertex states (h <= 8),
* the exact product formula A(h) = prod_{k<h} (3k+1)! / (h+k)!.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from math import factorial, lgamma

import numpy as np

from .errors import BudgetError, ConfigError

LOG_ASM_GROWTH = 1.5 * math.log(3.0) - math.log(4.0)   # log(3 sqrt 3 / 4)

_ENUM_MAX_H = 5
_TRANSFER_MAX_H = 8


# -- path families ------------------------------------------------------------

@dataclass(frozen=True)
class PathFamily:
    """h staircases; path i (outermost first) is stored as its tuple of
    horizontal-step heights y_0 >= ... >= y_{a_i - 1}, the run from
    (0, b_i) to (a_i, 0) in grid coordinates."""

    h: int
    heights: tuple          # h tuples, entry i has length h - 1 - i

    def endpoint(self, i: int) -> int:
        return self.h - 1 - i

    def path_points(self, i: int):
        """Vertices visited by path i, from (0, b_i) to (a_i, 0)."""
        b = self.endpoint(i)
        pts = [(0, b)]
        x, y = 0, b
        for hy in self.heights[i]:
            while y > hy:
                y -= 1
                pts.append((x, y))
            x += 1
            pts.append((x, y))
        while y > 0:
            y -= 1
            pts.append((x, y))
        return pts


def _staircases(b: int, box: int):
    """Non-increasing height tuples for a path from (0, b) to (b, 0),
    heights bounded by box."""
    if b == 0:
        return [()]
    out = []
    cur = []

    def rec(x, ceiling):
        if x == b:
            out.append(tuple(cur))
            return
        for y in range(min(ceiling, box), -1, -1):
            cur.append(y)
            rec(x + 1, y)
            cur.pop()

    rec(0, b)
    return out


def _path_moves(b: int, heights):
    """Vertex traversals and edges of one staircase.

    moves maps vertex -> list of (in, out) directions; edges are keyed
    ('h'|'v', x, y): the horizontal edge from (x, y) to (x+1, y), or the
    vertical edge from (x, y) down to (x, y-1).  The final south exit stub
    is included so that distinct paths cannot stack on one column's exit.
    """
    moves = {}
    edges = []

    def add(v, io):
        moves.setdefault(v, []).append(io)

    x, y = 0, b
    d_in = "w"
    for hy in heights:
        while y > hy:
            add((x, y), (d_in, "s"))
            edges.append(("v", x, y))
            y -= 1
            d_in = "n"
        add((x, y), (d_in, "e"))
        edges.append(("h", x, y))
        x += 1
        d_in = "w"
    while y > 0:
        add((x, y), (d_in, "s"))
        edges.append(("v", x, y))
        y -= 1
        d_in = "n"
    add((x, y), (d_in, "s"))
    edges.append(("v", x, 0))
    return moves, edges


_BOUNCE = {("n", "e"), ("w", "s")}


def _family_valid(parts) -> bool:
    """Edge-disjoint and non-crossing: shared vertices must pair one (n, e)
    turn with one (w, s) turn."""
    seen = set()
    for _, edges in parts:
        for e in edges:
            if e in seen:
                return False
            seen.add(e)
    vertex = {}
    for moves, _ in parts:
        for v, ios in moves.items():
            vertex.setdefault(v, []).extend(ios)
    for ios in vertex.values():
        if len(ios) == 1:
            continue
        if len(ios) != 2 or set(ios) != _BOUNCE:
            return False
    return True


def iter_path_families(h: int):
    """Yield every valid PathFamily with the tight staircase endpoints."""
    if h < 0:
        raise ConfigError("h must be >= 0")
    if h > _ENUM_MAX_H:
        raise BudgetError(f"exhaustive family enumeration capped at h={_ENUM_MAX_H}")
    if h == 0:
        yield PathFamily(h=0, heights=())
        return
    box = h - 1
    cands = [_staircases(h - 1 - i, box) for i in range(h)]

    def rec(i, chosen, parts):
        if i == h:
            yield PathFamily(h=h, heights=tuple(chosen))
            return
        for hs in cands[i]:
            part = _path_moves(h - 1 - i, hs)
            if _family_valid(parts + [part]):
                yield from rec(i + 1, chosen + [hs], parts + [part])

    yield from rec(0, [], [])


def enumerate_path_families(h: int) -> int:
    """Exact count of families with the tight endpoints (h <= 5)."""
    return sum(1 for _ in iter_path_families(h))


# -- product formula -----------------------------------------------------------

def asm_product_formula(h: int) -> int:
    """A(h) = prod_{k=0}^{h-1} (3k+1)! / (h+k)!, exactly."""
    if h < 0:
        raise ConfigError("h must be >= 0")
    num = 1
    den = 1
    for k in range(h):
        num *= factorial(3 * k + 1)
        den *= factorial(h + k)
    assert num % den == 0
    return num // den


def log_asm_product(h: int) -> float:
    """log A(h) in floating point, usable far beyond big-integer comfort."""
    return sum(lgamma(3 * k + 2) - lgamma(h + k + 1) for k in range(h))


# -- six-vertex model ----------------------------------------------------------

# Vertex presence patterns (west, north, east, south) with in-degree equal to
# out-degree; these are the six admissible constellations.
SIX_VERTEX_TYPES = (
    (0, 0, 0, 0),
    (1, 0, 1, 0),   # w -> e
    (0, 1, 0, 1),   # n -> s
    (1, 0, 0, 1),   # w -> s turn
    (0, 1, 1, 0),   # n -> e turn
    (1, 1, 1, 1),   # two osculating turns
)


@dataclass
class SixVertexConfig:
    """Edge-presence grids on the h x h vertex grid with domain-wall
    boundary: west and south stubs present, north and east absent.

    hedge[x][y] is the horizontal edge entering vertex (x, y) from the west
    (x = 0 column is the stub layer, x = h the east boundary); vedge[x][y]
    the vertical edge leaving (x, y) south (y = 0 row is the exit stub
    layer, y = h the north boundary).
    """

    h: int
    hedge: np.ndarray    # shape (h+1, h), bool
    vedge: np.ndarray    # shape (h, h+1), bool

    def validate(self) -> None:
        h = self.h
        if self.hedge.shape != (h + 1, h) or self.vedge.shape != (h, h + 1):
            raise ConfigError("six-vertex edge grids have wrong shape")
        if not self.hedge[0, :].all() or self.hedge[h, :].any():
            raise ConfigError("west stubs must be present, east boundary absent")
        if not self.vedge[:, 0].all() or self.vedge[:, h].any():
            raise ConfigError("south stubs must be present, north boundary absent")
        for x in range(h):
            for y in range(h):
                pat = (int(self.hedge[x, y]), int(self.vedge[x, y + 1]),
                       int(self.hedge[x + 1, y]), int(self.vedge[x, y]))
                if pat not in SIX_VERTEX_TYPES:
                    raise ConfigError(f"vertex ({x}, {y}) has pattern {pat}, "
                                      "not one of the six constellations")

    def vertex_type(self, x: int, y: int) -> int:
        pat = (int(self.hedge[x, y]), int(self.vedge[x, y + 1]),
               int(self.hedge[x + 1, y]), int(self.vedge[x, y]))
        return SIX_VERTEX_TYPES.index(pat)


def paths_to_six_vertex(family: PathFamily) -> SixVertexConfig:
    """Mark the family's edges (plus the forced stubs) on the grid."""
    h = family.h
    if h == 0:
        raise ConfigError("six-vertex grid needs h >= 1")
    hedge = np.zeros((h + 1, h), dtype=bool)
    vedge = np.zeros((h, h + 1), dtype=bool)
    hedge[0, :] = True
    vedge[:, 0] = True
    for i in range(h):
        _, edges = _path_moves(family.endpoint(i), family.heights[i])
        for kind, x, y in edges:
            if kind == "h":
                hedge[x + 1, y] = True
            else:
                vedge[x, y] = True
    config = SixVertexConfig(h=h, hedge=hedge, vedge=vedge)
    config.validate()
    return config


def six_vertex_to_paths(config: SixVertexConfig) -> PathFamily:
    """Walk every row's entering path using the bounce rule at osculations."""
    config.validate()
    h = config.h
    heights = []
    for i in range(h):
        b = h - 1 - i
        x, y = 0, b
        d_in = "w"
        hs = []
        while True:
            deg4 = (config.hedge[x, y] and config.vedge[x, y + 1]
                    and config.hedge[x + 1, y] and config.vedge[x, y])
            if deg4:
                out = "s" if d_in == "w" else "e"
            elif config.hedge[x + 1, y]:
                out = "e"
            elif config.vedge[x, y]:
                out = "s"
            else:
                raise ConfigError(f"dead end at vertex ({x}, {y})")
            if out == "e":
                hs.append(y)
                x += 1
                d_in = "w"
            else:
                if y == 0:
                    break
                y -= 1
                d_in = "n"
        heights.append(tuple(hs))
    return PathFamily(h=h, heights=tuple(heights))


@dataclass
class ASMatrix:
    """Matrix over {-1, 0, 1} with unit, sign-alternating row/column sums."""

    entries: np.ndarray

    def validate(self) -> None:
        a = self.entries
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ConfigError("ASM must be square")
        if not np.isin(a, (-1, 0, 1)).all():
            raise ConfigError("ASM entries must be in {-1, 0, 1}")
        for axis, name in ((1, "row"), (0, "column")):
            sums = a.sum(axis=axis)
            if not (sums == 1).all():
                raise ConfigError(f"every {name} must sum to 1")
            lines = a if axis == 1 else a.T
            for k, line in enumerate(lines):
                nz = line[line != 0]
                if len(nz) == 0 or nz[0] != 1 or nz[-1] != 1:
                    raise ConfigError(f"{name} {k} does not start/end with +1")
                if (nz[1:] * nz[:-1] != -1).any():
                    raise ConfigError(f"{name} {k} signs do not alternate")


def six_vertex_to_asm(config: SixVertexConfig) -> ASMatrix:
    """Row i, column j of the ASM records the transition of horizontal edge
    presence across vertex (x = j, y = h - 1 - i): +1 when a present edge
    turns missing, -1 for missing to present, 0 otherwise."""
    config.validate()
    h = config.h
    a = np.zeros((h, h), dtype=np.int64)
    for i in range(h):
        y = h - 1 - i
        for j in range(h):
            a[i, j] = int(config.hedge[j, y]) - int(config.hedge[j + 1, y])
    # the column reading along vertical edges must produce the same matrix
    for j in range(h):
        for i in range(h):
            y = h - 1 - i
            if a[i, j] != int(config.vedge[j, y]) - int(config.vedge[j, y + 1]):
                raise ConfigError("row and column readings disagree; "
                                  "not a valid DWBC six-vertex state")
    matrix = ASMatrix(entries=a)
    matrix.validate()
    return matrix


def asm_to_six_vertex(matrix: ASMatrix) -> SixVertexConfig:
    matrix.validate()
    a = matrix.entries
    h = a.shape[0]
    hedge = np.zeros((h + 1, h), dtype=bool)
    vedge = np.zeros((h, h + 1), dtype=bool)
    for i in range(h):
        y = h - 1 - i
        run = 1
        hedge[0, y] = True
        for j in range(h):
            run -= a[i, j]
            hedge[j + 1, y] = bool(run)
    for j in range(h):
        run = 0
        for i in range(h):
            run += a[i, j]
            vedge[j, h - 1 - i] = bool(run)
    config = SixVertexConfig(h=h, hedge=hedge, vedge=vedge)
    config.validate()
    return config


def six_vertex_count(h: int) -> int:
    """Count DWBC six-vertex states by sweeping rows top to bottom.

    The DP state is the presence vector of the h vertical edges between two
    consecutive rows; within a row, vertices are resolved left to right
    carrying the horizontal edge state.
    """
    if h < 0:
        raise ConfigError("h must be >= 0")
    if h == 0:
        return 1
    if h > _TRANSFER_MAX_H:
        raise BudgetError(f"transfer enumeration capped at h={_TRANSFER_MAX_H}")
    prev = {(0,) * h: 1}                      # north boundary: all absent
    for _ in range(h):
        cur: dict[tuple, int] = {}
        for top, c in prev.items():
            partial = [(1, ())]               # west stub present
            for x in range(h):
                n = top[x]
                nxt = []
                for w, bots in partial:
                    if (w, n) == (0, 0):
                        nxt.append((0, bots + (0,)))
                    elif (w, n) == (1, 1):
                        nxt.append((1, bots + (1,)))
                    else:
                        nxt.append((1, bots + (0,)))
                        nxt.append((0, bots + (1,)))
                partial = nxt
            for e, bots in partial:
                if e == 0:                    # east boundary absent
                    cur[bots] = cur.get(bots, 0) + c
        prev = cur
    return prev.get((1,) * h, 0)              # south stubs all present


# -- RSOS tail rate ------------------------------------------------------------

@dataclass(frozen=True)
class RsosRate:
    """Center and half-width of the RSOS tail-rate bracket per h^2:
    4(beta + 2 log(27/16) +- C e^-beta)."""

    beta: float
    center: float

    def half_width(self, C: float) -> float:
        return 4.0 * C * math.exp(-self.beta)


def rsos_rate_constant(beta: float) -> RsosRate:
    if beta <= 0:
        raise ConfigError("beta must be positive")
    return RsosRate(beta=beta, center=4.0 * (beta + 2.0 * math.log(27.0 / 16.0)))
