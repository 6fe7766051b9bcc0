"""Level lines of a height configuration as dual-lattice circuits.

The dual edges of the bonds separating {eta >= h} from {eta < h} close up
into circuits.  Where four discordant dual edges meet at a dual vertex the
decomposition follows the linked-pair rule: the two circuit corners passing
through the vertex stay on opposite sides of the NW-SE diagonal, i.e. the
incident edges pair up as {north, east} and {south, west}.  (Any fixed
diagonal yields a valid decomposition; this one is pinned for
reproducibility.)

Conventions, pinned here and used by every caller:

* dual vertex (i, j) is the point (i + 1/2, j + 1/2);
* a contour is positive at level h when the {eta >= h} side is its interior
  (inner boundary sites >= h, outer <= h - 1), negative when the interior is
  the low side;
* a contour on the L-box is macroscopic iff its length strictly exceeds
  (log L)^2, natural log;
* circuits of sites are 8-connected, blocking paths 4-connected (the plane
  duality used by ``detect_circuit_event``).
"""

from __future__ import annotations

import math
from collections import Counter, deque
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, PinnacleLabError
from .lattice import HeightConfig

# A dual edge is keyed by the primal bond it crosses: (site, site), sorted.


def _dual_vertices_of_bond(bond):
    """The two dual vertices of a bond's dual edge."""
    (x1, y1), (x2, y2) = bond
    if y1 == y2:                       # horizontal bond -> vertical dual edge
        x = min(x1, x2)
        return (x, y1 - 1), (x, y1)
    y = min(y1, y2)                    # vertical bond -> horizontal dual edge
    return (x1 - 1, y), (x1, y)


def _direction(dv_from, dv_to):
    di, dj = dv_to[0] - dv_from[0], dv_to[1] - dv_from[1]
    return {(0, 1): "n", (0, -1): "s", (1, 0): "e", (-1, 0): "w"}[(di, dj)]


_LINKED_MATE = {"n": "e", "e": "n", "s": "w", "w": "s"}


@dataclass
class GeometricContour:
    """Closed dual circuit with its interior and site boundaries."""

    level: int
    edges: tuple                 # cyclic tuple of bonds (dual-edge keys)
    interior: frozenset          # V_gamma, primal sites enclosed
    inner_boundary: frozenset    # boundary sites inside V_gamma
    outer_boundary: frozenset    # boundary sites outside
    positive: bool               # True when {eta >= h} is the interior side

    @property
    def length(self) -> int:
        return len(self.edges)

    @property
    def area(self) -> int:
        return len(self.interior)


@dataclass
class LevelLineSet:
    level: int
    contours: list
    L: int
    boundary_height: int

    def positives(self):
        return [c for c in self.contours if c.positive]

    def negatives(self):
        return [c for c in self.contours if not c.positive]

    def total_length(self) -> int:
        return sum(c.length for c in self.contours)


def _discordant_bonds(config: HeightConfig, h: int):
    """Bonds with exactly one endpoint in {eta >= h}; boundary sites carry
    the constant boundary height."""
    g = config.heights >= h
    L = config.L
    bg = config.boundary_height >= h
    bonds = []
    ys, xs = np.nonzero(g[:, 1:] != g[:, :-1])
    bonds += [((int(x), int(y)), (int(x) + 1, int(y))) for y, x in zip(ys, xs)]
    ys, xs = np.nonzero(g[1:, :] != g[:-1, :])
    bonds += [((int(x), int(y)), (int(x), int(y) + 1)) for y, x in zip(ys, xs)]
    for x in np.nonzero(g[0, :] != bg)[0]:
        bonds.append(((int(x), -1), (int(x), 0)))
    for x in np.nonzero(g[-1, :] != bg)[0]:
        bonds.append(((int(x), L - 1), (int(x), L)))
    for y in np.nonzero(g[:, 0] != bg)[0]:
        bonds.append(((-1, int(y)), (0, int(y))))
    for y in np.nonzero(g[:, -1] != bg)[0]:
        bonds.append(((L - 1, int(y)), (L, int(y))))
    return bonds


def _split_circuits(bonds):
    """Decompose discordant dual edges into circuits via the linked-pair rule.

    Returns a list of circuits, each a list of bonds in traversal order.
    """
    incident = {}
    for bond in bonds:
        for dv in _dual_vertices_of_bond(bond):
            incident.setdefault(dv, []).append(bond)
    used = set()
    circuits = []
    for start in bonds:
        if start in used:
            continue
        # the stub pairing below is an involution at every dual vertex, so
        # following it from (start, dv0 -> dv1) returns to exactly that
        # directed edge, closing the circuit
        circuit = []
        dv0, dv1 = _dual_vertices_of_bond(start)
        edge, frm, to = start, dv0, dv1
        while True:
            circuit.append(edge)
            used.add(edge)
            edges_here = incident[to]
            if len(edges_here) == 2:
                nxt = edges_here[0] if edges_here[1] == edge else edges_here[1]
            elif len(edges_here) == 4:
                want = _LINKED_MATE[_direction(to, frm)]
                nxt = None
                for cand in edges_here:
                    a, b = _dual_vertices_of_bond(cand)
                    other = b if a == to else a
                    if cand != edge and _direction(to, other) == want:
                        nxt = cand
                        break
                if nxt is None:
                    raise PinnacleLabError("linked-pair resolution failed")
            else:
                raise PinnacleLabError(
                    f"dual vertex {to} has odd degree {len(edges_here)}")
            a, b = _dual_vertices_of_bond(nxt)
            edge, frm, to = nxt, to, (b if a == to else a)
            if edge == start:
                break
        circuits.append(circuit)
    return circuits


def _pinch_vertices(circuit):
    """Dual vertices this circuit passes through twice."""
    visits = Counter()
    for bond in circuit:
        visits.update(_dual_vertices_of_bond(bond))
    return {dv for dv, c in visits.items() if c == 4}


def _interior_of(circuit, pinches):
    """Flood fill from outside the bounding box; interior = unreached sites.

    Rounding the linked corners at a self-touch leaves a diagonal channel
    between the NW and SE primal sites of the pinched dual vertex (the two
    corners retract toward NE and SW), so the flood crosses there.
    """
    blocked = set(circuit)
    channels = {}
    for (i, j) in pinches:
        nw, se = (i, j + 1), (i + 1, j)
        channels.setdefault(nw, []).append(se)
        channels.setdefault(se, []).append(nw)
    xs = [x for bond in circuit for (x, _) in bond]
    ys = [y for bond in circuit for (_, y) in bond]
    x0, x1 = min(xs) - 1, max(xs) + 1
    y0, y1 = min(ys) - 1, max(ys) + 1
    outside = set()
    queue = deque()
    for x in range(x0, x1 + 1):
        for y in (y0, y1):
            outside.add((x, y))
            queue.append((x, y))
    for y in range(y0, y1 + 1):
        for x in (x0, x1):
            outside.add((x, y))
            queue.append((x, y))
    while queue:
        x, y = queue.popleft()
        for dx, dy in ((1, 0), (-1, 0), (0, 1), (0, -1)):
            nb = (x + dx, y + dy)
            if not (x0 <= nb[0] <= x1 and y0 <= nb[1] <= y1) or nb in outside:
                continue
            bond = ((x, y), nb) if (x, y) < nb else (nb, (x, y))
            if bond in blocked:
                continue
            outside.add(nb)
            queue.append(nb)
        for nb in channels.get((x, y), ()):
            if (x0 <= nb[0] <= x1 and y0 <= nb[1] <= y1) and nb not in outside:
                outside.add(nb)
                queue.append(nb)
    interior = set()
    for x in range(x0 + 1, x1):
        for y in range(y0 + 1, y1):
            if (x, y) not in outside:
                interior.add((x, y))
    return frozenset(interior)


def _site_boundaries(circuit, interior, pinches):
    """Definition-style boundary: endpoints of the crossed bonds, plus the
    four diagonal sites around every dual vertex the circuit visits twice."""
    sites = set()
    for bond in circuit:
        sites.update(bond)
    for (i, j) in pinches:
        sites.update(((i, j), (i + 1, j), (i, j + 1), (i + 1, j + 1)))
    inner = frozenset(s for s in sites if s in interior)
    outer = frozenset(s for s in sites if s not in interior)
    return inner, outer


def _height_at(config: HeightConfig, site) -> int:
    x, y = site
    if 0 <= x < config.L and 0 <= y < config.L:
        return int(config.heights[y, x])
    return config.boundary_height


def extract_level_lines(config: HeightConfig, h: int) -> LevelLineSet:
    """All h-level lines of the configuration, signed.

    Every discordant dual edge lands in exactly one returned contour, so the
    total contour length equals the number of discordant bonds.
    """
    bonds = _discordant_bonds(config, h)
    contours = []
    for circuit in _split_circuits(bonds):
        pinches = _pinch_vertices(circuit)
        interior = _interior_of(circuit, pinches)
        inner, outer = _site_boundaries(circuit, interior, pinches)
        inner_high = all(_height_at(config, s) >= h for s in inner)
        inner_low = all(_height_at(config, s) <= h - 1 for s in inner)
        outer_high = all(_height_at(config, s) >= h for s in outer)
        outer_low = all(_height_at(config, s) <= h - 1 for s in outer)
        if inner_high and outer_low:
            positive = True
        elif inner_low and outer_high:
            positive = False
        else:
            raise PinnacleLabError(
                f"contour at level {h} has mixed boundary values")
        contours.append(GeometricContour(
            level=h, edges=tuple(circuit), interior=interior,
            inner_boundary=inner, outer_boundary=outer, positive=positive))
    return LevelLineSet(level=h, contours=contours, L=config.L,
                        boundary_height=config.boundary_height)


def macroscopic_threshold(L: float) -> float:
    return math.log(L) ** 2


def macroscopic_filter(levels: LevelLineSet, L: float) -> LevelLineSet:
    """Keep contours strictly longer than (log L)^2."""
    thr = macroscopic_threshold(L)
    return LevelLineSet(level=levels.level,
                        contours=[c for c in levels.contours if c.length > thr],
                        L=levels.L, boundary_height=levels.boundary_height)


# -- path and circuit events ---------------------------------------------


def _components(mask: np.ndarray):
    """4-connected components of True cells; yields arrays of (y, x)."""
    L = mask.shape[0]
    seen = np.zeros_like(mask, dtype=bool)
    for sy, sx in zip(*np.nonzero(mask)):
        if seen[sy, sx]:
            continue
        queue = deque([(sy, sx)])
        seen[sy, sx] = True
        comp = []
        while queue:
            y, x = queue.popleft()
            comp.append((y, x))
            for dy, dx in ((1, 0), (-1, 0), (0, 1), (0, -1)):
                ny, nx = y + dy, x + dx
                if 0 <= ny < L and 0 <= nx < L and mask[ny, nx] and not seen[ny, nx]:
                    seen[ny, nx] = True
                    queue.append((ny, nx))
        yield np.array(comp)


def _farthest_pair(points: np.ndarray):
    """(max Euclidean distance, index pair) over a point set."""
    if len(points) <= 400:
        d2 = ((points[:, None, :] - points[None, :, :]) ** 2).sum(axis=2)
        k = int(d2.argmax())
        i, j = divmod(k, len(points))
        return math.sqrt(float(d2[i, j])), (i, j)
    try:
        from scipy.spatial import ConvexHull
        hull = points[ConvexHull(points).vertices]
    except Exception:       # degenerate (collinear) sets
        hull = points
    d2 = ((hull[:, None, :] - hull[None, :, :]) ** 2).sum(axis=2)
    k = int(d2.argmax())
    i, j = divmod(k, len(hull))
    pi, pj = hull[i], hull[j]
    full_i = int(np.nonzero((points == pi).all(axis=1))[0][0])
    full_j = int(np.nonzero((points == pj).all(axis=1))[0][0])
    return math.sqrt(float(d2[i, j])), (full_i, full_j)


def _bfs_path(mask: np.ndarray, start, goal):
    L = mask.shape[0]
    prev = {start: None}
    queue = deque([start])
    while queue:
        cur = queue.popleft()
        if cur == goal:
            path = []
            while cur is not None:
                path.append(cur)
                cur = prev[cur]
            return path[::-1]
        y, x = cur
        for dy, dx in ((1, 0), (-1, 0), (0, 1), (0, -1)):
            nb = (y + dy, x + dx)
            if (0 <= nb[0] < L and 0 <= nb[1] < L and mask[nb]
                    and nb not in prev):
                prev[nb] = cur
                queue.append(nb)
    raise PinnacleLabError("BFS lost its component")  # unreachable


def detect_path_event(config: HeightConfig, r: float, h: int):
    """Is there a 4-connected path avoiding height h whose endpoints are at
    Euclidean distance >= r?  Returns (flag, witness path as (x, y) list)."""
    if r <= 0:
        raise ConfigError("r must be positive")
    mask = config.heights != h
    for comp in _components(mask):
        d, (i, j) = _farthest_pair(comp)
        if d >= r:
            path = _bfs_path(mask, tuple(comp[i]), tuple(comp[j]))
            return True, [(x, y) for y, x in path]
    return False, None


def detect_circuit_event(config: HeightConfig, j: int, margin: int):
    """Is the centered sub-box of side L - margin surrounded by an
    8-connected circuit of sites with eta >= j?

    Checked by duality: the circuit exists iff no 4-connected path of
    sites with eta <= j - 1 leads from the sub-box rim out of the box.
    Returns (flag, witness) where the witness is the separating set of
    high sites (or the boundary ring when the boundary itself is high).
    """
    if margin < 0:
        raise ConfigError("margin must be >= 0")
    L = config.L
    if config.boundary_height >= j:
        return True, "boundary-ring"
    side = L - margin
    if side <= 0:
        raise ConfigError("margin leaves no sub-box")
    lo_edge = (L - side) // 2
    hi_edge = lo_edge + side - 1   # sub-box spans [lo_edge, hi_edge]^2
    low = config.heights <= j - 1

    in_box = np.zeros((L, L), dtype=bool)
    in_box[lo_edge:hi_edge + 1, lo_edge:hi_edge + 1] = True

    # BFS through low sites of the annulus, seeded at low sites 4-adjacent
    # to the sub-box (or inside it: they can walk out through the rim).
    seen = np.zeros((L, L), dtype=bool)
    queue = deque()
    for y, x in zip(*np.nonzero(low & in_box)):
        seen[y, x] = True
        queue.append((int(y), int(x)))
    escaped = False
    while queue and not escaped:
        y, x = queue.popleft()
        if y in (0, L - 1) or x in (0, L - 1):
            escaped = True
            break
        for dy, dx in ((1, 0), (-1, 0), (0, 1), (0, -1)):
            ny, nx = y + dy, x + dx
            if 0 <= ny < L and 0 <= nx < L and low[ny, nx] and not seen[ny, nx]:
                seen[ny, nx] = True
                queue.append((ny, nx))
    if escaped:
        return False, None
    # witness: high annulus sites 8-adjacent to the blocked low region or
    # to the sub-box itself
    reach = seen | in_box
    witness = set()
    for y, x in zip(*np.nonzero(reach)):
        for dy in (-1, 0, 1):
            for dx in (-1, 0, 1):
                ny, nx = y + dy, x + dx
                if (0 <= ny < L and 0 <= nx < L and not reach[ny, nx]
                        and not low[ny, nx]):
                    witness.add((int(nx), int(ny)))
    return True, witness


@dataclass
class AreaStatistics:
    level: int
    n_contours: int
    n_macroscopic: int
    max_area: int
    total_area: int
    area_fraction: float
    has_negative_macroscopic: bool


def area_statistics(levels: LevelLineSet, L: int) -> AreaStatistics:
    """Aggregate contour areas at one level; fractions are of the L-box."""
    macro = macroscopic_filter(levels, L)
    areas = [c.area for c in levels.contours]
    max_area = max(areas, default=0)
    total = sum(areas)
    return AreaStatistics(
        level=levels.level,
        n_contours=len(levels.contours),
        n_macroscopic=len(macro.contours),
        max_area=max_area,
        total_area=total,
        area_fraction=max_area / (L * L),
        has_negative_macroscopic=any(not c.positive for c in macro.contours),
    )
