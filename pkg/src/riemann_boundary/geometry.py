"""Planar primitives for closed Jordan polylines.

Points are complex numbers throughout. A :class:`JordanDomain` is the
bounded region enclosed by a simple, positively oriented closed polyline
that contains the origin.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np

DEFAULT_TOL = 1e-9
_CHUNK = 1 << 21  # max points*edges per broadcast block


class GeometryError(ValueError):
    pass


class TooFewNodes(GeometryError):
    pass


class DegenerateEdge(GeometryError):
    pass


class SelfIntersection(GeometryError):
    pass


class OriginNotInterior(GeometryError):
    pass


class CenterNotInterior(GeometryError):
    pass


class NonpositiveRadius(GeometryError):
    pass


class InvalidM(GeometryError):
    pass


class BoundaryNotRadialGraph(GeometryError):
    pass


class Location(str, Enum):
    INSIDE = "inside"
    OUTSIDE = "outside"
    BOUNDARY = "boundary"


@dataclass(frozen=True, eq=False)
class JordanDomain:
    """Validated closed polyline; build with :func:`validate_jordan`."""

    nodes: np.ndarray
    tol_geom: float = DEFAULT_TOL

    def __post_init__(self):
        arr = np.array(self.nodes, dtype=complex)
        arr.setflags(write=False)
        object.__setattr__(self, "nodes", arr)

    def __len__(self):
        return len(self.nodes)

    def __eq__(self, other):
        if not isinstance(other, JordanDomain):
            return NotImplemented
        return (self.tol_geom == other.tol_geom
                and self.nodes.shape == other.nodes.shape
                and bool(np.all(self.nodes == other.nodes)))

    __hash__ = None

    @property
    def edges(self) -> tuple[np.ndarray, np.ndarray]:
        return self.nodes, np.roll(self.nodes, -1)

    @property
    def area(self) -> float:
        return signed_area(self.nodes)

    @property
    def perimeter(self) -> float:
        a, b = self.edges
        return float(np.sum(np.abs(b - a)))

    def sample_boundary(self, count: int) -> np.ndarray:
        """``count`` points spaced uniformly in arc length, nodes not forced."""
        a, b = self.edges
        seg = np.abs(b - a)
        cum = np.concatenate([[0.0], np.cumsum(seg)])
        s = np.linspace(0.0, cum[-1], count, endpoint=False)
        idx = np.clip(np.searchsorted(cum, s, side="right") - 1, 0, len(seg) - 1)
        t = (s - cum[idx]) / seg[idx]
        return a[idx] + t * (b[idx] - a[idx])

    def rotated(self, angle: float) -> "JordanDomain":
        return JordanDomain(self.nodes * np.exp(1j * angle), self.tol_geom)

    def translated(self, shift: complex) -> "JordanDomain":
        return JordanDomain(self.nodes + shift, self.tol_geom)


def signed_area(nodes) -> float:
    z = np.asarray(nodes, dtype=complex)
    zn = np.roll(z, -1)
    return 0.5 * float(np.sum(z.real * zn.imag - zn.real * z.imag))


def _cross(a, b):
    return a.real * b.imag - a.imag * b.real


def _segments_intersect(p1, p2, q1, q2, tol):
    """Vectorised closed-segment intersection test (q1, q2 arrays)."""
    d1 = _cross(p2 - p1, q1 - p1)
    d2 = _cross(p2 - p1, q2 - p1)
    d3 = _cross(q2 - q1, p1 - q1)
    d4 = _cross(q2 - q1, p2 - q1)
    proper = (d1 * d2 < 0) & (d3 * d4 < 0)
    # touching or collinear contact: an endpoint within tol of the other segment
    touch = ((_point_segment_distance(q1, p1, p2) <= tol)
             | (_point_segment_distance(q2, p1, p2) <= tol)
             | (_point_segment_distance(p1, q1, q2) <= tol)
             | (_point_segment_distance(p2, q1, q2) <= tol))
    return proper | touch


def _point_segment_distance(p, a, b):
    ab = b - a
    denom = np.abs(ab) ** 2
    t = np.clip(((p - a) * np.conj(ab)).real / np.where(denom > 0, denom, 1.0), 0.0, 1.0)
    return np.abs(p - (a + t * ab))


def validate_jordan(nodes, tol_geom: float = DEFAULT_TOL) -> JordanDomain:
    """Check a closed polyline and return it as a positively oriented domain."""
    if isinstance(nodes, JordanDomain):
        nodes = nodes.nodes
    z = np.asarray(nodes, dtype=complex).ravel()
    n = len(z)
    if n < 3:
        raise TooFewNodes(f"need at least 3 nodes, got {n}")
    zn = np.roll(z, -1)
    short = np.flatnonzero(np.abs(zn - z) <= tol_geom)
    if short.size:
        raise DegenerateEdge(f"edge {short[0]} shorter than tol_geom={tol_geom}")

    # adjacent edges folding back onto each other
    e = zn - z
    e_next = np.roll(e, -1)
    folded = (np.abs(_cross(e, e_next)) <= tol_geom * np.abs(e) * np.abs(e_next)) \
        & ((e * np.conj(e_next)).real < 0)
    if folded.any():
        i = int(np.flatnonzero(folded)[0])
        raise SelfIntersection(f"edges {i} and {(i + 1) % n} overlap")

    xs_lo = np.minimum(z.real, zn.real) - tol_geom
    xs_hi = np.maximum(z.real, zn.real) + tol_geom
    ys_lo = np.minimum(z.imag, zn.imag) - tol_geom
    ys_hi = np.maximum(z.imag, zn.imag) + tol_geom
    for i in range(n - 2):
        j = np.arange(i + 2, n if i > 0 else n - 1)
        if j.size == 0:
            continue
        box = ((xs_lo[j] <= xs_hi[i]) & (xs_hi[j] >= xs_lo[i])
               & (ys_lo[j] <= ys_hi[i]) & (ys_hi[j] >= ys_lo[i]))
        j = j[box]
        if j.size == 0:
            continue
        hit = _segments_intersect(z[i], zn[i], z[j], zn[j], tol_geom)
        if hit.any():
            raise SelfIntersection(f"edges {i} and {int(j[hit][0])} intersect")

    if signed_area(z) < 0:
        z = z[::-1].copy()
        # keep node 0 first so node indices stay meaningful
        z = np.roll(z, 1)
    domain = JordanDomain(z, tol_geom)
    if point_in_jordan(domain, 0.0) is not Location.INSIDE:
        raise OriginNotInterior("origin must lie strictly inside the curve")
    return domain


def distance_to_boundary(domain: JordanDomain, z) -> np.ndarray:
    """Euclidean distance from each point to the polyline."""
    p = np.atleast_1d(np.asarray(z, dtype=complex)).ravel()
    a, b = domain.edges
    out = np.empty(p.shape, dtype=float)
    step = max(1, _CHUNK // len(a))
    for s in range(0, len(p), step):
        blk = p[s:s + step, None]
        out[s:s + step] = _point_segment_distance(blk, a[None, :], b[None, :]).min(axis=1)
    return out.reshape(np.shape(z))


def nearest_boundary_point(domain: JordanDomain, z) -> np.ndarray:
    p = np.atleast_1d(np.asarray(z, dtype=complex)).ravel()
    a, b = domain.edges
    ab = b - a
    denom = np.abs(ab) ** 2
    out = np.empty(p.shape, dtype=complex)
    step = max(1, _CHUNK // len(a))
    for s in range(0, len(p), step):
        blk = p[s:s + step, None]
        t = np.clip(((blk - a) * np.conj(ab)).real / denom, 0.0, 1.0)
        proj = a + t * ab
        k = np.argmin(np.abs(blk - proj), axis=1)
        out[s:s + step] = proj[np.arange(len(k)), k]
    return out.reshape(np.shape(z))


def winding_number(domain: JordanDomain, z) -> np.ndarray:
    """Integer winding number of the polyline about each point."""
    p = np.atleast_1d(np.asarray(z, dtype=complex)).ravel()
    a, b = domain.edges
    out = np.empty(p.shape, dtype=int)
    step = max(1, _CHUNK // len(a))
    for s in range(0, len(p), step):
        blk = p[s:s + step, None]
        ay, by = a.imag[None, :], b.imag[None, :]
        left = _cross(b - a, blk - a)
        up = (ay <= blk.imag) & (by > blk.imag) & (left > 0)
        down = (ay > blk.imag) & (by <= blk.imag) & (left < 0)
        out[s:s + step] = up.sum(axis=1) - down.sum(axis=1)
    return out.reshape(np.shape(z))


def classify(domain: JordanDomain, z) -> np.ndarray:
    """Vectorised :func:`point_in_jordan`; returns an array of Location values."""
    wn = winding_number(domain, z)
    dist = distance_to_boundary(domain, z)
    # np.full would coerce the str-valued enum to a plain string
    res = np.empty(np.shape(wn), dtype=object)
    res[...] = Location.OUTSIDE
    res[wn != 0] = Location.INSIDE
    res[np.asarray(dist) <= domain.tol_geom] = Location.BOUNDARY
    return res


def inside_mask(domain: JordanDomain, z, strict: bool = True) -> np.ndarray:
    wn = winding_number(domain, z) != 0
    dist = distance_to_boundary(domain, z)
    on = dist <= domain.tol_geom
    return (wn & ~on) if strict else (wn | on)


def point_in_jordan(domain: JordanDomain, z: complex) -> Location:
    return classify(domain, np.array([complex(z)]))[0]


@dataclass(frozen=True)
class ArcSpec:
    """Open arc of the unit circle plus the sector neighbourhood U around it."""

    center_angle: float
    half_width: float
    u_margin: float
    u_depth: float

    def __post_init__(self):
        if not 0 < self.half_width < math.pi:
            raise ValueError("ArcSpec.half_width must lie in (0, pi)")
        if self.u_margin <= 0:
            raise ValueError("ArcSpec.u_margin must be positive")
        if not 0 < self.u_depth < 1:
            raise ValueError("ArcSpec.u_depth must lie in (0, 1)")
        if self.half_width + self.u_margin >= math.pi:
            raise ValueError("ArcSpec.half_width + u_margin must be below pi")

    @property
    def sector_half_width(self) -> float:
        return self.half_width + self.u_margin

    def angular_offset(self, z) -> np.ndarray:
        return np.abs(wrap_angle(np.angle(z) - self.center_angle))

    def in_gamma(self, z) -> np.ndarray:
        return self.angular_offset(z) < self.half_width

    def in_u(self, z) -> np.ndarray:
        z = np.asarray(z)
        return (self.angular_offset(z) < self.sector_half_width) & (np.abs(np.abs(z) - 1) < self.u_depth)


def wrap_angle(theta):
    """Map angles into [-pi, pi)."""
    return (np.asarray(theta) + np.pi) % (2 * np.pi) - np.pi


@dataclass(frozen=True)
class FreeArc:
    start_angle: float
    end_angle: float
    length: float
    m: int


def free_arc_on_circle(domain: JordanDomain, z0: complex, r: float,
                       angle_grid: int = 4096) -> Optional[FreeArc]:
    """Longest arc of the circle |z - z0| = r lying outside the closed domain.

    The arc length is measured between the first and last grid angles of the
    run, so it undershoots the true arc by at most one grid cell and the
    returned ``m`` is conservative.
    """
    if r <= 0:
        raise NonpositiveRadius(f"radius must be positive, got {r}")
    if angle_grid < 64:
        raise ValueError("angle_grid must be at least 64")
    if point_in_jordan(domain, z0) is not Location.INSIDE:
        raise CenterNotInterior(f"{z0} is not inside the domain")
    theta = 2 * np.pi * np.arange(angle_grid) / angle_grid
    pts = z0 + r * np.exp(1j * theta)
    out = (winding_number(domain, pts) == 0) & (distance_to_boundary(domain, pts) > domain.tol_geom)
    if not out.any():
        return None
    step = 2 * np.pi / angle_grid
    if out.all():
        return FreeArc(0.0, 2 * np.pi, 2 * np.pi * r, 1)
    # rotate so the scan starts just after a covered grid point
    shift = int(np.flatnonzero(~out)[0])
    rolled = np.roll(out, -shift)
    best_len, best_start, run_start = 0, 0, None
    for i, flag in enumerate(np.append(rolled, False)):
        if flag and run_start is None:
            run_start = i
        elif not flag and run_start is not None:
            if i - run_start > best_len:
                best_len, best_start = i - run_start, run_start
            run_start = None
    first = (best_start + shift) % angle_grid
    start = theta[first]
    length = (best_len - 1) * step * r
    if length <= 0:
        return FreeArc(start, start, 0.0, 0)
    m = max(1, math.ceil(2 * math.pi * r / length - 1e-12))
    return FreeArc(float(start), float(start + (best_len - 1) * step), float(length), m)


def rotated_intersection_samples(domain: JordanDomain, m: int,
                                 samples_per_copy: int = 2048) -> np.ndarray:
    """Boundary samples of the intersection of the m rotated copies of the domain."""
    if m < 1:
        raise InvalidM(f"m must be >= 1, got {m}")
    base = domain.sample_boundary(samples_per_copy)
    if m == 1:
        return base
    copies = [domain.rotated(2 * np.pi * k / m) for k in range(m)]
    kept = []
    for k, copy in enumerate(copies):
        pts = base * np.exp(2j * np.pi * k / m)
        keep = np.ones(len(pts), dtype=bool)
        for other_k, other in enumerate(copies):
            if other_k != k:
                keep &= inside_mask(other, pts, strict=False)
        kept.append(pts[keep])
    return np.concatenate(kept)


def circle_discretization_bound(domain: JordanDomain, sector: Optional[ArcSpec] = None) -> float:
    """Sagitta of the longest edge joining two unit-circle nodes.

    This bounds how far an inscribed polygon falls inside the unit circle.
    With ``sector`` only edges touching the U-sector are considered.
    """
    a, b = domain.edges
    on = (np.abs(np.abs(a) - 1) <= 1e-9) & (np.abs(np.abs(b) - 1) <= 1e-9)
    if sector is not None:
        on &= (sector.angular_offset(a) < sector.sector_half_width) \
            | (sector.angular_offset(b) < sector.sector_half_width)
    if not on.any():
        return 0.0
    half = np.abs(b - a)[on].max() / 2
    return float(1 - math.sqrt(max(0.0, 1 - half * half)))


def radial_boundary_distance(domain: JordanDomain, theta: np.ndarray) -> np.ndarray:
    """Radius at which each ray from the origin meets the polyline.

    Raises BoundaryNotRadialGraph when some ray meets it more than once.
    """
    a, b = domain.edges
    theta = np.atleast_1d(theta)
    d = np.exp(1j * theta)[:, None]
    e = (b - a)[None, :]
    # solve a + s*e = t*d for (s, t)
    den = _cross(d, e)
    ok = np.abs(den) > 1e-15
    den = np.where(ok, den, 1.0)
    t = _cross(a[None, :], e) / den
    s = _cross(a[None, :], d) / den
    hit = ok & (s >= -1e-12) & (s < 1 - 1e-12) & (t > 0)
    counts = hit.sum(axis=1)
    if np.any(counts > 1):
        i = int(np.flatnonzero(counts > 1)[0])
        raise BoundaryNotRadialGraph(f"ray at angle {theta[i]:.6g} crosses the boundary {counts[i]} times")
    if np.any(counts == 0):
        i = int(np.flatnonzero(counts == 0)[0])
        raise BoundaryNotRadialGraph(f"ray at angle {theta[i]:.6g} misses the boundary")
    return np.where(hit, t, 0.0).sum(axis=1)


def circle_agreement_sup(domain: JordanDomain, arcspec: ArcSpec, angle_grid: int = 4096) -> float:
    """sup over the U-sector of | radial boundary distance - 1 |."""
    hw = arcspec.sector_half_width
    theta = arcspec.center_angle + np.linspace(-hw, hw, angle_grid)
    rad = radial_boundary_distance(domain, theta)
    return float(np.max(np.abs(rad - 1)))
