"""Numerical Riemann maps by the geodesic zipper construction.

A map is a stack of closed-form elementary stages. The build pushes the
boundary nodes through successive slit maps of the upper half-plane, so the
nodes are "unzipped" onto the real axis one at a time; the final stages send
the half-plane to the unit disk. Every stage has a closed-form inverse, which
is what makes the inverse map cheap.

Branch conventions
------------------
``InitialRoot`` is ``i * sqrt((z - z1)/(z - z0))`` with the principal root.
Its cut is exactly the segment [z0, z1], so it is continuous on the interior
of any Jordan polyline having that segment as an edge. The interior side of
the segment lands on the negative real axis.

Every other root takes the value with nonnegative imaginary part. On the
cut itself, which only boundary points reach, the sign of the real part of
the argument before squaring is kept. ``TerminalRoot`` squares rather than
takes a root: after the Moebius step the interior is the second quadrant,
and ``-w**2`` opens it onto the upper half-plane.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import ClassVar, Sequence, Union

import numpy as np

from .geometry import JordanDomain, Location, inside_mask, point_in_jordan, validate_jordan

BOUNDARY_TOL = 1e-6
MIN_BUILD_NODES = 4
COLLAPSE_TOL = 1e-280
TIE_TOL = 1e-12  # backward steps this small are rounding, not disorder


class ConformalError(ArithmeticError):
    pass


class InsufficientNodes(ConformalError, ValueError):
    pass


class SlitParameterOutOfHalfPlane(ConformalError):
    pass


class TerminalJunctionDegenerate(ConformalError):
    pass


class GeodesicCurveNotSimple(ConformalError):
    """The curve of geodesic arcs through the nodes is not a Jordan curve around 0.

    The geodesic algorithm maps the domain bounded by that curve, not the
    polygon; coarse nodes around sharp features can make it fold over itself.
    """


class PointOutsideDomain(ConformalError, ValueError):
    pass


class PointOutsideDisk(ConformalError, ValueError):
    pass


class BranchInversionFailure(ConformalError):
    def __init__(self, stage_index: int, message: str = ""):
        self.stage_index = stage_index
        super().__init__(f"stage {stage_index}: {message or 'inverse left the upper half-plane'}")


class RadiusTooLarge(ConformalError, ValueError):
    pass


class OriginImageOutsideDisk(ConformalError):
    pass


class IndexOutOfRange(ConformalError, IndexError):
    pass


def sqrt_upper(t, ref):
    """Square root with Im >= 0; on the cut, take the sign of ``ref``."""
    s = np.sqrt(t)
    flip = (s.imag < 0) | ((s.imag == 0) & (np.real(ref) < 0))
    return np.where(flip, -s, s)


# ---------------------------------------------------------------- stages

@dataclass(frozen=True)
class InitialRoot:
    z0: complex
    z1: complex
    kind: ClassVar[str] = "InitialRoot"

    def forward(self, z):
        return 1j * np.sqrt((z - self.z1) / (z - self.z0))

    def inverse(self, w):
        t = (-1j * w) ** 2
        return (self.z1 - t * self.z0) / (1 - t)

    def params(self):
        return (self.z0, self.z1)


@dataclass(frozen=True)
class GeodesicSlit:
    """Removes the hyperbolic geodesic from 0 to ``zeta`` in the upper half-plane.

    The result is divided by ``scale > 0``. The slit map is positively
    homogeneous, so this is only a change of units; the build uses it to keep
    the image of the origin at modulus 1 and so avoid overflow in thin fingers.
    """

    zeta: complex
    scale: float = 1.0
    kind: ClassVar[str] = "GeodesicSlit"

    def __post_init__(self):
        if not self.zeta.imag > 0:
            raise SlitParameterOutOfHalfPlane(f"slit tip {self.zeta} not in the upper half-plane")
        if not self.scale > 0:
            raise ValueError("GeodesicSlit scale must be positive")

    @property
    def inv_p(self) -> float:
        # 1/p with p = |zeta|^2 / Re zeta; zero for a vertical geodesic
        return self.zeta.real / abs(self.zeta) ** 2

    @property
    def height(self) -> float:
        return abs(self.zeta) ** 2 / self.zeta.imag

    def forward(self, w):
        a = w / (1 - w * self.inv_p)
        h = self.height
        return sqrt_upper(a * a + h * h, a.real) / self.scale

    def inverse(self, u):
        h = self.height
        u = u * self.scale
        a = sqrt_upper(u * u - h * h, np.real(u))
        return a / (1 + a * self.inv_p)

    def params(self):
        return (self.zeta, self.scale)


@dataclass(frozen=True)
class TerminalRoot:
    """Closes the last geodesic from 0 to q: w -> -scale * (w / (1 - w/q))**2.

    ``scale > 0`` only rescales the half-plane; the build picks it so the
    origin lands on |w| = 1, where the Cayley map is best conditioned.
    """

    q: float
    scale: float = 1.0
    kind: ClassVar[str] = "TerminalRoot"

    def __post_init__(self):
        if not self.scale > 0:
            raise ValueError("TerminalRoot scale must be positive")

    @property
    def inv_q(self) -> float:
        return 0.0 if math.isinf(self.q) else 1.0 / self.q

    def forward(self, w):
        t = w / (1 - w * self.inv_q)
        return -self.scale * (t * t)

    def inverse(self, u):
        s = 1j * np.sqrt(u / self.scale)
        return s / (1 + s * self.inv_q)

    def params(self):
        return (self.q, self.scale)


@dataclass(frozen=True)
class HalfPlaneToDisk:
    kind: ClassVar[str] = "HalfPlaneToDisk"

    def forward(self, w):
        return (w - 1j) / (w + 1j)

    def inverse(self, v):
        return 1j * (1 + v) / (1 - v)

    def params(self):
        return ()


@dataclass(frozen=True)
class DiskAutomorphism:
    w0: complex
    kind: ClassVar[str] = "DiskAutomorphism"

    def __post_init__(self):
        if not abs(self.w0) < 1:
            raise ValueError(f"automorphism centre {self.w0} not inside the unit disk")

    def forward(self, w):
        return (w - self.w0) / (1 - self.w0.conjugate() * w)

    def inverse(self, v):
        return (v + self.w0) / (1 + self.w0.conjugate() * v)

    def params(self):
        return (self.w0,)


@dataclass(frozen=True)
class Rotation:
    theta: float
    kind: ClassVar[str] = "Rotation"

    def forward(self, w):
        return cmath.exp(1j * self.theta) * w

    def inverse(self, v):
        return cmath.exp(-1j * self.theta) * v

    def params(self):
        return (self.theta,)


ElementaryMap = Union[InitialRoot, GeodesicSlit, TerminalRoot, HalfPlaneToDisk,
                      DiskAutomorphism, Rotation]
STAGE_TYPES = {cls.kind: cls for cls in
               (InitialRoot, GeodesicSlit, TerminalRoot, HalfPlaneToDisk, DiskAutomorphism, Rotation)}
_HALF_PLANE_STAGES = (InitialRoot, GeodesicSlit, TerminalRoot)


# ------------------------------------------------------------------ maps

@dataclass(frozen=True, eq=False)
class ConformalMap:
    stages: tuple
    domain: JordanDomain
    node_images: np.ndarray
    normalized: bool = False
    # slit parameters cached as arrays for the evaluation loop
    _inv_p: np.ndarray = field(init=False, repr=False)
    _h: np.ndarray = field(init=False, repr=False)
    _scale: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "stages", tuple(self.stages))
        img = np.array(self.node_images, dtype=complex)
        img.setflags(write=False)
        object.__setattr__(self, "node_images", img)
        slits = [s for s in self.stages if isinstance(s, GeodesicSlit)]
        object.__setattr__(self, "_inv_p", np.array([s.inv_p for s in slits]))
        object.__setattr__(self, "_h", np.array([s.height for s in slits]))
        object.__setattr__(self, "_scale", np.array([s.scale for s in slits]))

    def _forward(self, z):
        w = z
        slit_done = False
        for stage in self.stages:
            if isinstance(stage, GeodesicSlit):
                if not slit_done:
                    w = _apply_slits(w, self._inv_p, self._h, self._scale)
                    slit_done = True
                continue
            w = stage.forward(w)
        return w

    def _inverse(self, w):
        z = w
        slit_done = False
        for idx in range(len(self.stages) - 1, -1, -1):
            stage = self.stages[idx]
            if isinstance(stage, GeodesicSlit):
                if not slit_done:
                    first = next(i for i, s in enumerate(self.stages) if isinstance(s, GeodesicSlit))
                    z = _invert_slits(z, self._inv_p, self._h, self._scale, first)
                    slit_done = True
                continue
            z = stage.inverse(z)
            if isinstance(stage, TerminalRoot) and np.any(np.imag(z) < -1e-12 * np.abs(z)):
                raise BranchInversionFailure(idx)
        return z

    def __call__(self, z):
        return eval_map(self, z)


def _apply_slits(w, inv_p, h, scale):
    for ip, hh, c in zip(inv_p, h, scale):
        a = w / (1 - w * ip)
        w = sqrt_upper(a * a + hh * hh, a.real) / c
    return w


def _invert_slits(u, inv_p, h, scale, first_index):
    for k in range(len(h) - 1, -1, -1):
        hh = h[k]
        u = u * scale[k]
        a = sqrt_upper(u * u - hh * hh, u.real)
        u = a / (1 + a * inv_p[k])
        if np.any(u.imag < -1e-12 * np.abs(u)):
            raise BranchInversionFailure(first_index + k)
    return u


def _slit_boundary(x, ip, hh):
    """Slit map restricted to real boundary points (sign of Re preserved)."""
    a = x / (1 - x * ip)
    # the junction at 0 is reached from the interior side, which is negative
    return np.where(a > 0, 1.0, -1.0) * np.sqrt(a * a + hh * hh)


def zipper_start(nodes: np.ndarray) -> int:
    """Start node for the zipper.

    Among the nodes closest to the origin, take the one whose two edges
    subtend the widest angle there. The first and last edges then carry a
    fair share of harmonic measure, which keeps the un-normalised image of
    the origin away from the unit circle.
    """
    r = np.abs(nodes)
    turn = np.abs(np.angle(np.roll(nodes, -1) / nodes))
    score = turn + np.roll(turn, 1)
    score[r > r.min() * (1 + 1e-6) + 1e-12] = -1.0
    return int(np.argmax(score))


# breakdowns surface as GeodesicCurveNotSimple, not as numpy warnings
@np.errstate(divide="ignore", over="ignore", invalid="ignore")
def build_geodesic_map(domain: JordanDomain, min_nodes: int = MIN_BUILD_NODES,
                       start: int | None = None) -> ConformalMap:
    """Un-normalised map of the polyline interior onto the unit disk."""
    n = len(domain.nodes)
    if n < min_nodes:
        raise InsufficientNodes(f"geodesic build needs at least {min_nodes} nodes, got {n}")
    if start is None:
        start = zipper_start(domain.nodes)
    z = np.roll(np.asarray(domain.nodes, dtype=complex), -start)
    first = InitialRoot(complex(z[0]), complex(z[1]))
    # pts[k] is the current image of node k+1; entries < k are already on R
    pts = np.empty(n - 1, dtype=complex)
    pts[0] = 0.0
    pts[1:] = first.forward(z[2:])
    origin = first.forward(np.array([0j]))
    q = math.inf  # image of z0, sent to infinity by the first stage
    stages: list = [first]
    for k in range(2, n):
        zeta = complex(pts[k - 1])
        if abs(zeta) < COLLAPSE_TOL:
            # harmonic measure below what doubles can hold: the node merges
            # into the current junction and shares its image
            pts[k - 1] = 0.0
            continue
        if not zeta.imag > 0:
            raise SlitParameterOutOfHalfPlane(f"node {(k + start) % n}: slit tip {zeta} left the upper half-plane")
        raw = GeodesicSlit(zeta)
        ip, hh = raw.inv_p, raw.height
        # rescale so the origin keeps modulus 1
        c = float(abs(raw.forward(origin)[0]))
        if not 0 < c < math.inf:
            raise GeodesicCurveNotSimple(f"node {(k + start) % n}: slit passes through the origin's image")
        slit = GeodesicSlit(zeta, c)
        pts[:k - 1] = _slit_boundary(pts[:k - 1].real, ip, hh) / c
        pts[k - 1:] = slit.forward(pts[k - 1:])
        pts[k - 1] = 0.0
        origin = slit.forward(origin)
        if math.isinf(q):
            if ip != 0.0:
                q = float(_slit_boundary(np.array(-1.0 / ip), 0.0, hh)) / c
        else:
            q = float(_slit_boundary(np.array(q), ip, hh)) / c
        stages.append(slit)
    if not math.isinf(q) and abs(q) < 1e-14:
        raise TerminalJunctionDegenerate(f"terminal junction |q| = {abs(q):.3g}")
    # q, then the node images, must run once around the extended real line
    if not np.isfinite(pts).all():
        raise GeodesicCurveNotSimple("node images overflowed")
    seq = pts.real if math.isinf(q) else np.concatenate([[q], pts.real, [q]])
    step = np.diff(seq)
    back = step < -TIE_TOL * (np.abs(seq[1:]) + np.abs(seq[:-1]))
    if np.count_nonzero(back) > (0 if math.isinf(q) else 1):
        raise GeodesicCurveNotSimple("node images are out of cyclic order: nodes too coarse "
                                     "for the geodesic curve through them to stay simple")
    u0 = TerminalRoot(q).forward(origin)[0]
    term = TerminalRoot(q, 1.0 / abs(u0))
    cayley = HalfPlaneToDisk()
    stages += [term, cayley]
    at_q = pts.real == q  # merged into z0's junction
    u = term.forward(pts.real.astype(complex)).real.astype(complex)
    images = np.empty(n, dtype=complex)
    images[0] = 1.0  # z0 -> q -> infinity -> 1
    images[1:] = np.where(at_q, 1.0, cayley.forward(u))
    if not np.isfinite(images).all():
        raise GeodesicCurveNotSimple("terminal stage overflowed")
    return ConformalMap(tuple(stages), domain, np.roll(images, start), normalized=False)


def eval_map(fmap: ConformalMap, z, check: bool = True):
    """Evaluate the forward map f at interior point(s)."""
    arr = np.asarray(z, dtype=complex)
    flat = np.atleast_1d(arr).ravel()
    if check:
        ok = inside_mask(fmap.domain, flat, strict=True)
        if not ok.all():
            bad = flat[~ok][0]
            raise PointOutsideDomain(f"{bad} is not strictly inside the domain")
    out = fmap._forward(flat)
    return out.reshape(arr.shape) if arr.ndim else complex(out[0])


def eval_inverse(fmap: ConformalMap, w):
    """Evaluate g = f^{-1} at point(s) of the open unit disk."""
    arr = np.asarray(w, dtype=complex)
    flat = np.atleast_1d(arr).ravel()
    if np.any(np.abs(flat) >= 1):
        bad = flat[np.abs(flat) >= 1][0]
        raise PointOutsideDisk(f"{bad} is not inside the unit disk")
    out = fmap._inverse(flat)
    return out.reshape(arr.shape) if arr.ndim else complex(out[0])


def derivative_at_origin(fmap: ConformalMap, rho: float = 0.25, quad_nodes: int = 256) -> complex:
    """f'(0) from the Cauchy integral on |z| = rho by the trapezoid rule."""
    c = rho * np.exp(2j * np.pi * np.arange(quad_nodes) / quad_nodes)
    if not inside_mask(fmap.domain, c, strict=True).all():
        raise RadiusTooLarge(f"circle of radius {rho} leaves the domain")
    return complex(np.mean(fmap._forward(c) / c))


def append_stages(fmap: ConformalMap, extra: Sequence, normalized: bool) -> ConformalMap:
    images = fmap.node_images
    for st in extra:
        images = st.forward(images)
    return ConformalMap(fmap.stages + tuple(extra), fmap.domain, images, normalized)


def normalize_at_origin(fmap: ConformalMap, rho: float = 0.25, quad_nodes: int = 256) -> ConformalMap:
    """Compose with a disk automorphism and rotation so f(0)=0 and f'(0)>0."""
    w0 = complex(fmap._forward(np.array([0j]))[0])
    if abs(w0) >= 1 - 1e-6:
        raise OriginImageOutsideDisk(f"|f(0)| = {abs(w0):.9f} too close to the unit circle")
    moved = append_stages(fmap, [DiskAutomorphism(w0)], normalized=False)
    d = derivative_at_origin(moved, rho, quad_nodes)
    return append_stages(moved, [Rotation(-cmath.phase(d))], normalized=True)


def boundary_value(fmap: ConformalMap, node_index: int) -> complex:
    """Image of a boundary node under the boundary extension of f."""
    n = len(fmap.node_images)
    if not -n <= node_index < n:
        raise IndexOutOfRange(f"node index {node_index} out of range for {n} nodes")
    return complex(fmap.node_images[node_index])


def boundary_turns(fmap: ConformalMap) -> np.ndarray:
    """Counter-clockwise angular increments between consecutive node images, in [0, 2 pi).

    Backward steps of rounding size count as ties.
    """
    ang = np.angle(fmap.node_images)
    d = np.diff(np.concatenate([ang, ang[:1]]))
    d = np.where((d < 0) & (d > -TIE_TOL), 0.0, d)
    return np.mod(d, 2 * np.pi)


def boundary_monotone(fmap: ConformalMap) -> bool:
    """Node images run once around the circle without backtracking.

    Ties are allowed: nodes deep in a thin finger carry harmonic measure
    below double resolution and share an image. A backward step shows up as
    an increment near 2 pi, so the total exceeds one turn.
    """
    return bool(abs(boundary_turns(fmap).sum() - 2 * np.pi) < 1e-6)


def riemann_map(domain: JordanDomain) -> ConformalMap:
    return normalize_at_origin(build_geodesic_map(domain))


def identity_map(domain: JordanDomain, extra: Sequence = ()) -> ConformalMap:
    """Stage-free map; mostly useful for tests of the evaluation machinery."""
    images = domain.nodes.astype(complex)
    for st in extra:
        images = st.forward(images)
    return ConformalMap(tuple(extra), domain, images, normalized=False)


# ------------------------------------------------------------- dump/load

def _fmt(x) -> str:
    if isinstance(x, complex):
        return f"{x.real!r} {x.imag!r}"
    return repr(float(x))


def dump_map(fmap: ConformalMap) -> str:
    """Line-oriented text listing, full precision, readable by :func:`load_map`."""
    lines = [f"conformal-map 1 normalized={int(fmap.normalized)} tol_geom={fmap.domain.tol_geom!r}"]
    for node in fmap.domain.nodes:
        lines.append(f"node {_fmt(complex(node))}")
    for img in fmap.node_images:
        lines.append(f"image {_fmt(complex(img))}")
    for st in fmap.stages:
        parts = [st.kind] + [_fmt(p) for p in st.params()]
        lines.append("stage " + " ".join(parts))
    return "\n".join(lines) + "\n"


def load_map(text: str) -> ConformalMap:
    lines = text.strip().splitlines()
    head = lines[0].split()
    if head[:2] != ["conformal-map", "1"]:
        raise ValueError("not a conformal-map dump")
    meta = dict(item.split("=") for item in head[2:])
    nodes, images, stages = [], [], []
    for line in lines[1:]:
        tag, *rest = line.split()
        if tag == "node":
            nodes.append(complex(float(rest[0]), float(rest[1])))
        elif tag == "image":
            images.append(complex(float(rest[0]), float(rest[1])))
        elif tag == "stage":
            cls = STAGE_TYPES[rest[0]]
            vals = [float(v) for v in rest[1:]]
            if cls in (InitialRoot,):
                stages.append(cls(complex(vals[0], vals[1]), complex(vals[2], vals[3])))
            elif cls is GeodesicSlit:
                stages.append(cls(complex(vals[0], vals[1]), *vals[2:]))
            elif cls is DiskAutomorphism:
                stages.append(cls(complex(vals[0], vals[1])))
            elif cls is HalfPlaneToDisk:
                stages.append(cls())
            else:
                stages.append(cls(*vals))
        else:
            raise ValueError(f"unknown record {tag!r}")
    domain = JordanDomain(np.array(nodes), float(meta["tol_geom"]))
    return ConformalMap(tuple(stages), domain, np.array(images), bool(int(meta["normalized"])))
