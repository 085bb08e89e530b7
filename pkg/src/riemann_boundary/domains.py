"""Domain families D_j that contain the unit disk and shrink back onto it.

Two kinds are provided. A *tube* family glues a radial finger of shrinking
angular width to the unit circle. A *bump* family pushes the circle outward
by a smooth bump of shrinking height. In both, the circle is left alone
inside the U-sector of the arc specification.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import (
    ArcSpec,
    JordanDomain,
    circle_agreement_sup,
    circle_discretization_bound,
    distance_to_boundary,
    validate_jordan,
    winding_number,
    wrap_angle,
)
from .conformal import InsufficientNodes

FINGER_DENSITY = 4.0
MOUTH_GRADING = 0.15
CIRCLE_CAP = 0.8  # largest share of nodes on the circle piece


class HypothesisViolation(ValueError):
    pass


class IndexOutOfRange(IndexError):
    pass


def make_unit_disk(nodes: int) -> JordanDomain:
    if nodes < 16:
        raise InsufficientNodes(f"unit disk needs at least 16 nodes, got {nodes}")
    return validate_jordan(np.exp(2j * np.pi * np.arange(nodes) / nodes))


def make_disk(center: complex, radius: float, nodes: int) -> JordanDomain:
    if nodes < 16:
        raise InsufficientNodes(f"disk needs at least 16 nodes, got {nodes}")
    return validate_jordan(center + radius * np.exp(2j * np.pi * np.arange(nodes) / nodes))


@dataclass(frozen=True)
class DomainFamily:
    kind: str = "tube"
    attach_angle: float = math.pi
    length: float = 0.5
    width0: float = 0.2
    decay: float = 0.5
    bump_sigma: float = 0.5
    j_range: tuple = (1, 8)
    nodes: int = 1024
    arcspec: ArcSpec = field(default_factory=lambda: ArcSpec(0.0, math.pi / 3, 0.3, 0.3))
    R: float = 2.0

    def __post_init__(self):
        object.__setattr__(self, "j_range", tuple(int(j) for j in self.j_range))
        if self.kind not in ("tube", "bump"):
            raise ValueError(f"kind must be 'tube' or 'bump', got {self.kind!r}")
        # decay == 1 is representable so the kernel certificate can flag it
        if not 0 < self.decay <= 1:
            raise ValueError("decay must lie in (0, 1)")
        if self.width0 <= 0 or self.length <= 0 or self.bump_sigma <= 0:
            raise ValueError("width0, length and bump_sigma must be positive")
        lo, hi = self.j_range
        if lo > hi:
            raise ValueError("j_range must be (first, last) with first <= last")
        if self.nodes < 16:
            raise InsufficientNodes(f"family needs at least 16 nodes, got {self.nodes}")

    @property
    def indices(self) -> range:
        return range(self.j_range[0], self.j_range[1] + 1)

    def width(self, j: int) -> float:
        """w_j for tubes, the bump height eps_j for bumps."""
        return self.width0 * self.decay ** j

    @property
    def support_half_width(self) -> float:
        return self.width0 if self.kind == "tube" else self.bump_sigma

    def hypothesis_problems(self) -> list[str]:
        problems = []
        gap = abs(float(wrap_angle(self.attach_angle - self.arcspec.center_angle)))
        if gap <= self.support_half_width + self.arcspec.sector_half_width:
            problems.append("attach support overlaps the U-sector")
        reach = 1 + (self.length if self.kind == "tube" else self.width0)
        if reach > self.R:
            problems.append(f"outer radius {reach} exceeds R = {self.R}")
        if self.kind == "tube" and self.width0 >= math.pi / 2:
            problems.append("tube width0 must be below pi/2")
        if self.decay >= 1:
            problems.append("decay must be below 1 for the family to converge")
        return problems


def _equidistribute(param, weight_density, count):
    """``count`` parameter values, start included and end excluded, spaced
    so each interval carries equal weight."""
    cum = np.concatenate([[0.0], np.cumsum(0.5 * (weight_density[1:] + weight_density[:-1])
                                           * np.diff(param))])
    targets = cum[-1] * np.arange(count) / count
    return np.interp(targets, cum, param)


def _tube_nodes(family: DomainFamily, j: int) -> np.ndarray:
    a = family.attach_angle
    w = family.width(j)
    top = 1 + family.length
    s = w / 4  # chamfer size
    lo, hi = np.exp(1j * (a - w)), np.exp(1j * (a + w))

    # a chamfer emits the previous piece's end point and one rounding node
    def chamfer(p_in, corner, p_out):
        return [p_in, 0.25 * p_in + 0.5 * corner + 0.25 * p_out]

    corners = [
        chamfer(np.exp(1j * (a - w - s)), lo, (1 + s) * lo),
        chamfer((top - s) * lo, top * lo, top * np.exp(1j * (a - w + s / top))),
        chamfer(top * np.exp(1j * (a + w - s / top)), top * hi, (top - s) * hi),
        chamfer((1 + s) * hi, hi, np.exp(1j * (a + w + s))),
    ]
    # pieces are exact curves of a parameter in [0, 1]; nodes are placed by
    # interpolating the parameter, never positions, so they lie on the curve
    pieces = [
        (lambda t: np.exp(1j * (a + w + s + t * (2 * np.pi - 2 * (w + s)))), 1.0),
        (lambda t: lo + (s + t * (family.length - 2 * s)) * lo, FINGER_DENSITY),
        (lambda t: top * np.exp(1j * (a - w + s / top + t * 2 * (w - s / top))), FINGER_DENSITY),
        (lambda t: hi + (family.length - s - t * (family.length - 2 * s)) * hi, FINGER_DENSITY),
    ]
    t = np.linspace(0.0, 1.0, 8193)
    # extra density graded towards the two mouth corners, where the map is
    # least regular
    densities = []
    for curve, base in pieces:
        c = curve(t)
        d = np.minimum(np.abs(c - lo), np.abs(c - hi))
        rho = base + MOUTH_GRADING / (d + w)
        arclen = np.concatenate([[0.0], np.cumsum(np.abs(np.diff(c)))])
        densities.append((arclen, rho))
    totals = np.array([np.trapezoid(rho, x) for x, rho in densities])
    budget = family.nodes - 2 * len(corners)
    # the circle gets a fixed number of nodes per unit weight, so spacing far
    # from the mouth does not change with j; the finger takes the rest
    per_weight = budget / (2 * np.pi + FINGER_DENSITY * (2 * family.length + 2 * family.width0))
    circle = min(int(round(per_weight * totals[0])), int(CIRCLE_CAP * budget))
    rest = budget - circle
    fingers = np.maximum(1, np.round(rest * totals[1:] / totals[1:].sum()).astype(int))
    fingers[0] += rest - fingers.sum()
    counts = np.concatenate([[circle], fingers])
    out = []
    for (curve, _), (arclen, rho), cnt, corner in zip(pieces, densities, counts, corners):
        at = _equidistribute(arclen, rho, cnt)
        out.extend(curve(np.interp(at, arclen, t)))
        out.extend(corner)
    return np.array(out)


def _bump_profile(t):
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    inside = np.abs(t) < 1
    out[inside] = np.exp(1 - 1 / (1 - t[inside] ** 2))
    return out


def _bump_nodes(family: DomainFamily, j: int) -> np.ndarray:
    eps = family.width(j)
    dense = 64 * family.nodes
    theta = family.attach_angle + np.pi + 2 * np.pi * np.arange(dense + 1) / dense
    rad = 1 + eps * _bump_profile(wrap_angle(theta - family.attach_angle) / family.bump_sigma)
    curve = rad * np.exp(1j * theta)
    cum = np.concatenate([[0.0], np.cumsum(np.abs(np.diff(curve)))])
    s = np.linspace(0, cum[-1], family.nodes, endpoint=False)
    th = np.interp(s, cum, theta)
    r = 1 + eps * _bump_profile(wrap_angle(th - family.attach_angle) / family.bump_sigma)
    return r * np.exp(1j * th)


def generate(family: DomainFamily, j: int) -> JordanDomain:
    if j not in family.indices:
        raise IndexOutOfRange(f"j = {j} outside {family.j_range}")
    problems = [p for p in family.hypothesis_problems() if "decay" not in p]
    if problems:
        raise HypothesisViolation("; ".join(problems))
    nodes = _tube_nodes(family, j) if family.kind == "tube" else _bump_nodes(family, j)
    return validate_jordan(nodes)


@dataclass(frozen=True)
class HypothesisReport:
    contains_disk: bool
    inside_R: bool
    agrees_on_U: bool
    disk_residual: float
    R_residual: float
    U_residual: float
    U_tolerance: float

    @property
    def ok(self) -> bool:
        return self.contains_disk and self.inside_R and self.agrees_on_U

    def failures(self) -> list[str]:
        out = []
        if not self.contains_disk:
            out.append(f"contains_disk (residual {self.disk_residual:.3g})")
        if not self.inside_R:
            out.append(f"inside_R (residual {self.R_residual:.3g})")
        if not self.agrees_on_U:
            out.append(f"agrees_on_U (residual {self.U_residual:.3g} > {self.U_tolerance:.3g})")
        return out


def unit_circle_excess(domain: JordanDomain, samples: int = 8192) -> float:
    """Largest distance from a unit-circle sample lying outside the domain to the boundary."""
    pts = np.exp(2j * np.pi * np.arange(samples) / samples)
    outside = winding_number(domain, pts) == 0
    if not outside.any():
        return 0.0
    return float(distance_to_boundary(domain, pts[outside]).max())


def check_hypotheses(domain: JordanDomain, arcspec: ArcSpec, R: float,
                     samples: int = 8192, tol_agree: float = 1e-6) -> HypothesisReport:
    """Discrete checks of Delta in D, D in Delta_R and D cap U = Delta cap U."""
    disc = circle_discretization_bound(domain)
    disk_res = unit_circle_excess(domain, samples)
    contains = disk_res <= disc + domain.tol_geom + 1e-12
    r_res = float(np.abs(domain.nodes).max() - R)
    u_tol = tol_agree + circle_discretization_bound(domain, arcspec)
    u_res = circle_agreement_sup(domain, arcspec)
    return HypothesisReport(bool(contains), r_res <= 0, u_res <= u_tol,
                            disk_res, max(r_res, 0.0), u_res, u_tol)


@dataclass(frozen=True)
class KernelCertificate:
    rows: tuple
    resolution: float
    converging: bool

    @property
    def flag(self) -> str:
        return "OK" if self.converging else "NotConverging"

    def rho(self, j: int) -> float:
        return dict(self.rows)[j]


def inscribed_outer_radius(domain: JordanDomain, grid: int, R: float) -> tuple[float, float]:
    """Largest r with some disk Delta_r(w), |w| >= 1 + r, inside the domain.

    Returns (rho, grid spacing). Centres range over a square grid on
    [-R, R]^2; for an interior centre the largest admissible radius is
    min(distance to the boundary, |w| - 1).
    """
    x = np.linspace(-R, R, grid)
    h = float(x[1] - x[0])
    Z = (x[:, None] + 1j * x[None, :]).ravel()
    Z = Z[np.abs(Z) > 1]
    Z = Z[winding_number(domain, Z) != 0]
    if Z.size == 0:
        return 0.0, h
    r = np.minimum(distance_to_boundary(domain, Z), np.abs(Z) - 1)
    return float(max(r.max(), 0.0)), h


def kernel_certificate(family: DomainFamily, grid: int = 400) -> KernelCertificate:
    """rho_j for each j; rho_j -> 0 certifies kernel convergence to the disk."""
    rows = []
    h = 0.0
    for j in family.indices:
        dom = validate_jordan(_tube_nodes(family, j) if family.kind == "tube" else _bump_nodes(family, j))
        rho, h = inscribed_outer_radius(dom, grid, family.R)
        rows.append((j, rho))
    rhos = [r for _, r in rows]
    converging = len(rhos) < 2 or (rhos[-1] < rhos[0] - h and family.decay < 1)
    return KernelCertificate(tuple(rows), h, bool(converging))
