"""Convergence measurements for a family of domains shrinking onto the disk.

For each member D_j the normalized map f_j is built and compared with the
identity: on an interior compact, at the boundary nodes of a compact arc K of
the fixed arc, for the inverse map, and through a discrete modulus of
continuity on K. The disk itself is run first at the same node count; its
errors are the discretization floor against which "tends to zero" is read.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from .conformal import (
    BranchInversionFailure,
    ConformalError,
    ConformalMap,
    boundary_monotone,
    build_geodesic_map,
    derivative_at_origin,
    eval_inverse,
    eval_map,
    normalize_at_origin,
)
from .domains import DomainFamily, check_hypotheses, generate, kernel_certificate, make_unit_disk
from .geometry import ArcSpec, GeometryError, circle_discretization_bound, wrap_angle

ON_CIRCLE_TOL = 1e-8
ROUNDTRIP_RADIUS = 0.95
ROUNDTRIP_POINTS = 1000


class CompactNotOnCircle(ValueError):
    pass


@dataclass(frozen=True)
class ConvergenceConfig:
    interior_radius: float = 0.9
    interior_grid: int = 41
    boundary_compact: tuple = (0.0, math.pi / 4)  # (center_angle, half_width) of K
    boundary_grid: int = 64
    boundary_offset: float = 1e-4
    pair_delta: float = 0.05

    def __post_init__(self):
        object.__setattr__(self, "boundary_compact", tuple(float(x) for x in self.boundary_compact))
        if not 0 <= self.interior_radius < 1:
            raise ValueError("interior_radius must lie in [0, 1)")
        if self.interior_grid < 1 or self.boundary_grid < 2:
            raise ValueError("interior_grid must be >= 1 and boundary_grid >= 2")
        if not 0 < self.boundary_offset < 1:
            raise ValueError("boundary_offset must lie in (0, 1)")
        if self.pair_delta <= 0:
            raise ValueError("pair_delta must be positive")
        if len(self.boundary_compact) != 2 or self.boundary_compact[1] <= 0:
            raise ValueError("boundary_compact is (center_angle, half_width > 0)")

    def compact_inside(self, arcspec: ArcSpec) -> bool:
        """Closure of K inside the open arc Gamma."""
        c, hw = self.boundary_compact
        off = abs(float(wrap_angle(c - arcspec.center_angle)))
        return off + hw < arcspec.half_width

    def in_compact(self, z) -> np.ndarray:
        c, hw = self.boundary_compact
        return np.abs(wrap_angle(np.angle(z) - c)) <= hw

    def interior_points(self) -> np.ndarray:
        r = self.interior_radius
        if r == 0 or self.interior_grid == 1:
            return np.array([0j])
        x = np.linspace(-r, r, self.interior_grid)
        z = (x[:, None] + 1j * x[None, :]).ravel()
        return z[np.abs(z) <= r * (1 + 1e-12)]


def interior_sup_error(fmap: ConformalMap, cfg: ConvergenceConfig) -> float:
    z = cfg.interior_points()
    return float(np.abs(eval_map(fmap, z) - z).max())


def _compact_nodes(fmap: ConformalMap, cfg: ConvergenceConfig) -> np.ndarray:
    idx = np.flatnonzero(cfg.in_compact(fmap.domain.nodes))
    nodes = fmap.domain.nodes[idx]
    bad = np.abs(np.abs(nodes) - 1) > ON_CIRCLE_TOL
    if bad.any():
        raise CompactNotOnCircle(f"node {int(idx[bad][0])} in K is off the unit circle by "
                                 f"{abs(abs(nodes[bad][0]) - 1):.3g}")
    return idx


def boundary_sup_error(fmap: ConformalMap, cfg: ConvergenceConfig) -> tuple[float, float]:
    """(max |f(node) - node| over K-nodes, max |f(z) - z| over (1 - offset) K)."""
    idx = _compact_nodes(fmap, cfg)
    bd = float(np.abs(fmap.node_images[idx] - fmap.domain.nodes[idx]).max()) if idx.size else 0.0
    c, hw = cfg.boundary_compact
    th = c + np.linspace(-hw, hw, cfg.boundary_grid)
    # coarse polygons cut inside the circle by more than the offset
    offset = max(cfg.boundary_offset, 2 * circle_discretization_bound(fmap.domain))
    z = (1 - offset) * np.exp(1j * th)
    off = float(np.abs(eval_map(fmap, z) - z).max())
    return bd, off


def inverse_sup_error(fmap: ConformalMap, cfg: ConvergenceConfig) -> float:
    w = cfg.interior_points()
    return float(np.abs(eval_inverse(fmap, w) - w).max())


def equicontinuity_modulus(fmap: ConformalMap, cfg: ConvergenceConfig) -> float:
    """max |f(a) - f(b)| / delta over K-node pairs at angular distance <= delta."""
    idx = _compact_nodes(fmap, cfg)
    if idx.size < 2:
        return 0.0
    c = cfg.boundary_compact[0]
    ang = wrap_angle(np.angle(fmap.domain.nodes[idx]) - c)
    order = np.argsort(ang, kind="stable")
    ang, img = ang[order], fmap.node_images[idx][order]
    delta = min(cfg.pair_delta, float(ang[-1] - ang[0]))
    if delta <= 0:
        return 0.0
    sep = np.abs(ang[:, None] - ang[None, :])
    close = sep <= delta * (1 + 1e-12)
    dist = np.abs(img[:, None] - img[None, :])
    return float(dist[close].max() / delta)


def roundtrip_residual(fmap: ConformalMap, seed: int = 0, count: int = ROUNDTRIP_POINTS,
                       radius: float = ROUNDTRIP_RADIUS) -> float:
    """max |g(f(z)) - z| over uniform random z with |z| <= radius."""
    rng = np.random.default_rng(seed)
    z = radius * np.sqrt(rng.uniform(size=count)) * np.exp(2j * np.pi * rng.uniform(size=count))
    return float(np.abs(eval_inverse(fmap, eval_map(fmap, z)) - z).max())


@dataclass
class Row:
    j: int
    width: float
    rho_j: Optional[float] = None
    int_sup_err: Optional[float] = None
    bd_sup_err: Optional[float] = None
    bd_offset_err: Optional[float] = None
    inv_sup_err: Optional[float] = None
    equicont_mod: Optional[float] = None
    fprime0: Optional[complex] = None
    f0_abs: Optional[float] = None
    roundtrip: Optional[float] = None
    monotone: Optional[bool] = None
    build_ms: Optional[float] = None
    eval_ms: Optional[float] = None
    hypotheses_ok: bool = True
    status: str = "ok"  # ok | hypothesis | numerical
    message: str = ""

    def to_dict(self) -> dict:
        d = asdict(self)
        fp = d.pop("fprime0")
        d["re_fprime0"] = None if fp is None else fp.real
        d["im_fprime0"] = None if fp is None else fp.imag
        return d


@dataclass
class ConvergenceReport:
    family: DomainFamily
    config: ConvergenceConfig
    floor: dict
    rows: list = field(default_factory=list)
    kernel_converging: Optional[bool] = None
    kernel_resolution: Optional[float] = None

    @property
    def hypotheses_ok(self) -> bool:
        return all(r.hypotheses_ok for r in self.rows)

    @property
    def numerics_ok(self) -> bool:
        return all(r.status != "numerical" for r in self.rows)

    def column(self, name: str) -> list:
        return [getattr(r, name) for r in self.rows]


def measure_map(fmap: ConformalMap, cfg: ConvergenceConfig, seed: int = 0) -> dict:
    """All per-map metrics; shared by the family rows and the disk floor."""
    t = time.perf_counter()
    bd, off = boundary_sup_error(fmap, cfg)
    out = dict(
        int_sup_err=interior_sup_error(fmap, cfg),
        bd_sup_err=bd,
        bd_offset_err=off,
        inv_sup_err=inverse_sup_error(fmap, cfg),
        equicont_mod=equicontinuity_modulus(fmap, cfg),
        fprime0=derivative_at_origin(fmap),
        f0_abs=abs(eval_map(fmap, 0j)),
        roundtrip=roundtrip_residual(fmap, seed),
        monotone=boundary_monotone(fmap),
    )
    out["eval_ms"] = 1e3 * (time.perf_counter() - t)
    return out


def disk_floor(nodes: int, cfg: ConvergenceConfig) -> dict:
    """Errors of the unit-disk map at the same node count."""
    fmap = normalize_at_origin(build_geodesic_map(make_unit_disk(nodes)))
    m = measure_map(fmap, cfg)
    return {k: m[k] for k in ("int_sup_err", "bd_sup_err", "bd_offset_err", "inv_sup_err")}


def _run_row(family: DomainFamily, cfg: ConvergenceConfig, j: int, seed: int) -> Row:
    row = Row(j=j, width=family.width(j))
    try:
        dom = generate(family, j)
    except (GeometryError, ValueError) as exc:
        row.hypotheses_ok, row.status, row.message = False, "hypothesis", str(exc)
        return row
    rep = check_hypotheses(dom, family.arcspec, family.R)
    if not rep.ok:
        row.hypotheses_ok, row.status = False, "hypothesis"
        row.message = "; ".join(rep.failures())
        return row
    try:
        t = time.perf_counter()
        fmap = normalize_at_origin(build_geodesic_map(dom))
        row.build_ms = 1e3 * (time.perf_counter() - t)
        for k, v in measure_map(fmap, cfg, seed + j).items():
            setattr(row, k, v)
    except CompactNotOnCircle as exc:
        row.hypotheses_ok, row.status, row.message = False, "hypothesis", str(exc)
    except (ConformalError, BranchInversionFailure, FloatingPointError) as exc:
        row.status, row.message = "numerical", f"{type(exc).__name__}: {exc}"
    return row


def run_family_experiment(family: DomainFamily, cfg: ConvergenceConfig, seed: int = 0,
                          threads: int = 1, kernel_grid: int = 400) -> ConvergenceReport:
    """One row per j, assembled in index order whatever the thread count."""
    problems = family.hypothesis_problems()
    if not cfg.compact_inside(family.arcspec):
        problems.append("boundary compact K is not inside the arc Gamma")
    if [p for p in problems if "decay" not in p]:
        msg = "; ".join(problems)
        report = ConvergenceReport(family, cfg, {})
        report.rows = [Row(j=j, width=family.width(j), hypotheses_ok=False, status="hypothesis",
                           message=msg) for j in family.indices]
        return report
    report = ConvergenceReport(family, cfg, disk_floor(family.nodes, cfg))
    js = list(family.indices)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            report.rows = list(pool.map(lambda j: _run_row(family, cfg, j, seed), js))
    else:
        report.rows = [_run_row(family, cfg, j, seed) for j in js]
    cert = kernel_certificate(family, kernel_grid)
    for row in report.rows:
        row.rho_j = cert.rho(row.j)
    report.kernel_converging = cert.converging
    report.kernel_resolution = cert.resolution
    return report


def non_increasing(values, slack: float = 0.0, allowance: float = 0.0) -> bool:
    """values[k+1] <= values[k] * (1 + slack) + allowance for every k."""
    v = list(values)
    return all(b <= a * (1 + slack) + allowance for a, b in zip(v, v[1:]))
