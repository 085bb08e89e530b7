"""Lindelöf's maximum principle, checked numerically.

If an arc of length at least 2*pi*r/m on the circle |z - z0| = r lies outside
the closure of D, and |f| <= M on D with |f| < eps near the part of the
boundary inside that circle, then |f(z0)| < (eps * M**(m-1))**(1/m). The proof
multiplies m rotated copies of f on the intersection of m rotated copies of D.
Every piece of that construction is exposed here so it can be checked on
sampled data, together with a walk-on-spheres estimate of harmonic measure
as an independent two-constants cross-check.
"""

from __future__ import annotations

import math
import sys
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from typing import Optional, Union

import numpy as np

from .geometry import (
    JordanDomain,
    InvalidM,
    Location,
    distance_to_boundary,
    inside_mask,
    nearest_boundary_point,
    point_in_jordan,
    rotated_intersection_samples,
    validate_jordan,
)

SHELL_BAND = 0.02
EQ3_SLACK = 0.05
ABSORB_TOL = 1e-4
STEP_CAP = 100_000
WOS_CHUNK = 4096  # walks per RNG stream; fixed so results ignore thread count


class InvalidOrder(ValueError):
    pass


class EmptyShell(ValueError):
    pass


class HypothesisNotMet(ValueError):
    pass


class NoProgress(RuntimeError):
    pass


# ------------------------------------------------------------ the bound

def lindelof_bound(eps: float, M: float, m: int) -> float:
    """(eps * M**(m-1))**(1/m)."""
    if isinstance(m, bool) or int(m) != m or m < 1:
        raise InvalidM(f"m must be a positive integer, got {m}")
    if not eps > 0:
        raise InvalidOrder(f"eps must be positive, got {eps}")
    if eps > M:
        raise InvalidOrder(f"eps = {eps} exceeds M = {M}")
    m = int(m)
    if m == 1:
        return float(eps)
    try:
        prod = eps * M ** (m - 1)
    except OverflowError:
        prod = math.inf
    if math.isfinite(prod) and prod >= sys.float_info.min:
        return float(prod ** (1.0 / m))
    # logs keep tiny eps and large m from underflowing
    return float(math.exp((math.log(eps) + (m - 1) * math.log(M)) / m))


# ------------------------------------------------------- test functions

@dataclass(frozen=True)
class TestFunction:
    """f(z) = scale * prod_k (z - zeros[k]); entire, so |f| on D is bounded by |f| on the boundary."""

    __test__ = False  # not a pytest class

    kind: str = "polynomial"
    zeros: tuple = ()
    scale: float = 1.0

    def __post_init__(self):
        if self.kind not in ("blaschke_like", "polynomial"):
            raise ValueError(f"kind must be 'blaschke_like' or 'polynomial', got {self.kind!r}")
        object.__setattr__(self, "zeros", tuple(complex(z) for z in self.zeros))

    def __call__(self, z):
        z = np.asarray(z, dtype=complex)
        out = np.full(z.shape, complex(self.scale))
        for a in self.zeros:
            out = out * (z - a)
        return out

    def abs_at(self, z) -> np.ndarray:
        return np.abs(self(z))


def product_function_eval(f_desc: TestFunction, z, m: int):
    """prod_{k<m} f(e^{2 pi i k/m} z)."""
    if m < 1:
        raise InvalidM(f"m must be >= 1, got {m}")
    z = np.asarray(z, dtype=complex)
    out = np.ones(z.shape, dtype=complex)
    for k in range(m):
        out = out * f_desc(np.exp(2j * np.pi * k / m) * z)
    return out if out.ndim else complex(out)


# ---------------------------------------------------------- the domain

def sector_removed_domain(start: float, end: float, inner: float, outer: float = 2.0,
                          nodes: int = 1024) -> JordanDomain:
    """Delta_outer minus the closed annular sector {inner <= |z|, start <= arg z <= end}.

    The removed piece reaches the outer circle, so the result stays a Jordan
    domain. The arc |z| = r, arg z in [start, end] lies outside its closure for
    every inner < r < outer.
    """
    if not 0 < inner < outer:
        raise ValueError("need 0 < inner < outer")
    span = end - start
    if not 0 < span < 2 * math.pi:
        raise ValueError("sector must have angular span in (0, 2 pi)")
    lengths = np.array([outer * (2 * math.pi - span), outer - inner, inner * span, outer - inner])
    counts = np.maximum(2, np.round(nodes * lengths / lengths.sum()).astype(int))
    counts[0] += nodes - counts.sum()
    t = [np.arange(c) / c for c in counts]
    pieces = [
        outer * np.exp(1j * (end + t[0] * (2 * math.pi - span))),
        (outer - t[1] * (outer - inner)) * np.exp(1j * start),
        inner * np.exp(1j * (start + t[2] * span)),
        (inner + t[3] * (outer - inner)) * np.exp(1j * end),
    ]
    return validate_jordan(np.concatenate(pieces))


# ---------------------------------------------------------- measurement

def _inward_normals(domain: JordanDomain, count: int) -> tuple[np.ndarray, np.ndarray]:
    """Boundary samples and unit inward normals (interior is on the left)."""
    a, b = domain.edges
    seg = np.abs(b - a)
    cum = np.concatenate([[0.0], np.cumsum(seg)])
    s = np.linspace(0.0, cum[-1], count, endpoint=False)
    idx = np.clip(np.searchsorted(cum, s, side="right") - 1, 0, len(seg) - 1)
    t = (s - cum[idx]) / seg[idx]
    pts = a[idx] + t * (b[idx] - a[idx])
    return pts, 1j * (b[idx] - a[idx]) / seg[idx]


def shell_samples(domain: JordanDomain, z0: complex, r: float, shell_band: float,
                  count: int = 8192, depths: int = 5) -> np.ndarray:
    """Points of the closed domain within ``shell_band`` of the boundary and inside Delta_r(z0).

    Depth 0 (the boundary itself) is included: for entire f the limsup at the
    boundary is the boundary value.
    """
    pts, nrm = _inward_normals(domain, count)
    out = [pts]
    for d in np.linspace(0.0, shell_band, depths)[1:]:
        q = pts + d * nrm
        q = q[inside_mask(domain, q, strict=False)]
        out.append(q[distance_to_boundary(domain, q) <= shell_band * (1 + 1e-9)])
    cand = np.concatenate(out)
    return cand[np.abs(cand - z0) < r]


def measure_eps_M(domain: JordanDomain, z0: complex, r: float, shell_band: float,
                  f_desc: TestFunction, count: int = 8192) -> tuple[float, float]:
    """(eps_hat, M_hat): max |f| on the shell inside Delta_r(z0), and max |f| on the boundary."""
    shell = shell_samples(domain, z0, r, shell_band, count)
    if shell.size == 0:
        raise EmptyShell(f"no boundary shell samples within distance {r} of {z0}")
    eps_hat = float(f_desc.abs_at(shell).max())
    M_hat = float(f_desc.abs_at(domain.sample_boundary(count)).max())
    return eps_hat, max(M_hat, eps_hat)


# ------------------------------------------------------------ instances

@dataclass(frozen=True)
class LindelofInstance:
    domain: JordanDomain
    z0: complex
    r: float
    m: int
    arc: tuple  # (start_angle, end_angle) of I on the circle |z - z0| = r
    f_desc: TestFunction
    shell_band: float = SHELL_BAND
    eps_hat: Optional[float] = None
    M_hat: Optional[float] = None

    def __post_init__(self):
        if self.m < 1:
            raise InvalidM(f"m must be >= 1, got {self.m}")
        if not self.r > 0 or not self.shell_band > 0:
            raise ValueError("r and shell_band must be positive")
        object.__setattr__(self, "arc", tuple(float(a) for a in self.arc))
        object.__setattr__(self, "z0", complex(self.z0))

    @property
    def arc_length(self) -> float:
        return self.r * (self.arc[1] - self.arc[0])

    def measured(self) -> "LindelofInstance":
        """Copy with eps_hat and M_hat filled in by :func:`measure_eps_M`."""
        eps, M = measure_eps_M(self.domain, self.z0, self.r, self.shell_band, self.f_desc)
        return LindelofInstance(self.domain, self.z0, self.r, self.m, self.arc, self.f_desc,
                                self.shell_band, eps, M)


def check_arc(instance: LindelofInstance, samples: int = 2048) -> list[str]:
    """Reasons the geometric hypothesis fails; empty when it holds."""
    problems = []
    need = 2 * math.pi * instance.r / instance.m
    if instance.arc_length < need * (1 - 1e-12):
        problems.append(f"arc length {instance.arc_length:.6g} below 2*pi*r/m = {need:.6g}")
    # the open arc: its endpoints may touch the boundary
    th = np.linspace(instance.arc[0], instance.arc[1], samples + 2)[1:-1]
    pts = instance.z0 + instance.r * np.exp(1j * th)
    if inside_mask(instance.domain, pts, strict=False).any():
        problems.append("arc meets the closed domain")
    if point_in_jordan(instance.domain, instance.z0) is not Location.INSIDE:
        problems.append("z0 not inside the domain")
    return problems


@dataclass(frozen=True)
class LemmaReport:
    eps_hat: float
    M_hat: float
    m: int
    bound: float
    abs_f_z0: float
    eq3_lhs: float
    eq3_rhs: float
    identity_residual: float
    containment_max_radius: float
    conclusion_ok: bool
    eq3_ok: bool
    identity_ok: bool
    containment_ok: bool
    omega_hat: Optional[float] = None
    stderr: Optional[float] = None
    two_constants_ok: Optional[bool] = None

    @property
    def ok(self) -> bool:
        return self.conclusion_ok and self.eq3_ok and self.identity_ok and self.containment_ok

    def to_dict(self) -> dict:
        d = asdict(self)
        d["ok"] = self.ok
        return d


@dataclass(frozen=True)
class LemmaGeometry:
    """The f-independent samples of one instance, reusable across test functions."""

    problems: tuple
    shell: np.ndarray      # shell samples, original coordinates
    boundary: np.ndarray   # dense boundary samples, original coordinates
    tilde_bd: np.ndarray   # boundary samples of the rotated intersection, z0 at 0


def lemma_geometry(instance: LindelofInstance, samples: int = 2048,
                   count: int = 8192) -> LemmaGeometry:
    problems = tuple(check_arc(instance))
    if problems:
        empty = np.empty(0, dtype=complex)
        return LemmaGeometry(problems, empty, empty, empty)
    z0 = instance.z0
    shell = shell_samples(instance.domain, z0, instance.r, instance.shell_band, count)
    if shell.size == 0:
        raise EmptyShell(f"no boundary shell samples within distance {instance.r} of {z0}")
    # translate so z0 = 0, as the proof does
    dom = validate_jordan(instance.domain.nodes - z0, instance.domain.tol_geom)
    tilde_bd = rotated_intersection_samples(dom, instance.m, samples)
    return LemmaGeometry((), shell, instance.domain.sample_boundary(count), tilde_bd)


def verify_lemma(instance: LindelofInstance, samples: int = 2048, slack: float = EQ3_SLACK,
                 geometry: Optional[LemmaGeometry] = None) -> LemmaReport:
    """Run the four checks of the lemma on one instance (z0 moved to 0 first)."""
    geo = geometry if geometry is not None else lemma_geometry(instance, samples)
    if geo.problems:
        raise HypothesisNotMet("; ".join(geo.problems))
    f = instance.f_desc
    if instance.eps_hat is None or instance.M_hat is None:
        eps = float(f.abs_at(geo.shell).max())
        M = max(float(f.abs_at(geo.boundary).max()), eps)
    else:
        eps, M = instance.eps_hat, instance.M_hat
    m = instance.m

    z0 = instance.z0
    g = TestFunction(f.kind, tuple(a - z0 for a in f.zeros), f.scale)
    bound = lindelof_bound(eps, M, m)
    f0 = abs(complex(g(0.0)))
    tilde_bd = geo.tilde_bd
    lhs = float(np.abs(product_function_eval(g, tilde_bd, m)).max()) if tilde_bd.size else 0.0
    rhs = M ** (m - 1) * eps
    ident = abs(abs(product_function_eval(g, 0.0, m)) - f0 ** m)
    rad = float(np.abs(tilde_bd).max()) if tilde_bd.size else 0.0
    return LemmaReport(
        eps_hat=eps, M_hat=M, m=m, bound=bound, abs_f_z0=f0,
        eq3_lhs=lhs, eq3_rhs=rhs, identity_residual=ident, containment_max_radius=rad,
        conclusion_ok=f0 <= bound, eq3_ok=lhs <= rhs * (1 + slack),
        identity_ok=ident <= 1e-12 * max(1.0, f0 ** m), containment_ok=rad < instance.r,
    )


def sector_instance(K: int = 8, inner: float = 0.95, start: float = -0.1,
                    end: float = math.pi + 0.1, m: int = 2, nodes: int = 1024) -> LindelofInstance:
    """The stock instance: Delta_2 minus a sector, zeros spread on the removed unit arc."""
    dom = sector_removed_domain(start, end, inner, 2.0, nodes)
    th = np.linspace(start, end, K)
    f = TestFunction("polynomial", tuple(np.exp(1j * th)), 3.0 ** -K)
    return LindelofInstance(dom, 0j, 1.0, m, (start, end), f)


# ---------------------------------------------------- harmonic measure

@dataclass(frozen=True)
class ArcTarget:
    """Boundary points whose angle about ``center`` lies in [start, end] (cyclically)."""

    start: float
    end: float
    center: complex = 0j

    def contains(self, z) -> np.ndarray:
        ang = np.mod(np.angle(np.asarray(z) - self.center) - self.start, 2 * np.pi)
        return ang <= (self.end - self.start)


@dataclass(frozen=True)
class DiskTarget:
    """Boundary points within ``radius`` of ``center`` (closed)."""

    center: complex
    radius: float

    def contains(self, z) -> np.ndarray:
        return np.abs(np.asarray(z) - self.center) <= self.radius


Target = Union[ArcTarget, DiskTarget]


def _wos_chunk(domain: JordanDomain, z0: complex, count: int, seed: int, chunk: int,
               absorb_tol: float, step_cap: int) -> np.ndarray:
    """Exit points of ``count`` walks, in order of absorption."""
    rng = np.random.default_rng(np.random.SeedSequence([seed, chunk]))
    pos = np.full(count, complex(z0))
    active = np.arange(count)
    exits = []
    for _ in range(step_cap):
        d = distance_to_boundary(domain, pos[active])
        done = d < absorb_tol
        if done.any():
            exits.append(nearest_boundary_point(domain, pos[active[done]]))
            active, d = active[~done], d[~done]
        if active.size == 0:
            return np.concatenate(exits)
        # one uniform draw per still-active walk, in walk order
        theta = rng.uniform(0.0, 2 * np.pi, active.size)
        pos[active] += d * np.exp(1j * theta)
    raise NoProgress(f"walk exceeded {step_cap} steps (absorb_tol {absorb_tol} too tight)")


def wos_exit_points(domain: JordanDomain, z0: complex, trials: int = 100_000, seed: int = 0,
                    absorb_tol: float = ABSORB_TOL, threads: int = 1,
                    step_cap: int = STEP_CAP) -> np.ndarray:
    """Boundary exit points of walk-on-spheres walks from z0.

    Walks are split into fixed chunks of ``WOS_CHUNK`` with one RNG stream per
    chunk index, so the output depends only on (seed, trials).
    """
    if trials < 1:
        raise ValueError("trials must be positive")
    if trials < 1000:
        warnings.warn(f"{trials} walk-on-spheres trials: standard error will be large",
                      RuntimeWarning, stacklevel=3)
    if point_in_jordan(domain, z0) is not Location.INSIDE:
        raise ValueError(f"{z0} is not inside the domain")
    sizes = [min(WOS_CHUNK, trials - s) for s in range(0, trials, WOS_CHUNK)]
    args = [(domain, z0, n, seed, k, absorb_tol, step_cap) for k, n in enumerate(sizes)]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(lambda a: _wos_chunk(*a), args))
    else:
        parts = [_wos_chunk(*a) for a in args]
    return np.concatenate(parts)


def harmonic_measure_wos(domain: JordanDomain, z0: complex, target: Target,
                         trials: int = 100_000, seed: int = 0, absorb_tol: float = ABSORB_TOL,
                         threads: int = 1, step_cap: int = STEP_CAP) -> tuple[float, float]:
    """Walk-on-spheres estimate of omega(z0, target; domain) and its binomial standard error."""
    exits = wos_exit_points(domain, z0, trials, seed, absorb_tol, threads, step_cap)
    p = int(target.contains(exits).sum()) / trials
    return p, math.sqrt(p * (1 - p) / trials)


def shell_target(instance: LindelofInstance) -> DiskTarget:
    """The boundary portion inside the closed disk of radius r about z0."""
    return DiskTarget(instance.z0, instance.r)


def two_constants_check(report: LemmaReport, omega: float, stderr: float) -> bool:
    """eps^omega * M^(1-omega) >= |f(z0)|, with omega lowered by 3 standard errors."""
    w = max(0.0, omega - 3 * stderr)
    eps, M = report.eps_hat, report.M_hat
    if report.abs_f_z0 == 0:
        return True
    return w * math.log(eps) + (1 - w) * math.log(M) >= math.log(report.abs_f_z0) - 1e-12


def random_test_functions(instance: LindelofInstance, count: int, seed: int = 0,
                          max_zeros: int = 10) -> list[TestFunction]:
    """Entire test functions with zeros on the obstructing arc I.

    Each has 1..max_zeros zeros at uniform angles on I and a random scale, so
    |f| is small near the part of the boundary I shields.
    """
    rng = np.random.default_rng(np.random.SeedSequence([seed, count]))
    a, b = instance.arc
    out = []
    for _ in range(count):
        k = int(rng.integers(1, max_zeros + 1))
        th = rng.uniform(a, b, k)
        zeros = instance.z0 + instance.r * np.exp(1j * th)
        kind = "blaschke_like" if rng.uniform() < 0.5 else "polynomial"
        out.append(TestFunction(kind, tuple(zeros), float(rng.uniform(0.1, 1.0) * 3.0 ** -k)))
    return out


def with_function(instance: LindelofInstance, f_desc: TestFunction) -> LindelofInstance:
    return LindelofInstance(instance.domain, instance.z0, instance.r, instance.m, instance.arc,
                            f_desc, instance.shell_band)
