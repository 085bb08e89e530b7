import functools

import numpy as np
import pytest

from riemann_boundary.conformal import riemann_map
from riemann_boundary.domains import DomainFamily, generate, make_disk, make_unit_disk


@functools.lru_cache(maxsize=None)
def disk_map(nodes: int):
    return riemann_map(make_unit_disk(nodes))


@functools.lru_cache(maxsize=None)
def offcenter_map(nodes: int, c: float = 0.4, r: float = 1.5):
    return riemann_map(make_disk(c, r, nodes))


@functools.lru_cache(maxsize=None)
def family_map(kind: str, j: int, nodes: int = 1024):
    fam = DomainFamily(kind=kind, nodes=nodes)
    return riemann_map(generate(fam, j))


def mobius_oracle(z, c=0.4, r=1.5):
    """Normalized Riemann map of the disk |z - c| < r (c real)."""
    a = -c / r
    w = (np.asarray(z) - c) / r
    return (w - a) / (1 - np.conj(a) * w)


def interior_grid(radius=0.9, count=41):
    x = np.linspace(-radius, radius, count)
    z = (x[:, None] + 1j * x[None, :]).ravel()
    return z[np.abs(z) <= radius]


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@functools.lru_cache(maxsize=None)
def family_report(kind: str):
    """(report, seconds) for the stock family of ``kind``; shared across test files."""
    import time

    from riemann_boundary.convergence import ConvergenceConfig, run_family_experiment

    t = time.perf_counter()
    rep = run_family_experiment(DomainFamily(kind=kind), ConvergenceConfig())
    return rep, time.perf_counter() - t


@pytest.fixture(scope="session")
def default_family_runs(tmp_path_factory):
    """The shipped family config run twice through the CLI, with 1 and 2 threads."""
    from riemann_boundary.cli import main

    runs = {}
    for threads in (1, 2):
        out = tmp_path_factory.mktemp(f"family_t{threads}")
        code = main(["--quiet", "--threads", str(threads), "--output-dir", str(out), "family"])
        runs[threads] = (code, out)
    return runs


# one line per acceptance criterion, printed after the run
ACCEPTANCE: dict = {}


def record(number: int, ok: bool, detail: str):
    line = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE[number] = line
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[k])
