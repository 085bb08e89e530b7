import math

import numpy as np
import pytest

from riemann_boundary.domains import make_unit_disk
from riemann_boundary.geometry import InvalidM
from riemann_boundary.lindelof import (
    ArcTarget,
    DiskTarget,
    EmptyShell,
    HypothesisNotMet,
    InvalidOrder,
    LindelofInstance,
    NoProgress,
    TestFunction,
    harmonic_measure_wos,
    lemma_geometry,
    lindelof_bound,
    measure_eps_M,
    product_function_eval,
    random_test_functions,
    sector_instance,
    sector_removed_domain,
    shell_target,
    two_constants_check,
    verify_lemma,
    with_function,
    wos_exit_points,
)


@pytest.fixture(scope="module")
def stock():
    inst = sector_instance()
    return inst, lemma_geometry(inst)


class TestBound:
    def test_arithmetic(self):
        assert lindelof_bound(1e-4, 1.0, 2) == 1e-2

    def test_m1(self):
        assert lindelof_bound(0.3, 2.0, 1) == 0.3

    @pytest.mark.parametrize("m", [1, 2, 5, 40])
    def test_eps_equals_M(self, m):
        assert lindelof_bound(1.7, 1.7, m) == pytest.approx(1.7, rel=1e-14)

    def test_errors(self):
        with pytest.raises(InvalidOrder):
            lindelof_bound(2.0, 1.0, 2)
        with pytest.raises(InvalidM):
            lindelof_bound(0.1, 1.0, 0)
        with pytest.raises(InvalidM):
            lindelof_bound(0.1, 1.0, 1.5)

    def test_tiny_eps_large_m(self):
        b = lindelof_bound(1e-300, 1.0, 200)
        assert b == pytest.approx(10 ** -1.5, rel=1e-12)


class TestProduct:
    def test_m1(self):
        f = TestFunction("polynomial", (0.3, -1j), 2.0)
        z = np.array([0.5 + 0.1j, -2.0])
        assert np.allclose(product_function_eval(f, z, 1), f(z))

    def test_cube(self):
        f = TestFunction("polynomial", (0.0,))
        assert product_function_eval(f, 2.0, 3) == pytest.approx(8.0, abs=1e-12)

    def test_origin_identity(self, rng):
        for _ in range(20):
            zs = tuple(rng.normal(size=3) + 1j * rng.normal(size=3))
            f = TestFunction("polynomial", zs, 0.5)
            m = int(rng.integers(1, 7))
            assert abs(abs(product_function_eval(f, 0.0, m)) - abs(f(0.0)) ** m) <= 1e-12 * max(1, abs(f(0.0)) ** m)

    def test_invalid(self):
        with pytest.raises(InvalidM):
            product_function_eval(TestFunction(), 1.0, 0)


class TestMeasure:
    def test_constant(self, stock):
        inst, _ = stock
        eps, M = measure_eps_M(inst.domain, 0j, 1.0, 0.02, TestFunction("polynomial", (), 0.7))
        assert eps == pytest.approx(0.7) and M == pytest.approx(0.7)

    def test_band_decreases(self):
        # Delta_{1/2}(1/2) touches the unit circle only at the zero z = 1
        dom = make_unit_disk(1024)
        f = TestFunction("polynomial", (1.0,))
        vals = [measure_eps_M(dom, 0.5, 0.5, b, f)[0] for b in (0.02, 0.005, 0.001)]
        assert vals[0] > vals[1] > vals[2]
        assert vals[2] < 0.05

    def test_stock_separates(self, stock):
        inst, _ = stock
        eps, M = measure_eps_M(inst.domain, 0j, 1.0, inst.shell_band, inst.f_desc)
        assert eps < M

    def test_empty_shell(self):
        dom = make_unit_disk(256)
        with pytest.raises(EmptyShell):
            measure_eps_M(dom, 0j, 0.5, 0.02, TestFunction())


class TestVerify:
    def test_stock(self, stock):
        inst, geo = stock
        rep = verify_lemma(inst, geometry=geo)
        assert rep.ok, rep
        assert rep.abs_f_z0 == pytest.approx(3.0 ** -8, rel=1e-12)
        assert rep.eq3_lhs <= rep.eq3_rhs * 1.05

    def test_constant(self, stock):
        inst, geo = stock
        rep = verify_lemma(with_function(inst, TestFunction("polynomial", (), 2.5)), geometry=geo)
        assert rep.bound == pytest.approx(2.5, rel=1e-12)
        assert rep.conclusion_ok and rep.ok

    def test_short_arc(self, stock):
        inst, _ = stock
        short = LindelofInstance(inst.domain, 0j, 1.0, 2, (0.0, math.pi - 0.2), inst.f_desc)
        with pytest.raises(HypothesisNotMet):
            verify_lemma(short)

    def test_arc_meets_domain(self, stock):
        inst, _ = stock
        # m = 1 needs the whole circle, which passes through the domain
        bad = LindelofInstance(inst.domain, 0j, 1.0, 1, (0.0, 2 * math.pi), inst.f_desc)
        with pytest.raises(HypothesisNotMet):
            verify_lemma(bad)

    def test_random_functions(self, stock):
        inst, geo = stock
        fns = random_test_functions(inst, 20, seed=3)
        assert len({f.zeros for f in fns}) == 20
        for f in fns:
            assert verify_lemma(with_function(inst, f), geometry=geo).conclusion_ok

    def test_report_json_fields(self, stock):
        inst, geo = stock
        d = verify_lemma(inst, geometry=geo).to_dict()
        for key in ("eps_hat", "M_hat", "m", "bound", "abs_f_z0", "eq3_lhs", "eq3_rhs", "ok"):
            assert key in d

    def test_two_constants(self, stock):
        inst, geo = stock
        rep = verify_lemma(inst, geometry=geo)
        assert two_constants_check(rep, 0.7, 0.001)
        assert not two_constants_check(rep, 1.0, 0.0) or rep.eps_hat >= rep.abs_f_z0

    def test_sector_domain_errors(self):
        with pytest.raises(ValueError):
            sector_removed_domain(0.0, 1.0, 2.5, 2.0)
        with pytest.raises(ValueError):
            sector_removed_domain(0.0, 7.0, 0.9)


def poisson_measure(a, start, end, n=200001):
    """Harmonic measure of an arc of the unit circle seen from a, by quadrature."""
    th = np.linspace(start, end, n)
    ker = (1 - abs(a) ** 2) / np.abs(np.exp(1j * th) - a) ** 2
    return float(np.trapezoid(ker, th) / (2 * np.pi))


class TestWos:
    def test_closed_form_value(self):
        assert poisson_measure(0.5j, 0.0, math.pi) == pytest.approx(0.7952, abs=1e-4)

    def test_third(self):
        dom = make_unit_disk(256)
        p, se = harmonic_measure_wos(dom, 0j, ArcTarget(0.0, 2 * math.pi / 3), trials=20_000, seed=1)
        assert abs(p - 1 / 3) <= 3 * se

    def test_thread_invariant(self):
        dom = make_unit_disk(128)
        tgt = ArcTarget(0.0, math.pi)
        a = harmonic_measure_wos(dom, 0.5j, tgt, trials=9000, seed=4, threads=1)
        b = harmonic_measure_wos(dom, 0.5j, tgt, trials=9000, seed=4, threads=3)
        assert a == b

    def test_warning(self):
        with pytest.warns(RuntimeWarning):
            harmonic_measure_wos(make_unit_disk(64), 0j, ArcTarget(0.0, 1.0), trials=10)

    def test_no_progress(self):
        with pytest.raises(NoProgress):
            harmonic_measure_wos(make_unit_disk(64), 0j, ArcTarget(0.0, 1.0), trials=1000,
                                 absorb_tol=1e-300, step_cap=50)

    def test_outside_start(self):
        with pytest.raises(ValueError):
            harmonic_measure_wos(make_unit_disk(64), 2.0, ArcTarget(0.0, 1.0), trials=1000)

    def test_uniform_exits(self):
        # from the centre the exit angle is uniform: chi-square over 16 bins at 95%
        exits = wos_exit_points(make_unit_disk(1024), 0j, trials=16_000, seed=7)
        counts = np.bincount((np.mod(np.angle(exits), 2 * np.pi) // (2 * np.pi / 16)).astype(int),
                             minlength=16)
        expected = len(exits) / 16
        chi2 = float(((counts - expected) ** 2 / expected).sum())
        assert chi2 < 24.996  # 95% quantile, 15 degrees of freedom

    def test_targets(self):
        t = ArcTarget(3.0, 3.5)
        assert t.contains(np.exp(3.2j)) and not t.contains(np.exp(2.9j))
        wrap = ArcTarget(6.0, 6.5)
        assert wrap.contains(np.exp(0.1j))
        d = DiskTarget(0j, 1.0)
        assert d.contains(1.0) and not d.contains(1.01)

    def test_shell_target(self, stock):
        inst, _ = stock
        t = shell_target(inst)
        assert t.center == 0 and t.radius == 1.0
