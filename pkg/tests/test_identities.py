"""Integral identity and inequality checks.

Centered spheres make every integrand constant, so identities reduce to
closed forms that must hold to rounding.  The classical support-function
identity is stronger still: it holds exactly for any positive radial
profile, smooth or not, because the integrand's quadrature weight cancels
the normal tilt factor pointwise.  Perturbed shapes exercise the strict
inequality sides and the precondition guards.
"""

import json
import math

import numpy as np
import pytest

from hkverify.errors import PreconditionError
from hkverify.hypersurface import RadialGraph, build_geometry, gen_perturbed_sphere
from hkverify.identities import (
    alexandrov_diagnostic,
    gauss_bonnet,
    hk_brendle,
    hk_shifted,
    minkowski_classical,
    minkowski_shifted,
    resolve_tolerance,
    run_verification,
    thread_count,
    tolerance_table,
)
from hkverify import symfun


class TestSphereClosedForms:
    # constant integrands: both sides collapse to closed forms times the
    # same quadrature area, so agreement is machine-level

    def test_all_default_checks_machine_exact(self, surface):
        g, geom = surface("sphere", radius=1.0, grid=(64, 128))
        rep = run_verification(g, geom=geom)
        assert rep.all_passed()
        for r in rep.results:
            assert abs(r.rel_residual) <= 1e-13, r

    def test_circle_defaults_machine_exact(self, surface):
        g, geom = surface("sphere", radius=1.0, n=1, grid=256)
        rep = run_verification(g, geom=geom)
        assert rep.all_passed()
        names = [r.name for r in rep.results]
        assert "gauss-bonnet" in names
        for r in rep.results:
            assert abs(r.rel_residual) <= 1e-13, r

    def test_shifted_lhs_closed_form(self, surface):
        R = 1.0
        g, geom = surface("sphere", radius=R, grid=(64, 128))
        r = minkowski_shifted(geom, eps=1.0, k=1)
        want = math.exp(-R) * geom.area()
        assert r.lhs == pytest.approx(want, rel=1e-13)
        assert r.rhs == pytest.approx(want, rel=1e-13)

    def test_classical_lhs_closed_form(self, surface):
        R = 1.0
        g, geom = surface("sphere", radius=R, grid=(64, 128))
        r = minkowski_classical(geom, g)
        assert r.lhs == pytest.approx(math.sinh(R) * geom.area(), rel=1e-13)

    def test_unshifted_k1_ties_to_classical(self, surface):
        # eps = 0, k = 1 integrates V; times tanh R it must reproduce the
        # support integral on a centered sphere
        R = 1.0
        g, geom = surface("sphere", radius=R, grid=(64, 128))
        r0 = minkowski_shifted(geom, eps=0.0, k=1)
        rc = minkowski_classical(geom, g)
        assert r0.lhs * math.tanh(R) == pytest.approx(rc.lhs, rel=1e-13)

    def test_shifted_e2_closed_form(self, surface):
        R = 1.0
        _, geom = surface("sphere", radius=R, grid=(64, 128))
        want = (math.cosh(R) / math.sinh(R) - 1.0) ** 2
        e2 = symfun.e_m_values(geom.kappa_shifted, 2)
        assert np.max(np.abs(e2 - want)) <= 1e-13 * want

    def test_arbitrary_eps_exact_on_sphere(self, surface):
        _, geom = surface("sphere", radius=1.5, grid=(32, 64))
        for eps in (-0.7, 0.0, 0.3, 1.0, 2.9):
            for k in (1, 2):
                r = minkowski_shifted(geom, eps=eps, k=k)
                assert abs(r.rel_residual) <= 1e-13, r


class TestClassicalExactness:
    def test_white_noise_profiles(self, rng):
        # quadrature weight times support function is derivative-free, so
        # the identity survives arbitrary rough profiles at rounding level
        for _ in range(20):
            for n, shape in ((1, (32,)), (2, (16, 32))):
                rho = 0.5 + 2.0 * rng.random(shape)
                g = RadialGraph(n, rho)
                r = minkowski_classical(build_geometry(g), g)
                assert abs(r.rel_residual) <= 1e-14
                assert r.passed


class TestInequalities:
    def test_brendle_strict_deficit(self, surface):
        g, geom = surface("perturbed", radius=1.0, amp=0.05, mode=(2, 0),
                          grid=(128, 256))
        r = hk_brendle(geom, g)
        assert r.passed
        assert r.residual > 10.0 * r.tolerance
        assert r.metadata["equality"] is False
        assert r.metadata["H_min"] > 0.0

    def test_shifted_strict_deficit(self, surface):
        g, geom = surface("perturbed", radius=1.0, amp=0.05, mode=(2, 0),
                          grid=(128, 256))
        r = hk_shifted(geom, g)
        assert r.passed
        assert r.residual > 10.0 * r.tolerance

    def test_equality_flag_on_sphere(self, surface):
        g, geom = surface("sphere", radius=1.0, grid=(64, 128))
        assert hk_brendle(geom, g).metadata["equality"] is True
        assert hk_shifted(geom, g).metadata["equality"] is True

    def test_ellipse_deficits(self, surface):
        g, geom = surface("perturbed", radius=1.0, amp=0.1, mode=2, n=1,
                          grid=256)
        for fn in (hk_brendle, hk_shifted):
            r = fn(geom, g)
            assert r.passed and r.residual > 0.0


class TestPreconditions:
    # validated generators refuse these shapes, so the precondition paths
    # are reached through raw profiles

    def test_shifted_needs_h_above_n(self):
        theta = np.arange(128) * (2 * np.pi / 128)
        g = RadialGraph(1, 1.0 + 0.15 * np.cos(2 * theta))
        geom = build_geometry(g)
        with pytest.raises(PreconditionError) as exc:
            hk_shifted(geom, g)
        assert exc.value.check == "hk-shifted"
        assert exc.value.node is not None
        # brendle's weaker H > 0 precondition still holds here
        assert hk_brendle(geom, g).passed

    def test_brendle_needs_h_positive(self):
        theta = np.arange(128) * (2 * np.pi / 128)
        g = RadialGraph(1, 1.0 + 0.3 * np.cos(2 * theta))
        geom = build_geometry(g)
        with pytest.raises(PreconditionError) as exc:
            hk_brendle(geom, g)
        assert exc.value.check == "hk-brendle"

    def test_alexandrov_needs_cone(self, surface):
        g, geom = surface("perturbed", radius=1.0, amp=0.08, mode=(4, 0),
                          grid=(48, 96))
        with pytest.raises(PreconditionError) as exc:
            alexandrov_diagnostic(geom, g)
        assert exc.value.check == "alexandrov"
        assert "cone" in str(exc.value)
        assert exc.value.node is not None

    def test_order_ranges(self, surface):
        g2, geom2 = surface("sphere", radius=1.0, grid=(32, 64))
        g1, geom1 = surface("sphere", radius=1.0, n=1, grid=64)
        with pytest.raises(PreconditionError):
            minkowski_shifted(geom2, k=3)
        with pytest.raises(PreconditionError):
            minkowski_shifted(geom2, k=0)
        with pytest.raises(PreconditionError):
            alexandrov_diagnostic(geom1, g1)
        with pytest.raises(PreconditionError) as exc:
            gauss_bonnet(geom2, g2)
        assert exc.value.check == "gauss-bonnet"


class TestAlexandrov:
    def test_sphere_chain(self, surface):
        g, geom = surface("sphere", radius=1.0, grid=(64, 128))
        ratio, slack, umb = alexandrov_diagnostic(geom, g)
        assert ratio.metadata["ek_constant"] is True
        assert ratio.metadata["kind"] == "identity"
        assert abs(ratio.rel_residual) <= 1e-13
        assert slack.passed and abs(slack.lhs) <= slack.tolerance
        assert umb.metadata["umbilic_within_tol"] is True
        assert all(r.passed for r in (ratio, slack, umb))

    def test_perturbed_chain(self, surface):
        g, geom = surface("perturbed", radius=1.0, amp=0.05, mode=(2, 0),
                          grid=(64, 128))
        ratio, slack, umb = alexandrov_diagnostic(geom, g)
        assert ratio.metadata["ek_constant"] is False
        assert ratio.metadata["kind"] == "inequality"
        assert ratio.passed
        # strictly non-umbilic: the mean-ratio slack is strictly positive
        assert slack.lhs > 0.0
        assert umb.lhs > umb.tolerance
        assert umb.metadata["umbilic_within_tol"] is False
        assert umb.passed  # reports never fail


class TestGaussBonnet:
    def test_circle_exact(self, surface):
        g, geom = surface("sphere", radius=1.0, n=1, grid=128)
        r = gauss_bonnet(geom, g)
        assert r.rhs == pytest.approx(2 * math.pi)
        assert abs(r.rel_residual) <= 1e-14

    def test_ellipse(self, surface):
        g, geom = surface("perturbed", radius=1.0, amp=0.1, mode=2, n=1,
                          grid=256)
        r = gauss_bonnet(geom, g)
        assert r.passed


class TestTolerances:
    def test_explicit_tolerance_wins(self, surface):
        _, geom = surface("sphere", radius=1.0, grid=(32, 64))
        assert resolve_tolerance("hk-brendle", geom, 100.0, 1e-5) == 1e-5
        assert resolve_tolerance("hk-brendle", geom, 100.0, 2) == 2.0

    def test_auto_formula(self, surface):
        _, geom = surface("sphere", radius=1.0, grid=(32, 64))
        table = tolerance_table()
        h = geom.resolution
        want = 7.0 * max(table["checks"]["hk-shifted"] * h * h, table["floor_rel"])
        assert resolve_tolerance("hk-shifted", geom, 7.0, "auto") == want

    def test_unknown_check_rejected(self, surface):
        _, geom = surface("sphere", radius=1.0, grid=(32, 64))
        with pytest.raises(KeyError):
            resolve_tolerance("no-such-check", geom, 1.0, "auto")

    def test_floor_guards_exact_cases(self, surface):
        _, geom = surface("sphere", radius=1.0, grid=(32, 64))
        assert resolve_tolerance("hk-brendle", geom, 1.0, None) > 0.0


class TestReportMachinery:
    def test_result_names_unique_and_ordered(self, surface):
        g, geom = surface("sphere", radius=1.0, grid=(32, 64))
        rep = run_verification(g, geom=geom)
        names = [r.name for r in rep.results]
        assert len(names) == len(set(names))
        assert names[0] == "minkowski-classical"
        assert "minkowski-shifted[eps=0,k=1]" in names
        assert "minkowski-shifted[eps=0.5,k=2]" in names

    def test_duplicate_check_name_rejected(self, surface):
        g, geom = surface("sphere", radius=1.0, grid=(32, 64))
        rep = run_verification(g, geom=geom, checks=["hk-brendle"])
        with pytest.raises(ValueError):
            rep.add(rep.results[0])

    def test_unknown_check_rejected(self, surface):
        g, _ = surface("sphere", radius=1.0, grid=(32, 64))
        with pytest.raises(ValueError):
            run_verification(g, checks=["bogus"])

    def test_config_hash_tracks_config(self, surface):
        g, geom = surface("sphere", radius=1.0, grid=(32, 64))
        a = run_verification(g, geom=geom)
        b = run_verification(g, geom=geom)
        c = run_verification(g, geom=geom, tol=1e-3)
        assert a.provenance["config_hash"] == b.provenance["config_hash"]
        assert a.provenance["config_hash"] != c.provenance["config_hash"]

    def test_report_round_trips_as_json(self, surface, tmp_path):
        g, geom = surface("sphere", radius=1.0, n=1, grid=64)
        rep = run_verification(g, geom=geom)
        path = tmp_path / "report.json"
        rep.save(path)
        data = json.loads(path.read_text())
        assert data["surface"]["n"] == 1
        assert all("pass" in c for c in data["checks"])

    def test_threaded_run_matches_serial(self, surface, monkeypatch):
        g, geom = surface("perturbed", radius=1.0, amp=0.05, mode=(2, 0),
                          grid=(32, 64))
        monkeypatch.delenv("HK_THREADS", raising=False)
        serial = run_verification(g, geom=geom)
        monkeypatch.setenv("HK_THREADS", "4")
        assert thread_count() == 4
        threaded = run_verification(g, geom=geom)
        a, b = serial.to_dict(), threaded.to_dict()
        assert [c["name"] for c in a["checks"]] == [c["name"] for c in b["checks"]]
        for ca, cb in zip(a["checks"], b["checks"]):
            assert ca["lhs"] == cb["lhs"] and ca["rhs"] == cb["rhs"]

    def test_thread_count_parsing(self, monkeypatch):
        monkeypatch.delenv("HK_THREADS", raising=False)
        assert thread_count() == 1
        monkeypatch.setenv("HK_THREADS", "abc")
        assert thread_count() == 1
        monkeypatch.setenv("HK_THREADS", "0")
        assert thread_count() == 1


class TestCalibratedFamily:
    # one run_verification sweep per canonical shape; auto tolerances must
    # hold across the whole family

    @pytest.mark.parametrize("kind,kw", [
        ("sphere", dict(radius=0.5, grid=(64, 128))),
        ("sphere", dict(radius=2.0, grid=(64, 128))),
        ("sphere", dict(radius=1.0, offset=0.3, grid=(64, 128))),
        ("perturbed", dict(radius=1.0, amp=0.05, mode=(2, 0), grid=(64, 128))),
        ("perturbed", dict(radius=1.0, amp=0.01, mode=(3, 2), grid=(64, 128))),
        ("sphere", dict(radius=1.0, n=1, grid=256)),
        ("perturbed", dict(radius=1.0, amp=0.1, mode=2, n=1, grid=256)),
    ], ids=["R.5", "R2", "offset", "lobe", "tesseral", "circle", "ellipse"])
    def test_family_passes(self, surface, kind, kw):
        g, geom = surface(kind, **kw)
        rep = run_verification(g, geom=geom)
        assert rep.all_passed(), [repr(r) for r in rep.results if not r.passed]
