"""End-to-end acceptance suite.

Each test covers one numbered acceptance criterion and prints a single
PASS/FAIL line (bypassing capture) so the run leaves an auditable record.
Tolerances and workloads are pinned; do not loosen them.
"""

import random
from fractions import Fraction

import numpy as np
import pytest
import sympy as sp

from supersle.grassmann import EXACT, FLOAT, GrassmannNumber, make_generator
from supersle.ns_algebra import (
    G,
    L,
    ModuleParams,
    VermaVector,
    is_singular,
    is_singular_level2,
    params_from_kappa_ns,
    params_from_kappa_virasoro,
    singular_condition_residual,
    singular_vector_32,
    virasoro_level2_vector,
)
from supersle.superfield import LaurentSuperfunction, SuperPoint, is_superconformal
from supersle.sde import (
    BrownianPath,
    closed_form_32_map,
    closed_form_32alt_map,
    conservation_check_32,
    convergence_32,
    convergence_32alt,
    loewner_flow,
    mc_martingale,
    supertrace_hull,
)
from supersle.walk import (
    WalkSpec,
    beta_commutator,
    coefficient_route_commutator,
    diffusion_from_spec,
    drift_from_spec,
    drift_vector,
    reduced_drift_vector,
    spec_32,
    spec_32alt,
)

HALF = Fraction(1, 2)
KAPPAS = (sp.Rational(1, 2), sp.Integer(1), sp.Integer(2), sp.Integer(3),
          sp.Integer(4))


# One line per criterion; the conftest terminal-summary hook echoes these at
# the end of the run so they survive output capturing.
RESULTS = []


class _Criterion:
    def __init__(self, num, desc):
        self.num, self.desc = num, desc

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc, tb):
        verdict = "FAIL" if exc_type else "PASS"
        line = f"criterion {self.num:2d}: {verdict} - {self.desc}"
        RESULTS.append(line)
        print(line, flush=True)
        return False


def units_32(ring=EXACT):
    y = make_generator(0, 4, ring) * make_generator(1, 4, ring)
    eta = make_generator(2, 4, ring)
    return y, eta


def test_criterion_01_exact_singular_vector_reproduction():
    with _Criterion(1, "drift vector equals -kappa*y*eta*chi exactly"):
        y, eta = units_32()
        for kappa in KAPPAS:
            params = params_from_kappa_ns(kappa)
            v = drift_vector(spec_32(kappa), params)
            chi = singular_vector_32(params)
            assert v == chi.lmul((y * eta) * -kappa)
            assert not v.is_zero()


def test_criterion_02_two_route_agreement():
    with _Criterion(2, "both walks give the same drift vector (odd-unit "
                       "reduced coefficients)"):
        for kappa in KAPPAS:
            params = params_from_kappa_ns(kappa)
            r1 = reduced_drift_vector(spec_32(kappa), params)
            r2 = reduced_drift_vector(spec_32alt(kappa), params)
            assert r1 == r2
            assert r1  # non-trivial vector


def test_criterion_03_condition_equivalence_sweep():
    with _Criterion(3, "is_singular(chi) iff 12D=(2D+1)(3D+c) on the 357-"
                       "point rational grid"):
        pairs = 0
        for dk in range(-8, 9):
            for ck in range(-10, 11):
                params = ModuleParams(sp.Rational(ck, 2), sp.Rational(dk, 4))
                chi = singular_vector_32(params)
                ok, _ = is_singular(chi)
                residual = singular_condition_residual(params)
                assert ok == (sp.simplify(residual) == 0)
                pairs += 1
        assert pairs == 357


def test_criterion_04_virasoro_baseline():
    with _Criterion(4, "level-2 Virasoro vector singular for 20 matched "
                       "kappa, not for 20 detuned pairs"):
        for k in range(1, 21):
            kappa = sp.Rational(k, 3)
            v = virasoro_level2_vector(kappa)
            ok, _ = is_singular_level2(v)
            assert ok
        for k in range(1, 21):
            kappa = sp.Rational(k, 3)
            p = params_from_kappa_virasoro(kappa)
            bad = ModuleParams(p.c + sp.Rational(k, 7), p.delta,
                               p.level_cutoff)
            v = VermaVector(bad, {(L(-2),): sp.Integer(-2),
                                  (L(-1), L(-1)): sp.Rational(kappa) / 2})
            ok, _ = is_singular_level2(v)
            assert not ok


def test_criterion_05_generic_translation_fidelity():
    with _Criterion(5, "spec-to-SDE translation reproduces the hand-coded "
                       "coefficient superfunctions"):
        for kappa in (sp.Rational(1, 2), 1, 2, 4):
            sk = sp.sqrt(kappa)

            y, eta = units_32()
            ((zp, tp),) = diffusion_from_spec(spec_32(kappa))
            assert zp == LaurentSuperfunction({0: -(y * sk)}, {0: -(eta * sk)})
            assert tp == LaurentSuperfunction({0: -(eta * sk)}, {})
            zp0, tp0 = drift_from_spec(spec_32(kappa))
            assert zp0 == LaurentSuperfunction({}, {-1: y * eta})
            assert tp0 == LaurentSuperfunction({-1: y * eta}, {})

            one = GrassmannNumber.scalar(1, 2)
            eta = make_generator(0, 2)
            p1, p2 = diffusion_from_spec(spec_32alt(kappa))
            assert p1[0] == LaurentSuperfunction({0: -(one * sk)},
                                                 {0: -(eta * sk)})
            assert p1[1] == LaurentSuperfunction({0: -(eta * sk)}, {})
            assert p2[0] == LaurentSuperfunction(
                {0: GrassmannNumber.scalar(-sp.I * sk, 2)}, {})
            assert p2[1] == LaurentSuperfunction()
            zp0, tp0 = drift_from_spec(spec_32alt(kappa))
            assert zp0 == LaurentSuperfunction({}, {-1: eta})
            assert tp0 == LaurentSuperfunction({-1: eta}, {})


def _random_spec(rnd, ring=EXACT):
    n = 4
    y_unit = make_generator(0, n, ring) * make_generator(1, n, ring)
    eta_unit = make_generator(2, n, ring)

    def pair():
        y = y_unit * sp.Rational(rnd.randint(-3, 3), rnd.randint(1, 3)) \
            + GrassmannNumber.scalar(rnd.randint(-2, 2), n, ring)
        eta = eta_unit * sp.Rational(rnd.randint(-3, 3), rnd.randint(1, 3))
        return (y, eta)

    table = {nn: pair() for nn in rnd.sample(range(-3, 3), rnd.randint(1, 2))}
    return WalkSpec(1, {}, (table,))


def test_criterion_06_central_identity():
    with _Criterion(6, "commutator route equals coefficient-function route "
                       "for 20 random specs"):
        rnd = random.Random(13)
        delta = sp.Symbol("Delta")
        for _ in range(20):
            spec = _random_spec(rnd)
            for phi in (
                LaurentSuperfunction(
                    {rnd.randint(0, 3): GrassmannNumber.scalar(1, 4)}, {}),
                LaurentSuperfunction(
                    {}, {rnd.randint(0, 3): GrassmannNumber.scalar(1, 4)}),
            ):
                lhs = beta_commutator(spec, 0, delta, phi)
                rhs = coefficient_route_commutator(spec, 0, delta, phi)
                assert lhs == rhs


def test_criterion_07_closed_form_conservation():
    with _Criterion(7, "mu*w - theta*z - y*eta*t conserved to 1e-9 on 100 "
                       "paths; body of w constant"):
        init = SuperPoint(GrassmannNumber.scalar(2.0, 4, FLOAT),
                          make_generator(3, 4, FLOAT))
        for seed in range(100):
            path = BrownianPath.sample(1, 1e-3, 1000, seed)
            rep = conservation_check_32(init, path, 3.0)
            assert rep["max_conservation_error"] <= 1e-9
            assert rep["max_body_drift"] <= 1e-9


def test_criterion_08_pathwise_convergence():
    with _Criterion(8, "Euler scheme: exact for the nilpotent-coefficient "
                       "walk; strong order ~1 with decreasing error for "
                       "the two-dimensional walk"):
        dt_list = [1e-2, 1e-3, 1e-4]

        init = SuperPoint(GrassmannNumber.scalar(2.0, 4, FLOAT),
                          make_generator(3, 4, FLOAT))
        rep = convergence_32(2.0, init, 0.1, dt_list, 200, 17)
        assert rep["order"] >= 0.9
        assert rep["exact_scheme"]

        init = SuperPoint(GrassmannNumber.scalar(2.0, 2, FLOAT),
                          make_generator(1, 2, FLOAT))
        rep = convergence_32alt(1.0, init, 0.1, dt_list, 200, 17)
        errs = rep["mean_error"]
        assert errs[0] > errs[1] > errs[2]
        assert errs[2] <= 5e-2


def test_criterion_09_superconformality():
    with _Criterion(9, "closed-form maps exactly superconformal; z^2 "
                       "control map is not"):
        ok, residual = is_superconformal(*closed_form_32_map(2))
        assert ok and residual.is_zero()
        ok, residual = is_superconformal(*closed_form_32alt_map(3))
        assert ok and residual.is_zero()
        zp = LaurentSuperfunction({2: GrassmannNumber.scalar(1, 1)}, {})
        tp = LaurentSuperfunction({}, {0: GrassmannNumber.scalar(1, 1)})
        ok, residual = is_superconformal(zp, tp)
        assert not ok and not residual.is_zero()


def test_criterion_10_monte_carlo_martingale():
    with _Criterion(10, "projected drift within 3 SE for matched weight; "
                        "detuned weight exceeds 5 SE"):
        kappa = 2
        params = params_from_kappa_ns(kappa)
        rep = mc_martingale(spec_32(kappa), params, cutoff=Fraction(7, 2),
                            n_paths=10_000, T=0.25, dt=1e-3, seed=12345)
        assert rep["martingale"]
        assert rep["max_z"] <= 3.0

        bad = ModuleParams(params.c, params.delta + sp.Rational(1, 2),
                           params.level_cutoff)
        rep = mc_martingale(spec_32(kappa), bad, cutoff=Fraction(7, 2),
                            n_paths=10_000, T=0.25, dt=1e-3, seed=12345)
        assert rep["drift_detected"]
        assert rep["max_z"] > 5.0


def test_criterion_11_hull_sanity():
    with _Criterion(11, "hull rasters nest in time on 10 seeds; drift-free "
                        "flow matches sqrt(z^2+4t) to 1e-3"):
        bounds = (-4, 4, -4, 4)
        for seed in range(10):
            rs, _ = supertrace_hull(4.0, 0.5, 1e-3, seed, 64, bounds=bounds)
            rt, _ = supertrace_hull(4.0, 1.0, 1e-3, seed, 64, bounds=bounds)
            assert np.all(rt.occupancy[rs.occupancy])

        # For a constant driving function only the imaginary axis gets
        # swallowed; keep x != 0 so no grid point straddles the horizon.
        xs = np.linspace(-2, 2, 8)
        ys = np.linspace(0.5, 2, 4)
        grid = (xs[None, :] + 1j * ys[:, None]).ravel()
        res = loewner_flow(0.0, grid, 1.0, 1e-4, 1)
        exact = np.sqrt(grid ** 2 + 4.0)
        exact = np.where(exact.imag < 0, -exact, exact)
        alive = ~res.swallowed
        assert alive.any()
        assert np.max(np.abs(res.final_g[alive] - exact[alive])) < 1e-3
