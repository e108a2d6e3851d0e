import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from shapereg import (
    ConvexOnDesign,
    InvalidArgument,
    Isotonic,
    Unimodal,
    UnsupportedOperation,
    count_affine_pieces,
    count_constant_pieces,
    distance_to_affine,
    is_member,
    project,
    r_constant,
    regrets,
    total_variation,
)
from shapereg.experiments import design_equispaced

from . import oracles


class TestTotalVariation:
    def test_values(self):
        assert total_variation([1, 3, 2]) == 2
        assert total_variation([4, 4, 4]) == 0
        assert total_variation([0.5, 1.0, 2.5]) == 2.0

    def test_empty(self):
        with pytest.raises(InvalidArgument):
            total_variation([])


class TestConstantPieces:
    @pytest.mark.parametrize(
        "u, k, boundaries",
        [([1, 1, 2, 2, 2], 2, (0, 2)), ([5], 1, (0,)), ([3, 1, 1, 4], 3, (0, 1, 3))],
    )
    def test_examples(self, u, k, boundaries):
        dec = count_constant_pieces(u)
        assert dec.count == k
        assert dec.boundaries == boundaries
        assert sum(dec.sizes(len(u))) == len(u)

    def test_tolerance(self):
        assert count_constant_pieces([1.0, 1.0 + 1e-12, 1.0]).count == 1
        assert count_constant_pieces([1.0, 1.0 + 1e-6, 1.0]).count == 3


class TestAffinePieces:
    def test_affine(self):
        x = np.array([0.0, 0.5, 2.0, 3.0])
        assert count_affine_pieces(3 * x - 1, x).count == 1

    def test_one_kink(self):
        assert count_affine_pieces([0, 0, 1, 2], np.arange(4.0)).count == 2

    def test_abs(self):
        x = np.linspace(-2, 2, 5)
        assert count_affine_pieces(np.abs(x), x).count == 2

    @pytest.mark.parametrize("n", [1, 2])
    def test_short(self, n):
        assert count_affine_pieces(np.ones(n), np.arange(float(n))).count == 1

    def test_mismatch(self):
        with pytest.raises(InvalidArgument):
            count_affine_pieces([1.0, 2.0, 3.0], [0.0, 1.0])

    def test_minimal_partition_n4(self):
        # smallest number of affine runs over all partitions of 4 points
        x = np.arange(4.0)
        u = np.array([0.0, 0.0, 1.0, 2.0])
        best = None
        for cuts in range(8):
            edges = [0] + [i for i in (1, 2, 3) if cuts >> (i - 1) & 1] + [4]
            ok = True
            for s, e in zip(edges, edges[1:]):
                if e - s > 2:
                    coef = np.polyfit(x[s:e], u[s:e], 1)
                    ok &= np.allclose(np.polyval(coef, x[s:e]), u[s:e])
            if ok:
                best = len(edges) - 1 if best is None else min(best, len(edges) - 1)
        assert count_affine_pieces(u, x).count == best == 2


class TestDistanceToAffine:
    def test_affine(self):
        assert distance_to_affine(np.arange(7.0) * 2 + 1) <= 1e-15
        assert r_constant(np.arange(7.0), 0.3) == 0.3

    def test_tent(self):
        expected = math.sqrt(((1 / 3) ** 2 + (2 / 3) ** 2 + (1 / 3) ** 2) / 3)
        assert_allclose(distance_to_affine([0.0, 1.0, 0.0]), expected, rtol=1e-12)

    def test_design_aware(self):
        x = np.array([0.0, 1.0, 10.0])
        assert distance_to_affine(2 * x, x) <= 1e-12
        assert distance_to_affine(2 * x) > 1.0

    def test_clamp(self):
        assert r_constant([0.0, 1.0, 0.0], 5.0) == 5.0

    def test_sigma(self):
        with pytest.raises(InvalidArgument):
            r_constant([0.0, 1.0], 0.0)


class TestMembership:
    def test_examples(self):
        assert is_member(Isotonic(3), [1, 2, 2])
        assert is_member(ConvexOnDesign([-0.5, -0.25, -0.125]), [0, 1, 3])
        assert not is_member(Isotonic(3), [0, 1, 0])

    def test_valley(self):
        assert is_member(Unimodal(5), [3, 1, 1, 2, 5])
        assert not is_member(Unimodal(3), [0, 1, 0])

    def test_mismatch(self):
        with pytest.raises(InvalidArgument):
            is_member(Isotonic(2), [1, 2, 3])


class TestRegrets:
    def test_projection(self):
        mu = np.array([1.0, 0.0, 2.0, 1.5])
        cone = Isotonic(4)
        rep = regrets(project(mu, cone).fit, mu, cone)
        assert abs(rep.r1) <= 1e-15
        assert rep.proj_dist_sq <= 1e-30

    def test_well_specified(self):
        mu = np.array([0.0, 1.0, 1.0, 3.0])
        rep = regrets(mu, mu, Isotonic(4))
        assert rep.r1 == rep.r2 == rep.proj_dist_sq == 0.0

    def test_sandwich_brute_force(self):
        rng = np.random.default_rng(11)
        for _ in range(50):
            n = int(rng.integers(2, 7))
            x = np.sort(rng.uniform(size=n)) + np.arange(n)
            mu = np.sin(3 * np.arange(n))
            y = mu + rng.normal(size=n)
            for cone, rows in ((Isotonic(n), oracles.isotonic_rows(n)), (ConvexOnDesign(x), oracles.convex_rows(x))):
                fit = oracles.project_polyhedral(y, rows)[0]
                fit = project(fit, cone).fit  # snap onto the cone
                assert regrets(fit, mu, cone).sandwich_holds()

    def test_unimodal_unsupported(self):
        with pytest.raises(UnsupportedOperation):
            regrets([1.0, 0.0, 1.0], [1.0, 0.0, 1.0], Unimodal(3))

    def test_infeasible(self):
        with pytest.raises(InvalidArgument):
            regrets([1.0, 0.0], [0.0, 0.0], Isotonic(2))

    def test_design_cone(self):
        cone = ConvexOnDesign(design_equispaced(5))
        mu = np.array([0.0, 2.0, 0.0, 2.0, 0.0])
        rep = regrets(project(mu, cone).fit, mu, cone)
        assert abs(rep.r2) <= 1e-12
