"""Tests for the slab constructions, schedules, and the Moran sub-construction."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ccfractal import (
    CustomSchedule,
    Example1Schedule,
    Example2Schedule,
    MoranSet,
    Slab,
    build_construction,
    enumerate_cylinders,
    heisenberg_spec,
    ifs_map_apply,
    attractor_box,
    moran_branch_sequence,
    schedule_params,
    subdivide,
    vertical_factor_set,
)
from ccfractal.errors import BudgetError, ConstructionError, InputError
from ccfractal.fractal import _map_affine, map_symbols, piece_budget

H1 = heisenberg_spec(1)

ROOT = Slab(x_intervals=((0.0, 1.0),), t_interval=(0.0, 1.0), label="root")


class TestSubdivide:
    def test_count_and_parity(self):
        children = subdivide(ROOT, 2, 0.1)
        assert len(children) == 4
        assert [c.label for c in children] == ["c", "d", "c", "d"]

    def test_geometry(self):
        children = subdivide(ROOT, 1, 0.25)
        low, high = children
        assert low.t_interval == (0.0, 0.25)  # bottom of the parent side
        assert high.t_interval == (0.75, 1.0)  # top
        assert low.h == pytest.approx(0.5)

    def test_same_type_no_shared_face_2d(self):
        root2 = Slab(x_intervals=((0.0, 1.0), (0.0, 1.0)), t_interval=(0.0, 1.0), label="root")
        children = subdivide(root2, 1, 0.1)
        assert len(children) == 4
        ctype = [c for c in children if c.label == "c"]
        # the two bottom cells sit on the diagonal: both x-offsets differ
        (a, b) = ctype
        assert a.x_intervals[0] != b.x_intervals[0]
        assert a.x_intervals[1] != b.x_intervals[1]

    def test_rejects_tall_children(self):
        with pytest.raises(ConstructionError):
            subdivide(ROOT, 1, 0.6)  # 2 * lam * L > side

    def test_rejects_unequal_sides(self):
        bad = Slab(x_intervals=((0.0, 1.0), (0.0, 0.5)), t_interval=(0.0, 1.0), label="root")
        with pytest.raises(InputError):
            subdivide(bad, 1, 0.1)


class TestSchedules:
    def test_doubly_exponential_closed_form(self):
        # h_k = 2^-2^k, v_k = h_k^2
        for k in (1, 2, 3):
            _, _, h, v = schedule_params(Example1Schedule(1), k)
            assert h == pytest.approx(2.0 ** -(2**k))
            assert v == pytest.approx(h * h)

    def test_example1_level1(self):
        N, lam, h, v = schedule_params(Example1Schedule(1), 1)
        assert (N, lam, h, v) == (1, 1.0 / 8.0, 1.0 / 4.0, 1.0 / 16.0)

    def test_dyadic_switch_point(self):
        # M=2, m=1: lambda switches once 2^k > 136, i.e. at k = 8
        sched = Example2Schedule(2.0, 1)
        assert sched.raw(7)[1] == 0.5
        N, lam, h, v = schedule_params(sched, 8)
        assert h == pytest.approx(2.0**-9)
        assert v == pytest.approx(68.0 * 4.0**-8)

    def test_dyadic_halving_tail(self):
        sched = Example2Schedule(2.0, 1)
        _, _, _, v8 = schedule_params(sched, 8)
        _, _, _, v9 = schedule_params(sched, 9)
        assert v9 == pytest.approx(v8 / 4.0)

    def test_custom_schedule_exhausted(self):
        sched = CustomSchedule(((1, 0.25),), 1)
        with pytest.raises(InputError):
            schedule_params(sched, 2)

    def test_requires_m_bigger_than_1_rejected(self):
        with pytest.raises(InputError):
            Example2Schedule(1.0, 1)


class TestBuildConstruction:
    def test_piece_counts(self):
        con1 = build_construction(H1, Example1Schedule(1), 1)
        con3 = build_construction(H1, Example1Schedule(1), 3)
        assert len(con1.slabs) == 4
        assert len(con3.slabs) == 256

    def test_levels_recorded(self):
        con = build_construction(H1, Example1Schedule(1), 2)
        assert con.h_levels[0] == 0.5
        assert con.h_levels[2] == pytest.approx(2.0**-4)
        assert con.v_levels[2] == pytest.approx(2.0**-8)

    def test_nested_in_unit_box(self):
        con = build_construction(H1, Example2Schedule(2.0, 1), 4)
        boxes = con.boxes_ambient()
        assert np.all(boxes[:, :, 0] >= -1e-12)
        assert np.all(boxes[:, :, 1] <= 1.0 + 1e-12)

    def test_budget_enforced(self):
        with pytest.raises(BudgetError):
            build_construction(H1, Example1Schedule(1), 3, budget=100)

    def test_sample_deterministic(self):
        con = build_construction(H1, Example1Schedule(1), 2)
        a, wa = con.sample(100, seed=5)
        b, wb = con.sample(100, seed=5)
        np.testing.assert_array_equal(a, b)
        np.testing.assert_array_equal(wa, wb)

    def test_samples_inside_slabs(self):
        con = build_construction(H1, Example1Schedule(1), 2)
        pts, _ = con.sample(500, seed=5)
        boxes = con.boxes_ambient()
        inside = (
            (pts[:, None, :] >= boxes[None, :, :, 0] - 1e-12)
            & (pts[:, None, :] <= boxes[None, :, :, 1] + 1e-12)
        ).all(axis=2)
        assert inside.any(axis=1).all()

    def test_embedding_spec_mismatch_rejected(self):
        # an m=2 face needs H^2; H^1 has only one x column available
        with pytest.raises(InputError):
            build_construction(H1, Example1Schedule(2), 1, embedding="heis-xt")

    def test_env_budget_override(self, monkeypatch):
        monkeypatch.setenv("CC_FRACTAL_BUDGET", "123")
        assert piece_budget() == 123


class TestBranchSequence:
    def test_reference_sequence(self):
        assert moran_branch_sequence((2, 1), 2.5, 8) == (2, 1, 1, 2, 1, 2, 1, 2)

    def test_degenerate_endpoints(self):
        assert moran_branch_sequence((2, 1), 2.0, 5) == (2, 1, 1, 1, 1)

    @given(s=st.floats(2.0, 3.0), T=st.integers(1, 30))
    @settings(max_examples=60, deadline=None)
    def test_first_is_two_and_values_binary(self, s, T):
        seq = moran_branch_sequence((2, 1), s, T)
        assert len(seq) == T
        assert seq[0] == 2
        assert set(seq) <= {1, 2}

    def test_out_of_range_s(self):
        with pytest.raises(InputError):
            moran_branch_sequence((2, 1), 3.5, 4)


class TestContractionMaps:
    def test_affine_matches_group_formula(self):
        rng = np.random.Generator(np.random.Philox(key=21))
        for a1, a2 in map_symbols(2, 1)[:6]:
            A, b = _map_affine(H1, np.array(a1, float), np.array(a2, float))
            for p in rng.standard_normal((5, 3)):
                np.testing.assert_allclose(
                    A @ p + b, ifs_map_apply(H1, a1, a2, p), atol=1e-12
                )

    def test_contraction_ratio(self):
        # first-layer displacement halves exactly
        p = np.array([0.2, 0.8, -1.0])
        q = np.array([-0.4, 0.1, 2.0])
        fp = ifs_map_apply(H1, (1, 0), (2,), p)
        fq = ifs_map_apply(H1, (1, 0), (2,), q)
        assert np.linalg.norm((fp - fq)[:2]) == pytest.approx(
            0.5 * np.linalg.norm((p - q)[:2])
        )

    def test_alphabet_order(self):
        symbols = map_symbols(2, 1)
        assert len(symbols) == 16
        assert all(a2 == (0,) for _, a2 in symbols[:4])  # horizontal block first

    def test_rejects_bad_symbol(self):
        with pytest.raises(InputError):
            ifs_map_apply(H1, (2, 0), (0,), np.zeros(3))


class TestAttractor:
    def test_box_is_invariant(self):
        box, diam = attractor_box(H1)
        from ccfractal.fractal import _box_hull_step

        maps = [_map_affine(H1, np.array(a1, float), np.array(a2, float))
                for a1, a2 in map_symbols(2, 1)]
        image = _box_hull_step(H1, maps, box)
        assert np.all(image[:, 0] >= box[:, 0] - 1e-9)
        assert np.all(image[:, 1] <= box[:, 1] + 1e-9)
        assert diam > 0

    def test_refinement_shrinks_diam(self):
        _, d5 = attractor_box(H1, iterations=5)
        _, d30 = attractor_box(H1, iterations=30)
        assert d30 <= d5 + 1e-12


class TestCylinders:
    def test_counts(self):
        mo = enumerate_cylinders(H1, 2.5, 2)
        # branch (2, 1): 2^2*4 = 16 then 1*4 = 4 children
        assert mo.branch == (2, 1)
        assert len(mo.boxes) == 64
        assert mo.addresses.shape == (64, 2)

    def test_nesting(self):
        shallow = enumerate_cylinders(H1, 2.5, 1)
        deep = enumerate_cylinders(H1, 2.5, 2)
        # every depth-2 box sits inside its depth-1 parent
        parents = {tuple(a): b for a, b in zip(shallow.addresses, shallow.boxes)}
        for addr, box in zip(deep.addresses, deep.boxes):
            parent = parents[(addr[0],)]
            assert np.all(box[:, 0] >= parent[:, 0] - 1e-9)
            assert np.all(box[:, 1] <= parent[:, 1] + 1e-9)

    def test_diam_bound_halves(self):
        a = enumerate_cylinders(H1, 2.5, 1)
        b = enumerate_cylinders(H1, 2.5, 2)
        assert b.diam_bound == pytest.approx(a.diam_bound / 2.0)

    def test_budget(self):
        with pytest.raises(BudgetError):
            enumerate_cylinders(H1, 2.5, 4, budget=100)

    def test_isinstance_contract(self):
        assert isinstance(enumerate_cylinders(H1, 2.5, 1), MoranSet)


class TestVerticalFactor:
    def test_box_count_tracks_branch(self):
        boxes = vertical_factor_set(1, 2.5, 2, 4)
        # branch (2,1,1,2): 4*1*1*4 = 16 intervals
        assert boxes.shape == (16, 1, 2)

    def test_boxes_inside_invariant_interval(self):
        # the maps y/4 + 3a/4, a <= 3, leave [0, 3] invariant (fixed point 3)
        boxes = vertical_factor_set(1, 2.5, 2, 5)
        assert np.all(boxes[:, :, 0] >= -1e-12)
        assert np.all(boxes[:, :, 1] <= 3.0 + 1e-12)

    def test_lengths_scale(self):
        boxes = vertical_factor_set(1, 2.5, 2, 3)
        lengths = boxes[:, 0, 1] - boxes[:, 0, 0]
        np.testing.assert_allclose(lengths, 2.0 * 4.0**-3)

    def test_requires_supercritical_s(self):
        with pytest.raises(InputError):
            vertical_factor_set(1, 2.0, 2, 3)
