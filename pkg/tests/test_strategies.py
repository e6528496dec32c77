import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mixphase import network as nn
from mixphase import strategies as sg
from mixphase.datasets import gen_two_gaussians


class TestEnpActive:
    def test_fixed_window_half_open(self):
        w = sg.EnpWindow(mode="fixed_epochs", end_epoch=10)
        assert sg.enp_active(w, 5)
        assert not sg.enp_active(w, 10)

    def test_threshold_latches_after_crossing(self):
        w = sg.EnpWindow(mode="accuracy_threshold", acc_threshold=0.5)
        assert not sg.enp_active(w, 3, [0.2, 0.4, 0.6])
        # no re-entry on later dips
        assert not sg.enp_active(w, 5, [0.2, 0.4, 0.6, 0.3, 0.2])

    def test_active_at_training_start(self):
        w = sg.EnpWindow(mode="accuracy_threshold", acc_threshold=0.5)
        assert sg.enp_active(w, 0, [])

    def test_missing_val_entries_ignored(self):
        w = sg.EnpWindow(mode="accuracy_threshold", acc_threshold=0.5)
        assert sg.enp_active(w, 2, [None, 0.4])

    def test_window_validation(self):
        with pytest.raises(ValueError):
            sg.EnpWindow(mode="fixed_epochs", end_epoch=-1)
        with pytest.raises(ValueError):
            sg.EnpWindow(mode="accuracy_threshold", acc_threshold=1.5)
        with pytest.raises(ValueError):
            sg.EnpWindow(mode="nope")

    def test_fractional_window(self):
        w = sg.EnpWindow(mode="fixed_epochs", end_epoch=0.5)
        assert sg.enp_active(w, 0)
        assert not sg.enp_active(w, 1)
        assert sg.enp_fraction(w, 0) == 0.5
        assert sg.enp_fraction(w, 1) == 0.0


class TestEffectiveAlpha:
    def test_pause(self):
        sched = sg.MixupSchedule(2.0, None, sg.EnpWindow("fixed_epochs", end_epoch=10))
        assert sg.effective_alpha(sched, 5) is None
        assert sg.effective_alpha(sched, 12) == 2.0

    def test_boost(self):
        sched = sg.MixupSchedule(0.8, 2.0, sg.EnpWindow("fixed_epochs", end_epoch=20))
        assert sg.effective_alpha(sched, 3) == 2.0
        assert sg.effective_alpha(sched, 25) == 0.8

    def test_degenerate_schedule_constant(self):
        sched = sg.MixupSchedule(1.0, 1.0, sg.EnpWindow("fixed_epochs", end_epoch=7))
        assert all(sg.effective_alpha(sched, e) == 1.0 for e in range(30))

    def test_totality_and_window_confinement(self):
        sched = sg.MixupSchedule(2.0, None, sg.EnpWindow("fixed_epochs", end_epoch=4))
        for e in range(50):
            alpha = sg.effective_alpha(sched, e)
            if sg.enp_active(sched.window, e):
                assert alpha is None
            else:
                assert alpha == 2.0

    def test_alpha_validation(self):
        with pytest.raises(ValueError):
            sg.MixupSchedule(-1.0, None, sg.EnpWindow())


class TestTeacherLosses:
    def test_map_is_total(self):
        data = gen_two_gaussians(10, 4, 2.0, 1.0, seed=0)
        rng = np.random.default_rng(0)
        model = nn.init_params((4, 1), ("sigmoid",), rng)
        losses = sg.record_teacher_losses(model, data)
        assert set(losses) == set(data.ids.tolist())

    def test_perfect_sample_has_negligible_loss(self):
        model = nn.ModelParams([nn.Layer(np.array([[40.0, 0.0]]), np.zeros(1), "sigmoid")])
        data_X = np.array([[1.0, 0.0]])
        from mixphase.datasets import Dataset

        data = Dataset(data_X, np.array([1]), np.array([0]), class_count=2)
        losses = sg.record_teacher_losses(model, data)
        assert losses[0] <= nn.EPS_CLAMP

    def test_invariant_to_ordering(self):
        data = gen_two_gaussians(16, 3, 1.0, 1.0, seed=1)
        rng = np.random.default_rng(1)
        model = nn.init_params((3, 1), ("sigmoid",), rng)
        base = sg.record_teacher_losses(model, data)
        perm = np.random.default_rng(2).permutation(len(data))
        shuffled = data.subset(data.ids[perm])  # subset preserves original order
        again = sg.record_teacher_losses(model, shuffled)
        for i in data.ids.tolist():
            assert again[i] == pytest.approx(base[i], abs=1e-12)


class TestSelectEasySubset:
    def test_smallest_two(self):
        out = sg.select_easy_subset({0: 3.0, 1: 1.0, 2: 2.0, 3: 4.0}, 0.5)
        assert out.kept_ids == frozenset({1, 2})

    def test_keep_all(self):
        out = sg.select_easy_subset({0: 3.0, 1: 1.0}, 1.0)
        assert out.kept_ids == frozenset({0, 1})

    def test_ceiling_count(self):
        losses = {i: float(i) for i in range(1000)}
        out = sg.select_easy_subset(losses, 0.85)
        assert len(out.kept_ids) == 850

    def test_tie_break_ascending_id(self):
        out = sg.select_easy_subset({5: 1.0, 2: 1.0, 9: 1.0}, 1 / 3)
        assert out.kept_ids == frozenset({2})

    def test_rejects_bad_inputs(self):
        with pytest.raises(ValueError):
            sg.select_easy_subset({}, 0.5)
        with pytest.raises(ValueError):
            sg.select_easy_subset({0: 1.0}, 0.0)

    def test_order_independence(self):
        items = [(i, float((i * 7) % 11)) for i in range(40)]
        a = sg.select_easy_subset(dict(items), 0.4)
        b = sg.select_easy_subset(dict(reversed(items)), 0.4)
        assert a.kept_ids == b.kept_ids

    @given(
        k1=st.floats(0.05, 0.95),
        k2=st.floats(0.05, 0.95),
    )
    @settings(max_examples=60, deadline=None)
    def test_monotone_nesting(self, k1, k2):
        losses = {i: float((i * 13) % 17) for i in range(50)}
        lo, hi = sorted([k1, k2])
        a = sg.select_easy_subset(losses, lo)
        b = sg.select_easy_subset(losses, hi)
        assert a.kept_ids <= b.kept_ids


class TestTrainingView:
    def setup_method(self):
        self.data = gen_two_gaussians(500, 4, 1.0, 1.0, seed=0)
        losses = {int(i): float(i) for i in self.data.ids}
        self.easy = sg.select_easy_subset(losses, 0.85)
        self.window = sg.EnpWindow("fixed_epochs", end_epoch=5)

    def test_restriction_inside_window(self):
        view = sg.training_view(2, self.window, self.data, self.easy)
        assert len(view) == 850

    def test_full_restoration_after_window(self):
        view = sg.training_view(5, self.window, self.data, self.easy)
        assert len(view) == 1000
        assert sorted(view.ids.tolist()) == sorted(self.data.ids.tolist())

    def test_disabled_policy_is_identity(self):
        view = sg.training_view(0, self.window, self.data, None)
        assert view is self.data

    def test_unknown_ids_rejected(self):
        bad = sg.EasySubset(frozenset({10_000}), 0.5)
        with pytest.raises(ValueError):
            sg.training_view(0, self.window, self.data, bad)

    def test_conservation_every_post_window_epoch(self):
        for epoch in range(5, 12):
            view = sg.training_view(epoch, self.window, self.data, self.easy)
            assert np.array_equal(view.ids, self.data.ids)
