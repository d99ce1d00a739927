import math

import numpy as np
import pytest

from fmmlab.videotensor import (
    BaselineKind,
    Perturbation,
    Video,
    VideoFormatError,
    apply_perturbation,
    l21_norm,
    l21_subgradient,
    load_video,
    make_baseline,
    mean_abs_perturbation,
    save_video,
)


def brute_force_l21(delta):
    """Independent double-loop oracle for the l2,1 norm."""
    total = 0.0
    for i in range(delta.shape[0]):
        sq = 0.0
        for v in delta[i].ravel():
            sq += float(v) * float(v)
        total += math.sqrt(sq)
    return total


def pert(delta, delta_max=1e6):
    return Perturbation(np.asarray(delta, dtype=np.float64), delta_max)


def full_mask(t):
    return np.ones(t, dtype=bool)


class TestL21:
    def test_zero_delta(self):
        assert l21_norm(pert(np.zeros((3, 1, 2, 2)))) == 0.0

    def test_345_triangle(self):
        delta = np.zeros((2, 1, 1, 2))
        delta[0, 0, 0] = [0.3, 0.4]
        assert l21_norm(pert(delta)) == pytest.approx(0.5, abs=1e-15)

    def test_matches_brute_force(self):
        rng = np.random.default_rng(0)
        for _ in range(100):
            t = int(rng.integers(2, 9))
            c = int(rng.choice([1, 3]))
            h = int(rng.integers(1, 5))
            w = int(rng.integers(1, 5))
            delta = rng.normal(size=(t, c, h, w))
            got = l21_norm(pert(delta))
            want = brute_force_l21(delta)
            assert got == pytest.approx(want, rel=1e-12)

    def test_homogeneity(self):
        rng = np.random.default_rng(1)
        delta = rng.normal(size=(4, 1, 2, 2))
        base = l21_norm(pert(delta))
        for c in (-2.0, 0.5):
            assert l21_norm(pert(c * delta)) == pytest.approx(abs(c) * base, rel=1e-12)

    def test_zero_iff_zero(self):
        delta = np.zeros((2, 1, 2, 2))
        assert l21_norm(pert(delta)) == 0.0
        delta[1, 0, 1, 1] = 1e-9
        assert l21_norm(pert(delta)) > 0.0


class TestL21Subgradient:
    def test_zero_delta_gives_zero(self):
        g = l21_subgradient(pert(np.zeros((3, 1, 2, 2))))
        assert np.all(g == 0.0)

    def test_unit_vector_of_345(self):
        delta = np.zeros((2, 1, 1, 2))
        delta[0, 0, 0] = [0.3, 0.4]
        g = l21_subgradient(pert(delta))
        assert g[0, 0, 0] == pytest.approx([0.6, 0.8], abs=1e-12)
        assert np.all(g[1] == 0.0)

    def test_directional_derivative_matches_finite_differences(self):
        rng = np.random.default_rng(2)
        delta = rng.normal(size=(4, 1, 3, 3))
        p = pert(delta)
        g = l21_subgradient(p)
        h = 1e-6
        fd = (l21_norm(pert(delta + h * g)) - l21_norm(pert(delta - h * g))) / (2 * h)
        analytic = float((g * g).sum())  # <subgrad, subgrad> = number of active frames
        assert fd == pytest.approx(analytic, abs=1e-5)


class TestApplyPerturbation:
    def test_empty_mask_is_identity(self):
        rng = np.random.default_rng(3)
        x = Video(rng.uniform(size=(3, 1, 8, 8)))
        p = pert(rng.normal(scale=0.01, size=x.shape))
        out = apply_perturbation(x, p, np.zeros(3, dtype=bool))
        assert out.frames is not x.frames
        assert np.array_equal(out.frames, x.frames)

    def test_clamps_at_one(self):
        x = Video(np.full((2, 1, 8, 8), 0.9))
        p = pert(np.full((2, 1, 8, 8), 0.2))
        out = apply_perturbation(x, p, full_mask(2))
        assert np.all(out.frames == 1.0)

    def test_budget_semantics_on_zero_video(self):
        x = Video(np.zeros((2, 1, 8, 8)))
        delta = np.full((2, 1, 8, 8), 16.0 / 255.0)
        out = apply_perturbation(x, Perturbation(delta, 16.0), full_mask(2))
        assert np.all(out.frames == 16.0 / 255.0)

    def test_unmasked_frames_bit_identical(self):
        rng = np.random.default_rng(4)
        x = Video(rng.uniform(size=(4, 3, 8, 8)))
        p = pert(rng.normal(scale=0.05, size=x.shape))
        mask = np.array([True, False, True, False])
        out = apply_perturbation(x, p, mask)
        assert np.array_equal(out.frames[1], x.frames[1])
        assert np.array_equal(out.frames[3], x.frames[3])
        assert out.frames.min() >= 0.0 and out.frames.max() <= 1.0

    def test_shape_mismatch_rejected(self):
        x = Video(np.zeros((2, 1, 8, 8)))
        p = pert(np.zeros((3, 1, 8, 8)))
        with pytest.raises(ValueError):
            apply_perturbation(x, p, full_mask(3))


class TestMeanAbsPerturbation:
    def test_identical_videos(self):
        x = Video(np.full((2, 1, 8, 8), 0.5))
        assert mean_abs_perturbation(x, x, full_mask(2)) == 0.0

    def test_black_baseline_on_gray(self):
        x = Video(np.full((3, 1, 8, 8), 100.0 / 255.0))
        black = make_baseline(BaselineKind("black"), x, seed=0)
        assert mean_abs_perturbation(x, black, full_mask(3)) == pytest.approx(100.0, abs=1e-9)

    def test_random_pm8_has_delta_bar_near_8(self):
        x = Video(np.full((4, 1, 16, 16), 0.5))
        adv = make_baseline(BaselineKind("random", magnitude=8.0), x, seed=5)
        assert mean_abs_perturbation(x, adv, full_mask(4)) == pytest.approx(8.0, abs=0.5)

    def test_empty_mask_gives_zero(self):
        rng = np.random.default_rng(6)
        x = Video(rng.uniform(size=(2, 1, 8, 8)))
        y = Video(np.clip(x.frames + 0.1, 0, 1))
        assert mean_abs_perturbation(x, y, np.zeros(2, dtype=bool)) == 0.0


class TestBaselines:
    def test_white(self):
        x = Video(np.random.default_rng(7).uniform(size=(2, 3, 8, 8)))
        assert np.all(make_baseline(BaselineKind("white"), x, 0).frames == 1.0)

    def test_black(self):
        x = Video(np.random.default_rng(8).uniform(size=(2, 3, 8, 8)))
        assert np.all(make_baseline(BaselineKind("black"), x, 0).frames == 0.0)

    def test_random_deterministic_in_seed(self):
        x = Video(np.random.default_rng(9).uniform(size=(3, 1, 8, 8)))
        a = make_baseline(BaselineKind("random", 8.0), x, seed=42)
        b = make_baseline(BaselineKind("random", 8.0), x, seed=42)
        c = make_baseline(BaselineKind("random", 8.0), x, seed=43)
        assert np.array_equal(a.frames, b.frames)
        assert not np.array_equal(a.frames, c.frames)

    def test_unknown_kind_rejected(self):
        with pytest.raises(ValueError):
            BaselineKind("sepia")


class TestFileIO:
    def test_vtensor_round_trip_bit_exact(self, tmp_path):
        rng = np.random.default_rng(10)
        # f32-representable payload: the format stores f32
        frames = rng.uniform(size=(3, 1, 8, 8)).astype(np.float32).astype(np.float64)
        v = Video(frames)
        path = str(tmp_path / "clip.vtensor")
        save_video(v, path)
        back = load_video(path)
        assert np.array_equal(back.frames, v.frames)
        # file-level round trip: load -> save reproduces the bytes
        path2 = str(tmp_path / "clip2.vtensor")
        save_video(back, path2)
        assert (tmp_path / "clip.vtensor").read_bytes() == (tmp_path / "clip2.vtensor").read_bytes()

    def test_vtensor_header_echo(self, tmp_path):
        v = Video(np.zeros((3, 1, 8, 8)))
        path = str(tmp_path / "z.vtensor")
        save_video(v, path)
        assert load_video(path).shape == (3, 1, 8, 8)

    def test_pixmap_half_gray_rounds_to_128(self, tmp_path):
        v = Video(np.full((2, 3, 8, 8), 0.5))
        d = str(tmp_path / "frames")
        save_video(v, d)
        back = load_video(d)
        assert np.all(back.frames == 128.0 / 255.0)

    def test_pixmap_all_ones_exact(self, tmp_path):
        v = Video(np.ones((2, 1, 8, 8)))
        d = str(tmp_path / "ones")
        save_video(v, d)
        assert np.all(load_video(d).frames == 1.0)

    def test_pixmap_round_trip_error_bounded(self, tmp_path):
        rng = np.random.default_rng(11)
        v = Video(rng.uniform(size=(4, 3, 9, 13)))
        d = str(tmp_path / "rt")
        save_video(v, d)
        back = load_video(d)
        assert np.abs(back.frames - v.frames).max() <= 1.0 / 255.0

    def test_black_pixmap_directory(self, tmp_path):
        v = Video(np.zeros((2, 3, 8, 8)))
        d = str(tmp_path / "black")
        save_video(v, d)
        back = load_video(d)
        assert back.t_frames == 2
        assert np.all(back.frames == 0.0)

    def test_single_frame_directory_rejected(self, tmp_path):
        v = Video(np.zeros((2, 1, 8, 8)))
        d = tmp_path / "one"
        save_video(v, str(d))
        (d / "frame_00001.pgm").unlink()
        with pytest.raises(VideoFormatError, match="fewer than 2 frames"):
            load_video(str(d))

    def test_missing_path(self):
        with pytest.raises(FileNotFoundError):
            load_video("/nonexistent/clip.vtensor")

    def test_inconsistent_frame_dims_rejected(self, tmp_path):
        d = tmp_path / "mixed"
        d.mkdir()
        small = np.zeros((1, 8, 8))
        big = np.zeros((1, 9, 9))
        from fmmlab.videotensor import _save_pixmap

        _save_pixmap(small, str(d / "a.pgm"))
        _save_pixmap(big, str(d / "b.pgm"))
        with pytest.raises(VideoFormatError, match="inconsistent"):
            load_video(str(d))

    def test_malformed_header_rejected(self, tmp_path):
        path = tmp_path / "bad.vtensor"
        path.write_bytes(b"NOPE" + bytes(40))
        with pytest.raises(VideoFormatError, match="magic"):
            load_video(str(path))


class TestInvariants:
    def test_video_rejects_out_of_range(self):
        with pytest.raises(ValueError):
            Video(np.full((2, 1, 8, 8), 1.5))
        with pytest.raises(ValueError):
            Video(np.full((2, 1, 8, 8), np.nan))

    def test_video_rejects_single_frame(self):
        with pytest.raises(ValueError, match="fewer than 2"):
            Video(np.zeros((1, 1, 8, 8)))

    def test_perturbation_budget_enforced(self):
        with pytest.raises(ValueError, match="budget"):
            Perturbation(np.full((2, 1, 8, 8), 0.5), delta_max=16.0)
