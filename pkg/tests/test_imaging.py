import numpy as np
import pytest

from llrs.camera import Image, NoiseSpec, gaussian_kernel, render_image
from llrs.core import TrapArray, make_rng
from llrs.imaging import (CalibrationError, ImageProcError, PsfSpec, Threshold, box_offsets,
                          calibrate_threshold, classify, extract_intensities)


def test_zero_image():
    t = TrapArray.grid(4, 4)
    img = Image(np.zeros(t.image_shape, np.uint16))
    assert not extract_intensities(img, t, PsfSpec.uniform(5)).any()


def test_delta_kernel_reads_center():
    t = TrapArray.grid(4, 4)
    counts = make_rng(0).integers(0, 1000, t.image_shape).astype(np.uint16)
    c = np.rint(t.pixel_center).astype(int)
    out = extract_intensities(Image(counts), t, PsfSpec(np.ones((1, 1))))
    assert np.array_equal(out, counts[c[:, 1], c[:, 0]])


def test_uniform_box_mean():
    t = TrapArray.chain(2)
    counts = np.zeros(t.image_shape, np.uint16)
    x, y = np.rint(t.pixel_center[0]).astype(int)
    patch = np.arange(1, 10).reshape(3, 3)
    counts[y - 1:y + 2, x - 1:x + 2] = patch
    out = extract_intensities(Image(counts), t, PsfSpec.uniform(3))
    assert out[0] == pytest.approx(patch.mean()) and out[1] == 0


def test_per_trap_weights_match_shared():
    t = TrapArray.grid(6, 6)
    img = render_image(t, np.arange(36) % 2 == 0, gaussian_kernel(5, 1.0), seed=3)
    k = gaussian_kernel(5, 1.0)
    a = extract_intensities(img, t, PsfSpec(k))
    b = extract_intensities(img, t, PsfSpec(np.broadcast_to(k, (36, 5, 5)).copy()))
    assert np.allclose(a, b)


def test_offsets_layout():
    t = TrapArray.grid(3, 3)
    off = box_offsets(t, 3, t.image_shape)
    assert off.shape == (9, 9)
    c = np.rint(t.pixel_center).astype(int)
    assert np.array_equal(off[4], c[:, 1] * t.image_shape[1] + c[:, 0])  # centre pixel row


def test_box_out_of_bounds():
    t = TrapArray.chain(3)
    with pytest.raises(ImageProcError):
        extract_intensities(Image(np.zeros((3, 3), np.uint16)), t, PsfSpec.uniform(3))


def test_psf_validation():
    with pytest.raises(ValueError):
        PsfSpec(np.ones((2, 2)) / 4)
    with pytest.raises(ValueError):
        PsfSpec(np.ones((3, 3)))


def test_classify_extremes():
    x = np.array([0.0, 5.0, 1e6])
    assert not classify(x, np.inf).any()
    assert classify(x, -1).all()
    assert classify(x, Threshold(4.0)).tolist() == [False, True, True]


def test_classify_scale_invariant():
    x = make_rng(1).normal(50, 20, 1000)
    assert np.array_equal(classify(x, 40.0), classify(x * 3.5, 40.0 * 3.5))


class TestCalibration:
    def test_delta_clusters(self):
        x = np.r_[np.full(500, 10.0), np.full(500, 100.0)]
        t = calibrate_threshold(x).value
        assert 10 < t < 100
        assert np.array_equal(classify(x, t), x > 50)

    def test_symmetric_gaussians(self):
        rng = make_rng(2)
        mu1, mu2, s = 20.0, 80.0, 8.0
        x = np.r_[rng.normal(mu1, s, 20000), rng.normal(mu2, s, 20000)]
        assert calibrate_threshold(x).value == pytest.approx(50.0, abs=s / 10)

    def test_unequal_weights_closed_form(self):
        rng = make_rng(3)
        mu1, mu2 = 20.0, 80.0
        lo, hi = rng.normal(mu1, 8.0, 9000), rng.normal(mu2, 8.0, 1000)
        x = np.r_[lo, hi]
        labels = np.r_[np.zeros(9000, bool), np.ones(1000, bool)]
        t = calibrate_threshold(x, labels).value
        assert t > 50.0  # moves toward the lighter component
        # the weighted log densities of the two labelled classes meet at t
        s1, s2 = lo.std(), hi.std()
        f = lambda v: (np.log(0.9) - np.log(s1) - (v - lo.mean()) ** 2 / (2 * s1**2)) - \
                      (np.log(0.1) - np.log(s2) - (v - hi.mean()) ** 2 / (2 * s2**2))
        assert abs(f(t)) < 1e-8
        s = 8.0  # equal-variance closed form with the true parameters
        closed = 50.0 + s**2 / (mu2 - mu1) * np.log(9.0)
        assert t == pytest.approx(closed, abs=0.5)

    def test_unimodal_rejected(self):
        x = make_rng(4).normal(50, 5, 5000)
        with pytest.raises(CalibrationError):
            calibrate_threshold(x)
        with pytest.raises(CalibrationError):
            calibrate_threshold(np.full(10, 3.0))

    def test_deterministic(self):
        rng = make_rng(5)
        x = np.r_[rng.normal(10, 2, 400), rng.normal(40, 3, 400)]
        assert calibrate_threshold(x).value == calibrate_threshold(x).value


def test_end_to_end_recovery():
    t = TrapArray.grid(16, 16)
    state = make_rng(6).random(t.n_traps) < 0.5
    k = gaussian_kernel(5, 1.0)
    img = render_image(t, state, k, NoiseSpec(background_mean=0, read_noise_sigma=0, photons_per_atom=5000), seed=6)
    out = classify(extract_intensities(img, t, PsfSpec(k)), 1.0)
    assert np.array_equal(out, state)


def test_misassignment_rate_at_high_snr():
    # photons * gain well above 20 * read noise; 1e5 traps over several frames
    t = TrapArray.grid(32, 32)
    k = gaussian_kernel(5, 1.0)
    noise = NoiseSpec()
    psf = PsfSpec(k)
    off = box_offsets(t, 5, t.image_shape)
    rng = make_rng(8)
    frames = [(rng.random(t.n_traps) < 0.5) for _ in range(98)]
    ints = [extract_intensities(render_image(t, s, k, noise, seed=i), t, psf, off) for i, s in enumerate(frames)]
    truth = np.concatenate(frames)
    x = np.concatenate(ints)
    thr = calibrate_threshold(x[:5000], truth[:5000])
    err = np.mean(classify(x, thr) != truth)
    assert len(x) >= 1e5 and err < 1e-3
