import numpy as np
import pytest

from llrs.camera import (AcquisitionBreakdown, NoiseSpec, Path, RenderError, RoiSpec, SensorSpec,
                         acquisition_time, effective_width, frame_bytes, frame_transfer_time, gaussian_kernel,
                         read_raw, readout_time, render_image, row_time, transfer_time, write_pgm, write_raw)
from llrs.core import TrapArray

FULL = 1024 * 1024 * 2


class TestTiming:
    def test_frame_transfer_default(self):
        assert frame_transfer_time() == pytest.approx(4498.87, abs=1e-6)

    def test_frame_transfer_unit_shift(self):
        assert frame_transfer_time(SensorSpec(v_shift=1.0)) == pytest.approx(1039.0)

    def test_frame_transfer_zero(self):
        assert frame_transfer_time(SensorSpec(storage_rows=0, transition_rows_bottom=0)) == 0

    def test_full_frame_row_time(self):
        assert row_time(SensorSpec(), RoiSpec()) == pytest.approx(4.33 + 1072 / 30)
        assert row_time(SensorSpec(), RoiSpec()) == pytest.approx(41, rel=0.05)

    def test_empty_roi_is_offset_only(self):
        s = SensorSpec()
        assert readout_time(s, RoiSpec(height=0)) == pytest.approx(s.gain_chain_offset)

    def test_v_bin_halves(self):
        s = SensorSpec()
        base = [readout_time(s, RoiSpec(v_bin=b)) - s.gain_chain_offset for b in (1, 2, 4, 8)]
        assert np.allclose(np.array(base[1:]) / base[:-1], 0.5)

    def test_h_bin_no_effect(self):
        assert readout_time(roi=RoiSpec(h_bin=1)) == readout_time(roi=RoiSpec(h_bin=2))

    def test_monotone_in_height_and_width(self):
        hs = [readout_time(roi=RoiSpec(height=h)) for h in range(0, 1025, 64)]
        ws = [readout_time(roi=RoiSpec(width=w)) for w in range(1, 1025, 37)]
        assert np.all(np.diff(hs) >= 0) and np.all(np.diff(ws) >= 0)

    def test_effective_width(self):
        assert [effective_width(w) for w in (1, 2, 3, 100, 1024)] == [1, 2, 4, 128, 1024]

    def test_transfer_rates(self):
        assert transfer_time(FULL) == pytest.approx(FULL / 1431)
        assert transfer_time(FULL) == pytest.approx(1470, rel=0.01)
        assert transfer_time(FULL, 1.206) == pytest.approx(1740, rel=0.01)
        assert transfer_time(0) == 0
        with pytest.raises(ValueError):
            transfer_time(10, 0)

    def test_breakdown_composition(self):
        a = acquisition_time()
        assert isinstance(a, AcquisitionBreakdown)
        assert a.exposure == 20e3
        assert a.total == pytest.approx(20e3 + frame_transfer_time() + readout_time() + FULL / 1431)
        assert acquisition_time(path=Path.GPU).transfer == pytest.approx(FULL / 1206)

    def test_single_row_dominated_by_frame_transfer(self):
        a = acquisition_time(roi=RoiSpec(height=1), exposure_ms=0)
        assert a.frame_transfer > 0.5 * a.total

    def test_affine_in_height(self):
        h = np.arange(64, 1025, 64)
        y = [acquisition_time(roi=RoiSpec(height=int(v))).total - 20e3 for v in h]
        slope = row_time(SensorSpec(), RoiSpec()) + 1024 * 2 / 1431
        assert np.allclose(np.diff(y) / 64, slope)

    def test_frame_bytes_binned(self):
        assert frame_bytes(SensorSpec(), RoiSpec(v_bin=2)) == FULL // 2

    def test_invalid_roi(self):
        with pytest.raises(ValueError):
            RoiSpec(v_bin=3)
        with pytest.raises(ValueError):
            RoiSpec(height=2000)
        with pytest.raises(ValueError):
            acquisition_time(exposure_ms=-1)


class TestRender:
    def test_kernel_normalized(self):
        k = gaussian_kernel(7, 1.2)
        assert k.shape == (7, 7) and k.sum() == pytest.approx(1.0)
        assert gaussian_kernel(3, 0)[1, 1] == 1.0
        with pytest.raises(ValueError):
            gaussian_kernel(4, 1.0)

    def test_deterministic(self):
        t = TrapArray.grid(8, 8)
        s = np.arange(64) % 3 == 0
        a = render_image(t, s, gaussian_kernel(5, 1.0), seed=7)
        b = render_image(t, s, gaussian_kernel(5, 1.0), seed=7)
        assert np.array_equal(a.counts, b.counts)

    def test_noiseless_empty_is_zero(self):
        t = TrapArray.grid(4, 4)
        noise = NoiseSpec(background_mean=0, read_noise_sigma=0)
        img = render_image(t, np.zeros(16, bool), gaussian_kernel(5, 1.0), noise, seed=0)
        assert not img.counts.any() and img.counts.dtype == np.uint16

    def test_box_outside_image(self):
        t = TrapArray.chain(4)
        with pytest.raises(RenderError):
            render_image(t, np.ones(4, bool), gaussian_kernel(5, 1.0), shape=(4, 4))

    def test_raw_and_pgm(self, tmp_path):
        t = TrapArray.grid(4, 4)
        img = render_image(t, np.ones(16, bool), gaussian_kernel(3, 1.0), seed=1)
        write_raw(img, tmp_path / "f.raw")
        assert np.array_equal(read_raw(tmp_path / "f.raw").counts, img.counts)
        assert (tmp_path / "f.raw").stat().st_size == 8 + img.counts.size * 2
        write_pgm(img, tmp_path / "f.pgm")
        head = (tmp_path / "f.pgm").read_bytes()[:2]
        assert head == b"P5"
