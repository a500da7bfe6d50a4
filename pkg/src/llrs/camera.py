"""Synthetic EMCCD: image rendering and the acquisition timing model.

All durations are in microseconds.  Horizontal readout runs at
``h_rate`` pixels per microsecond (30 MHz by default), vertical shifts take
``v_shift`` microseconds per row.
"""

from __future__ import annotations

import enum
import struct
from dataclasses import dataclass

import numpy as np

from .core import LLRSError, TrapArray, make_rng


class RenderError(LLRSError):
    pass


@dataclass(frozen=True)
class SensorSpec:
    active_rows: int = 1024
    active_cols: int = 1024
    storage_rows: int = 1037
    transition_rows_top: int = 1
    transition_rows_bottom: int = 2
    dark_ref_rows: int = 5
    dark_ref_cols_per_side: int = 16
    overscan_per_side: int = 16
    gain_chain: int = 1072
    v_shift: float = 4.33  # us per row
    h_rate: float = 30.0  # px per us
    bytes_per_px: int = 2

    def __post_init__(self):
        counts = (self.active_rows, self.active_cols, self.gain_chain, self.bytes_per_px)
        if min(counts) <= 0 or self.v_shift < 0 or self.h_rate <= 0:
            raise ValueError("sensor counts and rates must be positive")

    @property
    def row_overhead_px(self) -> int:
        """Pixels clocked per row besides the ROI: both dark-reference
        column groups plus one overscan block (48 by default)."""
        return 2 * self.dark_ref_cols_per_side + self.overscan_per_side

    @property
    def gain_chain_offset(self) -> float:
        return (self.gain_chain + self.overscan_per_side) / self.h_rate


def _is_pow2(v: int) -> bool:
    return v >= 1 and (v & (v - 1)) == 0


@dataclass(frozen=True)
class RoiSpec:
    height: int = 1024  # N_V
    width: int = 1024  # N_H
    v_bin: int = 1
    h_bin: int = 1

    def __post_init__(self):
        if not (0 <= self.height <= 1024 and 1 <= self.width <= 1024):
            raise ValueError(f"ROI {self.height}x{self.width} outside the sensor")
        if not (_is_pow2(self.v_bin) and _is_pow2(self.h_bin)):
            raise ValueError("binning factors must be powers of two")


@dataclass(frozen=True)
class NoiseSpec:
    background_mean: float = 0.5
    read_noise_sigma: float = 1.0
    photons_per_atom: float = 200.0
    em_gain: float = 10.0

    def __post_init__(self):
        if min(self.background_mean, self.read_noise_sigma, self.photons_per_atom, self.em_gain) < 0:
            raise ValueError("noise parameters must be non-negative")


@dataclass(frozen=True)
class Image:
    counts: np.ndarray  # (height, width) uint16

    @property
    def height(self) -> int:
        return self.counts.shape[0]

    @property
    def width(self) -> int:
        return self.counts.shape[1]


class Path(str, enum.Enum):
    CPU = "cpu"
    GPU = "gpu"


TRANSFER_RATE_GBPS = {Path.CPU: 1.431, Path.GPU: 1.206}
DEFAULT_EXPOSURE_MS = 20.0


def effective_width(width: int) -> int:
    """Readout width rounded up to the next supported power of two."""
    return 1 << max(int(width) - 1, 0).bit_length()


def frame_transfer_time(spec: SensorSpec = SensorSpec()) -> float:
    return (spec.storage_rows + spec.transition_rows_bottom) * spec.v_shift


def row_time(spec: SensorSpec, roi: RoiSpec) -> float:
    """Time to shift one binned row and clock it through the register."""
    return spec.v_shift + (effective_width(roi.width) + spec.row_overhead_px) / spec.h_rate


def readout_time(spec: SensorSpec = SensorSpec(), roi: RoiSpec = RoiSpec()) -> float:
    # Binned rows sum in the register; one horizontal read per v_bin rows.
    n_rows = roi.height / roi.v_bin
    return n_rows * row_time(spec, roi) + spec.gain_chain_offset


def frame_bytes(spec: SensorSpec, roi: RoiSpec) -> int:
    return int(np.ceil(roi.height / roi.v_bin)) * effective_width(roi.width) * spec.bytes_per_px


def transfer_time(n_bytes: float, rate_gbps: float = TRANSFER_RATE_GBPS[Path.CPU]) -> float:
    if rate_gbps <= 0:
        raise ValueError("transfer rate must be positive")
    return n_bytes / (rate_gbps * 1e3)


@dataclass(frozen=True)
class AcquisitionBreakdown:
    exposure: float
    frame_transfer: float
    readout: float
    transfer: float

    @property
    def total(self) -> float:
        return self.exposure + self.frame_transfer + self.readout + self.transfer

    def as_row(self) -> dict:
        return {
            "exposure_us": self.exposure,
            "frame_transfer_us": self.frame_transfer,
            "readout_us": self.readout,
            "transfer_us": self.transfer,
            "total_us": self.total,
        }


def acquisition_time(
    spec: SensorSpec = SensorSpec(),
    roi: RoiSpec = RoiSpec(),
    exposure_ms: float = DEFAULT_EXPOSURE_MS,
    path: Path | str = Path.CPU,
    rate_gbps: float | None = None,
) -> AcquisitionBreakdown:
    if exposure_ms < 0:
        raise ValueError("exposure must be non-negative")
    rate = TRANSFER_RATE_GBPS[Path(path)] if rate_gbps is None else rate_gbps
    return AcquisitionBreakdown(
        exposure=exposure_ms * 1e3,
        frame_transfer=frame_transfer_time(spec),
        readout=readout_time(spec, roi),
        transfer=transfer_time(frame_bytes(spec, roi), rate),
    )


# -- rendering --------------------------------------------------------------

def gaussian_kernel(box_side: int, sigma: float) -> np.ndarray:
    """Isotropic Gaussian sampled on an odd box, normalized to unit sum."""
    if box_side < 1 or box_side % 2 == 0:
        raise ValueError("box side must be a positive odd integer")
    h = box_side // 2
    x = np.arange(-h, h + 1)
    if sigma <= 0:
        k = np.zeros((box_side, box_side))
        k[h, h] = 1.0
        return k
    g = np.exp(-(x**2) / (2 * sigma**2))
    k = np.outer(g, g)
    return k / k.sum()


def render_image(
    traps: TrapArray,
    state,
    kernel: np.ndarray,
    noise: NoiseSpec = NoiseSpec(),
    seed: int | None = None,
    shape: tuple[int, int] | None = None,
) -> Image:
    """Render a noisy frame; ``kernel`` is the normalized PSF box."""
    h, w = traps.image_shape if shape is None else shape
    rng = make_rng(seed)
    state = np.asarray(state, dtype=bool).ravel()
    side = kernel.shape[0]
    half = side // 2
    centers = np.rint(traps.pixel_center).astype(int)
    occ = centers[state]
    if occ.size and (
        occ[:, 0].min() - half < 0 or occ[:, 1].min() - half < 0
        or occ[:, 0].max() + half >= w or occ[:, 1].max() + half >= h
    ):
        raise RenderError("occupied trap PSF box leaves the image")

    signal = np.zeros((h, w))
    for x, y in occ:
        signal[y - half:y + half + 1, x - half:x + half + 1] += noise.photons_per_atom * kernel
    electrons = rng.poisson(signal + noise.background_mean).astype(float)
    counts = electrons * noise.em_gain
    if noise.read_noise_sigma > 0:
        counts += rng.normal(0.0, noise.read_noise_sigma, size=counts.shape)
    return Image(np.clip(np.rint(counts), 0, 65535).astype(np.uint16))


def write_raw(image: Image, path) -> None:
    with open(path, "wb") as f:
        f.write(struct.pack("<II", image.width, image.height))
        f.write(image.counts.astype("<u2").tobytes())


def read_raw(path) -> Image:
    with open(path, "rb") as f:
        w, h = struct.unpack("<II", f.read(8))
        data = np.frombuffer(f.read(), dtype="<u2")
    return Image(data.reshape(h, w).astype(np.uint16))


def write_pgm(image: Image, path) -> None:
    with open(path, "wb") as f:
        f.write(b"P5\n%d %d\n65535\n" % (image.width, image.height))
        f.write(image.counts.astype(">u2").tobytes())
