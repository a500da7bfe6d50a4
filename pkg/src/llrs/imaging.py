"""PSF-weighted intensity extraction and threshold classification."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import optimize, stats

from .core import LLRSError, TrapArray


class ImageProcError(LLRSError):
    pass


class CalibrationError(LLRSError):
    """Intensity samples do not show two separable modes."""


@dataclass(frozen=True)
class PsfSpec:
    weights: np.ndarray  # (box, box) shared kernel or (N_t, box, box)

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        side = w.shape[-1]
        if w.ndim not in (2, 3) or w.shape[-2] != side or side % 2 == 0:
            raise ValueError("PSF box must be square with an odd side")
        if np.any(w < 0):
            raise ValueError("PSF weights must be non-negative")
        sums = w.reshape(-1, side * side).sum(axis=1)
        if not np.allclose(sums, 1.0, atol=1e-9):
            raise ValueError("PSF weights must sum to one")
        object.__setattr__(self, "weights", w)

    @property
    def box_side(self) -> int:
        return self.weights.shape[-1]

    @classmethod
    def uniform(cls, box_side: int) -> "PsfSpec":
        return cls(np.full((box_side, box_side), 1.0 / box_side**2))


@dataclass(frozen=True)
class Threshold:
    value: float

    def __post_init__(self):
        if np.isnan(self.value):
            raise ValueError("threshold must be a number")


def box_offsets(traps: TrapArray, box_side: int, image_shape: tuple[int, int]) -> np.ndarray:
    """Flat pixel index of every box pixel for every trap.

    Pixel-major, shape (b*b, N_t): row ``p`` holds box pixel ``p`` of all
    traps, which keeps the gather and the weighted sum contiguous.
    """
    h, w = image_shape
    half = box_side // 2
    c = np.rint(traps.pixel_center).astype(np.int64)
    if (c[:, 0].min() - half < 0 or c[:, 1].min() - half < 0
            or c[:, 0].max() + half >= w or c[:, 1].max() + half >= h):
        raise ImageProcError("PSF box extends outside the image")
    d = np.arange(-half, half + 1)
    local = (d[:, None] * w + d[None, :]).ravel()
    return local[:, None] + (c[:, 1] * w + c[:, 0])[None, :]


def extract_intensities(image, traps: TrapArray, psf: PsfSpec, offsets: np.ndarray | None = None) -> np.ndarray:
    """Weighted box sums ``I_k = sum_p w_k(p) counts(p)`` for each trap.

    ``offsets`` may be precomputed with :func:`box_offsets` when the same
    geometry is processed repeatedly.
    """
    counts = getattr(image, "counts", image)
    counts = np.asarray(counts)
    if offsets is None:
        offsets = box_offsets(traps, psf.box_side, counts.shape)
    patches = counts.ravel()[offsets].astype(np.float64)
    w = psf.weights.reshape(-1, psf.box_side**2)
    if w.shape[0] == 1:
        return np.dot(w[0], patches)
    return np.einsum("kp,pk->k", w, patches)


def classify(intensities, threshold: Threshold | float) -> np.ndarray:
    t = threshold.value if isinstance(threshold, Threshold) else threshold
    return np.asarray(intensities) > t


def _crossing(w1, m1, s1, w2, m2, s2) -> float:
    """Point between the means where the weighted Gaussian densities meet."""
    # log densities avoid underflow for narrow components
    f = lambda x: (np.log(w1) + stats.norm.logpdf(x, m1, s1)) - (np.log(w2) + stats.norm.logpdf(x, m2, s2))
    lo, hi = m1, m2
    if f(lo) <= 0 or f(hi) >= 0:
        # one component dominates everywhere between the means
        return 0.5 * (m1 + m2)
    return optimize.brentq(f, lo, hi, xtol=1e-12 * max(1.0, abs(hi)))


def calibrate_threshold(samples, labels=None, min_separation: float = 2.0) -> Threshold:
    """Threshold minimizing misclassification for a two-mode intensity sample.

    With ``labels`` (True = atom) the two classes are summarized directly;
    otherwise a two-component Gaussian mixture is fitted.  Raises
    :class:`CalibrationError` when the modes are not resolved
    (Ashman's D below ``min_separation``).
    """
    x = np.asarray(samples, dtype=float).ravel()
    if labels is not None:
        labels = np.asarray(labels, dtype=bool).ravel()
        parts = [x[~labels], x[labels]]
        if min(len(p) for p in parts) == 0:
            raise CalibrationError("both classes need samples")
        w = np.array([len(p) for p in parts], dtype=float) / len(x)
        m = np.array([p.mean() for p in parts])
        s = np.array([p.std() for p in parts])
    else:
        from sklearn.mixture import GaussianMixture

        if len(x) < 4 or np.ptp(x) == 0:
            raise CalibrationError("need at least two distinct intensity values")
        gm = GaussianMixture(2, random_state=0, reg_covar=1e-6 * max(x.var(), 1e-12)).fit(x[:, None])
        order = np.argsort(gm.means_.ravel())
        w = gm.weights_[order]
        m = gm.means_.ravel()[order]
        s = np.sqrt(gm.covariances_.ravel()[order])

    gap = m[1] - m[0]
    floor = 1e-9 * max(abs(gap), 1.0)
    s = np.maximum(s, floor)
    d = np.sqrt(2.0) * gap / np.sqrt(s[0] ** 2 + s[1] ** 2)
    if not np.isfinite(d) or d < min_separation:
        raise CalibrationError(f"modes not resolved (separation D={d:.3g})")
    return Threshold(float(_crossing(w[0], m[0], s[0], w[1], m[1], s[1])))
