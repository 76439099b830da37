"""Layered passive tamper detection against a trusted original.

Layer 1 scores structural similarity, Layer 2 counts cross-checked ORB-style
feature matches, Layer 3 compares luma histograms and Layer 4 turns the
Layer-1 similarity map into bounding boxes of suspicious regions.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.ndimage import find_objects, label, uniform_filter
from scipy.signal import fftconvolve
from sklearn.base import BaseEstimator

from .base import check_gray, check_image
from .features import FeatureSet, detect_features, mutual_matches
from .imaging import Rect, resize_bilinear, to_grayscale
from .metrics import hist_intersection, ssim

SSIM_FLAG = 0.98
MFR_FLAG = 90.0
HIST_FLAG = 98.0
MASK_THRESHOLD = 0.90
MIN_BOX_AREA = 64
MAX_MATCH_DISTANCE = 64


@dataclass
class MfrResult:
    percent: float
    matches: int
    keypoints_original: int
    keypoints_subject: int
    degenerate: bool = False


@dataclass
class TamperReport:
    ssim: float
    ssim_map: np.ndarray = field(repr=False)
    mfr: MfrResult
    histogram: float
    boxes: list[Rect]
    mask: np.ndarray = field(repr=False)
    flags: dict[str, bool]
    thresholds: dict[str, float]

    @property
    def suspicious(self) -> bool:
        return any(self.flags.values())

    def to_dict(self) -> dict:
        return {
            "ssim": self.ssim,
            "mfr": {
                "percent": self.mfr.percent,
                "matches": self.mfr.matches,
                "keypoints_original": self.mfr.keypoints_original,
                "keypoints_subject": self.mfr.keypoints_subject,
                "degenerate": self.mfr.degenerate,
            },
            "histogram": self.histogram,
            "boxes": [[b.x, b.y, b.w, b.h] for b in self.boxes],
            "flags": dict(self.flags),
            "thresholds": dict(self.thresholds),
        }


def align(original, subject) -> np.ndarray:
    """Bilinearly rescale ``subject`` to the original's size when they differ."""
    orig = check_image(original, name="original")
    subj = check_image(subject, name="subject")
    if subj.shape[:2] != orig.shape[:2]:
        subj = resize_bilinear(subj, orig.shape[1], orig.shape[0])
    return subj


def layer1_ssim(original, subject):
    return ssim(original, subject)


def reference_features(original) -> FeatureSet:
    """Uncapped feature set of the trusted original.

    Only the subject is limited to the strongest corners; capping the
    reference too would drop corners that rank higher in a cropped subject.
    """
    return detect_features(original, n_keypoints=None)


def layer2_mfr(original, subject, max_distance: int = MAX_MATCH_DISTANCE, original_features=None) -> MfrResult:
    """Matching feature ratio: share of subject keypoints with a mutual match."""
    fo = original_features if original_features is not None else reference_features(original)
    fs = detect_features(subject)
    if len(fo) == 0 or len(fs) == 0:
        return MfrResult(0.0, 0, len(fo), len(fs), degenerate=True)
    n = len(mutual_matches(fs.descriptors, fo.descriptors, max_distance))
    return MfrResult(100.0 * n / len(fs), n, len(fo), len(fs))


def layer3_hist(original, subject) -> float:
    return hist_intersection(original, subject)


def _boxes_from_map(ssim_map: np.ndarray, threshold: float, min_area: int) -> tuple[np.ndarray, list[Rect]]:
    raw = ssim_map < threshold
    # 3x3 majority vote: keep a pixel when at least 5 of its 9 neighbours are set
    votes = uniform_filter(raw.astype(np.float64), size=3, mode="constant") * 9
    mask = votes > 4.5
    labels, _ = label(mask, structure=np.ones((3, 3), dtype=bool))
    boxes = []
    for sl in find_objects(labels):
        if sl is None:
            continue
        box = Rect(sl[1].start, sl[0].start, sl[1].stop - sl[1].start, sl[0].stop - sl[0].start)
        if box.area() >= min_area:
            boxes.append(box)
    return mask, boxes


def layer4_localize(original, subject, threshold: float = MASK_THRESHOLD, min_area: int = MIN_BOX_AREA, ssim_map=None):
    """Mask of low-similarity pixels and the bounding boxes of its components."""
    if ssim_map is None:
        ssim_map = layer1_ssim(original, subject).map
    return _boxes_from_map(ssim_map, threshold, min_area)


def template_search(image, template) -> tuple[int, int, float]:
    """Location (x, y) and value of the normalised cross-correlation maximum."""
    img = check_gray(to_grayscale(image)).astype(np.float64)
    tpl = check_gray(to_grayscale(template)).astype(np.float64)
    th, tw = tpl.shape
    if th > img.shape[0] or tw > img.shape[1]:
        raise ValueError("template larger than image")
    t0 = tpl - tpl.mean()
    tnorm = np.sqrt((t0**2).sum())
    num = fftconvolve(img, t0[::-1, ::-1], mode="valid")

    def window_sum(a):
        c = np.pad(a.cumsum(0).cumsum(1), ((1, 0), (1, 0)))
        return c[th:, tw:] - c[:-th, tw:] - c[th:, :-tw] + c[:-th, :-tw]

    s1 = window_sum(img)
    s2 = window_sum(img * img)
    var = np.maximum(s2 - s1 * s1 / (th * tw), 0.0)
    denom = np.sqrt(var) * tnorm
    with np.errstate(invalid="ignore", divide="ignore"):
        ncc = np.where(denom > 1e-9, num / denom, 0.0)
    y, x = np.unravel_index(int(np.argmax(ncc)), ncc.shape)
    return int(x), int(y), float(ncc[y, x])


def detect_report(
    original,
    subject,
    ssim_flag: float = SSIM_FLAG,
    mfr_flag: float = MFR_FLAG,
    hist_flag: float = HIST_FLAG,
    mask_threshold: float = MASK_THRESHOLD,
    original_features=None,
) -> TamperReport:
    orig = check_image(original, name="original")
    raw_subject = check_image(subject, name="subject")
    aligned = align(orig, raw_subject)

    s = layer1_ssim(orig, aligned)
    # feature matching works on the subject as received
    m = layer2_mfr(orig, raw_subject, original_features=original_features)
    h = layer3_hist(orig, aligned)
    mask, boxes = layer4_localize(orig, aligned, mask_threshold, ssim_map=s.map)
    flags = {
        "ssim": s.score < ssim_flag,
        "mfr": m.percent < mfr_flag,
        "histogram": h < hist_flag,
        "localization": bool(boxes),
    }
    thresholds = {"ssim": ssim_flag, "mfr": mfr_flag, "histogram": hist_flag, "mask": mask_threshold}
    return TamperReport(s.score, s.map, m, h, boxes, mask, flags, thresholds)


class TamperDetector(BaseEstimator):
    """Estimator wrapper: ``fit`` on the trusted original, ``predict`` subjects.

    ``transform`` maps subjects to rows of (ssim, mfr, histogram) scores.
    """

    def __init__(self, ssim_flag=SSIM_FLAG, mfr_flag=MFR_FLAG, hist_flag=HIST_FLAG, mask_threshold=MASK_THRESHOLD):
        self.ssim_flag = ssim_flag
        self.mfr_flag = mfr_flag
        self.hist_flag = hist_flag
        self.mask_threshold = mask_threshold

    def fit(self, original, y=None):
        self.original_ = check_image(original, name="original")
        self.features_ = reference_features(self.original_)
        return self

    def report(self, subject) -> TamperReport:
        return detect_report(
            self.original_, subject, self.ssim_flag, self.mfr_flag, self.hist_flag,
            self.mask_threshold, original_features=self.features_,
        )

    def _subjects(self, X):
        # a single gray or RGB image, otherwise an iterable of images
        if isinstance(X, np.ndarray) and (X.ndim == 2 or (X.ndim == 3 and X.shape[-1] == 3)):
            return [X]
        return list(X)

    def predict(self, X) -> np.ndarray:
        """1 for each suspicious subject, 0 otherwise."""
        return np.array([int(self.report(s).suspicious) for s in self._subjects(X)])

    def transform(self, X) -> np.ndarray:
        rows = []
        for s in self._subjects(X):
            r = self.report(s)
            rows.append([r.ssim, r.mfr.percent, r.histogram])
        return np.array(rows)
