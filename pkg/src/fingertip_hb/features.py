"""Video -> 768-feature observation, dataset assembly and standardization.

Feature layout: position ``p`` holds bin ``p % 256`` of channel
``"hsv"[p // 256]``.
"""

import csv
import warnings
from dataclasses import dataclass, field

import numpy as np

from .color import convert_frame
from .histogram import CHANNELS, N_BINS, ChannelHistogram, average_histograms, frame_histograms
from .ingest import WindowSpec, select_window

N_FEATURES = len(CHANNELS) * N_BINS
HB_RANGE = (3.0, 25.0)


def feature_position(channel, bin_index):
    return CHANNELS.index(channel) * N_BINS + bin_index


@dataclass
class FeatureVector:
    values: np.ndarray
    source_id: str = ""

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.shape != (N_FEATURES,):
            raise ValueError(f"feature vector must have {N_FEATURES} values, got {self.values.shape}")


@dataclass
class Dataset:
    x: np.ndarray
    y: np.ndarray
    ids: list = field(default_factory=list)
    normalize: bool = False

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=np.float64)
        self.y = np.asarray(self.y, dtype=np.float64)
        n = len(self.y)
        if n < 1 or self.x.shape != (n, N_FEATURES) or len(self.ids) != n:
            raise ValueError(
                f"inconsistent dataset: x {self.x.shape}, y ({n},), ids ({len(self.ids)},)"
            )
        lo, hi = HB_RANGE
        bad = ~((self.y >= lo) & (self.y <= hi))
        if bad.any():
            i = int(np.argmax(bad))
            raise ValueError(f"{self.ids[i]}: hb {self.y[i]} g/dL outside plausible range [{lo}, {hi}]")

    def __len__(self):
        return len(self.y)


def video_feature_vector(seq, window=WindowSpec(), normalize=False):
    """Average the H, S and V histograms of the window frames of one video."""
    frames = select_window(seq, window)
    hsv = convert_frame(frames)
    per_frame = [frame_histograms(f) for f in hsv]
    n_pixels = seq.width * seq.height
    channels = []
    for name in CHANNELS:
        hists = [getattr(fh, name) for fh in per_frame]
        if normalize:
            hists = [ChannelHistogram(h.bins / n_pixels, h.channel) for h in hists]
        channels.append(average_histograms(hists).bins)
    return FeatureVector(np.concatenate(channels), seq.source_id)


def assemble_dataset(rows, normalize=False):
    """Stack ``(FeatureVector, hb, id)`` rows into a :class:`Dataset`."""
    rows = list(rows)
    if not rows:
        raise ValueError("cannot assemble an empty dataset")
    lo, hi = HB_RANGE
    seen = set()
    for _, hb, ident in rows:
        if not (lo <= hb <= hi) or not np.isfinite(hb):
            raise ValueError(f"{ident}: hb {hb} g/dL outside plausible range [{lo}, {hi}]")
        if ident in seen:
            warnings.warn(f"duplicate observation id {ident!r}", stacklevel=2)
        seen.add(ident)
    x = np.stack([fv.values for fv, _, _ in rows])
    y = np.array([hb for _, hb, _ in rows], dtype=np.float64)
    return Dataset(x, y, [ident for _, _, ident in rows], normalize)


@dataclass
class Standardizer:
    means: np.ndarray
    scales: np.ndarray
    constant_mask: np.ndarray


def fit_standardizer(x):
    """Column means and sample (N-1) standard deviations.

    Constant columns keep scale 1 and are centered on their exact value, so
    they transform to exact zeros.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] < 2:
        raise ValueError("standardizer needs a 2-D matrix with at least 2 rows")
    constant = np.all(x == x[0], axis=0)
    means = np.where(constant, x[0], x.mean(axis=0))
    scales = np.where(constant, 1.0, x.std(axis=0, ddof=1))
    return Standardizer(means, scales, constant)


def apply_standardizer(s, x):
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != s.means.shape[0]:
        raise ValueError(f"expected {s.means.shape[0]} columns, got {x.shape[-1]}")
    return (x - s.means) / s.scales


# --- feature CSV ------------------------------------------------------------

def _fmt(v):
    return format(float(v), ".17g")


def write_features_csv(path, dataset, extra_comments=()):
    """Write ``id,hb_gdl,f0..f767`` with a leading ``# normalize=...`` line."""
    with open(path, "w", newline="") as fh:
        fh.write(f"# normalize={'true' if dataset.normalize else 'false'}\n")
        for line in extra_comments:
            fh.write(f"# {line}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["id", "hb_gdl"] + [f"f{i}" for i in range(N_FEATURES)])
        for ident, hb, row in zip(dataset.ids, dataset.y, dataset.x):
            w.writerow([ident, _fmt(hb)] + [_fmt(v) for v in row])


def read_features_csv(path):
    normalize = False
    body = []
    with open(path, newline="") as fh:
        for line in fh:
            if line.startswith("#"):
                key, _, val = line[1:].strip().partition("=")
                if key.strip() == "normalize":
                    normalize = val.strip().lower() == "true"
            elif line.strip():
                body.append(line)
    reader = csv.reader(body)
    header = next(reader, None)
    expected = ["id", "hb_gdl"] + [f"f{i}" for i in range(N_FEATURES)]
    if header != expected:
        raise ValueError(f"{path}: feature CSV header must be id,hb_gdl,f0..f{N_FEATURES - 1}")
    ids, ys, xs = [], [], []
    for lineno, row in enumerate(reader, start=2):
        if len(row) != len(expected):
            raise ValueError(f"{path}: row {lineno} has {len(row)} fields, expected {len(expected)}")
        ids.append(row[0])
        ys.append(float(row[1]))
        xs.append([float(v) for v in row[2:]])
    if not ids:
        raise ValueError(f"{path}: no observations")
    return Dataset(np.array(xs), np.array(ys), ids, normalize)
