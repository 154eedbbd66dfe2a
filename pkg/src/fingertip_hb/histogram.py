"""256-bin per-channel histograms of HSV frames."""

from dataclasses import dataclass

import numpy as np

N_BINS = 256
CHANNELS = ("h", "s", "v")


@dataclass
class ChannelHistogram:
    bins: np.ndarray
    channel: str = ""

    def __post_init__(self):
        self.bins = np.asarray(self.bins, dtype=np.float64)
        if self.bins.shape != (N_BINS,):
            raise ValueError(f"histogram must have {N_BINS} bins, got {self.bins.shape}")
        if np.any(self.bins < 0):
            raise ValueError("histogram bins must be non-negative")

    @property
    def total(self):
        return float(self.bins.sum())


@dataclass
class FrameHistograms:
    h: ChannelHistogram
    s: ChannelHistogram
    v: ChannelHistogram

    def concat(self):
        """H || S || V as one 768-vector."""
        return np.concatenate([self.h.bins, self.s.bins, self.v.bins])


def channel_histogram(values, channel=""):
    """Count occurrences of each byte value. Empty input gives all zeros."""
    values = np.asarray(values).ravel()
    if values.size and (values.min() < 0 or values.max() > 255):
        raise ValueError("histogram input must lie in [0, 255]")
    counts = np.bincount(values.astype(np.int64), minlength=N_BINS)
    return ChannelHistogram(counts.astype(np.float64), channel)


def frame_histograms(hsv_frame):
    hsv_frame = np.asarray(hsv_frame)
    if hsv_frame.ndim != 3 or hsv_frame.shape[-1] != 3:
        raise ValueError(f"expected a (height, width, 3) HSV frame, got {hsv_frame.shape}")
    return FrameHistograms(
        *(channel_histogram(hsv_frame[..., i], name) for i, name in enumerate(CHANNELS))
    )


def average_histograms(hists):
    """Bin-wise mean, accumulated in input order so the result is reproducible."""
    hists = list(hists)
    if not hists:
        raise ValueError("cannot average an empty sequence of histograms")
    channel = hists[0].channel
    if any(h.channel != channel for h in hists):
        raise ValueError("cannot average histograms of different channels")
    acc = np.zeros(N_BINS)
    for h in hists:
        acc += h.bins
    return ChannelHistogram(acc / len(hists), channel)
