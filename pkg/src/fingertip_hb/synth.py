"""Synthetic fingertip videos with a planted linear Hb -> HSV mean shift.

Each bright frame is drawn in HSV: every pixel channel is
``base + slope * hb`` (plus a sinusoidal pulse on V) with i.i.d. Gaussian
jitter, clamped to [0, 255], rounded, then converted to RGB for storage.
The first ``leading_dark_frames`` frames are near-black RGB noise.

Noise comes from one xoshiro256** lane per (pixel, channel); every frame
consumes exactly two steps of every lane whether it is dark or bright, so
frame ``i`` of a video is the same regardless of how many frames before it
are dark.
"""

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .color import hsv_to_rgb
from .features import HB_RANGE
from .ingest import FrameSequence, write_raw_video
from .rng import XoshiroLanes, Xoshiro256, derive_seed

log = logging.getLogger(__name__)

VALIDATED_HB = (6.0, 14.0)
MEAN_WINDOW = (10.0, 245.0)
DARK_MEAN, DARK_SIGMA = 5.0, 2.0


@dataclass(frozen=True)
class SynthParams:
    width: int = 64
    height: int = 64
    n_frames: int = 300
    hue_base: float = 10.0
    hue_slope: float = -0.8
    sat_base: float = 200.0
    sat_slope: float = 3.0
    val_base: float = 180.0
    val_slope: float = 2.0
    channel_jitter: float = 4.0
    leading_dark_frames: int = 50
    pulse_amplitude: float = 3.0
    pulse_hz: float = 1.2
    fps: float = 30.0

    def __post_init__(self):
        if self.width < 1 or self.height < 1 or self.n_frames < 1:
            raise ValueError("width, height and n_frames must be positive")
        if not 0 <= self.leading_dark_frames <= self.n_frames:
            raise ValueError("leading_dark_frames must lie in [0, n_frames]")
        if self.channel_jitter < 0 or self.pulse_amplitude < 0 or self.fps <= 0:
            raise ValueError("channel_jitter and pulse_amplitude must be >= 0, fps > 0")
        # hue is exempt: the default hue line 10 - 0.8*hb runs below 10 over this range
        lo, hi = MEAN_WINDOW
        for name in ("sat", "val"):
            base, slope = getattr(self, f"{name}_base"), getattr(self, f"{name}_slope")
            for hb in VALIDATED_HB:
                m = base + slope * hb
                if not lo <= m <= hi:
                    raise ValueError(
                        f"{name} mean {m:.3g} at hb={hb} leaves [{lo:g}, {hi:g}]; adjust {name}_base/{name}_slope"
                    )

    def planted_means(self, hb):
        """Noise-free (h, s, v) channel means for ``hb``, before clamping."""
        return (
            self.hue_base + self.hue_slope * hb,
            self.sat_base + self.sat_slope * hb,
            self.val_base + self.val_slope * hb,
        )

    def pulse(self, frame_index):
        """V offset of the 0-based frame ``frame_index``."""
        return self.pulse_amplitude * math.sin(2.0 * math.pi * self.pulse_hz * frame_index / self.fps)


@dataclass
class SynthManifest:
    rows: list
    params: SynthParams
    seed: int
    path: Path | None = None


def synth_video(hb, params=SynthParams(), seed=0, source_id=""):
    if not HB_RANGE[0] <= hb <= HB_RANGE[1]:
        raise ValueError(f"hb {hb} outside [{HB_RANGE[0]}, {HB_RANGE[1]}]")
    p = params
    shape = (p.height, p.width, 3)
    lanes = XoshiroLanes(seed, p.height * p.width * 3)
    noise = np.empty((p.n_frames,) + shape)
    for i in range(p.n_frames):
        noise[i] = lanes.normal().reshape(shape)

    frames = np.empty((p.n_frames,) + shape, dtype=np.uint8)
    n_dark = p.leading_dark_frames
    if n_dark:
        dark = np.clip(DARK_MEAN + DARK_SIGMA * noise[:n_dark], 0.0, 255.0)
        frames[:n_dark] = np.floor(dark + 0.5).astype(np.uint8)
    if n_dark < p.n_frames:
        means = np.broadcast_to(np.array(p.planted_means(hb)), (p.n_frames - n_dark, 3)).copy()
        means[:, 2] += [p.pulse(i) for i in range(n_dark, p.n_frames)]
        hsv = means[:, None, None, :] + p.channel_jitter * noise[n_dark:]
        hsv = np.floor(np.clip(hsv, 0.0, 255.0) + 0.5).astype(np.uint8)
        frames[n_dark:] = hsv_to_rgb(hsv)
    return FrameSequence(frames, source_id=source_id, fps=p.fps)


def planted_hb_values(n, hb_lo, hb_hi, seed):
    """Evenly spaced Hb values; interior points jittered by up to a quarter step."""
    if n < 2:
        raise ValueError("need at least 2 videos")
    if not HB_RANGE[0] <= hb_lo < hb_hi <= HB_RANGE[1]:
        raise ValueError(f"need {HB_RANGE[0]} <= hb_lo < hb_hi <= {HB_RANGE[1]}")
    step = (hb_hi - hb_lo) / (n - 1)
    gen = Xoshiro256(derive_seed(seed, 0))
    values = [hb_lo]
    for i in range(1, n - 1):
        values.append(hb_lo + i * step + gen.uniform(-0.25, 0.25) * step)
    values.append(hb_hi)
    return values


def video_seed(seed, index):
    return derive_seed(seed, 1, index)


def _write_one(job):
    hb, params, vseed, path = job
    seq = synth_video(hb, params, vseed, source_id=Path(path).stem)
    write_raw_video(seq, path)
    return path


def synth_dataset(n, hb_lo, hb_hi, params=SynthParams(), seed=0, out_dir=".", jobs=1):
    """Write ``n`` FTV1 videos and ``manifest.csv`` into ``out_dir``."""
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"{out}: cannot create output directory ({exc})") from None
    hbs = planted_hb_values(n, hb_lo, hb_hi, seed)
    width = max(3, len(str(n - 1)))
    names = [f"video_{i:0{width}d}.ftv" for i in range(n)]
    job_list = [(hb, params, video_seed(seed, i), str(out / name)) for i, (hb, name) in enumerate(zip(hbs, names))]
    if jobs > 1:
        with ProcessPoolExecutor(jobs) as pool:
            list(pool.map(_write_one, job_list))
    else:
        for job in job_list:
            _write_one(job)
    rows = [(name, hb, vs) for name, hb, (_, _, vs, _) in zip(names, hbs, job_list)]
    manifest = SynthManifest(rows, params, int(seed), out / "manifest.csv")
    write_manifest(manifest)
    log.info("wrote %d synthetic videos to %s", n, out)
    return manifest


def write_manifest(manifest):
    with open(manifest.path, "w", newline="") as fh:
        fh.write(f"# seed={manifest.seed}\n")
        fh.write("# params: " + " ".join(f"{k}={v}" for k, v in asdict(manifest.params).items()) + "\n")
        fh.write("# video seeds: derive_seed(seed, 1, index) via splitmix64\n")
        fh.write("video_path,hb_gdl\n")
        for name, hb, _ in manifest.rows:
            fh.write(f"{name},{format(hb, '.17g')}\n")
