"""Frame-sequence loading, analysis-window selection and dark-frame checks.

Video containers are not decoded here. Phone recordings are first dumped
to a directory of PPM frames with an external tool, e.g.::

    ffmpeg -i finger.mp4 -vf format=rgb24 frames/%05d.ppm

and then loaded with :func:`load_frame_dir`. Synthetic videos use the
FTV1 raw container (:func:`load_raw_video`, :func:`write_raw_video`):

====================  ==========================================
offset                content
====================  ==========================================
0                     magic ``b"FTV1"``
4, 8, 12              width, height, frame_count (``<u4`` each)
16                    fps flag byte: 1 if an fps field follows, else 0
17 (flag = 1 only)    fps as ``<f8``
then                  frame_count * height * width * 3 bytes RGB24,
                      row-major, frame after frame
====================  ==========================================
"""

import csv
import os
import struct
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .color import rgb_to_hsv

FTV_MAGIC = b"FTV1"
DEFAULT_WINDOW = (101, 200)
DEFAULT_DARK_THRESHOLD = 20.0

_FRAME_EXTENSIONS = {".ppm", ".png"}


class IngestError(ValueError):
    """Raised for unreadable, malformed or inconsistent frame input."""


class WindowFallbackWarning(UserWarning):
    """The requested window did not fit and the middle third was used."""


@dataclass
class FrameSequence:
    """Ordered RGB frames as a ``(n, height, width, 3)`` uint8 array."""

    frames: np.ndarray
    source_id: str = ""
    fps: float | None = None

    def __post_init__(self):
        self.frames = np.asarray(self.frames, dtype=np.uint8)
        if self.frames.ndim != 4 or self.frames.shape[-1] != 3:
            raise IngestError(f"frames must have shape (n, height, width, 3), got {self.frames.shape}")
        if self.frames.shape[1] < 1 or self.frames.shape[2] < 1:
            raise IngestError("frame width and height must be at least 1")

    def __len__(self):
        return self.frames.shape[0]

    @property
    def height(self):
        return self.frames.shape[1]

    @property
    def width(self):
        return self.frames.shape[2]


@dataclass(frozen=True)
class WindowSpec:
    """1-based inclusive frame range."""

    start: int = DEFAULT_WINDOW[0]
    end: int = DEFAULT_WINDOW[1]

    def __post_init__(self):
        if not 1 <= self.start <= self.end:
            raise ValueError(f"invalid window {self.start}-{self.end}")


@dataclass(frozen=True)
class FrameQuality:
    index: int
    mean_v: float
    dark: bool


# --- PPM / PNG --------------------------------------------------------------

def _ppm_tokens(data, count):
    """Read ``count`` whitespace-separated header tokens, skipping comments."""
    tokens, pos = [], 2
    while len(tokens) < count:
        if pos >= len(data):
            raise IngestError("truncated PPM header")
        c = data[pos:pos + 1]
        if c == b"#":
            nl = data.find(b"\n", pos)
            pos = len(data) if nl < 0 else nl + 1
        elif c.isspace():
            pos += 1
        else:
            end = pos
            while end < len(data) and not data[end:end + 1].isspace() and data[end:end + 1] != b"#":
                end += 1
            tokens.append(data[pos:end])
            pos = end
    # exactly one whitespace byte separates the header from the raster
    return tokens, pos + 1


def read_ppm(path):
    """Read a binary (P6) PPM with maxval 255 as a ``(h, w, 3)`` uint8 array."""
    data = Path(path).read_bytes()
    if data[:2] != b"P6":
        raise IngestError(f"{path}: not a binary PPM (P6) file")
    try:
        tokens, start = _ppm_tokens(data, 3)
        width, height, maxval = (int(t) for t in tokens)
    except ValueError as exc:
        raise IngestError(f"{path}: bad PPM header ({exc})") from None
    if maxval != 255:
        raise IngestError(f"{path}: unsupported PPM maxval {maxval} (need 255)")
    if width < 1 or height < 1:
        raise IngestError(f"{path}: bad PPM dimensions {width}x{height}")
    expected = width * height * 3
    raster = data[start:start + expected]
    if len(raster) != expected:
        raise IngestError(f"{path}: truncated PPM raster, expected {expected} bytes, got {len(raster)}")
    return np.frombuffer(raster, dtype=np.uint8).reshape(height, width, 3)


def write_ppm(path, frame):
    frame = np.asarray(frame, dtype=np.uint8)
    h, w, _ = frame.shape
    with open(path, "wb") as fh:
        fh.write(b"P6\n%d %d\n255\n" % (w, h))
        fh.write(frame.tobytes())


def read_png(path):
    try:
        from PIL import Image
    except ImportError:  # pragma: no cover
        raise IngestError(f"{path}: PNG support requires Pillow (pip install 'artifact[png]')") from None
    try:
        with Image.open(path) as im:
            return np.asarray(im.convert("RGB"), dtype=np.uint8)
    except OSError as exc:
        raise IngestError(f"{path}: unreadable PNG ({exc})") from None


def load_frame_dir(path):
    """Load every ``.ppm``/``.png`` file of a directory in filename order."""
    path = Path(path)
    if not path.is_dir():
        raise IngestError(f"{path}: not a directory")
    files = sorted(p for p in path.iterdir() if p.suffix.lower() in _FRAME_EXTENSIONS)
    if not files:
        raise IngestError(f"{path}: no .ppm or .png frames found")
    frames = []
    for f in files:
        frame = read_ppm(f) if f.suffix.lower() == ".ppm" else read_png(f)
        if frames and frame.shape != frames[0].shape:
            raise IngestError(
                f"dimension mismatch: {files[0].name} is {frames[0].shape[1]}x{frames[0].shape[0]}, "
                f"{f.name} is {frame.shape[1]}x{frame.shape[0]}"
            )
        frames.append(frame)
    return FrameSequence(np.stack(frames), source_id=path.name)


# --- FTV1 -------------------------------------------------------------------

_HEADER = struct.Struct("<4sIIIB")
_FPS = struct.Struct("<d")


def write_raw_video(seq, path):
    """Write ``seq`` as an FTV1 file."""
    if len(seq) == 0:
        raise IngestError("cannot write an empty frame sequence")
    n, h, w, _ = seq.frames.shape
    has_fps = seq.fps is not None
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(FTV_MAGIC, w, h, n, 1 if has_fps else 0))
        if has_fps:
            fh.write(_FPS.pack(float(seq.fps)))
        fh.write(np.ascontiguousarray(seq.frames).tobytes())


def load_raw_video(path):
    path = Path(path)
    data = path.read_bytes()
    if len(data) < _HEADER.size:
        raise IngestError(f"{path}: file too short for an FTV1 header")
    magic, width, height, count, flag = _HEADER.unpack_from(data)
    if magic != FTV_MAGIC:
        raise IngestError(f"{path}: bad magic {magic!r}, expected {FTV_MAGIC!r}")
    if flag not in (0, 1):
        raise IngestError(f"{path}: bad fps flag byte {flag}")
    if width < 1 or height < 1 or count < 1:
        raise IngestError(f"{path}: bad FTV1 dimensions {width}x{height}x{count}")
    offset = _HEADER.size
    fps = None
    if flag:
        if len(data) < offset + _FPS.size:
            raise IngestError(f"{path}: truncated fps field")
        (fps,) = _FPS.unpack_from(data, offset)
        offset += _FPS.size
    expected = count * width * height * 3
    actual = len(data) - offset
    if actual != expected:
        kind = "truncated payload" if actual < expected else "trailing bytes after payload"
        raise IngestError(f"{path}: {kind}: expected {expected} bytes, got {actual}")
    frames = np.frombuffer(data, dtype=np.uint8, offset=offset).reshape(count, height, width, 3)
    return FrameSequence(frames, source_id=path.stem, fps=fps)


def load_video(path):
    """Load a frame directory or an FTV1 file, whichever ``path`` is."""
    return load_frame_dir(path) if os.path.isdir(path) else load_raw_video(path)


# --- manifest ---------------------------------------------------------------

def read_manifest(path):
    """Read a ``video_path,hb_gdl`` manifest; ``#`` lines are comments.

    Relative video paths are resolved against the manifest's directory.
    Returns a list of ``(path_as_written, resolved_path, hb)`` tuples.
    """
    path = Path(path)
    with open(path, newline="") as fh:
        lines = [ln for ln in fh if not ln.startswith("#") and ln.strip()]
    reader = csv.DictReader(lines)
    if reader.fieldnames is None or [f.strip() for f in reader.fieldnames][:2] != ["video_path", "hb_gdl"]:
        raise IngestError(f"{path}: manifest header must be 'video_path,hb_gdl'")
    rows = []
    for i, row in enumerate(reader, start=1):
        try:
            hb = float(row["hb_gdl"])
        except (TypeError, ValueError):
            raise IngestError(f"{path}: row {i}: bad hb_gdl {row['hb_gdl']!r}") from None
        video = row["video_path"].strip()
        rows.append((video, path.parent / video, hb))
    if not rows:
        raise IngestError(f"{path}: manifest has no rows")
    return rows


# --- windowing and quality --------------------------------------------------

def window_indices(n, window=WindowSpec()):
    """1-based ``(first, last, fell_back)`` of the frames :func:`select_window` picks."""
    if n < 3:
        raise IngestError(f"{n} frames is too short for windowing")
    if n >= window.end:
        return window.start, window.end, False
    return n // 3 + 1, (2 * n) // 3, True


def select_window(seq, window=WindowSpec()):
    """Frames ``window.start .. window.end`` (1-based, inclusive).

    When the sequence has fewer than ``window.end`` frames the middle third
    (``len//3 + 1 .. 2*len//3``) is used instead and a
    :class:`WindowFallbackWarning` is issued.
    """
    n = len(seq)
    name = seq.source_id or "sequence"
    try:
        lo, hi, fell_back = window_indices(n, window)
    except IngestError as exc:
        raise IngestError(f"{name}: {exc}") from None
    if fell_back:
        warnings.warn(
            f"{name}: window {window.start}-{window.end} needs {window.end} frames, "
            f"have {n}; using middle third {lo}-{hi}",
            WindowFallbackWarning,
            stacklevel=2,
        )
    return seq.frames[lo - 1:hi]


def frame_quality(seq, dark_threshold=DEFAULT_DARK_THRESHOLD):
    """Mean V channel of every frame, flagged dark below ``dark_threshold``."""
    out = []
    for i, frame in enumerate(seq.frames, start=1):
        mean_v = float(rgb_to_hsv(frame)[..., 2].mean())
        out.append(FrameQuality(i, mean_v, mean_v < dark_threshold))
    return out
