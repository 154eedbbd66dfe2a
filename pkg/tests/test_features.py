import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import make_seq
from fingertip_hb.color import convert_frame
from fingertip_hb.features import (
    N_FEATURES,
    Dataset,
    FeatureVector,
    Standardizer,
    apply_standardizer,
    assemble_dataset,
    feature_position,
    fit_standardizer,
    read_features_csv,
    video_feature_vector,
    write_features_csv,
)
from fingertip_hb.histogram import frame_histograms
from fingertip_hb.ingest import WindowSpec


def test_layout():
    assert feature_position("h", 0) == 0
    assert feature_position("s", 255) == 511
    assert feature_position("v", 255) == 767
    for p in (0, 255, 256, 600, 767):
        assert feature_position("hsv"[p // 256], p % 256) == p


def test_single_red_pixel_video():
    seq = make_seq(np.tile([255, 0, 0], (300, 1, 1, 1)))
    fv = video_feature_vector(seq)
    expected = np.zeros(768)
    expected[[0, 256 + 255, 512 + 255]] = 1.0
    assert np.array_equal(fv.values, expected)


def test_identical_frames_give_the_frame_histogram(rng):
    frame = rng.integers(0, 256, size=(6, 5, 3)).astype(np.uint8)
    fv = video_feature_vector(make_seq(np.repeat(frame[None], 250, axis=0)))
    assert np.array_equal(fv.values, frame_histograms(convert_frame(frame)).concat())


def test_window_averages_exactly_frames_101_to_200():
    # frame i has grey level i % 256; only 101..200 may contribute
    frames = np.zeros((300, 1, 1, 3), np.uint8)
    frames[:, 0, 0, :] = (np.arange(1, 301) % 256)[:, None]
    fv = video_feature_vector(make_seq(frames), WindowSpec(101, 200))
    v = fv.values[512:]
    assert np.count_nonzero(v) == 100
    assert np.all(v[101:201] == 1 / 100)


def test_normalized_vector_sums_to_three(rng):
    frames = rng.integers(0, 256, size=(120, 4, 8, 3))
    fv = video_feature_vector(make_seq(frames), WindowSpec(1, 120), normalize=True)
    assert fv.values.sum() == pytest.approx(3.0, rel=1e-12)
    raw = video_feature_vector(make_seq(frames), WindowSpec(1, 120))
    assert np.allclose(fv.values, raw.values / 32, rtol=1e-12)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_invariant_to_within_frame_pixel_permutation(seed):
    r = np.random.default_rng(seed)
    frames = r.integers(0, 256, size=(10, 3, 4, 3)).astype(np.uint8)
    shuffled = np.stack([f.reshape(12, 3)[r.permutation(12)].reshape(3, 4, 3) for f in frames])
    a = video_feature_vector(make_seq(frames), WindowSpec(1, 10))
    b = video_feature_vector(make_seq(shuffled), WindowSpec(1, 10))
    assert np.array_equal(a.values, b.values)


def test_feature_vector_length_enforced():
    with pytest.raises(ValueError):
        FeatureVector(np.zeros(767))


def _rows(n, rng):
    return [(FeatureVector(rng.random(768)), 6.0 + i * 0.2, f"id{i}") for i in range(n)]


def test_assemble_dataset_shapes(rng):
    ds = assemble_dataset(_rows(30, rng))
    assert ds.x.shape == (30, 768)
    assert ds.ids[3] == "id3" and ds.y[3] == pytest.approx(6.6)
    assert assemble_dataset(_rows(1, rng)).x.shape == (1, 768)


def test_assemble_dataset_rejects_implausible_hb(rng):
    rows = _rows(3, rng) + [(FeatureVector(np.zeros(768)), 0.5, "bad-unit")]
    with pytest.raises(ValueError, match="bad-unit"):
        assemble_dataset(rows)


def test_duplicate_id_warns(rng):
    rows = _rows(2, rng)
    rows[1] = (rows[1][0], rows[1][1], "id0")
    with pytest.warns(UserWarning, match="duplicate"):
        assemble_dataset(rows)


def test_dataset_rejects_out_of_range_y():
    with pytest.raises(ValueError):
        Dataset(np.zeros((2, 768)), [10.0, 130.0], ["a", "b"])


def test_standardizer_examples():
    x = np.zeros((3, 768))
    x[:, 0] = [1, 2, 3]
    x[:, 1] = 5
    s = fit_standardizer(x)
    assert s.means[0] == 2 and s.scales[0] == 1 and not s.constant_mask[0]
    assert s.means[1] == 5 and s.scales[1] == 1 and s.constant_mask[1]
    two = np.zeros((2, 768))
    two[:, 0] = [0, 10]
    s2 = fit_standardizer(two)
    assert s2.means[0] == 5
    assert s2.scales[0] == pytest.approx(7.0710678118654755, rel=1e-15)  # sqrt(50)


def test_standardizer_needs_two_rows():
    with pytest.raises(ValueError):
        fit_standardizer(np.zeros((1, 768)))


def test_standardize_own_data(rng):
    x = rng.normal(3.0, 5.0, size=(30, 768))
    x[:, 50:60] = 0.1  # constant, not exactly representable
    s = fit_standardizer(x)
    z = apply_standardizer(s, x)
    live = ~s.constant_mask
    assert np.all(np.abs(z[:, live].mean(axis=0)) < 1e-10)
    assert np.all(np.abs(z[:, live].std(axis=0, ddof=1) - 1) < 1e-10)
    assert np.all(z[:, 50:60] == 0.0)
    assert np.all(s.scales > 0)


def test_standardize_means_give_zero(rng):
    s = fit_standardizer(rng.random((5, 768)))
    assert np.array_equal(apply_standardizer(s, s.means), np.zeros(768))


def test_standardizer_dimension_mismatch():
    s = Standardizer(np.zeros(768), np.ones(768), np.zeros(768, bool))
    with pytest.raises(ValueError):
        apply_standardizer(s, np.zeros(767))


@given(st.floats(-3, 3), st.integers(0, 2**32 - 1))
def test_standardizer_is_affine(alpha, seed):
    r = np.random.default_rng(seed)
    s = fit_standardizer(r.random((4, 768)) * 100)
    a, b = r.random(768) * 100, r.random(768) * 100
    lhs = apply_standardizer(s, alpha * a + (1 - alpha) * b)
    rhs = alpha * apply_standardizer(s, a) + (1 - alpha) * apply_standardizer(s, b)
    assert np.allclose(lhs, rhs, rtol=1e-9, atol=1e-9 * np.abs(rhs).max())


def test_feature_csv_round_trip_is_exact(tmp_path, rng):
    ds = assemble_dataset(_rows(4, rng), normalize=True)
    ds.x[0, 0] = 1 / 3
    write_features_csv(tmp_path / "f.csv", ds, ["window=101-200"])
    text = (tmp_path / "f.csv").read_text().splitlines()
    assert text[0] == "# normalize=true"
    assert text[2].startswith("id,hb_gdl,f0,f1,")
    assert text[2].endswith(",f767")
    back = read_features_csv(tmp_path / "f.csv")
    assert back.normalize is True
    assert back.ids == ds.ids
    assert np.array_equal(back.x, ds.x) and np.array_equal(back.y, ds.y)


def test_feature_csv_bad_header(tmp_path):
    (tmp_path / "f.csv").write_text("id,hb_gdl,f0\nx,9,1\n")
    with pytest.raises(ValueError, match="header"):
        read_features_csv(tmp_path / "f.csv")


def test_n_features_constant():
    assert N_FEATURES == 768
