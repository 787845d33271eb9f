import math

import numpy as np
import pytest

import pgm


def shifted_pair(tx, ty, size=(72, 96), seed=0):
    rng = np.random.default_rng(seed)
    h, w = size
    img1 = rng.uniform(0, 255, (h, w, 3)).astype(np.float32)
    img2 = rng.uniform(0, 255, (h, w, 3)).astype(np.float32)
    img2[ty:, tx:] = img1[: h - ty, : w - tx]
    return img1, img2


def test_config_defaults():
    cfg = pgm.PipelineConfig()
    assert (cfg.search_bound, cfg.levels, cfg.radius_fwd, cfg.radius_bwd) == (2, 3, 7, 5)
    assert cfg.variant == pgm.Variant.C
    gd = pgm.PipelineConfig(pgm.Variant.GD)
    gd.validate()
    cfg.set_levels(4)
    assert cfg.levels == 4
    cfg.factor = 1.5
    with pytest.raises(pgm.InvalidParameter):
        cfg.validate()


def test_match_recovers_translation():
    img1, img2 = shifted_pair(4, 3)
    offsets, valid = pgm.match(img1, img2)
    assert offsets.shape == (72, 96, 2) and valid.shape == (72, 96)
    interior = valid[10:-10, 10:-10]
    hits = (offsets[10:-10, 10:-10] == [4, 3]).all(axis=2) & interior
    assert hits.mean() > 0.9


def test_flow_and_metrics():
    img1, img2 = shifted_pair(2, 1, seed=3)
    f = pgm.flow(img1, img2)
    gt = np.zeros_like(f)
    gt[..., 0], gt[..., 1] = 2.0, 1.0
    aee, bad, n = pgm.endpoint_metrics(f, gt)
    assert n == 72 * 96
    assert aee < 0.5 and bad < 0.05
    aee, bad, n = pgm.endpoint_metrics(f, gt, np.zeros((72, 96), bool))
    assert n == 0 and math.isnan(aee)


def test_sparse_matches_and_densify():
    img1, img2 = shifted_pair(0, 0, size=(48, 64), seed=5)
    m = pgm.sparse_matches(img1, img1, spacing=4)
    assert m.shape[1] == 4 and len(m) > 0.9 * 12 * 16
    assert ((m[:, 0] % 4) == 0).all()
    dense = pgm.densify(np.array([[0, 0, 3, 5]]), 8, 6, "nw")
    assert np.all(dense == [3, 5])
    with pytest.raises(pgm.InvalidInput):
        pgm.densify(np.zeros((0, 4), np.int32), 8, 6)
    assert pgm.select_interpolator(220, 100, 100) == "NW"
    assert pgm.select_interpolator(221, 100, 100) == "LA"


def test_flo_round_trip(tmp_path):
    f = np.random.default_rng(1).normal(size=(5, 7, 2)).astype(np.float32)
    pgm.write_flo(f, tmp_path / "a.flo")
    assert (tmp_path / "a.flo").stat().st_size == 12 + 5 * 7 * 8
    np.testing.assert_array_equal(pgm.read_flo(tmp_path / "a.flo"), f)
    (tmp_path / "bad.flo").write_bytes(b"nope" * 5)
    with pytest.raises(pgm.FormatError):
        pgm.read_flo(tmp_path / "bad.flo")
    with pytest.raises(pgm.IoError):
        pgm.read_flo(tmp_path / "missing.flo")


def test_flow_to_color():
    white = pgm.flow_to_color(np.zeros((3, 4, 2), np.float32))
    assert white.shape == (3, 4, 3) and np.all(white == 255)
    east = pgm.flow_to_color(np.array([[[5.0, 0.0]]], np.float32), 5.0)
    np.testing.assert_allclose(east[0, 0], [255, 0, 0], atol=1e-3)


def test_synthetic_case():
    c = pgm.synthetic_case("occlusion", 2)
    assert c["name"] == "occlusion-02"
    assert c["img1"].shape == (96, 128, 3)
    assert c["occluded"].sum() == 400
    assert not (c["mask"] & c["occluded"]).any()
    with pytest.raises(pgm.InvalidParameter):
        pgm.synthetic_case("sintel", 0)
