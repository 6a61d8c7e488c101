"""Smoke tests for the python module: each main operation once, against numpy."""

import math
import os
import sys
import tempfile

import numpy as np

import mdkpy


def test_truncated_svd():
    rng = np.random.default_rng(7)
    a = rng.normal(size=(20, 12))

    u, s, v = mdkpy.truncated_svd(a)
    np_s = np.linalg.svd(a, compute_uv=False)
    assert s.shape == np_s.shape
    assert np.allclose(s, np_s, rtol=1e-9, atol=1e-12)
    assert np.allclose(u @ np.diag(s) @ v.T, a, atol=1e-9)

    u5, s5, v5 = mdkpy.truncated_svd(a, rank=5)
    assert s5.shape == (5,)
    err = np.linalg.norm(a - u5 @ np.diag(s5) @ v5.T)
    oracle = math.sqrt(float(np.sum(np_s[5:] ** 2)))
    assert abs(err - oracle) <= 1e-9 * oracle

    try:
        mdkpy.truncated_svd(a, rank=3, tolerance=0.1)
    except ValueError:
        pass
    else:
        raise AssertionError("rank and tolerance together must be rejected")


def test_hosvd():
    rng = np.random.default_rng(11)
    t = rng.normal(size=(6, 5, 8))
    out = mdkpy.hosvd(t, eps=1e-12)
    assert out["ranks"] == (6, 5, 8)
    assert np.allclose(out["reconstruction"], t, atol=1e-9)
    assert len(out["factors"]) == 3
    assert out["factors"][0].shape == (6, out["ranks"][0])


def test_hodmd_two_tone():
    frames, dt = mdkpy.two_tone_video()
    assert frames.shape == (16, 16, 250)
    assert dt == 0.004

    res = mdkpy.hodmd(frames, dt=dt)
    assert res["converged"]
    freqs = np.sort(res["frequencies_hz"])
    assert len(freqs) == 4
    assert abs(freqs[0] - 5.0) <= 1e-6 * 5.0
    assert abs(freqs[-1] - 11.0) <= 1e-6 * 11.0

    rel = np.linalg.norm(res["reconstruction"] - frames) / np.linalg.norm(frames)
    assert rel <= 1e-6

    modes = res["modes"]
    assert len(modes) == 4
    assert modes[0].dtype == np.complex128
    assert modes[0].shape == (16, 16)
    assert abs(np.linalg.norm(modes[0]) - 1.0) <= 1e-9


def test_lr_schedule():
    assert mdkpy.lr_schedule(5, 2.5e-4, 5, 105) == 2.5e-4
    assert mdkpy.lr_schedule(105, 2.5e-4, 5, 105) == 0.0
    assert mdkpy.lr_schedule(55, 2.5e-4, 5, 105) == 1.25e-4


def test_model_roundtrip():
    m = mdkpy.Model(img_h=8, img_w=8, patch=4, enc_blocks=1, enc_heads=2, enc_dim=8,
                    mlp_ratio=2.0, dec_dim=8, dec_blocks=1, dec_heads=2, seed=3)
    assert m.config["img_h"] == 8

    rng = np.random.default_rng(5)
    img = rng.uniform(size=(8, 8))
    y1 = m.predict(img)
    y2 = m.predict(img)
    assert y1 == y2
    assert math.isfinite(y1)

    big = rng.uniform(size=(24, 20))
    assert math.isfinite(m.predict(big))  # resized internally

    with tempfile.TemporaryDirectory() as d:
        path = os.path.join(d, "model.mdck")
        m.save(path)
        m2 = mdkpy.Model.load(path)
        assert m2.predict(img) == y1
        assert m2.config == m.config

    try:
        mdkpy.Model(img_h=7, img_w=8, patch=4)
    except ValueError:
        pass
    else:
        raise AssertionError("patch must divide the image sides")

    try:
        m.predict(rng.uniform(size=(4, 4, 2)))
    except ValueError:
        pass
    else:
        raise AssertionError("3-d input to predict must be rejected")


def main():
    tests = [
        test_truncated_svd,
        test_hosvd,
        test_hodmd_two_tone,
        test_lr_schedule,
        test_model_roundtrip,
    ]
    for t in tests:
        t()
        print(f"ok {t.__name__}")
    print(f"{len(tests)} smoke tests passed")
    return 0


if __name__ == "__main__":
    sys.exit(main())
