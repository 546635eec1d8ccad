import numpy as np
import pytest

import polyinr as pi


@pytest.fixture(scope="module")
def small():
    cfg = pi.GeneratorConfig(z_dim=4, w_dim=8, levels=3, feature_dim=8)
    return cfg, pi.init_generator(cfg, seed=1)


def test_param_count_matches_default_config():
    assert pi.count_params(pi.GeneratorConfig()) == 10803715
    cfg = pi.GeneratorConfig(z_dim=4, w_dim=8, levels=3, feature_dim=8)
    assert pi.init_generator(cfg).parameter_count() == pi.count_params(cfg)


def test_sample_shape_and_determinism(small):
    _, gen = small
    a = pi.sample(gen, seed=3, height=6, width=5)
    b = pi.sample(gen, seed=3, height=6, width=5)
    assert a.shape == (6, 5, 3) and a.dtype == np.float32
    assert np.array_equal(a, b)


def test_affine_pipeline_matches_sample(small):
    cfg, gen = small
    affine = pi.affine_from_seed(gen, 3)
    assert len(affine) == 3 and affine[0].shape == (8, 3)
    assert np.array_equal(pi.synthesize(gen, affine, 6, 5), pi.sample(gen, 3, 6, 5))
    z = pi.random_latent(cfg, 3)
    assert all(np.array_equal(x, y) for x, y in zip(pi.affine_from_latent(gen, z), affine))


def test_constant_image_when_coordinates_dropped(small):
    _, gen = small
    affine = [a.copy() for a in pi.affine_from_seed(gen, 2)]
    for a in affine:
        a[:, :2] = 0.0
    img = pi.synthesize(gen, affine, 7, 7)
    assert np.ptp(img.reshape(-1, 3), axis=0).max() == 0.0


def test_manipulations(small):
    _, gen = small
    a, b = pi.affine_from_seed(gen, 1), pi.affine_from_seed(gen, 2)
    assert np.array_equal(pi.interpolate(gen, a, b, 0.0, 5, 5), pi.synthesize(gen, a, 5, 5))
    assert np.array_equal(pi.style_mix(gen, a, b, "0-2", 5, 5), pi.synthesize(gen, a, 5, 5))
    ext = pi.extrapolate(gen, a, 0.25, 7, 7)
    assert np.array_equal(ext[1:6, 1:6], pi.synthesize(gen, a, 5, 5))
    up = pi.upsample(gen, a, 4, 4, 3)
    assert np.array_equal(up[::3, ::3], pi.synthesize(gen, a, 4, 4))
    heat = pi.heatmap(gen, a, 5, 5, level=1)
    assert heat.shape == (5, 5) and heat.min() == 0.0 and heat.max() == 1.0


def test_errors(small):
    _, gen = small
    a = pi.affine_from_seed(gen, 1)
    with pytest.raises(pi.ArgumentError):
        pi.interpolate(gen, a, a, 1.5, 4, 4)
    with pytest.raises(ValueError):
        pi.style_mix(gen, a, a, "5", 4, 4)
    with pytest.raises(pi.ArgumentError):
        pi.extrapolate(gen, a, -0.1, 4, 4)
    with pytest.raises(pi.FormatError):
        pi.Generator.from_bytes(b"XXXX\x01\x00\x00\x00")
    with pytest.raises(pi.TruncationError):
        pi.Generator.from_bytes(gen.to_bytes()[:-3])


def test_checkpoint_and_png_round_trip(tmp_path, small):
    _, gen = small
    gen.save(tmp_path / "g.pinr")
    assert pi.Generator.load(tmp_path / "g.pinr") == gen
    img = pi.sample(gen, 4, 6, 6)
    pi.write_png(tmp_path / "a.png", img)
    back = pi.read_png(tmp_path / "a.png")
    pi.write_png(tmp_path / "b.png", back)
    assert (tmp_path / "a.png").read_bytes() == (tmp_path / "b.png").read_bytes()


def test_metrics():
    a = np.full((4, 4, 3), -0.4, dtype=np.float32)
    b = np.full((4, 4, 3), 0.4, dtype=np.float32)
    assert pi.psnr(a, a) == 99.0
    assert abs(pi.ssim(a, b) - 0.7242) < 5e-4


def test_fit_and_invert(small):
    cfg, gen = small
    target = np.zeros((8, 8, 3), dtype=np.float32)
    target[..., 0] = 0.3
    fitted, losses, render = pi.fit_single_image(cfg, target, steps=200, lr=1e-2, seed=1)
    assert losses[-1] < losses[0]
    assert pi.psnr(render, target) >= 40.0

    own = pi.sample(gen, 9, 8, 8)
    r = pi.invert(gen, own, steps=100, lr=0.01, mean_samples=20)
    assert len(r["loss_history"]) == 101
    assert r["psnr"] > 30.0
