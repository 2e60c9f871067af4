from pathlib import Path

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from photonic_qgan.data import mnist, pca
from photonic_qgan.errors import FitError, InvalidArgument

GOLDEN = Path(__file__).parent / "golden"


@pytest.fixture(scope="module")
def affine_images():
    rng = np.random.Generator(np.random.PCG64(0))
    basis = np.linalg.qr(rng.normal(size=(784, 3)))[0].T
    coeffs = rng.normal(size=(50, 3)) * [3, 2, 1]
    offset = rng.uniform(0, 1, 784)
    return offset + coeffs @ basis, basis


def test_affine_subspace_reconstructs(affine_images):
    x, basis = affine_images
    model = pca.pca_fit(x, 3)
    recon = pca.pca_inverse(model, pca.pca_transform(model, x))
    assert np.abs(recon - x).max() < 1e-8
    # same span as the generating basis
    assert np.allclose(model.components @ basis.T @ basis, model.components, atol=1e-10)


def test_components_orthonormal_and_signed(affine_images):
    model = pca.pca_fit(affine_images[0], 3)
    assert np.allclose(model.components @ model.components.T, np.eye(3), atol=1e-10)
    for row in model.components:
        assert row[np.argmax(np.abs(row))] > 0
    assert np.all(np.diff(model.explained_variance) <= 0)


def test_error_non_increasing_in_k():
    x, _ = mnist.load_fixture(3)
    errs = []
    for k in (1, 2, 3):
        model = pca.pca_fit(x, k)
        errs.append(np.sum((pca.pca_inverse(model, pca.pca_transform(model, x)) - x) ** 2))
    assert errs[0] >= errs[1] >= errs[2]


def test_mean_image_maps_to_zero(affine_images):
    model = pca.pca_fit(affine_images[0], 3)
    f = pca.pca_transform(model, model.mean)
    assert np.abs(f).max() < 1e-10
    assert np.abs(pca.pca_inverse(model, f) - model.mean).max() < 1e-10


def test_fit_errors(affine_images):
    with pytest.raises(FitError):
        pca.pca_fit(np.ones((10, 784)), 3)
    with pytest.raises(FitError):
        pca.pca_fit(affine_images[0][:3], 3)
    with pytest.raises(FitError):
        # rank 2 data cannot give three components
        x, basis = affine_images
        pca.pca_fit(x.mean(axis=0) + np.random.Generator(np.random.PCG64(1)).normal(size=(20, 2)) @ basis[:2], 3)
    with pytest.raises(InvalidArgument):
        pca.pca_fit(np.ones(784), 3)


def test_json_checkpoint(affine_images):
    model = pca.pca_fit(affine_images[0], 3)
    back = pca.PcaModel.from_json(model.to_json())
    for name in ("mean", "components", "feature_min", "feature_max", "explained_variance"):
        assert np.array_equal(getattr(model, name), getattr(back, name))


@pytest.mark.parametrize("x, p", [
    ([0.5, 0.5, 0.5], [0.25] * 4), ([0, 0, 0], [0, 0, 0, 1]), ([1, 1, 1], [2 / 7] * 3 + [1 / 7]),
])
def test_norm_to_prob_examples(x, p):
    assert np.allclose(pca.norm_to_prob(x), p, atol=1e-15)


def test_prob_roundtrip_batch():
    x = np.random.Generator(np.random.PCG64(2)).uniform(0, 1, (1000, 3))
    assert np.abs(pca.prob_to_norm(pca.norm_to_prob(x)) - x).max() < 1e-10


@given(st.lists(st.floats(0, 1), min_size=3, max_size=3))
def test_prob_is_distribution(x):
    p = pca.norm_to_prob(x)
    assert np.all(p >= 0) and abs(p.sum() - 1) < 1e-12 and p[3] >= 1 / 7 - 1e-15


def test_prob_to_norm_rejects_zero_last():
    with pytest.raises(InvalidArgument):
        pca.prob_to_norm([0.5, 0.5, 0, 0])


def test_feature_roundtrip_inside_box():
    x, _ = mnist.load_fixture(1)
    model = pca.pca_fit(x, 3)
    feats = pca.pca_transform(model, x[:50])
    back = pca.prob_to_feature(model, pca.feature_to_prob(model, feats))
    assert np.abs(back - feats).max() < 1e-9


def test_binarize_examples():
    assert np.all(pca.binarize(np.zeros((28, 28))) == 0)
    assert pca.binarize(np.array([0.4, 0.6, 0.5]), 0.5).tolist() == [0, 1, 1]
    img = np.random.Generator(np.random.PCG64(4)).uniform(size=(28, 28))
    once = pca.binarize(img)
    assert np.array_equal(pca.binarize(once), once)
    for t in (0.0, 1.0, -0.2):
        with pytest.raises(InvalidArgument):
            pca.binarize(img, t)


def test_binarize_golden():
    img, _ = mnist.load_fixture(0)
    expected, maxval = pca.parse_pgm((GOLDEN / "digit0_first_t035.pgm").read_bytes())
    assert maxval == 1
    assert np.array_equal(pca.binarize(img[0], 0.35).reshape(28, 28), expected)


@pytest.mark.parametrize("plain", [True, False])
def test_pgm_roundtrip(plain):
    img = (np.random.Generator(np.random.PCG64(1)).uniform(size=(28, 28)) > 0.5).astype(np.uint8)
    back, maxval = pca.parse_pgm(pca.encode_pgm(img, plain))
    assert maxval == 1 and np.array_equal(back, img)
    grey = (img * 200).astype(np.uint8)
    back, maxval = pca.parse_pgm(pca.encode_pgm(grey, plain))
    assert maxval == 255 and np.array_equal(back, grey)


@pytest.mark.parametrize("data", [b"P6\n1 1\n1\n0", b"P2\n2 2\n1\n0 1 1", b"P2\n2", b"P2\n1 1\n1\n5\n"])
def test_pgm_rejects(data):
    with pytest.raises(InvalidArgument):
        pca.parse_pgm(data)


def test_prob_to_image_and_grid():
    x, _ = mnist.load_fixture(0)
    model = pca.pca_fit(x, 3)
    im = pca.prob_to_image(model, [0.25] * 4)
    assert im.shape == (28, 28) and set(np.unique(im)) <= {0, 1}
    grid = pca.image_grid([im] * 5, columns=3)
    assert grid.shape == (2 * 28 + 1, 3 * 28 + 2)
