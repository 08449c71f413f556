import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from ddkl import multires

finite = st.floats(-10, 10, allow_nan=False)


def test_determinants():
    assert np.linalg.det(multires.synthesis_matrix("unimodular")) == pytest.approx(1.0, abs=1e-12)
    assert np.linalg.det(multires.synthesis_matrix("haar")) == pytest.approx(2.0, abs=1e-12)
    assert np.linalg.det(multires.analysis_matrix("unimodular")) == pytest.approx(1.0, abs=1e-12)
    assert np.linalg.det(multires.analysis_matrix("haar")) == pytest.approx(0.5, abs=1e-12)
    for k in multires.KINDS:
        assert np.allclose(multires.analysis_matrix(k) @ multires.synthesis_matrix(k), np.eye(4), atol=1e-14)


def test_patch_examples():
    # constant patch: detail 0 and mean equal to the value
    y, m = multires.patch_analysis("unimodular", [0.3, 0.3, 0.3, 0.3])
    assert np.allclose(y, 0) and m == pytest.approx(0.3)
    y, m = multires.patch_analysis("haar", [1.0, 0.0, 0.0, 0.0])
    assert np.allclose(y, [0.5, 0.5, 0.5]) and m == pytest.approx(0.25)
    y, m = multires.patch_analysis("unimodular", [1.0, 0.0, 0.0, 0.0])
    assert np.allclose(y, 1 / multires.C_UNIMODULAR) and m == pytest.approx(0.25)
    assert np.allclose(multires.patch_synthesis("unimodular", np.zeros(3), 0.7), 0.7)
    with pytest.raises(ValueError):
        multires.analysis_matrix("daubechies")


@given(arrays(float, (5, 4), elements=finite), st.sampled_from(multires.KINDS))
def test_patch_round_trip(x, kind):
    y, m = multires.patch_analysis(kind, x)
    assert np.allclose(multires.patch_synthesis(kind, y, m), x, atol=1e-12)
    assert np.allclose(m, x.mean(axis=-1), atol=1e-12)


@pytest.mark.parametrize("S", [1, 2, 3, 4])
@pytest.mark.parametrize("kind", multires.KINDS)
def test_pyramid_round_trip(S, kind):
    rng = np.random.default_rng(S)
    for shape in ((16, 24), (3, 32, 32)):
        img = rng.random(shape)
        pyr = multires.decompose(img, S, kind)
        assert pyr.levels == S
        assert np.abs(multires.reconstruct(pyr) - img).max() <= 1e-12
        f = 2 ** (S - 1)
        assert pyr.coarsest.shape == shape[:-2] + (shape[-2] // f, shape[-1] // f)


@given(arrays(float, (2, 8, 8), elements=st.floats(0, 1)), st.integers(1, 4), st.sampled_from(multires.KINDS))
@settings(max_examples=40)
def test_coarse_images_are_block_means_and_keep_range(img, S, kind):
    pyr = multires.decompose(img, S, kind)
    x = img
    for _ in range(S - 1):
        x = multires.block_mean(x)
    assert np.allclose(pyr.coarsest, x, atol=1e-12)
    assert pyr.coarsest.min() >= img.min() - 1e-12 and pyr.coarsest.max() <= img.max() + 1e-12
    assert np.abs(multires.reconstruct(pyr) - img).max() <= 1e-12


def test_checkerboard_coarse():
    board = (np.indices((8, 8)).sum(0) % 2).astype(float)
    pyr = multires.decompose(board, 2)
    assert np.allclose(pyr.coarsest, 0.5)
    # only the diagonal detail is active
    assert np.allclose(pyr.details[0][0], 0) and np.allclose(pyr.details[0][1], 0)
    assert np.all(np.abs(pyr.details[0][2]) > 0.1)


def test_logdet_terms():
    assert multires.logdet_term("unimodular", 48) == 0.0
    assert multires.logdet_term("haar", 48) == pytest.approx(-33.271, abs=1e-3)
    assert multires.logdet_term("haar", 1) == pytest.approx(math.log(0.5))
    with pytest.raises(ValueError):
        multires.logdet_term("haar", 0)
    pyr = multires.decompose(np.zeros((3, 32, 32)), 3, "haar")
    assert pyr.logdets == pytest.approx([768 * math.log(0.5), 192 * math.log(0.5)])
    assert pyr.logdet_total == pytest.approx(sum(pyr.logdets))
    _, ld = np.linalg.slogdet(multires.analysis_matrix("haar"))
    # one analysis level over m patches contributes m · log|det A|
    assert multires.logdet_term("haar", 7) == pytest.approx(7 * ld)


def test_loglikelihood_recursion():
    assert multires.loglikelihood_recursion([-3.5], []) == -3.5
    S = 4
    terms = [multires.logdet_term("haar", d) for d in (256, 64, 16)]
    assert multires.loglikelihood_recursion([0.0] * S, terms) == pytest.approx(sum(terms))
    assert multires.loglikelihood_recursion([-1.0, -2.0, -3.0], [0.0, 0.0]) == -6.0
    with pytest.raises(ValueError):
        multires.loglikelihood_recursion([0.0, 0.0], [0.0, 0.0])


def test_change_of_variables_gaussian():
    # i.i.d. standard normal pixels: the pyramid likelihood must equal the pixel-space likelihood
    rng = np.random.default_rng(3)
    x = rng.standard_normal((8, 8))
    direct = float(-0.5 * (x**2).sum() - 0.5 * x.size * math.log(2 * math.pi))
    for kind in multires.KINDS:
        pyr = multires.decompose(x, 3, kind)
        split = multires.multires_noise_split(3, 1.0, kind)

        def lp(v, var):
            return float(-0.5 * (v**2).sum() / var - 0.5 * v.size * math.log(2 * math.pi * var))

        per = [lp(y, var) for y, var in zip(pyr.details, split["details"])] + [lp(pyr.coarsest, split["coarse"])]
        # log p(x) = log p(coefficients) + log|det A| for the analysis map A
        total = multires.loglikelihood_recursion(per, pyr.logdets)
        assert total == pytest.approx(direct, abs=1e-9), kind


def test_bpd_examples():
    assert multires.bpd(-100 * math.log(2), 100) == pytest.approx(1.0)
    d = 3072
    lp = -0.5 * d * math.log(2 * math.pi)
    assert multires.bpd(lp, d) == pytest.approx(1.32575, abs=1e-5)
    lp25 = -2.5 * 10 * math.log(2)
    assert multires.bpd_8bit(lp25, 10) == pytest.approx(10.5)
    with pytest.raises(ValueError):
        multires.bpd(0.0, 0)


@given(st.floats(-1e6, 1e6), st.integers(1, 100_000))
def test_bpd_8bit_shift(lp, dims):
    assert multires.bpd_8bit(lp, dims) == multires.bpd(lp, dims) + 8.0


def test_noise_split():
    s1 = multires.multires_noise_split(1)
    assert s1 == {"details": [], "coarse": 1.0}
    s2 = multires.multires_noise_split(2)
    assert s2["coarse"] == pytest.approx(0.25)
    assert s2["details"] == pytest.approx([multires.C_UNIMODULAR])
    h = multires.multires_noise_split(3, 2.0, "haar")
    assert h["details"] == pytest.approx([2.0, 0.5]) and h["coarse"] == pytest.approx(0.125)


@pytest.mark.parametrize("kind", multires.KINDS)
def test_noise_split_matches_analysis_of_white_noise(kind):
    rng = np.random.default_rng(4)
    z = rng.standard_normal((4000, 8, 8))
    pyr = multires.decompose(z, 3, kind)
    split = multires.multires_noise_split(3, 1.0, kind)
    for y, v in zip(pyr.details, split["details"]):
        assert y.var() == pytest.approx(v, rel=0.02)
    assert pyr.coarsest.var() == pytest.approx(split["coarse"], rel=0.02)


@pytest.mark.parametrize("kind", multires.KINDS)
def test_synthesised_noise_is_white(kind):
    rng = np.random.default_rng(5)
    pyr = multires.sample_noise_pyramid((4000, 8, 8), 3, rng, kind)
    x = multires.reconstruct(pyr)
    assert x.shape == (4000, 8, 8)
    assert x.var() == pytest.approx(1.0, rel=0.02)
    flat = x.reshape(4000, -1)
    c = np.corrcoef(flat[:, :6].T)
    assert np.abs(c - np.eye(6)).max() < 0.06


def test_decompose_rejects():
    with pytest.raises(ValueError):
        multires.decompose(np.zeros((6, 8)), 3)
    with pytest.raises(ValueError):
        multires.decompose(np.zeros((8, 8)), 0)
    with pytest.raises(ValueError):
        multires.decompose(np.zeros((8, 8)), 2, "wavelet")
