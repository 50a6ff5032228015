from dataclasses import replace
import math

import numpy as np
import pytest

from crossview.datamodel import BYTE, Image
from crossview.exceptions import DegenerateSizeError, EmptySetError, OracleRejectedError, ShapeMismatchError
from crossview.metrics import (ClassifierOracle, classifier_scores, evaluate_generated, inception_score,
                               kl_model_data, psnr, seg_scores, sharpness_difference, smooth_rows, ssim,
                               topk_accuracy, topk_smooth, train_classifier_oracle)
from crossview.utils import read_image, reference_set


def random_rows(rng, n: int, classes: int) -> np.ndarray:
    return rng.dirichlet(np.full(classes, 0.5), size=n)


def byte_pair(rng, height: int, width: int):
    return (rng.integers(0, 256, size=(height, width, 3)).astype(np.float64),
            rng.integers(0, 256, size=(height, width, 3)).astype(np.float64))


def test_inception_score_examples():
    assert inception_score(np.full((5, 4), 0.25)) == 1.0
    assert inception_score(np.eye(4)) == pytest.approx(4.0)
    assert inception_score(np.array([[0.8, 0.2], [0.2, 0.8]])) == pytest.approx(
        math.exp(0.8 * math.log(1.6) + 0.2 * math.log(0.4)), rel=1e-12)
    assert inception_score(np.array([[0.8, 0.2], [0.2, 0.8]])) == pytest.approx(1.6562, abs=1e-4)


def test_inception_score_bounds(rng):
    for _ in range(1000):
        classes = int(rng.integers(4, 366))
        concentration = rng.choice([0.05, 0.5, 5.0])
        preds = rng.dirichlet(np.full(classes, concentration), size=int(rng.integers(1, 40)))

        score = inception_score(preds)

        assert 1.0 - 1e-9 <= score <= classes + 1e-9


@pytest.mark.parametrize("classes", [4, 10, 365])
def test_inception_score_extremes(classes):
    assert inception_score(np.full((7, classes), 1.0 / classes)) == pytest.approx(1.0, abs=1e-9)
    assert inception_score(np.eye(classes)) == pytest.approx(classes, abs=1e-9)
    assert inception_score(np.tile(np.eye(classes), (3, 1))) == pytest.approx(classes, abs=1e-9)


def test_inception_score_matches_direct_sum(rng):
    for _ in range(100):
        preds = random_rows(rng, 6, 5)
        marginal = preds.mean(axis=0)
        expected = math.exp(np.mean([sum(p * math.log(p / m) for p, m in zip(row, marginal) if p > 0)
                                     for row in preds]))

        assert inception_score(preds) == pytest.approx(expected, rel=1e-9)


def test_inception_score_rejects_bad_input():
    with pytest.raises(EmptySetError):
        inception_score(np.zeros((0, 4)))
    with pytest.raises(ValueError):
        inception_score(np.array([[0.5, 0.6]]))


def test_topk_smooth_examples():
    assert np.allclose(topk_smooth(np.array([0.5, 0.3, 0.1, 0.1]), 1), [0.5, 1 / 6, 1 / 6, 1 / 6])
    assert np.array_equal(topk_smooth(np.array([0.0, 1.0, 0.0, 0.0]), 2), [0.0, 1.0, 0.0, 0.0])

    with pytest.raises(ValueError):
        topk_smooth(np.array([0.5, 0.5]), 2)


def test_topk_smooth_ties_go_to_lowest_index():
    p = np.array([0.1, 0.3, 0.3, 0.3])

    assert np.allclose(topk_smooth(p, 1), [0.7 / 3, 0.3, 0.7 / 3, 0.7 / 3])
    assert np.allclose(topk_smooth(p, 2), [0.2, 0.3, 0.3, 0.2])


def test_topk_smooth_keeps_top_set_and_mass(rng):
    for _ in range(1000):
        n = int(rng.integers(4, 366))
        p = rng.dirichlet(np.full(n, rng.choice([0.05, 0.5, 5.0])))
        k = int(rng.integers(1, n))

        smoothed = topk_smooth(p, k)
        top = np.argsort(-p, kind="stable")[:k]
        rest = np.setdiff1d(np.arange(n), top)

        assert np.array_equal(smoothed[top], p[top])
        assert np.all(smoothed[rest] == (1.0 - p[top].sum()) / (n - k))
        assert smoothed.sum() == pytest.approx(1.0, abs=1e-9)


def test_smooth_rows_clamps_k():
    rows = np.array([[0.7, 0.1, 0.1, 0.1]])

    assert np.allclose(smooth_rows(rows, 5), smooth_rows(rows, 3))


def test_topk_accuracy_examples(rng):
    preds = random_rows(rng, 10, 4)
    assert topk_accuracy(preds, preds, 1) == 100.0

    real = np.eye(4)
    gen = np.eye(4)[[0, 1, 3, 2]]
    assert topk_accuracy(real, gen, 1) == 50.0
    assert topk_accuracy(real, gen, 5) == 100.0


def test_topk_accuracy_confidence_filter():
    unsure = np.tile([0.4, 0.3, 0.2, 0.1], (3, 1))
    with pytest.raises(EmptySetError):
        topk_accuracy(unsure, unsure, 1, confidence_filter=True)

    real = np.array([[0.9, 0.1, 0.0, 0.0], [0.4, 0.3, 0.2, 0.1]])
    gen = np.array([[0.9, 0.1, 0.0, 0.0], [0.1, 0.2, 0.3, 0.4]])
    assert topk_accuracy(real, gen, 1) == 50.0
    assert topk_accuracy(real, gen, 1, confidence_filter=True) == 100.0


def test_topk_accuracy_needs_matching_rows():
    with pytest.raises(ShapeMismatchError):
        topk_accuracy(np.eye(4), np.eye(4)[:3], 1)


def test_kl_examples():
    real = np.full((6, 4), 0.25)

    assert kl_model_data(real, real) == (0.0, 0.0)

    mean, std = kl_model_data(np.array([[0.0, 0.0, 1.0, 0.0]]), real)
    assert mean == pytest.approx(math.log(4))
    assert std == 0.0


def test_kl_matches_direct_sum(rng):
    for _ in range(100):
        gen, real = random_rows(rng, 3, 5), random_rows(rng, 7, 5)

        q = real.mean(axis=0)
        divergences = [sum(p * math.log(p / qc) for p, qc in zip(row, q) if p > 0) for row in gen]

        mean, std = kl_model_data(gen, real)
        assert mean == pytest.approx(np.mean(divergences), rel=1e-9)
        assert std == pytest.approx(np.std(divergences), rel=1e-9, abs=1e-12)


def test_kl_floors_missing_real_classes():
    mean, _ = kl_model_data(np.array([[0.5, 0.5]]), np.array([[1.0, 0.0]]))

    assert np.isfinite(mean)
    assert mean > 10


def test_ssim_identity_and_shape_check(rng):
    a, b = byte_pair(rng, 32, 32)

    assert ssim(a, a) == pytest.approx(1.0, abs=1e-12)
    assert -1 <= ssim(a, b) < 1

    with pytest.raises(ShapeMismatchError):
        ssim(a, b[:16])
    with pytest.raises(DegenerateSizeError):
        ssim(a[:8, :8], b[:8, :8])


def test_ssim_of_constant_images():
    black, white = np.zeros((16, 16, 3)), np.full((16, 16, 3), 255.0)
    c1 = (0.01 * 255) ** 2

    assert ssim(black, white) == pytest.approx(c1 / (255 ** 2 + c1), rel=1e-6)
    assert ssim(black, white, window="global") == pytest.approx(c1 / (255 ** 2 + c1), rel=1e-9)


def test_global_ssim_matches_direct_statistics(rng):
    c1, c2 = (0.01 * 255) ** 2, (0.03 * 255) ** 2

    for _ in range(100):
        size = int(rng.integers(8, 33))
        a, b = byte_pair(rng, size, size)

        values = []
        for c in range(3):
            x, y = a[..., c].ravel(), b[..., c].ravel()
            mx, my = x.sum() / x.size, y.sum() / y.size
            vx = ((x - mx) ** 2).sum() / x.size
            vy = ((y - my) ** 2).sum() / y.size
            cov = ((x - mx) * (y - my)).sum() / x.size
            values.append((2 * mx * my + c1) * (2 * cov + c2) / ((mx ** 2 + my ** 2 + c1) * (vx + vy + c2)))

        assert ssim(a, b, window="global") == pytest.approx(np.mean(values), rel=1e-9)


def test_ssim_agrees_with_scikit_image(rng):
    metrics = pytest.importorskip("skimage.metrics")

    a, b = byte_pair(rng, 48, 40)
    expected = metrics.structural_similarity(a, b, data_range=255, channel_axis=-1, gaussian_weights=True,
                                             sigma=1.5, use_sample_covariance=False)

    assert ssim(a, b) == pytest.approx(expected, rel=1e-7)


def test_psnr_examples(rng):
    a, b = byte_pair(rng, 16, 16)

    assert psnr(a, a) == math.inf
    assert psnr(np.zeros((8, 8, 3)), np.ones((8, 8, 3))) == pytest.approx(48.1308, abs=1e-4)
    assert psnr(Image(a, BYTE), Image(b, BYTE)) == psnr(a, b)


def test_psnr_matches_direct_sum(rng):
    for _ in range(100):
        size = int(rng.integers(8, 33))
        a, b = byte_pair(rng, size, size)
        mse = sum((x - y) ** 2 for x, y in zip(a.ravel(), b.ravel())) / a.size

        assert psnr(a, b) == pytest.approx(10 * math.log10(255 ** 2 / mse), rel=1e-9)


def test_sharpness_of_a_ramp():
    ramp = np.repeat(np.arange(8, dtype=np.float64)[:, None, None], 8, axis=1).repeat(3, axis=2)
    flat = np.full((8, 8, 3), 100.0)

    assert sharpness_difference(ramp, ramp) == math.inf
    assert sharpness_difference(ramp, flat) == pytest.approx(10 * math.log10(255 ** 2))

    with pytest.raises(DegenerateSizeError):
        sharpness_difference(np.zeros((1, 8, 3)), np.zeros((1, 8, 3)))


def test_sharpness_matches_direct_sum(rng):
    for _ in range(100):
        size = int(rng.integers(8, 33))
        a, b = byte_pair(rng, size, size)

        total = 0.0
        for i in range(1, size):
            for j in range(1, size):
                grad_a = np.abs(a[i, j] - a[i - 1, j]) + np.abs(a[i, j] - a[i, j - 1])
                grad_b = np.abs(b[i, j] - b[i - 1, j]) + np.abs(b[i, j] - b[i, j - 1])
                total += np.abs(grad_a - grad_b).sum()
        grads = total / ((size - 1) ** 2 * 3)

        assert sharpness_difference(a, b) == pytest.approx(10 * math.log10(255 ** 2 / grads), rel=1e-9)


def test_seg_scores_identity_and_complement(rng):
    labels = rng.integers(0, 5, size=(16, 16))
    checker = np.indices((4, 4)).sum(axis=0) % 2

    assert seg_scores(labels, labels) == (1.0, 1.0)
    assert seg_scores(1 - checker, checker) == (0.0, 0.0)


def test_seg_scores_hand_counts():
    gt = np.array([[0, 0, 1, 1],
                   [0, 0, 1, 1],
                   [2, 2, 1, 1],
                   [2, 2, 2, 2]])
    pred = np.array([[0, 1, 1, 1],
                     [0, 0, 1, 1],
                     [2, 2, 2, 1],
                     [2, 2, 2, 0]])

    accuracy, miou = seg_scores(pred, gt)

    assert accuracy == pytest.approx((3 / 4 + 5 / 6 + 5 / 6) / 3)
    assert miou == pytest.approx((3 / 5 + 5 / 7 + 5 / 7) / 3)


def test_seg_scores_skip_classes_absent_from_ground_truth():
    gt = np.zeros((4, 4), dtype=int)
    pred = np.zeros((4, 4), dtype=int)
    pred[0, 0] = 1

    assert seg_scores(pred, gt, classes=[0, 1, 2]) == seg_scores(pred, gt, classes=[0])
    with pytest.raises(EmptySetError):
        seg_scores(pred, gt, classes=[3])


def test_classifier_scores_on_real_predictions(rng):
    preds = random_rows(rng, 12, 4)

    scores = classifier_scores(preds, preds)

    assert scores["acc_top1_all"] == 100.0
    assert scores["inception_all"] == scores["real_inception_all"]
    assert scores["kl_mean"] >= 0
    assert 1 <= scores["inception_top5"] <= 4


@pytest.fixture(scope="module")
def oracle(train_manifest):
    return train_classifier_oracle(train_manifest, seed=0, epochs=2, min_accuracy=0.0)


def test_oracle_rows_are_distributions(oracle, train_manifest):
    images = [read_image(f"{train_manifest.root}/{entry.ground}") for entry in train_manifest.entries]

    preds = oracle.predict(images)

    assert preds.shape == (len(images), 4)
    assert np.allclose(preds.sum(axis=1), 1.0)


def test_oracle_is_deterministic_under_seed(oracle, train_manifest):
    again = train_classifier_oracle(train_manifest, seed=0, epochs=2, min_accuracy=0.0)
    images = [read_image(f"{train_manifest.root}/{entry.ground}") for entry in train_manifest.entries]

    assert np.array_equal(oracle.predict(images), again.predict(images))


def test_oracle_accuracy_gate(train_manifest):
    with pytest.raises(OracleRejectedError):
        train_classifier_oracle(train_manifest, seed=0, epochs=1, min_accuracy=1.01)


def test_oracle_save_and_load(oracle, train_manifest, tmp_path):
    oracle.save(tmp_path / "oracle.pt")
    restored = ClassifierOracle.load(tmp_path / "oracle.pt", min_accuracy=0.0)
    images = [read_image(f"{train_manifest.root}/{entry.ground}") for entry in train_manifest.entries[:3]]

    assert restored.accuracy == oracle.accuracy
    assert np.allclose(restored.predict(images), oracle.predict(images))


def test_loading_a_weak_oracle_is_rejected(oracle, tmp_path):
    weak = replace(oracle, accuracy=0.25)
    weak.save(tmp_path / "weak.pt")

    with pytest.raises(OracleRejectedError):
        ClassifierOracle.load(tmp_path / "weak.pt")

    assert ClassifierOracle.load(tmp_path / "weak.pt", min_accuracy=0.25).accuracy == 0.25


def test_reference_set_scores_perfectly(test_manifest, oracle):
    report, table = evaluate_generated(reference_set(test_manifest, "a2g"), test_manifest, oracle)

    assert report.n_images == len(test_manifest) == len(table)
    assert report.ssim == pytest.approx(1.0)
    assert report.psnr is None and report.psnr_inf_count == len(test_manifest)
    assert report.sharp_diff is None and report.sharp_diff_inf_count == len(test_manifest)
    assert report.seg_per_class_acc == 1.0 and report.seg_miou == 1.0
    assert report.acc_top1_all == 100.0
    assert report.kl_mean is not None
    assert set(report.to_dict()) >= {"inception_all", "acc_top5_conf", "kl_std", "seg_miou"}
