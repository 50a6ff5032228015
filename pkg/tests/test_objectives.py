import math

import numpy as np
import pytest
import torch

from crossview.exceptions import MissingStageError, ShapeMismatchError
from crossview.networks import NetworkSpec, build_discriminator, build_generator, init_weights
from crossview.objectives import (LossParts, binary_cross_entropy, gan_loss_discriminator, gan_loss_generator,
                                  l1_loss, objective_baseline, objective_fork, objective_xseq)


def test_discriminator_loss_at_chance():
    loss = gan_loss_discriminator(0.5, 0.5, real_label=0.9)

    assert loss.item() == pytest.approx(2 * math.log(2))


def test_discriminator_loss_is_flat_at_the_real_label():
    score = torch.tensor([0.9], dtype=torch.float64, requires_grad=True)

    binary_cross_entropy(score, 0.9).backward()

    assert score.grad.abs().item() < 1e-9


def test_extreme_scores_stay_finite():
    assert torch.isfinite(gan_loss_discriminator(0.0, 1.0))
    assert torch.isfinite(gan_loss_generator(0.0))
    assert torch.isfinite(gan_loss_generator(1.0, saturating=True))


def test_generator_loss():
    assert gan_loss_generator(0.5).item() == pytest.approx(math.log(2))
    assert gan_loss_generator(0.5, saturating=True).item() == pytest.approx(-math.log(2))

    losses = [gan_loss_generator(score).item() for score in np.linspace(0.05, 0.95, 10)]
    assert all(a > b for a, b in zip(losses, losses[1:]))


def test_l1_loss():
    a = np.zeros((2, 4, 4, 3))

    assert l1_loss(a, a).item() == 0
    assert l1_loss(a, a + 0.25).item() == pytest.approx(0.25)
    assert l1_loss(np.full((4, 4, 3), -1.0), np.ones((4, 4, 3))).item() == pytest.approx(2.0)

    with pytest.raises(ShapeMismatchError):
        l1_loss(np.zeros((2, 2)), np.zeros((2, 3)))


def test_fork_without_seg_error_matches_baseline():
    parts = LossParts(d_loss=1.2, g_gan=0.7, g_l1_image=0.3, g_l1_seg=0.0)

    assert objective_fork(parts).total_g == pytest.approx(objective_baseline(parts).total_g)
    assert objective_baseline(parts).total_g == pytest.approx(0.7 + 100 * 0.3)


def test_lambda_scales_only_the_l1_terms():
    parts = LossParts(d_loss=1.0, g_gan=0.5, g_l1_image=0.1, g_l1_seg=0.2)

    assert objective_fork(parts, lam=10).total_g == pytest.approx(0.5 + 10 * 0.3)
    assert objective_fork(parts, lam=0).total_g == pytest.approx(0.5)


def test_xseq_total_is_the_sum_of_both_stages():
    parts = LossParts(d_loss=1.0, g_gan=0.5, g_l1_image=0.1, d2_loss=1.1, g2_gan=0.6, g2_l1_seg=0.2)

    report = objective_xseq(parts)

    assert report.total_g == pytest.approx(0.5 + 100 * 0.1 + 0.6 + 100 * 0.2)
    assert objective_xseq(parts, stage2_weight=0.5).total_g == pytest.approx(0.5 + 10 + 0.5 * (0.6 + 20))
    assert report.to_record()["lambda"] == 100
    assert report.is_finite()


def test_xseq_needs_stage_two():
    with pytest.raises(MissingStageError):
        objective_xseq(LossParts(d_loss=1.0, g_gan=0.5, g_l1_image=0.1))


def test_report_flags_non_finite():
    report = objective_baseline(LossParts(d_loss=float("nan"), g_gan=0.5, g_l1_image=0.1))

    assert not report.is_finite()


def test_stage_two_losses_train_the_first_generator():
    spec = NetworkSpec.default("baseline", 64, base_channels=4)
    first = init_weights(build_generator(spec), 0)
    second = init_weights(build_generator(spec), 1)
    seg_discriminator = init_weights(build_discriminator(spec, candidate_channels=spec.seg_channels), 2)

    condition = torch.rand(2, 3, 64, 64) * 2 - 1
    target_seg = torch.rand(2, 3, 64, 64) * 2 - 1

    image = first(condition)["image"]
    seg = second(image)["image"]
    zero = torch.zeros(())
    parts = LossParts(d_loss=zero, g_gan=zero, g_l1_image=zero,
                      d2_loss=zero, g2_gan=gan_loss_generator(seg_discriminator(image, seg)),
                      g2_l1_seg=l1_loss(seg, target_seg))

    objective_xseq(parts).total.backward()

    gradients = [p.grad for p in first.parameters()]
    assert all(g is not None for g in gradients)
    assert sum(g.abs().sum().item() for g in gradients) > 0


def test_frozen_second_stage_leaves_the_baseline_gradient():
    spec = NetworkSpec.default("baseline", 64, base_channels=4)
    first = init_weights(build_generator(spec), 0)
    discriminator = init_weights(build_discriminator(spec), 1)
    second = init_weights(build_generator(spec), 2).requires_grad_(False)
    seg_discriminator = init_weights(build_discriminator(spec, candidate_channels=spec.seg_channels), 3)
    seg_discriminator.requires_grad_(False)

    condition = torch.rand(2, 3, 64, 64) * 2 - 1
    target, target_seg = torch.rand(2, 3, 64, 64) * 2 - 1, torch.rand(2, 3, 64, 64) * 2 - 1

    image = first(condition)["image"]
    frozen_image = image.detach()
    seg = second(frozen_image)["image"]
    parts = LossParts(d_loss=torch.zeros(()), g_gan=gan_loss_generator(discriminator(condition, image)),
                      g_l1_image=l1_loss(image, target), d2_loss=torch.zeros(()),
                      g2_gan=gan_loss_generator(seg_discriminator(frozen_image, seg)),
                      g2_l1_seg=l1_loss(seg, target_seg))

    parameters = list(first.parameters())
    joint = torch.autograd.grad(objective_xseq(parts).total, parameters, retain_graph=True)
    baseline = torch.autograd.grad(objective_baseline(parts).total, parameters)

    for a, b in zip(joint, baseline):
        assert torch.equal(a, b)
