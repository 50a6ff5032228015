import pytest
import torch
from torch.func import functional_call

from crossview.exceptions import ResolutionMismatchError, SpecError
from crossview.networks import (ForkGenerator, Generator, NetworkSpec, build_discriminator, build_generator,
                                generator_forward, init_weights, parameter_checksum)


def small_spec(arch: str = "baseline", resolution: int = 64) -> NetworkSpec:
    return NetworkSpec.default(arch, resolution, base_channels=4)


@pytest.mark.parametrize("resolution", [64, 256])
@pytest.mark.parametrize("arch", ["baseline", "fork"])
def test_generator_shapes(arch, resolution):
    generator = init_weights(build_generator(small_spec(arch, resolution)), 0)
    x = torch.rand(2, 3, resolution, resolution) * 2 - 1

    features = generator.encoder(x)
    out = generator(x)

    assert features[-1].shape[-2:] == (1, 1)
    assert out["image"].shape == (2, 3, resolution, resolution)
    if arch == "fork":
        assert out["seg"].shape == (2, 3, resolution, resolution)
    else:
        assert "seg" not in out


def test_small_resolution_drops_two_blocks():
    big, small = small_spec(resolution=256), small_spec(resolution=64)

    assert len(Generator(big).encoder.blocks) == 8
    assert len(Generator(small).encoder.blocks) == 6
    assert len(Generator(big).decoder) - len(Generator(small).decoder) == 2
    assert (build_discriminator(big).n_blocks, build_discriminator(small).n_blocks) == (6, 4)


def test_outputs_stay_in_range():
    generator = init_weights(build_generator(small_spec("fork")), 1)
    out = generator(torch.rand(2, 3, 64, 64) * 200 - 100)

    for value in out.values():
        assert value.min() >= -1 and value.max() <= 1


def test_discriminator_output_per_sample():
    discriminator = init_weights(build_discriminator(small_spec()), 0)
    x = torch.rand(3, 3, 64, 64)

    score = discriminator(x, x)

    assert score.shape == (3,)
    assert torch.all((score > 0) & (score < 1))
    assert discriminator.realness_map(x, x).shape == (3, 1, 4, 4)


def test_zero_discriminator_scores_one_half():
    discriminator = build_discriminator(small_spec())
    with torch.no_grad():
        for parameter in discriminator.parameters():
            parameter.zero_()
    discriminator.eval()

    x = torch.rand(2, 3, 64, 64)

    assert torch.equal(discriminator(x, x), torch.full((2,), 0.5))


def test_discriminator_resolution_checks():
    discriminator = build_discriminator(small_spec())

    with pytest.raises(ResolutionMismatchError):
        discriminator(torch.rand(2, 3, 64, 64), torch.rand(2, 3, 32, 32))
    with pytest.raises(ResolutionMismatchError):
        discriminator(torch.rand(2, 3, 256, 256), torch.rand(2, 3, 256, 256))


def test_generator_forward_checks_resolution():
    generator = build_generator(small_spec())

    with pytest.raises(ResolutionMismatchError):
        generator_forward(generator, torch.rand(2, 3, 256, 256))


def test_eval_mode_is_deterministic_and_dropout_is_not():
    generator = init_weights(build_generator(small_spec()), 2)
    x = torch.rand(2, 3, 64, 64)

    generator.eval()
    assert torch.equal(generator(x)["image"], generator(x)["image"])

    generator.train()
    assert not torch.equal(generator(x)["image"], generator(x)["image"])


def test_fork_trunk_feeds_both_heads():
    generator = init_weights(build_generator(small_spec("fork")), 3).eval()
    x = torch.rand(1, 3, 64, 64)
    before = generator(x)

    with torch.no_grad():
        generator.trunk[0][0].weight.add_(0.05)
    after = generator(x)

    assert not torch.allclose(before["image"], after["image"])
    assert not torch.allclose(before["seg"], after["seg"])


def test_fork_heads_have_their_own_penultimate_block():
    generator = build_generator(small_spec("fork"))

    assert isinstance(generator, ForkGenerator)
    assert len(generator.trunk) == len(generator.spec.dec_channels) - 1
    assert len(generator.image_blocks) == len(generator.seg_blocks) == 1


def test_fork_trunk_gradient_matches_finite_difference():
    generator = init_weights(build_generator(small_spec("fork")), 4).double().eval()
    x = torch.rand(1, 3, 64, 64, dtype=torch.float64) * 2 - 1
    name = "trunk.1.0.weight"
    weight = dict(generator.named_parameters())[name].detach()
    direction = torch.randn(weight.shape, dtype=torch.float64)

    def loss(w: torch.Tensor) -> torch.Tensor:
        out = functional_call(generator, {name: w}, (x,))
        return out["image"].sum() + 0.5 * out["seg"].sum()

    w = weight.clone().requires_grad_(True)
    analytic = (torch.autograd.grad(loss(w), w)[0] * direction).sum()

    eps = 1e-7
    numeric = (loss(weight + eps * direction) - loss(weight - eps * direction)) / (2 * eps)

    assert torch.isclose(analytic, numeric, rtol=1e-3, atol=1e-8)


def test_fork_trunk_gradient_is_the_sum_of_head_paths():
    generator = init_weights(build_generator(small_spec("fork")), 4).double().eval()
    x = torch.rand(1, 3, 64, 64, dtype=torch.float64) * 2 - 1
    image_target = torch.rand(1, 3, 64, 64, dtype=torch.float64) * 2 - 1
    seg_target = torch.rand(1, 3, 64, 64, dtype=torch.float64) * 2 - 1

    def image_loss(out):
        return ((out["image"] - image_target) ** 2).mean()

    def seg_loss(out):
        return 0.5 * ((out["seg"] - seg_target) ** 2).mean()

    trunk = {name: p for name, p in generator.named_parameters() if name.startswith("trunk.")}
    names = list(trunk)
    out = generator(x)
    image_path = torch.autograd.grad(image_loss(out), list(trunk.values()), retain_graph=True)
    seg_path = torch.autograd.grad(seg_loss(out), list(trunk.values()), retain_graph=True)
    joint = torch.autograd.grad(image_loss(out) + seg_loss(out), list(trunk.values()))

    for total, a, b in zip(joint, image_path, seg_path):
        assert torch.allclose(total, a + b, rtol=1e-12, atol=1e-15)

    @torch.no_grad()
    def finite_difference(loss, name, index, eps=1e-5):
        bump = torch.zeros(trunk[name].numel(), dtype=torch.float64)
        bump[index] = eps
        bump = bump.view_as(trunk[name])
        plus = loss(functional_call(generator, {name: trunk[name] + bump}, (x,)))
        minus = loss(functional_call(generator, {name: trunk[name] - bump}, (x,)))
        return ((plus - minus) / (2 * eps)).item()

    weights = [name for name in names if trunk[name].dim() == 4]
    rng = torch.Generator().manual_seed(0)
    for _ in range(6):
        name = weights[int(torch.randint(len(weights), (1,), generator=rng))]
        index = int(torch.randint(trunk[name].numel(), (1,), generator=rng))

        for loss, path in ((image_loss, image_path), (seg_loss, seg_path)):
            analytic = path[names.index(name)].flatten()[index].item()
            assert analytic == pytest.approx(finite_difference(loss, name, index), rel=1e-3, abs=1e-9)


def test_init_statistics():
    generator = init_weights(build_generator(NetworkSpec.default("baseline", 64)), 0)

    weights = torch.cat([module.weight.flatten() for module in generator.modules()
                         if isinstance(module, (torch.nn.Conv2d, torch.nn.ConvTranspose2d))])
    scales = torch.cat([module.weight.flatten() for module in generator.modules()
                        if isinstance(module, torch.nn.BatchNorm2d)])

    assert abs(weights.mean().item()) < 0.005
    assert 0.018 <= weights.std().item() <= 0.022
    assert abs(scales.mean().item() - 1) < 0.005


def test_init_is_seeded():
    first = init_weights(build_generator(small_spec("fork")), 5)
    second = init_weights(build_generator(small_spec("fork")), 5)
    third = init_weights(build_generator(small_spec("fork")), 6)

    assert parameter_checksum(first) == parameter_checksum(second)
    assert parameter_checksum(first) != parameter_checksum(third)


def test_spec_validation():
    spec = small_spec()
    spec.enc_channels = spec.enc_channels[:-1]
    with pytest.raises(SpecError):
        spec.validate()

    with pytest.raises(SpecError):
        NetworkSpec.default("baseline", 128)

    with pytest.raises(SpecError):
        build_generator(NetworkSpec(arch="sideways"))

    spec = small_spec("fork")
    spec.fork_shared_blocks = 1
    with pytest.raises(SpecError):
        spec.validate()


def test_spec_dict_round_trip():
    spec = small_spec("fork", 256)

    assert NetworkSpec.from_dict(spec.to_dict()) == spec
    with pytest.raises(SpecError):
        NetworkSpec.from_dict({"depth": 3})


def test_skip_connections_keep_shapes():
    spec = NetworkSpec.default("fork", 64, base_channels=4, skip_connections=True)
    out = init_weights(build_generator(spec), 0)(torch.rand(2, 3, 64, 64))

    assert out["image"].shape == out["seg"].shape == (2, 3, 64, 64)


def test_checksum_without_buffers_ignores_running_stats():
    generator = build_generator(small_spec())
    before = parameter_checksum(generator, buffers=False)
    with_buffers = parameter_checksum(generator)

    generator.train()
    generator(torch.rand(2, 3, 64, 64))

    assert parameter_checksum(generator, buffers=False) == before
    assert parameter_checksum(generator) != with_buffers
