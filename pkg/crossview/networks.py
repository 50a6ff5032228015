from dataclasses import asdict, dataclass, field
from typing import Dict, List, Optional, Sequence, Union
import hashlib
import logging
import math

import torch
import torch.nn as nn

from crossview.datamodel import MODEL_RESOLUTIONS, Image, image_to_tensor
from crossview.exceptions import ResolutionMismatchError, SpecError

logger = logging.getLogger(__name__)

ARCHS = ("baseline", "fork")
INIT_STD = 0.02


@dataclass
class NetworkSpec:
    """
    Declarative description of a generator/discriminator pair

    Args:
        arch (str): "baseline" (one image head) or "fork" (image + segmentation heads)\n
        resolution (int): 64 or 256\n
        enc_channels (List[int]): Output channels of each stride-2 encoder block\n
        dec_channels (List[int]): Output channels of each upconvolution block before the output layer\n
        fork_shared_blocks (int): Decoder blocks shared by both heads (fork only)\n
        seg_channels (int): Channels of the colour-coded segmentation head\n
        dropout_blocks (int): Leading decoder blocks with dropout\n
        kernel (int): Convolution kernel size\n
        stride (int): Convolution stride\n
        disc_channels (List[int]): Discriminator block channels\n
        skip_connections (bool): Concatenate mirrored encoder features into the decoder
    """

    arch: str = field(default="baseline")
    resolution: int = field(default=256)
    enc_channels: List[int] = field(default_factory=list)
    dec_channels: List[int] = field(default_factory=list)
    fork_shared_blocks: int = field(default=0)
    seg_channels: int = field(default=3)
    dropout_blocks: int = field(default=3)
    kernel: int = field(default=4)
    stride: int = field(default=2)
    disc_channels: List[int] = field(default_factory=list)
    in_channels: int = field(default=3)
    out_channels: int = field(default=3)
    dropout: float = field(default=0.5)
    leak: float = field(default=0.2)
    skip_connections: bool = field(default=False)

    @classmethod
    def default(cls, arch: str = "baseline", resolution: int = 256, base_channels: int = 64,
                skip_connections: bool = False) -> "NetworkSpec":
        """
        The stock layout: 8 encoder blocks at 256 reaching a 1×1 bottleneck; at 64 the
        last two encoder/discriminator blocks and the first two decoder blocks are removed

        The discriminator reuses the encoder's blocks and channels but stops two blocks
        short of the bottleneck (6 at 256, 4 at 64), so its 3×3 classifier scores a
        patch map (4×4 at 64) rather than a single 1×1 cell
        """

        if resolution not in MODEL_RESOLUTIONS:
            raise SpecError(f"resolution {resolution} is not one of {MODEL_RESOLUTIONS}")

        b = base_channels
        enc = [b, 2 * b, 4 * b, 8 * b, 8 * b, 8 * b, 8 * b, 8 * b]
        dec = [8 * b, 8 * b, 8 * b, 8 * b, 4 * b, 2 * b, b]
        if resolution == 64:
            enc, dec = enc[:-2], dec[2:]

        return cls(arch=arch,
                   resolution=resolution,
                   enc_channels=enc,
                   dec_channels=dec,
                   fork_shared_blocks=len(dec) - 1 if arch == "fork" else 0,
                   disc_channels=enc[:-2],
                   skip_connections=skip_connections)

    def validate(self) -> None:
        """
        Raises:
            SpecError: The network description cannot be built
        """

        if self.arch not in ARCHS:
            raise SpecError(f"unknown arch {self.arch!r}, expected one of {ARCHS}")
        if self.resolution not in MODEL_RESOLUTIONS:
            raise SpecError(f"resolution {self.resolution} is not one of {MODEL_RESOLUTIONS}")
        if (self.kernel, self.stride) != (4, 2):
            raise SpecError(f"blocks use 4×4 kernels with stride 2, got {self.kernel}×{self.kernel}/{self.stride}")

        depth = int(math.log2(self.resolution))
        if len(self.enc_channels) != depth:
            raise SpecError(f"{len(self.enc_channels)} encoder blocks do not reach a 1×1 bottleneck "
                            f"at {self.resolution} (need {depth})")
        if len(self.dec_channels) != depth - 1:
            raise SpecError(f"{len(self.dec_channels)} decoder blocks plus the output layer do not "
                            f"restore {self.resolution} (need {depth - 1})")
        if self.arch == "fork" and self.fork_shared_blocks != len(self.dec_channels) - 1:
            raise SpecError(f"fork must share all decoder blocks but the penultimate one "
                            f"({len(self.dec_channels) - 1}), got {self.fork_shared_blocks}")
        if self.arch == "baseline" and self.fork_shared_blocks != 0:
            raise SpecError("baseline arch has no shared fork blocks")
        if not 0 <= self.dropout_blocks <= len(self.dec_channels):
            raise SpecError(f"dropout_blocks={self.dropout_blocks} outside [0, {len(self.dec_channels)}]")
        if not 1 <= len(self.disc_channels) < depth:
            raise SpecError(f"{len(self.disc_channels)} discriminator blocks invalid at {self.resolution}")

    def to_dict(self) -> Dict[str, object]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Dict[str, object]) -> "NetworkSpec":
        try:
            return cls(**data)
        except TypeError as error:
            raise SpecError(f"invalid network spec: {error}")


def encoder_block(in_channels: int, out_channels: int, spec: NetworkSpec, batch_norm: bool = True) -> nn.Sequential:
    """
    Conv(4, 2) → [BatchNorm] → LeakyReLU(0.2), halves the spatial size
    """

    layers: List[nn.Module] = [nn.Conv2d(in_channels, out_channels, spec.kernel, spec.stride, padding=1,
                                         bias=not batch_norm)]
    if batch_norm:
        layers.append(nn.BatchNorm2d(out_channels))
    layers.append(nn.LeakyReLU(spec.leak))

    return nn.Sequential(*layers)


def decoder_block(in_channels: int, out_channels: int, spec: NetworkSpec, dropout: bool) -> nn.Sequential:
    """
    Upconv(4, 2) → BatchNorm → [Dropout] → ReLU, doubles the spatial size
    """

    layers: List[nn.Module] = [nn.ConvTranspose2d(in_channels, out_channels, spec.kernel, spec.stride,
                                                  padding=1, bias=False),
                               nn.BatchNorm2d(out_channels)]
    if dropout:
        layers.append(nn.Dropout(spec.dropout))
    layers.append(nn.ReLU())

    return nn.Sequential(*layers)


def output_block(in_channels: int, out_channels: int, spec: NetworkSpec) -> nn.Sequential:
    return nn.Sequential(nn.ConvTranspose2d(in_channels, out_channels, spec.kernel, spec.stride, padding=1),
                         nn.Tanh())


def _decoder_in_channels(spec: NetworkSpec, i: int) -> int:
    channels = spec.enc_channels[-1] if i == 0 else spec.dec_channels[i - 1]
    if spec.skip_connections and i > 0:
        channels += spec.enc_channels[-1 - i]

    return channels


class Encoder(nn.Module):
    def __init__(self, spec: NetworkSpec) -> None:
        super().__init__()

        channels = [spec.in_channels] + list(spec.enc_channels)
        self.blocks = nn.ModuleList([encoder_block(channels[i], channels[i + 1], spec, batch_norm=i > 0)
                                     for i in range(len(spec.enc_channels))])

    def forward(self, x: torch.Tensor) -> List[torch.Tensor]:
        features = []
        for block in self.blocks:
            x = block(x)
            features.append(x)

        return features


class _EncoderDecoder(nn.Module):
    def __init__(self, spec: NetworkSpec) -> None:
        super().__init__()
        self.spec = spec
        self.encoder = Encoder(spec)

    def _merge(self, h: torch.Tensor, features: List[torch.Tensor], i: int) -> torch.Tensor:
        if self.spec.skip_connections and i > 0:
            return torch.cat([h, features[-1 - i]], dim=1)

        return h

    def _decode(self, blocks: Sequence[nn.Module], h: torch.Tensor, features: List[torch.Tensor],
                start: int) -> torch.Tensor:
        for offset, block in enumerate(blocks):
            h = block(self._merge(h, features, start + offset))

        return h


class Generator(_EncoderDecoder):
    """
    Encoder-decoder generator with a single image head
    """

    def __init__(self, spec: NetworkSpec) -> None:
        super().__init__(spec)

        n_blocks = len(spec.dec_channels)
        self.decoder = nn.ModuleList([
            decoder_block(_decoder_in_channels(spec, i), spec.dec_channels[i], spec, i < spec.dropout_blocks)
            for i in range(n_blocks)])
        self.output = output_block(_decoder_in_channels(spec, n_blocks), spec.out_channels, spec)

    def forward(self, x: torch.Tensor) -> Dict[str, torch.Tensor]:
        features = self.encoder(x)
        h = self._decode(self.decoder, features[-1], features, 0)

        return {"image": self.output(self._merge(h, features, len(self.decoder)))}


class ForkGenerator(_EncoderDecoder):
    """
    Generator whose decoder trunk is shared and forks at the penultimate block
    into an image head and a colour-coded segmentation head
    """

    def __init__(self, spec: NetworkSpec) -> None:
        super().__init__(spec)

        n_blocks = len(spec.dec_channels)
        shared = spec.fork_shared_blocks

        def head_blocks() -> nn.ModuleList:
            return nn.ModuleList([
                decoder_block(_decoder_in_channels(spec, i), spec.dec_channels[i], spec, i < spec.dropout_blocks)
                for i in range(shared, n_blocks)])

        self.trunk = nn.ModuleList([
            decoder_block(_decoder_in_channels(spec, i), spec.dec_channels[i], spec, i < spec.dropout_blocks)
            for i in range(shared)])

        self.image_blocks = head_blocks()
        self.image_output = output_block(_decoder_in_channels(spec, n_blocks), spec.out_channels, spec)
        self.seg_blocks = head_blocks()
        self.seg_output = output_block(_decoder_in_channels(spec, n_blocks), spec.seg_channels, spec)

    def forward(self, x: torch.Tensor) -> Dict[str, torch.Tensor]:
        features = self.encoder(x)
        shared = self.spec.fork_shared_blocks
        last = len(self.spec.dec_channels)

        h = self._decode(self.trunk, features[-1], features, 0)
        image = self._decode(self.image_blocks, h, features, shared)
        seg = self._decode(self.seg_blocks, h, features, shared)

        return {"image": self.image_output(self._merge(image, features, last)),
                "seg": self.seg_output(self._merge(seg, features, last))}


class Discriminator(nn.Module):
    """
    Conditional discriminator: the encoder's block stack over the channel-concatenated
    (condition, candidate) pair, then a 1-channel convolution and sigmoid. The
    realness map is averaged to one probability per sample
    """

    def __init__(self, spec: NetworkSpec, candidate_channels: Optional[int] = None) -> None:
        super().__init__()
        self.spec = spec

        channels = [spec.in_channels + (candidate_channels or spec.out_channels)] + list(spec.disc_channels)
        self.blocks = nn.Sequential(*[encoder_block(channels[i], channels[i + 1], spec, batch_norm=i > 0)
                                      for i in range(len(spec.disc_channels))])
        self.classifier = nn.Conv2d(channels[-1], 1, kernel_size=3, stride=1, padding=1)

    @property
    def n_blocks(self) -> int:
        return len(self.blocks)

    def realness_map(self, condition: torch.Tensor, candidate: torch.Tensor) -> torch.Tensor:
        if condition.shape[-2:] != candidate.shape[-2:]:
            raise ResolutionMismatchError(f"condition {tuple(condition.shape[-2:])} and candidate "
                                          f"{tuple(candidate.shape[-2:])} resolutions differ")
        if condition.shape[-1] != self.spec.resolution:
            raise ResolutionMismatchError(f"discriminator built for {self.spec.resolution}, "
                                          f"got {condition.shape[-1]}")

        return torch.sigmoid(self.classifier(self.blocks(torch.cat([condition, candidate], dim=1))))

    def forward(self, condition: torch.Tensor, candidate: torch.Tensor) -> torch.Tensor:
        return self.realness_map(condition, candidate).mean(dim=(1, 2, 3))


GeneratorHandle = Union[Generator, ForkGenerator]


def build_generator(spec: NetworkSpec) -> GeneratorHandle:
    spec.validate()

    return ForkGenerator(spec) if spec.arch == "fork" else Generator(spec)


def build_discriminator(spec: NetworkSpec, candidate_channels: Optional[int] = None) -> Discriminator:
    spec.validate()

    return Discriminator(spec, candidate_channels)


def generator_forward(generator: GeneratorHandle, condition: Union[torch.Tensor, Image]) -> Dict[str, torch.Tensor]:
    """
    Runs a generator in its current mode (train or eval)

    Args:
        generator (GeneratorHandle): Built generator\n
        condition (Union[torch.Tensor, Image]): N×3×H×W tensor in [-1, 1], or a single Image

    Raises:
        ResolutionMismatchError: The condition does not have the network resolution

    Returns:
        Dict[str, torch.Tensor]: {"image"} or {"image", "seg"}, every entry in [-1, 1]
    """

    if isinstance(condition, Image):
        device = next(generator.parameters()).device
        condition = image_to_tensor(condition)[None].to(device)

    resolution = generator.spec.resolution
    if tuple(condition.shape[-2:]) != (resolution, resolution):
        raise ResolutionMismatchError(f"generator built for {resolution}×{resolution}, "
                                      f"got {tuple(condition.shape[-2:])}")

    return generator(condition)


@torch.no_grad()
def init_weights(module: nn.Module, rng: Union[torch.Generator, int]) -> nn.Module:
    """
    Convolution weights ~ N(0, 0.02²), batch-norm scale ~ N(1, 0.02²), biases 0

    Args:
        module (nn.Module): Freshly built network\n
        rng (Union[torch.Generator, int]): Generator or seed

    Returns:
        nn.Module: The same module, initialised in place
    """

    if isinstance(rng, int):
        rng = torch.Generator().manual_seed(rng)

    def gaussian(tensor: torch.Tensor, mean: float) -> torch.Tensor:
        return (torch.randn(tensor.shape, generator=rng, dtype=tensor.dtype) * INIT_STD + mean).to(tensor.device)

    for layer in module.modules():
        if isinstance(layer, (nn.Conv2d, nn.ConvTranspose2d)):
            layer.weight.copy_(gaussian(layer.weight, 0.0))
            if layer.bias is not None:
                layer.bias.zero_()
        elif isinstance(layer, nn.BatchNorm2d):
            layer.weight.copy_(gaussian(layer.weight, 1.0))
            layer.bias.zero_()

    return module


def parameter_checksum(module: nn.Module, buffers: bool = True) -> str:
    """
    sha256 over every parameter (and buffer, unless buffers=False), in state-dict order
    """

    tensors = module.state_dict() if buffers else dict(module.named_parameters())

    digest = hashlib.sha256()
    for name, tensor in tensors.items():
        digest.update(name.encode())
        digest.update(tensor.detach().cpu().contiguous().numpy().tobytes())

    return digest.hexdigest()


def batch_norm_settings() -> Dict[str, float]:
    reference = nn.BatchNorm2d(1)

    return {"bn_eps": reference.eps, "bn_momentum": reference.momentum}
