from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Callable, Dict, List, Optional, Union
import json
import logging
import pickle

import numpy as np
import torch
import torch.nn as nn
from torch.utils.data import DataLoader
from tqdm import tqdm

from crossview.datamodel import (DEFAULT_JITTER, DIRECTIONS, MODEL_RESOLUTIONS, DatasetManifest, Palette,
                                 SegMap, source_and_target, tensor_to_image)
from crossview.dataset import PairedDataset
from crossview.exceptions import (CheckpointIOError, CheckpointMismatchError, ConfigError, ManifestError,
                                  NonFiniteLossError, ResolutionMismatchError)
from crossview.metrics import SegmentationAccumulator, evaluated_classes, ssim
from crossview.networks import (NetworkSpec, batch_norm_settings, build_discriminator, build_generator,
                                init_weights, parameter_checksum)
from crossview.objectives import (LAMBDA, OBJECTIVES, REAL_LABEL, LossParts, LossReport, gan_loss_discriminator,
                                  gan_loss_generator, l1_loss)
from crossview.utils import (GeneratedItem, GeneratedSet, deterministic_requested, force_deterministic,
                             load_palette_for, write_image)
from crossview.viewer import Viewer, montage

logger = logging.getLogger(__name__)

TRAIN_ARCHS = ("baseline", "fork", "xseq")

# Batch norm needs two values per channel at the 1×1 bottleneck
MIN_BATCH = 2

# (epochs, batch size) per schedule and resolution
SCHEDULES = {"dayton": {64: (100, 16), 256: (35, 4)},
             "cvusa": {64: (30, 16), 256: (30, 4)}}


@dataclass
class TrainConfig:
    """
    Everything a training run depends on. Mirrors the JSON config file ("lambda" for lam)

    Args:
        arch (str): "baseline", "fork" or "xseq"\n
        direction (str): "a2g" or "g2a"\n
        resolution (int): 64 or 256\n
        epochs (Optional[int]): Defaults from the schedule (64: 100, 256: 35; cvusa: 30)\n
        batch_size (Optional[int]): Defaults from the schedule (64: 16, 256: 4)\n
        lr (float): Adam learning rate\n
        beta1 (float): Adam β1\n
        beta2 (float): Adam β2\n
        lam (float): L1 weight λ\n
        real_label (float): Smoothed real label of the discriminators\n
        seed (int): Seed of initialisation, shuffling, augmentation and dropout\n
        out_dir (str): Run directory
    """

    arch: str = field(default="baseline")
    direction: str = field(default="a2g")
    resolution: int = field(default=64)
    epochs: Optional[int] = field(default=None)
    batch_size: Optional[int] = field(default=None)
    lr: float = field(default=2e-4)
    beta1: float = field(default=0.5)
    beta2: float = field(default=0.999)
    lam: float = field(default=LAMBDA)
    real_label: float = field(default=REAL_LABEL)
    seed: int = field(default=0)
    out_dir: str = field(default="runs/default")
    schedule: str = field(default="dayton")
    base_channels: int = field(default=64)
    skip_connections: bool = field(default=False)
    saturating_gan: bool = field(default=False)
    stage2_weight: float = field(default=1.0)
    jitter: int = field(default=DEFAULT_JITTER)
    flip_prob: float = field(default=0.5)
    deterministic: bool = field(default=False)
    device: str = field(default="auto")
    num_workers: int = field(default=0)
    progress: bool = field(default=True)
    preview_samples: int = field(default=4)

    def __post_init__(self) -> None:
        if self.arch not in TRAIN_ARCHS:
            raise ConfigError(f"unknown arch {self.arch!r}, expected one of {TRAIN_ARCHS}")
        if self.direction not in DIRECTIONS:
            raise ConfigError(f"unknown direction {self.direction!r}, expected one of {DIRECTIONS}")
        if self.resolution not in MODEL_RESOLUTIONS:
            raise ConfigError(f"resolution {self.resolution} is not one of {MODEL_RESOLUTIONS}")
        if self.schedule not in SCHEDULES:
            raise ConfigError(f"unknown schedule {self.schedule!r}, expected one of {tuple(SCHEDULES)}")

        epochs, batch_size = SCHEDULES[self.schedule][self.resolution]
        if self.epochs is None:
            self.epochs = epochs
        if self.batch_size is None:
            self.batch_size = batch_size

        if self.epochs < 1:
            raise ConfigError("epochs must be positive")
        if self.batch_size < MIN_BATCH:
            raise ConfigError(f"batch_size must be at least {MIN_BATCH}, got {self.batch_size}")
        if not 0.0 < self.real_label <= 1.0:
            raise ConfigError(f"real_label {self.real_label} outside (0, 1]")

    def to_dict(self) -> Dict[str, object]:
        data = asdict(self)
        data["lambda"] = data.pop("lam")

        return data

    @classmethod
    def from_dict(cls, data: Dict[str, object]) -> "TrainConfig":
        data = dict(data)
        if "lambda" in data:
            data["lam"] = data.pop("lambda")

        known = {item.name for item in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"unknown config keys {unknown}")

        return cls(**data)

    @classmethod
    def from_json(cls, path: Union[str, Path]) -> "TrainConfig":
        path = Path(path)
        if not path.exists():
            raise ConfigError(f"config file {path} not found")

        try:
            data = json.loads(path.read_text())
        except json.JSONDecodeError as error:
            raise ConfigError(f"config file {path} is not valid JSON: {error}")

        return cls.from_dict(data)

    def to_json(self, path: Union[str, Path]) -> None:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        Path(path).write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True))

    def network_spec(self) -> NetworkSpec:
        arch = "fork" if self.arch == "fork" else "baseline"

        return NetworkSpec.default(arch, self.resolution, self.base_channels, self.skip_connections)


def resolve_device(name: str) -> torch.device:
    if name == "auto":
        return torch.device("cuda" if torch.cuda.is_available() else "cpu")

    return torch.device(name)


def build_networks(config: TrainConfig, seed: Optional[int] = None) -> Dict[str, nn.Module]:
    """
    Builds and initialises the networks of an architecture

    baseline/fork: generator + discriminator; xseq adds the image→segmentation
    seg_generator and its seg_discriminator (conditioned on the generated image)
    """

    spec = config.network_spec()
    networks: Dict[str, nn.Module] = {"generator": build_generator(spec),
                                      "discriminator": build_discriminator(spec)}
    if config.arch == "xseq":
        networks["seg_generator"] = build_generator(spec)
        networks["seg_discriminator"] = build_discriminator(spec, candidate_channels=spec.seg_channels)

    rng = torch.Generator().manual_seed(config.seed if seed is None else seed)
    for network in networks.values():
        init_weights(network, rng)

    return networks


def make_optimizers(config: TrainConfig, networks: Dict[str, nn.Module]) -> Dict[str, torch.optim.Optimizer]:
    return {name: torch.optim.Adam(network.parameters(), lr=config.lr, betas=(config.beta1, config.beta2))
            for name, network in networks.items()}


@dataclass
class Checkpoint:
    config: TrainConfig
    networks: Dict[str, nn.Module]
    optimizer_states: Dict[str, dict]
    epoch: int
    checksums: Dict[str, str] = field(default_factory=dict)

    @property
    def spec(self) -> NetworkSpec:
        return self.networks["generator"].spec


def save_checkpoint(path: Union[str, Path], config: TrainConfig, networks: Dict[str, nn.Module],
                    optimizers: Dict[str, torch.optim.Optimizer], epoch: int) -> Path:
    """
    Writes (config, spec, parameters, optimizer state, epoch) to one archive

    Raises:
        CheckpointIOError: The file cannot be written
    """

    path = Path(path)
    payload = {"config": config.to_dict(),
               "spec": config.network_spec().to_dict(),
               "state": {name: network.state_dict() for name, network in networks.items()},
               "optimizers": {name: optimizer.state_dict() for name, optimizer in optimizers.items()},
               "epoch": epoch,
               "checksums": {name: parameter_checksum(network) for name, network in networks.items()}}

    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        torch.save(payload, path)
    except OSError as error:
        raise CheckpointIOError(f"cannot write checkpoint {path}: {error}")

    logger.debug("saved checkpoint %s (epoch %d)", path, epoch)

    return path


def load_checkpoint(path: Union[str, Path], expected_arch: Optional[str] = None,
                    device: Union[str, torch.device] = "cpu") -> Checkpoint:
    """
    Rebuilds the networks of a checkpoint with their exact parameters

    Args:
        path (Union[str, Path]): Checkpoint file\n
        expected_arch (Optional[str]): Fail unless the checkpoint holds this architecture\n
        device (Union[str, torch.device]): Where to place the networks

    Raises:
        CheckpointIOError: Unreadable file
        CheckpointMismatchError: The checkpoint holds another architecture

    Returns:
        Checkpoint: Networks in eval mode, config and optimizer state
    """

    try:
        payload = torch.load(path, map_location="cpu", weights_only=True)
    except (OSError, RuntimeError, EOFError, pickle.UnpicklingError) as error:
        raise CheckpointIOError(f"cannot read checkpoint {path}: {error}")

    config = TrainConfig.from_dict(payload["config"])
    if expected_arch is not None and config.arch != expected_arch:
        raise CheckpointMismatchError(f"checkpoint {path} holds a {config.arch} model, expected {expected_arch}")

    networks = build_networks(config)
    for name, network in networks.items():
        network.load_state_dict(payload["state"][name])
        network.to(device).eval()

    return Checkpoint(config=config,
                      networks=networks,
                      optimizer_states=payload["optimizers"],
                      epoch=int(payload["epoch"]),
                      checksums=payload.get("checksums", {}))


class RunLog:
    """
    Append-only JSON-lines log
    """

    def __init__(self, path: Union[str, Path]) -> None:
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)

    def write(self, record: Dict[str, object]) -> None:
        with open(self.path, "a") as handle:
            handle.write(json.dumps(record) + "\n")

    def read(self) -> List[Dict[str, object]]:
        if not self.path.exists():
            return []

        return [json.loads(line) for line in self.path.read_text().splitlines() if line.strip()]


@dataclass
class RunArtifacts:
    run_dir: Path
    checkpoints: List[Path]
    log_path: Path
    history: List[Dict[str, float]] = field(default_factory=list)


def _epoch_seed(seed: int, epoch: int) -> int:
    return seed * 100_003 + epoch


@dataclass
class Trainer:
    """
    Adversarial training of one architecture in one direction

    One discriminator update then one generator update per batch; X-Seq updates
    both discriminators, then both generators jointly.

    Args:
        config (TrainConfig): Run configuration\n
        train_manifest (DatasetManifest): Train split at config.resolution\n
        test_manifest (Optional[DatasetManifest]): Held-out split for previews and evaluation
    """

    config: TrainConfig
    train_manifest: DatasetManifest
    test_manifest: Optional[DatasetManifest] = field(default=None)

    networks: Dict[str, nn.Module] = field(init=False)
    optimizers: Dict[str, torch.optim.Optimizer] = field(init=False)
    device: torch.device = field(init=False)
    epoch: int = field(init=False, default=0)
    step: int = field(init=False, default=0)
    run_dir: Path = field(init=False)
    log: RunLog = field(init=False)
    palette: Palette = field(init=False)
    dataset: PairedDataset = field(init=False)
    objective: Callable[..., LossReport] = field(init=False)

    def __post_init__(self) -> None:
        if self.train_manifest.split_tag != "train":
            raise ManifestError(f"training needs a train split, got {self.train_manifest.split_tag}")
        if len(self.train_manifest) < MIN_BATCH:
            raise ManifestError(f"training needs at least {MIN_BATCH} pairs, got {len(self.train_manifest)}")
        for manifest in (self.train_manifest, self.test_manifest):
            if manifest is not None and manifest.resolution != self.config.resolution:
                raise ResolutionMismatchError(f"manifest resolution {manifest.resolution} does not match "
                                              f"config resolution {self.config.resolution}")

        if self.config.deterministic or deterministic_requested():
            force_deterministic()

        self.device = resolve_device(self.config.device)
        self.networks = {name: network.to(self.device).train()
                         for name, network in build_networks(self.config).items()}
        self.optimizers = make_optimizers(self.config, self.networks)
        self.objective = OBJECTIVES[self.config.arch]
        self.palette = load_palette_for(self.train_manifest)

        self.run_dir = Path(self.config.out_dir)
        self.log = RunLog(self.run_dir / "log.jsonl")
        self.dataset = PairedDataset(self.train_manifest, self.config.direction, augment_pairs=True,
                                     seed=self.config.seed, jitter=self.config.jitter,
                                     flip_prob=self.config.flip_prob, palette=self.palette)

    def __str__(self) -> str:
        return (f"Trainer({self.config.arch}, {self.config.direction}, {self.config.resolution}px, "
                f"epoch {self.epoch}/{self.config.epochs})")

    @property
    def generators(self) -> List[str]:
        return [name for name in ("generator", "seg_generator") if name in self.networks]

    @property
    def discriminators(self) -> List[str]:
        return [name for name in ("discriminator", "seg_discriminator") if name in self.networks]

    def checksums(self, buffers: bool = True) -> Dict[str, str]:
        return {name: parameter_checksum(network, buffers=buffers) for name, network in self.networks.items()}

    def _loader(self, dataset: PairedDataset, shuffle: bool, generator: Optional[torch.Generator] = None) -> DataLoader:
        batch_size = min(self.config.batch_size, len(dataset))

        return DataLoader(dataset, batch_size=batch_size, shuffle=shuffle, generator=generator,
                          num_workers=self.config.num_workers, drop_last=shuffle and len(dataset) > batch_size)

    def _guard(self, values: Dict[str, object]) -> None:
        if all(np.isfinite(float(value)) for value in values.values()):
            return

        record = {"event": "non_finite", "epoch": self.epoch, "step": self.step,
                  **{name: float(value) for name, value in values.items()}}
        self.log.write(record)
        raise NonFiniteLossError(f"non-finite loss at epoch {self.epoch}, step {self.step}: {record}")

    def forward(self, batch: Dict[str, torch.Tensor]) -> Dict[str, torch.Tensor]:
        """
        Generated target image, plus the generated seg map for fork and xseq
        """

        condition = batch["condition"].to(self.device)
        out = self.networks["generator"](condition)
        fakes = {"image": out["image"]}

        if self.config.arch == "fork":
            fakes["seg"] = out["seg"]
        elif self.config.arch == "xseq":
            fakes["seg"] = self.networks["seg_generator"](out["image"])["image"]

        return fakes

    def discriminator_step(self, batch: Dict[str, torch.Tensor], fakes: Dict[str, torch.Tensor]) -> Dict[str, torch.Tensor]:
        """
        One update of the discriminator(s). Only discriminator parameters change
        """

        condition = batch["condition"].to(self.device)
        target = batch["target"].to(self.device)
        discriminator = self.networks["discriminator"]

        for name in self.discriminators:
            self.optimizers[name].zero_grad(set_to_none=True)

        fake_image = fakes["image"].detach()
        losses = {"d_loss": gan_loss_discriminator(discriminator(condition, target),
                                                   discriminator(condition, fake_image),
                                                   self.config.real_label)}

        if self.config.arch == "xseq":
            # D2 judges (seg map | generated image) pairs
            target_seg = batch["target_seg"].to(self.device)
            seg_discriminator = self.networks["seg_discriminator"]
            losses["d2_loss"] = gan_loss_discriminator(seg_discriminator(fake_image, target_seg),
                                                       seg_discriminator(fake_image, fakes["seg"].detach()),
                                                       self.config.real_label)

        self._guard({name: loss.detach() for name, loss in losses.items()})
        sum(losses.values()).backward()
        for name in self.discriminators:
            self.optimizers[name].step()

        return {name: loss.detach() for name, loss in losses.items()}

    def generator_step(self, batch: Dict[str, torch.Tensor], fakes: Dict[str, torch.Tensor],
                       d_losses: Dict[str, torch.Tensor]) -> LossReport:
        """
        One joint update of the generator(s) on the architecture's objective
        """

        condition = batch["condition"].to(self.device)
        target = batch["target"].to(self.device)
        saturating = self.config.saturating_gan

        for name in self.generators:
            self.optimizers[name].zero_grad(set_to_none=True)

        parts = LossParts(d_loss=d_losses["d_loss"],
                          g_gan=gan_loss_generator(self.networks["discriminator"](condition, fakes["image"]), saturating),
                          g_l1_image=l1_loss(fakes["image"], target))

        if "seg" in fakes:
            target_seg = batch["target_seg"].to(self.device)
            seg_l1 = l1_loss(fakes["seg"], target_seg)

            if self.config.arch == "fork":
                parts.g_l1_seg = seg_l1
            else:
                parts.d2_loss = d_losses["d2_loss"]
                parts.g2_gan = gan_loss_generator(self.networks["seg_discriminator"](fakes["image"], fakes["seg"]),
                                                  saturating)
                parts.g2_l1_seg = seg_l1

        if self.config.arch == "xseq":
            report = self.objective(parts, self.config.lam, self.config.stage2_weight)
        else:
            report = self.objective(parts, self.config.lam)

        self._guard({"total_g": report.total_g})
        report.total.backward()
        for name in self.generators:
            self.optimizers[name].step()

        return report

    def train_step(self, batch: Dict[str, torch.Tensor]) -> LossReport:
        fakes = self.forward(batch)
        d_losses = self.discriminator_step(batch, fakes)
        report = self.generator_step(batch, fakes, d_losses)

        self.step += 1
        self.log.write({"event": "step", "epoch": self.epoch + 1, "step": self.step, **report.to_record()})

        return report

    def train_epoch(self) -> Dict[str, float]:
        """
        Runs one pass over the train split and returns the mean of every loss field
        """

        seed = _epoch_seed(self.config.seed, self.epoch)
        torch.manual_seed(seed)
        self.dataset.set_epoch(self.epoch)
        loader = self._loader(self.dataset, shuffle=True, generator=torch.Generator().manual_seed(seed))

        for network in self.networks.values():
            network.train()

        records = []
        for batch in tqdm(loader, desc=f"epoch {self.epoch + 1}/{self.config.epochs}", leave=False,
                          disable=not self.config.progress):
            records.append(self.train_step(batch).to_record())

        return {name: float(np.mean([record[name] for record in records])) for name in records[0]}

    def fit(self, on_epoch_end: Optional[Callable[[int, Dict[str, float]], None]] = None) -> RunArtifacts:
        """
        Trains until config.epochs, checkpointing every epoch

        Args:
            on_epoch_end (Optional[Callable]): Called with (epoch, summary) after each epoch

        Returns:
            RunArtifacts: Run directory, checkpoints, log path and epoch summaries
        """

        self.run_dir.mkdir(parents=True, exist_ok=True)
        self.config.to_json(self.run_dir / "config.json")
        self.log.write({"event": "run_start", "epoch": self.epoch, "torch": torch.__version__,
                        "device": str(self.device), **batch_norm_settings()})
        logger.info("training %s from epoch %d on %s", self, self.epoch, self.device)

        checkpoints, history = [], []
        while self.epoch < self.config.epochs:
            summary = self.train_epoch()
            self.epoch += 1

            checkpoints.append(self.save())
            self.preview()
            summary = {"epoch": self.epoch, **summary}
            history.append(summary)
            self.log.write({"event": "epoch_end", **summary, "checksums": self.checksums()})

            if on_epoch_end is not None:
                on_epoch_end(self.epoch, summary)

        self.plot_losses()

        return RunArtifacts(run_dir=self.run_dir, checkpoints=checkpoints, log_path=self.log.path, history=history)

    def save(self, path: Optional[Union[str, Path]] = None) -> Path:
        path = path or self.run_dir / "checkpoints" / f"epoch_{self.epoch}.ckpt"

        return save_checkpoint(path, self.config, self.networks, self.optimizers, self.epoch)

    @classmethod
    def resume(cls, checkpoint_path: Union[str, Path], train_manifest: DatasetManifest,
               test_manifest: Optional[DatasetManifest] = None, epochs: Optional[int] = None) -> "Trainer":
        """
        Continues a run from a checkpoint at its recorded epoch, optionally up to a new epoch count
        """

        checkpoint = load_checkpoint(checkpoint_path)
        config = checkpoint.config if epochs is None else replace(checkpoint.config, epochs=epochs)
        trainer = cls(config, train_manifest, test_manifest)

        for name, network in trainer.networks.items():
            network.load_state_dict(checkpoint.networks[name].state_dict())
            network.train()
        for name, optimizer in trainer.optimizers.items():
            optimizer.load_state_dict(checkpoint.optimizer_states[name])

        trainer.epoch = checkpoint.epoch

        return trainer

    @torch.no_grad()
    def evaluate(self, manifest: Optional[DatasetManifest] = None) -> Dict[str, float]:
        """
        Held-out image L1 (normalised space), SSIM (byte space) and, when seg maps are
        generated, segmentation mIOU, all in eval mode
        """

        manifest = manifest if manifest is not None else self.test_manifest
        if manifest is None:
            raise ManifestError("no manifest to evaluate on and the trainer has no test split")

        dataset = PairedDataset(manifest, self.config.direction, palette=self.palette)
        _, target_view = source_and_target(self.config.direction)
        accumulator = SegmentationAccumulator(self.palette.n_classes)

        for network in self.networks.values():
            network.eval()

        l1_values, ssim_values = [], []
        for batch in self._loader(dataset, shuffle=False):
            fakes = self.forward(batch)
            target = batch["target"].to(self.device)

            for i in range(target.shape[0]):
                l1_values.append(float(l1_loss(fakes["image"][i], target[i])))
                ssim_values.append(ssim(tensor_to_image(fakes["image"][i]), tensor_to_image(target[i])))

                if "seg" in fakes:
                    predicted = SegMap.from_colorized(tensor_to_image(fakes["seg"][i]), self.palette, quantize=True)
                    accumulator.add(predicted.labels, batch["target_labels"][i].numpy())

        for network in self.networks.values():
            network.train()

        result = {"l1": float(np.mean(l1_values)), "ssim": float(np.mean(ssim_values))}
        if self.config.arch != "baseline":
            _, result["seg_miou"] = accumulator.scores(evaluated_classes(target_view, self.palette))

        return result

    @torch.no_grad()
    def preview(self) -> Optional[Path]:
        """
        Writes samples/epoch_{k}.png: condition | target | generated [| target seg | generated seg]
        """

        manifest = self.test_manifest or self.train_manifest
        count = min(self.config.preview_samples, len(manifest))
        if count == 0:
            return None

        dataset = PairedDataset(manifest, self.config.direction, palette=self.palette)
        batch = next(iter(DataLoader(dataset, batch_size=count, shuffle=False)))

        generator = self.networks["generator"]
        generator.eval()
        if "seg_generator" in self.networks:
            self.networks["seg_generator"].eval()
        fakes = self.forward(batch)
        for name in self.generators:
            self.networks[name].train()

        header = ["condition", "target", "generated"]
        keys = [("condition", batch), ("target", batch), ("image", fakes)]
        if "seg" in fakes:
            header += ["target seg", "generated seg"]
            keys += [("target_seg", batch), ("seg", fakes)]

        rows = [[tensor_to_image(source[key][i]) for key, source in keys] for i in range(count)]
        path = self.run_dir / "samples" / f"epoch_{self.epoch}.png"
        write_image(montage(rows, header), path)

        return path

    def plot_losses(self) -> Optional[Path]:
        steps = [record for record in self.log.read() if record.get("event") == "step"]
        if not steps:
            return None

        viewer = Viewer(records=steps, title=f"{self.config.arch} {self.config.direction} losses")
        viewer.server_mode()
        viewer.initialise_plotter()
        viewer.plot_losses()
        viewer.add_grid()
        viewer.add_legend()
        viewer.save_figure(path=self.run_dir, filename="losses.png")
        viewer.close_graph()

        return self.run_dir / "losses.png"


def train(config: TrainConfig, data: DatasetManifest, test: Optional[DatasetManifest] = None,
          on_epoch_end: Optional[Callable[[int, Dict[str, float]], None]] = None) -> RunArtifacts:
    """
    Trains an architecture end-to-end and writes config.json, log.jsonl,
    checkpoints/epoch_{k}.ckpt and samples/ under config.out_dir
    """

    return Trainer(config, data, test).fit(on_epoch_end)


@torch.no_grad()
def generate(checkpoint: Union[Checkpoint, str, Path], manifest: DatasetManifest, out_dir: Union[str, Path],
             direction: Optional[str] = None, batch_size: int = 16) -> GeneratedSet:
    """
    Runs a trained generator in eval mode over a manifest and writes byte images

    Args:
        checkpoint (Union[Checkpoint, str, Path]): Loaded checkpoint or its path\n
        manifest (DatasetManifest): Inputs (any split)\n
        out_dir (Union[str, Path]): Where {id}_generated.png (and {id}_generated_seg.png) go\n
        direction (Optional[str]): Must match the checkpoint's direction when given

    Raises:
        CheckpointMismatchError: direction differs from the one the model was trained for
        ResolutionMismatchError: manifest and checkpoint resolutions differ

    Returns:
        GeneratedSet: One item per manifest entry, saved as generated.jsonl
    """

    if not isinstance(checkpoint, Checkpoint):
        checkpoint = load_checkpoint(checkpoint)

    config = checkpoint.config
    direction = direction or config.direction
    if direction != config.direction:
        raise CheckpointMismatchError(f"checkpoint was trained for {config.direction}, asked for {direction}")
    if manifest.resolution != config.resolution:
        raise ResolutionMismatchError(f"manifest resolution {manifest.resolution} does not match "
                                      f"checkpoint resolution {config.resolution}")

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    generator = checkpoint.networks["generator"].eval()
    seg_generator = checkpoint.networks.get("seg_generator")
    if seg_generator is not None:
        seg_generator.eval()
    device = next(generator.parameters()).device

    loader = DataLoader(PairedDataset(manifest, direction), batch_size=batch_size, shuffle=False)
    items = []
    for batch in loader:
        out = generator(batch["condition"].to(device))
        images = out["image"]
        segs = out.get("seg")
        if seg_generator is not None:
            segs = seg_generator(images)["image"]

        for i, sample_id in enumerate(batch["id"]):
            item = GeneratedItem(id=sample_id, image=f"{sample_id}_generated.png")
            write_image(tensor_to_image(images[i]), out_dir / item.image)

            if segs is not None:
                item.seg = f"{sample_id}_generated_seg.png"
                write_image(tensor_to_image(segs[i]), out_dir / item.seg)

            items.append(item)

    generated = GeneratedSet(items=items, direction=direction, arch=config.arch, root=str(out_dir))
    generated.save()
    logger.info("generated %d %s images with a %s model into %s", len(items), direction, config.arch, out_dir)

    return generated
