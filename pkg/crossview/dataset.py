from typing import Dict, Optional
import logging

import numpy as np
import torch
from torch.utils.data import Dataset

from crossview.datamodel import (DEFAULT_JITTER, DatasetManifest, Palette, augment, image_to_tensor,
                                 source_and_target)
from crossview.exceptions import ConfigError
from crossview.utils import load_palette_for, load_sample

logger = logging.getLogger(__name__)


class PairedDataset(Dataset):
    """
    Serves (condition, target, target_seg) tensors of a manifest for one direction

    Augmentation is seeded per (seed, epoch, index), so the batches of an epoch are
    the same whatever the number of loader workers.

    Args:
        manifest (DatasetManifest): Dataset split\n
        direction (str): "a2g" or "g2a"\n
        augment_pairs (bool): Apply jitter/flip (train split only)\n
        seed (int): Augmentation seed\n
        jitter (int): Jitter margin in pixels\n
        flip_prob (float): Horizontal flip probability
    """

    def __init__(self, manifest: DatasetManifest, direction: str = "a2g", augment_pairs: bool = False,
                 seed: int = 0, jitter: int = DEFAULT_JITTER, flip_prob: float = 0.5,
                 palette: Optional[Palette] = None) -> None:
        if augment_pairs and manifest.split_tag != "train":
            raise ConfigError(f"augmentation is for the train split, got {manifest.split_tag}")

        self.manifest = manifest
        self.direction = direction
        self.source_view, self.target_view = source_and_target(direction)
        self.augment_pairs = augment_pairs
        self.seed = seed
        self.jitter = jitter
        self.flip_prob = flip_prob
        self.palette = palette or load_palette_for(manifest)
        self.epoch = 0

    def __len__(self) -> int:
        return len(self.manifest)

    def set_epoch(self, epoch: int) -> None:
        self.epoch = epoch

    def __getitem__(self, index: int) -> Dict[str, object]:
        sample = load_sample(self.manifest, index, self.palette)

        if self.augment_pairs:
            rng = np.random.default_rng([self.seed, self.epoch, index])
            sample = augment(sample, rng, jitter=self.jitter, flip_prob=self.flip_prob)

        return {"id": sample.id,
                "condition": image_to_tensor(sample.image(self.source_view)),
                "target": image_to_tensor(sample.image(self.target_view)),
                "target_seg": image_to_tensor(sample.seg(self.target_view).colorized),
                "target_labels": torch.from_numpy(sample.seg(self.target_view).labels)}
