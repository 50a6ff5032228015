import torch
import pytest

from crossview.dataset import PairedDataset


def test_items_are_normalised_tensors(train_manifest):
    item = PairedDataset(train_manifest, "a2g")[0]

    assert item["id"] == train_manifest.entries[0].id
    for key in ("condition", "target", "target_seg"):
        assert item[key].shape == (3, 64, 64)
        assert item[key].min() >= -1 and item[key].max() <= 1
    assert item["target_labels"].shape == (64, 64)


def test_direction_swaps_condition_and_target(train_manifest):
    a2g = PairedDataset(train_manifest, "a2g")[1]
    g2a = PairedDataset(train_manifest, "g2a")[1]

    assert torch.equal(a2g["condition"], g2a["target"])
    assert torch.equal(a2g["target"], g2a["condition"])


def test_augmentation_seeded_per_epoch_and_index(train_manifest):
    dataset = PairedDataset(train_manifest, "a2g", augment_pairs=True, seed=3)

    first = dataset[2]["condition"]
    assert torch.equal(first, dataset[2]["condition"])

    changed = False
    for epoch in range(1, 6):
        dataset.set_epoch(epoch)
        changed |= not torch.equal(first, dataset[2]["condition"])
    assert changed


def test_augmentation_is_for_training_only(test_manifest):
    with pytest.raises(ValueError):
        PairedDataset(test_manifest, "a2g", augment_pairs=True)
