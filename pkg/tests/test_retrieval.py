import numpy as np
import pytest

from crossview.datamodel import BYTE, Image
from crossview.exceptions import ConfigError, EmptySetError, ShapeMismatchError
from crossview.retrieval import TrainingIndex, knn_l1, retrieve_generated
from crossview.utils import reference_set


@pytest.fixture
def training(random_image):
    return {f"t{i:02d}": random_image(16, 16) for i in range(12)}


def test_query_in_training_set_comes_first(training):
    neighbours = knn_l1(training["t05"], training)

    assert len(neighbours) == 3
    assert neighbours[0].id == "t05"
    assert neighbours[0].distance == 0.0
    assert [n.rank for n in neighbours] == [1, 2, 3]


def test_full_ordering_matches_brute_force(training, random_image):
    query = random_image(16, 16)

    neighbours = knn_l1(query, training, k=len(training))

    brute = sorted((np.abs(image.pixels - query.pixels).mean(), key) for key, image in training.items())
    assert [n.id for n in neighbours] == [key for _, key in brute]
    for neighbour, (distance, _) in zip(neighbours, brute):
        assert neighbour.distance == pytest.approx(distance, rel=1e-9)
    assert all(a.distance <= b.distance for a, b in zip(neighbours, neighbours[1:]))


def test_ties_are_broken_by_id():
    image = Image(np.full((4, 4, 3), 10.0), BYTE)
    training = {"b": image, "c": image, "a": image}

    assert [n.id for n in knn_l1(image, training, k=3)] == ["a", "b", "c"]


def test_bad_requests(training, random_image):
    with pytest.raises(EmptySetError):
        knn_l1(random_image(16, 16), {})
    with pytest.raises(ConfigError):
        knn_l1(random_image(16, 16), training, k=13)
    with pytest.raises(ShapeMismatchError):
        knn_l1(random_image(8, 8), training)


def test_downsampled_distances_use_block_means():
    left = np.zeros((4, 4, 3))
    left[::2, ::2] = 40.0
    right = np.full((4, 4, 3), 10.0)
    training = {"left": Image(left, BYTE)}

    assert knn_l1(Image(right, BYTE), training, k=1)[0].distance == pytest.approx(15.0)
    assert knn_l1(Image(right, BYTE), training, k=1, downsample=2)[0].distance == 0.0


def test_retrieve_generated_from_manifest(train_manifest):
    index = TrainingIndex.from_manifest(train_manifest, "ground")

    records = retrieve_generated(reference_set(train_manifest, "a2g"), index, k=2)

    assert len(records) == len(train_manifest)
    for record in records:
        assert record["neighbours"][0]["id"] == record["id"]
        assert record["neighbours"][0]["distance"] == 0.0
