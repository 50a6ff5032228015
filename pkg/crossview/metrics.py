from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union
import logging
import math
import pickle

import numpy as np
import pandas as pd
import torch
import torch.nn as nn
from scipy.ndimage import gaussian_filter
from scipy.special import rel_entr
from torch.utils.data import DataLoader, TensorDataset
from tqdm import tqdm

from crossview.datamodel import DEFAULT_PALETTE, VIEWS, DatasetManifest, Image, Palette, SegMap, image_to_tensor
from crossview.exceptions import (CheckpointIOError, DegenerateSizeError, EmptySetError, ManifestError,
                                  OracleRejectedError, ShapeMismatchError)
from crossview.utils import GeneratedSet, entry_path, load_palette_for, read_image

logger = logging.getLogger(__name__)

MAX_PIXEL = 255.0
SSIM_SIGMA = 1.5
SSIM_TRUNCATE = 3.5  # 11×11 window at σ = 1.5
SSIM_K1 = 0.01
SSIM_K2 = 0.03
SSIM_WINDOWS = ("gaussian", "global")

CONFIDENCE_THRESHOLD = 0.5
MARGINAL_FLOOR = 1e-12
ROW_TOLERANCE = 1e-6
MIN_ORACLE_ACCURACY = 0.9

# Most frequent classes per view; sky is only seen from the ground
COMMON_CLASSES = {"aerial": ("vegetation", "road", "building"),
                  "ground": ("vegetation", "road", "building", "sky")}

Pixels = Union[Image, np.ndarray]
Labels = Union[SegMap, np.ndarray]


def _predictions(preds: np.ndarray) -> np.ndarray:
    preds = np.asarray(preds, dtype=np.float64)
    if preds.ndim != 2 or preds.shape[0] == 0:
        raise EmptySetError(f"expected a non-empty N×C prediction matrix, got shape {preds.shape}")
    if (preds < 0).any() or not np.allclose(preds.sum(axis=1), 1.0, atol=ROW_TOLERANCE, rtol=0.0):
        raise ValueError("prediction rows must be probability distributions")

    return preds


def inception_score(preds: np.ndarray) -> float:
    """
    exp(mean over rows of KL(row ‖ marginal)), the marginal being the row mean

    Args:
        preds (np.ndarray): N×C class probabilities

    Raises:
        EmptySetError: No rows

    Returns:
        float: Score in [1, C]
    """

    preds = _predictions(preds)
    marginal = preds.mean(axis=0)
    score = math.exp(rel_entr(preds, marginal).sum(axis=1).mean())

    return float(score)


def topk_smooth(p: np.ndarray, k: int) -> np.ndarray:
    """
    Keeps the top-k probabilities and spreads the rest evenly: every other entry
    becomes (1 - Σ top-k) / (n - k). Ties at the k-th value go to the lowest class index

    Raises:
        ValueError: k outside [1, n)
    """

    p = np.asarray(p, dtype=np.float64)
    n = p.shape[0]
    if not 1 <= k < n:
        raise ValueError(f"k={k} outside [1, {n})")

    top = np.argsort(-p, kind="stable")[:k]
    smoothed = np.full(n, (1.0 - p[top].sum()) / (n - k))
    smoothed[top] = p[top]

    return smoothed


def smooth_rows(preds: np.ndarray, k: int) -> np.ndarray:
    """
    topk_smooth on every row, k clamped to n_classes - 1
    """

    preds = _predictions(preds)
    k = min(k, preds.shape[1] - 1)

    return np.stack([topk_smooth(row, k) for row in preds])


def topk_accuracy(real_preds: np.ndarray, gen_preds: np.ndarray, k: int, confidence_filter: bool = False) -> float:
    """
    Percentage of pairs whose real top-1 class is among the generated top-k classes

    Args:
        real_preds (np.ndarray): N×C predictions on real images\n
        gen_preds (np.ndarray): N×C predictions on the matching generated images\n
        k (int): Clamped to the number of classes\n
        confidence_filter (bool): Only consider real rows whose top-1 probability exceeds 0.5

    Raises:
        ShapeMismatchError: Row counts or class counts differ
        EmptySetError: No row is left after filtering

    Returns:
        float: Accuracy in [0, 100]
    """

    real_preds, gen_preds = _predictions(real_preds), _predictions(gen_preds)
    if real_preds.shape != gen_preds.shape:
        raise ShapeMismatchError(f"real {real_preds.shape} and generated {gen_preds.shape} predictions differ")

    keep = np.ones(real_preds.shape[0], dtype=bool)
    if confidence_filter:
        keep = real_preds.max(axis=1) > CONFIDENCE_THRESHOLD
    if not keep.any():
        raise EmptySetError("no real prediction passes the confidence filter")

    labels = real_preds[keep].argmax(axis=1)
    k = min(k, gen_preds.shape[1])
    top = np.argsort(-gen_preds[keep], axis=1, kind="stable")[:, :k]
    hits = (top == labels[:, None]).any(axis=1)

    return float(100.0 * hits.mean())


def kl_model_data(gen_preds: np.ndarray, real_preds: np.ndarray) -> Tuple[float, float]:
    """
    KL of each generated row against the real-set marginal (floored at 1e-12, renormalised)

    Returns:
        Tuple[float, float]: (mean, population std) over generated rows
    """

    gen_preds, real_preds = _predictions(gen_preds), _predictions(real_preds)

    q = np.maximum(real_preds.mean(axis=0), MARGINAL_FLOOR)
    q /= q.sum()
    divergences = rel_entr(gen_preds, q).sum(axis=1)

    return float(divergences.mean()), float(divergences.std())


def _pair(a: Pixels, b: Pixels) -> Tuple[np.ndarray, np.ndarray]:
    a = a.pixels if isinstance(a, Image) else np.asarray(a, dtype=np.float64)
    b = b.pixels if isinstance(b, Image) else np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ShapeMismatchError(f"images of shapes {a.shape} and {b.shape} cannot be compared")

    return a.astype(np.float64), b.astype(np.float64)


def _ssim_map(mu_a, mu_b, var_a, var_b, cov):
    c1 = (SSIM_K1 * MAX_PIXEL) ** 2
    c2 = (SSIM_K2 * MAX_PIXEL) ** 2

    return (((2 * mu_a * mu_b + c1) * (2 * cov + c2))
            / ((mu_a ** 2 + mu_b ** 2 + c1) * (var_a + var_b + c2)))


def ssim(a: Pixels, b: Pixels, window: str = "gaussian") -> float:
    """
    Structural similarity of two byte images, averaged over windows and channels

    window="gaussian" uses an 11×11 Gaussian window (σ = 1.5) with the 5-pixel
    border cropped; window="global" uses each channel's whole-image statistics.

    Raises:
        ShapeMismatchError: Shapes differ
        DegenerateSizeError: Image smaller than the window

    Returns:
        float: SSIM in [-1, 1]
    """

    a, b = _pair(a, b)
    if window not in SSIM_WINDOWS:
        raise ValueError(f"unknown SSIM window {window!r}, expected one of {SSIM_WINDOWS}")

    if window == "global":
        axes = (0, 1)
        mu_a, mu_b = a.mean(axis=axes), b.mean(axis=axes)
        cov = ((a - mu_a) * (b - mu_b)).mean(axis=axes)

        return float(_ssim_map(mu_a, mu_b, a.var(axis=axes), b.var(axis=axes), cov).mean())

    pad = int(SSIM_TRUNCATE * SSIM_SIGMA + 0.5)
    if min(a.shape[:2]) <= 2 * pad:
        raise DegenerateSizeError(f"images of shape {a.shape} are smaller than the {2 * pad + 1}-pixel window")

    def blur(x: np.ndarray) -> np.ndarray:
        return gaussian_filter(x, sigma=(SSIM_SIGMA, SSIM_SIGMA, 0), truncate=SSIM_TRUNCATE, mode="reflect")

    mu_a, mu_b = blur(a), blur(b)
    var_a = blur(a * a) - mu_a * mu_a
    var_b = blur(b * b) - mu_b * mu_b
    cov = blur(a * b) - mu_a * mu_b

    values = _ssim_map(mu_a, mu_b, var_a, var_b, cov)

    return float(values[pad:-pad, pad:-pad].mean())


def psnr(a: Pixels, b: Pixels) -> float:
    """
    10·log10(255² / mse); identical images give +inf
    """

    a, b = _pair(a, b)
    mse = np.mean((a - b) ** 2)
    if mse == 0:
        return math.inf

    return float(10.0 * np.log10(MAX_PIXEL ** 2 / mse))


def _gradient_sum(x: np.ndarray) -> np.ndarray:
    vertical = np.abs(x[1:, 1:] - x[:-1, 1:])
    horizontal = np.abs(x[1:, 1:] - x[1:, :-1])

    return vertical + horizontal


def sharpness_difference(a: Pixels, b: Pixels) -> float:
    """
    PSNR-style score of the mean absolute difference between the images' gradient
    sums, over interior positions (those with an upper and a left neighbour)

    Raises:
        DegenerateSizeError: Height or width below 2
    """

    a, b = _pair(a, b)
    if min(a.shape[:2]) < 2:
        raise DegenerateSizeError(f"sharpness needs images of at least 2×2, got {a.shape[:2]}")

    grads = np.mean(np.abs(_gradient_sum(a) - _gradient_sum(b)))
    if grads == 0:
        return math.inf

    return float(10.0 * np.log10(MAX_PIXEL ** 2 / grads))


def confusion_matrix(pred: np.ndarray, gt: np.ndarray, n_classes: int) -> np.ndarray:
    """
    n×n pixel counts, rows indexed by ground truth and columns by prediction
    """

    index = n_classes * gt.astype(np.int64).ravel() + pred.astype(np.int64).ravel()

    return np.bincount(index, minlength=n_classes ** 2).reshape(n_classes, n_classes)


class SegmentationAccumulator:
    """
    Confusion counts summed over many maps, so that dataset-level accuracy and IOU
    are pixel-weighted
    """

    def __init__(self, n_classes: int) -> None:
        self.n_classes = n_classes
        self.confusion = np.zeros((n_classes, n_classes), dtype=np.int64)

    def add(self, pred: Labels, gt: Labels) -> None:
        pred = pred.labels if isinstance(pred, SegMap) else np.asarray(pred)
        gt = gt.labels if isinstance(gt, SegMap) else np.asarray(gt)
        if pred.shape != gt.shape:
            raise ShapeMismatchError(f"predicted {pred.shape} and ground-truth {gt.shape} maps differ")

        self.confusion += confusion_matrix(pred, gt, self.n_classes)

    def scores(self, classes: Optional[Iterable[int]] = None) -> Tuple[float, float]:
        """
        (mean per-class accuracy, mean IOU) over the requested classes present in the ground truth

        Raises:
            EmptySetError: None of the classes occurs in the ground truth
        """

        classes = range(self.n_classes) if classes is None else list(classes)
        gt_counts = self.confusion.sum(axis=1)
        pred_counts = self.confusion.sum(axis=0)

        accuracies, ious = [], []
        for c in classes:
            if gt_counts[c] == 0:
                continue

            correct = self.confusion[c, c]
            accuracies.append(correct / gt_counts[c])
            ious.append(correct / (gt_counts[c] + pred_counts[c] - correct))

        if not accuracies:
            raise EmptySetError(f"none of the classes {list(classes)} occurs in the ground truth")

        return float(np.mean(accuracies)), float(np.mean(ious))


def seg_scores(pred: Labels, gt: Labels, classes: Optional[Iterable[int]] = None) -> Tuple[float, float]:
    """
    Per-class accuracy and mIOU of one predicted label map

    Classes absent from the ground truth are left out of both means.

    Args:
        pred (Labels): Predicted labels (e.g. a quantised generated map)\n
        gt (Labels): Ground-truth labels\n
        classes (Optional[Iterable[int]]): Evaluated classes, all when None

    Raises:
        ShapeMismatchError: Maps differ in shape
        EmptySetError: No evaluated class occurs in the ground truth

    Returns:
        Tuple[float, float]: (per_class_acc, miou), both in [0, 1]
    """

    pred_labels = pred.labels if isinstance(pred, SegMap) else np.asarray(pred)
    gt_labels = gt.labels if isinstance(gt, SegMap) else np.asarray(gt)
    classes = None if classes is None else list(classes)

    n_classes = int(max(pred_labels.max(initial=0), gt_labels.max(initial=0), *(classes or [0]))) + 1
    if isinstance(gt, SegMap):
        n_classes = max(n_classes, gt.palette.n_classes)

    accumulator = SegmentationAccumulator(n_classes)
    accumulator.add(pred_labels, gt_labels)

    return accumulator.scores(classes)


def evaluated_classes(view: str, palette: Palette = DEFAULT_PALETTE) -> List[int]:
    if view not in VIEWS:
        raise ValueError(f"unknown view {view!r}")

    return [palette.index(name) for name in COMMON_CLASSES[view] if name in palette.names]


class SceneClassifier(nn.Module):
    """
    Three conv → BN → ReLU → max-pool stages, global average pooling and a linear layer
    """

    def __init__(self, n_classes: int, width: int = 16) -> None:
        super().__init__()

        channels = [3, width, 2 * width, 4 * width]
        stages: List[nn.Module] = []
        for i in range(3):
            stages += [nn.Conv2d(channels[i], channels[i + 1], 3, padding=1),
                       nn.BatchNorm2d(channels[i + 1]),
                       nn.ReLU(),
                       nn.MaxPool2d(2)]

        self.features = nn.Sequential(*stages)
        self.head = nn.Sequential(nn.AdaptiveAvgPool2d(1), nn.Flatten(), nn.Linear(channels[-1], n_classes))

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.head(self.features(x))


@dataclass
class ClassifierOracle:
    """
    Fixed classifier behind the inception, accuracy and KL measures

    Args:
        model (SceneClassifier): Trained network\n
        n_classes (int): Number of scene categories\n
        view (str): View the classifier was trained on\n
        accuracy (float): Held-out top-1 accuracy in [0, 1]
    """

    model: SceneClassifier
    n_classes: int
    view: str = field(default="ground")
    accuracy: float = field(default=0.0)
    width: int = field(default=16)

    def __post_init__(self) -> None:
        self.model.eval()

    @torch.no_grad()
    def predict(self, images: Sequence[Image], batch_size: int = 64) -> np.ndarray:
        """
        N×n_classes probabilities; each row sums to 1
        """

        if not images:
            raise EmptySetError("no images to classify")

        device = next(self.model.parameters()).device
        rows = []
        for start in range(0, len(images), batch_size):
            batch = torch.stack([image_to_tensor(image) for image in images[start:start + batch_size]])
            rows.append(torch.softmax(self.model(batch.to(device)).double(), dim=1).cpu().numpy())

        preds = np.concatenate(rows)

        return preds / preds.sum(axis=1, keepdims=True)

    def top1_accuracy(self, images: Sequence[Image], labels: Sequence[int]) -> float:
        return float(np.mean(self.predict(images).argmax(axis=1) == np.asarray(labels)))

    def save(self, path: Union[str, Path]) -> None:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        torch.save({"state": self.model.state_dict(), "n_classes": self.n_classes, "view": self.view,
                    "accuracy": self.accuracy, "width": self.width}, path)

    @classmethod
    def load(cls, path: Union[str, Path], min_accuracy: float = MIN_ORACLE_ACCURACY) -> "ClassifierOracle":
        """
        Restores a saved classifier, gated on the held-out accuracy recorded at training time

        Raises:
            CheckpointIOError: The file cannot be read
            OracleRejectedError: Recorded accuracy below min_accuracy
        """

        try:
            payload = torch.load(path, map_location="cpu", weights_only=True)
        except (OSError, RuntimeError, EOFError, pickle.UnpicklingError) as error:
            raise CheckpointIOError(f"cannot read classifier {path}: {error}")

        accuracy = float(payload["accuracy"])
        if accuracy < min_accuracy:
            raise OracleRejectedError(f"classifier {path} has {accuracy:.3f} held-out top-1, "
                                      f"below the required {min_accuracy:.2f}")

        model = SceneClassifier(payload["n_classes"], payload["width"])
        model.load_state_dict(payload["state"])

        return cls(model=model, n_classes=payload["n_classes"], view=payload["view"],
                   accuracy=accuracy, width=payload["width"])


def _labelled_images(manifest: DatasetManifest, view: str) -> Tuple[List[Image], np.ndarray]:
    missing = [entry.id for entry in manifest.entries if entry.scene_category is None]
    if missing:
        raise ManifestError(f"{len(missing)} samples have no scene_category (e.g. {missing[0]})")

    images = [read_image(entry_path(manifest, entry, view)) for entry in manifest.entries]

    return images, np.array([entry.scene_category for entry in manifest.entries], dtype=np.int64)


def train_classifier_oracle(manifest: DatasetManifest, seed: int = 0, held_out: Optional[DatasetManifest] = None,
                            view: str = "ground", n_classes: int = 4, epochs: int = 15, batch_size: int = 32,
                            lr: float = 1e-3, width: int = 16, min_accuracy: float = MIN_ORACLE_ACCURACY,
                            progress: bool = False) -> ClassifierOracle:
    """
    Trains the scene classifier on (view image → scene_category) and gates it on held-out accuracy

    Args:
        manifest (DatasetManifest): Labelled training pairs\n
        seed (int): Seed of initialisation, shuffling and the held-out split\n
        held_out (Optional[DatasetManifest]): Evaluation split; otherwise 20% of manifest is held out\n
        view (str): "ground" or "aerial"\n
        min_accuracy (float): Required held-out top-1 accuracy. Defaults to 0.9.

    Raises:
        ManifestError: A sample has no scene_category
        OracleRejectedError: Held-out accuracy below min_accuracy

    Returns:
        ClassifierOracle: The accepted oracle
    """

    images, labels = _labelled_images(manifest, view)
    if held_out is None:
        order = np.random.default_rng(seed).permutation(len(images))
        cut = max(1, len(images) // 5)
        test_index, train_index = order[:cut], order[cut:]
        test_images, test_labels = [images[i] for i in test_index], labels[test_index]
        images, labels = [images[i] for i in train_index], labels[train_index]
    else:
        test_images, test_labels = _labelled_images(held_out, view)

    torch.manual_seed(seed)
    model = SceneClassifier(n_classes, width)
    optimizer = torch.optim.Adam(model.parameters(), lr=lr)
    criterion = nn.CrossEntropyLoss()

    tensors = TensorDataset(torch.stack([image_to_tensor(image) for image in images]), torch.from_numpy(labels))
    loader = DataLoader(tensors, batch_size=min(batch_size, len(tensors)), shuffle=True,
                        generator=torch.Generator().manual_seed(seed), drop_last=len(tensors) > batch_size)

    model.train()
    for _ in tqdm(range(epochs), desc="classifier", disable=not progress):
        for x, y in loader:
            optimizer.zero_grad(set_to_none=True)
            criterion(model(x), y).backward()
            optimizer.step()

    oracle = ClassifierOracle(model=model, n_classes=n_classes, view=view, width=width)
    oracle.accuracy = oracle.top1_accuracy(test_images, test_labels)
    logger.info("scene classifier held-out top-1 accuracy %.3f on %d images", oracle.accuracy, len(test_images))

    if oracle.accuracy < min_accuracy:
        raise OracleRejectedError(f"classifier reached {oracle.accuracy:.3f} held-out top-1, "
                                  f"below the required {min_accuracy:.2f}")

    return oracle


@dataclass
class MetricReport:
    """
    Every quantitative measure of one generated set. Infinite PSNR / sharpness values
    are excluded from the means and counted instead; measures that do not apply are None
    """

    n_images: int
    ssim: float
    psnr: Optional[float]
    sharp_diff: Optional[float]
    psnr_inf_count: int = field(default=0)
    sharp_diff_inf_count: int = field(default=0)
    inception_all: Optional[float] = field(default=None)
    inception_top1: Optional[float] = field(default=None)
    inception_top5: Optional[float] = field(default=None)
    real_inception_all: Optional[float] = field(default=None)
    real_inception_top1: Optional[float] = field(default=None)
    real_inception_top5: Optional[float] = field(default=None)
    acc_top1_all: Optional[float] = field(default=None)
    acc_top1_conf: Optional[float] = field(default=None)
    acc_top5_all: Optional[float] = field(default=None)
    acc_top5_conf: Optional[float] = field(default=None)
    kl_mean: Optional[float] = field(default=None)
    kl_std: Optional[float] = field(default=None)
    seg_per_class_acc: Optional[float] = field(default=None)
    seg_miou: Optional[float] = field(default=None)
    arch: str = field(default="")
    direction: str = field(default="")

    def to_dict(self) -> Dict[str, object]:
        return asdict(self)


def _finite_mean(values: Sequence[float]) -> Tuple[Optional[float], int]:
    values = np.asarray(values, dtype=np.float64)
    finite = values[np.isfinite(values)]

    return (float(finite.mean()) if finite.size else None), int(values.size - finite.size)


def _filtered_accuracy(real: np.ndarray, gen: np.ndarray, k: int) -> Optional[float]:
    try:
        return topk_accuracy(real, gen, k, confidence_filter=True)
    except EmptySetError:
        logger.warning("no real image passes the confidence filter, top-%d filtered accuracy left empty", k)
        return None


def classifier_scores(gen_preds: np.ndarray, real_preds: np.ndarray) -> Dict[str, float]:
    """
    Inception scores (plain and top-1/top-5 smoothed) of generated and real predictions,
    top-1/top-5 accuracies with and without the confidence filter, and KL(model ‖ data)
    """

    kl_mean, kl_std = kl_model_data(gen_preds, real_preds)

    return {"inception_all": inception_score(gen_preds),
            "inception_top1": inception_score(smooth_rows(gen_preds, 1)),
            "inception_top5": inception_score(smooth_rows(gen_preds, 5)),
            "real_inception_all": inception_score(real_preds),
            "real_inception_top1": inception_score(smooth_rows(real_preds, 1)),
            "real_inception_top5": inception_score(smooth_rows(real_preds, 5)),
            "acc_top1_all": topk_accuracy(real_preds, gen_preds, 1),
            "acc_top1_conf": _filtered_accuracy(real_preds, gen_preds, 1),
            "acc_top5_all": topk_accuracy(real_preds, gen_preds, 5),
            "acc_top5_conf": _filtered_accuracy(real_preds, gen_preds, 5),
            "kl_mean": kl_mean,
            "kl_std": kl_std}


def evaluate_generated(generated: GeneratedSet, manifest: DatasetManifest,
                       oracle: Optional[ClassifierOracle] = None,
                       palette: Optional[Palette] = None) -> Tuple[MetricReport, pd.DataFrame]:
    """
    Scores a generated set against the real target views of a manifest

    Args:
        generated (GeneratedSet): Generated images (and seg maps), keyed by manifest id\n
        manifest (DatasetManifest): Real pairs\n
        oracle (Optional[ClassifierOracle]): Enables the classifier-based measures\n
        palette (Optional[Palette]): Palette of the seg maps, the manifest's by default

    Raises:
        ManifestError: A generated id is not in the manifest
        EmptySetError: Empty generated set

    Returns:
        Tuple[MetricReport, pd.DataFrame]: Report and per-image SSIM/PSNR/sharpness table
    """

    if len(generated) == 0:
        raise EmptySetError("generated set is empty")

    palette = palette or load_palette_for(manifest)
    target_view = "ground" if generated.direction == "a2g" else "aerial"
    entries = {entry.id: entry for entry in manifest.entries}
    accumulator = SegmentationAccumulator(palette.n_classes)

    rows, fakes, reals = [], [], []
    for item in generated.items:
        if item.id not in entries:
            raise ManifestError(f"generated id {item.id} is not in the manifest")

        entry = entries[item.id]
        fake = read_image(generated.path(item))
        real = read_image(entry_path(manifest, entry, target_view))
        rows.append({"id": item.id, "ssim": ssim(fake, real), "psnr": psnr(fake, real),
                     "sharp_diff": sharpness_difference(fake, real)})
        fakes.append(fake)
        reals.append(real)

        if generated.has_seg:
            predicted = SegMap.from_colorized(read_image(generated.path(item, "seg")), palette, quantize=True)
            truth = SegMap.from_colorized(read_image(entry_path(manifest, entry, f"{target_view}_seg")), palette)
            accumulator.add(predicted, truth)

    table = pd.DataFrame.from_records(rows, columns=["id", "ssim", "psnr", "sharp_diff"])
    psnr_mean, psnr_inf = _finite_mean(table["psnr"])
    sharp_mean, sharp_inf = _finite_mean(table["sharp_diff"])

    report = MetricReport(n_images=len(table),
                          ssim=float(table["ssim"].mean()),
                          psnr=psnr_mean,
                          sharp_diff=sharp_mean,
                          psnr_inf_count=psnr_inf,
                          sharp_diff_inf_count=sharp_inf,
                          arch=generated.arch,
                          direction=generated.direction)

    if generated.has_seg:
        report.seg_per_class_acc, report.seg_miou = accumulator.scores(evaluated_classes(target_view, palette))

    if oracle is not None:
        if oracle.view != target_view:
            logger.warning("classifier was trained on %s images, scoring %s images", oracle.view, target_view)

        for name, value in classifier_scores(oracle.predict(fakes), oracle.predict(reals)).items():
            setattr(report, name, value)

    logger.info("evaluated %d generated images: ssim %.4f", report.n_images, report.ssim)

    return report, table
