from dataclasses import dataclass, field
from typing import Callable, Dict, Optional, Union
import logging

import numpy as np
import torch

from crossview.datamodel import Image
from crossview.exceptions import MissingStageError, ShapeMismatchError

logger = logging.getLogger(__name__)

# Scores are clamped this far from 0 and 1 before taking logs
SCORE_EPS = 1e-7
LAMBDA = 100.0
REAL_LABEL = 0.9

Score = Union[float, np.ndarray, torch.Tensor, Image]


def _as_tensor(value: Score) -> torch.Tensor:
    if isinstance(value, torch.Tensor):
        return value
    if isinstance(value, Image):
        value = value.pixels

    return torch.as_tensor(np.asarray(value, dtype=np.float64))


def _clamp(score: Score) -> torch.Tensor:
    return _as_tensor(score).clamp(SCORE_EPS, 1.0 - SCORE_EPS)


def binary_cross_entropy(score: Score, label: float) -> torch.Tensor:
    score = _clamp(score)

    return -(label * torch.log(score) + (1.0 - label) * torch.log(1.0 - score)).mean()


def gan_loss_discriminator(real_score: Score, fake_score: Score, real_label: float = REAL_LABEL) -> torch.Tensor:
    """
    BCE of the real pair's score against the smoothed real label plus BCE of the fake pair's score against 0

    Args:
        real_score (Score): D(condition, real target), one probability per sample\n
        fake_score (Score): D(condition, generated target)\n
        real_label (float): One-sided smoothed label. Defaults to 0.9.

    Returns:
        torch.Tensor: Scalar loss, mean over the batch
    """

    return binary_cross_entropy(real_score, real_label) + binary_cross_entropy(fake_score, 0.0)


def gan_loss_generator(fake_score: Score, saturating: bool = False) -> torch.Tensor:
    """
    Non-saturating -log D(fake) by default; saturating=True minimises the literal log(1 - D(fake))
    """

    score = _clamp(fake_score)
    if saturating:
        return torch.log(1.0 - score).mean()

    return -torch.log(score).mean()


def l1_loss(a: Score, b: Score) -> torch.Tensor:
    """
    Mean absolute difference over every entry

    Raises:
        ShapeMismatchError: a and b have different shapes
    """

    a, b = _as_tensor(a), _as_tensor(b)
    if a.shape != b.shape:
        raise ShapeMismatchError(f"L1 between shapes {tuple(a.shape)} and {tuple(b.shape)}")

    return (a - b).abs().mean()


@dataclass
class LossParts:
    """
    Loss terms of one step, before weighting. Stage-2 terms are X-Seq only
    """

    d_loss: Score
    g_gan: Score
    g_l1_image: Score
    g_l1_seg: Optional[Score] = field(default=None)
    d2_loss: Optional[Score] = field(default=None)
    g2_gan: Optional[Score] = field(default=None)
    g2_l1_seg: Optional[Score] = field(default=None)


@dataclass
class LossReport:
    """
    Every loss value of one step. total is the differentiable generator objective
    """

    d_loss: float
    g_gan: float
    g_l1_image: float
    g_l1_seg: float
    d2_loss: float
    g2_gan: float
    g2_l1_seg: float
    total_g: float
    lambda_: float
    total: Optional[torch.Tensor] = field(default=None, repr=False, compare=False)

    def to_record(self) -> Dict[str, float]:
        return {"d_loss": self.d_loss,
                "g_gan": self.g_gan,
                "g_l1_image": self.g_l1_image,
                "g_l1_seg": self.g_l1_seg,
                "d2_loss": self.d2_loss,
                "g2_gan": self.g2_gan,
                "g2_l1_seg": self.g2_l1_seg,
                "total_g": self.total_g,
                "lambda": self.lambda_}

    def is_finite(self) -> bool:
        return all(np.isfinite(value) for value in self.to_record().values())


def _value(score: Optional[Score]) -> float:
    if score is None:
        return 0.0

    return float(_as_tensor(score).detach().cpu())


def _report(parts: LossParts, total: Score, lam: float) -> LossReport:
    return LossReport(d_loss=_value(parts.d_loss),
                      g_gan=_value(parts.g_gan),
                      g_l1_image=_value(parts.g_l1_image),
                      g_l1_seg=_value(parts.g_l1_seg),
                      d2_loss=_value(parts.d2_loss),
                      g2_gan=_value(parts.g2_gan),
                      g2_l1_seg=_value(parts.g2_l1_seg),
                      total_g=_value(total),
                      lambda_=float(lam),
                      total=total if isinstance(total, torch.Tensor) else None)


def objective_baseline(parts: LossParts, lam: float = LAMBDA) -> LossReport:
    """
    total_g = g_gan + λ·g_l1_image
    """

    return _report(parts, parts.g_gan + lam * parts.g_l1_image, lam)


def objective_fork(parts: LossParts, lam: float = LAMBDA) -> LossReport:
    """
    total_g = g_gan + λ·(g_l1_image + g_l1_seg). The discriminator term sees image pairs only
    """

    l1_seg = parts.g_l1_seg if parts.g_l1_seg is not None else 0.0

    return _report(parts, parts.g_gan + lam * (parts.g_l1_image + l1_seg), lam)


def objective_xseq(parts: LossParts, lam: float = LAMBDA, stage2_weight: float = 1.0) -> LossReport:
    """
    total_g = g_gan + λ·g_l1_image + w·(g2_gan + λ·g2_l1_seg), w = 1 for the equal weighting

    Raises:
        MissingStageError: A stage-2 term is missing
    """

    missing = [name for name in ("d2_loss", "g2_gan", "g2_l1_seg") if getattr(parts, name) is None]
    if missing:
        raise MissingStageError(f"X-Seq objective needs stage-2 terms {missing}")

    stage1 = parts.g_gan + lam * parts.g_l1_image
    stage2 = parts.g2_gan + lam * parts.g2_l1_seg

    return _report(parts, stage1 + stage2_weight * stage2, lam)


OBJECTIVES: Dict[str, Callable[..., LossReport]] = {"baseline": objective_baseline,
                                                     "fork": objective_fork,
                                                     "xseq": objective_xseq}
