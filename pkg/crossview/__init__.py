from crossview.datamodel import Image, Palette, SegMap, PairedSample, ManifestEntry, DatasetManifest
from crossview.datamodel import DEFAULT_PALETTE
from crossview.datamodel import preprocess, preprocess_segmap, normalize, denormalize, augment
from crossview.scene import SceneParams, render_scene, make_synthetic_dataset
from crossview.dataset import PairedDataset
from crossview.networks import NetworkSpec, build_generator, build_discriminator, generator_forward
from crossview.objectives import gan_loss_discriminator, gan_loss_generator, l1_loss, LossParts, LossReport
from crossview.objectives import objective_baseline, objective_fork, objective_xseq
from crossview.trainer import TrainConfig, Trainer, train, generate, save_checkpoint, load_checkpoint
from crossview.metrics import inception_score, topk_smooth, topk_accuracy, kl_model_data
from crossview.metrics import ssim, psnr, sharpness_difference, seg_scores
from crossview.metrics import ClassifierOracle, MetricReport, train_classifier_oracle, evaluate_generated
from crossview.retrieval import knn_l1, TrainingIndex
from crossview.viewer import Viewer, montage

from crossview.utils import load_manifest
from crossview.utils import save_manifest
from crossview.utils import GeneratedSet
