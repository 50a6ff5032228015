"""
Command-line entry point: crossview {synth-data, train, evaluate, grid, knn}

Exit codes: 0 success, 2 usage error (bad flags, missing inputs or config), 1 runtime failure.
"""

from argparse import ArgumentParser, Namespace
from glob import glob
from pathlib import Path
from typing import Dict, List, Optional, Sequence
import json
import logging
import shutil
import sys

from crossview.datamodel import DIRECTIONS, MODEL_RESOLUTIONS, source_and_target
from crossview.exceptions import ConfigError, CrossviewError, InvalidSizeError
from crossview.metrics import ClassifierOracle, evaluate_generated, train_classifier_oracle
from crossview.retrieval import DEFAULT_K, TrainingIndex, neighbour_montage, retrieve_generated
from crossview.scene import make_synthetic_dataset
from crossview.trainer import TrainConfig, Trainer, generate, load_checkpoint
from crossview.utils import GeneratedSet, load_manifest, read_image, reference_set, write_image
from crossview.viewer import montage

logger = logging.getLogger("crossview")

USAGE_ERRORS = (ConfigError, InvalidSizeError, FileNotFoundError)
IMAGE_SUFFIXES = (".png", ".jpg", ".jpeg")
REPORT_NAME = "report.json"
PER_IMAGE_NAME = "per_image.csv"


def _require(path: Optional[str], what: str) -> Path:
    if path is None or not Path(path).exists():
        raise FileNotFoundError(f"{what} {path} not found")

    return Path(path)


def _write_json(data: object, path: Path) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")


def synth_data(args: Namespace) -> int:
    manifest = make_synthetic_dataset(args.n, args.seed, args.size, args.out, split=args.split)
    print(Path(manifest.root) / "manifest.jsonl")

    return 0


def _print_epoch(epochs: int):
    def report(epoch: int, summary: Dict[str, float]) -> None:
        losses = " ".join(f"{name}={value:.4f}" for name, value in summary.items()
                          if name not in ("epoch", "lambda") and value != 0)
        print(f"epoch {epoch}/{epochs} {losses}", flush=True)

    return report


def train(args: Namespace) -> int:
    data = load_manifest(_require(args.data, "train manifest"), split="train")
    test = load_manifest(_require(args.test, "test manifest")) if args.test else None

    if args.resume:
        trainer = Trainer.resume(_require(args.resume, "checkpoint"), data, test, args.epochs)
    else:
        trainer = Trainer(TrainConfig.from_json(_require(args.config, "config file")), data, test)

    artifacts = trainer.fit(_print_epoch(trainer.config.epochs))
    if test is not None:
        print(f"held-out {json.dumps(trainer.evaluate(test), sort_keys=True)}")
    print(artifacts.run_dir)

    return 0


def _oracle(args: Namespace, out: Path) -> Optional[ClassifierOracle]:
    if args.oracle:
        return ClassifierOracle.load(_require(args.oracle, "classifier"), min_accuracy=args.oracle_min_accuracy)
    if not args.oracle_manifest:
        return None

    labelled = load_manifest(_require(args.oracle_manifest, "classifier manifest"))
    oracle = train_classifier_oracle(labelled, seed=args.seed, view=args.oracle_view,
                                     min_accuracy=args.oracle_min_accuracy)
    oracle.save(out / "oracle.pt")

    return oracle


def evaluate(args: Namespace) -> int:
    manifest = load_manifest(_require(args.manifest, "manifest"))
    out = Path(args.out)

    if args.checkpoint:
        generated = generate(_require(args.checkpoint, "checkpoint"), manifest, out / "generated")
    elif args.generated:
        generated = GeneratedSet.load(_require(args.generated, "generated set"))
    elif args.reference:
        generated = reference_set(manifest, args.direction)
    else:
        raise ConfigError("evaluate needs --checkpoint, --generated or --reference")

    if args.oracle_view is None:
        args.oracle_view = source_and_target(generated.direction)[1]

    report, table = evaluate_generated(generated, manifest, _oracle(args, out))
    _write_json(report.to_dict(), out / REPORT_NAME)
    table.to_csv(out / PER_IMAGE_NAME, index=False)

    print(out / REPORT_NAME)

    return 0


def _expand(source: str) -> List[Path]:
    path = Path(source)
    if path.is_dir():
        return sorted(p for p in path.iterdir() if p.suffix.lower() in IMAGE_SUFFIXES)
    if path.is_file():
        return [path]

    matches = sorted(Path(match) for match in glob(source))
    if not matches:
        raise FileNotFoundError(f"no image matches {source}")

    return matches


def grid(args: Namespace) -> int:
    """
    One column per --inputs source (input | ground truth | method outputs), one row per sample
    """

    columns = [_expand(source) for source in args.inputs]
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)

    if len(columns) == 1 and len(columns[0]) == 1:
        shutil.copyfile(columns[0][0], out)
        print(out)
        return 0

    labels = args.labels or [Path(source.rstrip("/")).name for source in args.inputs]
    if len(labels) != len(columns):
        raise ConfigError(f"{len(labels)} labels for {len(columns)} input columns")

    n_rows = min(len(column) for column in columns)
    if args.limit:
        n_rows = min(n_rows, args.limit)

    rows = [[read_image(column[r]) for column in columns] for r in range(n_rows)]
    write_image(montage(rows, labels), out)
    print(out)

    return 0


def knn(args: Namespace) -> int:
    manifest = load_manifest(_require(args.manifest, "manifest"))
    train_manifest = load_manifest(_require(args.train_manifest, "train manifest"))
    out = Path(args.out)

    if args.generated:
        generated = GeneratedSet.load(_require(args.generated, "generated set"))
    else:
        checkpoint = load_checkpoint(_require(args.checkpoint, "checkpoint"))
        generated = generate(checkpoint, manifest, out / "generated")

    _, target_view = source_and_target(generated.direction)
    index = TrainingIndex.from_manifest(train_manifest, target_view, args.downsample)
    records = retrieve_generated(generated, index, args.k)

    out.mkdir(parents=True, exist_ok=True)
    with open(out / "knn.jsonl", "w") as handle:
        for record in records:
            handle.write(json.dumps(record, sort_keys=True) + "\n")

    write_image(neighbour_montage(records, generated, manifest, train_manifest, args.limit), out / "knn.png")
    print(out / "knn.jsonl")

    return 0


def build_parser() -> ArgumentParser:
    parser = ArgumentParser(prog="crossview", description="Cross-view image synthesis with conditional GANs")
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    commands = parser.add_subparsers(dest="command", required=True)

    command = commands.add_parser("synth-data", help="write a synthetic paired-scene dataset")
    command.add_argument("--n", type=int, default=512, help="number of pairs")
    command.add_argument("--seed", type=int, default=0)
    command.add_argument("--size", type=int, choices=MODEL_RESOLUTIONS, default=64)
    command.add_argument("--split", default="train")
    command.add_argument("--out", required=True)
    command.set_defaults(run=synth_data)

    command = commands.add_parser("train", help="train an architecture from a JSON config")
    command.add_argument("--config", help="TrainConfig JSON file")
    command.add_argument("--data", required=True, help="train manifest")
    command.add_argument("--test", help="held-out manifest for previews and evaluation")
    command.add_argument("--resume", help="continue from a checkpoint instead of --config")
    command.add_argument("--epochs", type=int, help="total epochs when resuming")
    command.set_defaults(run=train)

    command = commands.add_parser("evaluate", help="generate and compute every metric")
    command.add_argument("--checkpoint")
    command.add_argument("--generated", help="score an existing generated set instead")
    command.add_argument("--reference", action="store_true", help="score the real target images themselves")
    command.add_argument("--direction", choices=DIRECTIONS, default="a2g", help="direction of --reference")
    command.add_argument("--manifest", required=True)
    command.add_argument("--out", required=True)
    command.add_argument("--oracle", help="saved scene classifier")
    command.add_argument("--oracle-manifest", help="labelled manifest to train the scene classifier on")
    command.add_argument("--oracle-view", choices=("aerial", "ground"))
    command.add_argument("--oracle-min-accuracy", type=float, default=0.9)
    command.add_argument("--seed", type=int, default=0)
    command.set_defaults(run=evaluate)

    command = commands.add_parser("grid", help="montage of image columns under a labelled header")
    command.add_argument("--inputs", nargs="+", required=True, help="directories, globs or files, one per column")
    command.add_argument("--labels", nargs="*")
    command.add_argument("--limit", type=int)
    command.add_argument("--out", required=True)
    command.set_defaults(run=grid)

    command = commands.add_parser("knn", help="nearest training images of generated outputs")
    command.add_argument("--checkpoint")
    command.add_argument("--generated")
    command.add_argument("--manifest", required=True)
    command.add_argument("--train-manifest", required=True)
    command.add_argument("--k", type=int, default=DEFAULT_K)
    command.add_argument("--downsample", type=int, default=1)
    command.add_argument("--limit", type=int, default=8, help="montage rows")
    command.add_argument("--out", required=True)
    command.set_defaults(run=knn)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as error:
        return int(error.code or 0)

    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(asctime)s %(levelname)s %(name)s: %(message)s")

    try:
        return args.run(args)
    except USAGE_ERRORS as error:
        print(f"crossview {args.command}: {error}", file=sys.stderr)
        return 2
    except CrossviewError as error:
        print(f"crossview {args.command}: {error}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
