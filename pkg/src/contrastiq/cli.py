"""Command-line interface: synth, extract, train, eval, pair-train, score, report.

Exit codes: 0 success, 2 IO/environment failures, 3 validation failures;
error messages name the offending flag, key, or file.  The train/pair-train
config is a flat ``key = value`` text file (``#`` comments allowed); unknown
keys are rejected so hyperparameter typos cannot pass silently.  All
randomness flows from the single ``seed`` value.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from . import dataset as ds
from . import metrics, synthdata
from .archive import ArchiveError, load_weight_archive
from .errors import (
    ConfigError,
    ContrastiqError,
    CorruptData,
    IoFailure,
    MissingFile,
    UnsupportedFormat,
)
from .features import (
    CnnExtractor,
    HandcraftedExtractor,
    extract_features,
    load_feature_cache,
    resolve_config,
    save_feature_cache,
)
from .imagecore import AugmentPolicy, load_image
from .regressor import (
    ARCH_MLP,
    ARCH_SIAMESE,
    TrainConfig,
    load_head,
    make_pairs,
    predict_scores,
    save_head,
    save_train_report,
    siamese_score,
    siamese_train,
    train,
)

_IMAGE_SUFFIXES = (".png", ".ppm")


@dataclass
class RunConfig:
    """Flat training run configuration; see field names for the accepted keys."""

    manifest: str = ""
    output_dir: str = ""
    train_fraction: float = 0.8
    extractor: str = "handcrafted"
    weights: str = ""
    backbone_config: str = "nano"
    feature_cache: str = ""
    pairs_per_image: int = 4
    learning_rate: float = 1e-4
    weight_decay: float = 1e-5
    epochs: int = 50
    batch_size: int = 32
    dropout: float = 0.5
    seed: int = 0
    scheduler_factor: float = 0.5
    scheduler_patience: int = 5
    scheduler_min_lr: float = 1e-6
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8

    @classmethod
    def from_file(cls, path: str) -> "RunConfig":
        p = Path(path)
        if not p.is_file():
            raise MissingFile(f"config file not found: {path}")
        known = {f.name: f.type for f in fields(cls)}
        kwargs = {}
        for line_no, raw in enumerate(p.read_text(encoding="utf-8").split("\n"), start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{line_no}: expected key = value")
            key, _, value = line.partition("=")
            key = key.strip()
            value = value.strip()
            if key not in known:
                raise ConfigError(f"{path}:{line_no}: unknown config key {key!r}")
            caster = {"str": str, "float": float, "int": int}[known[key]]
            try:
                kwargs[key] = caster(value)
            except ValueError:
                raise ConfigError(f"{path}:{line_no}: bad value for {key!r}: {value!r}") from None
        try:
            cfg = cls(**kwargs)
            cfg.train_config()  # validate training hyperparameters eagerly
        except ValueError as exc:
            raise ConfigError(f"{path}: {exc}") from exc
        if not cfg.manifest:
            raise ConfigError(f"{path}: missing required key 'manifest'")
        if not cfg.output_dir:
            raise ConfigError(f"{path}: missing required key 'output_dir'")
        if not 0.0 < cfg.train_fraction < 1.0:
            raise ConfigError(f"{path}: train_fraction must be in (0, 1)")
        if cfg.extractor not in ("handcrafted", "cnn"):
            raise ConfigError(f"{path}: extractor must be 'handcrafted' or 'cnn'")
        return cfg

    def train_config(self) -> TrainConfig:
        return TrainConfig(
            learning_rate=self.learning_rate,
            weight_decay=self.weight_decay,
            epochs=self.epochs,
            batch_size=self.batch_size,
            dropout=self.dropout,
            seed=self.seed,
            scheduler_factor=self.scheduler_factor,
            scheduler_patience=self.scheduler_patience,
            scheduler_min_lr=self.scheduler_min_lr,
            adam_beta1=self.adam_beta1,
            adam_beta2=self.adam_beta2,
            adam_eps=self.adam_eps,
        )


def _parse_levels(arg_name: str, text: str, kind: str) -> list[synthdata.Distortion]:
    levels = []
    for token in text.split(","):
        token = token.strip()
        if not token:
            continue
        try:
            value = float(token)
        except ValueError:
            raise ConfigError(f"invalid {arg_name}: {token!r} is not a number") from None
        try:
            levels.append(synthdata.Distortion(kind=kind, level=value))
        except ContrastiqError as exc:
            raise ConfigError(f"invalid {arg_name}: {exc}") from exc
    return levels


def _collect_bases(path_text: str) -> list[str]:
    path = Path(path_text)
    if path.is_dir():
        found = sorted(
            str(p) for p in path.iterdir() if p.suffix.lower() in _IMAGE_SUFFIXES
        )
        if not found:
            raise ConfigError(f"invalid --bases: no .png/.ppm images in {path}")
        return found
    if path.is_file():
        return [str(path)]
    raise MissingFile(f"--bases path not found: {path}")


def cmd_synth(args) -> int:
    levels = _parse_levels("--gammas", args.gammas, synthdata.GAMMA) if args.gammas else []
    if args.scales:
        levels += _parse_levels("--scales", args.scales, synthdata.LINEAR_CONTRAST)
    if not levels:
        raise ConfigError("at least one of --gammas/--scales must provide levels")
    spec = synthdata.SynthSpec(
        base_images=_collect_bases(args.bases),
        levels=levels,
        seed=args.seed,
        output_dir=args.out,
        augment_copies=args.augment_copies,
    )
    manifest = synthdata.generate_dataset(spec)
    print(f"wrote {len(manifest)} records to {Path(args.out) / 'manifest.csv'}")
    return 0


def _build_extractor(name: str, weights_path: str, config_name: str):
    if name == "handcrafted":
        return HandcraftedExtractor()
    if name == "cnn":
        if not weights_path:
            raise ConfigError("--extractor cnn requires --weights")
        if not Path(weights_path).is_file():
            raise MissingFile(f"weights file not found: {weights_path}")
        return CnnExtractor(resolve_config(config_name), load_weight_archive(weights_path))
    raise ConfigError(f"invalid --extractor: {name!r} (use handcrafted or cnn)")


def cmd_extract(args) -> int:
    manifest = ds.load_manifest(args.manifest)
    extractor = _build_extractor(args.extractor, args.weights, args.config)
    cache = extract_features(manifest, extractor)
    save_feature_cache(cache, args.out, manifest=manifest)
    print(f"wrote {len(cache)} rows (dim {cache.dim}) to {args.out}")
    return 0


def _prepare_split(manifest: ds.Manifest, fraction: float, seed: int) -> ds.Manifest:
    assigned = [r for r in manifest.records if r.split != ds.UNASSIGNED]
    if not assigned:
        return ds.split(manifest, fraction, seed)
    if len(assigned) != len(manifest.records):
        raise ConfigError("manifest mixes assigned and unassigned split labels")
    return manifest


def cmd_train(args) -> int:
    cfg = RunConfig.from_file(args.config)
    manifest = _prepare_split(ds.load_manifest(cfg.manifest), cfg.train_fraction, cfg.seed)
    normalizer = ds.fit_normalizer(manifest.subset(ds.TRAIN))
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)

    if cfg.feature_cache:
        cache = load_feature_cache(cfg.feature_cache)
    else:
        extractor = _build_extractor(cfg.extractor, cfg.weights, cfg.backbone_config)
        cache = extract_features(manifest, extractor)
        save_feature_cache(cache, out / "features.cqwa", manifest=manifest)

    params, report = train(cache, manifest, normalizer, cfg.train_config())
    ds.save_manifest(manifest, out / "manifest_split.csv")
    ds.save_normalizer(normalizer, out / "normalizer.json")
    save_head(params, out / "head.cqwa", normalizer, arch=ARCH_MLP, extractor_tag=cache.extractor_tag)
    save_train_report(report, out / "train_report.csv")
    best = report.best
    print(
        f"best epoch {best.epoch}: val_mse {best.val_mse:.6f} "
        f"val_plcc {best.val_plcc:.4f} val_srcc {best.val_srcc:.4f}"
    )
    print(f"artifacts in {out}")
    return 0


def cmd_eval(args) -> int:
    manifest = ds.load_manifest(args.manifest)
    params, normalizer, _meta = load_head(args.head)
    cache = load_feature_cache(args.cache)
    records = manifest.subset(ds.VAL) or manifest.records
    try:
        feats = cache.rows_for([r.image_path for r in records])
    except ContrastiqError as exc:
        raise ConfigError(f"--cache does not match --manifest: {exc}") from exc
    preds = predict_scores(feats, params, normalizer)
    report = metrics.evaluate(preds, [r.mos for r in records], [r.image_path for r in records])
    metrics.write_report(report, args.out)
    print(
        f"n {report.n}: plcc {report.plcc:.4f} srcc {report.srcc:.4f} "
        f"tol_acc {report.tolerance_accuracy:.4f} mse {report.mse:.6f}"
    )
    return 0


def cmd_pair_train(args) -> int:
    cfg = RunConfig.from_file(args.config)
    manifest = _prepare_split(ds.load_manifest(cfg.manifest), cfg.train_fraction, cfg.seed)
    normalizer = ds.fit_normalizer(manifest.subset(ds.TRAIN))
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)

    if cfg.feature_cache:
        cache = load_feature_cache(cfg.feature_cache)
    else:
        extractor = _build_extractor(cfg.extractor, cfg.weights, cfg.backbone_config)
        cache = extract_features(manifest, extractor)
        save_feature_cache(cache, out / "features.cqwa", manifest=manifest)

    train_pairs = make_pairs(cache, manifest, normalizer, split=ds.TRAIN,
                             pairs_per_image=cfg.pairs_per_image, seed=cfg.seed)
    val_pairs = make_pairs(cache, manifest, normalizer, split=ds.VAL,
                           pairs_per_image=cfg.pairs_per_image, seed=cfg.seed)
    params = siamese_train(train_pairs, cfg.train_config(), val_pairs=val_pairs)
    ds.save_manifest(manifest, out / "manifest_split.csv")
    ds.save_normalizer(normalizer, out / "normalizer.json")
    save_head(params, out / "head.cqwa", normalizer, arch=ARCH_SIAMESE,
              extractor_tag=cache.extractor_tag)
    print(f"trained on {len(train_pairs)} pairs; artifacts in {out}")
    return 0


def cmd_score(args) -> int:
    params, normalizer, meta = load_head(args.head)
    extractor = _build_extractor(meta.get("extractor_tag", "handcrafted"), args.weights, args.config)
    image = load_image(args.image)
    feature = np.asarray(extractor(image), dtype=np.float32)
    if meta.get("arch") == ARCH_SIAMESE:
        if not args.anchor_manifest or not args.anchor_cache:
            raise ConfigError("siamese head needs --anchor-manifest and --anchor-cache")
        manifest = ds.load_manifest(args.anchor_manifest)
        cache = load_feature_cache(args.anchor_cache)
        anchor_records = manifest.subset(ds.TRAIN) or manifest.records
        feats = cache.rows_for([r.image_path for r in anchor_records])
        anchors = [(feats[i], r.mos) for i, r in enumerate(anchor_records)]
        score = siamese_score(feature, anchors, params, normalizer)
    else:
        score = float(predict_scores(feature[None, :], params, normalizer)[0])
    print(f"{score:.4f}")
    return 0


def cmd_report(args) -> int:
    src = Path(args.train_report)
    if not src.is_file():
        raise MissingFile(f"--train-report not found: {src}")
    text = src.read_text(encoding="utf-8")
    lines = [ln for ln in text.split("\n") if ln]
    from .regressor.training import REPORT_HEADER

    if not lines or lines[0] != REPORT_HEADER or len(lines) < 2:
        raise ConfigError(f"--train-report is empty or malformed: {src}")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "curves.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")
    written = ["curves.csv"]
    if args.per_image:
        per_image = Path(args.per_image)
        if not per_image.is_file():
            raise MissingFile(f"--per-image not found: {per_image}")
        rows = [ln for ln in per_image.read_text(encoding="utf-8").split("\n") if ln]
        if not rows or rows[0] != "path,actual_mos,predicted_mos":
            raise ConfigError(f"--per-image is not an evaluation per-image CSV: {per_image}")
        (out / "scatter.csv").write_text("\n".join(rows) + "\n", encoding="utf-8")
        written.append("scatter.csv")
    print(f"wrote {', '.join(written)} to {out}")
    return 0


class _Parser(argparse.ArgumentParser):
    """argparse exits 2 on bad arguments; the contract reserves 2 for IO."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(3)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="contrastiq",
        description="No-reference contrast image quality workbench",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a contrast-distorted dataset")
    p.add_argument("--bases", required=True, help="directory of base images (or one image)")
    p.add_argument("--gammas", default="", help="comma-separated gamma levels")
    p.add_argument("--scales", default="", help="comma-separated linear contrast scales")
    p.add_argument("--augment-copies", type=int, default=0,
                   help="augmented copies to add per distorted image")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("extract", help="extract frozen features into a cache")
    p.add_argument("--manifest", required=True)
    p.add_argument("--extractor", default="handcrafted", help="handcrafted or cnn")
    p.add_argument("--weights", default="", help="weight archive for --extractor cnn")
    p.add_argument("--config", default="nano", help="backbone preset name or config JSON path")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("train", help="train the regression head")
    p.add_argument("--config", required=True, help="key=value run configuration file")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a trained head against a manifest")
    p.add_argument("--manifest", required=True)
    p.add_argument("--head", required=True)
    p.add_argument("--cache", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("pair-train", help="train the pairwise difference head")
    p.add_argument("--config", required=True)
    p.set_defaults(func=cmd_pair_train)

    p = sub.add_parser("score", help="score one image with a trained head")
    p.add_argument("--image", required=True)
    p.add_argument("--head", required=True)
    p.add_argument("--weights", default="", help="backbone weights (cnn heads)")
    p.add_argument("--config", default="nano", help="backbone preset or config JSON (cnn heads)")
    p.add_argument("--anchor-manifest", default="", help="labeled manifest (siamese heads)")
    p.add_argument("--anchor-cache", default="", help="feature cache for anchors (siamese heads)")
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("report", help="emit plot-ready CSVs from run artifacts")
    p.add_argument("--train-report", required=True)
    p.add_argument("--per-image", default="", help="per_image.csv from eval (optional)")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_report)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (MissingFile, IoFailure, CorruptData, UnsupportedFormat, ArchiveError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ContrastiqError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
