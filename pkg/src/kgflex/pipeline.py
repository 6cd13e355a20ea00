"""Config validation and the end-to-end pipeline.

The config is a flat TOML document (no tables). Relative paths are resolved
against the config file's directory.
"""

from __future__ import annotations

import json
import logging
import math
import sys
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from . import __version__
from .dataset import InteractionLog, Split, holdout_split, k_core, load_ratings
from .entropy import compute_all_weights, dump_weights
from .graph import (
    DEFAULT_BLACKLIST, FeatureCatalog, build_catalog, filter_by_frequency, load_blacklist,
    load_item_map, load_triples, restrict_hops,
)
from .metrics import evaluate, format_report, semantics_report
from .model import KGFlexModel, TrainConfig, init_model, train
from .recommend import dump_recommendations, recommend_all

logger = logging.getLogger(__name__)

STAGES = ("ingest", "preprocess", "extract", "weigh", "train", "recommend", "evaluate")
SEED_KEYS = ("split_seed", "negative_seed", "init_seed", "train_seed")


class ConfigError(ValueError):
    def __init__(self, errors: list[str]):
        self.errors = errors
        super().__init__("invalid config:\n  " + "\n  ".join(errors))


class StageError(RuntimeError):
    def __init__(self, stage: str, cause: BaseException):
        self.stage = stage
        self.cause = cause
        super().__init__(f"stage {stage!r} failed: {type(cause).__name__}: {cause}")


@dataclass
class PipelineConfig:
    ratings: Path
    triples: Path
    mapping: Path
    output_dir: Path
    blacklist: tuple[str, ...] = tuple(sorted(DEFAULT_BLACKLIST))
    blacklist_file: Path | None = None
    rating_threshold: float = 3.0
    core_k: int = 10
    split_ratio: float = 0.8
    seed: int = 42
    split_seed: int | None = None
    negative_seed: int | None = None
    init_seed: int | None = None
    train_seed: int | None = None
    depth: int = 2
    min_items: int = 10
    per_hop_limit: int = 100  # 0 = unlimited
    ig_cutoff: float = 0.0
    hop_mask: tuple[int, ...] | None = None  # None = every hop up to depth
    dim: int = 10
    learning_rate: float = 0.01
    epochs: int = 30
    l2: float = 0.0
    init_scale: float = 0.1
    top_k: int = 10
    cutoffs: tuple[int, ...] = (10,)
    pop_ratio: float = 0.8
    semantics_k: tuple[int, ...] = (5, 10, 50, 100, 0)  # 0 = unlimited
    threads: int = 1

    def __post_init__(self):
        for name, stage in zip(SEED_KEYS, range(len(SEED_KEYS))):
            if getattr(self, name) is None:
                setattr(self, name, derive_seed(self.seed, stage))
        if self.hop_mask is None:
            self.hop_mask = tuple(range(1, self.depth + 1))

    @property
    def train_config(self) -> TrainConfig:
        return TrainConfig(self.dim, self.learning_rate, self.epochs, self.l2,
                           self.train_seed, self.init_scale, self.threads)

    def to_dict(self) -> dict[str, Any]:
        d = asdict(self)
        return {k: (str(v) if isinstance(v, Path) else list(v) if isinstance(v, tuple) else v)
                for k, v in d.items()}


def derive_seed(master: int, stage: int) -> int:
    return int(np.random.SeedSequence([master, stage]).generate_state(1)[0])


_PATH_KEYS = {"ratings", "triples", "mapping", "output_dir", "blacklist_file"}
_REQUIRED = ("ratings", "triples", "mapping", "output_dir")
_INT_LISTS = {"cutoffs", "semantics_k", "hop_mask"}

# key -> (type, predicate, description)
_RANGES = {
    "rating_threshold": (float, lambda v: True, ""),
    "core_k": (int, lambda v: v >= 1, ">= 1"),
    "split_ratio": (float, lambda v: 0 < v < 1, "in (0, 1)"),
    "seed": (int, lambda v: v >= 0, ">= 0"),
    "split_seed": (int, lambda v: v >= 0, ">= 0"),
    "negative_seed": (int, lambda v: v >= 0, ">= 0"),
    "init_seed": (int, lambda v: v >= 0, ">= 0"),
    "train_seed": (int, lambda v: v >= 0, ">= 0"),
    "depth": (int, lambda v: v >= 1, ">= 1"),
    "min_items": (int, lambda v: v >= 1, ">= 1"),
    "per_hop_limit": (int, lambda v: v >= 0, ">= 0 (0 = unlimited)"),
    "ig_cutoff": (float, lambda v: 0 <= v < 1, "in [0, 1)"),
    "dim": (int, lambda v: v >= 1, ">= 1"),
    "learning_rate": (float, lambda v: v > 0, "> 0"),
    "epochs": (int, lambda v: v >= 0, ">= 0"),
    "l2": (float, lambda v: v >= 0, ">= 0"),
    "init_scale": (float, lambda v: v >= 0, ">= 0"),
    "top_k": (int, lambda v: v >= 1, ">= 1"),
    "pop_ratio": (float, lambda v: 0 <= v <= 1, "in [0, 1]"),
    "threads": (int, lambda v: v >= 1, ">= 1"),
}


def parse_override(text: str) -> tuple[str, Any]:
    """``key=value`` with a TOML value; bare words fall back to strings."""
    if "=" not in text:
        raise ConfigError([f"override {text!r}: expected key=value"])
    key, raw = (s.strip() for s in text.split("=", 1))
    try:
        value = tomllib.loads(f"v = {raw}")["v"]
    except tomllib.TOMLDecodeError:
        value = raw
    return key, value


def validate_config(text: str, base_dir: Path | str = ".", overrides: list[str] | tuple = (),
                    check_files: bool = True) -> PipelineConfig:
    """Parse and validate a flat TOML config, reporting every violation at once."""
    base_dir = Path(base_dir)
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as err:
        raise ConfigError([f"parse error: {err}"]) from None
    for ov in overrides:
        k, v = parse_override(ov)
        raw[k] = v

    known = {f.name for f in fields(PipelineConfig)}
    errors = []
    values: dict[str, Any] = {}
    for key, v in raw.items():
        if isinstance(v, dict):
            errors.append(f"{key}: nested tables are not allowed")
        elif key not in known:
            errors.append(f"{key}: unknown key")
        elif key in _PATH_KEYS:
            if not isinstance(v, str):
                errors.append(f"{key}: expected a path string, got {type(v).__name__}")
            else:
                values[key] = (base_dir / v).resolve()
        elif key == "blacklist":
            if not isinstance(v, list) or not all(isinstance(x, str) for x in v):
                errors.append("blacklist: expected a list of predicate strings")
            else:
                values[key] = tuple(v)
        elif key in _INT_LISTS:
            if not isinstance(v, list) or not all(isinstance(x, int) and not isinstance(x, bool) for x in v):
                errors.append(f"{key}: expected a list of integers")
            elif any(x < 0 for x in v) or (key == "cutoffs" and (not v or any(x < 1 for x in v))):
                errors.append(f"{key}: values out of range")
            else:
                values[key] = tuple(v)
        else:
            typ, ok, desc = _RANGES[key]
            if isinstance(v, bool) or not isinstance(v, (int, float)) or (typ is int and not isinstance(v, int)):
                errors.append(f"{key}: expected {typ.__name__}, got {type(v).__name__}")
                continue
            v = typ(v)
            if not ok(v) or (isinstance(v, float) and not math.isfinite(v)):
                errors.append(f"{key}: {v} out of range, must be {desc}")
            else:
                values[key] = v

    for key in _REQUIRED:
        if key not in raw:
            errors.append(f"{key}: missing required key")
    if check_files:
        for key in ("ratings", "triples", "mapping", "blacklist_file"):
            if key in values and not values[key].is_file():
                errors.append(f"{key}: file not found: {values[key]}")
    depth = values.get("depth", PipelineConfig.depth)
    if "hop_mask" in values and any(h < 1 or h > depth for h in values["hop_mask"]):
        errors.append(f"hop_mask: hops must lie in 1..depth ({depth})")
    top_k = values.get("top_k", PipelineConfig.top_k)
    if "cutoffs" in values and max(values["cutoffs"]) > top_k:
        errors.append(f"cutoffs: must not exceed top_k ({top_k})")
    if errors:
        raise ConfigError(errors)
    return PipelineConfig(**values)


def load_config(path: Path | str, overrides=(), check_files: bool = True) -> PipelineConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as err:
        raise ConfigError([f"cannot read config: {err}"]) from None
    return validate_config(text, path.parent, overrides, check_files)


# --- pipeline ---------------------------------------------------------------

def dump_catalog(catalog: FeatureCatalog) -> tuple[str, str]:
    feats = ["feature_id\tdepth\tchain\tobject\tn_items\n"]
    for fid, items in catalog.feature_items.items():
        f = catalog[fid]
        feats.append(f"{fid}\t{f.depth}\t{json.dumps(list(f.chain))}\t{f.object}\t{len(items)}\n")
    item_rows = ["item\tfeature_id\n"]
    for item in sorted(catalog.item_features):
        item_rows.extend(f"{item}\t{fid}\n" for fid in sorted(catalog.item_features[item]))
    return "".join(feats), "".join(item_rows)


@dataclass
class PipelineState:
    """Everything the stages produce, kept in memory for callers and tests."""

    config: PipelineConfig
    log: InteractionLog | None = None
    split: Split | None = None
    catalog: FeatureCatalog | None = None
    weights: dict | None = None
    model: KGFlexModel | None = None
    loss_trace: list | None = None
    recommendations: dict | None = None
    reports: list | None = None
    artifacts: list[str] = field(default_factory=list)


class Pipeline:
    def __init__(self, config: PipelineConfig):
        self.cfg = config
        self.state = PipelineState(config)
        self.out = Path(config.output_dir)

    def _write(self, name: str, text: str) -> None:
        (self.out / name).write_text(text, encoding="utf-8")
        self.state.artifacts.append(name)

    def ingest(self):
        cfg = self.cfg
        self.state.log = load_ratings(cfg.ratings.read_bytes(), cfg.rating_threshold)
        self._kg = load_triples(cfg.triples.read_bytes(), load_item_map(cfg.mapping.read_bytes()))
        self._blacklist = set(cfg.blacklist)
        if cfg.blacklist_file is not None:
            self._blacklist |= load_blacklist(cfg.blacklist_file.read_bytes())

    def preprocess(self):
        cfg = self.cfg
        log = k_core(self.state.log, cfg.core_k)
        if not log.users:
            raise ValueError(f"{cfg.core_k}-core left no interactions")
        self.state.log = log
        self.state.split = split = holdout_split(log, cfg.split_ratio, cfg.split_seed)
        self._write("train.tsv", "# user\titem\n" + split.train.to_tsv())
        self._write("test.tsv", "# user\titem\n" + split.test.to_tsv())

    def extract(self):
        cfg = self.cfg
        items = sorted(self.state.log.items)
        self._kg.map_items(items)
        catalog = build_catalog(self._kg, items, cfg.depth, self._blacklist)
        catalog = filter_by_frequency(catalog, cfg.min_items)
        catalog = restrict_hops(catalog, cfg.hop_mask)
        self.state.catalog = catalog
        feats, item_rows = dump_catalog(catalog)
        self._write("features.tsv", feats)
        self._write("item_features.tsv", item_rows)

    def weigh(self):
        cfg = self.cfg
        self.state.weights = compute_all_weights(
            self.state.split.train, self.state.catalog, cfg.negative_seed,
            cfg.per_hop_limit or None, cfg.ig_cutoff,
        )
        self._write("weights.tsv", dump_weights(self.state.weights))

    def train(self):
        cfg = self.cfg
        tc = cfg.train_config
        train_log = self.state.split.train
        model = init_model(train_log.users, self.state.weights, self.state.catalog.n_ids,
                           tc.dim, cfg.init_seed, tc.init_scale)
        self.state.loss_trace = train(model, train_log, self.state.catalog.item_features, tc)
        self.state.model = model
        self._write("model.tsv", model.dumps())
        self._write("loss.tsv", "epoch\tloss\n" + "".join(
            f"{e}\t{v!r}\n" for e, v in enumerate(self.state.loss_trace, start=1)))

    def recommend(self):
        self.state.recommendations = recommend_all(
            self.state.model, self.state.split.train, self.state.catalog.item_features, self.cfg.top_k)
        self._write("recommendations.tsv", dump_recommendations(self.state.recommendations))

    def evaluate(self):
        cfg = self.cfg
        split = self.state.split
        lists = self.state.recommendations
        self.state.reports = [evaluate(lists, split.train, split.test, k, pop_ratio=cfg.pop_ratio)
                              for k in cfg.cutoffs]
        self._write("metrics.tsv", format_report(self.state.reports))
        ks = tuple(k or None for k in cfg.semantics_k)
        sem = semantics_report(lists, self.state.weights, self.state.catalog, ks, seed=cfg.negative_seed)
        self._write("semantics.tsv", sem.to_tsv())
        self._write("semantics_features.tsv", sem.features_tsv(self.state.catalog))

    def manifest(self) -> dict:
        return {
            "kgflex_version": __version__,
            "numpy_version": np.__version__,
            "config": self.cfg.to_dict(),
            "seeds": {k: getattr(self.cfg, k) for k in ("seed",) + SEED_KEYS},
            "artifacts": list(self.state.artifacts),
        }

    def run(self, until: str = "evaluate") -> PipelineState:
        if until not in STAGES:
            raise ValueError(f"unknown stage {until!r}")
        self.out.mkdir(parents=True, exist_ok=True)
        marker = self.out / ".partial"
        marker.write_text("incomplete run\n")
        for stage in STAGES[: STAGES.index(until) + 1]:
            logger.info("stage %s", stage)
            try:
                getattr(self, stage)()
            except Exception as err:
                marker.write_text(f"failed at stage {stage}: {err}\n")
                raise StageError(stage, err) from err
        (self.out / "manifest.json").write_text(json.dumps(self.manifest(), indent=2, sort_keys=True) + "\n")
        marker.unlink()
        return self.state


def run_pipeline(config: PipelineConfig, until: str = "evaluate") -> PipelineState:
    return Pipeline(config).run(until)
