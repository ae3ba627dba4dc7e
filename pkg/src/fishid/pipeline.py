"""End-to-end orchestration: image file -> preprocessing -> segmentation ->
features -> score network -> tree -> hierarchical label.

Also holds the training harness, the evaluation report, and model file
persistence. Model files are canonical JSON (sorted keys, shortest
round-trip floats), so identical bundles serialize to identical bytes.
"""

from __future__ import annotations

from dataclasses import dataclass, field
import json
import os

import numpy as np

from . import dtree, mlp
from .dtree import DecisionTree, HierarchicalLabel, LabelRegistry, TreeNode
from .errors import (
    ClassMissing,
    CorruptModel,
    EmptyTestSet,
    EmptyTrainingSet,
    IoFailure,
    ToolkitError,
    VersionMismatch,
)
from .features import FEATURE_COUNT, FEATURE_LAYOUT_VERSION, extract_features, find_head_side
from .imageio import RgbImage, decode_image, load_manifest, to_indexed
from .mlp import MlpModel, TrainConfig
from .preprocess import PreprocessConfig, median_filter, normalize_rotation, unify_background
from .segment import FishMask, divide_segments, extract_mask, group_by_color, trace_contour

MODEL_VERSION = 1

# small weights keep the online momentum updates out of early sigmoid
# saturation for the 47 -> hidden -> classes task; the TrainConfig default
# (0.5) is fine for tiny nets but diverges here
PIPELINE_INIT_SCALE = 0.05


@dataclass(frozen=True)
class PipelineConfig:
    """Preprocessing and segmentation knobs used by a trained bundle."""

    preprocess: PreprocessConfig = field(default_factory=PreprocessConfig)
    fg_tolerance: float = 40.0
    group_tolerance: float = 20.0
    bands: int = 4


@dataclass
class ImageAnalysis:
    """Intermediates produced while turning an image into features."""

    image: RgbImage  # after filtering, background unification, rotation
    background: tuple[int, int, int]
    mask: object
    contour: object
    groups: object
    segments: list
    features: np.ndarray


@dataclass
class PipelineResult:
    label: HierarchicalLabel
    scores: np.ndarray
    features: np.ndarray
    class_index: int
    analysis: ImageAnalysis


@dataclass
class TrainedBundle:
    mlp: MlpModel
    tree: DecisionTree
    registry: LabelRegistry
    config: PipelineConfig
    feature_layout_version: int = FEATURE_LAYOUT_VERSION


@dataclass
class EvalReport:
    class_names: tuple[str, ...]
    confusion: np.ndarray  # rows true, cols predicted
    accuracy: float
    precision: list[float]
    recall: list[float]
    poison_recall: float
    total: int


def _staged(stage, fn, *args):
    try:
        return fn(*args)
    except ToolkitError as exc:
        if exc.stage is None:
            exc.stage = stage
        raise


def analyze_image(img: RgbImage, config: PipelineConfig) -> ImageAnalysis:
    """Run the preprocessing/segmentation/feature chain on a decoded image.

    After rotation normalization the image is mirrored if the head is on the
    right, so every downstream descriptor sees a fish facing left; facing is
    an irrelevant transformation for recognition and canonicalizing it keeps
    the descriptors unimodal per class. The flip is an exact index reversal.
    """
    filtered = _staged(
        "median-filter", median_filter, img, config.preprocess.median_radius
    )
    unified, background = _staged(
        "background", unify_background, filtered, config.preprocess
    )
    rotated = _staged("rotation", normalize_rotation, unified, background)
    mask = _staged("mask", extract_mask, rotated, background, config.fg_tolerance)
    if find_head_side(mask) == "right":
        rotated = RgbImage(rotated.pixels[:, ::-1].copy())
        mask = FishMask.from_bits(mask.bits[:, ::-1].copy())
    contour = _staged("contour", trace_contour, mask)
    groups = _staged("color-groups", group_by_color, mask, rotated, config.group_tolerance)
    segments = _staged("segments", divide_segments, mask, rotated, config.bands)
    idx = to_indexed(rotated)
    feats = _staged("features", extract_features, rotated, idx, mask, contour, groups)
    return ImageAnalysis(rotated, background, mask, contour, groups, segments, feats)


def _read_image(path) -> RgbImage:
    try:
        with open(path, "rb") as fh:
            data = fh.read()
    except OSError as exc:
        raise IoFailure(f"reading {path}: {exc}", stage="read") from exc
    return _staged("decode", decode_image, data)


def run_pipeline(path, bundle: TrainedBundle) -> PipelineResult:
    """Classify one image file, returning the label plus all intermediates."""
    img = _read_image(path)
    analysis = analyze_image(img, bundle.config)
    scores = _staged("scores", mlp.forward, bundle.mlp, analysis.features)
    class_index = _staged("tree", dtree.predict_class, bundle.tree, scores)
    label = _staged("registry", bundle.registry.label, class_index)
    return PipelineResult(label, scores, analysis.features, class_index, analysis)


def _resolve(base_dir, path):
    return path if os.path.isabs(path) else os.path.join(base_dir, path)


def extract_manifest_features(manifest_path, config: PipelineConfig):
    """Features for every manifest row, in manifest order.

    Returns ``(entries, matrix)`` with one feature row per entry; image paths
    are resolved relative to the manifest's directory.
    """
    entries = load_manifest(manifest_path)
    base = os.path.dirname(os.path.abspath(manifest_path))
    rows = np.empty((len(entries), FEATURE_COUNT), dtype=np.float64)
    for i, entry in enumerate(entries):
        img = _read_image(_resolve(base, entry.path))
        rows[i] = analyze_image(img, config).features
    return entries, rows


def train_bundle(
    manifest_path,
    train_cfg: TrainConfig | None = None,
    hidden: int = 24,
    tree_max_depth: int = 8,
    tree_min_leaf: int = 1,
    config: PipelineConfig | None = None,
) -> TrainedBundle:
    """Train the score network on the manifest's train split, then fit the
    tree on the network's outputs. Deterministic given the config seed."""
    if train_cfg is None:
        train_cfg = TrainConfig(seed=7, init_scale=PIPELINE_INIT_SCALE)
    if config is None:
        config = PipelineConfig()
    entries = load_manifest(manifest_path)
    registry = LabelRegistry.from_rows(
        (e.family, e.poison, e.cluster) for e in entries
    )
    train_entries = [e for e in entries if e.split == "train"]
    if not train_entries:
        raise EmptyTrainingSet("manifest has no train rows")
    seen = {e.family for e in train_entries}
    for name in registry.classes:
        if name not in seen:
            raise ClassMissing(f"class {name!r} has no train rows")

    base = os.path.dirname(os.path.abspath(manifest_path))
    X = np.empty((len(train_entries), FEATURE_COUNT), dtype=np.float64)
    targets = np.zeros((len(train_entries), len(registry)), dtype=np.float64)
    for i, entry in enumerate(train_entries):
        img = _read_image(_resolve(base, entry.path))
        X[i] = analyze_image(img, config).features
        targets[i, registry.index_of(entry.family)] = 1.0

    model = mlp.init((FEATURE_COUNT, hidden, len(registry)), train_cfg)
    samples = [mlp.TrainingSample(x, d) for x, d in zip(X, targets)]
    mlp.train(model, samples, train_cfg)

    outputs = [mlp.forward(model, x) for x in X]
    labels = [registry.index_of(e.family) for e in train_entries]
    tree = dtree.fit(
        list(zip(outputs, labels)), max_depth=tree_max_depth, min_leaf=tree_min_leaf
    )
    return TrainedBundle(model, tree, registry, config)


def evaluate(bundle: TrainedBundle, manifest_path) -> EvalReport:
    """Run the pipeline over the manifest's test split and tally results."""
    entries = [e for e in load_manifest(manifest_path) if e.split == "test"]
    if not entries:
        raise EmptyTestSet("manifest has no test rows")
    base = os.path.dirname(os.path.abspath(manifest_path))
    n = len(bundle.registry)
    confusion = np.zeros((n, n), dtype=np.int64)
    for entry in entries:
        result = run_pipeline(_resolve(base, entry.path), bundle)
        true_idx = bundle.registry.index_of(entry.family)
        confusion[true_idx, result.class_index] += 1
    total = int(confusion.sum())
    accuracy = float(np.trace(confusion)) / total
    precision = []
    recall = []
    for c in range(n):
        col = confusion[:, c].sum()
        row = confusion[c, :].sum()
        precision.append(float(confusion[c, c] / col) if col else 0.0)
        recall.append(float(confusion[c, c] / row) if row else 0.0)
    poison_idx = [c for c in range(n) if bundle.registry.entries[c][1]]
    poison_total = int(confusion[poison_idx, :].sum()) if poison_idx else 0
    if poison_total:
        hit = int(confusion[np.ix_(poison_idx, poison_idx)].sum())
        poison_recall = hit / poison_total
    else:
        poison_recall = 1.0  # vacuous: no poison rows in the test split
    return EvalReport(
        bundle.registry.classes,
        confusion,
        accuracy,
        precision,
        recall,
        float(poison_recall),
        total,
    )


def format_report(report: EvalReport) -> str:
    """Human-readable accuracy / confusion / recall summary."""
    width = max(len(name) for name in report.class_names)
    lines = [
        f"accuracy: {report.accuracy:.4f}",
        f"poison recall: {report.poison_recall:.4f}",
        f"test rows: {report.total}",
        "confusion matrix (rows = true, cols = predicted):",
    ]
    head = " " * (width + 2) + " ".join(f"{i:>4d}" for i in range(len(report.class_names)))
    lines.append(head)
    for i, name in enumerate(report.class_names):
        cells = " ".join(f"{int(v):>4d}" for v in report.confusion[i])
        lines.append(f"{name:<{width}} [{i}] {cells}")
    for i, name in enumerate(report.class_names):
        lines.append(
            f"{name:<{width}} precision {report.precision[i]:.4f} "
            f"recall {report.recall[i]:.4f}"
        )
    return "\n".join(lines)


def report_to_dict(report: EvalReport) -> dict:
    return {
        "accuracy": report.accuracy,
        "poison_recall": report.poison_recall,
        "total": report.total,
        "classes": list(report.class_names),
        "confusion": report.confusion.tolist(),
        "precision": report.precision,
        "recall": report.recall,
    }


def _bundle_to_doc(bundle: TrainedBundle) -> dict:
    hierarchy = {}
    for name, (cluster, poison, family) in zip(
        bundle.registry.classes, bundle.registry.entries
    ):
        hierarchy[name] = {"cluster": cluster, "poison": poison, "family": family}
    nodes = []
    for node in bundle.tree.nodes:
        if node.is_leaf:
            nodes.append({"leaf": node.leaf})
        else:
            nodes.append(
                {"f": node.feature, "t": node.threshold, "l": node.left, "r": node.right}
            )
    return {
        "version": MODEL_VERSION,
        "feature_layout_version": bundle.feature_layout_version,
        "classes": list(bundle.registry.classes),
        "hierarchy": hierarchy,
        "mlp": {
            "layer_sizes": list(bundle.mlp.layer_sizes),
            "weights": [w.tolist() for w in bundle.mlp.weights],
            "activation": bundle.mlp.activation,
        },
        "tree": {"nodes": nodes},
        "preprocess": {
            "background_tolerance": bundle.config.preprocess.background_tolerance,
            "median_radius": bundle.config.preprocess.median_radius,
        },
        "segment": {
            "fg_tolerance": bundle.config.fg_tolerance,
            "group_tolerance": bundle.config.group_tolerance,
            "bands": bundle.config.bands,
        },
    }


def save_bundle(bundle: TrainedBundle, path) -> None:
    """Write the canonical model file atomically (temp file + rename)."""
    text = json.dumps(_bundle_to_doc(bundle), sort_keys=True, indent=1) + "\n"
    tmp = f"{path}.tmp"
    try:
        with open(tmp, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except OSError as exc:
        raise IoFailure(f"writing model to {path}: {exc}") from exc


def load_bundle(path) -> TrainedBundle:
    """Read and validate a model file written by :func:`save_bundle`."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise IoFailure(f"reading model from {path}: {exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise CorruptModel(f"model file is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise CorruptModel("model document must be an object")
    version = doc.get("version")
    if version != MODEL_VERSION:
        raise VersionMismatch(f"model version {version!r}, supported {MODEL_VERSION}")
    try:
        classes = tuple(str(c) for c in doc["classes"])
        hierarchy = doc["hierarchy"]
        entries = tuple(
            (
                str(hierarchy[c]["cluster"]),
                bool(hierarchy[c]["poison"]),
                str(hierarchy[c]["family"]),
            )
            for c in classes
        )
        registry = LabelRegistry(classes, entries)
        layer_sizes = tuple(int(s) for s in doc["mlp"]["layer_sizes"])
        weights = [np.array(w, dtype=np.float64) for w in doc["mlp"]["weights"]]
        activation = doc["mlp"]["activation"]
        raw_nodes = doc["tree"]["nodes"]
        nodes = []
        for item in raw_nodes:
            if "leaf" in item:
                nodes.append(TreeNode(leaf=int(item["leaf"])))
            else:
                nodes.append(
                    TreeNode(
                        feature=int(item["f"]),
                        threshold=float(item["t"]),
                        left=int(item["l"]),
                        right=int(item["r"]),
                    )
                )
        tree = DecisionTree(tuple(nodes))
        pre = PreprocessConfig(
            background_tolerance=float(doc["preprocess"]["background_tolerance"]),
            median_radius=int(doc["preprocess"]["median_radius"]),
        )
        config = PipelineConfig(
            preprocess=pre,
            fg_tolerance=float(doc["segment"]["fg_tolerance"]),
            group_tolerance=float(doc["segment"]["group_tolerance"]),
            bands=int(doc["segment"]["bands"]),
        )
        layout = int(doc["feature_layout_version"])
    except (KeyError, TypeError, ValueError) as exc:
        raise CorruptModel(f"model file structure is invalid: {exc}") from exc
    if activation != mlp.ACTIVATION:
        raise CorruptModel(f"unsupported activation {activation!r}")
    if len(layer_sizes) != 3 or any(s < 1 for s in layer_sizes):
        raise CorruptModel(f"bad layer sizes {layer_sizes}")
    n_in, n_hidden, n_out = layer_sizes
    expected = [(n_hidden, n_in + 1), (n_out, n_hidden + 1)]
    if [w.shape for w in weights] != expected:
        raise CorruptModel("weight shapes do not match the layer sizes")
    if any(not np.all(np.isfinite(w)) for w in weights):
        raise CorruptModel("weights contain non-finite values")
    if n_out != len(classes):
        raise CorruptModel("output layer size differs from the class count")
    for i, node in enumerate(nodes):
        if node.is_leaf:
            if not 0 <= node.leaf < len(classes):
                raise CorruptModel(f"node {i} leaf class out of range")
        else:
            if not (0 <= node.left < len(nodes) and 0 <= node.right < len(nodes)):
                raise CorruptModel(f"node {i} child index out of range")
            if not 0 <= node.feature < n_out:
                raise CorruptModel(f"node {i} feature index out of range")
    model = MlpModel(layer_sizes, weights, [np.zeros_like(w) for w in weights])
    return TrainedBundle(model, tree, registry, config, feature_layout_version=layout)
