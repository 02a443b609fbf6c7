"""Versioned JSON serialization for trained models.

Trees are stored as nested nodes, linear and kernel models as flat arrays.
Every file carries the schema fingerprint of the feature layout it was
trained on; prediction against a different layout is refused.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from ..errors import ParseError, SchemaMismatchError
from .forest import ForestParams, RandomForestModel, TreeNode
from .linear import LogRegModel
from .svm import SvmRbfModel

MODEL_FORMAT_VERSION = 1


def check_schema_fingerprint(model, expected: str | None) -> None:
    """Refuse mismatched feature layouts; None on either side skips the check."""
    actual = getattr(model, "schema_fingerprint", None)
    if expected is None or actual is None:
        return
    if actual != expected:
        raise SchemaMismatchError(
            f"model was trained on schema {actual}, asked to predict on {expected}"
        )


def _tree_to_dict(root: TreeNode) -> dict:
    built: dict[int, dict] = {}
    order: list[TreeNode] = []
    stack = [root]
    while stack:
        node = stack.pop()
        order.append(node)
        if not node.is_leaf:
            stack.append(node.left)
            stack.append(node.right)
    for node in reversed(order):  # children materialize before parents
        entry: dict = {"pos": node.n_pos, "neg": node.n_neg}
        if not node.is_leaf:
            entry["feature"] = node.feature
            entry["threshold"] = node.threshold
            entry["left"] = built[id(node.left)]
            entry["right"] = built[id(node.right)]
        built[id(node)] = entry
    return built[id(root)]


def _tree_from_dict(data: dict) -> TreeNode:
    root = TreeNode(n_pos=int(data["pos"]), n_neg=int(data["neg"]))
    stack = [(root, data)]
    while stack:
        node, entry = stack.pop()
        if "feature" not in entry:
            continue
        node.feature = int(entry["feature"])
        node.threshold = float(entry["threshold"])
        left, right = entry["left"], entry["right"]
        node.left = TreeNode(n_pos=int(left["pos"]), n_neg=int(left["neg"]))
        node.right = TreeNode(n_pos=int(right["pos"]), n_neg=int(right["neg"]))
        stack.append((node.left, left))
        stack.append((node.right, right))
    return root


def model_to_dict(model) -> dict:
    common = {
        "format_version": MODEL_FORMAT_VERSION,
        "schema_fingerprint": model.schema_fingerprint,
        "feature_names": list(model.feature_names) if model.feature_names else None,
    }
    if isinstance(model, RandomForestModel):
        return {
            **common,
            "kind": "random_forest",
            "seed": model.seed,
            "n_features": model.n_features,
            "params": {
                "n_trees": model.params.n_trees,
                "max_features": model.params.max_features,
                "min_samples_leaf": model.params.min_samples_leaf,
            },
            "trees": [_tree_to_dict(t) for t in model.trees],
        }
    if isinstance(model, LogRegModel):
        return {
            **common,
            "kind": "logistic_regression",
            "l2_lambda": model.l2_lambda,
            "weights": model.weights.tolist(),
            "bias": model.bias,
            "means": model.means.tolist(),
            "scales": model.scales.tolist(),
        }
    if isinstance(model, SvmRbfModel):
        return {
            **common,
            "kind": "svm_rbf",
            "C": model.C,
            "gamma": model.gamma,
            "support_vectors": model.support_vectors.tolist(),
            "dual_coef": model.dual_coef.tolist(),
            "bias": model.bias,
            "means": model.means.tolist(),
            "scales": model.scales.tolist(),
        }
    raise TypeError(f"unsupported model type {type(model).__name__}")


def model_from_dict(data: dict):
    version = data.get("format_version")
    if version != MODEL_FORMAT_VERSION:
        raise ParseError(f"unsupported model format version {version!r}")
    kind = data.get("kind")
    names = data.get("feature_names")
    feature_names = tuple(names) if names else None
    fingerprint = data.get("schema_fingerprint")
    if kind == "random_forest":
        params = data["params"]
        return RandomForestModel(
            trees=[_tree_from_dict(t) for t in data["trees"]],
            params=ForestParams(
                n_trees=int(params["n_trees"]),
                max_features=params["max_features"],
                min_samples_leaf=int(params["min_samples_leaf"]),
            ),
            seed=int(data["seed"]),
            n_features=int(data["n_features"]),
            feature_names=feature_names,
            schema_fingerprint=fingerprint,
        )
    if kind == "logistic_regression":
        return LogRegModel(
            weights=np.asarray(data["weights"], dtype=np.float64),
            bias=float(data["bias"]),
            l2_lambda=float(data["l2_lambda"]),
            means=np.asarray(data["means"], dtype=np.float64),
            scales=np.asarray(data["scales"], dtype=np.float64),
            feature_names=feature_names,
            schema_fingerprint=fingerprint,
        )
    if kind == "svm_rbf":
        return SvmRbfModel(
            support_vectors=np.asarray(data["support_vectors"], dtype=np.float64),
            dual_coef=np.asarray(data["dual_coef"], dtype=np.float64),
            bias=float(data["bias"]),
            gamma=float(data["gamma"]),
            C=float(data["C"]),
            means=np.asarray(data["means"], dtype=np.float64),
            scales=np.asarray(data["scales"], dtype=np.float64),
            feature_names=feature_names,
            schema_fingerprint=fingerprint,
        )
    raise ParseError(f"unknown model kind {kind!r}")


def save_model(model, path: str | Path) -> None:
    Path(path).write_text(json.dumps(model_to_dict(model), sort_keys=True))


def load_model(path: str | Path):
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: invalid model JSON ({exc})") from None
    return model_from_dict(data)
