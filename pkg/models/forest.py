"""Pydantic models for the tree-ensemble likelihood estimator."""

from enum import Enum

from pydantic import BaseModel, ConfigDict, Field, model_validator

FOREST_FORMAT_VERSION = 1


class ForestTarget(str, Enum):
    """Label space a forest is trained on."""
    MODE = "mode"
    CATEGORY = "category"


class ForestParams(BaseModel):
    """Training hyperparameters."""
    model_config = ConfigDict(frozen=True, extra="forbid")

    n_trees: int = Field(default=20, ge=1)
    max_depth: int = Field(default=30, ge=1)
    # None means ⌈√k⌉ features per split.
    max_features: int | None = Field(default=None, ge=1)
    bootstrap: bool = True
    min_samples_split: int = Field(default=2, ge=2)


class TreeArrays(BaseModel):
    """Flattened CART tree; leaves have children == -1."""
    model_config = ConfigDict(frozen=True)

    children_left: tuple[int, ...]
    children_right: tuple[int, ...]
    feature: tuple[int, ...]
    threshold: tuple[float, ...]
    impurity: tuple[float, ...]
    n_samples: tuple[float, ...]
    # Per-node class frequencies, summing to n_samples.
    counts: tuple[tuple[float, ...], ...]

    @model_validator(mode="after")
    def _shapes(self) -> "TreeArrays":
        n = len(self.children_left)
        sizes = {len(self.children_right), len(self.feature), len(self.threshold),
                 len(self.impurity), len(self.n_samples), len(self.counts)}
        if n == 0 or sizes != {n}:
            raise ValueError("tree arrays must be non-empty and of equal length")
        return self

    @property
    def node_count(self) -> int:
        return len(self.children_left)

    def depth(self) -> int:
        """Longest root-to-leaf path, in edges."""
        deepest = 0
        stack = [(0, 0)]
        while stack:
            node, d = stack.pop()
            deepest = max(deepest, d)
            if self.children_left[node] != -1:
                stack.append((self.children_left[node], d + 1))
                stack.append((self.children_right[node], d + 1))
        return deepest


class ForestModel(BaseModel):
    """Versioned, JSON-serializable random forest."""
    model_config = ConfigDict(frozen=True)

    format_version: int = FOREST_FORMAT_VERSION
    target: ForestTarget
    labels: tuple[str, ...] = Field(min_length=1)
    feature_names: tuple[str, ...] = Field(min_length=1)
    medians: dict[str, float]
    params: ForestParams
    seed: int
    trees: tuple[TreeArrays, ...] = Field(min_length=1)

    @property
    def n_trees(self) -> int:
        return len(self.trees)

    @property
    def max_depth(self) -> int:
        return self.params.max_depth


class F1Report(BaseModel):
    """Per-class F1 with supports and the support-weighted total."""
    model_config = ConfigDict(frozen=True)

    per_class: dict[str, float]
    support: dict[str, int]
    weighted: float = Field(ge=0.0, le=1.0)
