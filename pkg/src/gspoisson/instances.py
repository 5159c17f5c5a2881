"""Instance families and their JSON form."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .assignment import GapInstance
from .matroid import PartitionMatroid
from .submodular import CoverageFunction


@dataclass
class CoverageInstance:
    covers: list[list[int]]
    item_weights: list[float]
    parts: list[list[int]]
    bounds: list[int]
    meta: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return len(self.covers)

    def oracle(self) -> CoverageFunction:
        return CoverageFunction(self.covers, self.item_weights)

    def matroid(self) -> PartitionMatroid:
        return PartitionMatroid(self.parts, self.bounds)

    def to_json(self) -> dict:
        data = {"elements": [{"id": e, "covers": c} for e, c in enumerate(self.covers)],
                "item_weights": self.item_weights, "parts": self.parts, "bounds": self.bounds}
        data.update(self.meta)
        return data

    @classmethod
    def from_json(cls, data: dict) -> "CoverageInstance":
        elements = sorted(data["elements"], key=lambda e: e.get("id", 0))
        ids = [e.get("id", k) for k, e in enumerate(elements)]
        if ids != list(range(len(elements))):
            raise ValueError("element ids must be 0..n-1")
        meta = {k: v for k, v in data.items()
                if k not in ("elements", "item_weights", "parts", "bounds")}
        return cls([list(e["covers"]) for e in elements], list(data["item_weights"]),
                   [list(p) for p in data["parts"]], list(data["bounds"]), meta)


def random_coverage(n: int, k: int, seed: int, items: int | None = None,
                    density: float = 0.3, bound: int = 1) -> CoverageInstance:
    """n elements covering random subsets of a weighted item universe, split into k parts."""
    if not 1 <= k <= n:
        raise ValueError("need 1 <= k <= n")
    rng = np.random.default_rng(seed)
    items = items if items is not None else 2 * n
    weights = [round(float(w), 6) for w in rng.uniform(0.5, 2.0, size=items)]
    covers = []
    for _ in range(n):
        c = [int(x) for x in np.nonzero(rng.random(items) < density)[0]]
        covers.append(c or [int(rng.integers(items))])
    order = [int(e) for e in rng.permutation(n)]
    cuts = sorted(int(x) for x in rng.choice(np.arange(1, n), size=k - 1, replace=False)) if k > 1 else []
    parts = [sorted(order[a:b]) for a, b in zip([0] + cuts, cuts + [n])]
    bounds = [min(bound, len(p)) for p in parts]
    return CoverageInstance(covers, weights, parts, bounds, {"kind": "coverage"})


def random_welfare(players: int, items: int, seed: int, topics: int = 4,
                   density: float = 0.4) -> CoverageInstance:
    """Welfare with coverage utilities: element p*items + j gives item j to player p."""
    rng = np.random.default_rng(seed)
    weights = [round(float(w), 6) for w in rng.uniform(0.5, 2.0, size=players * topics)]
    covers = []
    for p in range(players):
        for _ in range(items):
            c = [p * topics + int(x) for x in np.nonzero(rng.random(topics) < density)[0]]
            covers.append(c or [p * topics + int(rng.integers(topics))])
    parts = [[p * items + j for p in range(players)] for j in range(items)]
    return CoverageInstance(covers, weights, parts, [1] * items,
                            {"kind": "welfare", "players": players, "items": items})


def random_gap(m: int, n: int, seed: int) -> GapInstance:
    rng = np.random.default_rng(seed)
    values = np.round(rng.uniform(0.1, 1.0, size=(m, n)), 6)
    sizes = np.round(rng.uniform(0.15, 0.7, size=(m, n)), 6)
    return GapInstance(values, sizes)


def load_instance(path: str | Path) -> CoverageInstance | GapInstance:
    data = json.loads(Path(path).read_text())
    if "bins" in data:
        return GapInstance.from_json(data)
    return CoverageInstance.from_json(data)


def dump_instance(instance, path: str | Path) -> None:
    Path(path).write_text(json.dumps(instance.to_json(), indent=1, sort_keys=True) + "\n")
