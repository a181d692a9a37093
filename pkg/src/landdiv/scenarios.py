"""Built-in four-cover weight scenarios for the years 1956, 1973 and 2000."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

from .compositions import WeightVector, as_weights
from .curves import DEFAULT_BINS
from .kde import DEFAULT_ETA
from .mixture import MIN_COUNT

COVERS = ("semi_natural", "cropland", "groves", "urban")
URBAN_INDEX = 3

WEIGHTS = {
    1956: (51.042, 78.880, 89.993, 95.730),
    1973: (43.958, 76.200, 85.322, 94.792),
    2000: (48.542, 74.978, 81.837, 93.958),
}

# cells per face, keyed by presence pattern over COVERS
FACE_COUNTS = {
    1956: {
        "1000": 228, "0100": 30, "1100": 109, "0010": 84, "1010": 787,
        "0110": 489, "1110": 1311, "0001": 1, "1001": 3, "0101": 8,
        "1101": 8, "0011": 39, "1011": 59, "0111": 105, "1111": 99,
    },
    1973: {
        "1000": 224, "0100": 27, "1100": 98, "0010": 78, "1010": 766,
        "0110": 454, "1110": 1208, "0001": 3, "1001": 12, "0101": 14,
        "1101": 13, "0011": 51, "1011": 111, "0111": 141, "1111": 160,
    },
    2000: {
        "1000": 226, "0100": 240, "1100": 1094, "0010": 24, "1010": 199,
        "0110": 212, "1110": 532, "0001": 7, "1001": 28, "0101": 144,
        "1101": 298, "0011": 24, "1011": 29, "0111": 136, "1111": 167,
    },
}

# reference bandwidths per face for each year; faces without a density are absent
REFERENCE_LAMBDA = {
    1956: {"1100": 0.007, "1010": 0.003, "0110": 0.013, "1110": 0.006,
           "0011": 0.027, "1011": 0.032, "0111": 0.014, "1111": 0.035},
    1973: {"1100": 0.029, "1010": 0.002, "0110": 0.026, "1110": 0.006,
           "0011": 0.05, "1011": 0.015, "0111": 0.011, "1111": 0.03},
    2000: {"1100": 0.001, "1010": 0.039, "0110": 0.009, "1110": 0.004,
           "0101": 0.008, "1101": 0.007, "0111": 0.015, "1111": 0.031},
}


@dataclass(frozen=True)
class ScenarioConfig:
    weights: WeightVector
    urban_index: int | None = None
    covers: tuple[str, ...] = ()
    min_count: int = MIN_COUNT
    eta: float = DEFAULT_ETA
    bins: int = DEFAULT_BINS
    seed: int = 0
    name: str = "custom"
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        w = as_weights(self.weights)
        object.__setattr__(self, "weights", w)
        covers = tuple(self.covers) or tuple(f"cover{i + 1}" for i in range(len(w)))
        if len(covers) != len(w):
            raise ValueError("one cover name per weight")
        object.__setattr__(self, "covers", covers)
        if self.urban_index is not None and not 0 <= self.urban_index < len(w):
            raise ValueError("urban_index out of range")

    def with_overrides(self, **changes) -> "ScenarioConfig":
        return replace(self, **{k: v for k, v in changes.items() if v is not None})

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "weights": list(self.weights.weights),
            "urban_index": self.urban_index,
            "covers": list(self.covers),
            "min_count": self.min_count,
            "eta": self.eta,
            "bins": self.bins,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "ScenarioConfig":
        if "year" in doc and "weights" not in doc:
            base = scenario(int(doc["year"]))
            doc = {**base.to_dict(), **{k: v for k, v in doc.items() if k != "year"}}
        known = {"name", "weights", "urban_index", "covers", "min_count", "eta", "bins", "seed"}
        kwargs = {k: doc[k] for k in known if k in doc}
        kwargs["extra"] = {k: v for k, v in doc.items() if k not in known}
        return cls(**kwargs)


def scenario(year: int) -> ScenarioConfig:
    if year not in WEIGHTS:
        raise KeyError(f"no built-in scenario for {year}; choose from {sorted(WEIGHTS)}")
    return ScenarioConfig(WeightVector(WEIGHTS[year]), URBAN_INDEX, COVERS, name=str(year))
