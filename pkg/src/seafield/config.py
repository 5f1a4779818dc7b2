"""Flat ``key=value`` experiment configuration with dotted namespaces.

Lines starting with ``#`` are comments. Every key must be one of
:data:`DEFAULTS`; values are parsed to the type of the default.
"""
from __future__ import annotations

import os
from dataclasses import dataclass, field
from pathlib import Path

from .data import (SplitSpec, TimeSeriesDataset, WindowSet, load_dataset, make_windows,
                   normalize, split, synthesize_seasonal)
from .models import MODEL_KINDS
from .training import TrainConfig

DEFAULTS = {
    "model.kind": "seagnn",
    "model.channels": 32,
    "model.end_channels": 128,
    "model.skip_channels": 64,
    "model.num_modules": 3,
    "model.dropout": 0.3,
    "data.path": "",
    "data.synthetic.nodes": 20,
    "data.synthetic.days": 28,
    "data.synthetic.granularity": 5,
    "data.synthetic.noise_std": 0.1,
    "data.synthetic.seed": 0,
    "data.train_fraction": 0.7,
    "data.val_fraction": 0.1,
    "data.test_fraction": 0.2,
    "data.history": 12,
    "data.horizon": 12,
    "data.weekend": False,
    "train.epochs": 50,
    "train.batch_size": 64,
    "train.learning_rate": 1e-3,
    "train.weight_decay": 1e-4,
    "train.clip_norm": 5.0,
    "train.curriculum": False,
    "train.step_every": 2500,
    "cnf.encoder": "rff",
    "cnf.sigma": 10.0,
    "cnf.frequencies": 64,
    "cnf.node_frequencies": 16,
    "cnf.node_sigma": 1.0,
    "cnf.hidden": 256,
    "cnf.layers": 3,
    "cnf.omega0": 30.0,
    "fusion.mode": "gated",
    "fusion.sites": "layerwise",
    "graph.k": 20,
    "graph.dim": 40,
    "graph.alpha": 3.0,
    "graph.depth": 2,
    "graph.beta": 0.05,
    "graph.use_prior": False,
    "eval.metrics": "mae,rmse,mape",
    "eval.horizons": "3,6,12",
    "eval.plot_nodes": "0",
    "ablate.kind": "seagnn",
    "ablate.variants": "full,no_rff,no_lgf,agg_addition,agg_multiplication,agg_concatenation",
    "reconstruct.nodes": "0",
    "reconstruct.kinds": "rff,siren,linear",
    "reconstruct.iterations": 2000,
    "reconstruct.learning_rate": 1e-3,
    "seeds": "0",
    "output.dir": "runs",
}


class ConfigError(ValueError):
    pass


def _parse_value(key: str, text: str):
    default = DEFAULTS[key]
    text = text.strip()
    try:
        if isinstance(default, bool):
            if text.lower() in ("1", "true", "yes", "on"):
                return True
            if text.lower() in ("0", "false", "no", "off"):
                return False
            raise ValueError(text)
        if isinstance(default, int):
            return int(text)
        if isinstance(default, float):
            return float(text)
    except ValueError:
        raise ConfigError(f"{key}: cannot parse {text!r} as {type(default).__name__}") from None
    return text


def _int_list(text: str) -> list[int]:
    return [int(x) for x in text.split(",") if x.strip()]


def _str_list(text: str) -> list[str]:
    return [x.strip() for x in text.split(",") if x.strip()]


@dataclass
class ExperimentConfig:
    values: dict = field(default_factory=lambda: dict(DEFAULTS))

    @classmethod
    def parse(cls, text: str) -> "ExperimentConfig":
        values = dict(DEFAULTS)
        for n, raw in enumerate(text.splitlines(), 1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            key, sep, value = line.partition("=")
            key = key.strip()
            if not sep:
                raise ConfigError(f"line {n}: expected key=value, got {raw!r}")
            if key not in DEFAULTS:
                raise ConfigError(f"line {n}: unknown key {key!r}")
            values[key] = _parse_value(key, value)
        config = cls(values)
        config.validate()
        return config

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
        return cls.parse(text)

    def validate(self):
        if self["model.kind"] not in MODEL_KINDS:
            raise ConfigError(f"model.kind must be one of {MODEL_KINDS}")
        try:
            self.split_spec()
            self.seeds
            _int_list(self["eval.horizons"])
            _int_list(self["eval.plot_nodes"])
            _int_list(self["reconstruct.nodes"])
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    def __getitem__(self, key):
        return self.values[key]

    def with_overrides(self, **overrides) -> "ExperimentConfig":
        values = dict(self.values)
        for key, value in overrides.items():
            if key not in DEFAULTS:
                raise ConfigError(f"unknown key {key!r}")
            values[key] = value
        return ExperimentConfig(values)

    def dumps(self) -> str:
        return "".join(f"{k}={_format(v)}\n" for k, v in sorted(self.values.items()))

    @property
    def seeds(self) -> list[int]:
        return _int_list(self["seeds"])

    def split_spec(self) -> SplitSpec:
        return SplitSpec(self["data.train_fraction"], self["data.val_fraction"],
                         self["data.test_fraction"])

    def train_config(self, seed: int) -> TrainConfig:
        return TrainConfig(epochs=self["train.epochs"], batch_size=self["train.batch_size"],
                           learning_rate=self["train.learning_rate"],
                           weight_decay=self["train.weight_decay"],
                           clip_norm=self["train.clip_norm"], seed=seed,
                           curriculum=self["train.curriculum"],
                           step_every=self["train.step_every"])

    def field_kwargs(self) -> dict:
        return {"encoder": self["cnf.encoder"], "sigma": self["cnf.sigma"],
                "num_frequencies": self["cnf.frequencies"],
                "node_frequencies": self["cnf.node_frequencies"],
                "node_sigma": self["cnf.node_sigma"], "hidden": self["cnf.hidden"],
                "layers": self["cnf.layers"], "omega0": self["cnf.omega0"],
                "weekend": self["data.weekend"]}

    def model_hparams(self, dataset: TimeSeriesDataset, in_dim: int) -> dict:
        hp = {"in_dim": in_dim, "seq_len": self["data.history"],
              "horizon": self["data.horizon"], "channels": self["model.channels"],
              "end_channels": self["model.end_channels"],
              "num_modules": self["model.num_modules"],
              "fusion_mode": self["fusion.mode"], "fusion_sites": self["fusion.sites"],
              "field_kwargs": self.field_kwargs()}
        if self["model.kind"] in ("mtgnn", "seagnn") or self["ablate.kind"] in ("mtgnn", "seagnn"):
            hp.update({"skip_channels": self["model.skip_channels"],
                       "dropout": self["model.dropout"],
                       "k": min(self["graph.k"], dataset.num_nodes),
                       "graph_dim": self["graph.dim"], "alpha": self["graph.alpha"],
                       "gcn_depth": self["graph.depth"], "beta": self["graph.beta"]})
            if self["graph.use_prior"]:
                if dataset.adjacency is None:
                    raise ConfigError("graph.use_prior set but the dataset has no adjacency")
                hp["static_adjacency"] = dataset.adjacency.tolist()
        return hp

    def dataset(self) -> TimeSeriesDataset:
        path = self["data.path"]
        if not path:
            return synthesize_seasonal(self["data.synthetic.nodes"], self["data.synthetic.days"],
                                       self["data.synthetic.granularity"],
                                       self["data.synthetic.noise_std"],
                                       self["data.synthetic.seed"])
        root = Path(path)
        if not root.is_absolute() and os.environ.get("SEAFIELD_DATA_DIR"):
            root = Path(os.environ["SEAFIELD_DATA_DIR"]) / root
        return load_dataset(root)

    def prepare(self):
        """Load, split and normalize the dataset; returns
        (dataset, (train, val, test) WindowSets, stats)."""
        dataset = self.dataset()
        need = self["data.history"] + self["data.horizon"]
        parts = split(dataset, self.split_spec(), min_length=need)
        train_part, stats = normalize(parts[0])
        normed = [train_part] + [normalize(p, stats)[0] for p in parts[1:]]
        windows = tuple(make_windows(p, self["data.history"], self["data.horizon"],
                                     self["data.weekend"]) for p in normed)
        return dataset, windows, stats


def _format(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    return str(value)
