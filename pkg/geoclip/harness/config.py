"""
Run configuration files.

A run config is an INI file with the sections ``[run]``, ``[data]``,
``[model]``, ``[strategy]``, ``[privacy]`` and, optionally, ``[sweep]``,
``[tuning]`` and one ``[strategy.<kind>]`` section per strategy for its
kind-specific options (``clip_norm``, ``rank``, ``quantile_lr``)::

    [run]
    name = diabetes
    learning_rate = 0.5
    batch_size = 32
    epochs = 5
    seeds = 0..19

    [strategy]
    kind = geoclip_full
    h2 = 1

    [strategy.vanilla]
    clip_norm = 1.0

    [privacy]
    epsilon = 0.5
    delta = 1e-5

Any key can be overridden with ``section.key=value`` strings.
"""
from __future__ import annotations
import configparser
import math
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

from ..accountant import PrivacySpec, sigma_for_target
from ..core.errors import ConfigError
from ..models.base import ModelKind
from ..privatizers import side_releases
from ..privatizers.base import ClipStrategyConfig, StrategyKind

DATA_SOURCES = ("synthetic_regression", "synthetic_classification", "diabetes", "breast_cancer", "csv")
EVAL_CADENCES = ("epoch", "iteration")
# options that belong to [strategy.<kind>] rather than [strategy]
KIND_OPTIONS = ("rank", "clip_norm", "quantile_lr")


def _split_list(value: Any) -> List[str]:
    if isinstance(value, (list, tuple)):
        return [str(v).strip() for v in value]
    return [s.strip() for s in str(value).split(',') if s.strip()]


def parse_seeds(value: Any) -> Tuple[int, ...]:
    """``"0..19"`` (inclusive) or a comma list."""
    if isinstance(value, (list, tuple)):
        return tuple(int(v) for v in value)
    text = str(value).strip()
    if ".." in text:
        lo, hi = text.split("..", 1)
        return tuple(range(int(lo), int(hi) + 1))
    return tuple(int(s) for s in _split_list(text))


def _floats(value: Any) -> Tuple[float, ...]:
    return tuple(float(s) for s in _split_list(value))


def _bool(value: Any) -> bool:
    if isinstance(value, bool):
        return value
    text = str(value).strip().lower()
    if text in ("true", "yes", "1", "on"):
        return True
    if text in ("false", "no", "0", "off"):
        return False
    raise ConfigError(f"expected a boolean, got {value!r}")


def _opt(value: Any, cast):
    return None if value is None or value == "" else cast(value)


def _coerce(cls, data: Dict[str, Any], section: str, casts: Dict[str, Any]):
    unknown = set(data) - {f.name for f in fields(cls)}
    if unknown:
        raise ConfigError(f"Unknown key(s) in [{section}]: {', '.join(sorted(unknown))}")
    try:
        return cls(**{k: _opt(v, casts.get(k, str)) for k, v in data.items()})
    except ValueError as e:
        if isinstance(e, ConfigError):
            raise
        raise ConfigError(f"[{section}]: {e}") from None


@dataclass(frozen=True)
class DataConfig:
    """Where the data comes from and how it is generated."""

    source: str = "synthetic_regression"
    path: Optional[str] = None
    schema: Optional[str] = None
    n: Optional[int] = None
    p: Optional[int] = None
    corr_block: Optional[int] = None
    rho: float = 0.8
    noise: float = 0.1
    seed: int = 0
    minmax_targets: Optional[bool] = None

    def __post_init__(self):
        if self.source not in DATA_SOURCES:
            raise ConfigError(f"Unknown data source {self.source!r}; expected one of {', '.join(DATA_SOURCES)}")
        if self.source == "csv" and not (self.path and self.schema):
            raise ConfigError("data source 'csv' needs both path and schema")

    def to_dict(self) -> Dict[str, Any]:
        return {f.name: getattr(self, f.name) for f in fields(self) if getattr(self, f.name) is not None}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "DataConfig":
        return _coerce(cls, data, "data", {
            "n": int, "p": int, "corr_block": int, "rho": float, "noise": float,
            "seed": int, "minmax_targets": _bool,
        })


@dataclass(frozen=True)
class PrivacyConfig:
    """Noise multiplier, or the ε it should be solved for, and δ."""

    sigma: Optional[float] = None
    epsilon: Optional[float] = None
    delta: float = 1e-5

    def __post_init__(self):
        if self.sigma is not None and self.epsilon is not None:
            raise ConfigError("[privacy] takes sigma or epsilon, not both")
        if self.sigma is not None and self.sigma < 0:
            raise ConfigError(f"sigma must be nonnegative, got {self.sigma}")
        if self.epsilon is not None and not self.epsilon > 0:
            raise ConfigError(f"epsilon must be positive, got {self.epsilon}")
        if not 0.0 < self.delta < 1.0:
            raise ConfigError(f"delta must lie in (0, 1), got {self.delta}")

    @property
    def budget(self) -> str:
        """Label of the privacy level, used to name sweep cells."""
        if self.epsilon is not None:
            return f"eps{self.epsilon:g}"
        if self.sigma is not None:
            return f"sigma{self.sigma:g}"
        return "none"

    def to_dict(self) -> Dict[str, Any]:
        return {f.name: getattr(self, f.name) for f in fields(self) if getattr(self, f.name) is not None}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "PrivacyConfig":
        return _coerce(cls, data, "privacy", {"sigma": float, "epsilon": float, "delta": float})


@dataclass(frozen=True)
class SweepConfig:
    """Strategies and privacy levels of a sweep; each pair is one cell."""

    strategies: Tuple[str, ...] = ()
    sigmas: Tuple[float, ...] = ()
    epsilons: Tuple[float, ...] = ()

    def __post_init__(self):
        for kind in self.strategies:
            try:
                StrategyKind(kind)
            except ValueError:
                raise ConfigError(f"Unknown strategy {kind!r} in [sweep]") from None
        if self.sigmas and self.epsilons:
            raise ConfigError("[sweep] takes sigmas or epsilons, not both")

    def to_dict(self) -> Dict[str, Any]:
        return {f.name: list(getattr(self, f.name)) for f in fields(self) if getattr(self, f.name)}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "SweepConfig":
        return _coerce(cls, data, "sweep", {
            "strategies": lambda v: tuple(_split_list(v)), "sigmas": _floats, "epsilons": _floats,
        })


@dataclass(frozen=True)
class TuningConfig:
    """Validation-split grid over learning rate and the upper eigenvalue clamp."""

    learning_rates: Tuple[float, ...] = ()
    h2_values: Tuple[float, ...] = (1.0, 10.0)
    seeds: Tuple[int, ...] = (0,)

    def __post_init__(self):
        if not self.learning_rates:
            raise ConfigError("[tuning] needs at least one learning rate")
        if any(lr <= 0 for lr in self.learning_rates):
            raise ConfigError("[tuning] learning rates must be positive")
        if not self.seeds:
            raise ConfigError("[tuning] needs at least one seed")

    def to_dict(self) -> Dict[str, Any]:
        return {f.name: list(getattr(self, f.name)) for f in fields(self)}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "TuningConfig":
        return _coerce(cls, data, "tuning", {
            "learning_rates": _floats, "h2_values": _floats, "seeds": parse_seeds,
        })


@dataclass(frozen=True)
class RunConfig:
    """Everything needed to reproduce a training run or a sweep.

    Attributes:
        name: experiment name, used for the output directory.
        learning_rate: SGD step size η.
        batch_size: expected Poisson batch size |B|.
        epochs: run length in epochs of ``⌈N/|B|⌉`` steps (or ``iterations``).
        iterations: run length in steps.
        seeds: seeds of the run; each gives one ``RunRecord``.
        eval: evaluation cadence, ``"epoch"`` or ``"iteration"``.
        output_dir: root directory for emitted CSV files (default: global ``output_dir``).
        resume_from: estimator snapshot each run starts from (``{seed}`` and ``{label}`` are filled in).
        snapshot_to: where each run saves its final estimator state (``{seed}`` and ``{label}`` are filled in).
        workers: worker processes for sweeps.
        split_seed: seed of the train/val/test shuffle.
        data, model_kind, model_classes: dataset and model.
        strategy: ``[strategy]`` options shared by every kind (``kind`` included).
        strategy_kinds: per-kind ``[strategy.<kind>]`` options.
        privacy: noise level.
        sweep, tuning: optional sweep grid and tuning grid.
    """

    name: str = "run"
    learning_rate: float = 0.1
    batch_size: int = 32
    epochs: Optional[int] = None
    iterations: Optional[int] = None
    seeds: Tuple[int, ...] = (0,)
    eval: Optional[str] = None
    output_dir: Optional[str] = None
    resume_from: Optional[str] = None
    snapshot_to: Optional[str] = None
    workers: int = 1
    split_seed: int = 0
    data: DataConfig = field(default_factory=DataConfig)
    model_kind: str = "linear_regression"
    model_classes: Optional[int] = None
    strategy: Dict[str, Any] = field(default_factory=lambda: {"kind": "geoclip_full"})
    strategy_kinds: Dict[str, Dict[str, Any]] = field(default_factory=dict)
    privacy: PrivacyConfig = field(default_factory=PrivacyConfig)
    sweep: Optional[SweepConfig] = None
    tuning: Optional[TuningConfig] = None

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise ConfigError(f"learning_rate must be positive, got {self.learning_rate}")
        if self.batch_size < 1:
            raise ConfigError(f"batch_size must be positive, got {self.batch_size}")
        if (self.epochs is None) == (self.iterations is None):
            raise ConfigError("[run] needs exactly one of epochs or iterations")
        if (self.epochs or 0) < 0 or (self.iterations or 0) < 0:
            raise ConfigError("run length must be nonnegative")
        if not self.seeds:
            raise ConfigError("[run] needs at least one seed")
        if self.eval is None:
            object.__setattr__(self, 'eval', "epoch" if self.epochs is not None else "iteration")
        if self.eval not in EVAL_CADENCES:
            raise ConfigError(f"eval must be one of {', '.join(EVAL_CADENCES)}, got {self.eval!r}")
        if self.workers < 1:
            raise ConfigError(f"workers must be positive, got {self.workers}")
        for key in KIND_OPTIONS:
            if key in self.strategy:
                raise ConfigError(f"{key} belongs in [strategy.<kind>], not [strategy]")
        try:
            StrategyKind(self.strategy.get("kind", StrategyKind.GEOCLIP_FULL.value))
        except ValueError:
            raise ConfigError(f"Unknown strategy kind {self.strategy.get('kind')!r}") from None
        if self.model_kind not in [k.value for k in ModelKind]:
            raise ConfigError(f"Unknown model kind {self.model_kind!r}")
        if "sigma" in self.strategy:
            raise ConfigError("set the noise level in [privacy], not [strategy]")
        # surface option errors at load time
        for kind in self.kinds():
            self.strategy_config(kind)

    # -- derived quantities -------------------------------------------------

    @property
    def kind(self) -> StrategyKind:
        return StrategyKind(self.strategy.get("kind", StrategyKind.GEOCLIP_FULL.value))

    def kinds(self) -> List[StrategyKind]:
        """Strategies this config runs: the sweep's, or the single ``[strategy]`` kind."""
        if self.sweep and self.sweep.strategies:
            return [StrategyKind(k) for k in self.sweep.strategies]
        return [self.kind]

    def budgets(self) -> List[PrivacyConfig]:
        """Privacy levels of a sweep (or the single ``[privacy]`` level)."""
        if self.sweep and self.sweep.sigmas:
            return [PrivacyConfig(sigma=s, delta=self.privacy.delta) for s in self.sweep.sigmas]
        if self.sweep and self.sweep.epsilons:
            return [PrivacyConfig(epsilon=e, delta=self.privacy.delta) for e in self.sweep.epsilons]
        return [self.privacy]

    def steps_per_epoch(self, n_train: int) -> int:
        return math.ceil(n_train / self.batch_size)

    def total_steps(self, n_train: int) -> int:
        if self.iterations is not None:
            return self.iterations
        return self.epochs * self.steps_per_epoch(n_train)

    def sample_rate(self, n_train: int) -> float:
        return min(1.0, self.batch_size / n_train)

    def resolve_sigma(self, n_train: int) -> float:
        """Noise multiplier of the run: ``[privacy] sigma``, or solved from ``epsilon``.

        The solve composes the strategy's side releases (the quantile count) with
        the gradient release, so ``epsilon`` bounds the whole ledger.

        Raises:
            ConfigError: if a private strategy has no noise level configured.
        """
        if self.kind is StrategyKind.NONPRIVATE:
            return 0.0
        if self.privacy.sigma is not None:
            return self.privacy.sigma
        if self.privacy.epsilon is None:
            raise ConfigError(f"strategy {self.kind.value} needs [privacy] sigma or epsilon")
        q, steps, delta = self.sample_rate(n_train), self.total_steps(n_train), self.privacy.delta
        fixed = [PrivacySpec(r.sigma, q, steps, delta) for r in side_releases(self.strategy_config())]
        return sigma_for_target(self.privacy.epsilon, q, steps, delta, fixed=fixed)

    def strategy_config(self, kind: Optional[Union[str, StrategyKind]] = None,
                        sigma: float = 1.0) -> ClipStrategyConfig:
        """Options for ``kind``: shared ``[strategy]`` keys plus ``[strategy.<kind>]``."""
        kind = self.kind if kind is None else StrategyKind(kind)
        merged = {k: v for k, v in self.strategy.items() if k != "kind"}
        merged.update(self.strategy_kinds.get(kind.value, {}))
        merged.update(kind=kind.value, sigma=sigma)
        try:
            return ClipStrategyConfig.from_dict(merged)
        except (TypeError, ValueError) as e:
            if isinstance(e, ConfigError):
                raise
            raise ConfigError(f"[strategy] for {kind.value}: {e}") from None

    def cell(self, kind: Optional[Union[str, StrategyKind]] = None, privacy: Optional[PrivacyConfig] = None,
             learning_rate: Optional[float] = None, h2: Optional[float] = None,
             seeds: Optional[Sequence[int]] = None) -> "RunConfig":
        """A single-strategy copy of this config, e.g. one cell of a sweep."""
        strategy = dict(self.strategy)
        if kind is not None:
            strategy["kind"] = StrategyKind(kind).value
        if h2 is not None:
            strategy["h2"] = h2
        return replace(
            self,
            strategy=strategy,
            privacy=self.privacy if privacy is None else privacy,
            learning_rate=self.learning_rate if learning_rate is None else learning_rate,
            seeds=self.seeds if seeds is None else tuple(seeds),
            sweep=None,
        )

    # -- dict / INI round trip ----------------------------------------------

    def to_dict(self) -> Dict[str, Dict[str, Any]]:
        """Sections of the config as nested dictionaries."""
        run = {
            "name": self.name,
            "learning_rate": self.learning_rate,
            "batch_size": self.batch_size,
            "seeds": list(self.seeds),
            "eval": self.eval,
            "workers": self.workers,
            "split_seed": self.split_seed,
        }
        if self.output_dir is not None:
            run["output_dir"] = self.output_dir
        if self.resume_from is not None:
            run["resume_from"] = self.resume_from
        if self.snapshot_to is not None:
            run["snapshot_to"] = self.snapshot_to
        if self.epochs is not None:
            run["epochs"] = self.epochs
        if self.iterations is not None:
            run["iterations"] = self.iterations
        model = {"kind": self.model_kind}
        if self.model_classes is not None:
            model["classes"] = self.model_classes
        out = {
            "run": run,
            "data": self.data.to_dict(),
            "model": model,
            "strategy": dict(self.strategy),
            "privacy": self.privacy.to_dict(),
        }
        for kind, options in self.strategy_kinds.items():
            out[f"strategy.{kind}"] = dict(options)
        if self.sweep is not None:
            out["sweep"] = self.sweep.to_dict()
        if self.tuning is not None:
            out["tuning"] = self.tuning.to_dict()
        return out

    @classmethod
    def from_dict(cls, data: Dict[str, Dict[str, Any]]) -> "RunConfig":
        """Build a config from nested section dictionaries (values may be strings).

        Raises:
            ConfigError: on unknown sections or keys, or invalid values.
        """
        known = {"run", "data", "model", "strategy", "privacy", "sweep", "tuning"}
        strategy_kinds = {}
        for section in data:
            if section.startswith("strategy."):
                kind = section[len("strategy."):]
                try:
                    StrategyKind(kind)
                except ValueError:
                    raise ConfigError(f"Unknown strategy section [{section}]") from None
                strategy_kinds[kind] = dict(data[section])
            elif section not in known:
                raise ConfigError(f"Unknown config section [{section}]")

        run = dict(data.get("run", {}))
        casts = {
            "name": str, "learning_rate": float, "batch_size": int, "epochs": int, "iterations": int,
            "seeds": parse_seeds, "eval": str, "output_dir": str, "workers": int, "split_seed": int,
            "resume_from": str, "snapshot_to": str,
        }
        unknown = set(run) - set(casts)
        if unknown:
            raise ConfigError(f"Unknown key(s) in [run]: {', '.join(sorted(unknown))}")
        model = dict(data.get("model", {}))
        unknown = set(model) - {"kind", "classes"}
        if unknown:
            raise ConfigError(f"Unknown key(s) in [model]: {', '.join(sorted(unknown))}")
        try:
            kwargs = {k: _opt(v, casts[k]) for k, v in run.items()}
            if "classes" in model:
                kwargs["model_classes"] = _opt(model["classes"], int)
        except ValueError as e:
            raise ConfigError(f"[run]: {e}") from None

        return cls(
            data=DataConfig.from_dict(dict(data.get("data", {}))),
            model_kind=str(model.get("kind", "linear_regression")),
            strategy=dict(data.get("strategy", {"kind": "geoclip_full"})),
            strategy_kinds=strategy_kinds,
            privacy=PrivacyConfig.from_dict(dict(data.get("privacy", {}))),
            sweep=SweepConfig.from_dict(dict(data["sweep"])) if "sweep" in data else None,
            tuning=TuningConfig.from_dict(dict(data["tuning"])) if "tuning" in data else None,
            **kwargs,
        )


def apply_overrides(sections: Dict[str, Dict[str, Any]], overrides: Sequence[str]) -> Dict[str, Dict[str, Any]]:
    """Apply ``section.key=value`` strings; the section may itself contain dots."""
    out = {name: dict(values) for name, values in sections.items()}
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not of the form section.key=value")
        path, value = item.split("=", 1)
        if "." not in path:
            raise ConfigError(f"override {item!r} is not of the form section.key=value")
        section, key = path.strip().rsplit(".", 1)
        out.setdefault(section, {})[key] = value.strip()
    return out


def load_run_config(path: Union[str, Path], overrides: Sequence[str] = ()) -> RunConfig:
    """Read an INI run config and apply overrides.

    Raises:
        OSError: if the file cannot be read.
        ConfigError: on malformed or invalid content.
    """
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    parser.optionxform = str
    try:
        with open(path, encoding='utf-8') as f:
            parser.read_file(f)
    except configparser.Error as e:
        raise ConfigError(f"{path}: {e}") from None
    sections = {name: dict(parser.items(name)) for name in parser.sections()}
    return RunConfig.from_dict(apply_overrides(sections, overrides))


def write_run_config(config: RunConfig, path: Union[str, Path]) -> Path:
    """Write ``config`` as an INI file that ``load_run_config`` reads back."""
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str
    for section, values in config.to_dict().items():
        parser[section] = {
            k: ", ".join(str(x) for x in v) if isinstance(v, (list, tuple)) else str(v)
            for k, v in values.items()
        }
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, 'w', encoding='utf-8') as f:
        parser.write(f)
    return path
