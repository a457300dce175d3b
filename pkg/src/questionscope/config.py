"""Pipeline configuration: plain key = value files with QS_ env overrides."""
import os
from dataclasses import dataclass, field, fields
from typing import Optional, Tuple


class ConfigError(Exception):
    pass


@dataclass
class PipelineConfig:
    # input paths
    articles: Optional[str] = None
    ontology: Optional[str] = None
    meta_topic_map: Optional[str] = None
    gold: Optional[str] = None
    cassette: Optional[str] = None
    out_dir: str = "out"
    # provider endpoints; mock: URLs select the deterministic offline providers
    binary_url: str = "mock:"
    stance_url: str = "mock:"
    embed_url: str = "mock:"
    ner_url: str = "mock:"
    # thresholds and window geometry
    teacher_keep: float = 0.7
    binary_gate: float = 0.7
    stance_gate: float = 0.7
    similarity_threshold: float = 0.40
    horizon: int = 15
    window_lengths: Tuple[int, ...] = (1, 2, 3, 4, 5)
    ner_score: float = 0.5
    calibration_fraction: float = 0.25
    holdout_fraction: float = 0.10
    classify_radius: int = 3
    embed_radius: int = 1
    # execution
    seed: Optional[int] = None
    threads: int = 1
    lenient: bool = False
    serve_addr: str = "127.0.0.1:8310"

    def validate(self) -> None:
        for name in ("teacher_keep", "binary_gate", "stance_gate",
                     "similarity_threshold", "ner_score",
                     "calibration_fraction", "holdout_fraction"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ConfigError(f"{name} must be in [0, 1], got {value}")
        if self.horizon < 1:
            raise ConfigError("horizon must be >= 1")
        if not self.window_lengths or any(w < 1 for w in self.window_lengths):
            raise ConfigError("window_lengths must be positive")
        if max(self.window_lengths) > self.horizon:
            raise ConfigError("window lengths cannot exceed the horizon")
        if self.classify_radius < 0 or self.embed_radius < 0:
            raise ConfigError("context radii must be >= 0")
        if self.threads < 1:
            raise ConfigError("threads must be >= 1")


_BOOL_FIELDS = {"lenient"}
_INT_FIELDS = {"horizon", "classify_radius", "embed_radius", "seed", "threads"}
_FLOAT_FIELDS = {
    "teacher_keep", "binary_gate", "stance_gate", "similarity_threshold",
    "ner_score", "calibration_fraction", "holdout_fraction",
}


def _coerce(name: str, raw: str):
    raw = raw.strip()
    try:
        if name in _BOOL_FIELDS:
            if raw.lower() in ("true", "1", "yes"):
                return True
            if raw.lower() in ("false", "0", "no"):
                return False
            raise ValueError(raw)
        if name in _INT_FIELDS:
            return int(raw)
        if name in _FLOAT_FIELDS:
            return float(raw)
        if name == "window_lengths":
            return tuple(int(p) for p in raw.replace(",", " ").split())
    except ValueError as exc:
        raise ConfigError(f"bad value for {name}: {raw!r}") from exc
    return raw


def load_config(path: Optional[str] = None, env=None, **overrides) -> PipelineConfig:
    """Build a PipelineConfig from an optional key = value file, QS_ env
    variables, and keyword overrides, in increasing precedence."""
    env = os.environ if env is None else env
    known = {f.name for f in fields(PipelineConfig)}
    cfg = PipelineConfig()
    if path is not None:
        try:
            with open(path, encoding="utf-8") as fh:
                lines = fh.readlines()
        except OSError as exc:
            raise ConfigError(f"cannot read config file {path}: {exc}") from exc
        for lineno, line in enumerate(lines, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected key = value")
            key, _, value = line.partition("=")
            key = key.strip()
            if key not in known:
                raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
            setattr(cfg, key, _coerce(key, value))
    for key in known:
        env_key = "QS_" + key.upper()
        if env_key in env:
            setattr(cfg, key, _coerce(key, env[env_key]))
    for key, value in overrides.items():
        if key not in known:
            raise ConfigError(f"unknown config override {key!r}")
        if value is not None:
            setattr(cfg, key, value)
    cfg.validate()
    return cfg
