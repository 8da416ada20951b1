"""Run configuration and the flat `key = value` config-file format."""

from __future__ import annotations

import dataclasses
import typing
from dataclasses import dataclass
from pathlib import Path

from .data.types import WaterwayConfig
from .hashutil import config_fingerprint


@dataclass
class TrainConfig:
    # optimization
    lr: float = 1e-4
    epochs: int = 50
    batch_size: int = 16
    scheduler_factor: float = 0.5
    scheduler_patience: int = 10
    scheduler_threshold: float = 1e-4  # relative improvement below this is a plateau
    seed: int = 0
    kl_weight: float = 0.01
    # windows and modes
    t_obs: int = 8
    t_fut: int = 12
    modes: int = 5
    # model dimensions
    d_model: int = 32
    heads: int = 2
    latent_dim: int = 16
    stem_channels: tuple[int, int, int] = (8, 16, 16)
    roi_size: int = 7
    bbox_dim: int = 64
    raster_size: int = 64
    decay: float = 0.1
    # prototype bank and refinement
    bank_clusters: int = 16
    offset_scale: float = 0.5
    offset_hidden: int = 64
    use_bank: bool = True
    fusion_direction: str = "prior"  # gate weights the refined prior; "base" mirrors it
    # modality ablations
    use_cctv: bool = True
    use_scene: bool = True

    def validate(self) -> None:
        if self.d_model % 2 != 0 or self.d_model % self.heads != 0:
            raise ValueError(f"d_model={self.d_model} must be even and divisible by heads={self.heads}")
        for name in ("lr", "epochs", "batch_size", "t_obs", "t_fut", "modes", "latent_dim"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.scheduler_patience < 1:
            raise ValueError("scheduler_patience must be >= 1")
        if self.fusion_direction not in ("prior", "base"):
            raise ValueError(f"fusion_direction must be 'prior' or 'base', got '{self.fusion_direction}'")


# fields that define the parameter layout and forward semantics; their
# fingerprint is stored in checkpoints and re-checked on load
ARCHITECTURE_FIELDS = (
    "t_obs",
    "t_fut",
    "modes",
    "d_model",
    "heads",
    "latent_dim",
    "stem_channels",
    "roi_size",
    "bbox_dim",
    "raster_size",
    "decay",
    "offset_scale",
    "offset_hidden",
    "fusion_direction",
    "use_cctv",
    "use_scene",
)


def architecture_text(cfg: TrainConfig) -> str:
    lines = [f"{name} = {getattr(cfg, name)!r}" for name in ARCHITECTURE_FIELDS]
    return "\n".join(lines) + "\n"


def architecture_hash(cfg: TrainConfig) -> int:
    return config_fingerprint(architecture_text(cfg))


def parse_flat(text: str) -> dict[str, str]:
    """Parse `key = value` lines; '#' starts a comment, blanks ignored."""
    out: dict[str, str] = {}
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"config line {line_no}: expected 'key = value', got {raw!r}")
        key, value = line.split("=", 1)
        out[key.strip()] = value.strip()
    return out


def _coerce(value: str, target_type):
    origin = typing.get_origin(target_type)
    if origin in (tuple, list):
        args = typing.get_args(target_type)
        elem = args[0] if args else str
        parts = [v.strip() for v in value.split(",") if v.strip()]
        return tuple(_coerce(v, elem) for v in parts)
    if target_type is bool:
        low = value.lower()
        if low in ("true", "1", "yes", "on"):
            return True
        if low in ("false", "0", "no", "off"):
            return False
        raise ValueError(f"cannot parse boolean from {value!r}")
    if target_type is int:
        return int(value)
    if target_type is float:
        return float(value)
    return value


def config_from_mapping(cls, mapping: dict[str, str]):
    hints = typing.get_type_hints(cls)
    known = {f.name for f in dataclasses.fields(cls)}
    unknown = set(mapping) - known
    if unknown:
        raise ValueError(f"unknown config keys for {cls.__name__}: {sorted(unknown)}")
    kwargs = {key: _coerce(value, hints[key]) for key, value in mapping.items()}
    return cls(**kwargs)


def load_train_config(path: str | Path | None) -> TrainConfig:
    if path is None:
        cfg = TrainConfig()
    else:
        cfg = config_from_mapping(TrainConfig, parse_flat(Path(path).read_text()))
    cfg.validate()
    return cfg


def load_waterway_config(path: str | Path | None) -> WaterwayConfig:
    if path is None:
        cfg = WaterwayConfig()
    else:
        cfg = config_from_mapping(WaterwayConfig, parse_flat(Path(path).read_text()))
    cfg.validate()
    return cfg
