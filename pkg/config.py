"""
Configuration for the Whitehead lab.

Every tunable is read from a WLAB_* environment variable (a local .env file is
honoured) and can be overridden per run through RunConfig / the command line.
"""

import hashlib
import json
import logging
import os
from dataclasses import asdict, dataclass, replace
from typing import Optional

from dotenv import load_dotenv

load_dotenv()

LOG_FORMAT = "[%(name)s] %(message)s"

DEFAULT_GROUP = os.getenv("WLAB_GROUP", "groups/z2z2.grp")
DEFAULT_NORM = os.getenv("WLAB_NORM", "w0")
DEFAULT_SUITE = os.getenv("WLAB_SUITE", "all")
DEFAULT_OUT = os.getenv("WLAB_OUT", "wlab_out")
DEFAULT_SEED = int(os.getenv("WLAB_SEED", "0"))

BALL_CAP = int(os.getenv("WLAB_CAP_BALL", "1000000"))
ORDER_CAP = int(os.getenv("WLAB_CAP_ORDER", "24"))
CUTOFF = int(os.getenv("WLAB_CUTOFF", "64"))
CUTOFF_CAP = int(os.getenv("WLAB_CUTOFF_CAP", "4096"))
AUT_CAP = int(os.getenv("WLAB_CAP_AUT", "16"))
ORBIT_CAP = int(os.getenv("WLAB_CAP_ORBIT", "100000"))
STABILIZER_CAP = int(os.getenv("WLAB_CAP_STABILIZER", "5000"))
BLOCK_CUTOFF = int(os.getenv("WLAB_BLOCK_CUTOFF", "12"))

# Largest Cayley table accepted from a group-spec file
MAX_TABLE_ORDER = 64
# Largest label count for pointed-tree enumeration
MAX_TREE_LABELS = 6

NORMS = ("w0", "zg")

_logging_ready = False


def setup_logging(level: Optional[str] = None) -> None:
    """Configure the root handler once; later calls only adjust the level."""
    global _logging_ready
    level = (level or os.getenv("WLAB_LOG_LEVEL", "INFO")).upper()
    if not _logging_ready:
        logging.basicConfig(format=LOG_FORMAT, level=level)
        _logging_ready = True
    logging.getLogger().setLevel(level)


def get_logger(name: str) -> logging.Logger:
    return logging.getLogger(name)


@dataclass(frozen=True)
class RunConfig:
    """One run of the command line: group, radius, caps, seed and output location."""

    group: str = DEFAULT_GROUP
    radius: Optional[int] = None
    norm: str = DEFAULT_NORM
    cap_ball: int = BALL_CAP
    cap_order: int = ORDER_CAP
    cutoff: int = CUTOFF
    seed: int = DEFAULT_SEED
    out: str = DEFAULT_OUT
    suite: str = DEFAULT_SUITE

    def __post_init__(self):
        if self.norm not in NORMS:
            raise ValueError(f"norm must be one of {NORMS}, got {self.norm!r}")
        for name in ("cap_ball", "cap_order", "cutoff"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.radius is not None and self.radius < 0:
            raise ValueError("radius must be non-negative")

    def config_hash(self) -> str:
        payload = json.dumps(asdict(self), sort_keys=True)
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()

    def to_dict(self) -> dict:
        data = asdict(self)
        data["config_hash"] = self.config_hash()
        return data


def load_run_config(**overrides) -> RunConfig:
    """Environment defaults, then any non-None keyword overrides."""
    radius = os.getenv("WLAB_RADIUS")
    config = RunConfig(radius=int(radius) if radius else None)
    changes = {key: value for key, value in overrides.items() if value is not None}
    return replace(config, **changes)
