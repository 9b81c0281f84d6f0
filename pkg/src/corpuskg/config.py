"""Service configuration: defaults, environment variables, validation.

Environment variables: CKG_DATA_DIR, CKG_EMBEDDINGS_FILE, CKG_LLM_ENDPOINT,
CKG_LLM_API_KEY, CKG_LLM_MODEL. CLI flags override the environment.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .convo import LlmConfig
from .errors import ConfigError


@dataclass
class ServiceConfig:
    data_dir: Path = Path("./data")
    port: int = 8000
    field_weights: dict[str, float] = field(default_factory=dict)
    angle_threshold_deg: float = 18.0
    synonym_threshold_deg: float = 25.0
    match_threshold_deg: float = 25.0
    fusion_confidence: float = 0.8
    embed_dimension: int = 64
    embed_seed: int = 1337
    embeddings_file: Optional[Path] = None
    llm: LlmConfig = field(default_factory=LlmConfig)
    ingest_watch_dir: Optional[Path] = None
    fold_interval_s: float = 10.0
    api_token: str = ""  # empty disables auth

    def validate(self) -> "ServiceConfig":
        for name, value in (
            ("angle_threshold_deg", self.angle_threshold_deg),
            ("synonym_threshold_deg", self.synonym_threshold_deg),
            ("match_threshold_deg", self.match_threshold_deg),
        ):
            if not 0.0 <= value <= 180.0:
                raise ConfigError(f"{name} must lie in [0, 180], got {value}")
        if not 0.0 <= self.fusion_confidence <= 1.0:
            raise ConfigError("fusion_confidence must lie in [0, 1]")
        if self.embed_dimension < 1:
            raise ConfigError("embed_dimension must be positive")
        return self

    @classmethod
    def from_env(cls, **overrides) -> "ServiceConfig":
        cfg = cls()
        if os.environ.get("CKG_DATA_DIR"):
            cfg.data_dir = Path(os.environ["CKG_DATA_DIR"])
        if os.environ.get("CKG_EMBEDDINGS_FILE"):
            cfg.embeddings_file = Path(os.environ["CKG_EMBEDDINGS_FILE"])
        llm = LlmConfig()
        if os.environ.get("CKG_LLM_ENDPOINT"):
            llm.endpoint = os.environ["CKG_LLM_ENDPOINT"]
            llm.stub = False
        llm.api_key = os.environ.get("CKG_LLM_API_KEY", "")
        llm.model_name = os.environ.get("CKG_LLM_MODEL", llm.model_name)
        cfg.llm = llm
        cfg.api_token = os.environ.get("CKG_API_TOKEN", "")
        for key, value in overrides.items():
            if value is not None:
                setattr(cfg, key, value)
        return cfg.validate()
