"""Application configuration: backend endpoint, model profiles, pipeline defaults.

Config is TOML with environment-variable overrides for the endpoint and
credentials (``LONGSUMM_BASE_URL``, ``LONGSUMM_AUTH_TOKEN``). Profiles for
the standard model fleet are built in and can be overridden or extended from
the config file.
"""

from __future__ import annotations

import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

from longsumm.backends.profiles import ModelProfile

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

__all__ = ["AppConfig", "default_profiles", "load_config"]


def default_profiles() -> dict[str, ModelProfile]:
    """Built-in fleet: context lengths of the usual suspects.

    Extractive encoders: roberta 512, longformer 4096, legalbert 512,
    lexlm 512, lexlm-longformer 4096. Abstractive: bart 1024, t5 512,
    longt5 16384, pegasus 1024, pegasusx 16384 (encoder-decoder) and
    llama3 8192 (decoder-only, 1500 tokens reserved for generation).
    """
    extractive = {
        "roberta": 512,
        "longformer": 4096,
        "legalbert": 512,
        "lexlm": 512,
        "lexlm-longformer": 4096,
    }
    abstractive = {
        "bart": 1024,
        "t5": 512,
        "longt5": 16384,
        "pegasus": 1024,
        "pegasusx": 16384,
    }
    profiles: dict[str, ModelProfile] = {}
    for model_id, context in extractive.items():
        profiles[model_id] = ModelProfile(
            model_id, "extractive", context, "encoder", model_id
        )
    for model_id, context in abstractive.items():
        profiles[model_id] = ModelProfile(
            model_id, "abstractive", context, "encoder-decoder", model_id
        )
    profiles["llama3"] = ModelProfile(
        "llama3", "abstractive", 8192, "decoder-only", "llama3",
        reserved_generation_tokens=1500,
    )
    return profiles


@dataclass
class AppConfig:
    base_url: str | None = None
    timeout: float = 30.0
    auth_token: str | None = None
    profiles: dict[str, ModelProfile] = field(default_factory=default_profiles)
    strategy_kind: str = "fixed"
    fixed_ratio: float = 0.4
    seed: int = 42
    truncation_policy: str = "drop-trailing-sentences"
    max_new_tokens: int = 1500

    def profile(self, model_id: str) -> ModelProfile:
        profile = self.profiles.get(model_id)
        if profile is None:
            known = ", ".join(sorted(self.profiles))
            raise KeyError(f"no profile named {model_id!r} (known: {known})")
        return profile


def load_config(path: str | Path | None = None) -> AppConfig:
    """Load TOML config, then apply environment overrides."""
    config = AppConfig()
    if path is not None:
        with Path(path).open("rb") as handle:
            data = tomllib.load(handle)
        backend = data.get("backend", {})
        config.base_url = backend.get("base_url", config.base_url)
        config.timeout = float(backend.get("timeout", config.timeout))
        config.auth_token = backend.get("auth_token", config.auth_token)
        defaults = data.get("pipeline", {})
        config.strategy_kind = defaults.get("strategy", config.strategy_kind)
        config.fixed_ratio = float(defaults.get("fixed_ratio", config.fixed_ratio))
        config.seed = int(defaults.get("seed", config.seed))
        config.truncation_policy = defaults.get(
            "truncation_policy", config.truncation_policy
        )
        config.max_new_tokens = int(defaults.get("max_new_tokens", config.max_new_tokens))
        for entry in data.get("profiles", []):
            profile = ModelProfile.from_dict(entry)
            config.profiles[profile.model_id] = profile
    env_url = os.environ.get("LONGSUMM_BASE_URL")
    if env_url:
        config.base_url = env_url
    env_token = os.environ.get("LONGSUMM_AUTH_TOKEN")
    if env_token:
        config.auth_token = env_token
    return config
