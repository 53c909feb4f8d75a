"""Provider client for optional LLM-backed refinement, routing, and judging.

Deterministic mode is the default whenever no endpoint is configured. Remote
mode POSTs a chat-completions-style payload and insists on a single JSON
object reply that passes the caller's schema check; anything else (transport
failure, bad JSON, schema violation) returns None after bounded retries so
every caller can fall back to its deterministic path.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass

import requests

ENDPOINT_ENV_VAR = "CONTEXTCOV_PROVIDER_URL"
API_KEY_ENV_VAR = "CONTEXTCOV_API_KEY"
DEFAULT_MODEL = "deterministic"


@dataclass
class ProviderConfig:
    mode: str = "deterministic"  # "deterministic" | "remote"
    endpoint: str = ""
    model: str = DEFAULT_MODEL
    timeout: float = 30.0
    max_retries: int = 1
    api_key: str = ""

    @property
    def is_remote(self) -> bool:
        return self.mode == "remote" and bool(self.endpoint)


def config_from_env(
    endpoint: str | None = None, model: str | None = None
) -> ProviderConfig:
    endpoint = endpoint or os.environ.get(ENDPOINT_ENV_VAR, "")
    api_key = os.environ.get(API_KEY_ENV_VAR, "")
    if not endpoint:
        return ProviderConfig()
    return ProviderConfig(
        mode="remote",
        endpoint=endpoint,
        model=model or "default",
        api_key=api_key,
    )


def complete_json(
    cfg: ProviderConfig,
    system_prompt: str,
    user_payload: str,
    validate,
) -> dict | None:
    """One structured completion. validate(obj) -> bool gates the reply."""
    if not cfg.is_remote:
        return None
    headers = {"Content-Type": "application/json"}
    if cfg.api_key:
        headers["Authorization"] = f"Bearer {cfg.api_key}"
    body = {
        "model": cfg.model,
        "messages": [
            {"role": "system", "content": system_prompt},
            {"role": "user", "content": user_payload},
        ],
    }
    for _ in range(cfg.max_retries + 1):
        try:
            resp = requests.post(
                cfg.endpoint, headers=headers, json=body, timeout=cfg.timeout
            )
            resp.raise_for_status()
            content = resp.json()["choices"][0]["message"]["content"]
            obj = json.loads(content)
        except Exception:
            continue
        if isinstance(obj, dict) and validate(obj):
            return obj
    return None
