"""TOML configuration for the service and CLI.

A config file has up to four tables, all optional::

    [server]
    listen = "127.0.0.1:8350"

    [storage]
    root = "./ocstudio-data"

    [provider]
    type = "http"                 # or "scripted"
    base_url = "https://llm.internal.example"
    model = "chat-large"
    credential_env = "OCSTUDIO_API_KEY"
    timeout_seconds = 30.0

    [defaults]
    window_size = 5
    max_retries = 2
    temperature = 0.7
    max_tokens = 1024

A scripted provider (`type = "scripted"`) takes `script = ["...", ...]`
instead of the HTTP fields and is intended for tests and offline demos.
Unknown keys and malformed values raise :class:`ConfigError` rather than
being silently ignored.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass, field
from pathlib import Path

if sys.version_info >= (3, 11):  # pragma: no cover - version-dependent import
    import tomllib
else:  # pragma: no cover - version-dependent import
    import tomli as tomllib

from .errors import ConfigError
from .provider import (
    DEFAULT_CREDENTIAL_ENV,
    DEFAULT_MAX_TOKENS,
    DEFAULT_TEMPERATURE,
    HttpChatProvider,
    Provider,
    ScriptedProvider,
)
from .session import DEFAULT_WINDOW_SIZE

DEFAULT_LISTEN = "127.0.0.1:8350"
DEFAULT_STORAGE_ROOT = "./ocstudio-data"
DEFAULT_MAX_RETRIES = 2
DEFAULT_TIMEOUT_SECONDS = 30.0


@dataclass(frozen=True)
class ServerConfig:
    host: str = "127.0.0.1"
    port: int = 8350


@dataclass(frozen=True)
class StorageConfig:
    root: Path = Path(DEFAULT_STORAGE_ROOT)

    @property
    def profiles_root(self) -> Path:
        return self.root / "profiles"

    @property
    def sessions_root(self) -> Path:
        return self.root / "sessions"


@dataclass(frozen=True)
class ProviderConfig:
    type: str = "scripted"
    base_url: str = ""
    model: str = "mock-model"
    credential_env: str = DEFAULT_CREDENTIAL_ENV
    timeout_seconds: float = DEFAULT_TIMEOUT_SECONDS
    script: tuple[str, ...] = ()


@dataclass(frozen=True)
class Defaults:
    window_size: int = DEFAULT_WINDOW_SIZE
    max_retries: int = DEFAULT_MAX_RETRIES
    temperature: float = DEFAULT_TEMPERATURE
    max_tokens: int = DEFAULT_MAX_TOKENS


@dataclass(frozen=True)
class AppConfig:
    server: ServerConfig = field(default_factory=ServerConfig)
    storage: StorageConfig = field(default_factory=StorageConfig)
    provider: ProviderConfig = field(default_factory=ProviderConfig)
    defaults: Defaults = field(default_factory=Defaults)


def _reject_unknown(table: dict, allowed: set[str], where: str) -> None:
    unknown = sorted(set(table) - allowed)
    if unknown:
        raise ConfigError(f"unknown key(s) in [{where}]: {', '.join(unknown)}")


def _typed(table: dict, key: str, kind, where: str, default):
    value = table.get(key, default)
    if kind is float and isinstance(value, int) and not isinstance(value, bool):
        value = float(value)
    if not isinstance(value, kind) or isinstance(value, bool) and kind is not bool:
        raise ConfigError(f"[{where}] {key} must be of type {kind.__name__}")
    return value


def parse_listen(listen: str) -> tuple[str, int]:
    """Split a "host:port" listen string, validating the port."""

    text = listen.strip()
    host, sep, port_text = text.rpartition(":")
    if not sep or not host:
        raise ConfigError(f"listen address must be host:port, got {listen!r}")
    try:
        port = int(port_text)
    except ValueError:
        raise ConfigError(f"listen port must be an integer, got {port_text!r}") from None
    if not 0 < port < 65536:
        raise ConfigError(f"listen port out of range: {port}")
    return host, port


def _parse_server(table: dict) -> ServerConfig:
    _reject_unknown(table, {"listen"}, "server")
    listen = _typed(table, "listen", str, "server", DEFAULT_LISTEN)
    host, port = parse_listen(listen)
    return ServerConfig(host=host, port=port)


def _parse_storage(table: dict) -> StorageConfig:
    _reject_unknown(table, {"root"}, "storage")
    root = _typed(table, "root", str, "storage", DEFAULT_STORAGE_ROOT)
    if not root.strip():
        raise ConfigError("[storage] root must be a nonempty path")
    return StorageConfig(root=Path(root).expanduser())


def _parse_provider(table: dict) -> ProviderConfig:
    allowed = {
        "type",
        "base_url",
        "model",
        "credential_env",
        "timeout_seconds",
        "script",
    }
    _reject_unknown(table, allowed, "provider")
    ptype = _typed(table, "type", str, "provider", "scripted")
    if ptype not in ("http", "scripted"):
        raise ConfigError(f"[provider] type must be 'http' or 'scripted', got {ptype!r}")
    model = _typed(table, "model", str, "provider", "mock-model")
    if ptype == "http":
        if "script" in table:
            raise ConfigError("[provider] script is only valid for type 'scripted'")
        base_url = _typed(table, "base_url", str, "provider", "")
        if not base_url.strip():
            raise ConfigError("[provider] base_url is required for type 'http'")
        credential_env = _typed(
            table, "credential_env", str, "provider", DEFAULT_CREDENTIAL_ENV
        )
        timeout = _typed(
            table, "timeout_seconds", float, "provider", DEFAULT_TIMEOUT_SECONDS
        )
        if timeout <= 0:
            raise ConfigError("[provider] timeout_seconds must be positive")
        return ProviderConfig(
            type="http",
            base_url=base_url,
            model=model,
            credential_env=credential_env,
            timeout_seconds=timeout,
        )
    for key in ("base_url", "credential_env", "timeout_seconds"):
        if key in table:
            raise ConfigError(f"[provider] {key} is only valid for type 'http'")
    script = table.get("script", [])
    if not isinstance(script, list) or not all(isinstance(s, str) for s in script):
        raise ConfigError("[provider] script must be a list of strings")
    return ProviderConfig(type="scripted", model=model, script=tuple(script))


def _parse_defaults(table: dict) -> Defaults:
    allowed = {"window_size", "max_retries", "temperature", "max_tokens"}
    _reject_unknown(table, allowed, "defaults")
    window_size = _typed(table, "window_size", int, "defaults", DEFAULT_WINDOW_SIZE)
    max_retries = _typed(table, "max_retries", int, "defaults", DEFAULT_MAX_RETRIES)
    temperature = _typed(table, "temperature", float, "defaults", DEFAULT_TEMPERATURE)
    max_tokens = _typed(table, "max_tokens", int, "defaults", DEFAULT_MAX_TOKENS)
    if window_size < 0:
        raise ConfigError("[defaults] window_size must be >= 0")
    if max_retries < 0:
        raise ConfigError("[defaults] max_retries must be >= 0")
    if not 0.0 <= temperature <= 2.0:
        raise ConfigError("[defaults] temperature must be within [0, 2]")
    if max_tokens <= 0:
        raise ConfigError("[defaults] max_tokens must be positive")
    return Defaults(
        window_size=window_size,
        max_retries=max_retries,
        temperature=temperature,
        max_tokens=max_tokens,
    )


def parse_config(data: dict) -> AppConfig:
    """Build an :class:`AppConfig` from already-decoded TOML data."""

    if not isinstance(data, dict):
        raise ConfigError("config root must be a table")
    _reject_unknown(data, {"server", "storage", "provider", "defaults"}, "config")
    for name in ("server", "storage", "provider", "defaults"):
        if name in data and not isinstance(data[name], dict):
            raise ConfigError(f"[{name}] must be a table")
    return AppConfig(
        server=_parse_server(data.get("server", {})),
        storage=_parse_storage(data.get("storage", {})),
        provider=_parse_provider(data.get("provider", {})),
        defaults=_parse_defaults(data.get("defaults", {})),
    )


def load_config(path: str | Path | None) -> AppConfig:
    """Load configuration from a TOML file; None yields pure defaults."""

    if path is None:
        return AppConfig()
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    try:
        data = tomllib.loads(raw.decode("utf-8"))
    except (UnicodeDecodeError, tomllib.TOMLDecodeError) as exc:
        raise ConfigError(f"invalid TOML in {path}: {exc}") from exc
    return parse_config(data)


def make_provider(config: ProviderConfig) -> Provider:
    """Instantiate the provider a config describes."""

    if config.type == "http":
        return HttpChatProvider(
            base_url=config.base_url,
            credential_env=config.credential_env,
            timeout_seconds=config.timeout_seconds,
        )
    return ScriptedProvider(config.script)


__all__ = [
    "AppConfig",
    "Defaults",
    "ProviderConfig",
    "ServerConfig",
    "StorageConfig",
    "DEFAULT_LISTEN",
    "DEFAULT_MAX_RETRIES",
    "DEFAULT_STORAGE_ROOT",
    "DEFAULT_TIMEOUT_SECONDS",
    "load_config",
    "make_provider",
    "parse_config",
    "parse_listen",
]
