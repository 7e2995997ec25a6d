"""ocstudio: original-character chat sessions with inspectable reasoning.

The package turns a character profile into a formative prompt, drives
character turns against a text-completion provider, parses the six-field
reasoning trajectory out of every reply, and keeps append-only session and
revision logs that replay byte-for-byte.
"""

from .config import AppConfig, load_config, make_provider
from .engine import Engine, TurnOutcome, transcript_view
from .errors import (
    BudgetError,
    ConfigError,
    FormatError,
    NotFoundError,
    OcstudioError,
    ProviderError,
    ScriptMismatch,
    StorageError,
    TransportError,
    TurnFailed,
    ValidationError,
)
from .profile import (
    DEFAULT_SPEAKER_CONTEXT,
    ActionSpec,
    CharacterProfile,
    ConfigRevision,
    ProfileStore,
    default_actions,
)
from .prompting import TEMPLATE_VERSION, PromptBundle, render_prompt
from .provider import (
    HttpChatProvider,
    Provider,
    ProviderReply,
    ProviderRequest,
    ScriptedProvider,
    estimate_tokens,
)
from .session import (
    ConversationEntry,
    ContextChange,
    Session,
    SessionStore,
)
from .trajectory import (
    ParseError,
    ParseErrorKind,
    Trajectory,
    parse_trajectory,
    serialize_trajectory,
)

__version__ = "0.1.0"

__all__ = [
    "ActionSpec",
    "AppConfig",
    "BudgetError",
    "CharacterProfile",
    "ConfigError",
    "ConfigRevision",
    "ContextChange",
    "ConversationEntry",
    "DEFAULT_SPEAKER_CONTEXT",
    "Engine",
    "FormatError",
    "HttpChatProvider",
    "NotFoundError",
    "OcstudioError",
    "ParseError",
    "ParseErrorKind",
    "ProfileStore",
    "PromptBundle",
    "Provider",
    "ProviderError",
    "ProviderReply",
    "ProviderRequest",
    "ScriptMismatch",
    "ScriptedProvider",
    "Session",
    "SessionStore",
    "StorageError",
    "TEMPLATE_VERSION",
    "Trajectory",
    "TransportError",
    "TurnFailed",
    "TurnOutcome",
    "ValidationError",
    "__version__",
    "default_actions",
    "estimate_tokens",
    "load_config",
    "make_provider",
    "parse_trajectory",
    "render_prompt",
    "serialize_trajectory",
    "transcript_view",
]
