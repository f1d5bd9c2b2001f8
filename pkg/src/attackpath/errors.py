"""Error type shared by every module.

Each error carries a machine-readable ``code`` (e.g. ``"UNKNOWN_HOST"``) so
callers and the CLI can branch on it without parsing messages.
"""

from __future__ import annotations


class AttackPathError(Exception):
    """Base error with a stable string code."""

    def __init__(self, code: str, message: str = ""):
        super().__init__(f"{code}: {message}" if message else code)
        self.code = code
        self.message = message


class SearchAborted(AttackPathError):
    """Raised when the environment fails outside the exploit-failure model.

    ``partial`` holds the search result accumulated before the abort.
    """

    def __init__(self, message: str, partial):
        super().__init__("ENV_ERROR", message)
        self.partial = partial
