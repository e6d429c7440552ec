"""Common exception base for the package."""


class EssayScoreError(Exception):
    """Base class for all errors raised by essayscore modules."""
