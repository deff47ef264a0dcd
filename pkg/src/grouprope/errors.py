"""Domain errors with stable, machine-readable kinds.

The service layer maps these to HTTP 400 responses and the CLI prints them
as one-line ``error: <kind>: <detail>`` messages, so ``kind`` strings are
part of the public interface and must stay stable.
"""


class RemapError(ValueError):
    """Invalid input or configuration for a position-remapping operation."""

    def __init__(self, kind: str, detail: str):
        self.kind = kind
        self.detail = detail
        super().__init__(f"{kind}: {detail}")
