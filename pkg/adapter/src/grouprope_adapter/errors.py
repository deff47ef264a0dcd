class AdapterError(ValueError):
    """Invalid configuration or unsupported model for position remapping."""

    def __init__(self, kind: str, detail: str):
        self.kind = kind
        self.detail = detail
        super().__init__(f"{kind}: {detail}")
