class PlotError(Exception):
    """Base class for rendering errors."""


class SchemaMismatch(PlotError):
    """Artifact parses as JSON but does not fit the requested plot kind."""


class MissingField(PlotError):
    def __init__(self, field: str):
        self.field = field
        super().__init__(f"artifact is missing required field {field!r}")
