"""Exception types shared across the package."""


class MeshError(ValueError):
    """Mesh construction or validation failed."""


class MshParseError(MeshError):
    """A .msh file could not be parsed."""


class TriangulationError(MeshError):
    """Point placement or constraint recovery failed during meshing."""


class SolveError(RuntimeError):
    """Linear solve did not converge or the problem is ill posed."""


class TraceError(ValueError):
    """Tagged facets do not form a usable boundary chain."""


class ConfigError(ValueError):
    """Experiment configuration is malformed or inconsistent."""
