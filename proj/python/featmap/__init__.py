"""Feature-mapping structural optimization: Python access to the featmap library."""

from ._featmap import (
    AnalysisError,
    NotDifferentiableError,
    ValidationError,
    __version__,
    bench,
    bench_names,
    bench_presets,
    density,
    evaluate,
    heaviside,
    run,
)

__all__ = [
    "AnalysisError",
    "NotDifferentiableError",
    "ValidationError",
    "__version__",
    "bench",
    "bench_names",
    "bench_presets",
    "density",
    "evaluate",
    "heaviside",
    "run",
]
