"""Kernel manifolds for nonlinear dimensionality reduction of snapshot data.

States are columns: a snapshot matrix has shape (N, M).
"""

from ._core import (
    KmanError,
    Manifold,
    __version__,
    advdiff,
    error,
    fit,
    generate_dataset,
    load,
    quadratic_feature_map,
    rbf_psi,
    surface_heating,
)

__all__ = [
    "KmanError",
    "Manifold",
    "__version__",
    "advdiff",
    "error",
    "fit",
    "generate_dataset",
    "load",
    "quadratic_feature_map",
    "rbf_psi",
    "surface_heating",
]
