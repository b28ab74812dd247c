"""Numerical checks of Pohozaev-type identities and nonexistence thresholds
for p-Laplacian Dirichlet problems on planar annular sectors."""

__version__ = "0.1.0"
