"""Correlators of characteristic polynomials for non-Hermitian random matrices."""
