"""Numerical toolkit for the boundary-momentum isoperimetric ratio of convex bodies."""
