"""Nystrom boundary integral solvers for the obstacle limits on smooth 2D curves."""
