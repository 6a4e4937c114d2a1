"""Galton-Watson trees conditioned on their size, their codings, and the
stable continuum random tree they converge to.

Modules: ``trees`` (codings), ``paths`` (discrete path calculus),
``offspring`` (laws and walk tables), ``sampler`` (conditioned trees),
``levy`` (stable paths and estimators), ``marginals`` (reduced trees and
limit marginals), ``oracle`` (exact enumeration), ``study``/``cli``.
"""
from .offspring import geometric_offspring, parse_model, stable_offspring, table_offspring
from .rng import make_rng
from .sampler import sample_conditioned_tree
from .trees import OrderedTree, contour_process, height_process, lukasiewicz_walk

__version__ = "0.1.0"
