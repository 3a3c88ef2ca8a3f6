"""Pairwise PageRank comparison from local entries of the Google matrix."""
import os

if "NUMBA_THREADING_LAYER" not in os.environ:
    # the bundled TBB is too old for numba; the portable layers are enough here
    import numba

    numba.config.THREADING_LAYER = "workqueue"

__version__ = "0.1.0"
