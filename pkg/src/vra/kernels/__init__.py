"""Local-search kernels: compiled when available, pure Python otherwise.

Set ``VRA_PURE_PYTHON=1`` to force the fallback.  ``BACKEND`` names the
implementation actually in use.
"""

import os

from . import _pykernels
from ._pykernels import (
    EXCHANGE,
    MOVE_NONE,
    MOVE_REVERSE,
    MOVE_SEGMENT,
    MOVE_SEGMENT_REVERSED,
    MOVE_SWAP,
    OR_OPT,
    RELOCATE,
    TWO_OPT,
)

_compiled = None
if os.environ.get("VRA_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _ckernels as _compiled
    except ImportError:
        _compiled = None

if _compiled is not None:
    best_move = _compiled.best_move
    tour_cost = _compiled.tour_cost
    BACKEND = "cython"
else:
    best_move = _pykernels.best_move
    tour_cost = _pykernels.tour_cost
    BACKEND = "python"

ALL_MOVES = TWO_OPT | OR_OPT | RELOCATE | EXCHANGE
NEIGHBORHOOD_FLAGS = {"two_opt": TWO_OPT, "or_opt": OR_OPT, "relocate": RELOCATE, "exchange": EXCHANGE}


def apply_move(tour: list, move) -> None:
    """Apply a move returned by ``best_move`` to ``tour`` in place."""
    kind, i, j, k, _ = move
    if kind == MOVE_REVERSE:
        tour[i:j + 1] = tour[i:j + 1][::-1]
    elif kind in (MOVE_SEGMENT, MOVE_SEGMENT_REVERSED):
        seg = tour[i:i + j]
        if kind == MOVE_SEGMENT_REVERSED:
            seg.reverse()
        if k < i:
            tour[k + 1:i + j] = seg + tour[k + 1:i]
        else:
            tour[i:k + 1] = tour[i + j:k + 1] + seg
    elif kind == MOVE_SWAP:
        tour[i], tour[j] = tour[j], tour[i]
