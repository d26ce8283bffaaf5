"""Kernel selection: compiled extension when importable, pure Python otherwise.

Both backends implement the same operations in the same floating-point
order, so they return bit-identical results; only speed differs.  Set
``BELLMETER_PURE_PYTHON=1`` in the environment (before import) to force
the fallback, e.g. to benchmark one against the other.
"""

from __future__ import annotations

import os

from . import fallback

_compiled = None
if os.environ.get("BELLMETER_PURE_PYTHON") != "1":
    try:
        from . import _core as _compiled  # type: ignore[no-redef]
    except ImportError:
        _compiled = None

BACKEND = "compiled" if _compiled is not None else "python"

if _compiled is not None:
    simplex_pivots = _compiled.simplex_pivots
    simulate_trials = _compiled.simulate_trials
else:
    simplex_pivots = fallback.simplex_pivots
    simulate_trials = fallback.simulate_trials
