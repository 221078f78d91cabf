"""Pick the compiled kernels when available, the numpy ones otherwise.

Set ``BLTP_PURE_PYTHON=1`` to force the numpy fallback.
"""

import os

if os.environ.get("BLTP_PURE_PYTHON", "") not in ("", "0"):
    from . import _pycore as core
else:
    try:
        from . import _core as core
    except ImportError:  # extension not built
        from . import _pycore as core

ratio_array = core.ratio_array
history_sums = core.history_sums
BACKEND = core.NAME
