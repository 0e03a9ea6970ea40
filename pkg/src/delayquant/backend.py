"""Stepping-core selection: compiled extension if available, numpy fallback.

Set DELAYQUANT_BACKEND=python (or =compiled) to force a choice; forcing
the compiled core when it is not built raises at import time.
"""

from __future__ import annotations

import os

from . import _pycore

_requested = os.environ.get("DELAYQUANT_BACKEND", "").strip().lower()

_fastcore = None
if _requested != "python":
    try:
        from . import _fastcore
    except ImportError:
        _fastcore = None

if _requested == "compiled" and _fastcore is None:
    raise ImportError(
        "DELAYQUANT_BACKEND=compiled but the _fastcore extension is not built; "
        "reinstall with a C compiler available"
    )

if _fastcore is not None:
    StepperCore = _fastcore.StepperCore
    BACKEND = "compiled"
else:
    StepperCore = _pycore.StepperCore
    BACKEND = "python"

MODE_ZERO = 0
MODE_EXACT = 1
MODE_STATE_QUANT = 2
MODE_INPUT_QUANT = 3
MODE_EXTERNAL = 4

DETECT_NONE = 0
DETECT_QUANTIZED = 1
DETECT_EXACT = 2
