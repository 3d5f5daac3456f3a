"""Numba switch.

Kernels in :mod:`tramor.kernels` are compiled with numba unless the
environment variable ``TRAMOR_DISABLE_NUMBA`` is set to a truthy value or
numba cannot be imported, in which case the pure-numpy implementations are
used instead.
"""

import logging
import os

logger = logging.getLogger(__name__)

_flag = os.environ.get("TRAMOR_DISABLE_NUMBA", "").strip().lower()
_disabled = _flag not in ("", "0", "false", "no")

try:
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a hard dependency in practice
    numba = None
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and not _disabled

if HAVE_NUMBA:
    njit = numba.njit
else:  # pragma: no cover

    def njit(pyfunc=None, **kwargs):
        def wrap(func):
            return func

        return wrap if pyfunc is None else wrap(pyfunc)


logger.debug("numba kernels %s", "enabled" if USE_NUMBA else "disabled")
