"""numba's ``njit``, or a no-op stand-in when numba is unavailable."""

from __future__ import annotations

try:
    from numba import njit
except ImportError:  # pragma: no cover - exercised only without numba

    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]
        return lambda f: f


__all__ = ["njit"]
