"""Pure-NumPy implementations of the hot kernels."""
import numpy as np


def solve_batched(a, b):
    """Solve ``a[i] @ x[i] = b[i]`` for a stack of small complex systems.

    ``a`` has shape ``(n, m, m)`` and ``b`` shape ``(n, m, r)``.  Raises
    ``numpy.linalg.LinAlgError`` on an exactly singular system.
    """
    return np.linalg.solve(np.asarray(a, dtype=complex), np.asarray(b, dtype=complex))
