"""Kernel dispatch: the compiled extension when importable, else NumPy.

``BACKEND`` is ``"compiled"`` or ``"python"``.  Both implementations stay
importable as ``compiled_solve_batched`` (``None`` when not built) and
``python_solve_batched`` for testing and benchmarking.
"""
from ._pykernels import solve_batched as python_solve_batched

try:
    from ._ckernels import solve_batched as compiled_solve_batched
except ImportError:  # extension not built
    compiled_solve_batched = None

if compiled_solve_batched is not None:
    solve_batched = compiled_solve_batched
    BACKEND = "compiled"
else:
    solve_batched = python_solve_batched
    BACKEND = "python"

__all__ = ["solve_batched", "BACKEND", "python_solve_batched", "compiled_solve_batched"]
