"""NumPy fallback for the hot kernels (used when the compiled extension is absent)."""

import numpy as np

BACKEND_NAME = "python"


def sandwich(a: np.ndarray, x: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Triple product a @ x @ b, the separable-transform workhorse."""
    return np.asarray(a @ x @ b, dtype=np.float64)
