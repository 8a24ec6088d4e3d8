import numpy as np
from sklearn.utils.validation import check_array

from .graph import WeightedDigraph, laplacian


def check_square(X, name="X", dtype="numeric"):
    X = check_array(X, dtype=dtype, ensure_2d=True, ensure_all_finite=True,
                    ensure_min_samples=1, ensure_min_features=1, input_name=name)
    if X.shape[0] != X.shape[1]:
        raise ValueError(f"{name} must be square, got shape {X.shape}")
    return X


def check_laplacian_input(X, tol_scale=1e-9):
    """Accept a :class:`WeightedDigraph` or a zero-row-sum square matrix."""
    if isinstance(X, WeightedDigraph):
        return laplacian(X)
    X = check_square(X, "laplacian", dtype=np.float64)
    resid = float(np.max(np.abs(X.sum(axis=1))))
    if resid > tol_scale * (1.0 + np.linalg.norm(X)):
        raise ValueError(f"rows of the Laplacian must sum to zero (max |row sum| = {resid:.3e})")
    return X


def check_stacked_states(X, n_agents):
    """Rows of stacked agent states ``[x_1; ...; x_N]``; complex input allowed."""
    X = np.asarray(X)
    if X.ndim == 1:
        X = X[None, :]
    if np.iscomplexobj(X):
        if X.ndim != 2 or not np.all(np.isfinite(X)):
            raise ValueError("states must be a finite 2-D array")
        X = X.astype(np.complex128)
    else:
        X = check_array(X, dtype=np.float64, ensure_all_finite=True, input_name="states")
    if X.shape[1] % n_agents:
        raise ValueError(
            f"state width {X.shape[1]} is not a multiple of the agent count {n_agents}"
        )
    return X, X.shape[1] // n_agents
