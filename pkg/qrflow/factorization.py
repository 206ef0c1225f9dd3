"""Cholesky factorization of the augmented active Laplacian.

The active Laplacian L = D^T M D is singular, with one null vector per
connected component of the active subgraph. Adding N N^T, where the columns of
N are the normalized component indicators, gives a positive definite matrix
whose inverse composed with P = I - N N^T applies the pseudoinverse of L.

The factor R is upper triangular with R^T R = L + N N^T. When the active set
changes, L + N N^T changes by a handful of rank-1 terms; these are applied to R
with rank-1 updates and downdates instead of refactorizing.

"""

import collections
import dataclasses
import logging
import math

import numpy as np
import scipy.linalg

from . import settings
from .exceptions import FactorizationError
from .graph import active_laplacian_matrix


logger = logging.getLogger(__name__)


ADD_EDGE = "add-edge"
REMOVE_EDGE = "remove-edge"
ADD_COMPONENT = "add-component"
REMOVE_COMPONENT = "remove-component"

_UPDATE_KINDS = {ADD_EDGE, ADD_COMPONENT}


# one rank-1 change of L + NN^T: +xx^T for add-* kinds, -xx^T for remove-* kinds
FactorEvent = collections.namedtuple("FactorEvent", "kind vector")


def is_update(event):
    return event.kind in _UPDATE_KINDS


@dataclasses.dataclass
class CholeskyFactor:
    """An upper-triangular Cholesky factor R of L + N N^T.

    Attributes
    ----------
    R : np.ndarray
        Dense upper-triangular matrix with positive diagonal.
    update_count : int
        Rank-1 events applied since the last full factorization.

    """

    R: np.ndarray
    update_count: int = 0

    @property
    def size(self):
        return self.R.shape[0]

    def copy(self):
        return CholeskyFactor(self.R.copy(), self.update_count)

    def gram(self):
        """The factored matrix R^T R."""
        return self.R.T @ self.R


def augmented_laplacian(graph, mask, labeling):
    """The dense matrix L + N N^T."""
    return active_laplacian_matrix(graph, mask) + labeling.gram()


def factorize(graph, mask, labeling):
    """Factor L + N N^T from scratch.

    Arguments
    ---------
    graph : Graph
    mask : np.ndarray
        Active mask.
    labeling : ComponentLabeling
        The components of the active subgraph.

    Returns
    -------
    CholeskyFactor

    Raises
    ------
    FactorizationError
        If the matrix is not positive definite, which only happens when the
        labeling does not match the mask.

    """
    matrix = augmented_laplacian(graph, mask, labeling)
    try:
        R = scipy.linalg.cholesky(matrix, lower=False, check_finite=False)
    except np.linalg.LinAlgError as exc:
        raise FactorizationError(
            f"L + NN^T is not positive definite; is the labeling stale? ({exc})"
        )
    return CholeskyFactor(R)


def _start(x):
    nonzero = np.flatnonzero(x)
    return nonzero[0] if nonzero.size else None


def rank1_update(factor, x, overwrite=False):
    """Update the factor so that R'^T R' = R^T R + x x^T.

    Each step is a Givens rotation folding one entry of x into a row of R.

    Arguments
    ---------
    factor : CholeskyFactor
    x : np.ndarray
    overwrite : bool
        If True, ``factor`` is modified in place and returned.

    Returns
    -------
    CholeskyFactor

    """
    x = np.array(x, dtype=float)
    start = _start(x)
    if start is None:
        return factor if overwrite else factor.copy()

    result = factor if overwrite else factor.copy()
    R = result.R
    for k in range(start, R.shape[0]):
        xk = x[k]
        if xk == 0.0:
            continue
        rkk = R[k, k]
        r = math.hypot(rkk, xk)
        c = r / rkk
        s = xk / rkk
        R[k, k] = r
        R[k, k + 1:] = (R[k, k + 1:] + s * x[k + 1:]) / c
        x[k + 1:] = c * x[k + 1:] - s * R[k, k + 1:]

    result.update_count += 1
    return result


def rank1_downdate(factor, x, overwrite=False):
    """Downdate the factor so that R'^T R' = R^T R - x x^T.

    Each step is a hyperbolic rotation; a pivot that would become nonpositive
    means R^T R - x x^T is not (numerically) positive definite.

    Arguments
    ---------
    factor : CholeskyFactor
    x : np.ndarray
    overwrite : bool
        If True, ``factor`` is modified in place and returned. On failure an
        in-place factor is left in an unusable state and must be rebuilt.

    Returns
    -------
    CholeskyFactor

    Raises
    ------
    FactorizationError
        If positive definiteness is lost.

    """
    x = np.array(x, dtype=float)
    start = _start(x)
    if start is None:
        return factor if overwrite else factor.copy()

    result = factor if overwrite else factor.copy()
    R = result.R
    for k in range(start, R.shape[0]):
        xk = x[k]
        if xk == 0.0:
            continue
        rkk = R[k, k]
        r_squared = rkk * rkk - xk * xk
        if r_squared <= (settings.DOWNDATE_PIVOT_TOL * rkk) ** 2:
            raise FactorizationError(
                f"Downdate lost positive definiteness at pivot {k}."
            )
        r = math.sqrt(r_squared)
        c = r / rkk
        s = xk / rkk
        R[k, k] = r
        R[k, k + 1:] = (R[k, k + 1:] - s * x[k + 1:]) / c
        x[k + 1:] = c * x[k + 1:] - s * R[k, k + 1:]

    result.update_count += 1
    return result


def apply_events(factor, events):
    """Apply rank-1 events in place, all updates before all downdates.

    Scheduling the updates first keeps every intermediate matrix at least as
    large as the final one, so R stays full rank throughout.

    Raises
    ------
    FactorizationError
        If a downdate fails; the factor must then be rebuilt.

    """
    for event in events:
        if is_update(event):
            rank1_update(factor, event.vector, overwrite=True)
    for event in events:
        if not is_update(event):
            rank1_downdate(factor, event.vector, overwrite=True)
    return factor


def solve_factored(factor, b):
    """Compute (R^T R)^{-1} b by a forward then a back substitution."""
    b = np.asarray(b, dtype=float)
    y = scipy.linalg.solve_triangular(factor.R, b, trans="T", lower=False)
    return scipy.linalg.solve_triangular(factor.R, y, lower=False)


def pinv_apply(factor, labeling, b):
    """Apply the pseudoinverse of the active Laplacian: L^+ b = (L + NN^T)^{-1} P b.

    The result is orthogonal to every null basis column.

    """
    x = solve_factored(factor, labeling.project_out(np.asarray(b, dtype=float)))
    return labeling.project_out(x)
