"""Dense square-matrix kernels: exponential, principal logarithm, norms.

Both ``mat_exp`` and ``mat_log`` are written against plain numpy so the
group code has no hidden dependency on a particular scipy version.  They
are meant for the small matrices (n <= 8) that appear in the groups used
here.
"""

from __future__ import annotations

import math

import numpy as np


class MatrixError(ValueError):
    """Raised by the kernels on inputs outside their domain."""


class PrincipalBranchError(MatrixError):
    """The principal logarithm does not exist (eigenvalue on the closed negative real axis)."""


# Pade coefficients and 1-norm thresholds from Higham (2005), Table 2.3.
_PADE_B = {
    3: (120.0, 60.0, 12.0, 1.0),
    5: (30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0),
    7: (17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0),
    9: (17643225600.0, 8821612800.0, 2075673600.0, 302702400.0, 30270240.0,
        2162160.0, 110880.0, 3960.0, 90.0, 1.0),
    13: (64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
         1187353796428800.0, 129060195264000.0, 10559470521600.0,
         670442572800.0, 33522128640.0, 1323241920.0, 40840800.0, 960960.0,
         16380.0, 182.0, 1.0),
}
_PADE_THETA = {
    3: 1.495585217958292e-2,
    5: 2.539398330063230e-1,
    7: 9.504178996162932e-1,
    9: 2.097847961257068e0,
    13: 5.371920351148152e0,
}

# Square roots are taken until ||X - I||_1 drops below this; the Gregory
# series then converges like (0.5 / 1.5)^(2k+1).
_LOG_REDUCTION = 0.5
_LOG_SERIES_MIN_TERMS = 15
_LOG_SERIES_MAX_TERMS = 60
_MAX_SQRTS = 64
_NEG_AXIS_TOL = 1e-10


def _as_square(A, name="matrix") -> np.ndarray:
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise MatrixError(f"{name} must be square, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise MatrixError("non-finite matrix")
    return A


def one_norm(A: np.ndarray) -> float:
    return float(np.max(np.sum(np.abs(A), axis=0))) if A.size else 0.0


def frobenius_norm(A) -> float:
    """sqrt of the sum of squared entries."""
    A = np.asarray(A, dtype=float)
    if not np.all(np.isfinite(A)):
        raise MatrixError("non-finite matrix")
    return float(math.sqrt(np.sum(A * A)))


def trace(A) -> float:
    return float(np.trace(_as_square(A)))


def invert(A) -> np.ndarray:
    A = _as_square(A)
    try:
        out = np.linalg.inv(A)
    except np.linalg.LinAlgError as exc:
        raise MatrixError("singular matrix") from exc
    if not np.all(np.isfinite(out)):
        raise MatrixError("singular matrix")
    return out


def _pade(A: np.ndarray, m: int):
    b = _PADE_B[m]
    eye = np.eye(A.shape[0])
    A2 = A @ A
    if m == 13:
        A4 = A2 @ A2
        A6 = A2 @ A4
        U = A @ (A6 @ (b[13] * A6 + b[11] * A4 + b[9] * A2)
                 + b[7] * A6 + b[5] * A4 + b[3] * A2 + b[1] * eye)
        V = (A6 @ (b[12] * A6 + b[10] * A4 + b[8] * A2)
             + b[6] * A6 + b[4] * A4 + b[2] * A2 + b[0] * eye)
        return U, V
    # Lower degrees: accumulate even powers of A.
    powers = [eye, A2]
    while len(powers) < (m + 1) // 2:
        powers.append(powers[-1] @ A2)
    U = A @ sum(b[2 * k + 1] * powers[k] for k in range(len(powers)))
    V = sum(b[2 * k] * powers[k] for k in range(len(powers)))
    return U, V


def mat_exp(A) -> np.ndarray:
    """Matrix exponential by scaling and squaring with a diagonal Pade core.

    Follows Higham's 2005 algorithm: the lowest Pade degree whose backward
    error bound covers ``||A||_1`` is used, otherwise degree 13 after
    scaling ``A`` by ``2**-s``.
    """
    A = _as_square(A)
    n = A.shape[0]
    if n == 0:
        return A.copy()
    norm = one_norm(A)
    if norm == 0.0:
        return np.eye(n)

    s = 0
    for m in (3, 5, 7, 9):
        if norm <= _PADE_THETA[m]:
            break
    else:
        m = 13
        s = max(0, int(math.ceil(math.log2(norm / _PADE_THETA[13]))))
        A = A / (2.0 ** s)

    U, V = _pade(A, m)
    try:
        R = np.linalg.solve(V - U, V + U)
    except np.linalg.LinAlgError as exc:
        raise MatrixError("Pade denominator singular") from exc
    for _ in range(s):
        R = R @ R
    if not np.all(np.isfinite(R)):
        raise MatrixError("non-finite matrix")
    return R


def sqrtm_db(A, tol: float = 1e-14, max_iter: int = 100) -> np.ndarray:
    """Principal square root via the product form of the Denman-Beavers iteration.

    Iterates ``M <- (I + (M + M^-1)/2)/2`` and ``Y <- Y (I + M^-1)/2`` from
    ``M = Y = A``; ``Y`` tends to ``A^(1/2)`` while ``M`` tends to ``I``.
    One inverse per step.
    """
    A = _as_square(A)
    n = A.shape[0]
    eye = np.eye(n)
    M = A.copy()
    Y = A.copy()
    for _ in range(max_iter):
        try:
            M_inv = np.linalg.inv(M)
        except np.linalg.LinAlgError as exc:
            raise MatrixError("square root iteration hit a singular iterate") from exc
        Y = 0.5 * (Y @ (eye + M_inv))
        M = 0.5 * (eye + 0.5 * (M + M_inv))
        if one_norm(M - eye) <= tol:
            break
    else:
        raise MatrixError("square root iteration did not converge")
    return Y


def _check_principal(Z: np.ndarray) -> None:
    eigvals = np.linalg.eigvals(Z)
    scale = np.maximum(1.0, np.abs(eigvals))
    on_axis = (eigvals.real <= 0.0) & (np.abs(eigvals.imag) <= _NEG_AXIS_TOL * scale)
    if np.any(on_axis):
        raise PrincipalBranchError("principal branch undefined")


def mat_log(Z) -> np.ndarray:
    """Principal matrix logarithm by inverse scaling and squaring.

    Repeated Denman-Beavers square roots bring ``Z`` close to the identity,
    then ``log X = 2 atanh((X - I)(X + I)^-1)`` is summed as a Gregory series
    and the result is scaled back by ``2**k``.

    Raises
    ------
    PrincipalBranchError
        If ``Z`` has an eigenvalue on the closed negative real axis.
    """
    Z = _as_square(Z)
    n = Z.shape[0]
    if n == 0:
        return Z.copy()
    _check_principal(Z)

    eye = np.eye(n)
    X = Z
    k = 0
    while one_norm(X - eye) > _LOG_REDUCTION:
        if k >= _MAX_SQRTS:
            raise MatrixError("logarithm reduction did not converge")
        X = sqrtm_db(X)
        k += 1

    Y = np.linalg.solve((X + eye).T, (X - eye).T).T
    Y2 = Y @ Y
    term = Y
    total = Y.copy()
    for j in range(1, _LOG_SERIES_MAX_TERMS):
        term = term @ Y2
        contrib = term / (2 * j + 1)
        total += contrib
        if j + 1 >= _LOG_SERIES_MIN_TERMS and one_norm(contrib) <= 1e-18 * max(1.0, one_norm(total)):
            break
    L = (2.0 ** (k + 1)) * total
    if not np.all(np.isfinite(L)):
        raise MatrixError("non-finite matrix")
    return L
