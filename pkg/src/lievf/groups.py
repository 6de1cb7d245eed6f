"""Matrix Lie groups T(m), SO(3), SE(3) and the twist-coordinate operators.

Group elements are plain ``(n, n)`` float arrays; a :class:`GroupDescriptor`
travels alongside them and carries the algebra basis.  Twists are length-``m``
arrays ordered like the basis (for SE(3): linear part first, then angular).
"""

from __future__ import annotations

import functools
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .matrix_core import MatrixError, invert, mat_exp, mat_log

SPAN_TOL = 1e-6
MEMBERSHIP_TOL = 1e-8
REORTHO_TOL = 1e-10


class GroupError(ValueError):
    pass


class SpanError(GroupError):
    """A matrix that should be in the Lie algebra is not (within tolerance)."""


class MembershipError(GroupError):
    pass


@dataclass(frozen=True, eq=False)
class GroupDescriptor:
    """Metadata of a matrix Lie group with a chosen algebra basis.

    ``exp``/``log`` default to the dense kernels; a group may supply exact
    closed forms instead.
    """

    name: str
    matrix_order: int
    algebra_dim: int
    basis: np.ndarray  # (m, n, n)
    closed_exp: Optional[Callable[[np.ndarray], np.ndarray]] = field(default=None, repr=False)
    closed_log: Optional[Callable[[np.ndarray], np.ndarray]] = field(default=None, repr=False)
    _pinv: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        basis = np.asarray(self.basis, dtype=float)
        n, m = self.matrix_order, self.algebra_dim
        if basis.shape != (m, n, n):
            raise GroupError(f"basis must have shape {(m, n, n)}, got {basis.shape}")
        flat = basis.reshape(m, n * n).T
        if np.linalg.matrix_rank(flat) != m:
            raise GroupError("basis elements are not linearly independent")
        basis.setflags(write=False)
        pinv = np.linalg.pinv(flat)
        pinv.setflags(write=False)
        object.__setattr__(self, "basis", basis)
        object.__setattr__(self, "_pinv", pinv)

    @property
    def is_affine(self) -> bool:
        return self.name in ("SE3",) or self.name.startswith("T")

    def exp(self, A: np.ndarray) -> np.ndarray:
        return self.closed_exp(A) if self.closed_exp is not None else mat_exp(A)

    def log(self, X: np.ndarray) -> np.ndarray:
        return self.closed_log(X) if self.closed_log is not None else mat_log(X)

    def identity(self) -> np.ndarray:
        return np.eye(self.matrix_order)

    def __repr__(self):
        return f"GroupDescriptor({self.name})"


def _skew_basis() -> np.ndarray:
    E = np.zeros((3, 3, 3))
    E[0][2, 1], E[0][1, 2] = 1.0, -1.0
    E[1][0, 2], E[1][2, 0] = 1.0, -1.0
    E[2][1, 0], E[2][0, 1] = 1.0, -1.0
    return E


def _se3_basis() -> np.ndarray:
    E = np.zeros((6, 4, 4))
    for k in range(3):
        E[k][k, 3] = 1.0
    E[3:, :3, :3] = _skew_basis()
    return E


@functools.lru_cache(maxsize=None)
def se3() -> GroupDescriptor:
    return GroupDescriptor("SE3", 4, 6, _se3_basis())


@functools.lru_cache(maxsize=None)
def so3() -> GroupDescriptor:
    return GroupDescriptor("SO3", 3, 3, _skew_basis())


@functools.lru_cache(maxsize=None)
def translation_group(m: int) -> GroupDescriptor:
    """T(m): unit upper-left block, translation in the last column.

    exp(A) = I + A and log(X) = X - I are exact here because the algebra is
    nilpotent of order 2.
    """
    if m < 1:
        raise GroupError("T(m) needs m >= 1")
    n = m + 1
    E = np.zeros((m, n, n))
    for k in range(m):
        E[k][k, m] = 1.0
    return GroupDescriptor(
        f"T{m}", n, m, E,
        closed_exp=lambda A: np.eye(n) + A,
        closed_log=lambda X: X - np.eye(n),
    )


def group_from_name(name: str, m: Optional[int] = None) -> GroupDescriptor:
    key = name.upper()
    if key == "SE3":
        return se3()
    if key == "SO3":
        return so3()
    if key.startswith("T"):
        if m is None:
            tail = key[1:].strip("()")
            if not tail:
                raise GroupError("translation group needs a dimension m")
            m = int(tail)
        return translation_group(int(m))
    raise GroupError(f"unknown group {name!r}")


# --- twist coordinates ------------------------------------------------------

def s_map(group: GroupDescriptor, zeta) -> np.ndarray:
    zeta = np.asarray(zeta, dtype=float)
    if zeta.shape != (group.algebra_dim,):
        raise GroupError(f"twist must have length {group.algebra_dim}, got shape {zeta.shape}")
    return np.tensordot(zeta, group.basis, axes=1)


def s_inv(group: GroupDescriptor, A, tol: float = SPAN_TOL) -> np.ndarray:
    """Coordinates of an algebra element in the group's basis.

    Least-squares against the vectorised basis; raises :class:`SpanError`
    when the projection residual exceeds ``tol * (1 + ||A||_F)``.
    """
    A = np.asarray(A, dtype=float)
    n = group.matrix_order
    if A.shape != (n, n):
        raise GroupError(f"expected {(n, n)} matrix, got {A.shape}")
    flat = A.reshape(-1)
    zeta = group._pinv @ flat
    residual = np.linalg.norm(flat - group.basis.reshape(group.algebra_dim, -1).T @ zeta)
    if residual > tol * (1.0 + np.linalg.norm(flat)):
        raise SpanError(f"not in algebra span (residual {residual:.3e})")
    return zeta


def membership_residual(group: GroupDescriptor, H) -> float:
    """Distance of ``H`` from the group's defining constraints (0 for exact members)."""
    H = np.asarray(H, dtype=float)
    n = group.matrix_order
    if H.shape != (n, n) or not np.all(np.isfinite(H)):
        return float("inf")
    if group.name == "SO3":
        Q = H
        res = np.linalg.norm(Q.T @ Q - np.eye(3))
        return float(res) if np.linalg.det(Q) > 0 else float("inf")
    last = np.zeros(n)
    last[-1] = 1.0
    res = np.linalg.norm(H[-1] - last)
    Q = H[:-1, :-1]
    if group.name == "SE3":
        if np.linalg.det(Q) <= 0:
            return float("inf")
        res = max(res, np.linalg.norm(Q.T @ Q - np.eye(3)))
    elif group.name.startswith("T"):
        res = max(res, np.linalg.norm(Q - np.eye(n - 1)))
    else:
        raise GroupError(f"no membership test for {group.name}")
    return float(res)


def check_member(group: GroupDescriptor, H, tol: float = MEMBERSHIP_TOL) -> np.ndarray:
    H = np.asarray(H, dtype=float)
    res = membership_residual(group, H)
    if not res <= tol:
        raise MembershipError(f"off-group sample (residual {res:.3e})")
    return H


def _polar(Q: np.ndarray) -> np.ndarray:
    U, _, Vt = np.linalg.svd(Q)
    R = U @ Vt
    if np.linalg.det(R) < 0:
        U[:, -1] *= -1.0
        R = U @ Vt
    return R


def reorthonormalize(group: GroupDescriptor, H: np.ndarray, tol: float = REORTHO_TOL) -> np.ndarray:
    """Project the rotation block back onto SO(3) when drift exceeds ``tol``."""
    if group.name == "SO3":
        if np.linalg.norm(H.T @ H - np.eye(3)) > tol:
            return _polar(H)
        return H
    if group.name == "SE3":
        Q = H[:3, :3]
        if np.linalg.norm(Q.T @ Q - np.eye(3)) > tol or np.any(H[3] != (0.0, 0.0, 0.0, 1.0)):
            H = H.copy()
            H[:3, :3] = _polar(Q)
            H[3] = (0.0, 0.0, 0.0, 1.0)
        return H
    if group.name.startswith("T"):
        n = group.matrix_order
        out = np.eye(n)
        out[:-1, -1] = H[:-1, -1]
        return out
    return H


def group_exp_step(group: GroupDescriptor, H, xi, dt: float) -> np.ndarray:
    """Exact flow of the constant twist: ``exp(S[xi] dt) H``."""
    if dt < 0:
        raise GroupError("dt must be non-negative")
    H = np.asarray(H, dtype=float)
    if dt == 0.0:
        return H.copy()
    A = s_map(group, xi) * dt
    if not np.any(A):
        return H.copy()
    return reorthonormalize(group, group.exp(A) @ H)


def xi_operator(group: GroupDescriptor, G: Callable[[float], np.ndarray], sigma: float,
                h: float = 1e-6, tol: float = SPAN_TOL) -> np.ndarray:
    """Twist of the group-valued path ``G`` at ``sigma``.

    ``dG/dsigma`` is a central difference with step ``h``.
    """
    if h <= 0:
        raise GroupError("h must be positive")
    Gp, Gm, G0 = G(sigma + h), G(sigma - h), G(sigma)
    dG = (np.asarray(Gp) - np.asarray(Gm)) / (2.0 * h)
    return s_inv(group, dG @ invert(G0), tol=tol)


@functools.lru_cache(maxsize=64)
def _perturbations(group: GroupDescriptor, eps: float) -> np.ndarray:
    m = group.algebra_dim
    out = np.empty((2 * m, group.matrix_order, group.matrix_order))
    for j in range(m):
        out[j] = group.exp(group.basis[j] * eps)
        out[m + j] = group.exp(-group.basis[j] * eps)
    out.setflags(write=False)
    return out


def perturbed_elements(group: GroupDescriptor, H, eps: float, central: bool = False) -> np.ndarray:
    """``exp(S[e_j] eps) H`` for every basis direction (and ``-eps`` if central)."""
    P = _perturbations(group, float(eps))
    if not central:
        P = P[: group.algebra_dim]
    return P @ np.asarray(H, dtype=float)


def l_operator(group: GroupDescriptor, f: Callable[[np.ndarray], float], H,
               eps: float = 1e-3, scheme: str = "forward") -> np.ndarray:
    """Row vector of directional derivatives of ``f`` along left perturbations.

    Entry ``j`` is ``(f(exp(S[e_j] eps) H) - f(H)) / eps``.  ``scheme="central"``
    replaces this with the symmetric quotient; it exists for oracle checks.
    """
    if eps <= 0:
        raise GroupError("eps must be positive")
    H = np.asarray(H, dtype=float)
    m = group.algebra_dim
    if scheme == "forward":
        Hs = perturbed_elements(group, H, eps)
        f0 = float(f(H))
        vals = np.array([float(f(X)) for X in Hs])
        out = (vals - f0) / eps
    elif scheme == "central":
        Hs = perturbed_elements(group, H, eps, central=True)
        vals = np.array([float(f(X)) for X in Hs])
        out = (vals[:m] - vals[m:]) / (2.0 * eps)
        f0 = 0.0
    else:
        raise GroupError(f"unknown difference scheme {scheme!r}")
    if not (np.all(np.isfinite(out)) and np.isfinite(f0)):
        raise GroupError("objective non-finite")
    return out


def body_frame_twist(group: GroupDescriptor, H, xi_fixed) -> np.ndarray:
    """Twist ``xi'`` with ``S[xi] H = H S[xi']``."""
    H = np.asarray(H, dtype=float)
    return s_inv(group, invert(H) @ s_map(group, xi_fixed) @ H)


# --- SE(3) helpers ----------------------------------------------------------

def skew(w) -> np.ndarray:
    w = np.asarray(w, dtype=float)
    return np.array([[0.0, -w[2], w[1]],
                     [w[2], 0.0, -w[0]],
                     [-w[1], w[0], 0.0]])


def rotation(axis, angle: float) -> np.ndarray:
    """Rodrigues rotation matrix about ``axis`` (normalised internally)."""
    axis = np.asarray(axis, dtype=float)
    axis = axis / np.linalg.norm(axis)
    K = skew(axis)
    return np.eye(3) + np.sin(angle) * K + (1.0 - np.cos(angle)) * (K @ K)


def se3_from(Q=None, t=None) -> np.ndarray:
    H = np.eye(4)
    if Q is not None:
        H[:3, :3] = Q
    if t is not None:
        H[:3, 3] = t
    return H


def translation_element(p) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    H = np.eye(p.size + 1)
    H[:-1, -1] = p
    return H


def translation_of(H) -> np.ndarray:
    H = np.asarray(H)
    return H[:-1, -1].copy()


def random_rotation(rng: np.random.Generator, max_angle: float = np.pi) -> np.ndarray:
    axis = rng.normal(size=3)
    return rotation(axis, rng.uniform(0.0, max_angle))


def random_element(group: GroupDescriptor, rng: np.random.Generator, scale: float = 1.0,
                   max_angle: float = np.pi) -> np.ndarray:
    if group.name == "SE3":
        return se3_from(random_rotation(rng, max_angle), rng.normal(size=3) * scale)
    if group.name == "SO3":
        return random_rotation(rng, max_angle)
    if group.name.startswith("T"):
        return translation_element(rng.normal(size=group.algebra_dim) * scale)
    raise GroupError(f"cannot sample {group.name}")


