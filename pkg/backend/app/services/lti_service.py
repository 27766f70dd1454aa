"""SISO LTI plumbing: realizations, Routh-Hurwitz, SPR certificates, KYP checks, RK4."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np
from scipy.optimize import brentq
from scipy.signal import tf2ss

from app.config import settings
from app.schemas.lti import SprCertificate, SprVerdict, TransferFunction
from app.utils.exceptions import (
    DimensionMismatchError,
    ImproperSystemError,
    SingularSystemError,
)

if TYPE_CHECKING:
    from collections.abc import Sequence

logger = logging.getLogger(__name__)

@dataclass(frozen=True, eq=False)
class StateSpace:
    A: np.ndarray
    b: np.ndarray
    c: np.ndarray
    d: float

    def __post_init__(self) -> None:
        A = np.array(self.A, dtype=float, ndmin=2)
        b = np.array(self.b, dtype=float).reshape(-1)
        c = np.array(self.c, dtype=float).reshape(-1)
        n = A.shape[0]
        if A.shape != (n, n) or b.shape != (n,) or c.shape != (n,):
            raise DimensionMismatchError(
                f"inconsistent realization: A{A.shape}, b{b.shape}, c{c.shape}"
            )
        for name, arr in (("A", A), ("b", b), ("c", c)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "d", float(self.d))

    @property
    def n(self) -> int:
        return self.A.shape[0]

    def output(self, x: np.ndarray, u: float = 0.0) -> float:
        return float(self.c @ x + self.d * u)

    def evaluate(self, s: complex) -> complex:
        """c(sI - A)^-1 b + d."""
        resolvent = np.linalg.solve(s * np.eye(self.n) - self.A, self.b.astype(complex))
        return complex(self.c @ resolvent + self.d)

    @classmethod
    def from_transfer_function(cls, tf: TransferFunction) -> StateSpace:
        return tf_to_statespace(tf)


@dataclass(frozen=True, eq=False)
class KypSolution:
    P: np.ndarray
    Q: np.ndarray
    l: np.ndarray  # noqa: E741
    w: float


# ── Realization ───────────────────────────────────────────────────────────


def tf_to_statespace(tf: TransferFunction) -> StateSpace:
    """Controllable canonical realization: first row of A is -den[1:], b = e1."""
    if tf.relative_degree < 0:
        raise ImproperSystemError(f"improper transfer function {tf.num}/{tf.den}")
    if tf.order == 0:
        raise ImproperSystemError("static gain has no state-space realization")
    A, B, C, D = tf2ss(np.asarray(tf.num), np.asarray(tf.den))
    return StateSpace(A=A, b=B[:, 0], c=C[0, :], d=float(D[0, 0]))


# ── Stability ─────────────────────────────────────────────────────────────


def routh_first_column(den: Sequence[float]) -> list[float]:
    """First column of the Routh array; empty list if a zero pivot appears."""
    coeffs = np.trim_zeros(np.asarray(den, dtype=float), "f")
    if coeffs.size == 0:
        raise SingularSystemError("zero polynomial has no Routh array")
    if coeffs[0] < 0:
        coeffs = -coeffs
    width = (coeffs.size + 1) // 2
    upper = np.zeros(width + 1)
    lower = np.zeros(width + 1)
    upper[: coeffs[0::2].size] = coeffs[0::2]
    lower[: coeffs[1::2].size] = coeffs[1::2]

    column = [float(upper[0])]
    for _ in range(coeffs.size - 1):
        if lower[0] == 0:
            return []
        column.append(float(lower[0]))
        nxt = np.zeros_like(upper)
        nxt[:-1] = (lower[0] * upper[1:] - upper[0] * lower[1:]) / lower[0]
        upper, lower = lower, nxt
    return column


def is_hurwitz(den: Sequence[float]) -> bool:
    """True iff every root of den lies in the open left half-plane."""
    column = routh_first_column(den)
    return bool(column) and all(v > 0 for v in column)


# ── Positivity of p(x) on [0, inf) ────────────────────────────────────────


def _cauchy_bound(p: np.ndarray) -> float:
    return 1.0 + float(np.max(np.abs(p[1:] / p[0]))) if p.size > 1 else 1.0


def _closed_form_roots(p: np.ndarray, lo: float, hi: float) -> list[float]:
    if p.size <= 1:
        return []
    if p.size == 2:
        roots = [-p[1] / p[0]]
    else:
        a, b, c = p
        disc = b * b - 4 * a * c
        if disc < 0:
            return []
        sq = np.sqrt(disc)
        # numerically stable pair
        q = -0.5 * (b + np.copysign(sq, b))
        roots = [q / a, c / q] if q != 0 else [0.0, 0.0]
    return sorted(float(r) for r in roots if lo <= r <= hi)


def real_roots_in(p: Sequence[float], lo: float, hi: float) -> list[float]:
    """Real roots of p on [lo, hi].

    Degree <= 2 is solved in closed form. Higher degrees are isolated between
    the critical points (roots of p', found recursively) where p is monotone,
    then refined by bisection.
    """
    poly = np.trim_zeros(np.asarray(p, dtype=float), "f")
    if poly.size <= 3:
        return _closed_form_roots(poly, lo, hi)

    critical = real_roots_in(np.polyder(poly), lo, hi)
    knots = [lo, *critical, hi]
    roots: list[float] = []
    for a, b in zip(knots[:-1], knots[1:], strict=True):
        fa, fb = np.polyval(poly, a), np.polyval(poly, b)
        if fa == 0:
            roots.append(a)
        elif fa * fb < 0:
            roots.append(float(brentq(lambda x: np.polyval(poly, x), a, b, xtol=1e-14)))
    if np.polyval(poly, hi) == 0:
        roots.append(hi)
    # touching roots: p(c) ~ 0 at a critical point without a sign change
    scale = float(np.max(np.abs(poly)))
    for c in critical:
        if abs(np.polyval(poly, c)) <= 1e-12 * scale and all(abs(c - r) > 1e-9 for r in roots):
            roots.append(c)
    return sorted(roots)


def realpart_polynomial(tf: TransferFunction) -> np.ndarray:
    """p(x), descending in x = ω², with Re G(jω) = p(ω²) / |den(jω)|²."""
    num = np.asarray(tf.num)
    den = np.asarray(tf.den)
    # den(-s): flip the sign of odd-power coefficients
    powers = np.arange(den.size - 1, -1, -1)
    den_mirror = den * np.where(powers % 2 == 0, 1.0, -1.0)
    prod = np.polymul(num, den_mirror)[::-1]  # ascending in s
    even = prod[0::2]
    signs = np.where(np.arange(even.size) % 2 == 0, 1.0, -1.0)
    p_ascending = even * signs
    p = np.trim_zeros(p_ascending[::-1], "f")
    return p if p.size else np.zeros(1)


def _min_over_nonnegative(p: np.ndarray) -> float:
    if p.size > 1 and p[0] < 0:
        return float("-inf")
    candidates = [0.0, *real_roots_in(np.polyder(p), 0.0, _cauchy_bound(p))] if p.size > 1 else [0.0]
    return float(min(np.polyval(p, x) for x in candidates))


def spr_test(tf: TransferFunction) -> SprCertificate:
    """Frequency-domain strict positive realness test."""
    if tf.relative_degree < 0:
        raise ImproperSystemError(f"improper transfer function {tf.num}/{tf.den}")

    hurwitz = is_hurwitz(tf.den)
    p = realpart_polynomial(tf)
    rel = tf.relative_degree
    min_value = _min_over_nonnegative(p)
    has_root = bool(real_roots_in(p, 0.0, _cauchy_bound(p))) if p.size > 1 else p[0] == 0

    def certificate(verdict: SprVerdict, reason: str | None = None) -> SprCertificate:
        return SprCertificate(
            hurwitz=hurwitz,
            realpart_poly=[float(c) for c in p],
            min_nonneg_value=min_value,
            relative_degree=rel,
            verdict=verdict,
            reason=reason,
        )

    if rel >= 2:
        return certificate(
            SprVerdict.NOT_POSITIVE_REAL,
            f"relative degree {rel} >= 2: phase lag exceeds 90 degrees at high frequency",
        )
    if not hurwitz:
        return certificate(SprVerdict.NOT_POSITIVE_REAL, "denominator is not Hurwitz")
    if p[-1] < 0 or min_value < 0:
        return certificate(SprVerdict.NOT_POSITIVE_REAL, "Re G(jω) < 0 for some ω")

    # Re G -> p_lead / x^(n - deg p): strictness at ω -> inf needs deg p = n - rel
    expected_degree = tf.order - rel
    lead_ok = p.size - 1 == expected_degree and p[0] > 0
    if p[-1] > 0 and not has_root and min_value > 0 and lead_ok:
        return certificate(SprVerdict.STRICTLY_POSITIVE_REAL)
    reason = "Re G(jω) touches zero" if (has_root or min_value == 0) else (
        "high-frequency limit condition fails"
    )
    return certificate(SprVerdict.POSITIVE_REAL_ONLY, reason)


# ── KYP verification ──────────────────────────────────────────────────────


def _is_positive_definite(M: np.ndarray) -> bool:
    try:
        np.linalg.cholesky(M)
    except np.linalg.LinAlgError:
        return False
    return True


def kyp_verify(ss: StateSpace, sol: KypSolution, tol: float | None = None) -> bool:
    """Check a given (P, Q, l, w) against the positive-real matrix equations.

    Residual norms must not exceed ``tol`` (default ``settings.kyp_tol``).
    """
    tol = settings.kyp_tol if tol is None else tol
    if tol <= 0:
        raise ValueError("tol must be positive")
    n = ss.n
    P = np.atleast_2d(np.asarray(sol.P, dtype=float))
    Q = np.atleast_2d(np.asarray(sol.Q, dtype=float))
    l = np.asarray(sol.l, dtype=float).reshape(-1)  # noqa: E741
    if P.shape != (n, n) or Q.shape != (n, n) or l.shape != (n,):
        raise DimensionMismatchError(
            f"KYP solution shapes P{P.shape}, Q{Q.shape}, l{l.shape} do not match n={n}"
        )
    P = (P + P.T) / 2
    Q = (Q + Q.T) / 2
    w = float(sol.w)

    lyapunov = ss.A.T @ P + P @ ss.A + Q + np.outer(l, l)
    coupling = P @ ss.b - ss.c + l * w
    feedthrough = 2 * ss.d - w * w
    residuals = (
        float(np.linalg.norm(lyapunov)),
        float(np.linalg.norm(coupling)),
        abs(feedthrough),
    )
    ok = all(r <= tol for r in residuals) and _is_positive_definite(P) and _is_positive_definite(Q)
    logger.debug("KYP residuals %s -> %s", residuals, ok)
    return ok


# ── Integration ───────────────────────────────────────────────────────────


def rk4_step(ss: StateSpace, x: np.ndarray, u: float, dt: float) -> np.ndarray:
    """One classical RK4 step of x' = Ax + bu with u held over the step."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    x = np.asarray(x, dtype=float)
    if x.shape != (ss.n,):
        raise DimensionMismatchError(f"state shape {x.shape} does not match n={ss.n}")
    A = ss.A
    bu = ss.b * u
    k1 = A @ x + bu
    k2 = A @ (x + 0.5 * dt * k1) + bu
    k3 = A @ (x + 0.5 * dt * k2) + bu
    k4 = A @ (x + dt * k3) + bu
    return x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
