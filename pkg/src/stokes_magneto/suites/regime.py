"""Parameter regimes of the magnetic relaxation system and the product-estimate exponents."""

from __future__ import annotations

import math

from pydantic import BaseModel

from ..errors import ParameterRangeError

EXACT = 1e-12


class RegimeReport(BaseModel):
    d: int
    alpha: float
    beta: float
    existence: bool
    uniqueness: bool
    margins: dict[str, float]
    remark_cases: list[str]
    remark_uniqueness: dict[str, bool]


def _coupling(alpha: float, beta: float) -> float:
    return min(alpha + beta, 2 * alpha + beta - 1)


def _remarks(d: int, alpha: float, beta: float) -> tuple[list[str], dict[str, bool]]:
    cases: list[str] = []
    unique: dict[str, bool] = {}
    if math.isclose(alpha, 1.0, abs_tol=EXACT) and beta > d / 2 - 1:
        cases.append("a")
        unique["a"] = beta >= d / 2
    if math.isclose(beta, 1.0, abs_tol=EXACT) and max(0.5, d / 2 - 1, d / 4) < alpha < (d + 1) / 2:
        cases.append("b")
        unique["b"] = alpha >= d / 2
    if (
        2 <= d <= 4
        and math.isclose(alpha, beta, abs_tol=EXACT)
        and (d + 2) / 6 < alpha < (d + 1) / 2
    ):
        cases.append("c")
        unique["c"] = alpha >= (d + 2) / 4
    return cases, unique


def classify_regime(d: int, alpha: float, beta: float) -> RegimeReport:
    """Decide which of the existence and uniqueness hypotheses hold.

    Existence needs 1/2 < alpha < (d+1)/2, beta > 0 and
    min{alpha + beta, 2 alpha + beta - 1} > d/2; uniqueness additionally needs
    beta >= 1 and the same minimum >= d/2 + 1.
    """
    if d < 2:
        raise ParameterRangeError(f"dimension must be at least 2, got {d}")
    if alpha <= 0 or beta <= 0:
        raise ParameterRangeError(f"alpha and beta must be positive, got {alpha}, {beta}")
    coupling = _coupling(alpha, beta)
    margins = {
        "alpha_lower": alpha - 0.5,
        "alpha_upper": (d + 1) / 2 - alpha,
        "beta_positive": beta,
        "existence": coupling - d / 2,
        "beta_uniqueness": beta - 1,
        "uniqueness": coupling - (d / 2 + 1),
    }
    in_band = margins["alpha_lower"] > 0 and margins["alpha_upper"] > 0
    existence = in_band and margins["existence"] > 0
    uniqueness = in_band and margins["beta_uniqueness"] >= 0 and margins["uniqueness"] >= 0
    cases, unique = _remarks(d, alpha, beta)
    return RegimeReport(
        d=d,
        alpha=alpha,
        beta=beta,
        existence=existence,
        uniqueness=uniqueness,
        margins=margins,
        remark_cases=cases,
        remark_uniqueness=unique,
    )


class ExponentSelection(BaseModel):
    """Exponents of the product estimate ||fg||_2 <~ ||f||_{q,inf}^{1-t1} ||f||_{H^a}^{t1}
    ||g||_2^{1-t2} ||g||_{H^b}^{t2} with q = d/(d+1-2a)."""

    d: int
    alpha: float
    beta: float
    mu: float
    p: float
    p_lower: float
    p_upper: float | None
    theta1: float
    theta2: float
    slack: float
    slack_guaranteed: bool

    def inequalities(self) -> dict[str, float]:
        """Margins of the three strict inequalities that define a feasible p."""
        d, p = self.d, self.p
        return {
            "alpha_above": self.alpha - (d / 2 - d / p),
            "alpha_below": (d + 1) / 2 - d / (2 * p) - self.alpha,
            "beta_above": self.beta - d / p,
        }

    def relation_defect(self) -> float:
        """|beta theta2 - ((1 - theta1)(d + 1 - 2 alpha) + theta1 (d/2 - alpha))|."""
        d, a = self.d, self.alpha
        rhs = (1 - self.theta1) * (d + 1 - 2 * a) + self.theta1 * (d / 2 - a)
        return abs(self.beta * self.theta2 - rhs)


def feasible_interval(d: int, alpha: float, beta: float) -> tuple[float, float | None]:
    """Open interval of admissible p; the upper end is None when alpha >= d/2."""
    lower = max(2.0, d / beta, d / (d + 1 - 2 * alpha))
    if alpha >= d / 2:
        return lower, None
    return lower, d / (d / 2 - alpha)


def exponent_search(
    d: int, alpha: float, beta: float, mu: float = 0.0, p: float | None = None
) -> ExponentSelection:
    """Pick p and the interpolation exponents theta1, theta2.

    Without an explicit p the midpoint of the feasible interval is used, or
    twice its lower end when the interval is unbounded.
    """
    if not 0.5 < alpha < (d + 1) / 2:
        raise ParameterRangeError(f"alpha={alpha} outside (1/2, {(d + 1) / 2})")
    if beta <= 0:
        raise ParameterRangeError(f"beta must be positive, got {beta}")
    if alpha + beta <= d / 2:
        raise ParameterRangeError(f"alpha + beta = {alpha + beta} must exceed d/2 = {d / 2}")
    if not 0 <= mu <= 1:
        raise ParameterRangeError(f"mu must lie in [0, 1], got {mu}")

    lower, upper = feasible_interval(d, alpha, beta)
    if upper is not None and lower >= upper:
        raise ParameterRangeError(f"no admissible p: interval ({lower}, {upper}) is empty")
    if p is None:
        p = 2 * lower if upper is None else (lower + upper) / 2
    elif not (p > lower and (upper is None or p < upper)):
        raise ParameterRangeError(f"p={p} outside the admissible interval ({lower}, {upper})")

    theta1 = (d + 1 - 2 * alpha - d / p) / (d / 2 + 1 - alpha)
    theta2 = d / (p * beta)
    slack = 2 - ((1 + mu) * theta1 + theta2 + 1 / beta)
    return ExponentSelection(
        d=d,
        alpha=alpha,
        beta=beta,
        mu=mu,
        p=p,
        p_lower=lower,
        p_upper=upper,
        theta1=theta1,
        theta2=theta2,
        slack=slack,
        slack_guaranteed=alpha + (1 - mu) * beta >= d / 2 + 1 - EXACT,
    )
