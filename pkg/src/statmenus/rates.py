"""Per-type error rates of a thresholded test: FDR, TDR, and Bayes risk."""

from __future__ import annotations

from .testmodel import TestModel, power

__all__ = ["fdr", "tdr", "bayes_risk"]


def fdr(q: float, tau: float, model: TestModel) -> float:
    """P(null | approved) for an agent of type ``q`` tested at ``tau``.

    The 0/0 case at ``tau = 0`` resolves to 0: nothing is approved.
    """
    if not 0.0 <= q <= 1.0:
        raise ValueError(f"type must lie in [0, 1], got {q!r}")
    if tau == 0.0:
        return 0.0
    approved_null = q * tau
    approved = approved_null + (1.0 - q) * power(model, tau)
    if approved == 0.0:
        return 0.0
    return approved_null / approved


def tdr(q: float, tau: float, model: TestModel) -> float:
    """Probability of correctly approving a non-null proposal: (1-q) beta1(tau)."""
    if not 0.0 <= q <= 1.0:
        raise ValueError(f"type must lie in [0, 1], got {q!r}")
    return (1.0 - q) * power(model, tau)


def bayes_risk(q: float, tau: float, omega0: float, omega1: float, model: TestModel) -> float:
    """Weighted error risk: omega0 * q * tau + omega1 * (1-q) * (1 - beta1(tau))."""
    if not 0.0 <= q <= 1.0:
        raise ValueError(f"type must lie in [0, 1], got {q!r}")
    return omega0 * q * tau + omega1 * (1.0 - q) * (1.0 - power(model, tau))
