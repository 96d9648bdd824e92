"""Singular pressure-law family p(v) = eps/(v-1)^gamma and its exact identities."""

from dataclasses import dataclass

import numpy as np

from .errors import DomainError


@dataclass(frozen=True)
class PressureLaw:
    """Singular pressure law with scale ``epsilon`` and exponent ``gamma``.

    Strictly decreasing and convex on (1, inf), blowing up as v -> 1+.
    The three-function interface (p, p', p'') is the extension seam for
    other convex singular laws; only the power-law family is implemented.
    """

    epsilon: float
    gamma: float = 1.0

    def __post_init__(self):
        if not self.epsilon > 0.0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")
        if not self.gamma >= 1.0:
            raise ValueError(f"gamma must be >= 1, got {self.gamma}")

    @property
    def v_minus(self) -> float:
        """Left end state 1 + eps^(1/gamma), normalized so p(v_minus) = 1."""
        return 1.0 + self.epsilon ** (1.0 / self.gamma)

    def _check(self, v):
        if np.any(np.asarray(v) <= 1.0):
            raise DomainError(
                f"congested or invalid specific volume: v = {np.min(v)} <= 1"
            )

    def p(self, v):
        """Evaluate p(v) = eps/(v-1)^gamma for v > 1."""
        self._check(v)
        return self.epsilon / (np.asarray(v, dtype=float) - 1.0) ** self.gamma

    def dp(self, v):
        """First derivative, -gamma*eps/(v-1)^(gamma+1) < 0."""
        self._check(v)
        return -self.gamma * self.epsilon / (np.asarray(v, dtype=float) - 1.0) ** (
            self.gamma + 1.0
        )

    def ddp(self, v):
        """Second derivative, gamma*(gamma+1)*eps/(v-1)^(gamma+2) > 0."""
        self._check(v)
        g = self.gamma
        return g * (g + 1.0) * self.epsilon / (np.asarray(v, dtype=float) - 1.0) ** (
            g + 2.0
        )


def p_eval(law: PressureLaw, v):
    """Pressure value; raises DomainError for v <= 1."""
    return law.p(v)


def p_derivatives(law: PressureLaw, v):
    """Return (p', p'') at v; p' < 0 < p''."""
    return law.dp(v), law.ddp(v)


def weight_ratio(law: PressureLaw, v):
    """The energy weight p''/(p')^2, equal to (gamma+1)/(gamma*p(v)) exactly."""
    dp, ddp = p_derivatives(law, v)
    return ddp / dp**2
