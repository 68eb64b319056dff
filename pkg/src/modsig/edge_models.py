"""Edge distribution families for the degree-based null model.

Every family is parametrised by the base mean ``mu = pi_i * pi_j`` of a
node pair. The non-inflated families have mean ``mu``. The zero-inflated
families put extra mass ``omega`` on zero and draw from the base family
otherwise, so their overall mean is ``(1 - omega) * mu``.

All variances are quadratic in ``mu``::

    Var A = c1 * mu + c2 * mu**2

which the fast statistics in :mod:`modsig.modtest` and
:mod:`modsig.nullmodel` rely on.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln, xlogy

from .errors import ModelError

__all__ = ["Family", "EdgeModel", "BERNOULLI_CLAMP", "CLT_FAMILIES"]

# Largest Bernoulli mean used when infeasible means are clamped.
BERNOULLI_CLAMP = 1.0 - 1e-12


class Family(str, enum.Enum):
    BERNOULLI = "bernoulli"
    POISSON = "poisson"
    NEGBIN = "negbin"
    ZIPOISSON = "zipoisson"
    ZINEGBIN = "zinegbin"

    @property
    def has_shape(self) -> bool:
        return self in (Family.NEGBIN, Family.ZINEGBIN)

    @property
    def zero_inflated(self) -> bool:
        return self in (Family.ZIPOISSON, Family.ZINEGBIN)

    @property
    def base(self) -> Family:
        return {Family.ZIPOISSON: Family.POISSON, Family.ZINEGBIN: Family.NEGBIN}.get(self, self)

    @property
    def extra_parameters(self) -> int:
        """Free parameters on top of the n node propensities."""
        return int(self.has_shape) + int(self.zero_inflated)


# Families the normal approximation is run with.
CLT_FAMILIES = (Family.BERNOULLI, Family.POISSON, Family.NEGBIN)


@dataclass(frozen=True)
class EdgeModel:
    """An edge family with its shape ``r`` and zero-inflation ``omega``.

    ``r`` is required for the negative binomial families and ``omega``
    for the zero-inflated ones; both are ``None`` otherwise.
    """

    family: Family
    r: float | None = None
    omega: float | None = None

    def __post_init__(self):
        fam = Family(self.family)
        object.__setattr__(self, "family", fam)
        if fam.has_shape:
            if self.r is None or not (self.r > 0 and math.isfinite(self.r)):
                raise ModelError(f"{fam.value} needs a finite shape r > 0, got {self.r}")
        elif self.r is not None:
            raise ModelError(f"{fam.value} takes no shape parameter")
        if fam.zero_inflated:
            if self.omega is None or not (0.0 <= self.omega < 1.0):
                raise ModelError(f"{fam.value} needs omega in [0, 1), got {self.omega}")
        elif self.omega is not None:
            raise ModelError(f"{fam.value} takes no zero-inflation parameter")

    @classmethod
    def bernoulli(cls) -> EdgeModel:
        return cls(Family.BERNOULLI)

    @classmethod
    def poisson(cls) -> EdgeModel:
        return cls(Family.POISSON)

    @classmethod
    def negbin(cls, r: float) -> EdgeModel:
        return cls(Family.NEGBIN, r=float(r))

    @classmethod
    def zipoisson(cls, omega: float) -> EdgeModel:
        return cls(Family.ZIPOISSON, omega=float(omega))

    @classmethod
    def zinegbin(cls, omega: float, r: float) -> EdgeModel:
        return cls(Family.ZINEGBIN, r=float(r), omega=float(omega))

    @property
    def base(self) -> EdgeModel:
        """The non-inflated family with the same shape."""
        if self.family is Family.ZIPOISSON:
            return EdgeModel.poisson()
        if self.family is Family.ZINEGBIN:
            return EdgeModel.negbin(self.r)
        return self

    @property
    def _w(self) -> float:
        return self.omega if self.family.zero_inflated else 0.0

    def variance_coefficients(self) -> tuple[float, float]:
        """``(c1, c2)`` with ``Var A = c1*mu + c2*mu**2``."""
        fam = self.family.base
        if fam is Family.BERNOULLI:
            c1, c2 = 1.0, -1.0
        elif fam is Family.POISSON:
            c1, c2 = 1.0, 0.0
        else:
            c1, c2 = 1.0, 1.0 / self.r
        w = self._w
        if w:
            # mixture: (1-w) Var_base + w (1-w) mu^2
            c1, c2 = (1.0 - w) * c1, (1.0 - w) * c2 + w * (1.0 - w)
        return c1, c2

    def mean(self, mu):
        return (1.0 - self._w) * np.asarray(mu, dtype=float)

    def variance(self, mu):
        mu = np.asarray(mu, dtype=float)
        c1, c2 = self.variance_coefficients()
        return c1 * mu + c2 * mu * mu

    def third_central_moment(self, mu):
        mu = np.asarray(mu, dtype=float)
        fam = self.family.base
        if fam is Family.BERNOULLI:
            var, k3 = mu * (1 - mu), mu * (1 - mu) * (1 - 2 * mu)
        elif fam is Family.POISSON:
            var, k3 = mu, mu
        else:
            var = mu * (1 + mu / self.r)
            k3 = var * (1 + 2 * mu / self.r)
        w = self._w
        if not w:
            return k3
        # raw moments of the base, scaled by the non-inflated mass
        m1 = (1 - w) * mu
        m2 = (1 - w) * (var + mu * mu)
        m3 = (1 - w) * (k3 + 3 * mu * var + mu**3)
        return m3 - 3 * m1 * m2 + 2 * m1**3

    def logpmf(self, k, mu):
        """Log-probability of count ``k`` at base mean ``mu`` (vectorised)."""
        k = np.asarray(k, dtype=float)
        mu = np.asarray(mu, dtype=float)
        fam = self.family.base
        if fam is Family.BERNOULLI:
            return xlogy(k, mu) + xlogy(1 - k, 1 - mu)
        if fam is Family.POISSON:
            base = xlogy(k, mu) - mu - gammaln(k + 1)
            base0 = -mu
        else:
            r = self.r
            log_q = -np.log1p(mu / r)  # log(r / (r + mu))
            base0 = r * log_q
            base = (
                gammaln(k + r) - gammaln(r) - gammaln(k + 1)
                + base0 + xlogy(k, mu) - k * np.log(r + mu)
            )
        w = self._w
        if not w:
            return base
        zero = np.log(w + (1 - w) * np.exp(base0))
        return np.where(k == 0, zero, math.log1p(-w) + base)

    def sample(self, mu, rng: np.random.Generator) -> np.ndarray:
        """Independent draws, one per entry of ``mu``.

        The base draw always comes first in the generator stream, so a
        zero-inflated model with ``omega = 0`` reproduces the base family.
        """
        mu = np.asarray(mu, dtype=float)
        fam = self.family.base
        if fam is Family.BERNOULLI:
            x = (rng.random(mu.shape) < mu).astype(float)
        elif fam is Family.POISSON:
            x = rng.poisson(mu).astype(float)
        else:
            x = rng.poisson(rng.gamma(self.r, mu / self.r)).astype(float)
        if self.family.zero_inflated:
            x[rng.random(mu.shape) < self.omega] = 0.0
        return x

    def describe(self) -> str:
        parts = [self.family.value]
        if self.r is not None:
            parts.append(f"r={self.r:.6g}")
        if self.omega is not None:
            parts.append(f"omega={self.omega:.6g}")
        return " ".join(parts)
