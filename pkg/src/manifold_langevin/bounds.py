"""Closed-form log-Sobolev, diameter, spectral-gap and sampling-error bounds.

The manifold bounds grow like ``exp(exp(...))`` in realistic regimes, so every
evaluator works with natural logarithms and only exponentiates when the result
fits in a double.
"""

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, ParameterError

logger = logging.getLogger(__name__)

# exp(x) is representable for x below roughly 709.78
LOG_REPRESENTABLE = 700.0

# domain-override messages already logged (curve sweeps would repeat them per point)
_warned = set()


@dataclass
class BoundReport:
    name: str
    inputs: dict
    log_value: float
    provenance: dict = field(default_factory=dict)
    overrides: list = field(default_factory=list)

    @property
    def value(self):
        if self.log_value < LOG_REPRESENTABLE:
            return math.exp(self.log_value)
        return None

    def as_row(self):
        row = {"bound": self.name, "log_value": self.log_value, "value": self.value}
        row.update({f"in_{k}": v for k, v in self.inputs.items()})
        row.update(self.provenance)
        row["overrides"] = ";".join(self.overrides)
        return row


def _domain(ok, message, allow, overrides):
    if ok:
        return
    if not allow:
        raise DomainError(message)
    if message not in _warned:
        _warned.add(message)
        logger.warning("bound evaluated outside its domain: %s", message)
    overrides.append(message)


def _logaddexp(a, b):
    return float(np.logaddexp(a, b))


def _log_two_sigma_sq(sigma):
    return math.log(2 * sigma**2) if sigma > 0 else -math.inf


def cls_gaussian(sigma):
    """Log-Sobolev constant of ``N(0, sigma^2 I)``."""
    if sigma < 0:
        raise ParameterError("sigma must be nonnegative")
    return 2 * sigma**2


def cls_convolved(c, sigma):
    """Log-Sobolev constant bound after convolving with ``N(0, sigma^2 I)``."""
    if c < 0 or sigma < 0:
        raise ParameterError("c and sigma must be nonnegative")
    return 2 * sigma**2 + c


def smoothed_score_constants(rho, sigma):
    """Lipschitz constant of the smoothed score and its dissipativity pair ``(m, b)``."""
    if not sigma > 0:
        raise ParameterError("sigma must be positive")
    if rho < 0:
        raise ParameterError("rho must be nonnegative")
    return max(rho**2, sigma**2) / sigma**4, 1 / (2 * sigma**2), rho**2 / (2 * sigma**2)


def diameter_bound(K, dprime, kappa, allow_out_of_domain=False, overrides=None):
    """Upper bound on the diameter from curvature ``-K`` and Kato constant ``kappa``.

    ``8 sqrt(K (d'-1)) (5 + log(1024 kappa / sqrt(K (d'-1))))``, never below
    ``2 pi``.
    """
    overrides = [] if overrides is None else overrides
    _domain(K > 1, f"K={K} must exceed 1", allow_out_of_domain, overrides)
    if dprime < 2:
        raise DomainError("intrinsic dimension must be at least 2")
    if not kappa > 0:
        raise DomainError("kappa must be positive")
    if not K > 0:
        raise DomainError("K must be positive to evaluate the diameter formula")
    root = math.sqrt(K * (dprime - 1))
    return max(8 * root * (5 + math.log(1024 * kappa / root)), 2 * math.pi)


def spectral_gap_bound(K, dprime, D):
    """``log(1/lambda*) <= log(D^2/pi^2) + (D/2) sqrt(K (d'-1))``."""
    if D < 0 or K < 0:
        raise ParameterError("D and K must be nonnegative")
    if dprime < 2:
        raise DomainError("intrinsic dimension must be at least 2")
    if D == 0:
        return -math.inf
    return 2 * math.log(D / math.pi) + 0.5 * D * math.sqrt(K * (dprime - 1))


def cls_general_log(sigma, dprime, K, L, B, kappa=None, D_override=None, allow_out_of_domain=False):
    """Log-Sobolev bound for a tilted density ``e^{-V}`` on the manifold, then smoothed.

    ``c <= 2 (d'+1) D^2 exp(4 + (d'+1) D^2 (2K + 2L + B^2))`` plus ``2 sigma^2``.
    ``L`` bounds the Hessian of ``V`` and ``B`` its gradient. No ambient
    dimension enters.
    """
    overrides = []
    inputs = {"sigma": sigma, "dprime": dprime, "K": K, "L": L, "B": B, "kappa": kappa}
    _domain(K > 1 / dprime, f"K={K} must exceed 1/d'", allow_out_of_domain, overrides)
    if min(L, B) < 0 or sigma < 0:
        raise ParameterError("L, B and sigma must be nonnegative")
    if D_override is not None:
        if not D_override > 0:
            raise DomainError("diameter override must be positive")
        D = float(D_override)
        inputs["D_override"] = D
    else:
        if kappa is None:
            raise ParameterError("kappa is required unless D_override is given")
        D = diameter_bound(K, dprime, kappa, allow_out_of_domain, overrides)
    exponent = 4 + (dprime + 1) * D**2 * (2 * K + 2 * L + B**2)
    log_manifold = math.log(2 * (dprime + 1) * D**2) + exponent
    log_value = _logaddexp(log_manifold, _log_two_sigma_sq(sigma))
    provenance = {
        "D": D,
        "K_prime": K + L,
        "R_bound": K + L + B**2,
        "log_manifold_term": log_manifold,
    }
    return BoundReport("cls_general", inputs, log_value, provenance, overrides)


def cls_uniform_log(sigma, dprime, K, kappa, allow_out_of_domain=False):
    """Log-Sobolev bound for the uniform (volume) measure, then smoothed.

    ``max((8/lam)(1 + (K^2+1) D^2), 8/lam + 1) + 2 sigma^2`` with ``1/lam``
    from :func:`spectral_gap_bound` and ``D`` from :func:`diameter_bound`.
    """
    overrides = []
    _domain(K > 1, f"K={K} must exceed 1", allow_out_of_domain, overrides)
    _domain(kappa > 1, f"kappa={kappa} must exceed 1", allow_out_of_domain, overrides)
    if sigma < 0:
        raise ParameterError("sigma must be nonnegative")
    D = diameter_bound(K, dprime, kappa, True, [])
    log_inv_gap = spectral_gap_bound(K, dprime, D)
    log8 = math.log(8.0)
    first = log8 + log_inv_gap + math.log1p((K**2 + 1) * D**2)
    second = _logaddexp(log8 + log_inv_gap, 0.0)
    log_manifold = max(first, second)
    log_value = _logaddexp(log_manifold, _log_two_sigma_sq(sigma))
    inputs = {"sigma": sigma, "dprime": dprime, "K": K, "kappa": kappa}
    provenance = {"D": D, "log_inv_gap": log_inv_gap, "log_manifold_term": log_manifold}
    return BoundReport("cls_uniform", inputs, log_value, provenance, overrides)


def w2_decay_bound(w0, c_ls, t):
    """``w0 * exp(-2 t / c_ls)``."""
    if not c_ls > 0:
        raise ParameterError("c_ls must be positive")
    if w0 < 0 or t < 0:
        raise ParameterError("w0 and t must be nonnegative")
    return w0 * math.exp(-2 * t / c_ls)


def sampling_error_terms(sigma, d, w0, t, c_ls, eps, b, L, p_inf, C=1.0, allow_out_of_domain=False):
    """The three summands of the sampling-error bound, the last as a log.

    Returns ``(smoothing, mixing, log_score_error)``; ``log_score_error`` is
    ``-inf`` when the term vanishes.
    """
    overrides = []
    _domain(d >= 3, f"ambient dimension d={d} must be at least 3", allow_out_of_domain, overrides)
    if min(sigma, w0, t, eps, b, p_inf, C) < 0 or not c_ls > 0:
        raise ParameterError("bound inputs must be nonnegative and c_ls positive")
    smoothing = sigma * math.sqrt(d)
    mixing = w2_decay_bound(w0, c_ls, t)
    if eps == 0 or t == 0 or C == 0:
        return smoothing, mixing, -math.inf
    log_a = math.log(eps * t)
    log_b = (
        (0.5 - 1.0 / d) * math.log(p_inf)
        + 0.25 * L * math.sqrt(d) * t
        + 0.5 * math.log(t)
        + math.log(eps) / d
    ) if p_inf > 0 else -math.inf
    log_third = math.log(C) + 0.5 * math.log((b + d) * t) + 0.25 * _logaddexp(log_a, log_b)
    return smoothing, mixing, log_third


def sampling_error_bound(sigma, d, w0, t, c_ls, eps, b, L, p_inf, C=1.0, allow_out_of_domain=False):
    """Bound on ``W2`` between the sampler at time ``t`` and the data distribution.

    ``sigma sqrt(d) + w0 e^{-2t/c} + C sqrt((b+d) t) (eps t + p_inf^{1/2-1/d}
    e^{L sqrt(d) t / 4} sqrt(t) eps^{1/d})^{1/4}``; ``inf`` if it overflows.
    """
    smoothing, mixing, log_third = sampling_error_terms(
        sigma, d, w0, t, c_ls, eps, b, L, p_inf, C, allow_out_of_domain
    )
    third = math.exp(log_third) if log_third < LOG_REPRESENTABLE else math.inf
    return smoothing + mixing + third


def sampling_error_argmin(ts, **params):
    """Grid minimizer of :func:`sampling_error_bound` over ``ts``; returns ``(t, value, values)``."""
    values = np.array([sampling_error_bound(t=float(t), **params) for t in ts])
    k = int(np.argmin(values))
    return float(ts[k]), float(values[k]), values


def bounds_for_manifold(summary, sigma, L=0.0, B=0.0, allow_out_of_domain=True):
    """Evaluate the manifold bounds from measured geometry.

    ``summary`` is a geometry summary carrying ``intrinsic_dim``, ``K_eff``,
    ``kappa`` and ``diameter_empirical``.
    """
    dprime, K, kappa = summary.intrinsic_dim, summary.K_eff, summary.kappa
    reports = []
    kappa_pos = max(kappa, 1e-12)
    if dprime >= 2:
        D = diameter_bound(K, dprime, kappa_pos, allow_out_of_domain)
        reports.append(
            BoundReport(
                "diameter",
                {"K": K, "dprime": dprime, "kappa": kappa},
                math.log(D),
                {"D": D, "D_empirical": summary.diameter_empirical},
            )
        )
        reports.append(
            cls_general_log(sigma, dprime, K, L, B, kappa_pos, allow_out_of_domain=allow_out_of_domain)
        )
        reports.append(cls_uniform_log(sigma, dprime, K, kappa_pos, allow_out_of_domain))
    reports.append(
        cls_general_log(
            sigma, max(dprime, 1), K, L, B, D_override=max(summary.diameter_empirical, 1e-12),
            allow_out_of_domain=allow_out_of_domain,
        )
    )
    reports[-1].name = "cls_general_measured_D"
    return reports
