"""Decoherence functions, dephasing channels, and their convex mixtures.

A channel here is the generalized Pauli (MUB dephasing) channel

    E_alpha^p(rho) = (1 - p) rho + (p/(d-1)) sum_{k=1}^{d-1} U_alpha^k rho U_alpha^{k+},

driven by a time-dependent mixing probability ``p(t)`` with ``p(0) = 0``.
On the operator ``U_beta^m`` it acts by the scalar

    lambda = 1                      for beta == alpha,
    lambda = 1 - (d/(d-1)) p(t)     for beta != alpha,

which is everything the spectral layer needs to know about it.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy.interpolate import PchipInterpolator

from . import exprcalc
from .exprcalc import DomainError
from .mubgen import DIMENSION_RANGE, is_prime

__all__ = [
    "DecoherenceFunction",
    "ExpRelax",
    "Expression",
    "SampledGrid",
    "ChannelSpec",
    "MixtureComponent",
    "MixtureSpec",
    "ValidationIssue",
    "MixtureValidation",
    "MixtureValidationError",
    "validate_mixture",
    "single_channel_eigenvalues",
]

_P_INITIAL_TOL = 1e-9
_WEIGHT_SUM_TOL = 1e-12
_RANGE_SLACK = 1e-12


class DecoherenceFunction:
    """Base class: a mixing probability ``p(t)`` with ``p(0) = 0``."""

    def value_and_derivative(self, t):
        """Return ``(p(t), dp/dt)``; floats for scalar ``t``, arrays for arrays."""
        raise NotImplementedError

    def value(self, t):
        return self.value_and_derivative(t)[0]

    def describe(self) -> dict:
        """JSON/config-ready description of the function."""
        raise NotImplementedError


@dataclass(frozen=True)
class ExpRelax(DecoherenceFunction):
    """Exponential relaxation ``p(t) = scale * (1 - exp(-rate*t))``, rate > 0."""

    scale: float
    rate: float

    def __post_init__(self):
        if not self.rate > 0:
            raise ValueError(f"relaxation rate must be positive, got {self.rate!r}")

    def value_and_derivative(self, t):
        arr = np.asarray(t, dtype=float)
        decay = np.exp(-self.rate * arr)
        p = self.scale * (1.0 - decay)
        dp = self.scale * self.rate * decay
        if arr.ndim == 0:
            return float(p), float(dp)
        return p, dp

    def as_expression(self) -> str:
        return f"{self.scale!r}*(1-exp(-{self.rate!r}*t))"

    def describe(self) -> dict:
        return {"kind": "exp_relax", "scale": self.scale, "rate": self.rate}


@dataclass(frozen=True)
class Expression(DecoherenceFunction):
    """A decoherence function given by an expression in ``t`` (see ``exprcalc``)."""

    source: str

    def __post_init__(self):
        ast = exprcalc.parse(self.source)
        object.__setattr__(self, "_ast", ast)
        p0 = exprcalc.eval_dual(ast, 0.0).value
        if abs(p0) > _P_INITIAL_TOL:
            raise ValueError(
                f"decoherence function must vanish at t=0, got p(0)={p0:g} "
                f"for {self.source!r}"
            )

    @property
    def ast(self) -> exprcalc.ExprAst:
        return self._ast  # type: ignore[attr-defined]

    def value_and_derivative(self, t):
        dual = exprcalc.eval_dual(self.ast, t)
        return dual.value, dual.derivative

    def describe(self) -> dict:
        return {"kind": "expression", "formula": self.source}


@dataclass(frozen=True, eq=False)
class SampledGrid(DecoherenceFunction):
    """Sampled values on an ascending time grid, monotone-cubic interpolated.

    Interpolation is shape-preserving cubic (PCHIP); the derivative comes from
    the interpolant itself, not from finite differences of the samples.
    Evaluation outside the sampled range is a domain error.
    """

    times: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if times.ndim != 1 or values.ndim != 1 or times.size != values.size:
            raise ValueError("times and values must be 1-d arrays of equal length")
        if times.size < 3:
            raise ValueError("need at least 3 samples")
        if not np.all(np.isfinite(times)) or not np.all(np.isfinite(values)):
            raise ValueError("samples must be finite")
        if times[0] != 0.0:
            raise ValueError(f"sample times must start at 0, got {times[0]!r}")
        if not np.all(np.diff(times) > 0):
            raise ValueError("sample times must be strictly ascending")
        if abs(values[0]) > _P_INITIAL_TOL:
            raise ValueError(f"decoherence function must vanish at t=0, got {values[0]!r}")
        times.setflags(write=False)
        values.setflags(write=False)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "values", values)
        interp = PchipInterpolator(times, values, extrapolate=False)
        object.__setattr__(self, "_interp", interp)
        object.__setattr__(self, "_dinterp", interp.derivative())

    def value_and_derivative(self, t):
        arr = np.asarray(t, dtype=float)
        lo, hi = self.times[0], self.times[-1]
        out = (arr < lo - _RANGE_SLACK) | (arr > hi + _RANGE_SLACK)
        if np.any(out):
            bad = float(np.atleast_1d(arr)[np.atleast_1d(out)][0])
            raise DomainError("time outside sampled range", bad)
        clipped = np.clip(arr, lo, hi)
        p = self._interp(clipped)  # type: ignore[attr-defined]
        dp = self._dinterp(clipped)  # type: ignore[attr-defined]
        if arr.ndim == 0:
            return float(p), float(dp)
        return np.asarray(p, dtype=float), np.asarray(dp, dtype=float)

    def describe(self) -> dict:
        return {
            "kind": "samples",
            "times": [float(x) for x in self.times],
            "values": [float(x) for x in self.values],
        }


@dataclass(frozen=True)
class ChannelSpec:
    """One dephasing channel: dimension, basis label in 1..d+1, and ``p(t)``."""

    dimension: int
    basis: int
    p: DecoherenceFunction

    def __post_init__(self):
        lo, hi = DIMENSION_RANGE
        if self.dimension < lo or self.dimension > hi or not is_prime(self.dimension):
            raise ValueError(
                f"channel dimension must be a prime in [{lo}, {hi}], got {self.dimension}"
            )
        if not 1 <= self.basis <= self.dimension + 1:
            raise ValueError(
                f"basis label must lie in 1..{self.dimension + 1}, got {self.basis}"
            )
        if not isinstance(self.p, DecoherenceFunction):
            raise TypeError("p must be a DecoherenceFunction")


@dataclass(frozen=True)
class MixtureComponent:
    weight: float
    channel: ChannelSpec


@dataclass(frozen=True)
class MixtureSpec:
    """A convex mixture of dephasing channels (repeated basis labels allowed).

    The constructor is permissive so that invalid mixtures can be built and
    fed to :func:`validate_mixture`, which reports all violations.
    """

    dimension: int
    components: Tuple[MixtureComponent, ...]

    def __post_init__(self):
        comps = []
        for entry in self.components:
            if isinstance(entry, MixtureComponent):
                comps.append(entry)
            else:
                weight, channel = entry
                comps.append(MixtureComponent(float(weight), channel))
        object.__setattr__(self, "components", tuple(comps))

    @property
    def functions(self) -> Tuple[DecoherenceFunction, ...]:
        return tuple(c.channel.p for c in self.components)

    def has_sampled_functions(self) -> bool:
        return any(isinstance(f, SampledGrid) for f in self.functions)


@dataclass(frozen=True)
class ValidationIssue:
    kind: str  # 'weight', 'weight-sum', 'dimension', 'p-range', 'p-domain'
    message: str
    component: Optional[int] = None  # 1-based component index
    time: Optional[float] = None


@dataclass(frozen=True)
class MixtureValidation:
    passed: bool
    structural_ok: bool
    p_in_range: bool
    issues: Tuple[ValidationIssue, ...]


class MixtureValidationError(ValueError):
    """Raised by consumers that require a structurally valid mixture."""

    def __init__(self, issues: Sequence[ValidationIssue]):
        text = "; ".join(i.message for i in issues)
        super().__init__(f"invalid mixture: {text}")
        self.issues = tuple(issues)


def _refine_crossing(f, lo: float, hi: float, flo: float, xtol: float = 1e-12) -> float:
    """Bisect ``f`` for a sign change on [lo, hi]; ``flo = f(lo)``."""
    for _ in range(200):
        if hi - lo <= xtol:
            break
        mid = 0.5 * (lo + hi)
        fmid = f(mid)
        if fmid == 0.0:
            return mid
        if (flo < 0) == (fmid < 0):
            lo, flo = mid, fmid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def validate_mixture(spec: MixtureSpec, grid) -> MixtureValidation:
    """Check the weight simplex, dimension consistency, and ``p`` ranges.

    Range violations are located to the first offending time (refined between
    the bracketing grid points).  The report never raises; domain errors during
    evaluation become issues.
    """
    times = np.asarray(getattr(grid, "times", grid), dtype=float)
    issues: list[ValidationIssue] = []
    weights = [c.weight for c in spec.components]
    if not spec.components:
        issues.append(ValidationIssue("weight-sum", "mixture has no components"))
    for i, w in enumerate(weights, start=1):
        if w < 0:
            issues.append(
                ValidationIssue("weight", f"component {i} weight {w!r} is negative", i)
            )
    total = float(sum(weights))
    if spec.components and abs(total - 1.0) > _WEIGHT_SUM_TOL:
        issues.append(
            ValidationIssue(
                "weight-sum", f"weights sum to {total!r}, expected 1 within {_WEIGHT_SUM_TOL}"
            )
        )
    for i, comp in enumerate(spec.components, start=1):
        if comp.channel.dimension != spec.dimension:
            issues.append(
                ValidationIssue(
                    "dimension",
                    f"component {i} has dimension {comp.channel.dimension}, "
                    f"mixture declares {spec.dimension}",
                    i,
                )
            )
    structural_ok = not issues

    p_in_range = True
    for i, comp in enumerate(spec.components, start=1):
        func = comp.channel.p
        try:
            p, _ = func.value_and_derivative(times)
        except DomainError as err:
            p_in_range = False
            issues.append(
                ValidationIssue("p-domain", f"component {i}: {err}", i, err.t)
            )
            continue
        p = np.atleast_1d(p)
        low = p < -_RANGE_SLACK
        high = p > 1.0 + _RANGE_SLACK
        for bad, threshold, label in ((high, 1.0, "above 1"), (low, 0.0, "below 0")):
            if not np.any(bad):
                continue
            p_in_range = False
            k = int(np.argmax(bad))
            t_bad = float(times[k])
            if k > 0 and not bad[k - 1]:
                scalar = lambda s: float(func.value(s)) - threshold
                t_bad = _refine_crossing(
                    scalar, float(times[k - 1]), float(times[k]), scalar(float(times[k - 1]))
                )
            issues.append(
                ValidationIssue(
                    "p-range",
                    f"component {i}: p(t) leaves [0,1] ({label}) near t={t_bad:.12g}",
                    i,
                    t_bad,
                )
            )
    return MixtureValidation(
        passed=structural_ok and p_in_range,
        structural_ok=structural_ok,
        p_in_range=p_in_range,
        issues=tuple(issues),
    )


def single_channel_eigenvalues(channel: ChannelSpec, t):
    """Per-label eigenvalues of one channel at time(s) ``t``.

    Label ``beta == channel.basis`` gives 1; every other label gives
    ``1 - (d/(d-1)) p(t)``.  Returns shape ``(d+1,)`` for scalar ``t`` and
    ``(d+1, n)`` for an array of times.  Out-of-range ``p`` is not an error
    here; callers flag validity separately.
    """
    d = channel.dimension
    arr = np.asarray(t, dtype=float)
    p, _ = channel.p.value_and_derivative(arr)
    off = 1.0 - (d / (d - 1.0)) * np.atleast_1d(np.asarray(p, dtype=float))
    lam = np.ones((d + 1, off.size))
    for beta in range(d + 1):
        if beta != channel.basis - 1:
            lam[beta] = off
    if arr.ndim == 0:
        return lam[:, 0]
    return lam
