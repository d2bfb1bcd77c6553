"""Constructions that mix noninvertible dephasing channels into exact
semigroups, closed-form invertibility forecasts for their inputs, and
randomized scanners corroborating the two structural claims behind them:

* qubits: a mixture supported on fewer than all 3 dephasing directions is
  never a semigroup, and any semigroup-yielding weight triple leaves at
  least 2 inputs noninvertible;
* general prime d: the analogous statements with all d+1 directions and at
  least d noninvertible inputs.

Two constructions are provided.  ``build_same_channel_mix`` pairs a channel
with an arbitrary decoherence function q against a compensating partner on
the same basis,

    p(t) = ((d-1)/d) * (1 - e^{-ct}) / (1-a)  -  a * q(t) / (1-a),

mixed with weights (1-a, a) so that (1-a) p + a q = ((d-1)/d)(1 - e^{-ct})
and the off-label eigenvalues are exactly e^{-ct}.  ``build_all_channels_mix``
spreads one exponential profile over all d+1 directions,

    p_i(t) = ((d-1)/(x_i d^2)) * (1 - e^{-ct}),

which keeps every p_i within [0, 1] iff x_i >= (d-1)/d^2.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np

from .channelcore import (
    ChannelSpec,
    DecoherenceFunction,
    ExpRelax,
    Expression,
    MixtureSpec,
    SampledGrid,
)
from .dynamics import (
    TimeGrid,
    default_grid,
    detect_semigroup,
    mixture_eigenvalues,
    rates_from_spectrum,
)
from .mubgen import DIMENSION_RANGE, is_prime

__all__ = [
    "ConstructionError",
    "WeightBoundError",
    "SameChannelRequest",
    "AllChannelsRequest",
    "ChannelForecast",
    "InvertibilityForecast",
    "ScanReport",
    "build_same_channel_mix",
    "build_all_channels_mix",
    "forecast_invertibility",
    "weight_lower_bound",
    "random_decoherence_function",
    "theorem1_scan",
    "theorem2_scan",
]

_SIMPLEX_TOL = 1e-12
_TIE_TOL = 1e-12
_MIN_TRIALS = 100


class ConstructionError(ValueError):
    """A construction produced a decoherence function outside [0, 1]."""

    def __init__(self, message: str, first_violation: Optional[float] = None):
        super().__init__(message)
        self.first_violation = first_violation


class WeightBoundError(ValueError):
    """A mixing weight fell below the admissible minimum (d-1)/d^2."""

    def __init__(self, message: str, index: int, weight: float, bound: float):
        super().__init__(message)
        self.index = index
        self.weight = weight
        self.bound = bound


def _check_dimension(d: int) -> None:
    lo, hi = DIMENSION_RANGE
    if not isinstance(d, (int, np.integer)) or isinstance(d, bool):
        raise ValueError(f"dimension must be an integer, got {d!r}")
    if not (lo <= d <= hi) or not is_prime(int(d)):
        raise ValueError(f"dimension must be a prime in [{lo}, {hi}], got {d}")


@dataclass(frozen=True)
class SameChannelRequest:
    """Pair a channel with decoherence function ``q`` (mixed with weight ``a``)
    against its compensating partner on the same basis (weight ``1-a``)."""

    dimension: int
    rate: float
    a: float
    q: DecoherenceFunction
    basis: int = 1

    def __post_init__(self):
        _check_dimension(self.dimension)
        if not self.rate > 0:
            raise ValueError(f"target rate must be positive, got {self.rate!r}")
        if not 0.0 < self.a < 1.0:
            raise ValueError(f"mixing parameter a must lie in (0, 1), got {self.a!r}")
        if not 1 <= self.basis <= self.dimension + 1:
            raise ValueError(
                f"basis must lie in 1..{self.dimension + 1}, got {self.basis}"
            )


@dataclass(frozen=True)
class AllChannelsRequest:
    """One channel per basis label, weights on the simplex."""

    dimension: int
    rate: float
    weights: Tuple[float, ...]

    def __post_init__(self):
        _check_dimension(self.dimension)
        if not self.rate > 0:
            raise ValueError(f"target rate must be positive, got {self.rate!r}")
        w = tuple(float(x) for x in self.weights)
        if len(w) != self.dimension + 1:
            raise ValueError(
                f"need {self.dimension + 1} weights for dimension "
                f"{self.dimension}, got {len(w)}"
            )
        if any(x < 0 for x in w):
            raise ValueError(f"weights must be nonnegative, got {w}")
        if abs(sum(w) - 1.0) > _SIMPLEX_TOL:
            raise ValueError(f"weights must sum to 1, got sum {sum(w)!r}")
        object.__setattr__(self, "weights", w)


@dataclass(frozen=True)
class ChannelForecast:
    channel: int  # 1-based, equals the basis label
    weight: float
    verdict: str  # 'semigroup' | 'invertible' | 'noninvertible'
    singular_time: Optional[float]


@dataclass(frozen=True)
class InvertibilityForecast:
    dimension: int
    rate: float
    channels: Tuple[ChannelForecast, ...]

    @property
    def noninvertible_count(self) -> int:
        return sum(1 for c in self.channels if c.verdict == "noninvertible")


@dataclass(frozen=True)
class ScanReport:
    seed: int
    trials: int
    family: str
    counterexamples: Tuple[dict, ...]
    passed: bool
    details: dict = field(default_factory=dict)


def weight_lower_bound(d: int) -> float:
    """Smallest admissible mixing weight, (d-1)/d^2."""
    return (d - 1) / d**2


# ---------------------------------------------------------------------------
# Constructions
# ---------------------------------------------------------------------------


def _first_range_violation(f, times: np.ndarray, values: np.ndarray, slack: float):
    """(first violating time, bound crossed) or None; bisection-refined."""
    for k in range(times.size):
        v = values[k]
        if v < -slack or v > 1.0 + slack:
            bound = 0.0 if v < -slack else 1.0
            if k == 0:
                return float(times[0]), bound
            lo, hi = float(times[k - 1]), float(times[k])
            glo = f(lo) - bound
            for _ in range(200):
                if hi - lo <= 1e-12:
                    break
                mid = 0.5 * (lo + hi)
                gmid = f(mid) - bound
                if (glo < 0.0) == (gmid < 0.0):
                    lo, glo = mid, gmid
                else:
                    hi = mid
            return 0.5 * (lo + hi), bound
    return None


def build_same_channel_mix(
    req: SameChannelRequest, grid: Optional[TimeGrid] = None
) -> MixtureSpec:
    """Two-component mixture on one basis whose off-label eigenvalues are
    exactly ``e^{-ct}``.

    The partner function ``p`` is rendered in the same representation as
    ``q``: a closed-form ``q`` yields a closed-form expression, a sampled
    ``q`` yields a densely resampled grid.  ``p`` must stay within [0, 1] on
    the validation grid; otherwise :class:`ConstructionError` reports the
    first violating time.
    """
    d, c, a = req.dimension, float(req.rate), float(req.a)
    f_scale = (d - 1) / d / (1.0 - a)
    q_coeff = a / (1.0 - a)

    if isinstance(req.q, SampledGrid):
        t_max = float(req.q.times[-1])
        times = np.union1d(req.q.times, np.linspace(0.0, t_max, 513))
        q_vals = np.asarray(req.q.value(times), dtype=float)
        p_vals = f_scale * (1.0 - np.exp(-c * times)) - q_coeff * q_vals

        def p_scalar(t: float) -> float:
            return f_scale * (1.0 - np.exp(-c * t)) - q_coeff * float(req.q.value(t))

        hit = _first_range_violation(p_scalar, times, p_vals, 1e-12)
        if hit is not None:
            t_bad, bound = hit
            raise ConstructionError(
                f"constructed p(t) leaves [0, 1] (crosses {bound:g}) "
                f"first at t = {t_bad!r}",
                first_violation=t_bad,
            )
        p: DecoherenceFunction = SampledGrid(times, p_vals)
        check_grid = TimeGrid(times)
    else:
        if isinstance(req.q, ExpRelax):
            q_src = req.q.as_expression()
        elif isinstance(req.q, Expression):
            q_src = req.q.source
        else:
            raise TypeError(
                "q must be ExpRelax, Expression, or SampledGrid, "
                f"got {type(req.q).__name__}"
            )
        p = Expression(
            f"{f_scale!r}*(1-exp(-{c!r}*t)) - {q_coeff!r}*({q_src})"
        )
        check_grid = grid if grid is not None else default_grid(5.0 / c, 1024)
        times = check_grid.times
        vals, _ = p.value_and_derivative(times)
        hit = _first_range_violation(
            lambda t: float(p.value(t)), times, np.asarray(vals), 1e-12
        )
        if hit is not None:
            t_bad, bound = hit
            raise ConstructionError(
                f"constructed p(t) leaves [0, 1] (crosses {bound:g}) "
                f"first at t = {t_bad!r}",
                first_violation=t_bad,
            )

    return MixtureSpec(
        d,
        [
            (1.0 - a, ChannelSpec(d, req.basis, p)),
            (a, ChannelSpec(d, req.basis, req.q)),
        ],
    )


def build_all_channels_mix(req: AllChannelsRequest) -> MixtureSpec:
    """(d+1)-component mixture, one channel per basis, with
    ``p_i = ((d-1)/(x_i d^2)) (1 - e^{-ct})``; all its eigenvalues are
    ``e^{-ct}``.  Weights below ``(d-1)/d^2`` are rejected (such a channel
    would need ``p_i > 1``)."""
    d, c = req.dimension, float(req.rate)
    bound = weight_lower_bound(d)
    components = []
    for i, x in enumerate(req.weights, start=1):
        if x < bound - _TIE_TOL:
            raise WeightBoundError(
                f"weight x_{i} = {x!r} is below the admissible minimum "
                f"(d-1)/d^2 = {bound!r} for d = {d}; every basis label must "
                f"carry at least that much weight",
                index=i,
                weight=float(x),
                bound=bound,
            )
        scale = (d - 1) / (x * d**2)
        components.append((x, ChannelSpec(d, i, ExpRelax(scale, c))))
    return MixtureSpec(d, components)


def forecast_invertibility(req: AllChannelsRequest) -> InvertibilityForecast:
    """Closed-form per-input verdicts for :func:`build_all_channels_mix`.

    Input i has eigenvalue ``1 - (1 - e^{-ct})/(x_i d)`` away from its own
    label: exactly exponential iff ``x_i = 1/d`` (semigroup), positive
    forever iff ``x_i > 1/d`` (invertible), and hitting zero at
    ``t* = ln[1/(1 - d x_i)]/c`` iff ``x_i < 1/d`` (noninvertible).
    """
    d, c = req.dimension, float(req.rate)
    channels = []
    for i, x in enumerate(req.weights, start=1):
        prod = x * d
        if abs(prod - 1.0) <= _TIE_TOL:
            verdict, t_star = "semigroup", None
        elif prod > 1.0:
            verdict, t_star = "invertible", None
        else:
            verdict, t_star = "noninvertible", float(np.log(1.0 / (1.0 - prod)) / c)
        channels.append(ChannelForecast(i, float(x), verdict, t_star))
    return InvertibilityForecast(d, c, tuple(channels))


# ---------------------------------------------------------------------------
# Randomized decoherence functions and scanners
# ---------------------------------------------------------------------------

_FAMILY_DESCRIPTION = (
    "exp_relax(scale,rate) | product/difference expression templates | "
    "257-point sampled grids of the same shapes"
)


def random_decoherence_function(
    rng: np.random.Generator,
    t_max: float = 5.0,
    allow_sampled: bool = True,
) -> DecoherenceFunction:
    """Draw one decoherence function from the scanners' declared family.

    All members are smooth, start at 0, and stay within [0, 1] on
    ``[0, t_max]`` (and beyond, by construction).
    """
    kinds = ["exp_relax", "product", "difference"]
    if allow_sampled:
        kinds.append("sampled")
    kind = kinds[rng.integers(len(kinds))]
    scale = float(rng.uniform(0.2, 1.0))
    rate = float(rng.uniform(0.2, 2.0))
    if kind == "exp_relax":
        return ExpRelax(scale, rate)
    if kind == "product":
        depth = float(rng.uniform(0.1, 0.5))
        freq = float(rng.uniform(0.3, 2.0))
        return Expression(
            f"{scale!r}*(1-exp(-{rate!r}*t))*(1-{depth!r}*sin({freq!r}*t)^2)"
        )
    if kind == "difference":
        m = scale * float(rng.uniform(0.0, 0.8))
        r2 = rate * float(rng.uniform(0.2, 1.0))
        return Expression(
            f"{scale!r}*(1-exp(-{rate!r}*t)) - {m!r}*(1-exp(-{r2!r}*t))"
        )
    times = np.linspace(0.0, t_max, 257)
    vals = scale * (1.0 - np.exp(-rate * times))
    return SampledGrid(times, vals)


def _subset_weights(rng: np.random.Generator, size: int, floor: float = 0.05):
    raw = rng.dirichlet(np.ones(size))
    return floor + (1.0 - floor * size) * raw


def _valid_full_weights(rng: np.random.Generator, d: int) -> np.ndarray:
    """Uniform draw over the admissible region x_i >= (d-1)/d^2, sum = 1."""
    w = rng.dirichlet(np.ones(d + 1))
    return (d - 1) / d**2 + w / d**2


def _scan(d: int, trials: int, seed: int) -> ScanReport:
    if trials < _MIN_TRIALS:
        raise ValueError(f"need at least {_MIN_TRIALS} trials, got {trials}")
    _check_dimension(d)
    grid = default_grid(5.0, 128)
    counterexamples = []
    subset_semigroups = 0
    min_noninvertible = d + 1
    for trial in range(trials):
        rng = np.random.default_rng([seed, trial])
        # Phase (i): proper-subset mixture — must never be a semigroup.
        size = int(rng.integers(2, d + 1))  # 2..d of the d+1 labels
        bases = rng.choice(d + 1, size=size, replace=False) + 1
        weights = _subset_weights(rng, size)
        components = []
        sampled = False
        fams = []
        for basis, weight in zip(bases, weights):
            f = random_decoherence_function(rng)
            sampled = sampled or isinstance(f, SampledGrid)
            fams.append(f.describe()["kind"])
            components.append((float(weight), ChannelSpec(d, int(basis), f)))
        spec = MixtureSpec(d, components)
        traj = mixture_eigenvalues(spec, grid)
        rates = rates_from_spectrum(traj)
        tol = 1e-5 if sampled else 1e-8
        verdict = detect_semigroup(traj, rates, tol)
        if verdict.is_semigroup:
            subset_semigroups += 1
            counterexamples.append(
                {
                    "phase": "subset",
                    "trial": trial,
                    "bases": [int(b) for b in bases],
                    "weights": [float(w) for w in weights],
                    "functions": fams,
                    "max_eigenvalue_deviation": verdict.max_eigenvalue_deviation,
                }
            )
        # Phase (ii): valid full-support construction — needs >= d
        # noninvertible inputs.
        x = _valid_full_weights(rng, d)
        forecast = forecast_invertibility(
            AllChannelsRequest(d, float(rng.uniform(0.5, 2.0)), tuple(x))
        )
        n_noninv = forecast.noninvertible_count
        min_noninvertible = min(min_noninvertible, n_noninv)
        if n_noninv < d:
            counterexamples.append(
                {
                    "phase": "full",
                    "trial": trial,
                    "weights": [float(v) for v in x],
                    "noninvertible": n_noninv,
                }
            )
    # Deterministic extra case: d+1 semigroup inputs, equal weights — the
    # mixture must not be a semigroup (its rates decay in time).
    semi = ExpRelax((d - 1) / d, 1.0)
    equal = MixtureSpec(
        d,
        [(1.0 / (d + 1), ChannelSpec(d, b, semi)) for b in range(1, d + 2)],
    )
    traj = mixture_eigenvalues(equal, grid)
    equal_verdict = detect_semigroup(traj, rates_from_spectrum(traj), 1e-8)
    if equal_verdict.is_semigroup:
        counterexamples.append(
            {"phase": "equal-semigroup-inputs", "trial": -1, "weights": []}
        )
    details = {
        "dimension": d,
        "subset_semigroups": subset_semigroups,
        "min_noninvertible_inputs": min_noninvertible,
        "required_noninvertible_inputs": d,
        "equal_semigroup_mix_is_semigroup": bool(equal_verdict.is_semigroup),
        "all_semigroup_inputs_feasible": False,  # needs (d+1)/d = 1, impossible
    }
    return ScanReport(
        seed=seed,
        trials=trials,
        family=_FAMILY_DESCRIPTION,
        counterexamples=tuple(counterexamples),
        passed=not counterexamples,
        details=details,
    )


def theorem1_scan(trials: int, seed: int) -> ScanReport:
    """Qubit scan: random two-direction mixtures are never semigroups, and
    every valid three-direction construction leaves >= 2 inputs
    noninvertible.  Reproducible from (seed, trials); counterexamples, if
    any, are listed verbatim."""
    return _scan(2, trials, seed)


def theorem2_scan(d: int, trials: int, seed: int) -> ScanReport:
    """Dimension-d scan: random proper-subset mixtures are never semigroups,
    and every valid full construction leaves >= d inputs noninvertible."""
    return _scan(d, trials, seed)
