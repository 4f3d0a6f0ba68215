"""Monte Carlo studies of LP decoding over the binary symmetric channel.

Every trial draws its randomness from a Philox generator keyed by
``(master_seed, trial, stream)``, so a record can be regenerated from those
numbers alone, in any order and under any degree of parallelism.

Each decode is paired with the witness LP and the two must agree: decoding
succeeds exactly when a dual witness with positive slack exists.  A
disagreement raises :class:`InvariantError`.
"""

from __future__ import annotations

import csv
import hashlib
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np
from scipy.stats import binomtest

from .bounds import max_edge_weight, sc_bound
from .decoder import gamma_from_error, lp_decode
from .graphs import (
    CodeParams,
    TannerGraph,
    build_graph_cover,
    build_regular,
    build_spatially_coupled,
    derive_sc_from_cover,
)
from .lp import format_rational
from .witness import (
    WitnessError,
    boosted_budgets,
    excess_budgets,
    extend_witness_with_boost,
    find_dual_witness,
    remove_cycles_and_normalize,
    restrict_witness,
    to_wdag,
    verify_dual_witness,
)

CODE_STREAM, ERROR_STREAM, EXCESS_STREAM = 0, 1, 2


class ExperimentError(ValueError):
    pass


class InvariantError(AssertionError):
    """An exact, non-statistical invariant failed."""


# --- randomness -----------------------------------------------------------------------


def trial_rng(master_seed: int, trial: int, stream: int = ERROR_STREAM) -> np.random.Generator:
    ss = np.random.SeedSequence(master_seed, spawn_key=(trial, stream))
    return np.random.Generator(np.random.Philox(ss))


def sample_bsc(n: int, epsilon: float, seed) -> np.ndarray:
    """``n`` i.i.d. Bernoulli(epsilon) bits.

    ``seed`` is a Generator, a ``(master_seed, trial)`` pair or an integer.
    The bits are ``u < epsilon`` for uniforms ``u``, so with a fixed seed the
    error set only grows with ``epsilon``.
    """
    if not 0 <= epsilon <= 1:
        raise ExperimentError(f"epsilon {epsilon} outside [0, 1]")
    if isinstance(seed, tuple):
        rng = trial_rng(*seed)
    elif isinstance(seed, np.random.Generator):
        rng = seed
    else:
        rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))
    return (rng.random(n) < epsilon).astype(np.int8)


def digest(bits: Sequence[int]) -> str:
    return hashlib.sha1(bytes(int(b) for b in bits)).hexdigest()[:12]


# --- ensembles ------------------------------------------------------------------------


@dataclass(frozen=True)
class Ensemble:
    """A code ensemble: ``kind`` is Regular, SC, GC, DerivedSC or Fixed.

    Regular uses ``(d_v, d_c, n)``; SC and GC use ``params``; DerivedSC cuts a
    GC sample at position ``cut``; Fixed always returns ``graph``.
    """

    kind: str
    params: CodeParams | None = None
    d_v: int = 3
    d_c: int = 6
    n: int = 0
    cut: int = 0
    graph: TannerGraph | None = None

    def __post_init__(self):
        if self.kind not in ("Regular", "SC", "GC", "DerivedSC", "Fixed"):
            raise ExperimentError(f"unknown ensemble {self.kind!r}")
        if self.kind in ("SC", "GC", "DerivedSC") and self.params is None:
            raise ExperimentError(f"{self.kind} needs CodeParams")
        if self.kind == "Fixed" and self.graph is None:
            raise ExperimentError("Fixed needs a graph")
        if self.kind == "Regular" and (self.n <= 0 or (self.n * self.d_v) % self.d_c):
            raise ExperimentError(f"no ({self.d_v},{self.d_c})-regular graph on {self.n} variables")

    def sample(self, seed: int) -> TannerGraph:
        if self.kind == "Regular":
            return build_regular(self.d_v, self.d_c, self.n, seed)
        if self.kind == "SC":
            return build_spatially_coupled(self.params, seed)
        if self.kind == "GC":
            return build_graph_cover(self.params, seed)
        if self.kind == "DerivedSC":
            return derive_sc_from_cover(build_graph_cover(self.params, seed), self.cut).graph
        return self.graph

    def describe(self) -> str:
        if self.kind == "Regular":
            return f"Regular({self.d_v},{self.d_c}) n={self.n}"
        if self.kind == "Fixed":
            return f"Fixed n={self.graph.n_vars}"
        p = self.params
        tail = f" cut={self.cut}" if self.kind == "DerivedSC" else ""
        return f"{self.kind}(d_v={p.d_v},k={p.k},L={p.L},M={p.M}){tail}"


@dataclass(frozen=True)
class ExperimentConfig:
    ensemble: Ensemble
    epsilon: float
    trials: int
    master_seed: int = 0
    delta: float | None = None
    certify: bool = True  # run the witness LP on every trial

    def __post_init__(self):
        if not 0 < self.epsilon < 0.5:
            raise ExperimentError(f"epsilon must lie in (0, 1/2), got {self.epsilon}")
        if self.trials < 1:
            raise ExperimentError("trials must be positive")


@dataclass(frozen=True)
class TrialRecord:
    trial: int
    code_seed: int
    eps: float
    error_digest: str
    success: bool
    margin: Fraction | None
    alpha_max: Fraction | None
    derived: tuple[bool, ...] = ()

    def row(self) -> dict:
        fmt = lambda x: "" if x is None else format_rational(x)
        return {
            "trial": self.trial,
            "seed": self.code_seed,
            "eps": self.eps,
            "success": int(self.success),
            "margin": fmt(self.margin),
            "alpha_max": fmt(self.alpha_max),
        }


@dataclass(frozen=True)
class RateEstimate:
    error_rate: float
    wilson_ci_95: tuple[float, float]
    trials: int
    failures: int

    @property
    def sigma(self) -> float:
        p = self.error_rate
        return math.sqrt(p * (1 - p) / self.trials)


def wilson(failures: int, trials: int) -> RateEstimate:
    ci = binomtest(failures, trials).proportion_ci(confidence_level=0.95, method="wilson")
    return RateEstimate(failures / trials, (float(ci.low), float(ci.high)), trials, failures)


# --- single trials --------------------------------------------------------------------


@dataclass(frozen=True)
class Outcome:
    success: bool
    margin: Fraction | None
    alpha_max: Fraction | None


def decode_and_certify(graph: TannerGraph, gamma: Sequence, certify: bool = True) -> Outcome:
    """LP decode; with ``certify`` also solve the witness LP and demand agreement."""
    dec = lp_decode(graph, gamma)
    if not certify:
        return Outcome(dec.success, None, None)
    wit = find_dual_witness(graph, gamma)
    if dec.success != (wit.margin > 0):
        raise InvariantError(
            f"decoder says success={dec.success} but the witness margin is {wit.margin}"
        )
    alpha = None
    if wit.weighting is not None:
        h = remove_cycles_and_normalize(to_wdag(graph, wit.weighting, gamma), graph)
        alpha = max_edge_weight(h.weights)
    return Outcome(dec.success, wit.margin, alpha)


def code_seed(master_seed: int, trial: int) -> int:
    return int(trial_rng(master_seed, trial, CODE_STREAM).integers(2**63))


def run_trial(config: ExperimentConfig, trial: int) -> TrialRecord:
    seed = code_seed(config.master_seed, trial)
    graph = config.ensemble.sample(seed)
    eta = sample_bsc(graph.n_vars, config.epsilon, (config.master_seed, trial))
    out = decode_and_certify(graph, gamma_from_error(eta), config.certify)
    return TrialRecord(trial, seed, config.epsilon, digest(eta), out.success, out.margin, out.alpha_max)


def _star(args):
    return run_trial(*args)


def run_trials(config: ExperimentConfig, workers: int = 1) -> list[TrialRecord]:
    jobs = [(config, t) for t in range(config.trials)]
    if workers <= 1:
        return [run_trial(*j) for j in jobs]
    with ProcessPoolExecutor(workers) as ex:
        return list(ex.map(_star, jobs, chunksize=max(1, len(jobs) // (4 * workers))))


def estimate_error_rate(config: ExperimentConfig, workers: int = 1) -> tuple[RateEstimate, list[TrialRecord]]:
    records = run_trials(config, workers)
    return wilson(sum(not r.success for r in records), len(records)), records


def write_csv(records: Sequence[TrialRecord], path) -> None:
    with open(path, "w", newline="") as fh:
        out = csv.DictWriter(fh, fieldnames=["trial", "seed", "eps", "success", "margin", "alpha_max"])
        out.writeheader()
        for r in records:
            out.writerow(r.row())


# --- thresholds ---------------------------------------------------------------------


@dataclass(frozen=True)
class ThresholdEstimate:
    """Finite-length surrogate for the LP threshold.

    ``estimate`` is the midpoint of ``[lo, hi]`` where the error rate crosses
    ``target_rate``; ``rate_lo`` and ``rate_hi`` are the bracketing estimates.
    """

    estimate: float
    lo: float
    hi: float
    rate_lo: RateEstimate
    rate_hi: RateEstimate
    target_rate: float
    label: str = "finite-n estimate"


def estimate_threshold(
    ensemble: Ensemble,
    trials_per_point: int,
    target_rate: float = 0.5,
    tol: float = 0.01,
    master_seed: int = 0,
    certify: bool = True,
    workers: int = 1,
    hi: float = 0.4999,
) -> ThresholdEstimate:
    """Bisect on epsilon for the crossing of ``target_rate``.

    All points reuse the same trial seeds, so each trial sees the same code
    and an error set that only grows with epsilon; since adding flips never
    repairs an LP failure, the empirical rate is monotone in epsilon and the
    bisection is well defined.
    """
    if not 0 < target_rate < 1:
        raise ExperimentError("target_rate must lie in (0, 1)")

    def rate(eps):
        cfg = ExperimentConfig(ensemble, eps, trials_per_point, master_seed, certify=certify)
        return estimate_error_rate(cfg, workers)[0]

    lo, r_lo = 0.0, RateEstimate(0.0, (0.0, 0.0), trials_per_point, 0)
    r_hi = rate(hi)
    if r_hi.error_rate < target_rate:
        raise ExperimentError(f"error rate {r_hi.error_rate} at epsilon={hi} stays below the target")
    while hi - lo > tol:
        mid = (lo + hi) / 2
        r = rate(mid)
        if r.error_rate < target_rate:
            lo, r_lo = mid, r
        else:
            hi, r_hi = mid, r
    return ThresholdEstimate((lo + hi) / 2, lo, hi, r_lo, r_hi, target_rate)


# --- LP excess ------------------------------------------------------------------------


@dataclass(frozen=True)
class ExcessReport:
    epsilon: float
    delta: float
    epsilon_prime: float
    trials: int
    observed_prob: float
    q_hat: RateEstimate
    bound: float
    stderr: float

    @property
    def vacuous(self) -> bool:
        return self.bound <= 0

    @property
    def ok(self) -> bool:
        return self.observed_prob >= self.bound - 3 * self.stderr


def lp_excess_experiment(
    code: TannerGraph, epsilon: float, delta: float, trials: int, master_seed: int = 0, certify: bool = True
) -> ExcessReport:
    """Compare P[witness with uniform excess delta/2 at epsilon] with ``1 - 2 q_{eps'} / delta``.

    ``q_{eps'}`` is the LP error rate at ``eps' = eps + (1 - eps) delta``,
    estimated on independent draws.
    """
    eps_p = epsilon + (1 - epsilon) * delta
    for name, x in (("epsilon", epsilon), ("delta", delta), ("epsilon'", eps_p)):
        if not 0 < x < 1:
            raise ExperimentError(f"{name} = {x} outside (0, 1)")
    hits = 0
    for t in range(trials):
        eta = sample_bsc(code.n_vars, epsilon, (master_seed, t))
        b = excess_budgets(gamma_from_error(eta), Fraction(str(delta)))
        hits += find_dual_witness(code, b).margin > 0
    fails = 0
    for t in range(trials):
        eta = sample_bsc(code.n_vars, eps_p, trial_rng(master_seed, t, EXCESS_STREAM))
        fails += not decode_and_certify(code, gamma_from_error(eta), certify).success
    q = wilson(fails, trials)
    p = hits / trials
    bound = 1 - 2 * q.error_rate / delta
    se = math.sqrt(p * (1 - p) / trials + (2 / delta) ** 2 * q.error_rate * (1 - q.error_rate) / trials)
    return ExcessReport(epsilon, delta, eps_p, trials, p, q, bound, se)


# --- graph covers against their derived codes -----------------------------------------------


@dataclass
class MonotonicityReport:
    params: CodeParams
    epsilon: float
    trials: int
    cover_failures: int = 0
    derived_failures: int = 0
    derived_decodes: int = 0
    violations: list[tuple[int, int]] = field(default_factory=list)  # (trial, cut)
    records: list[TrialRecord] = field(default_factory=list)

    @property
    def rate_gc(self) -> float:
        return self.cover_failures / self.trials

    @property
    def rate_sc(self) -> float:
        return self.derived_failures / self.derived_decodes

    @property
    def sigma(self) -> float:
        g, s = self.rate_gc, self.rate_sc
        return math.sqrt(g * (1 - g) / self.trials + s * (1 - s) / self.trials)

    @property
    def aggregate_ok(self) -> bool:
        return self.rate_sc <= self.rate_gc + 3 * self.sigma

    @property
    def ok(self) -> bool:
        return not self.violations and self.aggregate_ok


def gc_sc_monotonicity(
    params: CodeParams, epsilon: float, trials: int, master_seed: int = 0, certify: bool = True
) -> MonotonicityReport:
    """Decode a cover sample and every code derived from it on the same error bits.

    A cover success with a derived failure is a violation.
    """
    rep = MonotonicityReport(params, epsilon, trials)
    L = params.L
    for t in range(trials):
        seed = code_seed(master_seed, t)
        cover = build_graph_cover(params, seed)
        eta = sample_bsc(cover.n_vars, epsilon, (master_seed, t))
        top = decode_and_certify(cover, gamma_from_error(eta), certify)
        rep.cover_failures += not top.success
        outcomes = []
        for i in range(-L, L + 1):
            d = derive_sc_from_cover(cover, i)
            sub = [eta[v] for v in d.survivor_map]
            ok = decode_and_certify(d.graph, gamma_from_error(sub), certify).success
            outcomes.append(ok)
            rep.derived_decodes += 1
            rep.derived_failures += not ok
            if top.success and not ok:
                rep.violations.append((t, i))
        rep.records.append(
            TrialRecord(t, seed, epsilon, digest(eta), top.success, top.margin, top.alpha_max, tuple(outcomes))
        )
    return rep


# --- witness lifting round trip ----------------------------------------------------------


@dataclass
class RoundTripReport:
    trials: int
    decodable: int = 0
    verified: int = 0
    nontrivial: int = 0  # lifts of a nonzero witness
    cap_failures: list[int] = field(default_factory=list)
    failures: list[tuple[int, str]] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures and not self.cap_failures and self.verified == self.decodable


def bound_cap(d_v: int, d_c: int, n: int) -> Fraction:
    """The SC weight bound at length ``n``, rounded down to a multiple of 1/1000."""
    return Fraction(math.floor(sc_bound(d_v, d_c, n) * 1000), 1000)


def boost_roundtrip(
    params: CodeParams, cut_i: int, epsilon: float, trials: int, master_seed: int = 0, boost=None
) -> RoundTripReport:
    """Lift derived-code witnesses to the cover and restrict them back.

    With a derived witness capped at the SC weight bound ``cap``, the special
    variables get budget ``1 + D`` with ``D = d_v * cap + 1`` (or ``boost``
    when given); the lift must verify on the cover and restrict back to the
    original witness.
    """
    rep = RoundTripReport(trials)
    for t in range(trials):
        cover = build_graph_cover(params, code_seed(master_seed, t))
        d = derive_sc_from_cover(cover, cut_i)
        eta = sample_bsc(cover.n_vars, epsilon, (master_seed, t))
        gamma = gamma_from_error(eta)
        sub_gamma = [gamma[v] for v in d.survivor_map]
        free = find_dual_witness(d.graph, sub_gamma)
        if free.margin <= 0:
            continue
        rep.decodable += 1
        cap = bound_cap(params.d_v, params.d_c, d.graph.n_vars)
        capped = find_dual_witness(d.graph, sub_gamma, edge_cap=cap)
        if capped.margin <= 0:
            rep.cap_failures.append(t)
            continue
        D = params.d_v * cap + 1 if boost is None else Fraction(boost)
        rep.nontrivial += any(capped.weighting.values())
        base = list(gamma)
        for v in d.special_vars:
            base[v] = Fraction(1)
        try:
            lifted = extend_witness_with_boost(capped.weighting, cover, d, D)
        except WitnessError as err:
            rep.failures.append((t, f"lift: {err}"))
            continue
        r1 = verify_dual_witness(cover, boosted_budgets(base, d.special_vars, D), lifted)
        back = restrict_witness(cover, lifted, d.special_vars, d)
        r2 = verify_dual_witness(d.graph, sub_gamma, back)
        if not r1.ok:
            rep.failures.append((t, "cover: " + r1.violations[0]))
        elif back != capped.weighting or not r2.ok:
            rep.failures.append((t, "restriction does not return the derived witness"))
        else:
            rep.verified += 1
    return rep
