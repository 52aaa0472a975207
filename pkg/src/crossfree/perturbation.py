"""First- and second-order perturbative quantities of transformed models.

All energies here describe the small-``lam`` expansion of the lowest
eigenstate lying over a final configuration ``alpha``:
``E(lam) = E0 + E1 lam + E2 lam**2 + ...``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

from .gadgets import GadgetParams, TransformReport, lift_config, unitize, zero_cost_extension
from .ising import (
    IsingModel,
    SpinConfiguration,
    brute_force,
    evaluate_energy,
    single_flip_degenerate_qubits,
)


class PerturbationInconsistency(RuntimeError):
    """Flip-cost census disagrees with the satisfied-term count."""


class ConstructionViolated(RuntimeError):
    pass


def satisfied_weight(model: IsingModel, config) -> tuple[int, Fraction]:
    """Count and total ``|coeff|`` of terms contributing negatively at ``config``."""
    count, weight = 0, Fraction(0)
    for t in model.terms:
        if t.contribution(config) < 0:
            count += 1
            weight += abs(t.coeff)
    return count, weight


# ---------------------------------------------------------------------------
# second-order bound


def binomial_sum(a: int, b) -> float:
    """``2**-a * sum_k C(a, k) / (1 + 2 k b)``, compensated summation."""
    if a < 0:
        raise ValueError("a must be nonnegative")
    b = float(b)
    if a <= 60:
        parts = [math.comb(a, k) / (2.0**a * (1.0 + 2.0 * k * b)) for k in range(a + 1)]
    else:
        log2a = a * math.log(2.0)
        parts = [
            math.exp(math.lgamma(a + 1) - math.lgamma(k + 1) - math.lgamma(a - k + 1) - log2a) / (1.0 + 2.0 * k * b)
            for k in range(a + 1)
        ]
    return math.fsum(parts)


@dataclass(frozen=True)
class SecondOrderBound:
    a: int
    b: float
    unsat: int
    E2_orig_mag: float
    binomial_sum: float
    bound: float
    asymptotic: float


def second_order_bound(a: int, b, unsat: int, E2_orig_mag: float, added_deltas=None) -> SecondOrderBound:
    """Upper bound on ``|E2|`` for a transformed state.

    ``added_deltas`` lists delta for every added qubit that is *not* at
    degeneracy; it defaults to ``a * unsat`` unit entries.
    """
    if a < 1:
        raise ValueError("a must be at least 1")
    if not float(b) > 0:
        raise ValueError("b must be positive")
    if unsat < 0:
        raise ValueError("unsat must be nonnegative")
    if added_deltas is None:
        added_deltas = [1.0] * (a * unsat)
    s = binomial_sum(a, b)
    tail = math.fsum(float(d) ** 2 / (2.0 * float(b)) for d in added_deltas)
    return SecondOrderBound(a, float(b), unsat, float(E2_orig_mag), s, float(E2_orig_mag) * s + tail, 1.0 / (a * float(b)))


# ---------------------------------------------------------------------------
# per-state profile


@dataclass
class PerturbationProfile:
    state: SpinConfiguration
    satisfied: int
    E0: Fraction
    E1: Fraction
    census: int
    census_qubits: list[int]
    m: int
    second_order: SecondOrderBound | None = None

    @property
    def second_order_bound(self) -> float:
        return self.second_order.bound if self.second_order else math.nan

    def to_dict(self) -> dict:
        out = {
            "state": str(self.state),
            "satisfied": self.satisfied,
            "m": self.m,
            "E0": str(self.E0),
            "E1": str(self.E1),
            "census": self.census,
            "census_qubits": self.census_qubits,
        }
        if self.second_order:
            so = self.second_order
            out["second_order"] = {
                "binomial_sum": so.binomial_sum,
                "bound": so.bound,
                "asymptotic_1_over_ab": so.asymptotic,
                "E2_orig_mag": so.E2_orig_mag,
            }
        return out


def profile(
    original_model: IsingModel,
    transformed: IsingModel,
    report: TransformReport,
    config,
    E2_orig_mag: float | None = None,
) -> PerturbationProfile:
    """E0, E1 and degeneracy census of ``config`` after the construction.

    ``original_model`` is the model the gadgets were attached to. The census
    comes from exact flip costs on ``transformed``; it must equal ``a`` times
    the number of satisfied terms, otherwise the model had single-flip
    degeneracies of its own.
    """
    params = report.params
    if params is None:
        raise ValueError("report carries no gadget parameters")
    state = lift_config(config, report)
    satisfied, weight = satisfied_weight(original_model, state)
    E0 = evaluate_energy(original_model, state) - original_model.offset
    if original_model.is_unit and E0 != original_model.m - 2 * satisfied:
        raise PerturbationInconsistency("E0 does not equal m - 2s")

    full = zero_cost_extension(transformed, report, state)
    census_qubits = sorted(single_flip_degenerate_qubits(transformed, full))
    E1 = -sum((transformed.delta[q] for q in census_qubits), Fraction(0))
    if len(census_qubits) != params.a * satisfied or E1 != -params.a * weight:
        raise PerturbationInconsistency(
            f"census {len(census_qubits)} at {state} but a*s = {params.a * satisfied}; "
            "was the ferro-pair pass skipped on a flip-degenerate model?"
        )

    census_set = set(census_qubits)
    added_nondegenerate = [
        transformed.delta[q] for q in range(report.original_qubits, transformed.num_qubits) if q not in census_set
    ]
    if E2_orig_mag is None:
        E2_orig_mag = original_model.m * float(max(original_model.delta, default=Fraction(1))) ** 2
    bound = second_order_bound(params.a, params.b, original_model.m - satisfied, E2_orig_mag, added_nondegenerate)
    return PerturbationProfile(state, satisfied, E0, E1, len(census_qubits), census_qubits, original_model.m, bound)


# ---------------------------------------------------------------------------
# slope ordering


@dataclass
class SlopeMargin:
    global_state: SpinConfiguration
    local_state: SpinConfiguration
    E1_global: Fraction
    E1_local: Fraction

    @property
    def margin(self) -> Fraction:
        return self.E1_local - self.E1_global


@dataclass
class SlopeReport:
    a: int
    rows: list[SlopeMargin] = field(default_factory=list)

    @property
    def min_margin(self) -> Fraction | None:
        return min((r.margin for r in self.rows), default=None)


def slope_divergence_check(original_model: IsingModel, params: GadgetParams, limit: int = 24) -> SlopeReport:
    """First-order slopes of every global minimum against every non-global local minimum.

    Raises :class:`ConstructionViolated` if some local minimum would descend
    at least as fast as a global one.
    """
    unit, _ = unitize(original_model)
    bf = brute_force(original_model, limit=limit)
    ground = set(int(i) for i in bf.ground_indices)
    n = original_model.num_qubits

    def slope(idx: int) -> Fraction:
        cfg = SpinConfiguration.from_index(idx, n)
        return -params.a * satisfied_weight(unit, cfg)[1]

    report = SlopeReport(params.a)
    for g in sorted(ground):
        eg = slope(g)
        for lm in bf.local_minimum_indices:
            lm = int(lm)
            if lm in ground:
                continue
            report.rows.append(
                SlopeMargin(SpinConfiguration.from_index(g, n), SpinConfiguration.from_index(lm, n), eg, slope(lm))
            )
    bad = [r for r in report.rows if r.margin <= 0]
    if bad:
        r = bad[0]
        raise ConstructionViolated(f"local minimum {r.local_state} has slope {r.E1_local} <= {r.E1_global} of {r.global_state}")
    return report


@dataclass(frozen=True)
class ConvergenceDiagnostic:
    radius: float
    dominant_orders: float


def convergence_radius_diagnostic(E0, a: int) -> ConvergenceDiagnostic:
    """Heuristic radius ``4 / |E0|`` and the ``a |E0|`` orders first order should dominate.

    Diagnostic only; nothing is certified.
    """
    e = abs(float(E0))
    return ConvergenceDiagnostic(math.inf if e == 0 else 4.0 / e, a * e)
