"""Sufficient-condition checkers for zero-lag optimality.

Each checker evaluates one analytic condition under which calling the next
job immediately (zero lag) maximizes the long-run reward, and reports the
two sides of the inequality plus a three-valued verdict. A divergent MGF or
a failed numeric evaluation yields "indeterminate" rather than a silent
"fails": the conditions presuppose well-defined exponential moments.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy import integrate

from .distributions import (
    Deterministic,
    DistributionSpec,
    DivergentMGFError,
    Exponential,
    Uniform,
    prob_diff_exceeds,
)
from ._fmt import fmt_float, write_csv
from .analytics import expected_wait, NumericIntegration, ClosedForm, ClosedFormUnavailableError
from .parallel import ordered_map

__all__ = [
    "VERDICT_HOLDS",
    "VERDICT_FAILS",
    "VERDICT_INDETERMINATE",
    "ConditionReport",
    "AssumptionReport",
    "check_general",
    "check_exponential",
    "check_polynomial",
    "check_surrogate",
    "verify_assumption",
    "region_scan",
    "RegionScan",
]

VERDICT_HOLDS = "holds"
VERDICT_FAILS = "fails"
VERDICT_INDETERMINATE = "indeterminate"

_EPS = 1e-12


@dataclass(frozen=True)
class ConditionReport:
    condition_id: str
    lhs: float
    rhs: float
    verdict: str
    assumption_checked: bool
    notes: str = ""

    def to_dict(self) -> dict:
        return {
            "condition_id": self.condition_id,
            "lhs": fmt_float(self.lhs),
            "rhs": fmt_float(self.rhs),
            "verdict": self.verdict,
            "assumption_checked": self.assumption_checked,
            "notes": self.notes,
        }


@dataclass(frozen=True)
class AssumptionReport:
    """Result of probing whether lag^2 * P(S - D > lag) is non-increasing."""

    ok: bool
    worst_violation: float
    worst_pair: Optional[tuple[float, float]]


def _expect(spec: DistributionSpec, g) -> float:
    """E[g(X)] by adaptive quadrature (exact for a point mass)."""
    if isinstance(spec, Deterministic):
        return float(g(spec.value))
    lo, hi = spec.support()
    hi = min(hi, spec.upper_quantile())
    val, _ = integrate.quad(
        lambda x: float(g(x)) * float(spec.pdf(x)),
        lo,
        hi,
        epsabs=_EPS,
        epsrel=_EPS,
        limit=300,
    )
    return val


def _expect_sum_two(spec: DistributionSpec, g) -> float:
    """E[g(X + X')] over two independent copies of the law."""
    if isinstance(spec, Deterministic):
        return float(g(2.0 * spec.value))
    return _expect(spec, lambda x: _expect(spec, lambda y: g(x + y)))


def _rhs_from_tail(p: float) -> float:
    if p <= 0.0:
        return math.inf
    root = math.sqrt(p)
    return 1.0 / root - root


def _verdict(lhs: float, rhs: float, strict: bool = False) -> str:
    if math.isnan(lhs) or math.isnan(rhs):
        return VERDICT_INDETERMINATE
    if strict:
        return VERDICT_HOLDS if lhs < rhs else VERDICT_FAILS
    return VERDICT_HOLDS if lhs <= rhs else VERDICT_FAILS


def verify_assumption(
    service: DistributionSpec,
    delay: DistributionSpec,
    probe_grid: Optional[Sequence[float]] = None,
) -> AssumptionReport:
    """Probe the auxiliary tail assumption used past unit lag.

    True iff lag^2 * P(S - D > lag) is non-increasing across the grid within
    a 1e-6 tolerance; the report carries the worst adjacent-pair violation.
    Default grid: 64 log-spaced points in (1, 20].
    """
    if probe_grid is None:
        grid = np.geomspace(1.0, 20.0, 65)[1:]
    else:
        grid = np.asarray(sorted(probe_grid), dtype=float)
        if len(grid) < 20:
            raise ValueError(f"probe grid needs at least 20 points, got {len(grid)}")
        if grid[0] <= 1.0:
            raise ValueError("probe grid must lie strictly above 1")
    vals = np.array(
        [x * x * prob_diff_exceeds(service, delay, float(x)) for x in grid]
    )
    diffs = np.diff(vals)
    worst = float(diffs.max()) if len(diffs) else 0.0
    ok = worst <= 1e-6
    worst_pair = None
    if len(diffs):
        i = int(np.argmax(diffs))
        worst_pair = (float(grid[i]), float(grid[i + 1]))
    return AssumptionReport(ok=ok, worst_violation=max(worst, 0.0), worst_pair=worst_pair)


def _assumption_flag(service, delay, check_assumption: bool) -> tuple[bool, str]:
    if not check_assumption:
        return False, "tail assumption not evaluated"
    report = verify_assumption(service, delay)
    if report.ok:
        return True, ""
    return False, (
        f"lag^2 tail increases by {report.worst_violation:.3g} "
        f"between lags {report.worst_pair[0]:.4g} and {report.worst_pair[1]:.4g}"
    )


def check_general(
    service: DistributionSpec,
    delay: DistributionSpec,
    f,
    *,
    check_assumption: bool = True,
) -> ConditionReport:
    """General-reward sufficient condition for zero-lag optimality:

    E[D + S + 1] * sqrt(E[(f'(S))^2]) / E[f(S + S_prev)]
        <= 1/sqrt(p) - sqrt(p),     p = P(S_prev - D > 0).
    """
    p = prob_diff_exceeds(service, delay, 0.0)
    mean_term = delay.mean + service.mean + 1.0
    assumption_ok, note = _assumption_flag(service, delay, check_assumption)
    try:
        ef_prime_sq = _expect(service, lambda s: float(f.deriv(s)) ** 2)
        ef_sum = _expect_sum_two(service, lambda t: float(f.eval(t)))
        lhs = mean_term * math.sqrt(max(ef_prime_sq, 0.0)) / ef_sum
    except Exception as exc:
        return ConditionReport(
            "thm1_general", math.nan, math.nan, VERDICT_INDETERMINATE,
            assumption_ok, f"moment evaluation failed: {exc}",
        )
    rhs = _rhs_from_tail(p)
    return ConditionReport("thm1_general", lhs, rhs, _verdict(lhs, rhs), assumption_ok, note)


def check_exponential(
    service: DistributionSpec,
    delay: DistributionSpec,
    kappa: float,
    *,
    check_assumption: bool = True,
) -> ConditionReport:
    """Exponential-reward specialization:

    kappa * E[D + S + 1] * sqrt(M_S(-2*kappa)) / M_S(-kappa)^2 <= 1/sqrt(p) - sqrt(p).
    """
    if kappa <= 0:
        raise ValueError(f"kappa must be positive, got {kappa}")
    p = prob_diff_exceeds(service, delay, 0.0)
    mean_term = delay.mean + service.mean + 1.0
    assumption_ok, note = _assumption_flag(service, delay, check_assumption)
    try:
        lhs = (
            kappa
            * mean_term
            * math.sqrt(service.mgf(-2.0 * kappa))
            / service.mgf(-kappa) ** 2
        )
    except Exception as exc:
        return ConditionReport(
            "cor1_exponential", math.nan, math.nan, VERDICT_INDETERMINATE,
            assumption_ok, f"moment evaluation failed: {exc}",
        )
    rhs = _rhs_from_tail(p)
    return ConditionReport("cor1_exponential", lhs, rhs, _verdict(lhs, rhs), assumption_ok, note)


def check_polynomial(
    service: DistributionSpec,
    delay: DistributionSpec,
    gamma: float,
    *,
    check_assumption: bool = True,
) -> ConditionReport:
    """Polynomial-reward specialization:

    gamma * E[D + S + 1] * sqrt(E[(S+1)^(-2*gamma-2)]) / E[(S + S_prev + 1)^(-gamma)]
        <= 1/sqrt(p) - sqrt(p).
    """
    if gamma <= 0:
        raise ValueError(f"gamma must be positive, got {gamma}")
    p = prob_diff_exceeds(service, delay, 0.0)
    mean_term = delay.mean + service.mean + 1.0
    assumption_ok, note = _assumption_flag(service, delay, check_assumption)
    try:
        neg_moment = _expect(service, lambda s: (s + 1.0) ** (-2.0 * gamma - 2.0))
        sum_moment = _expect_sum_two(service, lambda t: (t + 1.0) ** (-gamma))
        lhs = gamma * mean_term * math.sqrt(max(neg_moment, 0.0)) / sum_moment
    except Exception as exc:
        return ConditionReport(
            "cor2_polynomial", math.nan, math.nan, VERDICT_INDETERMINATE,
            assumption_ok, f"moment evaluation failed: {exc}",
        )
    rhs = _rhs_from_tail(p)
    return ConditionReport("cor2_polynomial", lhs, rhs, _verdict(lhs, rhs), assumption_ok, note)


def _prob_delay_exceeds_service(service, delay) -> tuple[float, str]:
    if isinstance(service, Deterministic) and isinstance(delay, Deterministic):
        if delay.value == service.value:
            return 1.0, "tie P(D = S) = 1 counted into P(D >= S)"
        return (1.0 if delay.value > service.value else 0.0), ""
    return 1.0 - prob_diff_exceeds(service, delay, 0.0), ""


def check_surrogate(
    service: DistributionSpec,
    delay: DistributionSpec,
    kappa: float,
) -> tuple[ConditionReport, ConditionReport]:
    """Both surrogate-bound conditions for zero-lag optimality.

    Condition 1: M_S(-kappa) * M_D(kappa) >= 1 (reported as rhs, with lhs = 1).
    Condition 2: (1/kappa) ln(1/(M_D(kappa) M_S(-kappa))) + E[D] + E[W]|_0
                 < (1/kappa) P(D > S)  (strict).
    A divergent M_D(kappa) makes both reports indeterminate.
    """
    if kappa <= 0:
        raise ValueError(f"kappa must be positive, got {kappa}")
    try:
        ms = service.mgf(-kappa)
        md = delay.mgf(kappa)
    except DivergentMGFError as exc:
        note = f"divergent MGF: {exc}"
        nan = math.nan
        return (
            ConditionReport("thm2_cond1", nan, nan, VERDICT_INDETERMINATE, False, note),
            ConditionReport("thm2_cond2", nan, nan, VERDICT_INDETERMINATE, False, note),
        )
    product = ms * md
    cond1 = ConditionReport(
        "thm2_cond1",
        1.0,
        product,
        _verdict(1.0, product),
        False,
        "rhs is the MGF product M_S(-kappa) * M_D(kappa); holds iff it reaches 1",
    )
    try:
        ew0 = expected_wait(service, delay, 0.0, ClosedForm())
    except ClosedFormUnavailableError:
        ew0 = expected_wait(service, delay, 0.0, NumericIntegration())
    pds, tie_note = _prob_delay_exceeds_service(service, delay)
    lhs2 = math.log(1.0 / product) / kappa + delay.mean + ew0
    rhs2 = pds / kappa
    cond2 = ConditionReport(
        "thm2_cond2", lhs2, rhs2, _verdict(lhs2, rhs2, strict=True), False, tie_note
    )
    return cond1, cond2


@dataclass(frozen=True)
class RegionScan:
    """Verdict matrix over a (service mean, delay mean) grid."""

    ts_values: tuple[float, ...]
    td_values: tuple[float, ...]
    verdicts: tuple[tuple[str, ...], ...]  # [i][j] for (ts_values[i], td_values[j])
    mode: str
    kappa: float

    def verdict_at(self, i: int, j: int) -> str:
        return self.verdicts[i][j]

    def rows(self):
        for i, t_s in enumerate(self.ts_values):
            for j, t_d in enumerate(self.td_values):
                yield t_s, t_d, self.verdicts[i][j]

    def to_csv(self, path) -> None:
        write_csv(
            path,
            ["t_s", "t_d", "verdict"],
            ([fmt_float(t_s), fmt_float(t_d), v] for t_s, t_d, v in self.rows()),
        )


def _spec_for_family(family: str, mean: float) -> DistributionSpec:
    if family == "exponential":
        return Exponential(mean)
    if family == "uniform":
        # a mean-only uniform is instantiated on [0, 2*mean]
        return Uniform(0.0, 2.0 * mean)
    raise ValueError(f"region scans support exponential/uniform families, got {family!r}")


def region_scan(
    ts_values: Sequence[float],
    td_values: Sequence[float],
    kappa: float,
    mode: str = "thm2_cond1",
    families: tuple[str, str] = ("exponential", "exponential"),
) -> RegionScan:
    """Classify every (t_s, t_d) cell by one zero-lag optimality condition.

    mode "thm2_cond1" tests the MGF product; mode "cor1" runs the
    exponential-reward specialization checker. Cells whose MGFs diverge
    are marked indeterminate.
    """
    if mode not in ("thm2_cond1", "cor1"):
        raise ValueError(f"unknown region-scan mode {mode!r}")
    service_family, delay_family = families

    def scan_row(t_s: float) -> tuple[str, ...]:
        service = _spec_for_family(service_family, t_s)
        row = []
        for t_d in td_values:
            delay = _spec_for_family(delay_family, t_d)
            try:
                if mode == "thm2_cond1":
                    product = service.mgf(-kappa) * delay.mgf(kappa)
                    row.append(VERDICT_HOLDS if product >= 1.0 else VERDICT_FAILS)
                else:
                    row.append(
                        check_exponential(
                            service, delay, kappa, check_assumption=False
                        ).verdict
                    )
            except DivergentMGFError:
                row.append(VERDICT_INDETERMINATE)
        return tuple(row)

    verdicts = tuple(ordered_map(scan_row, [float(t) for t in ts_values]))
    return RegionScan(
        ts_values=tuple(float(t) for t in ts_values),
        td_values=tuple(float(t) for t in td_values),
        verdicts=verdicts,
        mode=mode,
        kappa=kappa,
    )
