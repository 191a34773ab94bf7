"""Benchmark metrics

The main data structure of the results module is a dictionary in which each
key is a variant name and each element is the list of `InstanceResult` of
that variant, one per instance.

Variants are compared against a baseline with the usual first-order LP
solver metrics:

- #Opt: number of instances solved to OPTIMAL, out of the instances that
  loaded; load failures are counted apart
- #Iter: shifted geometric mean (shift 10) and arithmetic mean of the
  iteration counts
- Time: geometric and arithmetic mean of the solve time
- #Imp. / #Wors.: instances whose iteration count decreased / increased
  with respect to the baseline

Iteration and time aggregates are taken over the instances where every
compared method reaches OPTIMAL. Times are clamped below at 1e-3 s before
taking geometric means.
"""
import logging
from dataclasses import asdict, dataclass
from typing import Dict, Iterable, List, Optional, Set

import numpy as np
import pandas as pd
from onlinepdhg.solver.config import TerminationStatus

logger = logging.getLogger(__name__)

SGM_SHIFT = 10.0
TIME_FLOOR = 1e-3


class Behavior:
    BOTH_OPTIMAL = "both_optimal"
    ONLINE_ONLY_OPTIMAL = "online_only_optimal"
    BOTH_LIMIT = "both_limit"
    OTHER = "other"


@dataclass
class InstanceResult:
    """Outcome of a variant on an instance

    Parameters:
        instance: Instance name
        variant: Variant name
        status: Termination status of the chosen run
        iterations: Iterations of the chosen run
        wall_time: Seconds of the chosen run
        grid_time: Seconds of all the runs of the learning-rate grid
        rel_primal: Relative primal residual at the reported point
        rel_dual: Relative dual residual at the reported point
        rel_gap: Relative gap at the reported point
        objective: Objective value in the units of the original problem
        learning_rate: Learning rate of the chosen run
        behavior: Convergence class with respect to the baseline
    """

    instance: str
    variant: str
    status: TerminationStatus
    iterations: int
    wall_time: float
    grid_time: float = 0.0
    rel_primal: float = float("nan")
    rel_dual: float = float("nan")
    rel_gap: float = float("nan")
    objective: float = float("nan")
    learning_rate: float = 0.0
    behavior: str = ""

    def __post_init__(self):
        self.status = TerminationStatus(self.status)
        if self.grid_time < self.wall_time:
            self.grid_time = self.wall_time

    @property
    def optimal(self) -> bool:
        return self.status == TerminationStatus.OPTIMAL

    def to_dict(self) -> dict:
        d = asdict(self)
        d["status"] = self.status.value
        return d


@dataclass
class AggregateReport:
    variant: str
    baseline: str
    n_instances: int
    n_load_errors: int
    n_optimal: int
    baseline_n_optimal: int
    n_common: int
    iterations_sgm10: float
    iterations_mean: float
    time_gm: float
    time_mean: float
    grid_time_gm: float
    grid_time_mean: float
    baseline_iterations_sgm10: float
    baseline_time_gm: float
    improved: int
    worsened: int

    def to_dict(self) -> dict:
        return asdict(self)


def _check_values(values: Iterable[float]) -> np.ndarray:
    values = np.asarray(list(values), dtype=np.float64)
    if values.size == 0:
        raise ValueError("Cannot average an empty set of values")
    return values


def sgm(values: Iterable[float], shift: float = SGM_SHIFT) -> float:
    """Shifted geometric mean (∏(vᵢ + shift))^(1/N) − shift

    Parameters:
        values: Nonnegative values
        shift: Nonnegative shift

    Returns:
        The shifted geometric mean, computed in log space

    Raises:
        ValueError: On empty input, negative values or a negative shift
    """
    values = _check_values(values)
    if shift < 0 or np.any(values < 0):
        raise ValueError("Shifted geometric mean needs nonnegative values and shift")
    return float(np.exp(np.mean(np.log(values + shift))) - shift)


def geometric_mean(values: Iterable[float]) -> float:
    """(∏ vᵢ)^(1/N) of positive values, computed in log space"""
    values = _check_values(values)
    if np.any(values <= 0):
        raise ValueError("Geometric mean needs positive values")
    return float(np.exp(np.mean(np.log(values))))


def _by_instance(results: List[InstanceResult]) -> Dict[str, InstanceResult]:
    return {r.instance: r for r in results}


def common_optimal(
    results: Iterable[List[InstanceResult]], min_iterations: Optional[int] = None
) -> Set[str]:
    """Instances solved to OPTIMAL by every result list

    Parameters:
        results: One result list per compared method
        min_iterations: Keep only instances where every method needed at
            least this many iterations

    Returns:
        The instance names
    """
    common: Optional[Set[str]] = None
    for result_list in results:
        solved = {
            r.instance
            for r in result_list
            if r.optimal and (min_iterations is None or r.iterations >= min_iterations)
        }
        common = solved if common is None else common & solved
    return common or set()


def classify_behavior(baseline: InstanceResult, variant: InstanceResult) -> str:
    """Convergence class of a variant with respect to the baseline

    - both_optimal: both reach OPTIMAL
    - online_only_optimal: only the variant reaches OPTIMAL
    - both_limit: both hit the iteration or time limit
    - other: anything else
    """
    limits = (TerminationStatus.ITERATION_LIMIT, TerminationStatus.TIME_LIMIT)
    if baseline.optimal and variant.optimal:
        return Behavior.BOTH_OPTIMAL
    if variant.optimal and baseline.status in limits:
        return Behavior.ONLINE_ONLY_OPTIMAL
    if baseline.status in limits and variant.status in limits:
        return Behavior.BOTH_LIMIT
    return Behavior.OTHER


def _mean_or_nan(f, values: List[float]) -> float:
    return f(values) if len(values) > 0 else float("nan")


def compare(
    baseline: List[InstanceResult],
    variant: List[InstanceResult],
    min_iterations: Optional[int] = None,
    instances: Optional[Set[str]] = None,
) -> AggregateReport:
    """Compare a variant against the baseline

    Parameters:
        baseline: Results of the baseline
        variant: Results of the variant, on the same instances
        min_iterations: Restrict the aggregates to instances where both
            methods needed at least this many iterations
        instances: Restrict the aggregates further to these instances
            (the common-OPTIMAL set of a larger comparison)

    Returns:
        The aggregate report

    Raises:
        ValueError: If the two lists do not cover the same instances
    """
    base = _by_instance(baseline)
    var = _by_instance(variant)
    if set(base) != set(var):
        missing = sorted(set(base) ^ set(var))
        raise ValueError(f"Results cover different instances: {missing}")

    common = common_optimal([baseline, variant], min_iterations)
    if instances is not None:
        common &= set(instances)
    names = sorted(common)
    failed = {
        i for i in var
        if TerminationStatus.LOAD_ERROR in (var[i].status, base[i].status)
    }

    var_iters = [var[i].iterations for i in names]
    base_iters = [base[i].iterations for i in names]
    var_time = [max(var[i].wall_time, TIME_FLOOR) for i in names]
    var_grid = [max(var[i].grid_time, TIME_FLOOR) for i in names]
    base_time = [max(base[i].wall_time, TIME_FLOOR) for i in names]

    variant_name = variant[0].variant if variant else ""
    baseline_name = baseline[0].variant if baseline else ""
    return AggregateReport(
        variant=variant_name,
        baseline=baseline_name,
        n_instances=len(var) - len(failed),
        n_load_errors=len(failed),
        n_optimal=sum(r.optimal for r in variant),
        baseline_n_optimal=sum(r.optimal for r in baseline),
        n_common=len(names),
        iterations_sgm10=_mean_or_nan(sgm, var_iters),
        iterations_mean=_mean_or_nan(np.mean, var_iters),
        time_gm=_mean_or_nan(geometric_mean, var_time),
        time_mean=_mean_or_nan(np.mean, var_time),
        grid_time_gm=_mean_or_nan(geometric_mean, var_grid),
        grid_time_mean=_mean_or_nan(np.mean, var_grid),
        baseline_iterations_sgm10=_mean_or_nan(sgm, base_iters),
        baseline_time_gm=_mean_or_nan(geometric_mean, base_time),
        improved=sum(v < b for v, b in zip(var_iters, base_iters)),
        worsened=sum(v > b for v, b in zip(var_iters, base_iters)),
    )


def compare_all(
    results: Dict[str, List[InstanceResult]],
    baseline: str,
    min_iterations: Optional[int] = None,
) -> Dict[str, AggregateReport]:
    """Compare every variant against the baseline

    Aggregates use the instances where all the variants, baseline included,
    reach OPTIMAL.

    Parameters:
        results: Dictionary variant name -> results
        baseline: Name of the baseline variant
        min_iterations: See `compare`

    Returns:
        Dictionary variant name -> report, baseline included
    """
    if baseline not in results:
        raise ValueError(f"Baseline {baseline} has no results")
    common = common_optimal(results.values(), min_iterations)
    return {
        name: compare(results[baseline], variant_results, min_iterations, common)
        for name, variant_results in results.items()
    }


def results_frame(results: Dict[str, List[InstanceResult]]) -> pd.DataFrame:
    rows = [r.to_dict() for variant_results in results.values() for r in variant_results]
    return pd.DataFrame(rows, columns=list(InstanceResult.__dataclass_fields__.keys()))


def results_from_frame(df: pd.DataFrame) -> Dict[str, List[InstanceResult]]:
    """Rebuild the results dictionary from a frame written by `results_frame`"""
    out: Dict[str, List[InstanceResult]] = {}
    for row in df.to_dict(orient="records"):
        row["behavior"] = "" if pd.isna(row.get("behavior")) else row["behavior"]
        out.setdefault(row["variant"], []).append(InstanceResult(**row))
    return out
