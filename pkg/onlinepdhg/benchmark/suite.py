"""Benchmark suite

A suite is described by a TOML manifest:

``` toml
[settings]
tolerance = 1e-4
iteration_limit = 50000
time_limit = 600
trace_stride = 10
max_workers = 1
baseline = "PDHG"

[[instances]]
netlib = "afiro"

[[instances]]
path = "problems/small.mps"

[[instances]]
generated = { seed = 1, m = 5, n = 8 }

[[variants]]
name = "PDHG"
mode = "vanilla"
lr_grid = [0.0]

[[variants]]
preset = "Norm-Freq"
mode = "vanilla"
```

Every variant is run on every instance with all the learning rates of its
grid; the run with the fewest iterations is kept (OPTIMAL runs first, ties
to the smaller learning rate).
"""
import json
import logging
import math
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union

import pandas as pd
from onlinepdhg.dataset.catalog.netlib import load_netlib
from onlinepdhg.dataset.generators import random_feasible_lp
from onlinepdhg.dataset.mps import MPSFormatError
from onlinepdhg.dataset.standard_form import LpProblem, VarMap, read_lp, to_standard_form
from onlinepdhg.preconditioning.online import DualLossAnchor, OnlineConfig, Scheduler
from onlinepdhg.preconditioning.static import StaticPreconditioning
from onlinepdhg.results.results import (
    AggregateReport,
    InstanceResult,
    classify_behavior,
    compare_all,
    results_frame,
)
from onlinepdhg.solver.config import (
    DEFAULT_CHECK_STRIDE,
    DEFAULT_ITERATION_LIMIT,
    DEFAULT_TIME_LIMIT,
    DEFAULT_TOLERANCE,
    DEFAULT_TRACE_STRIDE,
    TRACE_COLUMNS,
    Mode,
    SolveConfig,
    TerminationStatus,
)
from onlinepdhg.solver.solve import solve
from onlinepdhg.utils.lrucache import LRUDataCache
from tqdm.auto import tqdm

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

logger = logging.getLogger(__name__)

VANILLA_LR_GRID = (1e-1, 1e-2, 1e-3)
PDLP_LR_GRID = (1e-5, 1e-6, 1e-7)

_INSTANCE_CACHE = LRUDataCache(8)


@dataclass
class VariantSpec:
    """A solver variant of the benchmark

    Parameters:
        name: Unique name
        mode: vanilla or pdlp
        normalize: Normalize the online gradients
        phi: Online update frequency
        lr_grid: Learning rates tried per instance; 0 disables online
            preconditioning
        precondition: Static preprocessing, mode default when `None`
        scheduler: Online step-size scheduler
        restarts: Adaptive restarts in pdlp mode
        dual_loss_anchor: Anchor of the diagnostic dual loss
    """

    name: str
    mode: Mode = Mode.VANILLA
    normalize: bool = False
    phi: int = 20
    lr_grid: Tuple[float, ...] = (0.0,)
    precondition: Optional[StaticPreconditioning] = None
    scheduler: Scheduler = Scheduler.ADAGRAD
    restarts: bool = True
    dual_loss_anchor: DualLossAnchor = DualLossAnchor.XK

    def __post_init__(self):
        self.mode = Mode(self.mode)
        self.scheduler = Scheduler(self.scheduler)
        self.dual_loss_anchor = DualLossAnchor(self.dual_loss_anchor)
        if self.precondition is not None:
            self.precondition = StaticPreconditioning(self.precondition)
        self.lr_grid = tuple(float(lr) for lr in self.lr_grid)
        if len(self.lr_grid) == 0:
            raise ValueError(f"Variant {self.name} has an empty learning-rate grid")
        if any(lr < 0 for lr in self.lr_grid):
            raise ValueError(f"Variant {self.name} has a negative learning rate")
        if self.phi < 1:
            raise ValueError(f"Variant {self.name} has update frequency {self.phi} < 1")

    def solve_config(self, settings: "Settings", lr: float) -> SolveConfig:
        online = None
        if lr > 0:
            online = OnlineConfig(
                alpha=lr,
                phi=self.phi,
                normalize=self.normalize,
                scheduler=self.scheduler,
                dual_loss_anchor=self.dual_loss_anchor,
            )
        return SolveConfig(
            tolerance=settings.tolerance,
            iteration_limit=settings.iteration_limit,
            time_limit=settings.time_limit,
            mode=self.mode,
            precondition=self.precondition,
            online=online,
            check_stride=settings.check_stride,
            trace_stride=settings.trace_stride,
            restarts=self.restarts,
        )


def online_variants(mode: Union[Mode, str] = Mode.VANILLA) -> List[VariantSpec]:
    """Baseline plus the four online variants (normalized or not, φ = 1 or 20)

    The learning-rate grid is {1e-1, 1e-2, 1e-3} in vanilla mode and
    {1e-5, 1e-6, 1e-7} in pdlp mode.
    """
    mode = Mode(mode)
    grid = VANILLA_LR_GRID if mode == Mode.VANILLA else PDLP_LR_GRID
    baseline = "PDHG" if mode == Mode.VANILLA else "PDLP"
    return [
        VariantSpec(name=baseline, mode=mode, lr_grid=(0.0,)),
        VariantSpec(name="NoNorm-Freq", mode=mode, normalize=False, phi=1, lr_grid=grid),
        VariantSpec(name="Norm-Freq", mode=mode, normalize=True, phi=1, lr_grid=grid),
        VariantSpec(name="NoNorm-Infreq", mode=mode, normalize=False, phi=20, lr_grid=grid),
        VariantSpec(name="Norm-Infreq", mode=mode, normalize=True, phi=20, lr_grid=grid),
    ]


ONLINE_VARIANTS = {
    mode.value: {v.name: v for v in online_variants(mode)} for mode in Mode
}


@dataclass
class InstanceSpec:
    """Where an instance comes from: a file, a Netlib name or the generator"""

    name: str = ""
    path: Optional[str] = None
    netlib: Optional[str] = None
    generated: Optional[Dict[str, int]] = None

    def __post_init__(self):
        sources = [s for s in (self.path, self.netlib, self.generated) if s is not None]
        if len(sources) != 1:
            raise ValueError(
                "An instance needs exactly one of 'path', 'netlib' or 'generated'"
            )
        if not self.name:
            if self.path is not None:
                self.name = Path(self.path).name.split(".")[0]
            elif self.netlib is not None:
                self.name = self.netlib.lower()
            else:
                g = self.generated
                self.name = f"random_{g['m']}x{g['n']}_{g.get('seed', 0)}"

    def key(self) -> tuple:
        generated = tuple(sorted(self.generated.items())) if self.generated else None
        return (self.path, self.netlib, generated)

    def load(self) -> Tuple[LpProblem, Optional[VarMap]]:
        if self.path is not None:
            return read_lp(self.path)
        if self.netlib is not None:
            return to_standard_form(load_netlib(self.netlib))
        g = self.generated
        problem = random_feasible_lp(
            int(g["m"]), int(g["n"]), seed=int(g.get("seed", 0)), density=float(g.get("density", 1.0))
        )
        return problem, None


@dataclass
class Settings:
    tolerance: float = DEFAULT_TOLERANCE
    iteration_limit: int = DEFAULT_ITERATION_LIMIT
    time_limit: float = DEFAULT_TIME_LIMIT
    check_stride: int = DEFAULT_CHECK_STRIDE
    trace_stride: int = DEFAULT_TRACE_STRIDE
    max_workers: int = 1
    baseline: Optional[str] = None
    min_iterations: Optional[int] = None


@dataclass
class Manifest:
    settings: Settings
    instances: List[InstanceSpec]
    variants: List[VariantSpec]

    def __post_init__(self):
        names = [v.name for v in self.variants]
        duplicated = sorted({n for n in names if names.count(n) > 1})
        if duplicated:
            raise ValueError(f"Duplicated variant names: {duplicated}")
        instance_names = [i.name for i in self.instances]
        duplicated = sorted({n for n in instance_names if instance_names.count(n) > 1})
        if duplicated:
            raise ValueError(f"Duplicated instance names: {duplicated}")
        if not self.variants:
            raise ValueError("The manifest declares no variants")
        if self.settings.baseline is None:
            self.settings.baseline = self.variants[0].name
        if self.settings.baseline not in names:
            raise ValueError(f"Baseline {self.settings.baseline} is not a declared variant")


def _variant_from_dict(d: dict) -> VariantSpec:
    d = dict(d)
    preset = d.pop("preset", None)
    if preset is None:
        return VariantSpec(**d)
    mode = Mode(d.get("mode", Mode.VANILLA))
    if preset not in ONLINE_VARIANTS[mode.value]:
        raise ValueError(f"Unknown variant preset {preset}")
    base = ONLINE_VARIANTS[mode.value][preset]
    values = {f.name: getattr(base, f.name) for f in fields(VariantSpec)}
    values.update(d)
    return VariantSpec(**values)


def parse_manifest(d: dict) -> Manifest:
    settings = Settings(**d.get("settings", {}))
    instances = [InstanceSpec(**i) for i in d.get("instances", [])]
    variants = [_variant_from_dict(v) for v in d.get("variants", [])]
    return Manifest(settings=settings, instances=instances, variants=variants)


def load_manifest(path: Union[str, Path]) -> Manifest:
    """Read a TOML benchmark manifest

    Relative instance paths are resolved against the manifest's folder.
    """
    path = Path(path)
    with open(path, "rb") as file:
        d = tomllib.load(file)
    manifest = parse_manifest(d)
    for instance in manifest.instances:
        if instance.path is not None and not Path(instance.path).is_absolute():
            instance.path = str(path.parent / instance.path)
    return manifest


def _load_cached(instance: InstanceSpec) -> Tuple[LpProblem, Optional[VarMap]]:
    return _INSTANCE_CACHE.get_or_load(instance.key(), instance.load)


@dataclass
class RunOutcome:
    result: InstanceResult
    trace: pd.DataFrame = field(default_factory=lambda: pd.DataFrame(columns=TRACE_COLUMNS))


def run_variant(
    instance: InstanceSpec, variant: VariantSpec, settings: Settings
) -> RunOutcome:
    """Run every learning rate of the variant's grid and keep the best run"""
    try:
        problem, varmap = _load_cached(instance)
    except (MPSFormatError, ValueError, OSError) as e:
        logger.error(f"Could not load {instance.name}: {e}")
        return RunOutcome(
            InstanceResult(
                instance=instance.name,
                variant=variant.name,
                status=TerminationStatus.LOAD_ERROR,
                iterations=0,
                wall_time=0.0,
            )
        )

    best = None
    grid_time = 0.0
    for lr in variant.lr_grid:
        report = solve(problem, variant.solve_config(settings, lr))
        grid_time += report.wall_time
        key = (report.status != TerminationStatus.OPTIMAL, report.iterations, lr)
        if best is None or key < best[0]:
            best = (key, lr, report)
    _, lr, report = best

    objective = report.objective
    if varmap is not None:
        objective = varmap.original_objective(objective)
    r = report.residuals
    result = InstanceResult(
        instance=instance.name,
        variant=variant.name,
        status=report.status,
        iterations=report.iterations,
        wall_time=report.wall_time,
        grid_time=grid_time,
        rel_primal=r.rel_primal,
        rel_dual=r.rel_dual,
        rel_gap=r.rel_gap,
        objective=objective,
        learning_rate=lr,
    )
    return RunOutcome(result, report.trace_frame())


@dataclass
class SuiteResult:
    results: Dict[str, List[InstanceResult]]
    aggregates: Dict[str, AggregateReport]
    traces: Dict[Tuple[str, str], pd.DataFrame]

    def frame(self) -> pd.DataFrame:
        return results_frame(self.results)


def run_suite(
    manifest: Manifest,
    out: Optional[Union[str, Path]] = None,
    show_progress: bool = False,
) -> SuiteResult:
    """Run all the variants on all the instances of a manifest

    Parameters:
        manifest: The benchmark description
        out: Folder for `results.csv`, `aggregate.json` and
            `traces/<instance>_<variant>.csv`; nothing is written when `None`
        show_progress: Display a progress bar

    Returns:
        Per-variant results, aggregates against the baseline and traces
    """
    settings = manifest.settings
    jobs = [(i, v) for i in manifest.instances for v in manifest.variants]
    start = time.perf_counter()

    if settings.max_workers > 1:
        with ProcessPoolExecutor(max_workers=settings.max_workers) as executor:
            futures = [executor.submit(run_variant, i, v, settings) for i, v in jobs]
            outcomes = [
                f.result() for f in tqdm(futures, total=len(jobs), disable=not show_progress)
            ]
    else:
        outcomes = []
        for instance, variant in tqdm(jobs, disable=not show_progress):
            logger.info(f"Running {variant.name} on {instance.name}")
            outcomes.append(run_variant(instance, variant, settings))

    results: Dict[str, List[InstanceResult]] = {v.name: [] for v in manifest.variants}
    traces: Dict[Tuple[str, str], pd.DataFrame] = {}
    for (instance, variant), outcome in zip(jobs, outcomes):
        results[variant.name].append(outcome.result)
        traces[(instance.name, variant.name)] = outcome.trace

    baseline = {r.instance: r for r in results[settings.baseline]}
    for variant_results in results.values():
        for r in variant_results:
            r.behavior = classify_behavior(baseline[r.instance], r)

    aggregates = compare_all(results, settings.baseline, settings.min_iterations)
    logger.info(f"Suite finished in {time.perf_counter() - start:.1f}s")

    suite = SuiteResult(results=results, aggregates=aggregates, traces=traces)
    if out is not None:
        write_report(suite, out)
    return suite


def _json_safe(value):
    if isinstance(value, float) and not math.isfinite(value):
        return None
    return value


def write_report(suite: SuiteResult, out: Union[str, Path]):
    """Write results.csv, aggregate.json and the traces folder"""
    out = Path(out)
    (out / "traces").mkdir(parents=True, exist_ok=True)
    suite.frame().to_csv(out / "results.csv", index=False)
    aggregates = {
        name: {k: _json_safe(v) for k, v in report.to_dict().items()}
        for name, report in suite.aggregates.items()
    }
    with open(out / "aggregate.json", "w") as file:
        json.dump(aggregates, file, indent=2)
    for (instance, variant), trace in suite.traces.items():
        trace.to_csv(out / "traces" / f"{instance}_{variant}.csv", index=False)
