import logging

import pytest
import requests
from onlinepdhg.benchmark.suite import ONLINE_VARIANTS, InstanceSpec, Settings, run_variant
from onlinepdhg.dataset.catalog.netlib import load_netlib
from onlinepdhg.dataset.standard_form import to_standard_form
from onlinepdhg.preconditioning.online import OnlineConfig
from onlinepdhg.solver.config import Mode, SolveConfig, TerminationStatus
from onlinepdhg.solver.solve import solve

logger = logging.getLogger(__name__)

AFIRO_OPTIMUM = -464.753

pytestmark = pytest.mark.netlib


def netlib_or_skip(name: str):
    try:
        return to_standard_form(load_netlib(name))
    except (requests.RequestException, OSError) as e:
        pytest.skip(f"Netlib instance {name} not available: {e}")


class TestAfiro:
    def test_pdlp_optimal(self):
        problem, varmap = netlib_or_skip("afiro")
        report = solve(problem, SolveConfig(mode=Mode.PDLP, tolerance=1e-4))
        assert report.status == TerminationStatus.OPTIMAL
        objective = varmap.original_objective(report.objective)
        assert objective == pytest.approx(AFIRO_OPTIMUM, rel=1e-3)

    def test_vanilla_online_optimal(self):
        problem, varmap = netlib_or_skip("afiro")
        report = solve(problem, SolveConfig(tolerance=1e-4, online=OnlineConfig(alpha=1e-2, phi=20)))
        assert report.status == TerminationStatus.OPTIMAL
        assert varmap.original_objective(report.objective) == pytest.approx(AFIRO_OPTIMUM, rel=1e-3)

    def test_initial_step_size(self):
        problem, _ = netlib_or_skip("afiro")
        report = solve(problem, SolveConfig(mode=Mode.PDLP, iteration_limit=1))
        assert report.status == TerminationStatus.ITERATION_LIMIT
        assert report.iterations == 1


def iterations_to_tolerance(result, settings: Settings) -> int:
    """Iterations of an OPTIMAL run, the iteration limit otherwise"""
    return result.iterations if result.optimal else settings.iteration_limit


class TestOnlineImprovement:
    def test_best_learning_rate(self):
        settings = Settings(tolerance=1e-4, iteration_limit=50000)
        baseline = ONLINE_VARIANTS["vanilla"]["PDHG"]
        normalized = ONLINE_VARIANTS["vanilla"]["Norm-Freq"]
        change = {}
        for name in ("afiro", "scsd1"):
            netlib_or_skip(name)
            instance = InstanceSpec(netlib=name)
            reference = iterations_to_tolerance(run_variant(instance, baseline, settings).result, settings)
            online = iterations_to_tolerance(run_variant(instance, normalized, settings).result, settings)
            logger.info(f"{name}: {reference} -> {online} iterations")
            change[name] = online / reference
        assert min(change.values()) <= 0.9
        assert max(change.values()) <= 1.5
