import numpy as np
import pytest
from onlinepdhg.dataset.mps import GeneralLp, RowSense, parse_mps, write_mps
from onlinepdhg.dataset.standard_form import (
    LpProblem,
    TransformKind,
    read_lp,
    recover_solution,
    to_standard_form,
)
from onlinepdhg.linalg.sparse import SparseMatrix

from tests.oracle import vertex_optimum
from tests.problems import SMALL_MPS, SMALL_OPTIMUM


def single_row_lp(lower, upper, sense=RowSense.EQ, c=(1.0, 1.0), rhs=1.0, maximize=False):
    n = len(lower)
    return GeneralLp(
        c=np.asarray(c, dtype=float),
        rows=np.zeros(n, dtype=np.int64),
        cols=np.arange(n),
        values=np.ones(n),
        senses=[sense],
        rhs=np.array([rhs]),
        lower=np.asarray(lower, dtype=float),
        upper=np.asarray(upper, dtype=float),
        maximize=maximize,
    )


class TestLpProblem:
    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            LpProblem(c=np.ones(3), b=np.ones(1), A=SparseMatrix(np.ones((1, 2))))
        with pytest.raises(ValueError):
            LpProblem(c=np.ones(2), b=np.ones(2), A=SparseMatrix(np.ones((1, 2))))

    def test_dense_matrix_is_wrapped(self):
        p = LpProblem(c=[1.0, 2.0], b=[1.0], A=np.array([[1.0, 1.0]]))
        assert isinstance(p.A, SparseMatrix)
        assert (p.m, p.n) == (1, 2)


class TestStandardForm:
    def test_already_standard(self):
        gp = single_row_lp([0.0, 0.0], [np.inf, np.inf])
        p, varmap = to_standard_form(gp)
        assert (p.m, p.n) == (1, 2)
        assert varmap.is_identity()
        assert np.allclose(recover_solution(varmap, np.array([0.25, 0.75])), [0.25, 0.75])

    def test_shift(self):
        gp = single_row_lp([2.0, 0.0], [np.inf, np.inf], rhs=5.0)
        p, varmap = to_standard_form(gp)
        assert p.b[0] == pytest.approx(3.0)
        assert varmap.transforms[0].kind == TransformKind.SHIFT
        x = recover_solution(varmap, np.array([1.0, 2.0]))
        assert np.allclose(x, [3.0, 2.0])
        assert varmap.original_objective(p.objective(np.array([1.0, 2.0]))) == pytest.approx(5.0)

    def test_reflect(self):
        gp = single_row_lp([-np.inf, 0.0], [3.0, np.inf], rhs=1.0)
        p, varmap = to_standard_form(gp)
        assert varmap.transforms[0].kind == TransformKind.REFLECT
        assert np.allclose(p.A.to_dense(), [[-1.0, 1.0]])
        assert p.b[0] == pytest.approx(-2.0)
        x = recover_solution(varmap, np.array([4.0, 2.0]))
        assert np.allclose(x, [-1.0, 2.0])

    def test_split(self):
        gp = single_row_lp([-np.inf, 0.0], [np.inf, np.inf])
        p, varmap = to_standard_form(gp)
        assert p.n == 3
        assert varmap.transforms[0].kind == TransformKind.SPLIT
        assert np.allclose(p.A.to_dense(), [[1.0, 1.0, -1.0]])
        assert np.allclose(p.c, [1.0, 1.0, -1.0])
        assert np.allclose(recover_solution(varmap, np.array([0.5, 1.0, 2.0])), [-1.5, 1.0])

    def test_boxed_variable(self):
        gp = single_row_lp([1.0, 0.0], [4.0, np.inf], rhs=2.0)
        p, varmap = to_standard_form(gp)
        assert (p.m, p.n) == (2, 3)
        assert varmap.transforms[0].upper_row == 1
        assert p.b[1] == pytest.approx(3.0)
        assert np.allclose(p.A.to_dense()[1], [1.0, 0.0, 1.0])

    def test_inequality_rows(self):
        le = to_standard_form(single_row_lp([0.0, 0.0], [np.inf, np.inf], RowSense.LE))
        ge = to_standard_form(single_row_lp([0.0, 0.0], [np.inf, np.inf], RowSense.GE))
        assert np.allclose(le[0].A.to_dense(), [[1.0, 1.0, 1.0]])
        assert np.allclose(ge[0].A.to_dense(), [[1.0, 1.0, -1.0]])
        assert le[1].slack_columns == [2]

    def test_infeasible_bounds(self):
        with pytest.raises(ValueError):
            to_standard_form(single_row_lp([2.0, 0.0], [1.0, np.inf]))

    def test_maximize(self):
        p, varmap = to_standard_form(parse_mps(SMALL_MPS))
        assert np.allclose(p.c, [-1.0, -1.0, 0.0, 0.0])
        value, x = vertex_optimum(p)
        assert varmap.original_objective(value) == pytest.approx(SMALL_OPTIMUM)
        assert np.allclose(recover_solution(varmap, x), [1.6, 1.2])

    def test_recover_wrong_size(self):
        _, varmap = to_standard_form(parse_mps(SMALL_MPS))
        with pytest.raises(ValueError):
            recover_solution(varmap, np.zeros(2))

    def test_read_lp(self, tmp_path):
        path = tmp_path / "small.mps"
        path.write_text(SMALL_MPS)
        p, varmap = read_lp(path)
        assert p.name == "small"
        assert (p.m, p.n) == (2, 4)
        assert varmap.n_original == 2


BOUND_KINDS = ("nonnegative", "lower", "upper", "free", "boxed")


def random_general_lp(seed: int) -> GeneralLp:
    """2x2 general LP with mixed row senses, bound kinds and an objective offset"""
    rng = np.random.default_rng(seed)
    lower, upper = np.zeros(2), np.full(2, np.inf)
    for j, kind in enumerate(rng.choice(BOUND_KINDS, size=2)):
        if kind == "lower":
            lower[j] = rng.uniform(-2.0, 1.0)
        elif kind == "upper":
            lower[j], upper[j] = -np.inf, rng.uniform(-1.0, 3.0)
        elif kind == "free":
            lower[j] = -np.inf
        elif kind == "boxed":
            lower[j] = rng.uniform(-2.0, 0.0)
            upper[j] = lower[j] + rng.uniform(0.5, 3.0)
    return GeneralLp(
        c=rng.uniform(-2.0, 2.0, 2),
        rows=np.array([0, 0, 1, 1]),
        cols=np.array([0, 1, 0, 1]),
        values=rng.uniform(0.5, 3.0, 4) * rng.choice([-1.0, 1.0], 4),
        senses=[[RowSense.LE, RowSense.EQ, RowSense.GE][i] for i in rng.choice(3, size=2)],
        rhs=rng.uniform(-3.0, 3.0, 2),
        lower=lower,
        upper=upper,
        objective_offset=float(rng.uniform(-5.0, 5.0)),
        maximize=bool(rng.integers(2)),
    )


def assert_feasible(gp: GeneralLp, x: np.ndarray, tol: float = 1e-9):
    assert np.all(x >= gp.lower - tol)
    assert np.all(x <= gp.upper + tol)
    activity = gp.matrix.to_dense() @ x
    for a, sense, rhs in zip(activity, gp.senses, gp.rhs):
        scale = 1.0 + abs(rhs)
        if sense == RowSense.LE:
            assert a <= rhs + tol * scale
        elif sense == RowSense.GE:
            assert a >= rhs - tol * scale
        else:
            assert a == pytest.approx(rhs, abs=tol * scale)


class TestRoundTrip:
    def test_recovered_vertices(self):
        checked = 0
        for seed in range(60):
            gp = random_general_lp(seed)
            p, varmap = to_standard_form(gp)
            solution = vertex_optimum(p)
            if solution is None:
                continue
            value, x_std = solution
            x = recover_solution(varmap, x_std)
            assert_feasible(gp, x)
            assert gp.objective(x) == pytest.approx(varmap.original_objective(value), abs=1e-9)
            checked += 1
        assert checked >= 20

    @pytest.mark.parametrize("seed", range(20))
    def test_write_then_parse(self, seed):
        gp = random_general_lp(seed)
        again = parse_mps(write_mps(gp))
        assert again.senses == gp.senses
        assert again.maximize == gp.maximize
        assert again.objective_offset == pytest.approx(gp.objective_offset)
        assert np.allclose(again.c, gp.c)
        assert np.allclose(again.rhs, gp.rhs)
        assert np.array_equal(again.lower, gp.lower)
        assert np.array_equal(again.upper, gp.upper)
        assert np.allclose(again.matrix.to_dense(), gp.matrix.to_dense())
