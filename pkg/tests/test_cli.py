import pandas as pd
import pytest
from onlinepdhg.cli import EXIT_INPUT_ERROR, EXIT_LIMIT, EXIT_NUMERICAL_ERROR, EXIT_OK, main

from tests.problems import SMALL_MPS, SMALL_OPTIMUM


@pytest.fixture
def small_mps(tmp_path):
    path = tmp_path / "small.mps"
    path.write_text(SMALL_MPS)
    return path


class TestSolveCommand:
    def test_optimal(self, small_mps, tmp_path, capsys):
        trace = tmp_path / "trace.csv"
        code = main(["solve", str(small_mps), "--trace", str(trace)])
        out = capsys.readouterr().out
        assert code == EXIT_OK
        assert "status      OPTIMAL" in out
        objective = float(out.split("objective")[1].split()[0])
        assert objective == pytest.approx(SMALL_OPTIMUM, rel=1e-3)
        df = pd.read_csv(trace)
        assert list(df.columns) == ["iter", "rel_primal", "rel_dual", "rel_gap", "kkt"]

    def test_pdlp_online(self, small_mps, capsys):
        code = main(["solve", str(small_mps), "--mode", "pdlp", "--online-lr", "1e-6"])
        assert code == EXIT_OK
        assert "OPTIMAL" in capsys.readouterr().out

    def test_iteration_limit(self, small_mps, capsys):
        code = main(["solve", str(small_mps), "--iter-limit", "3"])
        assert code == EXIT_LIMIT
        assert "ITERATION_LIMIT" in capsys.readouterr().out

    def test_malformed_file(self, tmp_path):
        path = tmp_path / "bad.mps"
        path.write_text("NAME BAD\nROWS\n N obj\nCOLUMNS\n x c9 1.0\nENDATA\n")
        assert main(["solve", str(path)]) == EXIT_INPUT_ERROR

    def test_missing_file(self, tmp_path):
        assert main(["solve", str(tmp_path / "nothing.mps")]) == EXIT_INPUT_ERROR

    def test_numerical_error(self, tmp_path, capsys):
        path = tmp_path / "nan.mps"
        path.write_text(SMALL_MPS.replace("c1  4.0", "c1  nan"))
        assert main(["solve", str(path)]) == EXIT_NUMERICAL_ERROR
        assert "NUMERICAL_ERROR" in capsys.readouterr().out

    def test_invalid_option(self, small_mps):
        with pytest.raises(SystemExit):
            main(["solve", str(small_mps), "--mode", "simplex"])


class TestBenchCommand:
    def test_report(self, small_mps, tmp_path, capsys):
        manifest = tmp_path / "runs.toml"
        manifest.write_text(
            "[settings]\niteration_limit = 2000\n\n"
            '[[instances]]\npath = "small.mps"\n\n'
            "[[instances]]\ngenerated = { seed = 4, m = 3, n = 5 }\n\n"
            '[[variants]]\nname = "PDHG"\n\n'
            '[[variants]]\npreset = "NoNorm-Freq"\nlr_grid = [1e-3]\n'
        )
        out = tmp_path / "report"
        assert main(["bench", "--manifest", str(manifest), "--out", str(out)]) == EXIT_OK
        assert (out / "results.csv").is_file()
        assert (out / "aggregate.json").is_file()
        assert len(list((out / "traces").glob("*.csv"))) == 4
        assert "NoNorm-Freq" in capsys.readouterr().out

    def test_invalid_manifest(self, tmp_path):
        manifest = tmp_path / "runs.toml"
        manifest.write_text('[[variants]]\nname = "A"\n\n[[variants]]\nname = "A"\n')
        assert main(["bench", "--manifest", str(manifest), "--out", str(tmp_path)]) == EXIT_INPUT_ERROR
