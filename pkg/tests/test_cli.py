import numpy as np
import pytest

from fagp.cli import EXIT_IO, EXIT_NUMERICAL, EXIT_OK, EXIT_USAGE, EXIT_VERIFY, main
from fagp.datagen import load_csv


def run(*argv):
    return main(list(argv))


class TestGenerate:
    def test_single_file(self, tmp_path, capsys):
        code = run("generate", "--n-samples", "10", "--dim", "1", "--seed", "7",
                   "--out-dir", str(tmp_path))
        assert code == EXIT_OK
        out = capsys.readouterr().out
        assert "train_N10_p1_seed7.csv" in out
        ds = load_csv(tmp_path / "train_N10_p1_seed7.csv")
        assert ds.N == 10 and ds.p == 1

    def test_repeat_is_byte_identical(self, tmp_path):
        run("generate", "--n-samples", "10", "--dim", "2", "--seed", "3",
            "--out-dir", str(tmp_path / "a"))
        run("generate", "--n-samples", "10", "--dim", "2", "--seed", "3",
            "--out-dir", str(tmp_path / "b"))
        fa = (tmp_path / "a" / "train_N10_p2_seed3.csv").read_bytes()
        fb = (tmp_path / "b" / "train_N10_p2_seed3.csv").read_bytes()
        assert fa == fb

    def test_dim_zero_is_usage_error(self, tmp_path):
        assert run("generate", "--dim", "0", "--out-dir", str(tmp_path)) == EXIT_USAGE

    def test_sweep_from_config(self, tmp_path, capsys):
        cfg = tmp_path / "cfg.txt"
        cfg.write_text("n_samples = 12\ndims = 1\neigen_counts.1 = 3\nreps = 2\n")
        code = run("generate", "--config", str(cfg), "--out-dir", str(tmp_path))
        assert code == EXIT_OK
        written = sorted(p.name for p in tmp_path.glob("train_*.csv"))
        assert written == ["train_N12_p1_seed100000.csv", "train_N12_p1_seed100001.csv"]


class TestBench:
    def test_tiny_sweep(self, tmp_path, capsys):
        out = tmp_path / "res.csv"
        code = run("bench", "--out", str(out), "--reps", "2", "--dims", "1",
                   "--backends", "serial", "--n-samples", "50", "--n-test", "10",
                   "--quiet")
        assert code == EXIT_OK
        lines = out.read_text().splitlines()
        # default p=1 grid has 5 n values: 5 * 2 reps * 4 phases + header
        assert len(lines) == 1 + 5 * 2 * 4
        assert lines[0] == "backend,p,n,rep,phase,seconds"

    def test_unknown_config_key(self, tmp_path):
        cfg = tmp_path / "cfg.txt"
        cfg.write_text("bogus = 1\n")
        assert run("bench", "--config", str(cfg), "--out", str(tmp_path / "r.csv")) == EXIT_USAGE

    def test_missing_config_file(self, tmp_path):
        assert run("bench", "--config", str(tmp_path / "nope.txt"),
                   "--out", str(tmp_path / "r.csv")) == EXIT_IO


class TestPredict:
    @pytest.fixture()
    def train_csv(self, tmp_path):
        run("generate", "--n-samples", "60", "--dim", "1", "--seed", "5",
            "--noise-std", "0.05", "--out-dir", str(tmp_path))
        return tmp_path / "train_N60_p1_seed5.csv"

    def test_fast_vs_exact(self, tmp_path, train_csv):
        test_csv = tmp_path / "test.csv"
        xs = np.linspace(-0.9, 0.9, 15)
        test_csv.write_text("x1\n" + "\n".join(f"{v:.17g}" for v in xs) + "\n")
        fast_out = tmp_path / "fast.csv"
        exact_out = tmp_path / "exact.csv"
        assert run("predict", "--train", str(train_csv), "--test", str(test_csv),
                   "--out", str(fast_out), "--n-eigen", "20") == EXIT_OK
        assert run("predict", "--train", str(train_csv), "--test", str(test_csv),
                   "--out", str(exact_out), "--method", "exact") == EXIT_OK
        mu_fast = np.loadtxt(fast_out, delimiter=",", skiprows=1)[:, 1]
        mu_exact = np.loadtxt(exact_out, delimiter=",", skiprows=1)[:, 1]
        assert np.abs(mu_fast - mu_exact).max() < 1e-4

    def test_cov_column(self, tmp_path, train_csv):
        out = tmp_path / "p.csv"
        assert run("predict", "--train", str(train_csv), "--test", str(train_csv),
                   "--out", str(out), "--n-eigen", "10", "--cov") == EXIT_OK
        header = out.read_text().splitlines()[0]
        assert header == "x1,mean,var"
        var = np.loadtxt(out, delimiter=",", skiprows=1)[:, 2]
        assert np.all(var >= -1e-9)

    def test_missing_train_file(self, tmp_path):
        assert run("predict", "--train", str(tmp_path / "no.csv"),
                   "--test", str(tmp_path / "no.csv"),
                   "--out", str(tmp_path / "o.csv")) == EXIT_IO

    def test_epsilon_count_mismatch(self, tmp_path, train_csv):
        assert run("predict", "--train", str(train_csv), "--test", str(train_csv),
                   "--out", str(tmp_path / "o.csv"),
                   "--epsilon", "1.0,2.0") == EXIT_USAGE

    def test_budget_exceeded_is_numerical_exit(self, tmp_path):
        run("generate", "--n-samples", "30", "--dim", "2", "--seed", "1",
            "--out-dir", str(tmp_path))
        train = tmp_path / "train_N30_p2_seed1.csv"
        code = run("predict", "--train", str(train), "--test", str(train),
                   "--out", str(tmp_path / "o.csv"), "--n-eigen", "4000")
        assert code == EXIT_NUMERICAL


class TestPlotdata:
    def test_aggregates_bench_output(self, tmp_path, capsys):
        res = tmp_path / "res.csv"
        run("bench", "--out", str(res), "--reps", "2", "--dims", "1",
            "--backends", "serial", "--n-samples", "40", "--n-test", "10", "--quiet")
        code = run("plotdata", "--results", str(res), "--out-dir", str(tmp_path))
        assert code == EXIT_OK
        lines = (tmp_path / "plot_p1.csv").read_text().splitlines()
        assert len(lines) == 1 + 5  # default p=1 grid

    def test_malformed_results(self, tmp_path):
        bad = tmp_path / "bad.csv"
        bad.write_text("backend,p,n,rep,phase,seconds\nserial,1,3,0,warp,0.1\n")
        assert run("plotdata", "--results", str(bad), "--out-dir", str(tmp_path)) == EXIT_IO


class TestVerify:
    def test_fault_injection_names_oracle_check(self, capsys):
        code = run("verify", "--level", "fast", "--inject-fault")
        assert code == EXIT_VERIFY
        out = capsys.readouterr().out
        assert "oracle-equivalence" in out and "FAIL" in out


class TestUsage:
    def test_no_command(self):
        with pytest.raises(SystemExit) as excinfo:
            run()
        assert excinfo.value.code == EXIT_USAGE

    def test_unknown_command(self):
        with pytest.raises(SystemExit) as excinfo:
            run("frobnicate")
        assert excinfo.value.code == EXIT_USAGE
