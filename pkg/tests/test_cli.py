import math
import subprocess
import sys

import pytest

from stimemit import cli
from stimemit.experiment import SEED_ENV_VAR
from stimemit.fitting import FitResult


def run(argv, capsys):
    code = cli.main(argv)
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture
def amp_config(tmp_path):
    path = tmp_path / "amp.cfg"
    path.write_text(f"alpha = 0.1\ng = 0.01\nmax_overlap = {math.sqrt(0.88)!r}\ntc = 330\n")
    return path


@pytest.fixture(autouse=True)
def _no_env_seed(monkeypatch):
    monkeypatch.delenv(SEED_ENV_VAR, raising=False)


class TestEnhance:
    def test_table(self, capsys):
        code, out, _ = run(["enhance", "--n-max", "2"], capsys)
        assert code == 0
        rows = [ln.split() for ln in out.splitlines()[1:]]
        assert rows == [
            ["0", "1", "0.5", "0.5", "1"],
            ["1", "2", "0.5", "0.25", "2"],
            ["2", "3", "0.375", "0.125", "3"],
        ]

    def test_cutoff_too_small(self, capsys):
        code, _, err = run(["enhance", "--n-max", "5"], capsys)
        assert code == 2
        assert "cutoff" in err

    def test_cutoff_flag(self, capsys):
        code, out, _ = run(["enhance", "--n-max", "5", "--cutoff", "7"], capsys)
        assert code == 0
        assert out.splitlines()[-1].split()[-1] == "6"


class TestScanAndFit:
    def test_scan_then_fit(self, amp_config, tmp_path, capsys):
        csv = tmp_path / "s.csv"
        code, _, _ = run(["scan-amp", "--config", str(amp_config), "--pattern", "abcd", "--out", str(csv)], capsys)
        assert code == 0
        code, out, _ = run(["fit", "--in", str(csv)], capsys)
        assert code == 0
        fields = dict(ln.split()[:2] for ln in out.splitlines())
        assert float(fields["v"]) == pytest.approx(2 * 0.88, abs=0.04)
        assert float(fields["tc"]) == pytest.approx(330.0, rel=0.05)
        assert fields["converged"] == "true"
        assert float(fields["peak_to_wing"]) == pytest.approx(1 + float(fields["v"]), rel=1e-9)

    def test_scan_bs_three_fold(self, amp_config, tmp_path, capsys):
        csv = tmp_path / "s.csv"
        assert run(["scan-bs", "--config", str(amp_config), "--pattern", "abd", "--out", str(csv)], capsys)[0] == 0
        code, out, _ = run(["fit", "--in", str(csv)], capsys)
        fields = dict(ln.split()[:2] for ln in out.splitlines())
        assert code == 0
        assert float(fields["v"]) == pytest.approx(0.88, abs=0.04)

    def test_stdout(self, amp_config, capsys):
        code, out, _ = run(["scan-amp", "--config", str(amp_config)], capsys)
        assert code == 0
        assert out.startswith("delay,value,sigma\n")
        assert len(out.splitlines()) == 22

    def test_seed_flag_overrides_env(self, amp_config, monkeypatch, capsys):
        amp_config.write_text(amp_config.read_text() + "shots = 1e10\n")
        monkeypatch.setenv(SEED_ENV_VAR, "5")
        _, env_out, _ = run(["scan-amp", "--config", str(amp_config)], capsys)
        _, flag_out, _ = run(["scan-amp", "--config", str(amp_config), "--seed", "6"], capsys)
        monkeypatch.setenv(SEED_ENV_VAR, "6")
        _, env6_out, _ = run(["scan-amp", "--config", str(amp_config)], capsys)
        assert env_out != flag_out
        assert flag_out == env6_out

    def test_byte_identical_reruns(self, amp_config, tmp_path, capsys):
        amp_config.write_text(amp_config.read_text() + "shots = 1e10\nseed = 9\n")
        paths = [tmp_path / "a.csv", tmp_path / "b.csv"]
        for p in paths:
            assert run(["scan-amp", "--config", str(amp_config), "--out", str(p)], capsys)[0] == 0
        assert paths[0].read_bytes() == paths[1].read_bytes()

    def test_truncation_note(self, tmp_path, capsys):
        cfg = tmp_path / "c.cfg"
        cfg.write_text("cutoff = 4\n")
        code, _, err = run(["scan-amp", "--config", str(cfg)], capsys)
        assert code == 0 and "truncated" in err

    def test_flat_file(self, tmp_path, capsys):
        csv = tmp_path / "flat.csv"
        csv.write_text("delay,value,sigma\n" + "".join(f"{d},5,1\n" for d in range(-10, 11)))
        code, out, _ = run(["fit", "--in", str(csv)], capsys)
        assert code == 0
        fields = dict(ln.split()[:2] for ln in out.splitlines())
        assert float(fields["v"]) == 0.0
        assert fields["peak_to_wing"] == "1"

    def test_unweighted(self, amp_config, tmp_path, capsys):
        csv = tmp_path / "s.csv"
        run(["scan-amp", "--config", str(amp_config), "--out", str(csv)], capsys)
        code, out, _ = run(["fit", "--in", str(csv), "--unweighted"], capsys)
        assert code == 0 and "converged true" in out

    def test_non_converged_fit(self, tmp_path, monkeypatch, capsys):
        stuck = FitResult(1.0, 0.5, 0.0, 1.0, 0.1, 0.1, 0.1, 0.1, 3.0, 17, False, 200)
        monkeypatch.setattr(cli, "fit_gaussian_peak", lambda points, weighted=True: stuck)
        csv = tmp_path / "s.csv"
        csv.write_text("delay,value,sigma\n0,1,1\n")
        code, out, _ = run(["fit", "--in", str(csv)], capsys)
        assert code == 3
        assert "converged false" in out


class TestErrors:
    @pytest.mark.parametrize("argv", [
        [],
        ["bogus"],
        ["enhance"],
        ["enhance", "--n-max", "two"],
        ["scan-amp"],
        ["scan-amp", "--config", "x", "--pattern", "abc"],
        ["fit"],
    ])
    def test_usage(self, argv, capsys):
        assert run(argv, capsys)[0] == 1

    def test_help(self, capsys):
        code, out, _ = run(["--help"], capsys)
        assert code == 0 and "enhance" in out

    def test_unknown_config_key(self, tmp_path, capsys):
        cfg = tmp_path / "c.cfg"
        cfg.write_text("gain = 0.1\n")
        code, _, err = run(["scan-amp", "--config", str(cfg)], capsys)
        assert code == 2 and "gain" in err

    def test_missing_config(self, tmp_path, capsys):
        assert run(["scan-amp", "--config", str(tmp_path / "none.cfg")], capsys)[0] == 2

    def test_cutoff_too_small_for_pattern(self, tmp_path, capsys):
        cfg = tmp_path / "c.cfg"
        cfg.write_text("cutoff = 3\n")
        code, _, err = run(["scan-bs", "--config", str(cfg), "--pattern", "abcd"], capsys)
        assert code == 2 and "ABCD" in err

    def test_fit_too_few_points(self, tmp_path, capsys):
        csv = tmp_path / "s.csv"
        csv.write_text("delay,value,sigma\n0,1,1\n1,2,1\n")
        assert run(["fit", "--in", str(csv)], capsys)[0] == 2

    def test_bad_csv(self, tmp_path, capsys):
        csv = tmp_path / "s.csv"
        csv.write_text("nope\n")
        assert run(["fit", "--in", str(csv)], capsys)[0] == 2


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "stimemit", "enhance", "--n-max", "1"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    assert proc.stdout.splitlines()[2].split()[-1] == "2"
