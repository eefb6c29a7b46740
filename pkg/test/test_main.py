import json

import numpy as np
import pandas as pd
import pytest
import soundfile

from bridge_diffusion.src.common.config import SessionConfig
from bridge_diffusion.src.common.constants import Constants
from bridge_diffusion.src.common.helpers import read_csv
from bridge_diffusion.src.main import build_parser, main, resolve_session


def body(path):
    return [
        line for line in path.read_text(encoding="utf-8").splitlines()
        if not line.startswith("#")
    ]


@pytest.fixture()
def wav_pair(tmp_path, clean_buffer, noise_buffer):
    clean_path, noise_path = tmp_path / "clean.wav", tmp_path / "noise.wav"
    soundfile.write(str(clean_path), clean_buffer.samples, 16000, subtype="PCM_16")
    soundfile.write(str(noise_path), noise_buffer.samples, 16000, subtype="PCM_16")
    return clean_path, noise_path


class TestResolveSession:
    def test_default_preset(self, tmp_path):
        args = build_parser().parse_args(["analyze", "--out", str(tmp_path)])
        session = resolve_session(args)

        assert session.process.variant == "bbed"
        assert session.out_dir == str(tmp_path)

    def test_overrides(self, tmp_path):
        args = build_parser().parse_args(
            [
                "simulate", "--preset", "ouve-paper", "--seed", "9", "--steps", "60",
                "--t-rs", "0.5", "--paths", "100", "--out", str(tmp_path),
            ],
        )
        session = resolve_session(args)

        assert session.seed == 9
        assert session.reverse.seed == 9
        assert session.reverse.n_steps_full == 60
        assert session.reverse.t_rs == 0.5
        assert session.n_paths == 100

    def test_environment_out_dir(self, monkeypatch, tmp_path):
        monkeypatch.setenv(Constants.OUT_DIR_ENV_VAR, str(tmp_path / "env"))
        session = resolve_session(build_parser().parse_args(["analyze"]))

        assert session.out_dir == str(tmp_path / "env")


class TestAnalyze:
    def test_ouve_variance_column(self, tmp_path):
        assert main(["analyze", "--preset", "ouve-paper", "--out", str(tmp_path)]) == 0
        table = read_csv(tmp_path / "analyze_ouve-paper.csv")

        assert list(table.columns) == ["t", "interp_factor", "variance", "diffusion"]
        assert len(table) == 1000
        assert table["variance"].iloc[0] == 0
        assert table["variance"].iloc[-1] == pytest.approx(0.13142, abs=1e-5)

    def test_compare_presets(self, tmp_path):
        assert main(["analyze", "--compare", "--out", str(tmp_path)]) == 0
        bridge = read_csv(tmp_path / "analyze_bbed-paper.csv")
        peak = bridge["variance"].idxmax()

        assert (tmp_path / "analyze_ouve-paper.csv").exists()
        assert bridge["variance"].max() == pytest.approx(0.2857, abs=5e-4)
        assert bridge["t"].iloc[peak] == pytest.approx(0.7, abs=0.03)

    def test_grid(self, tmp_path):
        assert main(["analyze", "--grid", "--out", str(tmp_path)]) == 0
        grid = read_csv(tmp_path / "analyze_bbed_grid.csv")
        end_times = read_csv(tmp_path / "analyze_bbed_end_times.csv")

        assert len(grid) == len(Constants.BBED_K_GRID) * 2
        assert list(end_times["T"]) == list(Constants.BBED_T_GRID)

    def test_resolved_config_reproduces_run(self, tmp_path):
        first, second = tmp_path / "first", tmp_path / "second"
        main(["analyze", "--preset", "ouve-paper", "--seed", "3", "--out", str(first)])
        config_path = first / Constants.RESOLVED_CONFIG_FILE_NAME
        main(["analyze", "--config", str(config_path), "--out", str(second)])

        loaded = SessionConfig.load(config_path)
        assert loaded.seed == 3
        assert body(first / "analyze_ouve-paper.csv") == body(
            second / "analyze_ouve.csv",
        )


class TestSimulate:
    def test_moment_rows(self, tmp_path):
        argv = ["simulate", "--paths", "2000", "--em-steps", "200", "--records", "4"]
        assert main(argv + ["--out", str(tmp_path)]) == 0
        table = read_csv(tmp_path / "simulate.csv")

        assert list(table.columns) == ["t", "stat_name", "value", "stderr"]
        assert set(table["stat_name"]) == {
            "mean_real",
            "mean_imag",
            "var",
            "kernel_mean_real",
            "kernel_mean_imag",
            "kernel_var",
        }
        assert table["t"].nunique() == 5
        assert (tmp_path / "simulate.csv").read_text().startswith("# label: bbed")

    def test_reruns_are_byte_identical(self, tmp_path):
        argv = ["simulate", "--paths", "500", "--em-steps", "50", "--seed", "2"]
        main(argv + ["--out", str(tmp_path / "a")])
        main(argv + ["--out", str(tmp_path / "b")])

        assert body(tmp_path / "a" / "simulate.csv") == body(
            tmp_path / "b" / "simulate.csv",
        )


class TestVerify:
    @pytest.mark.slow
    def test_corrupted_variance_fails(self, tmp_path):
        exit_code = main(
            [
                "verify", "--paths", "2000", "--em-steps", "400",
                "--corrupt-variance", "1.5", "--out", str(tmp_path),
            ],
        )
        report = json.loads((tmp_path / "verify_report.json").read_text())

        assert exit_code == 5
        assert report["body"]["passed"] is False
        assert report["body"]["variance_scale"] == 1.5
        assert report["schema_version"] == Constants.REPORT_SCHEMA_VERSION

        table = read_csv(tmp_path / "verify.csv")
        assert list(table.columns)[:4] == ["t", "stat_name", "value", "stderr"]
        assert not table["passed"].all()
        assert table.loc[table["stat_name"].str.contains("kernel"), "t"].notna().all()


class TestMismatch:
    def test_synthetic_mixtures(self, tmp_path):
        argv = ["mismatch", "--synthetic", "2", "--points", "5"]
        assert main(argv + ["--out", str(tmp_path)]) == 0
        table = read_csv(tmp_path / "mismatch.csv")
        bridge = table[table["variant"] == "bbed"]
        ouve = table[table["variant"] == "ouve"]

        assert set(table["variant"]) == {"bbed", "ouve", "mixture"}
        assert abs(bridge["dsnr_db"].iloc[-1]) < 0.1
        assert ouve["dsnr_db"].iloc[-1] > bridge["dsnr_db"].iloc[-1]
        assert np.all(np.diff(bridge["dsnr_db"]) < 0)

    def test_wav_pairs(self, tmp_path, wav_pair):
        argv = ["mismatch", "--pair", *map(str, wav_pair), "--points", "3"]
        assert main(argv + ["--out", str(tmp_path)]) == 0
        assert len(read_csv(tmp_path / "mismatch.csv")) == 9

    def test_missing_wav(self, tmp_path):
        argv = ["mismatch", "--pair", "missing.wav", "other.wav"]
        assert main(argv + ["--out", str(tmp_path)]) == 4


class TestEnhanceOracle:
    def test_halved_iterations(self, tmp_path):
        argv = ["enhance-oracle", "--preset", "ouve-paper", "--t-rs", "0.5"]
        assert main(argv + ["--out", str(tmp_path)]) == 0
        metrics = json.loads((tmp_path / "enhance_metrics.json").read_text())["body"]

        assert metrics["n_iterations"] == 15
        assert metrics["n_steps_full"] == 30
        assert metrics["oracle"] is True
        assert metrics["score"] == "conditional-oracle"
        assert metrics["enhanced"]["si_sdr"] > metrics["mixture"]["si_sdr"]

    def test_wav_inputs_keep_length(self, tmp_path, wav_pair, clean_buffer):
        clean, noise = map(str, wav_pair)
        argv = ["enhance-oracle", "--clean", clean, "--noise", noise, "--snr", "5"]
        assert main(argv + ["--out", str(tmp_path)]) == 0
        enhanced, sample_rate = soundfile.read(str(tmp_path / "enhanced.wav"))

        assert sample_rate == 16000
        assert len(enhanced) == len(clean_buffer)

    def test_invalid_reverse_start(self, tmp_path):
        argv = ["enhance-oracle", "--t-rs", "2.0", "--out", str(tmp_path)]
        assert main(argv) == 1


class TestScore:
    def test_scores_per_file(self, tmp_path, wav_pair):
        clean, noise = map(str, wav_pair)
        argv = ["score", "--triple", clean, clean, noise, "--out", str(tmp_path)]
        assert main(argv) == 0
        table = pd.read_csv(tmp_path / "score.csv")

        assert list(table.columns) == ["file", "si_sdr", "si_sir", "si_sar"]
        assert table["file"].iloc[0] == "clean.wav"


class TestSpecfun:
    def test_prints_value(self, tmp_path, capsys):
        assert main(["specfun", "ei", "1", "--out", str(tmp_path)]) == 0
        value, error = capsys.readouterr().out.split()

        assert float(value) == pytest.approx(1.895117816355937, abs=1e-12)
        assert float(error) < 1e-12

    def test_domain_error_exit_code(self, tmp_path):
        assert main(["specfun", "ei", "0", "--out", str(tmp_path)]) == 2
