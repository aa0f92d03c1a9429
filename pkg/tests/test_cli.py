import json

import numpy as np
import pytest

from spectral_denoise import cli, io
from spectral_denoise.simlab import NoiseSpec, SignalSpec, gen_noise, gen_signal


@pytest.fixture
def spiked_csv(tmp_path):
    rng = np.random.default_rng(17)
    p, n = 120, 180
    sig = gen_signal(SignalSpec("random_orthonormal", p, n, t=(4.0, 2.6)), rng)
    Y = sig.X + gen_noise(NoiseSpec(seed=99), p, n)
    path = tmp_path / "Y.csv"
    io.write_dense_csv(path, Y)
    return path, Y, sig


class TestIoFormats:
    def test_dense_round_trip_is_lossless(self, tmp_path):
        rng = np.random.default_rng(0)
        M = rng.standard_normal((17, 9)) * 10.0 ** rng.integers(-8, 8, (17, 9))
        path = tmp_path / "m.csv"
        io.write_dense_csv(path, M)
        back = io.read_dense_csv(path)
        assert np.array_equal(back, M)

    def test_dense_header_tolerated(self, tmp_path):
        path = tmp_path / "m.csv"
        path.write_text("a,b\n1.5,2\n3,4\n")
        assert np.array_equal(io.read_dense_csv(path), [[1.5, 2.0], [3.0, 4.0]])

    def test_dense_ragged_rejected(self, tmp_path):
        path = tmp_path / "m.csv"
        path.write_text("1,2\n3\n")
        with pytest.raises(io.MatrixFileError):
            io.read_dense_csv(path)

    def test_dense_sentinel_mask(self, tmp_path):
        path = tmp_path / "m.csv"
        path.write_text("1.0,,2.0\n,3.0,\n")
        matrix, mask = io.read_dense_csv(path, missing_sentinel="")
        assert np.array_equal(mask, [[True, False, True], [False, True, False]])
        assert matrix[0, 2] == 2.0 and matrix[1, 0] == 0.0

    def test_coordinate_round_trip(self, tmp_path):
        path = tmp_path / "c.csv"
        io.write_coordinate_csv(path, [0, 2, 1], [1, 0, 2], [0.5, -1.25, 3.75])
        rows, cols, values = io.read_coordinate_csv(path)
        assert rows.tolist() == [0, 2, 1]
        assert values.tolist() == [0.5, -1.25, 3.75]

    def test_coordinate_header_required(self, tmp_path):
        path = tmp_path / "c.csv"
        path.write_text("0,1,2.0\n")
        with pytest.raises(io.MatrixFileError):
            io.read_coordinate_csv(path)

    def test_report_validation(self):
        with pytest.raises(ValueError):
            io.validate_report({"schema": 1})


class TestDenoiseCommands:
    def test_identity_weights_match_shrink(self, tmp_path, spiked_csv):
        path, Y, sig = spiked_csv
        out1, out2 = tmp_path / "a.csv", tmp_path / "b.csv"
        assert cli.main(["denoise", "--input", str(path), "--output", str(out1)]) == 0
        assert cli.main(["shrink", "--input", str(path), "--output", str(out2)]) == 0
        A, B = io.read_dense_csv(out1), io.read_dense_csv(out2)
        assert np.linalg.norm(A - B) <= 1e-8 * np.linalg.norm(B)

    def test_report_schema(self, tmp_path, spiked_csv):
        path, Y, sig = spiked_csv
        report_path = tmp_path / "rep.json"
        code = cli.main(["denoise", "--input", str(path),
                         "--output", str(tmp_path / "x.csv"),
                         "--report", str(report_path)])
        assert code == 0
        report = json.loads(report_path.read_text())
        io.validate_report(report)
        assert report["rank"] == 2
        assert len(report["spike"]["t"]) == 2
        assert report["geometry"]["mu"] == pytest.approx(1.0)

    def test_weighted_run_with_indices(self, tmp_path, spiked_csv):
        path, Y, sig = spiked_csv
        idx = tmp_path / "rows.json"
        idx.write_text(json.dumps(list(range(60))))
        code = cli.main(["denoise", "--input", str(path),
                         "--row-weight-indices", str(idx),
                         "--output", str(tmp_path / "x.csv"),
                         "--report", str(tmp_path / "r.json")])
        assert code == 0
        report = json.loads((tmp_path / "r.json").read_text())
        assert report["geometry"]["mu"] == pytest.approx(0.5)

    def test_no_signal_writes_zero_matrix(self, tmp_path):
        rng = np.random.default_rng(1)
        path = tmp_path / "noise.csv"
        io.write_dense_csv(path, rng.standard_normal((60, 80)) / 80.0)
        out = tmp_path / "x.csv"
        report_path = tmp_path / "r.json"
        code = cli.main(["shrink", "--input", str(path), "--output", str(out),
                         "--report", str(report_path)])
        assert code == 0
        assert np.all(io.read_dense_csv(out) == 0)
        assert json.loads(report_path.read_text())["rank"] == 0

    def test_forced_rank_below_threshold_exits_4(self, tmp_path, spiked_csv, capsys):
        path, Y, sig = spiked_csv
        code = cli.main(["shrink", "--input", str(path), "--rank", "40",
                         "--output", str(tmp_path / "x.csv")])
        assert code == 4
        assert "index" in capsys.readouterr().err

    def test_malformed_file_exits_2(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("1,2\nx,y,z\n")
        assert cli.main(["shrink", "--input", str(path),
                         "--output", str(tmp_path / "x.csv")]) == 2

    def test_dimension_mismatch_exits_3(self, tmp_path, spiked_csv):
        path, Y, sig = spiked_csv
        diag = tmp_path / "w.csv"
        io.write_dense_csv(diag, np.ones((1, 7)))
        assert cli.main(["denoise", "--input", str(path),
                         "--row-weight-diag", str(diag),
                         "--output", str(tmp_path / "x.csv")]) == 3


class TestLocalizedCommand:
    def test_blocks_and_partition_file_agree(self, tmp_path, spiked_csv):
        path, Y, sig = spiked_csv
        part = tmp_path / "rows.json"
        part.write_text(json.dumps([list(range(0, 60)), list(range(60, 120))]))
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        assert cli.main(["localized", "--input", str(path), "--row-blocks", "2",
                         "--col-blocks", "3", "--output", str(a)]) == 0
        assert cli.main(["localized", "--input", str(path),
                         "--row-partition", str(part), "--col-blocks", "3",
                         "--output", str(b)]) == 0
        assert np.array_equal(io.read_dense_csv(a), io.read_dense_csv(b))


class TestSubmatrixCommand:
    def test_weighted_and_baseline(self, tmp_path, spiked_csv):
        path, Y, sig = spiked_csv
        rows = tmp_path / "rows.json"
        cols = tmp_path / "cols.json"
        rows.write_text(json.dumps(list(range(50))))
        cols.write_text(json.dumps(list(range(70))))
        out = tmp_path / "x.csv"
        assert cli.main(["submatrix", "--input", str(path), "--rows", str(rows),
                         "--cols", str(cols), "--output", str(out)]) == 0
        assert io.read_dense_csv(out).shape == (50, 70)
        assert cli.main(["submatrix", "--input", str(path), "--rows", str(rows),
                         "--cols", str(cols), "--baseline",
                         "--output", str(out)]) == 0
        assert io.read_dense_csv(out).shape == (50, 70)


class TestWhitenCommand:
    def test_with_files_and_estimated(self, tmp_path):
        rng = np.random.default_rng(23)
        p, n = 150, 260
        sig = gen_signal(SignalSpec("random_orthonormal", p, n, t=(5.0,)), rng)
        s = np.linspace(0.4, 1.0, p)
        t = np.linspace(0.4, 1.0, n)
        G = gen_noise(NoiseSpec(seed=31), p, n)
        Y = sig.X + np.sqrt(s)[:, None] * G * np.sqrt(t)[None, :]
        y_path = tmp_path / "Y.csv"
        io.write_dense_csv(y_path, Y)
        io.write_dense_csv(tmp_path / "s.csv", s.reshape(1, -1))
        io.write_dense_csv(tmp_path / "t.csv", t.reshape(1, -1))
        assert cli.main(["whiten", "--input", str(y_path),
                         "--cov-s", str(tmp_path / "s.csv"),
                         "--cov-t", str(tmp_path / "t.csv"),
                         "--output", str(tmp_path / "a.csv")]) == 0
        assert cli.main(["whiten", "--input", str(y_path), "--estimate-cov",
                         "--output", str(tmp_path / "b.csv")]) == 0
        assert cli.main(["whiten", "--input", str(y_path),
                         "--output", str(tmp_path / "c.csv")]) == 5


class TestCompleteCommand:
    def _write_inputs(self, tmp_path, fmt):
        rng = np.random.default_rng(29)
        p, n = 100, 160
        sig = gen_signal(SignalSpec("random_orthonormal", p, n,
                                    t=(10.0 * np.sqrt(n),)), rng)
        full = sig.X + rng.standard_normal((p, n))
        q_r, q_c = np.full(p, 0.95), np.full(n, 0.95)
        mask = rng.random((p, n)) < np.outer(q_r, q_c)
        io.write_dense_csv(tmp_path / "qr.csv", q_r.reshape(1, -1))
        io.write_dense_csv(tmp_path / "qc.csv", q_c.reshape(1, -1))
        if fmt == "coordinate":
            rr, cc = np.nonzero(mask)
            io.write_coordinate_csv(tmp_path / "obs.csv", rr, cc, full[mask])
        else:
            with open(tmp_path / "obs.csv", "w") as fh:
                for i in range(p):
                    fh.write(",".join(repr(float(full[i, j])) if mask[i, j] else ""
                                      for j in range(n)) + "\n")
        return sig

    @pytest.mark.parametrize("fmt", ["coordinate", "dense"])
    def test_complete_runs(self, tmp_path, fmt):
        sig = self._write_inputs(tmp_path, fmt)
        args = ["complete", "--input", str(tmp_path / "obs.csv"),
                "--q-row", str(tmp_path / "qr.csv"),
                "--q-col", str(tmp_path / "qc.csv"),
                "--output", str(tmp_path / "x.csv"),
                "--report", str(tmp_path / "r.json")]
        if fmt == "dense":
            args += ["--input-format", "dense"]
        assert cli.main(args) == 0
        X_hat = io.read_dense_csv(tmp_path / "x.csv")
        assert X_hat.shape == sig.X.shape
        err = np.linalg.norm(X_hat - sig.X) / np.linalg.norm(sig.X)
        assert err < 0.4
        report = json.loads((tmp_path / "r.json").read_text())
        assert report["rank"] >= 1
        assert report["observed_entries"] > 0


class TestSimulateCommand:
    def test_jobs_do_not_change_aggregates(self, tmp_path):
        cfg = {"schema": 1, "scenario": "rank-estimation", "seed": 13,
               "replicates": 4, "params": {"p": 100, "n": 200}}
        cfg_path = tmp_path / "cfg.json"
        cfg_path.write_text(json.dumps(cfg))
        assert cli.main(["simulate", "--config", str(cfg_path),
                         "--output-dir", str(tmp_path / "one"), "--jobs", "1"]) == 0
        assert cli.main(["simulate", "--config", str(cfg_path),
                         "--output-dir", str(tmp_path / "eight"), "--jobs", "8"]) == 0
        a = json.loads((tmp_path / "one" / "report.json").read_text())
        b = json.loads((tmp_path / "eight" / "report.json").read_text())
        assert a["aggregates"] == b["aggregates"]
        assert (tmp_path / "one" / "replicates.csv").read_text() \
            == (tmp_path / "eight" / "replicates.csv").read_text()

    def test_env_seed_fallback(self, tmp_path, monkeypatch):
        monkeypatch.setenv(cli.ENV_SEED, "77")
        assert cli.main(["simulate", "--scenario", "rank-estimation",
                         "--replicates", "2", "--output-dir", str(tmp_path / "o"),
                         ]) == 0
        report = json.loads((tmp_path / "o" / "report.json").read_text())
        assert report["seeds"]["base"] == 77
