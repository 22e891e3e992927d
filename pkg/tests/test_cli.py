import csv
import io
import math

import numpy as np
import pytest

from symkio import experiment
from symkio.cli import main
from symkio.experiment import ALGOS, CSV_HEADER, ExperimentSpec, run, sweep
from symkio.matrix import random_matrix, random_spd, read_matrix, reference_cholesky, reference_syrk, write_matrix


def spec(algo, n, s, m=None, **kw):
    if algo in experiment.SYRK_ALGOS and m is None:
        m = 4
    if algo == "tbs-tiled":
        kw.setdefault("b", 2)
    return ExperimentSpec(algo, n, s, m, **kw)


class TestSpec:
    def test_rejects_bad_combos(self):
        with pytest.raises(ValueError):
            ExperimentSpec("gemm", 4, 15)
        with pytest.raises(ValueError):
            ExperimentSpec("tbs", 4, 15)  # no M
        with pytest.raises(ValueError):
            ExperimentSpec("lbc", 4, 15, 3)
        with pytest.raises(ValueError):
            ExperimentSpec("tbs-tiled", 4, 15, 3)  # no b
        with pytest.raises(ValueError):
            ExperimentSpec("tbs", 4, 15, 3, mode="fast")
        with pytest.raises(ValueError):
            ExperimentSpec("ooc-chol", 10**5, 15, mode="compute")

    def test_block_default(self):
        assert spec("lbc", 1000, 465).block == 31
        assert spec("tbs", 100, 15).block is None


class TestRun:
    def test_deterministic(self):
        a = run(spec("tbs", 300, 55, 16))
        b = run(spec("tbs", 300, 55, 16))
        assert a.csv_row() == b.csv_row()

    @pytest.mark.parametrize("algo", ALGOS)
    def test_modes_agree(self, algo):
        c = run(spec(algo, 70, 28, mode="compute", seed=3))
        n = run(spec(algo, 70, 28, mode="count", seed=3))
        fields = ("loads_A", "loads_C", "stores", "peak_resident")
        assert [getattr(c, f) for f in fields] == [getattr(n, f) for f in fields]
        assert c.ok and n.ok
        assert c.max_error <= 1e-9

    def test_tbs_beats_ooc(self):
        t = run(spec("tbs", 870, 465, 32))
        o = run(spec("ooc-syrk", 870, 465, 32))
        assert t.loads_A < o.loads_A
        assert t.ratio >= 1 / math.sqrt(2)

    def test_report_fields(self):
        r = run(spec("lbc", 100, 55))
        assert r.lower_bound == pytest.approx(100**3 / (3 * math.sqrt(2) * math.sqrt(55)))
        assert r.ratio == pytest.approx(r.loads_A / (100**3 / math.sqrt(55)))
        assert r.upper_envelope >= r.loads_A
        assert r.csv_row().split(",")[:6] == ["lbc", "100", "", "55", "10", "count"]

    def test_result_sink(self):
        sink = []
        A = random_spd(12, 4)
        run(spec("lbc", 12, 15, mode="compute"), A_in=A.copy(), result_sink=sink)
        assert np.allclose(sink[0].data, reference_cholesky(A).data)

    def test_violation_recorded(self, monkeypatch):
        monkeypatch.setattr(experiment, "upper_envelope", lambda s: 0.0)
        assert not run(spec("tbs", 20, 15)).ok


class TestSweep:
    def test_empty(self):
        buf = io.StringIO()
        sweep([], buf)
        assert buf.getvalue() == CSV_HEADER + "\n"

    def test_rows_in_order(self, tmp_path):
        specs = [spec("tbs", 50, 15), spec("lbc", 30, 15), spec("ooc-syrk", 40, 55, 3)]
        out = tmp_path / "s.csv"
        reports, errors = sweep(specs, out)
        rows = list(csv.DictReader(out.open()))
        assert not errors
        assert [(r["algo"], r["N"]) for r in rows] == [("tbs", "50"), ("lbc", "30"), ("ooc-syrk", "40")]
        assert list(rows[0]) == CSV_HEADER.split(",")

    def test_errors_reported_per_row(self):
        reports, errors = sweep([spec("tbs", 10, 2), spec("tbs", 10, 15)])
        assert len(reports) == 1 and len(errors) == 1
        assert "ValueError" in errors[0][1]

    def test_lbc_trend(self):
        reports, _ = sweep([spec("lbc", n, 120) for n in (100, 400, 900)])
        ratios = [r.ratio for r in reports]
        assert ratios == sorted(ratios, reverse=True)


class TestMain:
    def test_run_stdout(self, capsys):
        assert main(["run", "--algo", "tbs", "--n", "95", "--m", "8", "--mem", "15"]) == 0
        lines = capsys.readouterr().out.splitlines()
        assert lines[0] == CSV_HEADER
        assert lines[1].startswith("tbs,95,8,15,,count,")

    def test_run_compute_python_backend(self, capsys):
        rc = main(["--backend", "python", "run", "--algo", "tbs-tiled", "--tile", "2",
                   "--n", "40", "--m", "3", "--mem", "24", "--mode", "compute"])
        assert rc == 0
        assert ",2,compute," in capsys.readouterr().out

    def test_matrix_files(self, tmp_path):
        src, dst = tmp_path / "a.bin", tmp_path / "l.bin"
        A = random_spd(20, 5)
        write_matrix(src, A)
        rc = main(["run", "--algo", "lbc", "--mem", "15", "--mode", "compute", "--in", str(src),
                   "--out-matrix", str(dst), "--out", str(tmp_path / "r.csv")])
        assert rc == 0
        assert np.allclose(read_matrix(dst).data, reference_cholesky(A).data)

    def test_syrk_input_file(self, tmp_path):
        src, dst = tmp_path / "a.bin", tmp_path / "c.bin"
        A = random_matrix(9, 4, 1)
        write_matrix(src, A)
        assert main(["run", "--algo", "ooc-syrk", "--mem", "15", "--mode", "compute",
                     "--in", str(src), "--out-matrix", str(dst), "--out", str(tmp_path / "r.csv")]) == 0
        C = read_matrix(dst)
        assert C.n == 9

    def test_sweep_and_plot(self, tmp_path):
        out, dat = tmp_path / "s.csv", tmp_path / "s.dat"
        rc = main(["sweep", "--algo", "tbs,lbc", "--n", "60,120", "--m", "4,8", "--mem", "28",
                   "--out", str(out), "--plot-data", str(dat)])
        assert rc == 0
        rows = list(csv.DictReader(out.open()))
        # 2 N x 2 M for tbs, the M axis collapses for lbc
        assert len(rows) == 6
        blocks = dat.read_text().split("\n\n\n")
        assert len(blocks) == 3 and blocks[0].startswith("# algo=tbs M=4 S=28")

    def test_plan(self, capsys):
        assert main(["plan", "--n", "5000", "--mem", "120"]) == 0
        lines = capsys.readouterr().out.splitlines()
        assert lines[0] == "N,S,b,k,q,c,l,fallback,depth,gap"
        assert lines[1].startswith("5000,120,1,15,30030,331,35,0,2,")
        assert lines[-1].split(",")[7] == "1"

    def test_certify(self, capsys):
        assert main(["certify", "--n", "3", "--m", "2"]) == 0
        lines = capsys.readouterr().out.splitlines()
        assert lines[0] == "X,oracle_max,hmax_bound,slack"
        assert lines[7].split(",")[:2] == ["6", "3"]

    def test_certify_refuses(self):
        assert main(["certify", "--n", "6", "--m", "4", "--oracle-max-triples", "20"]) == 1

    def test_error_exit(self):
        assert main(["run", "--algo", "lbc", "--n", "10", "--mem", "2"]) == 1

    def test_violation_exit(self, monkeypatch):
        monkeypatch.setattr(experiment, "upper_envelope", lambda s: 0.0)
        assert main(["run", "--algo", "tbs", "--n", "20", "--m", "2", "--mem", "15"]) == 1

    def test_usage_error(self):
        with pytest.raises(SystemExit) as exc:
            main(["run", "--algo", "nope", "--n", "3", "--mem", "3"])
        assert exc.value.code == 2


def test_backend_flag_is_scoped():
    from symkio import _backend

    before = _backend.name()
    assert main(["--backend", "python", "plan", "--n", "50", "--mem", "15"]) == 0
    assert _backend.name() == before
