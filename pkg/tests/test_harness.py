import json
import math

import numpy as np
import pytest

from grangerseq.errors import ParseError
from grangerseq.harness import (
    RocCurve,
    WindowedResult,
    emit,
    ingest_pair,
    read_roc_csv,
    run_roc,
    run_sequential,
    run_windowed,
    threshold_grid_for,
    trapezoid_auc,
    window_starts,
)
from grangerseq.model import VarModel
from grangerseq.samples import read_pairs, write_pairs
from grangerseq.seqdetect import SeqConfig


@pytest.fixture(scope="module")
def small_roc():
    return run_roc(VarModel.toy(0.25), 10.0, 60, 300, seed=5)


class TestRoc:
    def test_endpoints(self):
        curve = run_roc(VarModel.toy(0.25), 0.0, 40, 200, seed=1, threshold_grid=[0.0, 1e9])
        top, bottom = curve.points
        assert (top.p_fa_empirical, top.p_d_empirical) == (0.0, 0.0)
        assert (bottom.p_fa_empirical, bottom.p_d_empirical) == (1.0, 1.0)
        assert bottom.p_fa_theory == 1.0 and top.p_d_theory < 1e-12

    def test_thresholds_decreasing(self, small_roc):
        lams = [p.lam for p in small_roc.points]
        assert lams == sorted(lams, reverse=True)
        fa = [p.p_fa_empirical for p in small_roc.points]
        assert fa == sorted(fa)

    def test_theory_columns(self, small_roc):
        for p in small_roc.points:
            assert p.p_d_theory >= p.p_fa_theory

    def test_reproducible(self, small_roc):
        again = run_roc(VarModel.toy(0.25), 10.0, 60, 300, seed=5)
        np.testing.assert_array_equal(again.t_alt, small_roc.t_alt)
        np.testing.assert_array_equal(again.t_null, small_roc.t_null)

    def test_worker_count_irrelevant(self, small_roc):
        par = run_roc(VarModel.toy(0.25), 10.0, 60, 300, seed=5, workers=3)
        np.testing.assert_array_equal(par.t_alt, small_roc.t_alt)
        np.testing.assert_array_equal(par.t_null, small_roc.t_null)

    def test_pd_at_pfa(self, small_roc):
        pd = small_roc.pd_at_pfa([0.05, 0.5])
        assert 0 <= pd[0] <= pd[1] <= 1

    @pytest.mark.parametrize("kwargs", [dict(trials=0), dict(sigma_mode="magic"), dict(threshold_grid=[])])
    def test_invalid(self, kwargs):
        args = dict(model=VarModel.toy(), snr_db=None, N=20, trials=5, seed=0) | kwargs
        with pytest.raises(ValueError):
            run_roc(**args)


class TestAuc:
    def test_diagonal(self):
        assert trapezoid_auc([0.2, 0.5], [0.2, 0.5]) == pytest.approx(0.5)

    def test_perfect(self):
        assert trapezoid_auc([0.0], [1.0]) == pytest.approx(1.0)

    def test_threshold_grid(self):
        g = threshold_grid_for(2)
        assert np.all(np.diff(g) < 0)
        assert np.any(np.abs(g - 2 * math.log(10)) < 1e-12)


class TestEmit:
    def test_csv_round_trip(self, small_roc, tmp_path):
        path = tmp_path / "roc.csv"
        emit(small_roc, path)
        (back,) = read_roc_csv(path)
        assert back.points == small_roc.points
        assert back.meta["N"] == 60 and back.meta["snr_db"] == 10.0

    def test_byte_identical(self, small_roc, tmp_path):
        emit(small_roc, tmp_path / "a.csv")
        emit(run_roc(VarModel.toy(0.25), 10.0, 60, 300, seed=5), tmp_path / "b.csv")
        assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()

    def test_header_only(self, tmp_path):
        path = tmp_path / "empty.csv"
        emit([], path)
        assert path.read_text() == ",".join(RocCurve.COLUMNS) + "\n"

    def test_jsonl(self, small_roc, tmp_path):
        path = tmp_path / "roc.jsonl"
        emit(small_roc, path, fmt="jsonl")
        lines = path.read_text().splitlines()
        assert len(lines) == len(small_roc.points)
        assert set(json.loads(lines[0])) == set(RocCurve.COLUMNS)

    def test_bad_format(self, small_roc, tmp_path):
        with pytest.raises(ValueError):
            emit(small_roc, tmp_path / "x", fmt="xml")

    def test_unwritable(self, small_roc, tmp_path):
        with pytest.raises(OSError, match="cannot write"):
            emit(small_roc, tmp_path / "missing" / "x.csv")


class TestSamples:
    def test_round_trip_complex(self, tmp_path):
        rng = np.random.default_rng(0)
        a = rng.standard_normal(20) + 1j * rng.standard_normal(20)
        b = rng.standard_normal(20)
        path = tmp_path / "s.txt"
        with open(path, "w") as fh:
            write_pairs(fh, a, b)
        ra, rb = read_pairs(path)
        np.testing.assert_array_equal(ra, a)
        np.testing.assert_array_equal(rb, b)

    @pytest.mark.parametrize("text,line", [("1 2\n3\n", 2), ("1 2\n# c\n\n1 abc\n", 4), ("1 nan\n", 1), ("1 2 3\n", 1)])
    def test_parse_errors(self, tmp_path, text, line):
        path = tmp_path / "bad.txt"
        path.write_text(text)
        with pytest.raises(ParseError) as info:
            read_pairs(path)
        assert info.value.line == line and f"bad.txt:{line}:" in str(info.value)

    def test_empty(self, tmp_path):
        path = tmp_path / "empty.txt"
        path.write_text("# nothing\n")
        with pytest.raises(ParseError, match="no samples"):
            read_pairs(path)


class TestIngest:
    def test_zero_mean_and_order(self, pair_file):
        x, y = ingest_pair(pair_file)
        cause, effect = read_pairs(pair_file)
        assert abs(x.mean()) < 1e-12 and abs(y.mean()) < 1e-12
        np.testing.assert_allclose(x, effect - effect.mean())
        xs, ys = ingest_pair(pair_file, swap=True)
        np.testing.assert_array_equal(xs, y)

    def test_missing_file(self, tmp_path):
        with pytest.raises(OSError):
            ingest_pair(tmp_path / "nope.txt")


class TestWindowed:
    def test_window_starts(self):
        assert window_starts(1000, 1, 50) == [1 + 50 * i for i in range(19)]
        assert window_starts(10, 1, 50) == []

    def test_pure_noise_detects_at_pfa_rate(self):
        rng = np.random.default_rng(3)
        x, y = rng.standard_normal(40_000), rng.standard_normal(40_000)
        res = run_windowed(x, y, 1, 100, snr_db=0.0, trials_noise=4, seed=1)
        # windows of unrelated white data behave like the injected-noise baseline
        assert np.max(np.abs(res.p_d - res.p_fa)) < 0.06
        assert abs(res.auc() - 0.5) < 0.04

    def test_fixture_detects(self, pair_file):
        x, y = ingest_pair(pair_file)
        res = run_windowed(x, y, 1, 50, snr_db=20.0, trials_noise=5, seed=0)
        assert res.auc() > 0.55 and isinstance(res, WindowedResult)

    def test_rows(self, pair_file):
        x, y = ingest_pair(pair_file)
        res = run_windowed(x, y, 1, 200, snr_db=10.0, trials_noise=2)
        rows = res.rows()
        assert len(rows) == len(res.thresholds) and rows[0]["n_windows"] == 9

    @pytest.mark.parametrize("N,n", [(3, 100), (50, 60)])
    def test_invalid(self, N, n):
        with pytest.raises(ValueError):
            run_windowed(np.ones(n), np.ones(n), 1, N, 10.0)


class TestSequentialHarness:
    def test_summary(self):
        s = run_sequential(VarModel.toy(0.5), SeqConfig(), 20, seed=3)
        assert s.causal + s.noncausal + s.undecided == 20
        assert len(s.decision_times) == 20 and s.causal_fraction >= 0.9

    def test_deterministic(self):
        a = run_sequential(VarModel.toy(0.25), SeqConfig(), 10, seed=4, snr_db=10.0)
        b = run_sequential(VarModel.toy(0.25), SeqConfig(), 10, seed=4, snr_db=10.0)
        assert a == b
