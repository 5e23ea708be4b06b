import numpy as np
import pytest

import trendpu.pipeline as pl
from trendpu.data import GaussianConfig, PUDataset, gen_two_gaussians, make_pu_split
from trendpu.errors import (
    ConfigurationError,
    DegenerateDistributionError,
    DegeneratePartitionError,
    EvaluationUnavailableError,
    ParseError,
    StageError,
)
from trendpu.jenks import PseudoLabel
from trendpu.model import predict_scores
from trendpu.pipeline import (
    PipelineConfig,
    TraceMatrix,
    compute_trend_scores,
    estimate_prior,
    evaluate,
    read_scores,
    read_traces,
    retrain,
    run_pipeline,
    select_stop,
    train_and_trace,
    whole_data_prior,
    write_scores,
    write_traces,
)
from trendpu.tpp_stats import Estimator, TrendScoreParams


@pytest.fixture(scope="module")
def small():
    data = gen_two_gaussians(GaussianConfig(10, 0.5, 400, 0.5), 3)
    pu = make_pu_split(data, 40, 4)
    test = gen_two_gaussians(GaussianConfig(10, 0.5, 300, 0.5), 5)
    cfg = PipelineConfig(batch_size=32, snapshot_interval=3, max_snapshots=12,
                         retrain_epochs=10, seed=9)
    return pu, test, cfg


class TestConfig:
    def test_round_trip_dict(self):
        cfg = PipelineConfig(hidden_dims=(8, 4), lr=0.01, estimator="simplified", seed=3)
        text = {k: str(v) for k, v in cfg.to_dict().items()}
        assert PipelineConfig.from_dict(text) == cfg

    def test_rejects(self):
        with pytest.raises(ConfigurationError):
            PipelineConfig.from_dict({"bogus": 1})
        with pytest.raises(ConfigurationError):
            PipelineConfig(stopping="lzo")
        with pytest.raises(ConfigurationError):
            PipelineConfig(batch_size=0)


class TestTraining:
    def test_single_snapshot(self, small):
        pu, _, cfg = small
        cfg = PipelineConfig(batch_size=32, snapshot_interval=5, max_snapshots=1, seed=1)
        traces, params = train_and_trace(pu, cfg)
        assert traces.scores.shape == (pu.n_unlabeled, 1)
        expected = predict_scores(params, pu.features[pu.unlabeled_index])
        assert np.array_equal(traces.scores[:, 0], expected)
        assert np.array_equal(traces.ids, pu.unlabeled_ids)

    def test_thirty_snapshots_at_512(self, monkeypatch):
        rng = np.random.default_rng(0)
        labeled = np.r_[np.ones(8, bool), np.zeros(128, bool)]
        pu = PUDataset(rng.normal(size=(136, 2)), labeled)
        calls = []
        real = pl.adam_step
        monkeypatch.setattr(pl, "adam_step", lambda *a: calls.append(1) or real(*a))
        traces, _ = train_and_trace(pu, PipelineConfig(batch_size=64))
        assert traces.n_snapshots == 30
        assert len(calls) == 15_360

    def test_deterministic_and_valid(self, small):
        pu, _, cfg = small
        a, _ = train_and_trace(pu, cfg)
        b, _ = train_and_trace(pu, cfg)
        assert np.array_equal(a.scores, b.scores)
        assert np.all((a.scores >= 0) & (a.scores <= 1))
        assert np.array_equal(a.truth, np.array(pl.reveal_truth(pu))[pu.unlabeled_index])


class TestSelectStop:
    def _traces(self, validation, t=30):
        return TraceMatrix(np.full((3, t), 0.5), np.arange(3), 1, None,
                           None if validation is None else np.asarray(validation, float))

    def test_fixed(self):
        assert select_stop(self._traces(None), None, PipelineConfig()) == 30

    def test_monotone_validation(self):
        cfg = PipelineConfig(stopping="mixup")
        assert select_stop(self._traces(np.linspace(0.1, 0.9, 30)), None, cfg) == 30

    def test_peak_at_twelve(self):
        # validation improves for 12 snapshots, then label noise drags it down
        curve = np.r_[np.linspace(0.5, 0.8, 12), 0.8 - 0.01 * np.arange(1, 19)]
        cfg = PipelineConfig(stopping="mixup")
        assert select_stop(self._traces(curve), None, cfg) == 12

    def test_peak_at_first_is_clamped(self):
        cfg = PipelineConfig(stopping="mixup")
        assert select_stop(self._traces(np.linspace(0.9, 0.1, 30)), None, cfg) == 2

    def test_mixup_run_records_validation(self, small):
        pu, _, cfg = small
        mix = PipelineConfig(**{**cfg.__dict__, "stopping": "mixup"})
        traces, _ = train_and_trace(pu, mix)
        assert traces.validation.shape == (traces.n_snapshots,)
        assert 2 <= select_stop(traces, pu, mix) <= traces.n_snapshots


class TestScoresAndPrior:
    def test_constant_rows(self):
        tm = TraceMatrix(np.full((4, 10), 0.3), np.arange(4), 1)
        for t in (2, 5, 10):
            assert all(v == 0.0 for v in compute_trend_scores(tm, t).values())

    def test_t2_estimators_agree(self, rng):
        tm = TraceMatrix(rng.random((50, 8)), np.arange(50), 1)
        full = compute_trend_scores(tm, 2, TrendScoreParams(2.0, Estimator.FULL))
        simp = compute_trend_scores(tm, 2, TrendScoreParams(2.0, Estimator.SIMPLIFIED))
        assert full == simp

    def test_t_stop_bounds(self, rng):
        tm = TraceMatrix(rng.random((5, 8)), np.arange(5), 1)
        for bad in (1, 9):
            with pytest.raises(ConfigurationError):
                compute_trend_scores(tm, bad)

    def test_priors(self):
        P, N = PseudoLabel.POSITIVE, PseudoLabel.NEGATIVE
        assert estimate_prior({k: N for k in range(5)}) == 0.0
        assert estimate_prior({0: P, 1: N}) == 0.5
        labels = {k: (P if k < 800 else N) for k in range(1800)}
        assert estimate_prior(labels) == pytest.approx(0.4444, abs=1e-4)
        assert whole_data_prior(800 / 1800, 200, 1800) == pytest.approx(0.5)


class TestEvaluate:
    def test_perfect(self):
        m = evaluate([0, 0, 1, 1], [0, 0, 1, 1])
        assert (m.accuracy, m.precision, m.recall, m.f1, m.auc) == (1.0, 1.0, 1.0, 1.0, 1.0)

    def test_auc_from_scores(self):
        m = evaluate({"a": 0, "b": 0, "c": 1, "d": 1}, {"a": 0, "b": 0, "c": 1, "d": 1},
                     {"a": 0.8, "b": 0.9, "c": 0.1, "d": 0.2})
        assert m.auc == 1.0

    def test_one_false_negative(self):
        m = evaluate([0, 1, 1, 1], [0, 0, 1, 1])
        assert m.accuracy == 0.75 and m.recall == 0.5 and m.precision == 1.0
        assert m.f1 == pytest.approx(2 / 3)

    def test_no_predicted_positives(self):
        m = evaluate([1, 1, 1], [0, 1, 1])
        assert m.precision == 0.0 and m.f1 == 0.0

    def test_auc_matches_pair_count(self, rng):
        s = rng.integers(0, 5, size=60).astype(float)
        pos = rng.random(60) < 0.4
        pairs = [(a > b) + 0.5 * (a == b) for a in s[pos] for b in s[~pos]]
        assert pl.roc_auc(s, pos) == pytest.approx(np.mean(pairs), abs=1e-12)

    def test_no_truth(self):
        with pytest.raises(EvaluationUnavailableError):
            evaluate([0, 1], None)


class TestRetrain:
    def test_true_labels_beat_partition(self, small):
        pu, test, cfg = small
        # enough retraining steps for the small fixture to converge
        cfg = PipelineConfig(**{**cfg.__dict__, "retrain_epochs": 100})
        report = run_pipeline(cfg, pu, test)
        truth = pl.reveal_truth(pu)[pu.unlabeled_index]
        oracle = {k: PseudoLabel(int(v)) for k, v in zip(pu.unlabeled_ids.tolist(), truth)}
        p = predict_scores(retrain(pu, oracle, cfg), test.features)
        acc = float(np.mean((p < 0.5).astype(int) == test.labels))
        assert acc >= report.test_metrics.accuracy

    def test_empty_pseudo_class(self, small):
        pu, _, cfg = small
        labels = {k: PseudoLabel.NEGATIVE for k in pu.unlabeled_ids.tolist()}
        with pytest.raises(DegeneratePartitionError):
            retrain(pu, labels, cfg)


class TestRunPipeline:
    def test_report_and_files_deterministic(self, small, tmp_path):
        pu, test, cfg = small
        r1 = run_pipeline(cfg, pu, test, tmp_path / "a")
        r2 = run_pipeline(cfg, pu, test, tmp_path / "b")
        assert r1.to_text() == r2.to_text()
        for name in ("traces.csv", "scores.csv", "model.csv", "report.txt"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
        assert r1.pseudo_labels == r2.pseudo_labels and r1.prior == r2.prior
        text = r1.to_text()
        for key in ("config.seed=9", "prior.unlabeled=", "unlabeled.accuracy=", "test.auc="):
            assert key in text
        assert "timing" not in text
        assert r1.n_pseudo_positive + r1.n_pseudo_negative == pu.n_unlabeled

    def test_degenerate_scores(self):
        # identical rows give identical traces and a constant score vector
        labeled = np.r_[np.ones(10, bool), np.zeros(64, bool)]
        pu = PUDataset(np.zeros((74, 3)), labeled)
        cfg = PipelineConfig(batch_size=32, snapshot_interval=2, max_snapshots=5)
        with pytest.raises(StageError) as info:
            run_pipeline(cfg, pu)
        assert info.value.stage == "partition"
        assert isinstance(info.value.cause, DegenerateDistributionError)


class TestFiles:
    def test_trace_round_trip(self, tmp_path, rng):
        tm = TraceMatrix(rng.random((20, 7)), np.arange(20) * 3, 4, rng.integers(0, 2, 20))
        write_traces(tm, tmp_path / "t.csv")
        back = read_traces(tmp_path / "t.csv", 4)
        assert np.array_equal(back.scores, tm.scores)
        assert np.array_equal(back.ids, tm.ids) and np.array_equal(back.truth, tm.truth)

    def test_trace_without_truth(self, tmp_path, rng):
        tm = TraceMatrix(rng.random((3, 2)), np.arange(3), 1)
        write_traces(tm, tmp_path / "t.csv")
        assert read_traces(tmp_path / "t.csv").truth is None

    def test_scores_round_trip(self, tmp_path, rng):
        scores = {k: float(v) for k, v in enumerate(rng.normal(size=30))}
        labels = {k: PseudoLabel(int(v > 0)) for k, v in scores.items()}
        write_scores(scores, labels, tmp_path / "s.csv")
        s2, l2 = read_scores(tmp_path / "s.csv")
        assert s2 == scores and l2 == labels
        write_scores(scores, None, tmp_path / "u.csv")
        assert read_scores(tmp_path / "u.csv")[1] is None

    def test_parse_error_line(self, tmp_path):
        path = tmp_path / "t.csv"
        path.write_text("example_id,true_label,p_1,p_2\n0,1,0.5,0.4\n1,1,0.5\n")
        with pytest.raises(ParseError, match="line 3"):
            read_traces(path)
