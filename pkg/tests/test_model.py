import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from trendpu.errors import NumericError, ParseError, ShapeError, SizeError
from trendpu.model import (
    AdamState,
    ModelParams,
    ModelSpec,
    adam_step,
    backward,
    batch_loss,
    cross_entropy,
    forward,
    init_params,
    load_params,
    predict_scores,
    pu_loss_and_grads,
    save_params,
)
from trendpu.verify import finite_difference_grad, gradient_fixture, max_relative_error

# -ln 0.8 - ln 0.9, evaluated with mpmath
LOSS_02_09 = 0.32850406697203605699


def logistic(w, b=0.0):
    return ModelParams([np.array(w, dtype=float).reshape(-1, 1)], [np.array([b], dtype=float)])


class TestForward:
    def test_zero_model(self, rng):
        params = init_params(ModelSpec(4, (3,)), rng).zeros_like()
        assert forward(params, rng.normal(size=4)) == 0.5
        assert np.all(predict_scores(params, rng.normal(size=(5, 4))) == 0.5)

    def test_examples(self):
        assert forward(logistic([1.0, 0.0]), [0.0, 3.0]) == 0.5
        assert forward(logistic([1.0]), [math.log(3.0)]) == pytest.approx(0.75, abs=1e-15)

    def test_shape_error(self):
        with pytest.raises(ShapeError):
            forward(logistic([1.0, 0.0]), [1.0, 2.0, 3.0])

    def test_extreme_logits_stay_in_range(self):
        q = forward(logistic([1.0]), np.array([[-800.0], [800.0], [-30.0], [30.0]]))
        assert np.all(np.isfinite(q)) and np.all((q >= 0) & (q <= 1))
        assert 0.0 < q[2] < q[3] < 1.0

    @given(st.floats(-30, 30))
    def test_complement_exact(self, z):
        params = logistic([1.0])
        q = forward(params, np.array([[z]]))
        p = predict_scores(params, np.array([[z]]))
        assert p[0] + q[0] == 1.0


class TestLoss:
    @pytest.mark.parametrize("q, y, want", [
        (0.5, 1, math.log(2.0)),
        (0.9, 1, 0.10536051565782627656),
        (0.9, 0, 2.3025850929940456840),
    ])
    def test_cross_entropy(self, q, y, want):
        assert cross_entropy(q, y) == pytest.approx(want, rel=1e-12)

    def test_clamp(self):
        assert cross_entropy(0.0, 1) == pytest.approx(-math.log(1e-7))
        assert math.isfinite(cross_entropy(1.0, 0))

    def test_batch_loss_example(self):
        params = logistic([1.0])
        pos = np.array([[math.log(0.25)]])   # q = 0.2
        unl = np.array([[math.log(9.0)]])    # q = 0.9
        assert batch_loss(params, pos, unl) == pytest.approx(LOSS_02_09, rel=1e-12)

    def test_perfect_limit(self):
        params = logistic([1.0])
        assert batch_loss(params, [[-12.0]], [[12.0]]) < 1e-4

    def test_empty_batch(self):
        with pytest.raises(SizeError):
            batch_loss(logistic([1.0]), np.empty((0, 1)), [[1.0]])


class TestGradients:
    def test_closed_form_logistic(self):
        g = backward(logistic([0.0, 0.0]), [[1.0, 0.0]], [[0.0, 0.0]])
        assert g.weights[0][:, 0] == pytest.approx([0.5, 0.0])
        # bias: +0.5 from the positive, 0.5 - 1 from the unlabeled row
        assert g.biases[0][0] == pytest.approx(0.0)

    def test_finite_differences(self):
        worst = 0.0
        for child in np.random.SeedSequence(7).spawn(50):
            _, params, pos, unl = gradient_fixture(np.random.default_rng(child))
            worst = max(worst, max_relative_error(backward(params, pos, unl),
                                                  finite_difference_grad(params, pos, unl)))
        assert worst < 1e-4

    def test_loss_and_grads_consistent(self, rng):
        params = init_params(ModelSpec(3, (4, 4)), rng)
        pos, unl = rng.normal(size=(5, 3)), rng.normal(size=(6, 3))
        loss, grads = pu_loss_and_grads(params, pos, unl)
        assert loss == batch_loss(params, pos, unl)
        for a, b in zip(grads.arrays(), backward(params, pos, unl).arrays()):
            assert np.array_equal(a, b)

    def test_zero_gradient_at_balanced_minimum(self):
        # identical positive and unlabeled rows: the optimum is q = 0.5 everywhere
        g = backward(logistic([0.0, 0.0]), [[1.0, 2.0]], [[1.0, 2.0]])
        assert all(np.max(np.abs(a)) <= 1e-9 for a in g.arrays())


class TestAdam:
    def test_first_step_moves_by_lr(self, rng):
        params = init_params(ModelSpec(3, (2,)), rng)
        grads = ModelParams.from_arrays([rng.normal(size=a.shape) for a in params.arrays()])
        new, state = adam_step(params, grads, AdamState.for_params(params, lr=1e-2))
        assert state.step == 1
        for p0, p1, g in zip(params.arrays(), new.arrays(), grads.arrays()):
            assert np.allclose(p0 - p1, 1e-2 * np.sign(g), atol=1e-8)

    def test_zero_gradient(self, rng):
        params = init_params(ModelSpec(3), rng)
        zero = params.zeros_like()
        unchanged, state = adam_step(params, zero, AdamState.for_params(params))
        for a, b in zip(params.arrays(), unchanged.arrays()):
            assert np.array_equal(a, b)
        # non-zero moments decay geometrically under a zero gradient
        warm = AdamState([np.ones_like(a) for a in state.m], [np.ones_like(a) for a in state.v], 1)
        _, decayed = adam_step(params, zero, warm)
        assert all(np.allclose(m, 0.9) for m in decayed.m)
        assert all(np.allclose(v, 0.999) for v in decayed.v)

    def test_rejects_bad_gradients(self, rng):
        params = init_params(ModelSpec(2), rng)
        bad = params.zeros_like()
        bad.weights[0][0, 0] = np.nan
        with pytest.raises(NumericError):
            adam_step(params, bad, AdamState.for_params(params))
        wrong = ModelParams([np.zeros((3, 1))], [np.zeros(1)])
        with pytest.raises(ShapeError):
            adam_step(params, wrong, AdamState.for_params(params))

    def _train(self, seed, steps=100):
        rng = np.random.default_rng(seed)
        pos = rng.normal(size=(16, 2)) + [2.0, 2.0]
        unl = rng.normal(size=(16, 2)) - [2.0, 2.0]
        params = init_params(ModelSpec(2, (8, 8)), rng)
        state = AdamState.for_params(params, lr=1e-2)
        start = batch_loss(params, pos, unl)
        for _ in range(steps):
            params, state = adam_step(params, backward(params, pos, unl), state)
        return start, batch_loss(params, pos, unl), params

    def test_loss_decreases(self):
        start, end, _ = self._train(3)
        assert end < start

    def test_deterministic(self):
        _, _, a = self._train(5)
        _, _, b = self._train(5)
        for x, y in zip(a.arrays(), b.arrays()):
            assert np.array_equal(x, y)


class TestInit:
    def test_uniform_range(self, rng):
        params = init_params(ModelSpec(16, (9,)), rng)
        assert np.all(np.abs(params.weights[0]) <= 0.25)
        assert np.all(np.abs(params.weights[1]) <= 1 / 3)
        assert params.spec == ModelSpec(16, (9,))

    def test_bad_spec(self):
        with pytest.raises(ShapeError):
            ModelSpec(0)
        with pytest.raises(ShapeError):
            ModelSpec(3, (0,))


class TestCheckpoint:
    @pytest.mark.parametrize("hidden", [(), (5,), (4, 3)])
    def test_round_trip(self, tmp_path, rng, hidden):
        params = init_params(ModelSpec(6, hidden), rng)
        save_params(params, tmp_path / "m.csv")
        back = load_params(tmp_path / "m.csv")
        assert back.spec == params.spec
        for a, b in zip(params.arrays(), back.arrays()):
            assert np.array_equal(a, b)

    def test_parse_errors(self, tmp_path, rng):
        path = tmp_path / "m.csv"
        save_params(init_params(ModelSpec(2), rng), path)
        lines = path.read_text().splitlines()
        lines[3] = "0,w,1,0"
        path.write_text("\n".join(lines) + "\n")
        with pytest.raises(ParseError, match="line 4"):
            load_params(path)
        path.write_text("\n".join(lines[:3]) + "\n")
        with pytest.raises(ParseError):
            load_params(path)
