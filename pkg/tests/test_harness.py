import json

import numpy as np
import pytest
from scipy.special import expit

from oneshot.config import config_from_dict, preset_config
from oneshot.datagen import Pool, gen_gaussian_blobs
from oneshot.errors import ConfigError, DimensionMismatchError, TeachingError
from oneshot.harness import (
    TRACE_HEADER,
    Evaluator,
    baseline_bsgd,
    baseline_max_entropy,
    baseline_random,
    baseline_sgd,
    max_entropy_index,
    metric_bias,
    ovr_apply,
    ovr_predict,
    ovr_teach,
    pretrain,
    run_comparison,
    stochastic_loss,
    summary_json,
    summary_table,
    trace_csv,
)
from oneshot.learner import LossKind, loss_grads
from oneshot.numerics import RngStream
from oneshot.teacher import LabelPolicy, Teacher, teach

SQ, HI, LO = LossKind.SQUARE, LossKind.HINGE, LossKind.LOGISTIC


def gen(seed=0, stream=0):
    return RngStream(seed, stream).generator()


def evaluator(pool, theta_star, kind, test=None, seed=0):
    return Evaluator(np.asarray(theta_star, float), kind, pool, test, 100, gen(seed, 1000))


@pytest.fixture
def blobs():
    return gen_gaussian_blobs(200, 200, [2.0, 2.0], [-2.0, -2.0], gen(1))


def test_metric_bias():
    assert metric_bias([1, 2], [1, 2]) == 0
    assert metric_bias([0, 0], [3, 4]) == 5
    with pytest.raises(DimensionMismatchError):
        metric_bias([0], [1, 2])


def test_stochastic_loss_identical_pool():
    pool = Pool(np.tile([1.0, 2.0], (10, 1)), np.full(10, 3.0))
    assert stochastic_loss([0.5, 0.5], pool, SQ, 100, gen()) == (1.5 - 3.0) ** 2


def test_stochastic_loss_exhaustive_and_seeded(blobs):
    theta = np.array([0.3, -0.2, 0.1])
    full = stochastic_loss(theta, blobs, LO, exhaustive=True)
    manual = np.mean([np.log1p(np.exp(-y * (x @ theta))) for x, y in zip(blobs.X, blobs.y)])
    assert full == pytest.approx(manual, abs=1e-12)
    assert stochastic_loss(theta, blobs, LO, 100, gen(5)) == stochastic_loss(theta, blobs, LO, 100, gen(5))


def test_stochastic_loss_empty_pool():
    with pytest.raises(TeachingError):
        stochastic_loss([0.0], Pool(np.empty((0, 1)), []), SQ, 10, gen())


def test_baseline_zero_iterations(blobs):
    theta0 = np.array([0.1, 0.1, 0.1])
    trace, theta = baseline_sgd(blobs, theta0, LO, 0.1, 0, gen(), evaluator(blobs, [1, 1, 0], LO))
    assert len(trace) == 1 and trace[0].iteration == 0
    assert trace[0].learner_bias == metric_bias(theta0, [1, 1, 0])
    np.testing.assert_array_equal(theta, theta0)


def test_baselines_reduce_bias_on_separable_pool(blobs):
    theta_star, _ = pretrain(blobs, LO)
    theta0 = np.zeros(3)
    for run in (baseline_sgd, baseline_bsgd, baseline_random):
        trace, _ = run(blobs, theta0, LO, 0.5, 200, gen(2), evaluator(blobs, theta_star, LO))
        assert len(trace) == 201
        assert trace[-1].learner_bias < trace[0].learner_bias
        assert [r.iteration for r in trace] == list(range(201))


def test_random_baseline_matches_sgd_under_same_sampling(blobs):
    a, _ = baseline_sgd(blobs, np.zeros(3), LO, 0.1, 50, gen(3), evaluator(blobs, [1, 1, 0], LO), name="x")
    b, _ = baseline_random(blobs, np.zeros(3), LO, 0.1, 50, gen(3), evaluator(blobs, [1, 1, 0], LO), name="x")
    assert a == b


def test_max_entropy_selection():
    assert max_entropy_index(np.zeros(2), np.array([[1.0, 2.0], [3.0, 4.0]])) == 0
    assert max_entropy_index(np.array([1.0, 0.0]), np.array([[10.0, 0.0], [0.1, 0.0]])) == 1
    scores = np.linspace(-5, 5, 101)
    p = expit(scores)
    H = -(p * np.log(p) + (1 - p) * np.log(1 - p))
    assert scores[np.argmax(H)] == 0.0


def test_max_entropy_baseline(blobs):
    trace, _ = baseline_max_entropy(blobs, np.zeros(3), LO, 0.1, 20, evaluator(blobs, [1, 1, 0], LO))
    again, _ = baseline_max_entropy(blobs, np.zeros(3), LO, 0.1, 20, evaluator(blobs, [1, 1, 0], LO))
    assert len(trace) == 21 and trace == again
    reg = Pool(np.ones((3, 2)), [1.0, 2.0, 3.0])
    with pytest.raises(TeachingError):
        baseline_max_entropy(reg, np.zeros(2), SQ, 0.1, 5, evaluator(reg, [0, 0], SQ))


def test_pretrain_reaches_stationary_point(blobs):
    theta, info = pretrain(blobs, LO, tol=1e-8, max_iter=20_000)
    g = loss_grads(LO, blobs.X @ theta, blobs.y) @ blobs.X / len(blobs)
    assert np.linalg.norm(g) == pytest.approx(info.grad_norm, rel=1e-6, abs=1e-12)
    assert info.grad_norm < 1e-3


def test_pretrain_square_matches_least_squares(rng):
    X = np.hstack([rng.standard_normal((100, 2)), np.ones((100, 1))])
    y = X @ [0.5, -1.0, 2.0] + 0.1 * rng.standard_normal(100)
    theta, info = pretrain(Pool(X, y), SQ, tol=1e-10, max_iter=100_000)
    np.testing.assert_allclose(theta, np.linalg.lstsq(X, y, rcond=None)[0], atol=1e-8)
    assert info.grad_norm <= 1e-10


# one-vs-rest -----------------------------------------------------------------

def test_ovr_two_classes_consistent(rng):
    T0, TS = np.zeros((2, 3)), rng.standard_normal((2, 3))
    ovr = ovr_teach(Teacher.complete(), LO, 0.2, T0, TS)
    assert ovr.status == "ok"
    taught = ovr_apply(ovr, LO, 0.2, T0)
    for k in range(2):
        single = teach(Teacher.complete(), LO, 0.2, T0[k], TS[k], LabelPolicy.forced(1))
        np.testing.assert_array_equal(single.example.x, ovr.results[k].example.x)
        np.testing.assert_allclose(taught[k], TS[k], atol=1e-12)
    X = rng.standard_normal((200, 3))
    np.testing.assert_array_equal(ovr_predict(taught, X), ovr_predict(TS, X))


def test_ovr_ten_classes_prediction_equality(rng):
    K, n = 10, 16
    TS = rng.standard_normal((K, n))
    T0 = np.zeros((K, n))
    ovr = ovr_teach(Teacher.complete(), HI, 0.5, T0, TS)
    assert ovr.status == "ok", ovr.errors
    taught = ovr_apply(ovr, HI, 0.5, T0)
    X = rng.standard_normal((1000, n))
    np.testing.assert_array_equal(ovr_predict(taught, X), ovr_predict(TS, X))


def test_ovr_partial_failure_lists_class():
    T0 = np.array([[0.0, 0.0], [1.0, 1.0], [0.0, 0.0]])
    TS = np.array([[1.0, 0.0], [2.0, 2.0], [0.0, 1.0]])
    ovr = ovr_teach(Teacher.complete(), HI, 0.1, T0, TS)  # class 1: inactive hinge
    assert ovr.status == "partial" and ovr.failed_classes == [1]
    assert "hinge" in ovr.errors[1]


def test_ovr_errors():
    with pytest.raises(TeachingError):
        ovr_teach(Teacher.complete(), HI, 0.1, np.zeros((1, 2)), np.ones((1, 2)))
    with pytest.raises(DimensionMismatchError):
        ovr_teach(Teacher.complete(), HI, 0.1, np.zeros((2, 2)), np.ones((3, 2)))


def test_ovr_predict_ties_lowest_index():
    assert ovr_predict(np.zeros((3, 2)), np.ones((1, 2))).tolist() == [0]


# experiment driver -------------------------------------------------------------

def small(name, seed=0, iterations=30):
    cfg = preset_config(name, seed)
    for b in cfg.baselines:
        b.iterations = iterations
    return cfg


@pytest.mark.parametrize("name", ["lsr", "svm", "lr"])
def test_comparison_trace_structure(name):
    comp = run_comparison(small(name))
    names = list(comp.summary["strategies"])
    assert names == ["OSTS", "SGD", "BSGD"]
    for n in names:
        rows = [r for r in comp.records if r.strategy == n]
        assert [r.iteration for r in rows] == list(range(31))
        last = rows[-1]
        final = comp.summary["strategies"][n]["final"]
        assert final == {"iteration": last.iteration, "learner_bias": last.learner_bias,
                         "stochastic_loss": last.stochastic_loss, "test_accuracy": last.test_accuracy}
    osts = comp.summary["strategies"]["OSTS"]["final"]["learner_bias"]
    assert osts <= 1e-9 * (1 + np.linalg.norm(comp.summary["theta_star"]))
    accs = [r.test_accuracy for r in comp.records]
    assert all(a is None for a in accs) if name == "lsr" else all(0 <= a <= 1 for a in accs)


def test_comparison_deterministic():
    assert trace_csv(run_comparison(small("svm", 7)).records) == trace_csv(run_comparison(small("svm", 7)).records)
    assert trace_csv(run_comparison(small("svm", 7)).records) != trace_csv(run_comparison(small("svm", 8)).records)


def test_comparison_subset_keeps_streams():
    cfg = small("lr", 2)
    full = run_comparison(cfg)
    only = run_comparison(cfg, only={"BSGD"})
    assert [r for r in full.records if r.strategy == "BSGD"] == only.records
    with pytest.raises(ConfigError, match="unknown strategy"):
        run_comparison(cfg, only={"nope"})


def test_comparison_digits_small():
    cfg = preset_config("digits", 0)
    cfg.data.per_class = 100
    for b in cfg.baselines:
        b.iterations = 5
    comp = run_comparison(cfg)
    s = comp.summary["strategies"]
    assert s["cOSTS"]["final"]["learner_bias"] <= 1e-9
    assert s["pOSTS"]["teaching"]["diagnostics"]["beta"] is not None
    assert comp.summary["pretrain"]["method"] == "full-batch gradient descent"
    assert comp.summary["data"]["dim"] == 24


def test_comparison_all_baseline_kinds():
    cfg = config_from_dict({
        "task": {"loss": "logistic", "theta_star": [0.8, 0.6, 0.5], "theta0": [0.4, -0.2, 0.46], "eta": 0.1},
        "data": {"preset": "lr"},
        "teachers": [{"name": "OSTS", "kind": "complete"},
                     {"name": "naive", "kind": "naive", "pool_size": 10},
                     {"name": "scaled", "kind": "scalable", "pool_size": 10}],
        "baselines": [{"name": "rand", "strategy": "random", "iterations": 5},
                      {"name": "ME", "strategy": "max-entropy", "eta": 0.01, "iterations": 5}],
    })
    comp = run_comparison(cfg)
    assert set(comp.summary["strategies"]) == {"OSTS", "naive", "scaled", "rand", "ME"}
    assert comp.summary["strategies"]["naive"]["teaching"]["diagnostics"]["pool_index"] is not None


def test_comparison_csv_pool(tmp_path):
    from oneshot.datagen import write_pool_csv
    pool = gen_gaussian_blobs(30, 30, [1.0, 1.0], [-1.0, -1.0], gen())
    write_pool_csv(pool, tmp_path / "p.csv")
    cfg = config_from_dict({
        "task": {"loss": "hinge", "theta_star": "pretrain", "eta": 0.5},
        "data": {"train_pool": str(tmp_path / "p.csv")},
        "eval": {"test_pool": str(tmp_path / "p.csv")},
        "teachers": [{"name": "OSTS", "kind": "complete"}],
    })
    comp = run_comparison(cfg)
    assert comp.summary["data"]["train_size"] == 60


def test_comparison_rejects_bad_dimensions():
    cfg = small("lsr")
    cfg.task.theta0 = [0.0, 0.0, 0.0]
    with pytest.raises(ConfigError, match="dimension"):
        run_comparison(cfg)


def test_trace_csv_format():
    comp = run_comparison(small("lsr", iterations=2))
    lines = trace_csv(comp.records).splitlines()
    assert lines[0] == ",".join(TRACE_HEADER)
    assert lines[1].startswith("0,OSTS,") and lines[1].endswith(",")


def test_summary_outputs():
    comp = run_comparison(small("svm", iterations=3))
    data = json.loads(summary_json(comp.summary))
    assert data["config"]["task"]["loss"] == "hinge"
    assert data["strategies"]["OSTS"]["teaching"]["feasible"] is True
    table = summary_table(comp.summary)
    assert table.splitlines()[1].startswith("Learner bias")
