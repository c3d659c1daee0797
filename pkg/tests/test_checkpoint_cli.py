import numpy as np
import pytest

from lipmono import checkpoint, runner
from lipmono.cli import main
from lipmono.errors import CheckpointError, ConfigError
from lipmono.monotone import MonotoneMask, MonotoneModel
from lipmono.network import build_network
from lipmono.optim import predict

from conftest import random_net

TOY_CONFIG = """\
dataset = toy
hidden = 8,8
epochs = 60
lr = 0.01
seed = 0
"""


@pytest.fixture
def toy_run(tmp_path, monkeypatch):
    monkeypatch.delenv("LMN_SEED", raising=False)
    cfg = tmp_path / "toy.cfg"
    cfg.write_text(TOY_CONFIG)
    out = tmp_path / "run"
    assert main(["train", str(cfg), "--output-dir", str(out)]) == 0
    return out


def kv(text):
    return dict(line.split(" = ", 1) for line in text.strip().splitlines())


@pytest.mark.parametrize("activation", ["groupsort", "householder", "relu"])
@pytest.mark.parametrize("mode", ["forward", "project"])
def test_round_trip_is_bit_identical(rng, activation, mode):
    core = build_network(3, (6, 4), 1, activation=activation, mode=mode, lam=1.7, seed=2)
    for p in core.parameters():
        p += 0.01 * rng.standard_normal(p.shape)
    model = checkpoint.freeze(MonotoneModel(core, MonotoneMask(np.array([1, 0, -1]))))
    text = checkpoint.dumps(model, {"note": "x"})
    back = checkpoint.loads(text)
    X = rng.standard_normal((100, 3))
    np.testing.assert_array_equal(predict(back.model, X), predict(model, X))
    assert back.meta == {"note": "x"}
    assert checkpoint.dumps(back.model, back.meta) == text


def test_plain_network_round_trip(rng):
    net = checkpoint.freeze(random_net(rng, [2, 4, 3], scale=2.0))
    back = checkpoint.loads(checkpoint.dumps(net)).model
    X = rng.standard_normal((10, 2))
    np.testing.assert_array_equal(back(X), net(X))


@pytest.mark.parametrize(
    "mutate",
    [
        lambda t: t.replace("LMN v1", "LMN v2"),
        lambda t: t.replace("depth = 2", "depth = 3"),
        lambda t: "\n".join(l for l in t.splitlines() if not l.startswith("layer.1.bias")),
        lambda t: t.replace("activation=groupsort", "activation=sigmoid"),
        lambda t: t + "garbage\n",
    ],
)
def test_corrupted_text_is_rejected(mutate):
    text = checkpoint.dumps(build_network(2, (4,), 1, seed=0))
    with pytest.raises((CheckpointError, ConfigError)):
        checkpoint.loads(mutate(text))


def test_train_writes_outputs_that_certify(toy_run, capsys):
    for name in ("checkpoint.lmn", "metrics.txt", "loss_history.csv", "certify.txt"):
        assert (toy_run / name).exists()
    capsys.readouterr()
    assert main(["certify", str(toy_run / "checkpoint.lmn")]) == 0
    report = kv(capsys.readouterr().out)
    assert report["passed"] == "true" and float(report["certificate"]) <= 1.0 + 1e-9


def test_certify_fails_on_corrupted_weight(toy_run, capsys):
    path = toy_run / "checkpoint.lmn"
    lines = path.read_text().splitlines()
    i = next(k for k, l in enumerate(lines) if l.startswith("layer.1.weights"))
    key, vals = lines[i].split(" = ")
    nums = vals.split()
    nums[0] = "50"
    lines[i] = f"{key} = {' '.join(nums)}"
    path.write_text("\n".join(lines) + "\n")
    capsys.readouterr()
    assert main(["certify", str(path)]) == 1
    report = kv(capsys.readouterr().out)
    assert report["passed"] == "false" and report["offending_layer"] == "1"


def test_rerun_gives_identical_metrics(toy_run, tmp_path):
    again = tmp_path / "again"
    assert main(["train", str(tmp_path / "toy.cfg"), "--output-dir", str(again)]) == 0
    assert (again / "metrics.txt").read_bytes() == (toy_run / "metrics.txt").read_bytes()
    assert (again / "checkpoint.lmn").read_bytes() == (toy_run / "checkpoint.lmn").read_bytes()


def test_env_seed_overrides_config(tmp_path, monkeypatch):
    cfg = tmp_path / "c.cfg"
    cfg.write_text(TOY_CONFIG)
    monkeypatch.setenv("LMN_SEED", "7")
    assert runner.load_run_config(cfg).seed == 7
    monkeypatch.delenv("LMN_SEED")
    assert runner.load_run_config(cfg).seed == 0


@pytest.mark.parametrize(
    "text, line",
    [
        ("dataset = toy\nbogus = 1\n", 2),
        ("dataset = toy\n\nepochs = many\n", 3),
        ("monotone = x:+3\n", 1),
        ("hidden = 4\nshuffle = maybe\n", 2),
    ],
)
def test_config_errors_report_line(text, line):
    with pytest.raises(ConfigError, match=f":{line}:"):
        runner.parse_run_config(text, "c.cfg")


def test_config_parsing():
    cfg = runner.parse_run_config("lambda = 2.5\nhidden = 3,5\nmonotone = a:+1\nmonotone = b:-1\ndata_seed = 4\n")
    assert cfg.lam == 2.5 and cfg.hidden == (3, 5) and cfg.data_seed == 4
    assert cfg.monotone == {"a": 1, "b": -1}
    assert runner.parse_run_config("monotone = none\n").monotone == {}
    with pytest.raises(ConfigError):
        runner.parse_run_config("lambda = -1\n")


def test_zero_learning_rate_reports_initial_model(monkeypatch):
    monkeypatch.delenv("LMN_SEED", raising=False)
    cfg = runner.parse_run_config(TOY_CONFIG + "lr = 0\nepochs = 3\n")
    result = runner.run(cfg)
    train, test, meta = runner.prepare(cfg)
    initial = runner.build_model(cfg, train)
    pred = runner.predictions(initial, test.X, meta)
    assert result.metrics["test_mse"] == format(float(np.mean((pred - test.y) ** 2)), ".17g")


def test_curve_of_pure_residual_is_linear(tmp_path, capsys):
    core = build_network(2, (4,), 1, lam=1.5, seed=0)
    for p in core.parameters():
        p[...] = 0.0
    path = tmp_path / "r.lmn"
    checkpoint.save(path, MonotoneModel(core, MonotoneMask(np.array([1, 0]))))
    assert main(["curve", str(path), "--feature", "0", "--min", "-2", "--max", "2", "--steps", "5"]) == 0
    rows = np.loadtxt(capsys.readouterr().out.splitlines()[1:], delimiter=",")
    np.testing.assert_allclose(rows[:, 1], 1.5 * rows[:, 0], atol=1e-15)


def test_curve_sweep_is_monotone(toy_run, tmp_path, capsys):
    out = tmp_path / "curve.csv"
    assert main(["curve", str(toy_run / "checkpoint.lmn"), "--feature", "0", "--steps", "400", "--out", str(out)]) == 0
    rows = np.loadtxt(out, delimiter=",", skiprows=1)
    assert rows.shape == (400, 2) and np.all(np.diff(rows[:, 1]) >= 0)
    capsys.readouterr()
    assert main(["curve", str(toy_run / "checkpoint.lmn"), "--feature", "0", "--steps", "1"]) == 0
    assert len(capsys.readouterr().out.splitlines()) == 2


def test_curve_bad_feature_exits_2(toy_run, capsys):
    assert main(["curve", str(toy_run / "checkpoint.lmn"), "--feature", "3"]) == 2
    assert "out of range" in capsys.readouterr().err


def test_evaluate_and_audit(toy_run, capsys, tmp_path):
    capsys.readouterr()
    assert main(["evaluate", str(toy_run / "checkpoint.lmn"), "toy"]) == 0
    metrics = kv(capsys.readouterr().out)
    assert metrics["n"] == "100" and float(metrics["eval_mse"]) < 0.5
    report_path = tmp_path / "audit.txt"
    args = ["audit", str(toy_run / "checkpoint.lmn"), "toy", "--trials", "5000", "--seed", "3", "--out", str(report_path)]
    assert main(args) == 0
    report = kv(capsys.readouterr().out)
    assert report["violations"] == "0" and report["trials"] == "5000" and report["seed"] == "3"
    assert report_path.read_text().endswith("passed = true\n")


def test_missing_files_exit_2(tmp_path, capsys):
    assert main(["certify", str(tmp_path / "absent.lmn")]) == 2
    assert main(["train", str(tmp_path / "absent.cfg")]) == 2
