import os
import random

import pytest

import deeprnn

TOY = {
    "preset": "char",
    "architecture": "dots",
    "vocab_size": "5",
    "hidden_dim": "4",
    "output_inter_dim": "3",
}


def test_table_size_parameter_count():
    cfg = {"preset": "char", "architecture": "rnn"}
    shapes = deeprnn.parameter_shapes(cfg)
    assert [s[0] for s in shapes] == ["U", "W", "b_h", "V", "b_o"]
    assert deeprnn.parameter_count(cfg) == sum(r * c for _, r, c in shapes)


def test_bad_config_raises():
    with pytest.raises(deeprnn.ConfigError):
        deeprnn.parameter_count({"architecture": "lstm"})


def test_nll_matches_step_sum_and_gradcheck():
    model = deeprnn.Model(TOY, seed=3)
    model.randomize(0.5, seed=4)
    rng = random.Random(0)
    frames = [[rng.randrange(5)] for _ in range(7)]
    steps = model.step_nll(frames)
    assert len(steps) == 6
    assert model.nll(frames) == pytest.approx(sum(steps), rel=1e-12)
    assert model.gradcheck(frames) < 1e-4


def test_gradcheck_command_passes():
    code, out, _ = deeprnn.gradcheck(TOY, all=True)
    assert code == 0
    assert out.count("PASS") == 6


def test_gradcheck_refuses_table_sizes():
    code, _, err = deeprnn.gradcheck({"preset": "music"})
    assert code == 2
    assert "capped" in err


def test_train_then_evaluate(tmp_path):
    data = os.environ.get("DEEPRNN_TEST_DATA",
                          os.path.join(os.path.dirname(__file__), "..", "data"))
    with open(os.path.join(data, "kjv_train.txt"), encoding="utf-8") as f:
        text = f.read(4000)
    (tmp_path / "train.txt").write_text(text[:3000])
    (tmp_path / "valid.txt").write_text("".join(c for c in text[3000:] if c in text[:3000]))
    cfg = {
        "preset": "char",
        "architecture": "rnn",
        "hidden_dim": "8",
        "train_path": str(tmp_path / "train.txt"),
        "valid_path": str(tmp_path / "valid.txt"),
        "seq_len": "50",
        "max_epochs": "1",
        "out_dir": str(tmp_path / "run"),
    }
    code, out, err = deeprnn.train(cfg)
    assert code == 0, err
    assert "best_valid_nll" in out
    report = deeprnn.evaluate(tmp_path / "run" / "model.drnn", tmp_path / "valid.txt")
    assert report["bpc"] > 0
