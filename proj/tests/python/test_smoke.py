import math
import random

import pytest

import vsrhpo


def test_space():
    assert vsrhpo.space_size() == 800
    assert vsrhpo.encode({"res_channels": 64, "n_res": 5, "up_channels": 64}) == [1, 4, 1]
    assert vsrhpo.decode([9, 7, 9]) == {"res_channels": 320, "n_res": 8, "up_channels": 320}
    assert vsrhpo.unrank(vsrhpo.rank({"res_channels": 96, "n_res": 2, "up_channels": 32})) == {
        "res_channels": 96,
        "n_res": 2,
        "up_channels": 32,
    }
    with pytest.raises(vsrhpo.SpaceError):
        vsrhpo.space_size([("a", [2, 1])])


def test_samplers():
    good, bad = vsrhpo.quantile_split([5, 1, 4, 2, 3, 6, 7, 8], 0.25)
    assert good == [1, 3]
    assert len(bad) == 6
    assert vsrhpo.expected_improvement(2.0, 0.0, 5.0) == pytest.approx(3.0)
    assert vsrhpo.expected_improvement(1.0, 1.0, 1.0) == pytest.approx(1 / math.sqrt(2 * math.pi))
    history = [(vsrhpo.unrank(r), float(r % 13)) for r in range(0, 800, 37)]
    for sampler in ("random", "tpe", "smac"):
        a = vsrhpo.propose(sampler, history, seed=3)
        assert a == vsrhpo.propose(sampler, history, seed=3)
        assert set(a) == {"res_channels", "n_res", "up_channels"}


def test_cost():
    assert vsrhpo.conv2d_cost(1, 64, 3, 36, 36) == (640, 1575936)
    base = vsrhpo.network_cost(64, 5, 64)
    assert 375_000 <= base["total_params"] <= 625_000
    assert 1.5e9 <= base["total_flops"] <= 2.5e9
    assert vsrhpo.network_cost(64, 6, 64)["total_params"] - base["total_params"] == 73856
    assert base["label"] == "HO-FVSR {64,5,64}"
    with pytest.raises(vsrhpo.CostError):
        vsrhpo.network_cost(50, 5, 64)


def test_metrics():
    rng = random.Random(0)
    a = [[rng.randint(0, 254) for _ in range(16)] for _ in range(16)]
    b = [[v + 1 for v in row] for row in a]
    assert vsrhpo.psnr(a, b) == pytest.approx(48.1308, abs=1e-3)
    assert vsrhpo.psnr(a, a) == math.inf
    c100 = [[100.0] * 8 for _ in range(8)]
    c110 = [[110.0] * 8 for _ in range(8)]
    assert vsrhpo.ssim(c100, c110) == pytest.approx(0.99548, abs=1e-4)


def test_search_and_reports(tmp_path):
    log = tmp_path / "run.jsonl"
    result = vsrhpo.run_search("tpe", seed=1, profile_seed=1, log_path=str(log))
    assert len(result["trials"]) == 24
    assert vsrhpo.format_duration(result["elapsed_s"]) == "32h 00min"
    top = vsrhpo.top_k(str(log), 3)
    assert [t["objective"] for t in top] == sorted(t["objective"] for t in top)
    assert top[0]["trial_id"] == result["best_trial"]
    again = vsrhpo.run_search("tpe", seed=1, profile_seed=1)
    assert [t["config"] for t in again["trials"]] == [t["config"] for t in result["trials"]]
    losses = result["trials"][0]["losses"]
    config = result["trials"][0]["config"]
    assert losses[3] == vsrhpo.synthetic_loss(config, 3, 1)


def test_pareto():
    pts = [(1.0, 10, 10), (2.0, 5, 10), (1.0, 10, 10), (3.0, 20, 20), (0.5, 30, 5)]
    assert vsrhpo.pareto_front(pts) == [0, 1, 2, 4]
