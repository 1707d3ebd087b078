import csv
import json
import math

import numpy as np
import pytest

from globaladv.data import MEANINGLESS, DataConfig, generate, save_dataset, split
from globaladv.harness import (
    SERIES_COLUMNS, Campaign, CampaignConfigError, compare_methods, compare_reports, execute_campaign,
    export_report, read_report, read_series, run_campaign, select_starts,
)
from globaladv.net import predict_class, save_model

from helpers import zero_net

QUICK = dict(n_starts=6, rounds=4, sub_steps=5, warmup_rounds=2, block_size=5, top_k=5)


@pytest.fixture(scope="module")
def zero_files(tmp_path_factory, moons2d):
    root = tmp_path_factory.mktemp("zero")
    save_model(zero_net(2, 3), root / "zero.json")
    return str(root / "zero.json"), moons2d.data_path


@pytest.mark.parametrize("method", ["g_fgsm", "g_ifgsm", "g_pgd", "gevmcmc"])
def test_constant_model_never_succeeds(zero_files, method):
    model, data = zero_files
    r = run_campaign(Campaign(model, data, method, **QUICK))
    assert r.attack_rate == 0.0
    assert r.avg_loss == pytest.approx(math.log(3))
    assert r.n_pairs == 6 * 4


def test_campaign_validation():
    with pytest.raises(CampaignConfigError):
        Campaign(method="cw")
    with pytest.raises(CampaignConfigError):
        Campaign(start_mode="anywhere")
    with pytest.raises(CampaignConfigError):
        Campaign(n_starts=0)
    with pytest.raises(CampaignConfigError):
        Campaign(method="gevmcmc", rounds=5, warmup_rounds=10)
    with pytest.raises(CampaignConfigError, match="unknown"):
        Campaign.from_dict({"method": "g_pgd", "colour": "red"})
    assert Campaign(epsilon=0.2).step_size == pytest.approx(0.02)


def test_config_echo_lists_effective_settings():
    echo = Campaign(method="g_fgsm").echo()
    assert echo["method"] == "g_fgsm"
    assert echo["effective"]["sub_steps"] == 1 and echo["effective"]["step_size"] == 0.1


def test_test_image_starts_skip_meaningless(moons2d):
    x, y = select_starts(Campaign(n_starts=50), moons2d.ds)
    assert x.shape == (50, 2) and np.all(y < 2)
    _, test = split(moons2d.ds, 0.2, 0)
    pool = {tuple(r) for r in test.inputs}
    assert all(tuple(r) in pool for r in x)
    x2, _ = select_starts(Campaign(n_starts=50), moons2d.ds)
    np.testing.assert_array_equal(x, x2)


def test_random_starts_are_labelled_meaningless(moons2d):
    x, y = select_starts(Campaign(start_mode="random_images", n_starts=10), moons2d.ds)
    assert np.all(y == moons2d.ds.class_names.index(MEANINGLESS))
    assert x.min() >= 0 and x.max() <= 1


def test_local_random_starts_need_a_meaningless_class():
    ds = generate(DataConfig("blobs", 20))
    with pytest.raises(CampaignConfigError, match="meaningless"):
        select_starts(Campaign(method="l_pgd", start_mode="random_images"), ds)


def test_local_campaign_counts_only_correct_starts(moons2d):
    c = Campaign(method="l_pgd", n_starts=40)
    r = execute_campaign(moons2d.net, moons2d.ds, c)
    x, y = select_starts(c, moons2d.ds)
    assert r.n_pairs == int(np.sum(predict_class(moons2d.net, x) == y))
    flips = sum(p["class1"] != p["class2"] for p in r.final_pairs)
    assert r.attack_rate == flips / r.n_pairs
    for p in r.final_pairs:
        assert np.max(np.abs(np.subtract(p["x1"], p["x2"]))) <= 0.1 + 1e-12


@pytest.fixture(scope="module")
def pgd_report(moons2d):
    return execute_campaign(moons2d.net, moons2d.ds, Campaign(method="g_pgd", n_starts=20, rounds=15))


def test_report_is_self_consistent(pgd_report):
    r = pgd_report
    assert 0 <= r.attack_rate <= 1
    assert r.max_loss >= r.avg_loss >= 0
    rows = r.per_round
    assert len(rows) == 15
    assert sum(row["n_success"] for row in rows) / sum(row["n_pairs"] for row in rows) == r.attack_rate
    cum = [row["cum_max_loss"] for row in rows]
    assert cum == sorted(cum) and cum[-1] == r.max_loss
    assert r.avg_final_loss == pytest.approx(np.mean(r.final_losses))


def test_json_round_trip(tmp_path, pgd_report):
    export_report(pgd_report, tmp_path / "r.json")
    back = read_report(tmp_path / "r.json")
    assert back["attack_rate"] == pgd_report.attack_rate
    assert "wall_time" not in back
    export_report(pgd_report, tmp_path / "t.json", include_timing=True)
    assert read_report(tmp_path / "t.json")["wall_time"] == pgd_report.wall_time


def test_csv_series(tmp_path, pgd_report):
    export_report(pgd_report, tmp_path / "r.csv", "csv")
    text = (tmp_path / "r.csv").read_text()
    assert '"' not in text
    with open(tmp_path / "r.csv", newline="") as fh:
        rows = list(csv.reader(fh))
    assert tuple(rows[0]) == SERIES_COLUMNS
    assert len(rows) == 1 + 15
    series = read_series(tmp_path / "r.csv")
    assert [s["max_loss"] for s in series] == [row["max_loss"] for row in pgd_report.per_round]


def test_unknown_export_format(tmp_path, pgd_report):
    with pytest.raises(ValueError):
        export_report(pgd_report, tmp_path / "r.txt", "xml")


def test_reruns_write_identical_bytes(tmp_path, moons2d):
    c = Campaign(moons2d.model_path, moons2d.data_path, "gevmcmc", **QUICK)
    export_report(run_campaign(c), tmp_path / "a.json")
    export_report(run_campaign(c), tmp_path / "b.json")
    assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()


def test_same_campaign_never_beats_itself(moons2d):
    c = Campaign(moons2d.model_path, moons2d.data_path, "g_pgd", n_starts=10, rounds=5)
    assert compare_methods(c, c).wins_a == 0


def test_paired_comparison_is_reproducible(moons2d):
    a = Campaign(moons2d.model_path, moons2d.data_path, "g_pgd", n_starts=20, rounds=10)
    b = Campaign(moons2d.model_path, moons2d.data_path, "g_fgsm", n_starts=20, rounds=10)
    first, second = compare_methods(a, b), compare_methods(a, b)
    assert first == second
    assert 0 <= first.wins_a <= first.n_starts == 20


def test_mismatched_starts_are_rejected(moons2d, pgd_report):
    with pytest.raises(CampaignConfigError, match="start_mode"):
        compare_methods(Campaign(method="g_pgd"), Campaign(method="g_fgsm", start_mode="random_images"))
    other = execute_campaign(moons2d.net, moons2d.ds, Campaign(method="g_fgsm", n_starts=10, rounds=3))
    with pytest.raises(CampaignConfigError):
        compare_reports(pgd_report, other)


def test_missing_files_name_the_path(tmp_path):
    with pytest.raises(FileNotFoundError, match="nope.json"):
        run_campaign(Campaign(str(tmp_path / "nope.json"), str(tmp_path / "d.csv")))


def test_width_mismatch_is_rejected(tmp_path, moons2d):
    save_dataset(generate(DataConfig("blobs", 10, dim=3, meaningless_fraction=0.1)), tmp_path / "d3.csv")
    with pytest.raises(CampaignConfigError, match="width"):
        run_campaign(Campaign(moons2d.model_path, str(tmp_path / "d3.csv")))


def test_natural_model_g_pgd_rate(moons2d):
    r = execute_campaign(moons2d.net, moons2d.ds, Campaign(method="g_pgd"))
    assert r.attack_rate >= 0.9


@pytest.mark.xfail(strict=True, reason="measured 0.505 on the D = 10 adversarial fixture; see the decisions ledger")
def test_adversarial_model_resists_local_pgd_from_random_images(toy10_adversarial):
    r = execute_campaign(toy10_adversarial.net, toy10_adversarial.ds, Campaign(method="l_pgd", start_mode="random_images"))
    assert r.attack_rate <= 0.1
