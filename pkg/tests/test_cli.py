import json
import os
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from projcoreset import InputError
from projcoreset.cli import main
from projcoreset.experiments import ExperimentConfig, rows_to_csv

GOLDEN = Path(__file__).parent / "golden"
FOUR = "0,0\n2,0\n10,0\n12,0\n"


@pytest.fixture
def four(tmp_path):
    path = tmp_path / "four.csv"
    path.write_text(FOUR)
    return path


def run(args, capsys):
    code = main([str(a) for a in args])
    out, err = capsys.readouterr()
    return code, out, err


def test_fit_four_points(four, capsys):
    code, out, _ = run(["fit", "-i", four, "--family", "kcenters", "-k", 2, "--z", 2], capsys)
    art = json.loads(out)
    assert code == 0
    assert art["schema"] == 1 and art["cost"] == pytest.approx(4.0)
    assert art["command"] == "fit" and art["seed"] == 0 and len(art["config_hash"]) == 16
    code, out, _ = run(["fit", "-i", four, "-k", 2, "--exact"], capsys)
    assert json.loads(out)["fit"]["approx_factor_c"] == 1.0


def test_pipeline_round_trip(four, tmp_path, capsys):
    fit_json, prof_json, core_json, core_csv = (tmp_path / f for f in ("f.json", "s.json", "c.json", "c.csv"))
    assert run(["fit", "-i", four, "-k", 2, "-o", fit_json], capsys)[0] == 0
    assert run(["sensitivity", "-i", four, "-k", 2, "--fit", fit_json, "-o", prof_json], capsys)[0] == 0
    prof = json.loads(prof_json.read_text())["profile"]
    assert prof["method"] == "kcenters-closed-form"
    assert np.all(np.array(prof["bounds"]) > 0)
    code, _, _ = run(["coreset", "-i", four, "-k", 2, "--profile", prof_json, "--size", 6, "--seed", 3,
                      "-o", core_json, "--csv-output", core_csv], capsys)
    assert code == 0
    core = json.loads(core_json.read_text())["coreset"]
    assert len(core["indices"]) == 6 and min(core["weights"]) > 0
    for path in (core_json, core_csv):
        code, out, _ = run(["evaluate", "-i", four, "-k", 2, "--coreset", path, "--n-random", 10], capsys)
        assert code == 0 and json.loads(out)["report"]["max_error"] >= 0


def test_coreset_of_single_point(tmp_path, capsys):
    path = tmp_path / "one.csv"
    path.write_text("3,4\n")
    code, out, _ = run(["coreset", "-i", path, "--epsilon", 1.0], capsys)
    core = json.loads(out)["coreset"]
    assert code == 0 and core["indices"] == [0] and core["weights"] == [1.0]


def test_evaluate_identity(four, tmp_path, capsys):
    same = tmp_path / "same.csv"
    same.write_text("x,y,weight\n" + "".join(f"{r},1\n" for r in FOUR.splitlines()))
    code, out, _ = run(["evaluate", "-i", four, "-k", 2, "--coreset", same, "--n-random", 10], capsys)
    assert code == 0 and json.loads(out)["report"]["max_error"] == pytest.approx(0.0, abs=1e-12)


def test_weights_column(tmp_path, capsys):
    path = tmp_path / "w.csv"
    path.write_text("w,x\n2,0\n1,3\n")
    code, out, _ = run(["fit", "-i", path, "--weights-column", "w", "-k", 1], capsys)
    assert code == 0 and json.loads(out)["shape"]["centers"] == [[1.0]]


def test_empirical_profile_is_floor_mixed_before_sampling(four, capsys):
    code, out, _ = run(["coreset", "-i", four, "--family", "klines", "-k", 1, "--budget", 16, "--size", 5], capsys)
    art = json.loads(out)
    assert code == 0 and art["floor_mixed"] and art["profile_method"] == "empirical-adversarial"


def test_lowerbound_command(capsys):
    code, out, _ = run(["lowerbound", "-n", 3], capsys)
    art = json.loads(out)
    assert code == 0
    assert art["table"][0]["ratio"] == pytest.approx(0.4)
    assert len(art["shapes"]) == 3 and art["shapes"][0]["variant"] == "klines"
    code, out, _ = run(["lowerbound", "-n", 2], capsys)
    assert json.loads(out)["total"] == pytest.approx(1.0)


@pytest.mark.parametrize(
    "args, code",
    [
        (["fit", "-i", "missing.csv"], 2),
        (["fit", "-i", "{four}", "--z", "0.5"], 2),
        (["fit", "-i", "{four}", "-k", "9"], 2),
        (["fit", "-i", "{four}", "--family", "jflat", "-j", "2"], 2),
        (["sensitivity", "-i", "{four}", "--family", "klines", "--method", "closed-form"], 2),
        (["sensitivity", "-i", "{four}", "--z", "3", "--method", "oracle"], 3),
        (["coreset", "-i", "{four}", "--epsilon", "0"], 2),
        (["lowerbound", "-n", "1"], 2),
        (["--threads", "0", "lowerbound", "-n", "4"], 2),
        (["experiment", "--config", "missing.json"], 2),
    ],
)
def test_exit_codes(args, code, four, capsys):
    args = [a.replace("{four}", str(four)) for a in args]
    got, _, err = run(args, capsys)
    assert got == code
    assert err.startswith("error:")


def test_experimental_z_flag(four, capsys):
    code, out, _ = run(["fit", "-i", four, "--z", "0.5", "--experimental-z", "-k", "2"], capsys)
    assert code == 0 and json.loads(out)["config"]["z"] == 0.5


def test_threads_flag(four, capsys):
    assert run(["--threads", 1, "fit", "-i", four, "-k", 2], capsys)[0] == 0


def test_outputs_are_deterministic(four, capsys):
    args = ["coreset", "-i", four, "-k", 2, "--size", 10, "--seed", 7]
    assert run(args, capsys)[1] == run(args, capsys)[1]


# experiments ---------------------------------------------------------------------


@pytest.mark.parametrize("name", ["curves", "dimension", "growth"])
def test_golden_experiments(name, tmp_path, capsys):
    out = tmp_path / f"{name}.csv"
    assert run(["experiment", "--config", GOLDEN / f"{name}.json", "-o", out], capsys)[0] == 0
    if os.environ.get("PROJCORESET_REGEN_GOLDEN"):
        (GOLDEN / f"{name}.csv").write_bytes(out.read_bytes())
    assert out.read_bytes() == (GOLDEN / f"{name}.csv").read_bytes()


def test_config_rejects_small_z_unless_experimental(tmp_path, capsys):
    cfg = {"kind": "growth", "z": 0.5, "generator": {"kind": "lowerbound"}, "ns": [4]}
    with pytest.raises(InputError):
        ExperimentConfig.from_dict(cfg)
    path = tmp_path / "c.json"
    path.write_text(json.dumps(cfg))
    assert run(["experiment", "--config", path], capsys)[0] == 2
    code, out, _ = run(["experiment", "--config", path, "--experimental-z"], capsys)
    assert code == 0 and out.startswith("n,lowerbound_total")
    path.write_text(json.dumps({**cfg, "experimental_z": True}))
    assert run(["experiment", "--config", path], capsys)[0] == 0


@pytest.mark.parametrize(
    "obj",
    [
        {"kind": "spin"},
        {"kind": "growth", "family": "circles"},
        {"kind": "growth", "generator": {"kind": "spiral"}},
        {"kind": "growth", "epsilon": 2},
        {"kind": "growth", "k": 0},
        {"kind": "growth", "unknown_key": 1},
    ],
)
def test_config_validation(obj):
    with pytest.raises(InputError):
        ExperimentConfig.from_dict(obj)


configs = st.builds(
    dict,
    kind=st.sampled_from(["curves", "dimension", "growth"]),
    family=st.sampled_from(["kcenters", "klines", "jflat", "kjflats"]),
    k=st.integers(1, 6),
    j=st.integers(0, 3),
    z=st.sampled_from([1, 1.5, 2.0, 3]),
    epsilon=st.floats(0.01, 1.0),
    n=st.integers(1, 10**5),
    d=st.integers(1, 100),
    generator=st.sampled_from([{"kind": "mixture", "imbalance": 0.5}, {"kind": "grid", "c": 1.5}, {"kind": "lowerbound"}]),
    seeds=st.lists(st.integers(0, 2**31), max_size=4),
    ns=st.lists(st.integers(2, 1000), max_size=4),
)


@given(configs)
def test_config_canonical_round_trip(obj):
    cfg = ExperimentConfig.from_dict(obj)
    text = cfg.to_json()
    again = ExperimentConfig.from_json(text)
    assert again == cfg
    assert again.to_json().encode() == text.encode()
    assert again.hash == cfg.hash


def test_rows_to_csv_union_of_columns():
    text = rows_to_csv([{"a": 1, "b": 0.5}, {"a": 2, "c": None}])
    assert text == "a,b,c\n1,0.5,\n2,,\n"
