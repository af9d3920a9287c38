"""Config parsing, validation, campaign orchestration, and reproducibility."""

import json
import os

import pytest

from fppdt import __version__
from fppdt.cli import (
    CampaignConfig,
    ConfigError,
    main,
    parse_config,
    parse_value,
    run_campaign,
)
from fppdt.experiment import derive_seed


def write_config(path, text):
    path.write_text(text, encoding="utf-8")
    return str(path)


MU_MINIMAL = "dist = exponential(1.0)\nn = 8\nreplicas = 1\nseed = 42\n"


# ---------------------------------------------------------------------------
# value and file parsing
# ---------------------------------------------------------------------------

def test_parse_value_types():
    assert parse_value("3") == 3
    assert isinstance(parse_value("3"), int)
    assert parse_value("3.5") == 3.5
    assert parse_value("-2") == -2
    assert parse_value("true") is True
    assert parse_value("off") is False
    assert parse_value("exponential(1.0)") == "exponential(1.0)"
    assert parse_value("16,32,64") == [16, 32, 64]
    assert parse_value("0.1, 0.2") == [0.1, 0.2]


def test_parse_value_keeps_parenthesized_commas_together():
    # a distribution spec with two parameters is one token, not a list
    assert parse_value("bernoulliAtom(0.4, 1)") == "bernoulliAtom(0.4, 1)"
    assert parse_value("uniform(0,1),uniform(1,2)") == [
        "uniform(0,1)", "uniform(1,2)"]


def test_parse_config_lines_and_comments():
    text = """
    # campaign parameters
    dist = exponential(1.0)
    n = 16,32   # dyadic grid
    seed=7
    """
    opts = parse_config(text)
    assert opts == {"dist": "exponential(1.0)", "n": [16, 32], "seed": 7}


def test_parse_config_rejects_malformed_lines():
    with pytest.raises(ConfigError):
        parse_config("just some words\n")
    with pytest.raises(ConfigError):
        parse_config("2bad = 1\n")
    with pytest.raises(ConfigError):
        parse_config("n = 8\nn = 16\n")
    with pytest.raises(ConfigError):
        parse_config("n =\n")


# ---------------------------------------------------------------------------
# configuration validation
# ---------------------------------------------------------------------------

def test_validate_minimal_mu():
    CampaignConfig("mu", parse_config(MU_MINIMAL)).validate()


def test_validate_rejects_unknown_command_and_key():
    with pytest.raises(ConfigError):
        CampaignConfig("frobnicate", {}).validate()
    cfg = CampaignConfig("mu", {"dist": "exponential(1.0)", "n": 8,
                                "bogus": 1})
    with pytest.raises(ConfigError, match="unknown key"):
        cfg.validate()


def test_validate_requires_keys():
    with pytest.raises(ConfigError, match="missing required"):
        CampaignConfig("mu", {"n": 8}).validate()
    with pytest.raises(ConfigError, match="missing required"):
        CampaignConfig("truncgap", {"dist": "exponential(1.0)",
                                    "n": 16}).validate()


def test_validate_ranges():
    base = {"dist": "exponential(1.0)", "n": 8}
    with pytest.raises(ConfigError):
        CampaignConfig("mu", {**base, "replicas": 0}).validate()
    with pytest.raises(ConfigError):
        CampaignConfig("mu", {**base, "seed": 2 ** 64}).validate()
    with pytest.raises(ConfigError):
        CampaignConfig("mu", {**base, "n": 4}).validate()
    with pytest.raises(ConfigError):
        CampaignConfig("mu", {**base, "intensity": 0}).validate()
    with pytest.raises(ConfigError):
        CampaignConfig("perc", {"p": [0.2, 1.5], "R": 8}).validate()
    with pytest.raises(ConfigError):
        CampaignConfig("fluct", {**base, "n": [8, 16],
                                 "replicas": 5}).validate()
    with pytest.raises(ConfigError):
        CampaignConfig("shape", {"dist": "exponential(1.0)", "t": 8,
                                 "mu_hat": 0.8, "kappa": 0.4}).validate()
    with pytest.raises(ConfigError):
        CampaignConfig("kappa", {"window": 12, "r": [1, 11]}).validate()
    with pytest.raises(ConfigError):
        CampaignConfig("animals", {"dist": "uniform(0,1)",
                                   "s": 13}).validate()
    # a span that cannot fit the stated window fails before any work
    with pytest.raises(ConfigError):
        CampaignConfig("mu", {**base, "n": 16, "window": 20.0,
                              "margin": 4.0}).validate()


def test_accessor_type_errors():
    cfg = CampaignConfig("mu", {"dist": "exponential(1.0)", "n": 8,
                                "replicas": "many"})
    with pytest.raises(ConfigError, match="integer"):
        cfg.validate()
    with pytest.raises(ConfigError):
        CampaignConfig("mu", {"dist": "nosuch(1)", "n": 8}).validate()


# ---------------------------------------------------------------------------
# run_campaign
# ---------------------------------------------------------------------------

def test_minimal_mu_campaign(tmp_path):
    out = tmp_path / "mu_run"
    cfg = CampaignConfig("mu", {**parse_config(MU_MINIMAL),
                                "out": str(out)})
    assert run_campaign(cfg) == 0
    lines = (tmp_path / "mu_run.csv").read_text().splitlines()
    assert lines[0] == "n,replica,T,seed"
    assert len(lines) == 2
    assert lines[1].startswith("8,0,")
    summary = json.loads((tmp_path / "mu_run.json").read_text())
    assert summary["schema"] == "fppdt-1"
    assert summary["extra"]["mu_hat"] > 0


def test_invalid_p_exits_2_without_files(tmp_path, capsys):
    out = tmp_path / "perc_run"
    cfg = CampaignConfig("perc", {"p": [0.2, 1.5], "R": 8.0,
                                  "out": str(out), "seed": 1})
    assert run_campaign(cfg) == 2
    assert list(tmp_path.iterdir()) == []
    assert "config error" in capsys.readouterr().err


def test_numeric_failure_exits_3_without_files(tmp_path, capsys):
    # an essentially empty sample cannot be triangulated
    cfg = CampaignConfig("mu", {"dist": "exponential(1.0)", "n": 8,
                                "intensity": 1e-4, "seed": 1,
                                "out": str(tmp_path / "nf")})
    assert run_campaign(cfg) == 3
    assert list(tmp_path.iterdir()) == []
    assert "failed" in capsys.readouterr().err


def test_rerun_is_byte_identical(tmp_path):
    opts = parse_config(MU_MINIMAL)
    for name in ("first", "second"):
        cfg = CampaignConfig("mu", {**opts, "out": str(tmp_path / name)})
        assert run_campaign(cfg) == 0
    a = (tmp_path / "first.csv").read_bytes()
    b = (tmp_path / "second.csv").read_bytes()
    assert a == b
    sa = json.loads((tmp_path / "first.json").read_text())
    sb = json.loads((tmp_path / "second.json").read_text())
    assert sa == sb


def test_thread_count_does_not_change_bytes(tmp_path, monkeypatch):
    opts = {"dist": "exponential(1.0)", "n": [8.0, 12.0], "replicas": 6,
            "seed": 99}
    blobs = []
    for threads in ("1", "4"):
        monkeypatch.setenv("FPPDT_THREADS", threads)
        out = tmp_path / ("t" + threads)
        cfg = CampaignConfig("mu", {**opts, "out": str(out)})
        assert run_campaign(cfg) == 0
        blobs.append(out.with_suffix(".csv").read_bytes()
                     + out.with_suffix(".json").read_bytes())
    monkeypatch.delenv("FPPDT_THREADS")
    assert blobs[0] == blobs[1]


def test_manifest_contents(tmp_path):
    out = tmp_path / "man"
    cfg = CampaignConfig("mu", {"dist": "exponential(1.0)", "n": 8,
                                "replicas": 3, "seed": 42, "out": str(out)})
    assert run_campaign(cfg) == 0
    man = json.loads((tmp_path / "man.manifest.json").read_text())
    assert man["schema"] == "fppdt-1"
    assert man["code_version"] == __version__
    assert man["command"] == "mu"
    assert man["config"]["seed"] == 42
    assert man["config"]["dist"] == "exponential(1.0)"
    assert man["replica_seeds"] == [derive_seed(42, "replica", i)
                                    for i in range(3)]
    assert man["wall_clock_s"] >= 0
    for path in man["outputs"].values():
        assert os.path.exists(path)


def test_manifest_config_reproduces_run(tmp_path):
    first = tmp_path / "orig"
    cfg = CampaignConfig("mu", {**parse_config(MU_MINIMAL),
                                "out": str(first)})
    assert run_campaign(cfg) == 0
    man = json.loads((tmp_path / "orig.manifest.json").read_text())
    echo = dict(man["config"])
    command = echo.pop("command")
    echo["out"] = str(tmp_path / "redo")
    assert run_campaign(CampaignConfig(command, echo)) == 0
    assert ((tmp_path / "orig.csv").read_bytes()
            == (tmp_path / "redo.csv").read_bytes())


# ---------------------------------------------------------------------------
# command line entry
# ---------------------------------------------------------------------------

def test_main_with_config_file(tmp_path):
    cfg_path = write_config(tmp_path / "mu.cfg", MU_MINIMAL)
    out = str(tmp_path / "run")
    assert main(["mu", "--config", cfg_path, "--out", out]) == 0
    header = (tmp_path / "run.csv").read_text().splitlines()[0]
    assert header == "n,replica,T,seed"


def test_seed_flag_overrides_config(tmp_path):
    cfg_path = write_config(tmp_path / "mu.cfg", MU_MINIMAL)
    out_a = str(tmp_path / "a")
    out_b = str(tmp_path / "b")
    assert main(["mu", "--config", cfg_path, "--out", out_a]) == 0
    assert main(["mu", "--config", cfg_path, "--seed", "43",
                 "--out", out_b]) == 0
    man = json.loads((tmp_path / "b.manifest.json").read_text())
    assert man["config"]["seed"] == 43
    assert ((tmp_path / "a.csv").read_bytes()
            != (tmp_path / "b.csv").read_bytes())


def test_set_overrides_config_value(tmp_path):
    cfg_path = write_config(tmp_path / "mu.cfg", MU_MINIMAL)
    out = str(tmp_path / "o")
    assert main(["mu", "--config", cfg_path, "--set", "n=8,12",
                 "--out", out]) == 0
    lines = (tmp_path / "o.csv").read_text().splitlines()
    assert len(lines) == 3


def test_main_error_paths(tmp_path, capsys):
    missing = str(tmp_path / "nope.cfg")
    assert main(["mu", "--config", missing]) == 2
    bad_set = write_config(tmp_path / "mu.cfg", MU_MINIMAL)
    assert main(["mu", "--config", bad_set, "--set", "oops"]) == 2
    mismatched = write_config(tmp_path / "named.cfg",
                              "command = perc\np = 0.5\nR = 8\n")
    assert main(["mu", "--config", mismatched]) == 2
    capsys.readouterr()


def test_unknown_subcommand_exits_2(capsys):
    with pytest.raises(SystemExit) as err:
        main(["frobnicate"])
    assert err.value.code == 2
    capsys.readouterr()


def test_config_command_key_accepted_when_matching(tmp_path):
    cfg_path = write_config(tmp_path / "mu.cfg",
                            "command = mu\n" + MU_MINIMAL)
    assert main(["mu", "--config", cfg_path,
                 "--out", str(tmp_path / "ok")]) == 0


def test_gen_and_kappa_commands(tmp_path):
    out_g = str(tmp_path / "g")
    assert main(["gen", "--set", "window=12", "--seed", "5",
                 "--out", out_g]) == 0
    lines = (tmp_path / "g.csv").read_text().splitlines()
    assert lines[0] == "index,x,y"
    assert len(lines) > 50

    out_k = str(tmp_path / "k")
    assert main(["kappa", "--set", "window=14", "--set", "r=1,2,3",
                 "--seed", "3", "--out", out_k]) == 0
    summary = json.loads((tmp_path / "k.json").read_text())
    counts = [c["N_r"] for c in summary["cells"]]
    assert counts == sorted(counts)
