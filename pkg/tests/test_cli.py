import json

import pytest

from arcdimer.cli import ConfigError, config_digest, main, parse_config


def test_parse_config_defaults_and_types():
    cfg = parse_config("samples = 50\nmodel = both\ny = pi/6\n", "moments")
    assert cfg["samples"] == 50
    assert cfg["model"] == ["folded", "shifted"]
    assert cfg["rows"] == 40


def test_unknown_and_duplicate_keys():
    with pytest.raises(ConfigError):
        parse_config("colour = red", "moments")
    with pytest.raises(ConfigError):
        parse_config("samples=1\nsamples=2", "moments")
    with pytest.raises(ConfigError):
        parse_config("model = triple", "moments")


def test_digest_depends_on_values():
    a = parse_config("samples=1", "moments")
    b = parse_config("samples=2", "moments")
    assert config_digest(a) != config_digest(b)
    assert config_digest(a) == config_digest(parse_config("samples = 1", "moments"))


def test_usage_errors_exit_2(tmp_path):
    assert main(["nonsense"]) == 2
    assert main(["identity", "--config", str(tmp_path / "missing.cfg")]) == 2
    bad = tmp_path / "bad.cfg"
    bad.write_text("unknown_key = 1\n")
    assert main(["identity", "--config", str(bad), "--out", str(tmp_path)]) == 2


def _run(tmp_path, name, cmd, text, *extra):
    cfg = tmp_path / f"{name}.cfg"
    cfg.write_text(text)
    out = tmp_path / name
    code = main([cmd, "--config", str(cfg), "--out", str(out), "--no-timestamp", *extra])
    return code, out


def test_negative_control_exits_1(tmp_path):
    code, out = _run(tmp_path, "neg", "verify_kenyon", "connections = 1\ninject_phase_error = 0\n")
    assert code == 1
    body = json.loads((out / "verify_kenyon.json").read_text())
    assert body["passed"] is False


def test_outputs_are_reproducible(tmp_path):
    text = "rows = 8\naspect = 2\nsamples = 300\nmodel = both\n"
    c1, o1 = _run(tmp_path, "a", "moments", text)
    c2, o2 = _run(tmp_path, "b", "moments", text, "--threads", "2")
    assert c1 == c2 == 0
    for f in ("moments.csv", "moments.json", "moments.svg", "manifest.json"):
        assert (o1 / f).read_bytes() == (o2 / f).read_bytes()
    csv_head = (o1 / "moments.csv").read_text().splitlines()[:4]
    assert [line.split("=")[0] for line in csv_head] == ["# git", "# seed", "# config_digest", "# command"]


def test_timestamp_only_in_manifest_and_svg(tmp_path):
    cfg = tmp_path / "r.cfg"
    cfg.write_text("rows = 8\naspect = 2\n")
    out = tmp_path / "r"
    assert main(["render", "--config", str(cfg), "--out", str(out)]) == 0
    assert "created" in json.loads((out / "manifest.json").read_text())
    assert "created" not in (out / "render.json").read_text()
    assert (out / "render.svg").read_text().startswith("<?xml")


def test_seed_flag_overrides_config(tmp_path):
    _, out = _run(tmp_path, "s", "render", "rows = 8\naspect = 2\nseed = 3\n", "--seed", "9")
    assert json.loads((out / "manifest.json").read_text())["seed"] == 9


def test_cylinder_command(tmp_path):
    code, out = _run(tmp_path, "cy", "cylinder", "n = 3\nm = 2\n")
    assert code == 0
    assert (out / "cylinder.csv").read_text().count("\n") == 4 + 1 + 5


def test_trace_command(tmp_path):
    code, out = _run(tmp_path, "tr", "trace", "heights = 8, 16\nn_max = 2\n")
    assert code == 0
    ratios = json.loads((out / "trace.json").read_text())["result"]["gap_ratios"]
    assert set(ratios) == {"folded_T1", "folded_T2", "shifted_T1", "shifted_T2"}
