import csv
import hashlib
import json

import pytest

from semiclassical_lab.cli import main
from semiclassical_lab.errors import ConfigError
from semiclassical_lab.experiments import CATALOG, run_experiment, validate


def _config(tmp_path, body, name="cfg.toml"):
    path = tmp_path / name
    path.write_text(body)
    return path


def test_list_shows_every_experiment(capsys):
    assert main(["list"]) == 0
    out = capsys.readouterr().out
    assert len(CATALOG) == 11
    for name in CATALOG:
        assert name in out
    assert "gamma=0.15" in out


def test_unknown_experiment_is_a_config_error(tmp_path, capsys):
    cfg = _config(tmp_path, 'experiment = "nope"\n')
    assert main(["run", str(cfg), "--out", str(tmp_path / "o")]) == 2
    assert "config error" in capsys.readouterr().err


def test_gamma_out_of_range_is_a_config_error(tmp_path):
    cfg = _config(tmp_path, 'experiment = "homoclinic"\ngamma = 0.3\n')
    assert main(["run", str(cfg), "--out", str(tmp_path / "o")]) == 2


def test_malformed_and_missing_configs(tmp_path):
    assert main(["run", str(_config(tmp_path, "experiment = [\n"))]) == 2
    assert main(["run", str(tmp_path / "absent.toml")]) == 2
    assert main(["run", str(_config(tmp_path, "hbar = 0.1\n"))]) == 2


@pytest.mark.parametrize("name,overrides", [
    ("revival", {"bogus": 1}),
    ("revival", {"hbar": -1.0}),
    ("revival", {"k": []}),
    ("fractional", {"pairs": [[2, 4]]}),
    ("fractional", {"p": 1}),
    ("airy", {"c": 0.0}),
    ("squeezed", {"eps": 1.5}),
    ("harper", {"n": 13}),
    ("harper", {"N": 4}),
])
def test_validation_rejects_bad_parameters(name, overrides):
    with pytest.raises(ConfigError):
        validate(name, overrides)


def test_validation_accepts_single_pair():
    params = validate("fractional", {"p": 1, "q": 3})
    assert params["pairs"] == [[1, 3]]


def test_revival_run_is_deterministic(tmp_path, capsys):
    cfg = _config(tmp_path, 'experiment = "revival"\nsamples_per_period = 4\n')
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["run", str(cfg), "--out", str(a)]) == 0
    assert main(["run", str(cfg), "--out", str(b)]) == 0
    assert "PASS  fidelity_k1" in capsys.readouterr().out
    ma = json.loads((a / "manifest.json").read_text())
    mb = json.loads((b / "manifest.json").read_text())
    assert ma["outputs"] == mb["outputs"]
    for name, digest in ma["outputs"].items():
        data = (a / name).read_bytes()
        assert hashlib.sha256(data).hexdigest() == digest
        assert data == (b / name).read_bytes()
    report = json.loads((a / "report.json").read_text())
    assert report["passed"] and set(report["checks"]) == {"fidelity_k1", "fidelity_k2", "fidelity_k3"}
    assert (a / "fidelity_series.svg").exists()


def test_fractional_third_gives_three_equal_sites(tmp_path):
    cfg = _config(tmp_path, 'experiment = "fractional"\np = 1\nq = 3\n')
    assert main(["run", str(cfg), "--out", str(tmp_path / "f")]) == 0
    with open(tmp_path / "f" / "sites.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 3
    for r in rows:
        assert float(r["abs_weight"]) == pytest.approx(3 ** -0.5, abs=1e-12)


def test_pendulum_experiment_checks():
    res = run_experiment("pendulum", {"max_count_n": 6})
    for n in range(7):
        assert res.checks[f"count_n{n}"].passed
    assert res.checks["arc_action_vs_8"].passed
    assert res.checks["rotated_saddle_on_lattice"].passed


def test_harper_experiment_checks():
    res = run_experiment("harper", {"N": 512, "probes": 4, "max_count_n": 6})
    assert res.checks["lattice_vs_probes"].passed
    assert res.checks["unreachable_endpoint"].passed
    assert res.checks["path_counts"].passed


def test_iterate_fidelity_at_two_steps():
    # literal threshold: fidelity above 0.6 after two iterations
    res = run_experiment("iterate", {"n": 2})
    assert res.checks["three_step_norm"].passed
    assert res.checks["fidelity_n2"].passed
