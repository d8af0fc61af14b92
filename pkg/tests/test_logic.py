from __future__ import annotations

import csv
import json

import pytest
from click.testing import CliRunner

import logic
from cli import main
from errors import ConfigError, ConstructionError, LawSyntaxError

# each check stays several standard errors clear of its threshold at these scales
SMOKE_SCALES = {
    "5.1": 1.0,
    "5.2": 0.1,
    "5.3": 0.3,
    "6": 0.3,
    "7": 0.3,
    "8": 0.3,
    "9.1": 0.3,
    "10": 0.1,
    "11": 1.0,
}


def _config(tmp_path, text):
    path = tmp_path / "experiment.env"
    path.write_text(text)
    return path


def test_config_file_with_overrides(tmp_path):
    path = _config(
        tmp_path,
        "kind=estimate\n"
        "group=semidirect(3)\n"
        "law=[[x,y],[z,w]]\n"
        "walk.steps=20\n"
        "walk.trials=50\n"
        "models=extraspecial3,quotient(heisenberg(2),3)\n",
    )
    cfg = logic.load_config_file(path, ["walk.steps=30"], seed=9)
    assert cfg.group == "semidirect(3)"
    assert cfg.law == "[[x,y],[z,w]]"
    assert cfg.walk.steps == 30
    assert cfg.walk.trials == 50
    assert cfg.walk.seed == 9
    assert cfg.models == ["extraspecial3", "quotient(heisenberg(2),3)"]


def test_list_overrides_are_split():
    cfg = logic.load_config_file(None, ["offsets=5, 10,20", "n_grid=2,4,8"], kind="intersect")
    assert cfg.offsets == [5, 10, 20]
    assert cfg.n_grid == [2, 4, 8]


@pytest.mark.parametrize(
    "overrides",
    [["walk.trials=0"], ["walk.steps"], ["kind=sing"], ["scale=-1"]],
)
def test_bad_configs(overrides):
    with pytest.raises(ConfigError):
        logic.load_config_file(None, overrides)


def test_missing_config_file(tmp_path):
    with pytest.raises(ConfigError):
        logic.load_config_file(tmp_path / "absent.env")


def test_dry_run_validates_without_computing(tmp_path):
    cfg = logic.load_config_file(
        None,
        kind="estimate",
        group="wreath(free(2),lattice(5))",
        law="[[x,y],[z,w]]",
        dry_run=True,
        out=str(tmp_path),
    )
    report = logic.run_experiment(cfg)
    assert report.records == []
    assert report.provenance["dry_run"] is True
    assert not (tmp_path / "results.jsonl").exists()


@pytest.mark.parametrize(
    "fields, error",
    [
        ({"kind": "estimate", "group": "hyperbolic(2)", "law": "x^2"}, ConstructionError),
        ({"kind": "estimate", "group": "lattice(1)", "law": "[x,y"}, LawSyntaxError),
        ({"kind": "estimate", "group": "lattice(1)"}, ConfigError),
        ({"kind": "reproduce", "section": "4"}, ConfigError),
        ({"kind": "estimate", "group": "lattice(1)", "law": "x", "n_grid": [4, 2]}, ConfigError),
    ],
)
def test_invalid_experiments_fail_before_running(fields, error):
    cfg = logic.load_config_file(None, dry_run=True, **fields)
    with pytest.raises(error):
        logic.run_experiment(cfg)


def test_estimate_writes_the_report_files(tmp_path):
    cfg = logic.load_config_file(
        None,
        ["walk.steps=10", "walk.trials=20"],
        kind="estimate",
        group="quotient(lattice(3),2)",
        law="x^2",
        threads=1,
        out=str(tmp_path),
    )
    report = logic.run_experiment(cfg)
    assert report.passed
    assert report.records[0]["p_hat"] == 1.0
    assert report.records[0]["group"] == "quotient(lattice(3),2)"

    lines = (tmp_path / "results.jsonl").read_text().splitlines()
    assert json.loads(lines[0])["successes"] == 20
    with open(tmp_path / "summary.csv", newline="") as handle:
        rows = list(csv.DictReader(handle))
    assert rows[0]["p_hat"] == "1.0"
    provenance = json.loads((tmp_path / "provenance.json").read_text())
    assert provenance["kind"] == "estimate"
    assert provenance["config"]["walk"]["trials"] == 20
    assert "numpy" in provenance["packages"]


def test_reports_are_reproducible():
    fields = dict(kind="estimate", group="dihedral-infinite", law="x^2", threads=2)
    overrides = ["walk.steps=30", "walk.trials=40", "walk.seed=4"]
    first = logic.run_experiment(logic.load_config_file(None, overrides, **fields), write=False)
    again = logic.run_experiment(logic.load_config_file(None, overrides, **fields), write=False)
    assert first.records == again.records


def test_curve_records_carry_running_extremes():
    cfg = logic.load_config_file(
        None,
        ["n_grid=2,4,8", "walk.trials=30"],
        kind="estimate",
        group="dihedral-infinite",
        law="x^2",
        threads=1,
    )
    records = logic.run_experiment(cfg, write=False).records
    assert [r["n"] for r in records] == [2, 4, 8]
    assert records[-1]["running_max"] == max(r["p_hat"] for r in records)


def test_exact_family_and_single_group():
    family = logic.run_experiment(
        logic.load_config_file(None, kind="exact", law="x^2", family="dihedral:3..9:2"),
        write=False,
    )
    assert family.records[-1]["running_inf"] == pytest.approx(5 / 9)
    single = logic.run_experiment(
        logic.load_config_file(None, kind="exact", law="[x,y]", group="quaternion"),
        write=False,
    )
    assert (single.records[0]["numerator"], single.records[0]["denominator"]) == (5, 8)


def test_ball_growth_records():
    cfg = logic.load_config_file(None, kind="ball", group="sym(4)", radius=4)
    records = logic.run_experiment(cfg, write=False).records
    assert [r["size"] for r in records] == [1, 7, 18, 24, 24]


def test_occupation_defaults_to_a_lattice():
    cfg = logic.load_config_file(
        None,
        ["radii=1,2,12", "walk.steps=3", "walk.trials=10", "dim=2"],
        kind="occupation",
        law="[x,y]",
        threads=1,
    )
    records = logic.run_experiment(cfg, write=False).records
    assert [r["r"] for r in records] == [1, 2, 12]
    assert records[-1]["mean"] == 13


def test_verify_a_small_manifest(tmp_path):
    manifest = tmp_path / "claims.txt"
    manifest.write_text(
        "split | free | [a,b] = a conj(a^-1, b)\n"
        "cube  | conditional | [a,b]^3 | [conj(a,b),a]; a^3\n"
        "wrong | free | [a,b] = [b,a]\n"
    )
    cfg = logic.load_config_file(
        None, kind="verify", manifest=str(manifest), models=["sym(3)"], threads=1
    )
    report = logic.run_experiment(cfg, write=False)
    assert [c.name for c in report.checks] == ["split", "cube@sym(3)", "wrong"]
    assert [c.passed for c in report.checks] == [True, True, False]
    assert not report.passed


def test_describe_law():
    response = logic.describe_law("[x,y]")
    assert response.canonical == "[x1,x2]"
    assert response.variables == 2
    assert response.degrees == [0, 0]
    assert response.balanced
    assert response.word == "x1 x2 x1^-1 x2^-1"


def test_reproduce_rejects_unknown_sections_and_scales():
    with pytest.raises(ConfigError):
        logic.reproduce("4")
    with pytest.raises(ConfigError):
        logic.reproduce("8", scale=0)


@pytest.mark.slow
@pytest.mark.parametrize("section, scale", SMOKE_SCALES.items())
def test_reproduce_bundles_pass(section, scale):
    report = logic.reproduce(section, scale=scale, seed=0)
    assert report.kind == f"reproduce:{section}"
    assert report.provenance["section"] == section
    assert report.checks
    assert [c.name for c in report.checks if not c.passed] == []


def test_every_bundle_has_a_smoke_scale():
    assert sorted(SMOKE_SCALES) == sorted(logic.BUNDLES)


def test_cli_estimate(tmp_path):
    result = CliRunner().invoke(
        main,
        [
            "estimate",
            "--group",
            "quotient(lattice(3),2)",
            "--law",
            "x^2",
            "--set",
            "walk.steps=5",
            "--set",
            "walk.trials=10",
            "--threads",
            "1",
            "--out",
            str(tmp_path),
        ],
    )
    assert result.exit_code == 0
    assert json.loads(result.stdout.splitlines()[0])["p_hat"] == 1.0
    assert (tmp_path / "summary.csv").exists()


def test_cli_rejects_a_bad_law(tmp_path):
    result = CliRunner().invoke(
        main, ["estimate", "--group", "lattice(1)", "--law", "[x,y", "--out", str(tmp_path)]
    )
    assert result.exit_code == 2


def test_cli_dry_run(tmp_path):
    result = CliRunner().invoke(
        main, ["reproduce", "6", "--dry-run", "--out", str(tmp_path)]
    )
    assert result.exit_code == 0
    assert not (tmp_path / "results.jsonl").exists()


def test_cli_keeps_dry_run_from_the_config_file(tmp_path):
    path = _config(tmp_path, "dry_run=true\ngroup=lattice(1)\nlaw=x^2\n")
    out = tmp_path / "out"
    result = CliRunner().invoke(
        main, ["estimate", "--config", str(path), "--out", str(out)]
    )
    assert result.exit_code == 0
    assert "p_hat" not in result.output
    assert not (out / "results.jsonl").exists()


def test_cli_failed_checks(tmp_path):
    manifest = tmp_path / "claims.txt"
    manifest.write_text("wrong | free | [a,b] = [b,a]\n")
    result = CliRunner().invoke(
        main, ["verify", "--manifest", str(manifest), "--out", str(tmp_path / "out")]
    )
    assert result.exit_code == 1
    assert "FAIL wrong" in result.stdout
