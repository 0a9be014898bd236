import csv
import subprocess
import sys
from importlib import resources

import pytest

from hypercauchy import cli

CONFIGS = resources.files("hypercauchy") / "configs"


def config(tmp_path, text, name="exp.ini"):
    path = tmp_path / name
    path.write_text(text)
    return path


def read_csv(path):
    with open(path) as fh:
        rows = [r for r in csv.reader(fh) if r and not r[0].startswith("#")]
    return rows[0], rows[1:]


def test_missing_config_exits_2(tmp_path):
    assert cli.main(["--config", str(tmp_path / "nope.ini"), "--out-dir", str(tmp_path)]) == 2


def test_missing_flag_exits_2():
    with pytest.raises(SystemExit) as err:
        cli.main([])
    assert err.value.code == 2


@pytest.mark.parametrize(
    "text",
    [
        "[experiment]\nkind = solve\n[parameters]\nbogus = 1\n",
        "[experiment]\nkind = teleport\n",
        "[experiment]\nkind = solve\n[extra]\na = 1\n",
        "[parameters]\nmodes = 64\n",
        "[experiment]\nkind = solve\n[parameters]\nmodes = 48\n",
        "[experiment]\nkind = solve\n[parameters]\nt_end = -1\n",
        "not an ini file",
    ],
)
def test_bad_configs_exit_2(tmp_path, text, capsys):
    assert cli.main(["--config", str(config(tmp_path, text)), "--out-dir", str(tmp_path)]) == 2
    assert "config error" in capsys.readouterr().err


def test_seed_rejected_for_seedless_kind(tmp_path):
    path = config(tmp_path, "[experiment]\nkind = causal\n")
    assert cli.main(["--config", str(path), "--out-dir", str(tmp_path), "--seed", "3"]) == 2


def test_advection_config_keeps_hk_norm_constant(tmp_path):
    code = cli.main(["--config", str(CONFIGS / "advection.ini"), "--out-dir", str(tmp_path), "--quiet"])
    assert code == 0
    header, rows = read_csv(tmp_path / "advection_trajectory.csv")
    assert header == ["t", "hk_norm", "c1_norm", "weighted_energy"]
    hk = [float(r[1]) for r in rows]
    assert max(hk) - min(hk) <= 1e-8
    assert (tmp_path / "advection_summary.txt").read_text().splitlines()[1].startswith("experiment solve: PASS")


def test_no_timestamp_outputs_are_byte_identical(tmp_path):
    outs = []
    for run in ("a", "b"):
        out = tmp_path / run
        assert cli.main(["--config", str(CONFIGS / "causal.ini"), "--out-dir", str(out), "--no-timestamp", "--quiet"]) == 0
        outs.append({p.name: p.read_bytes() for p in sorted(out.iterdir())})
    assert outs[0] == outs[1]
    assert not any(b.startswith(b"# generated") for b in outs[0].values())


def test_timestamp_line_only_difference(tmp_path):
    cli.main(["--config", str(CONFIGS / "causal.ini"), "--out-dir", str(tmp_path / "s"), "--quiet"])
    cli.main(["--config", str(CONFIGS / "causal.ini"), "--out-dir", str(tmp_path / "n"), "--quiet", "--no-timestamp"])
    stamped = (tmp_path / "s" / "causal_plan.csv").read_text().splitlines()
    plain = (tmp_path / "n" / "causal_plan.csv").read_text().splitlines()
    assert stamped[0].startswith("# generated ")
    assert stamped[1:] == plain


def test_seed_flag_overrides_config(tmp_path):
    text = "[experiment]\nkind = moser\n[parameters]\nvariants = first\ncount = 5\nseed = 0\n"
    path = config(tmp_path, text)
    args = ["--config", str(path), "--no-timestamp", "--quiet"]
    cli.main(args + ["--out-dir", str(tmp_path / "default")])
    cli.main(args + ["--out-dir", str(tmp_path / "seed0"), "--seed", "0"])
    cli.main(args + ["--out-dir", str(tmp_path / "seed7"), "--seed", "7"])
    read = lambda d: (tmp_path / d / "moser_first.csv").read_bytes()
    assert read("default") == read("seed0")
    assert read("default") != read("seed7")


@pytest.mark.parametrize("name", ["burgers_breakdown", "lifetime", "dm_demo", "commutator", "causal"])
def test_bundled_configs_pass(tmp_path, name):
    assert cli.main(["--config", str(CONFIGS / f"{name}.ini"), "--out-dir", str(tmp_path), "--quiet"]) == 0


def test_geometry_config_reports_constraint_failure(tmp_path):
    assert cli.main(["--config", str(CONFIGS / "geometry.ini"), "--out-dir", str(tmp_path), "--quiet"]) == 1
    _, rows = read_csv(tmp_path / "geometry_checks.csv")
    failed = [r[0] for r in rows if r[4] == "0"]
    assert failed == ["constraint_2_sliced"]


def test_geometry_corrected_form_passes(tmp_path):
    path = config(tmp_path, "[experiment]\nkind = geometry\n[parameters]\nconstraint_form = corrected\n")
    assert cli.main(["--config", str(path), "--out-dir", str(tmp_path), "--quiet"]) == 0


def test_full_suite_fails_only_on_printed_constraint(tmp_path):
    code = cli.main(["--config", str(CONFIGS / "all.ini"), "--out-dir", str(tmp_path), "--quiet"])
    assert code == 1
    _, rows = read_csv(tmp_path / "acceptance_criteria.csv")
    failed = [int(r[0]) for r in rows if r[2] == "0"]
    assert failed == [10, 12]


@pytest.mark.xfail(strict=True, reason="criterion 10 fails under the printed second constraint")
def test_full_suite_exits_zero(tmp_path):
    assert cli.main(["--config", str(CONFIGS / "all.ini"), "--out-dir", str(tmp_path), "--quiet"]) == 0


def test_module_entry_point(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "hypercauchy", "--config", str(CONFIGS / "causal.ini"), "--out-dir", str(tmp_path)],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0
    assert proc.stdout.startswith("causal: PASS")
