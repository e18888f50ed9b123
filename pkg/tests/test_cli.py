import filecmp
import shutil
import textwrap
from pathlib import Path

import pytest

from synthpower.cli import main, plan_plants
from synthpower.config import DEFAULT_STATIONS, RunConfig, apply_overrides, load_config, parse_config
from synthpower.core import ValidationError
from synthpower.evaluation import read_results

SMALL = textwrap.dedent(
    """\
    seed: 4
    start: 2019-11-18
    days: 20
    plants:
      pv: 2
      wind: 2
    evaluate:
      training_days: [7, 365]
      seasons: [SON]
      lr_grid: [0.1]
      depth_grid: [2]
      n_estimators: 20
    """
)


def same_tree(a: Path, b: Path) -> bool:
    cmp = filecmp.dircmp(a, b)
    if cmp.left_only or cmp.right_only or cmp.diff_files or cmp.funny_files:
        return False
    _, mismatch, errors = filecmp.cmpfiles(a, b, cmp.common_files, shallow=False)
    return not mismatch and not errors and all(same_tree(a / d, b / d) for d in cmp.common_dirs)


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    (root / "run.yaml").write_text(SMALL)
    assert main(["generate", "--config", str(root / "run.yaml"), "--out", str(root / "data"), "--jobs", "1"]) == 0
    return root


class TestConfig:
    def test_defaults(self):
        cfg = load_config(None)
        assert cfg == RunConfig() and cfg.pv_plants == cfg.wind_plants == 5 and cfg.days == 90

    def test_errors_carry_lines(self):
        text = "seed: 1\ndays: -3\nplants:\n  pv: 2\n  solar: 1\nbogus: true\n"
        with pytest.raises(ValidationError) as info:
            parse_config(text, "run.yaml")
        msg = str(info.value)
        assert "run.yaml:2: days" in msg
        assert "run.yaml:5: unknown key 'solar'" in msg
        assert "run.yaml:6: unknown key 'bogus'" in msg

    def test_yaml_syntax(self):
        with pytest.raises(ValidationError, match="run.yaml:3: YAML syntax error"):
            parse_config("seed: 1\nplants: [\n", "run.yaml")

    def test_bad_model_and_date(self):
        text = "start: yesterday\nevaluate:\n  wind_models: [enercon, magic]\n"
        with pytest.raises(ValidationError) as info:
            parse_config(text, "c")
        assert "c:1: start" in str(info.value) and "c:3: wind_models" in str(info.value)

    def test_too_many_plants(self):
        with pytest.raises(ValidationError, match="stations"):
            parse_config("plants:\n  pv: 11\n")

    def test_stations(self):
        cfg = parse_config("stations:\n  - {id: 7, latitude: 50.1, longitude: 8.7}\nplants: {pv: 1, wind: 1}\n")
        assert cfg.stations[0].station_id == 7 and cfg.stations[0].location.latitude == 50.1

    def test_precedence(self):
        cfg = parse_config("seed: 1\ndays: 30\n")
        env = {"SYNTHPOWER_SEED": "2", "SYNTHPOWER_DAYS": "40"}
        out = apply_overrides(cfg, {"seed": 3, "days": None}, env)
        assert out.seed == 3 and out.days == 40
        assert apply_overrides(cfg, {}, {}).seed == 1

    def test_bad_env(self):
        with pytest.raises(ValidationError, match="SYNTHPOWER_JOBS"):
            apply_overrides(RunConfig(), {}, {"SYNTHPOWER_JOBS": "many"})

    def test_plan_uses_nearest_node(self):
        plan = plan_plants(RunConfig())
        assert len(plan) == 10
        kinds = [k for k, _, _ in plan]
        assert kinds.count("pv") == kinds.count("wind") == 5
        assert {p.loc_id for _, p, _ in plan} == {s.station_id for s in DEFAULT_STATIONS[:5]}


class TestCommands:
    def test_generate_layout(self, workspace):
        for kind in ("pv", "wind"):
            names = sorted(p.name for p in (workspace / "data" / kind).iterdir())
            assert names == sorted(["meta.csv", *(f"data_{t}_{i}.csv" for t in ("input", "target") for i in (1, 2))])

    def test_generate_summary(self, workspace, capsys):
        assert main(["generate", "--config", str(workspace / "run.yaml"), "--out", str(workspace / "again"), "--jobs", "1"]) == 0
        out = capsys.readouterr().out
        assert "pv 1: 312 train / 168 test samples" in out
        assert same_tree(workspace / "data", workspace / "again")

    def test_seed_changes_output(self, workspace):
        assert main(["generate", "--config", str(workspace / "run.yaml"), "--out", str(workspace / "s5"), "--seed", "5", "--jobs", "1"]) == 0
        assert not same_tree(workspace / "data", workspace / "s5")

    def test_env_out(self, workspace, monkeypatch):
        monkeypatch.setenv("SYNTHPOWER_OUT", str(workspace / "env_out"))
        assert main(["generate", "--config", str(workspace / "run.yaml"), "--days", "18", "--jobs", "1"]) == 0
        assert (workspace / "env_out" / "pv" / "meta.csv").exists()

    def test_validate(self, workspace, capsys):
        assert main(["validate", str(workspace / "data")]) == 0
        assert "valid wind bundle, 2 locations" in capsys.readouterr().out

    def test_validate_rejects_tampering(self, workspace, tmp_path):
        shutil.copytree(workspace / "data" / "pv", tmp_path / "pv")
        target = tmp_path / "pv" / "data_target_1.csv"
        lines = target.read_text().splitlines()
        target.write_text("\n".join(lines[:-1]) + "\n")
        assert main(["validate", str(tmp_path / "pv")]) == 2

    def test_evaluate_physical(self, workspace):
        out = workspace / "eval_pv"
        args = ["evaluate", str(workspace / "data" / "pv"), "--config", str(workspace / "run.yaml"),
                "--models", "pv_physical", "--training-days", "365", "--out", str(out), "--jobs", "1"]
        assert main(args) == 0
        rows = read_results(out / "results_pv.csv")
        assert sorted(r.park for r in rows) == [1, 2] and {r.model for r in rows} == {"pv_physical"}
        first = (out / "results_pv.csv").read_bytes()
        assert main(args) == 0
        assert (out / "results_pv.csv").read_bytes() == first

    def test_evaluate_two_wind_columns(self, workspace):
        out = workspace / "eval_wind"
        assert main(["evaluate", str(workspace / "data" / "wind"), "--config", str(workspace / "run.yaml"),
                     "--models", "enercon,mclean_upland", "--out", str(out), "--jobs", "1"]) == 0
        header = (out / "report_wind.txt").read_text().splitlines()[1].split()
        assert header == ["days", "enercon", "mclean_upland"]

    def test_evaluate_gbrt_and_report(self, workspace, capsys):
        out = workspace / "eval_all"
        assert main(["evaluate", str(workspace / "data"), "--config", str(workspace / "run.yaml"), "--out", str(out), "--jobs", "1"]) == 0
        assert {r.model for r in read_results(out / "results_wind.csv")} >= {"gbrt", "enercon"}
        assert main(["report", str(out / "results_pv.csv"), "--by-season"]) == 0
        assert "== SON ==" in capsys.readouterr().out
        assert (out / "results_pv_report.json").exists()

    def test_evaluate_failures_listed(self, workspace, capsys):
        code = main(["evaluate", str(workspace / "data" / "pv"), "--config", str(workspace / "run.yaml"),
                     "--models", "pv_physical", "--training-days", "7", "--seasons", "MAM",
                     "--out", str(workspace / "eval_fail"), "--jobs", "1"])
        assert code == 1
        err = capsys.readouterr().err
        assert "2 job(s) failed" in err and "park 1 pv_physical 7d MAM" in err

    @pytest.mark.parametrize("extra", [["--models", "prophet"], ["--training-days", "10"], ["--seasons", "winter"]])
    def test_evaluate_bad_arguments(self, workspace, extra):
        assert main(["evaluate", str(workspace / "data"), "--out", str(workspace / "bad"), *extra]) == 2

    def test_missing_bundle(self, tmp_path):
        assert main(["evaluate", str(tmp_path / "nothing")]) == 2
        assert main(["validate", str(tmp_path)]) == 2

    def test_missing_config(self, tmp_path):
        assert main(["generate", "--config", str(tmp_path / "none.yaml")]) == 2
