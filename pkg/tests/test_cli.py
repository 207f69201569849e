import json

import pytest

import gmmsi
from gmmsi import cli, presets


@pytest.fixture(scope="module")
def model_file(tmp_path_factory):
    path = tmp_path_factory.mktemp("cfg") / "model.toml"
    gmmsi.save_model(presets.shared_subspace_mixture(), path)
    return str(path)


@pytest.fixture(scope="module")
def gauss_file(tmp_path_factory):
    path = tmp_path_factory.mktemp("cfg2") / "pair.toml"
    gmmsi.save_model(presets.coupled_gaussian_pair(), path)
    return str(path)


def test_rank_table(model_file, tmp_path):
    out = tmp_path / "ranks"
    code = cli.run(["rank-table", "--config", model_file, "--out", str(out)])
    assert code == 0
    comp = (out / "components.csv").read_text().splitlines()
    assert comp[0] == "i,k,r_x1,r_x2,r_x"
    assert comp[1] == "1,1,7,6,9"
    pairs = (out / "pairs.csv").read_text().splitlines()
    assert len(pairs) == 13
    manifest = json.loads((out / "rank_table.manifest.json").read_text())
    assert manifest["command"] == "rank-table"
    assert "config_sha256" in manifest


def test_verdict_ranges(model_file, tmp_path):
    out = tmp_path / "verdicts"
    code = cli.run([
        "verdict", "--config", model_file, "--m1", "5..8", "--m2", "4",
        "--predicate", "classify_si,gmm_sufficient", "--out", str(out),
    ])
    assert code == 0
    lines = (out / "verdicts.csv").read_text().splitlines()
    assert lines[0] == "mode,m1,m2,outcome,case,binding_i,binding_k,binding_j,binding_l,d"
    assert len(lines) == 9  # 4 feature counts x 2 predicates
    assert any(row.startswith("side_info,6,4,phase_transition") for row in lines)
    assert any(row.startswith("gmm_sufficient,6,4,transition") for row in lines)


def test_diversity_both_modes(model_file, tmp_path):
    out = tmp_path / "div"
    code = cli.run([
        "diversity", "--config", model_file, "--m1", "6", "--m2", "0..4",
        "--mode", "both", "--out", str(out),
    ])
    assert code == 0
    lines = (out / "diversity.csv").read_text().splitlines()
    assert len(lines) == 11  # 5 feature pairs x 2 modes
    assert {row.split(",")[0] for row in lines[1:]} == {"side_info", "distributed"}


def test_classify_sweep_deterministic(model_file, tmp_path):
    args = [
        "classify-sweep", "--config", model_file, "--m1", "6", "--m2", "4",
        "--trials", "300", "--sigma2-max", "1e-1", "--sigma2-min", "1e-2",
        "--per-decade", "2", "--freeze-kernel", "3", "--seed", "1",
    ]
    out1, out2 = tmp_path / "a", tmp_path / "b"
    assert cli.run(args + ["--out", str(out1)]) == 0
    assert cli.run(args + ["--out", str(out2)]) == 0
    text1 = (out1 / "classify_sweep.csv").read_bytes()
    assert text1 == (out2 / "classify_sweep.csv").read_bytes()
    assert text1.decode().splitlines()[0] == "sigma2,perr_emp,perr_emp_lo,perr_emp_hi,perr_bound,mode"
    manifest = json.loads((out1 / "classify_sweep.manifest.json").read_text())
    assert manifest["params"]["trials"] == 300


def test_reconstruct_sweep(gauss_file, tmp_path):
    out = tmp_path / "rec"
    code = cli.run([
        "reconstruct-sweep", "--config", gauss_file, "--m1", "3", "--m2", "2",
        "--trials", "200", "--sigma2-max", "1e-2", "--sigma2-min", "1e-3",
        "--per-decade", "2", "--freeze-kernel", "2", "--out", str(out),
    ])
    assert code == 0
    lines = (out / "reconstruct_sweep.csv").read_text().splitlines()
    assert lines[0] == "sigma2,mse_emp,mse_cr_emp,mmse_gauss_formula,mse_lb,m1,m2"
    # single component: the analytic column is filled in
    assert lines[1].split(",")[3] != ""


def test_region_map_with_probe(gauss_file, tmp_path):
    out = tmp_path / "region"
    code = cli.run([
        "region-map", "--config", gauss_file, "--m1", "0..4", "--m2", "0..4",
        "--theorem", "gaussian,dist_gaussian", "--probe", "--probe-kernels", "5",
        "--out", str(out),
    ])
    assert code == 0
    lines = (out / "region_map.csv").read_text().splitlines()
    assert lines[0] == "m1,m2,gaussian,dist_gaussian,probe_lo,probe_hi,probe_outcome"
    assert len(lines) == 26


def test_missing_config_is_config_error(tmp_path):
    code = cli.run(["rank-table", "--config", str(tmp_path / "nope.toml"),
                    "--out", str(tmp_path)])
    assert code == 1


def test_bad_usage(tmp_path, model_file):
    assert cli.run(["rank-table"]) == 1  # --config required
    assert cli.run(["verdict", "--config", model_file, "--m1", "x..y",
                    "--m2", "1", "--out", str(tmp_path)]) == 1
    assert cli.run(["no-such-command"]) == 1


def test_bad_predicate_is_model_error(model_file, tmp_path):
    code = cli.run([
        "region-map", "--config", model_file, "--m1", "0..1", "--m2", "0..1",
        "--theorem", "bogus", "--out", str(tmp_path / "r"),
    ])
    assert code == 1


def test_help_exits_zero():
    with pytest.raises(SystemExit) as exc:
        cli.run(["--help"])
    assert exc.value.code == 0


def test_version_exits_zero(capsys):
    with pytest.raises(SystemExit) as exc:
        cli.run(["--version"])
    assert exc.value.code == 0
    assert gmmsi.__version__ in capsys.readouterr().out
