import json

import pytest

from conftest import FIXTURES
from ledgerml.cli import main


def run_cli(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


@pytest.fixture
def genesis_file(tmp_path):
    path = tmp_path / "genesis.json"
    path.write_text(
        json.dumps(
            {
                "accounts": [
                    {"id": 1, "coins": "1000.0"},
                    {"id": 2, "coins": "500.0"},
                ],
                "assets": [{"assetId": "GOLD", "issuance": "10.0", "holder": 2}],
            }
        )
    )
    return path


@pytest.fixture
def data_dir(tmp_path, genesis_file, capsys):
    d = tmp_path / "data"
    code, _, err = run_cli(
        capsys, "init", "--genesis", str(genesis_file), "--data-dir", str(d)
    )
    assert code == 0, err
    return d


def test_init_ok(tmp_path, genesis_file, capsys):
    d = tmp_path / "node0"
    code, out, _ = run_cli(
        capsys, "--json", "init", "--genesis", str(genesis_file), "--data-dir", str(d)
    )
    assert code == 0
    payload = json.loads(out)
    assert payload["accounts"] == 2
    assert (d / "chain.blocklog").exists()
    assert (d / "genesis.json").exists()


def test_init_malformed_genesis(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{ nope")
    code, _, err = run_cli(
        capsys, "init", "--genesis", str(bad), "--data-dir", str(tmp_path / "d")
    )
    assert code == 1
    assert "error" in err


def test_init_refuses_nonempty(tmp_path, genesis_file, capsys):
    d = tmp_path / "d"
    d.mkdir()
    (d / "junk.txt").write_text("x")
    code, _, err = run_cli(
        capsys, "init", "--genesis", str(genesis_file), "--data-dir", str(d)
    )
    assert code == 1
    assert "refusing" in err


def test_usage_error_is_exit_2(capsys):
    with pytest.raises(SystemExit) as e:
        main(["bogus-command"])
    assert e.value.code == 2


def test_deploy_and_query(data_dir, capsys):
    code, out, err = run_cli(
        capsys,
        "--json",
        "deploy",
        "--source", str(FIXTURES / "contracts" / "score_demo.qs"),
        "--sender", "1",
        "--data-dir", str(data_dir),
    )
    assert code == 0, err
    payload = json.loads(out)
    assert payload["contractId"] == 3  # two genesis accounts, then the contract

    code, out, _ = run_cli(
        capsys, "--json", "query", "--account", "3", "--data-dir", str(data_dir)
    )
    assert code == 0
    acct = json.loads(out)
    assert acct["contract"] is True
    assert acct["coins"] == "0.0"
    assert acct["seq"] == 0


def test_deploy_syntax_error(data_dir, tmp_path, capsys):
    bad = tmp_path / "bad.qs"
    bad.write_text("on receive(a) {")
    code, _, err = run_cli(
        capsys, "deploy", "--source", str(bad), "--sender", "1", "--data-dir", str(data_dir)
    )
    assert code == 1
    assert "parse" in err


def test_deploy_unknown_sender(data_dir, capsys):
    code, _, err = run_cli(
        capsys,
        "deploy",
        "--source", str(FIXTURES / "contracts" / "score_demo.qs"),
        "--sender", "42",
        "--data-dir", str(data_dir),
    )
    assert code == 1
    assert "unknown sender" in err


def test_send_transfer_and_receipt(data_dir, capsys):
    code, out, _ = run_cli(
        capsys,
        "--json",
        "send",
        "--to", "2", "--coins", "10.0", "--sender", "1",
        "--data-dir", str(data_dir),
    )
    assert code == 0
    receipt = json.loads(out)["receipt"]
    assert receipt["status"] == "committed"

    code, out, _ = run_cli(
        capsys, "--json", "query", "--account", "2", "--data-dir", str(data_dir)
    )
    acct = json.loads(out)
    assert acct["coins"] == "510.0"
    assert acct["assets"] == {"GOLD": "10.0"}


def test_send_insufficient_funds(data_dir, capsys):
    code, _, err = run_cli(
        capsys,
        "send",
        "--to", "2", "--coins", "99999.0", "--sender", "1",
        "--data-dir", str(data_dir),
    )
    assert code == 1
    assert "InsufficientFunds" in err


def test_send_to_scoring_contract_logs_prediction(data_dir, capsys):
    code, out, err = run_cli(
        capsys,
        "--json",
        "deploy",
        "--source", str(FIXTURES / "contracts" / "score_demo.qs"),
        "--sender", "1",
        "--data-dir", str(data_dir),
    )
    assert code == 0, err
    cid = json.loads(out)["contractId"]
    code, out, _ = run_cli(
        capsys,
        "--json",
        "send",
        "--to", str(cid), "--coins", "1.0", "--sender", "2",
        "--data-dir", str(data_dir),
    )
    assert code == 0
    receipt = json.loads(out)["receipt"]
    assert receipt["status"] == "committed"
    demo = json.loads((FIXTURES / "oracle" / "demo_vector.json").read_text())
    assert receipt["logs"][-1] == repr(float(demo["prediction"]))


def test_query_missing_account(data_dir, capsys):
    code, _, err = run_cli(
        capsys, "query", "--account", "9", "--data-dir", str(data_dir)
    )
    assert code == 1


def test_query_contract_storage_keys_sorted(data_dir, tmp_path, capsys):
    src = tmp_path / "kv.qs"
    src.write_text(
        'on receive(s, a, c, x, d) { put("zz", 1); put("aa", 2); put("mm", 3); }'
    )
    code, out, _ = run_cli(
        capsys, "--json", "deploy", "--source", str(src), "--sender", "1",
        "--data-dir", str(data_dir),
    )
    cid = json.loads(out)["contractId"]
    run_cli(capsys, "send", "--to", str(cid), "--sender", "2", "--data-dir", str(data_dir))
    code, out, _ = run_cli(
        capsys, "--json", "query", "--account", str(cid), "--data-dir", str(data_dir)
    )
    assert json.loads(out)["storageKeys"] == ["aa", "mm", "zz"]


def test_failed_send_leaves_data_dir_untouched(data_dir, capsys):
    before = (data_dir / "chain.blocklog").read_bytes()
    code, _, _ = run_cli(
        capsys, "send", "--to", "2", "--coins", "99999.0", "--sender", "1",
        "--data-dir", str(data_dir),
    )
    assert code == 1
    assert (data_dir / "chain.blocklog").read_bytes() == before


def test_env_var_data_dir(tmp_path, genesis_file, capsys, monkeypatch):
    d = tmp_path / "envdata"
    monkeypatch.setenv("LEDGERML_DATA_DIR", str(d))
    code, _, _ = run_cli(capsys, "init", "--genesis", str(genesis_file))
    assert code == 0
    code, out, _ = run_cli(capsys, "--json", "query", "--account", "1")
    assert code == 0
    assert json.loads(out)["coins"] == "1000.0"


def test_sim_command(tmp_path, capsys):
    out_path = tmp_path / "report.json"
    code, _, err = run_cli(
        capsys,
        "sim",
        "--config", str(FIXTURES / "sim" / "demo4.json"),
        "--out", str(out_path),
    )
    assert code == 0, err
    report = json.loads(out_path.read_text())
    assert report["converged"] is True


def test_sim_divergence_exit_1(tmp_path, capsys):
    cfg = json.loads((FIXTURES / "sim" / "demo4.json").read_text())
    cfg["fault"] = {"node": 2, "height": 2}
    # dataFile is resolved relative to the config file
    path = tmp_path / "bad.json"
    cfg["transactions"] = [t for t in cfg["transactions"] if "dataFile" not in t]
    path.write_text(json.dumps(cfg))
    code, _, err = run_cli(capsys, "sim", "--config", str(path))
    assert code == 1
    assert "divergence" in err


def test_sim_bad_config_exit_1(tmp_path, capsys):
    path = tmp_path / "cfg.json"
    path.write_text('{"nodeCount": 0}')
    code, _, err = run_cli(capsys, "sim", "--config", str(path))
    assert code == 1


def test_score_offline_identity(capsys):
    code, out, _ = run_cli(
        capsys,
        "--json",
        "score-offline",
        "--model", str(FIXTURES / "models" / "identity.json"),
        "--input", "3.5",
    )
    assert code == 0
    assert json.loads(out)["prediction"] == "3.5"


def test_score_offline_demo_matches_oracle(capsys):
    demo = json.loads((FIXTURES / "oracle" / "demo_vector.json").read_text())
    code, out, _ = run_cli(
        capsys,
        "--json",
        "score-offline",
        "--model", str(FIXTURES / "models" / "mlp_4_5_3_seed7.json"),
        "--input=" + ",".join(repr(x) for x in demo["input"]),
        "--hex",
    )
    assert code == 0
    payload = json.loads(out)
    assert payload["predictionHex"] == demo["predictionHex"]


def test_score_offline_wrong_arity(capsys):
    code, _, err = run_cli(
        capsys,
        "score-offline",
        "--model", str(FIXTURES / "models" / "mlp_4_5_3_seed7.json"),
        "--input", "1.0,2.0,3.0",
    )
    assert code == 1
    assert "scoring failed" in err


def test_score_offline_malformed_model(capsys):
    code, _, err = run_cli(
        capsys,
        "score-offline",
        "--model", str(FIXTURES / "models" / "malformed_json.json"),
        "--input", "1.0",
    )
    assert code == 1
