import csv
import json

from fluxtube.cli import main, round_sig, to_jsonable


def _write(tmp_path, text):
    p = tmp_path / "cfg.yaml"
    p.write_text(text)
    return str(p)


def test_round_sig():
    assert round_sig(0.123456789012345678) == 0.123456789012
    assert to_jsonable({"a": float("nan"), "b": (1, 2.5)}) == {"a": None, "b": [1, 2.5]}


def test_list_models(capsys):
    assert main(["list-models"]) == 0
    out = capsys.readouterr().out
    assert "p_ip" in out and "km_double" in out


def test_schema(capsys):
    assert main(["schema"]) == 0
    assert "properties" in json.loads(capsys.readouterr().out)


def test_bad_config_exit_2(tmp_path):
    cfg = _write(tmp_path, "kind: index\nunknown_key: 1\n")
    assert main(["run", "--config", cfg, "--out", str(tmp_path / "o"), "--quiet"]) == 2


def test_bad_model_param_exit_2(tmp_path):
    cfg = _write(tmp_path, "kind: index\nmodel: {name: p_ip, params: {nu: 1}}\nlattice: {nx: 12, ny: 12}\n")
    out = tmp_path / "o"
    assert main(["run", "--config", cfg, "--out", str(out), "--quiet"]) == 2
    assert json.loads((out / "result.json").read_text())["exit_code"] == 2


def test_classify_deterministic(tmp_path):
    cfg = _write(tmp_path, "kind: classify\nmodel: {name: d_id}\nlattice: {nx: 14, ny: 14}\n")
    texts = []
    for k in range(2):
        out = tmp_path / f"o{k}"
        assert main(["run", "--config", cfg, "--out", str(out), "--quiet"]) == 0
        texts.append((out / "result.json").read_text())
        assert (out / "run.log").exists() and (out / "config.yaml").exists()
    assert texts[0] == texts[1]
    res = json.loads(texts[0])
    assert res["caz"] == "C" and res["invariant"] % 2 == 0


def test_spectral_flow_writes_curves(tmp_path):
    cfg = _write(tmp_path, "kind: spectral-flow\nlattice: {nx: 14, ny: 14}\nalpha: {points: 11}\nradius: 4\n")
    out = tmp_path / "o"
    assert main(["run", "--config", cfg, "--out", str(out), "--quiet"]) == 0
    res = json.loads((out / "result.json").read_text())
    assert res["localized_flow"] == 1
    with open(out / "curves.csv") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["seed", "alpha", "index", "energy", "localization_weight"]
    assert len(rows) > 11


def test_index_with_seeds(tmp_path):
    cfg = _write(tmp_path, "kind: index\nlattice: {nx: 16, ny: 16}\ndisorder: {w: 0.4}\n")
    out = tmp_path / "o"
    assert main(["run", "--config", cfg, "--out", str(out), "--seeds", "2", "--quiet"]) == 0
    res = json.loads((out / "result.json").read_text())
    assert [r["seed"] for r in res["runs"]] == [0, 1]
    assert {r["ind_pfp"] for r in res["runs"]} == {1}


def test_bulk_edge_run(tmp_path):
    cfg = _write(tmp_path, "kind: bulk-edge\nstrip: {width: 24, height: 12}\n")
    out = tmp_path / "o"
    assert main(["run", "--config", cfg, "--out", str(out), "--quiet"]) == 0
    res = json.loads((out / "result.json").read_text())
    assert abs(res["two_pi_current"] + 1) < 0.05
    assert (out / "current_map.csv").exists()


def test_sweep_without_section_exit_2(tmp_path):
    cfg = _write(tmp_path, "kind: index\n")
    assert main(["sweep", "--config", cfg, "--out", str(tmp_path / "o"), "--quiet"]) == 2


def test_sweep_records_rows(tmp_path):
    cfg = _write(tmp_path, "kind: index\nmodel: {name: wilson_dirac}\nlattice: {nx: 16, ny: 16}\n"
                           "sweep: {parameter: params.mu, values: [-1, 2]}\n")
    out = tmp_path / "o"
    assert main(["sweep", "--config", cfg, "--out", str(out), "--quiet"]) == 0
    with open(out / "sweep.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert [int(r["chern_rounded"]) for r in rows] == [0, -1]
