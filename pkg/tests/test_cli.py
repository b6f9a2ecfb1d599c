import json
import subprocess
import sys

import pytest

import oracles
from gsp import datasets
from gsp.cli import main


@pytest.fixture(scope="module")
def files(tmp_path_factory):
    d = tmp_path_factory.mktemp("examples")
    datasets.export_examples(d)
    return d


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def run_json(capsys, *argv):
    code, out, err = run(capsys, *argv, "--json")
    return code, json.loads(out), err


def write(path, data):
    path.write_text(json.dumps(data))
    return path


class TestEval:
    def test_camera_text_table(self, capsys, files):
        code, out, _ = run(capsys, "eval", "--model", files / "cameras_model.json",
                           "--assortments", files / "cameras_dataset.json")
        assert code == 0
        lines = out.splitlines()
        assert lines[0].split() == ["assortment", "1", "2", "3", "none"]
        assert lines[1].split() == ["{1,2}", "50.00%", "50.00%", "-", "0.00%"]
        assert lines[2].split() == ["{1,2,3}", "22.00%", "57.00%", "21.00%", "0.00%"]

    def test_all_subsets_economist(self, capsys, files):
        code, table, _ = run_json(capsys, "eval", "--model", files / "economist_model.json",
                                  "--all-subsets", 3)
        assert code == 0
        assert len(table["rows"]) == 7
        model = datasets.read_model(files / "economist_model.json")
        atoms = [(t.sequence, t.position, w) for t, w in model.atoms]
        for r in table["rows"]:
            for x, p in r["shares"].items():
                assert p == pytest.approx(oracles.prob(atoms, int(x), set(r["assortment"])), abs=1e-12)

    def test_assortment_list_file(self, capsys, files, tmp_path):
        f = write(tmp_path / "a.json", [[3, 1], [2]])
        code, table, _ = run_json(capsys, "eval", "--model", files / "cameras_model.json",
                                  "--assortments", f)
        assert code == 0
        assert [r["assortment"] for r in table["rows"]] == [[1, 3], [2]]

    def test_out_matches_stdout(self, capsys, files, tmp_path):
        out_file = tmp_path / "t.json"
        code, out, _ = run(capsys, "eval", "--model", files / "cameras_model.json", "--all-subsets", 3,
                           "--json", "--out", out_file)
        assert code == 0
        assert out_file.read_text() == out

    def test_malformed_model_names_atom(self, capsys, tmp_path):
        bad = write(tmp_path / "m.json", {"universe_size": 3, "atoms": [
            {"sequence": [1, 2], "position": 1, "weight": 0.5},
            {"sequence": [2, 2], "position": 1, "weight": 0.5}]})
        code, out, err = run(capsys, "eval", "--model", bad, "--all-subsets", 3)
        assert code == 2
        assert "atoms[1]" in err and out == ""

    def test_missing_file(self, capsys, tmp_path):
        code, _, err = run(capsys, "eval", "--model", tmp_path / "none.json", "--all-subsets", 3)
        assert code == 2 and "error" in err

    def test_universe_mismatch(self, capsys, files):
        code, _, err = run(capsys, "eval", "--model", files / "cameras_model.json", "--all-subsets", 4)
        assert code == 2


class TestFit:
    def test_cameras_exact(self, capsys, files):
        code, res, _ = run_json(capsys, "fit", "--data", files / "cameras_dataset.json",
                                "--max-atoms", 4, "--require-exact")
        assert code == 0
        assert res["diagnostics"]["residual"] <= 1e-7
        assert len(res["atoms"]) <= 4

    def test_text_report(self, capsys, files):
        code, out, _ = run(capsys, "fit", "--data", files / "herne_dataset.json", "--max-atoms", 3)
        assert code == 0
        for key in ("residual", "support size", "irrational mass"):
            assert key in out

    def test_rational_only_positive_residual(self, capsys, files):
        code, res, _ = run_json(capsys, "fit", "--data", files / "cameras_dataset.json",
                                "--max-atoms", 30, "--irrational-penalty", "1e9")
        assert code == 0
        assert res["diagnostics"]["residual"] > 0.01
        assert res["diagnostics"]["irrational_mass"] == 0

    def test_quality_gate(self, capsys, files):
        code, out, err = run(capsys, "fit", "--data", files / "cameras_dataset.json",
                             "--max-atoms", 30, "--irrational-penalty", "1e9", "--require-exact")
        assert code == 3
        assert "exceeds tolerance" in err and "residual" in out

    def test_zero_budget(self, capsys, files):
        code, _, _ = run(capsys, "fit", "--data", files / "cameras_dataset.json", "--max-atoms", 0)
        assert code == 2

    def test_universe_cap_guidance(self, capsys, tmp_path):
        data = write(tmp_path / "d.json", {"universe_size": 7, "rows": [
            {"assortment": [1, 7], "shares": {"1": 0.5, "7": 0.5}}]})
        code, _, err = run(capsys, "fit", "--data", data, "--max-atoms", 3)
        assert code == 2
        assert "GSP_UNIVERSE_CAP" in err and "--cap-seq-len" in err

    def test_cap_seq_len(self, capsys, tmp_path):
        data = write(tmp_path / "d.json", {"universe_size": 7, "rows": [
            {"assortment": [1, 7], "shares": {"1": 0.5, "7": 0.5}}]})
        code, res, _ = run_json(capsys, "fit", "--data", data, "--max-atoms", 3, "--cap-seq-len", 2)
        assert code == 0
        assert res["diagnostics"]["residual"] <= 1e-9

    def test_env_cap(self, capsys, tmp_path, monkeypatch):
        data = write(tmp_path / "d.json", {"universe_size": 4, "rows": [
            {"assortment": [1, 2], "shares": {"1": 0.5, "2": 0.5}}]})
        monkeypatch.setenv("GSP_UNIVERSE_CAP", "3")
        code, _, err = run(capsys, "fit", "--data", data, "--max-atoms", 3)
        assert code == 2
        monkeypatch.setenv("GSP_UNIVERSE_CAP", "4")
        code, _, _ = run(capsys, "fit", "--data", data, "--max-atoms", 3)
        assert code == 0
        monkeypatch.setenv("GSP_UNIVERSE_CAP", "abc")
        code, _, err = run(capsys, "fit", "--data", data, "--max-atoms", 3)
        assert code == 2 and "GSP_UNIVERSE_CAP" in err


class TestCheck:
    def test_counterexample_membership(self, capsys, files):
        code, res, _ = run_json(capsys, "check", "--table", files / "counterexample_table.json",
                                "--gsp-membership")
        assert code == 0
        m = res["gsp_membership"]
        assert m["verdict"] == "not_in_gsp"
        assert len(m["certificate"]) == len(m["row_labels"])

    def test_counterexample_text_prints_certificate(self, capsys, files):
        code, out, _ = run(capsys, "check", "--table", files / "counterexample_table.json",
                           "--gsp-membership")
        assert code == 0
        assert "not_in_gsp" in out and "y.b = -1" in out

    def test_separation_instance_ram(self, capsys, files):
        code, res, _ = run_json(capsys, "check", "--table", files / "gsp_not_ram_table.json", "--ram")
        assert code == 0
        assert res["ram"]["verdict"] is False
        edges = {tuple(e) for e in res["ram"]["edges"]}
        assert {(1, 2), (2, 3), (3, 1)} <= edges
        cyc = res["ram"]["cycle"]
        assert all((a, b) in edges for a, b in zip(cyc, cyc[1:] + cyc[:1]))

    def test_mcfadden_regular(self, capsys, files):
        code, res, _ = run_json(capsys, "check", "--table", files / "mcfadden_table.json", "--regularity")
        assert code == 0
        assert res == {"regularity": {"regular": True, "violations": []}}

    def test_incomplete_undetermined(self, capsys, files):
        code, res, _ = run_json(capsys, "check", "--table", files / "cameras_dataset.json",
                                "--ram", "--gsp-membership")
        assert code == 0
        assert res["ram"]["verdict"] == "undetermined"
        assert res["gsp_membership"]["verdict"] == "undetermined"

    def test_all_checks_by_default(self, capsys, files):
        code, res, _ = run_json(capsys, "check", "--table", files / "cameras_dataset.json")
        assert code == 0
        assert set(res) == {"regularity", "monotone", "ram", "gsp_membership"}
        assert res["regularity"]["violations"][0]["alternative"] == 2


class TestAssort:
    def test_worst_case_both(self, capsys, files):
        code, res, _ = run_json(capsys, "assort", "--model", files / "worst_case_model.json",
                                "--revenues", files / "worst_case_revenues.json", "--method", "both")
        assert code == 0
        assert res["ratio"] == 0.5 and res["bound"] == 0.5
        assert res["optimal"]["assortment"] == [1, 3]

    def test_cameras_revenues(self, capsys, files, tmp_path):
        rev = write(tmp_path / "r.json", {"1": 170, "2": 240, "3": 470})
        code, res, _ = run_json(capsys, "assort", "--model", files / "cameras_model.json",
                                "--revenues", rev)
        assert code == 0
        model = datasets.read_model(files / "cameras_model.json")
        atoms = [(t.sequence, t.position, w) for t, w in model.atoms]
        r = {1: 170, 2: 240, 3: 470}
        assert res["optimal"]["expected_revenue"] == pytest.approx(oracles.best_revenue(atoms, r, 3))
        nested = [(1, 2, 3), (2, 3), (3,)]
        heur = max(sum(oracles.prob(atoms, i, S) * r[i] for i in S) for S in nested)
        assert res["heuristic"]["expected_revenue"] == pytest.approx(heur)

    @pytest.mark.parametrize("method", ["exact", "revenue-ordered"])
    def test_single_method(self, capsys, files, method):
        code, res, _ = run_json(capsys, "assort", "--model", files / "worst_case_model.json",
                                "--revenues", files / "worst_case_revenues.json", "--method", method)
        assert code == 0 and res["method"] == method

    def test_missing_revenue(self, capsys, files, tmp_path):
        rev = write(tmp_path / "r.json", {"1": 1, "2": 1})
        code, _, err = run(capsys, "assort", "--model", files / "worst_case_model.json", "--revenues", rev)
        assert code == 2 and "3" in err

    def test_cap(self, capsys, files):
        code, _, _ = run(capsys, "assort", "--model", files / "worst_case_model.json",
                         "--revenues", files / "worst_case_revenues.json", "--cap", 2, "--method", "exact")
        assert code == 2


class TestExamples:
    def test_list(self, capsys):
        code, out, _ = run(capsys, "examples", "--list")
        assert code == 0
        assert out.split() == list(datasets.EXAMPLE_NAMES)

    def test_verify(self, capsys):
        code, res, _ = run_json(capsys, "examples", "--verify")
        assert code == 0
        assert len(res) == 6 and all(v["passed"] for v in res.values())

    def test_export_round_trip(self, capsys, tmp_path):
        code, res, _ = run_json(capsys, "examples", "--export", tmp_path)
        assert code == 0
        for name in datasets.EXAMPLE_NAMES:
            ex = datasets.load_example(name)
            assert datasets.read_dataset(tmp_path / f"{name}_dataset.json") == ex.dataset


class TestEntryPoint:
    def test_module_invocation(self):
        proc = subprocess.run([sys.executable, "-m", "gsp", "examples", "--list"],
                              capture_output=True, text=True)
        assert proc.returncode == 0
        assert "counterexample" in proc.stdout

    def test_no_subcommand(self, capsys):
        code, _, err = run(capsys)
        assert code == 2
