import csv
import json

import pytest

from crossfree import cli
from crossfree.gadgets import GadgetParams, two_local_gadget
from crossfree.ising import IsingModel, Term, load_model, save_model


@pytest.fixture
def h0_file(tmp_path):
    path = tmp_path / "h0.json"
    save_model(IsingModel.from_fields(1, h={0: -1}), path)
    return path


def run(argv, capsys):
    code = cli.main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def test_transform_single_field(h0_file, tmp_path, capsys):
    out = tmp_path / "t.json"
    code, text, _ = run(["transform", h0_file, "--a", 1, "--b", 1, "--out", out], capsys)
    assert code == 0
    model = load_model(out)
    assert model.num_qubits == 2
    report = json.loads((tmp_path / "t.report.json").read_text())
    kinds = [p["kind"] for p in report["term_provenance"]]
    assert kinds.count("gadget") == 3 and kinds.count("original") == 1
    assert "qubits: 1 -> 2" in text


def test_transform_counts_three_and_two_local(tmp_path, capsys):
    m = IsingModel(3, (Term((0, 1), 1), Term((1, 2), -1), Term((0,), 1)))
    path = tmp_path / "m.json"
    save_model(m, path)
    run(["transform", path, "--a", 2, "--b", 1, "--no-ferro-pairs", "--out", tmp_path / "t3.json"], capsys)
    assert load_model(tmp_path / "t3.json").num_qubits == 3 + 2 * 3
    code, _, _ = run(["transform", path, "--a", 2, "--b", 1, "--locality", 2, "--no-ferro-pairs", "--out", tmp_path / "t2.json"], capsys)
    assert code == 0
    t2 = load_model(tmp_path / "t2.json")
    assert t2.num_qubits == 3 + 2 * 1 + 2 * 2 * 2
    assert max(len(t.support) for t in t2.terms) == 2


def test_parse_error_reports_line_and_column(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{"num_qubits": 1,\n "terms": [}\n')
    code, _, err = run(["transform", bad], capsys)
    assert code == 1
    assert f"{bad}:2:" in err


def test_invariant_error_names_term(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"num_qubits": 2, "terms": [{"spins": [0], "coeff": 1}, {"spins": [0, 5], "coeff": 1}]}))
    code, _, err = run(["local-minima", bad], capsys)
    assert code == 1
    assert "term 1" in err


def test_usage_errors_exit_one(capsys):
    with pytest.raises(SystemExit) as info:
        cli.main(["spectrum"])
    assert info.value.code == 1
    with pytest.raises(SystemExit) as info:
        cli.main(["nonsense"])
    assert info.value.code == 1


def test_missing_file(tmp_path, capsys):
    code, _, _ = run(["local-minima", tmp_path / "nope.json"], capsys)
    assert code == 1


def test_spectrum_single_qubit(h0_file, tmp_path, capsys):
    stem = tmp_path / "out"
    code, _, _ = run(["spectrum", h0_file, "--lambda-max", 3, "--points", 20, "--k", 2, "--out", stem], capsys)
    assert code == 0
    with open(f"{stem}.spectrum.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert list(rows[0]) == ["lambda", "e0", "e1", "gap", "excluded_gap"]
    for r in rows:
        lam = float(r["lambda"])
        assert float(r["gap"]) == pytest.approx(2 * (1 + lam**2) ** 0.5, abs=1e-8)
    summary = json.loads((tmp_path / "out.summary.json").read_text())
    assert summary["min_gap"] == pytest.approx(2.0)
    assert summary["lambda_star"] == 0.0


def test_spectrum_solver_failure_exit_two(h0_file, tmp_path, capsys, monkeypatch):
    from crossfree.spectrum import EigensolverError

    def boom(*args, **kwargs):
        raise EigensolverError("no convergence", lam=0.5)

    monkeypatch.setattr(cli, "sweep", boom)
    code, _, err = run(["spectrum", h0_file, "--out", tmp_path / "x"], capsys)
    assert code == 2
    assert "lambda=0.5" in err


def test_perturb_profile(h0_file, tmp_path, capsys):
    out = tmp_path / "p.json"
    code, text, _ = run(["perturb", h0_file, "--config", "1", "--a", 1, "--b", 1, "--out", out], capsys)
    assert code == 0
    data = json.loads(out.read_text())
    assert (data["satisfied"], data["E0"], data["E1"], data["census"]) == (1, "-1", "-1", 1)
    assert data["convergence_diagnostic"]["radius"] == 4.0
    assert json.loads(text) == data


def test_perturb_rejects_bad_config(h0_file, capsys):
    code, _, _ = run(["perturb", h0_file, "--config", "1x"], capsys)
    assert code == 1
    code, _, _ = run(["perturb", h0_file, "--config", "11"], capsys)
    assert code == 1


def test_perturb_inconsistent_census_exit_three(tmp_path, capsys):
    path = tmp_path / "free.json"
    save_model(IsingModel.from_fields(2, h={0: -1}), path)
    code, _, err = run(["perturb", path, "--config", "11", "--a", 1, "--b", 1, "--no-ferro-pairs"], capsys)
    assert code == 3
    assert "census" in err


def test_verify_gadgets_pass(capsys):
    code, text, _ = run(["verify-gadgets"], capsys)
    assert code == 0
    assert "32/32 table rows match" in text
    assert "FAIL" not in text


def test_verify_gadgets_fail_on_mutation(capsys, monkeypatch):
    import crossfree.gadgets as gadgets

    def mutated(sign, i, j, k, s, b):
        terms, const = two_local_gadget(sign, i, j, k, s, b)
        return terms, const + b

    real = gadgets.verify_gadget_tables
    monkeypatch.setattr(cli, "verify_gadget_tables", lambda: real(emit=mutated))
    code, text, _ = run(["verify-gadgets"], capsys)
    assert code == 3
    assert "FAIL" in text and " row " in text


def test_local_minima_demo_base(tmp_path, capsys):
    from crossfree.demo import load_demo

    path = tmp_path / "base.json"
    save_model(load_demo().base, path)
    code, text, _ = run(["local-minima", path], capsys)
    assert code == 0
    data = json.loads(text)
    assert data["ground_states"] == ["111"]
    assert {d["state"] for d in data["local_minima"]} == {"111", "000"}


def test_local_minima_limit(tmp_path, capsys):
    path = tmp_path / "m.json"
    save_model(IsingModel(5), path)
    code, _, err = run(["local-minima", path, "--exhaustive-limit", 3], capsys)
    assert code == 1
    assert "limit of 3" in err


def test_random_model_is_deterministic(capsys):
    _, a, _ = run(["random-model", "--n", 4, "--m", 5, "--seed", 3], capsys)
    _, b, _ = run(["random-model", "--n", 4, "--m", 5, "--seed", 3], capsys)
    assert a == b
    assert json.loads(a)["num_qubits"] == 4


def test_default_params_capped():
    class Args:
        a = None
        b = None
        cap = 4
        locality = "3"

    assert cli._params(Args, 5) == GadgetParams(4, 4)


@pytest.mark.slow
def test_demo_fig3(tmp_path, capsys):
    code, text, _ = run(["demo-fig3", "--out", tmp_path], capsys)
    assert code == 0
    comp = json.loads((tmp_path / "comparison.json").read_text())
    assert comp["biased_gap_below_tenth_of_base"] and comp["repaired_gap_above_biased"]
    for name in ("base", "biased", "repaired"):
        assert (tmp_path / f"{name}.spectrum.csv").exists()
