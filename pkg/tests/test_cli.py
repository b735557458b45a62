import json
import subprocess
import sys

import pytest

import countsel as cs
from countsel.cli import main


def run_cli(*argv):
    return main(list(argv))


@pytest.fixture()
def model_a_csv(tmp_path):
    path = tmp_path / "a.csv"
    code = run_cli(
        "simulate", "--family", "poisson", "--ingarch", "2,0",
        "--theta", "0.5,0.3,0.25", "--n", "600", "--seed", "7", "-o", str(path),
    )
    assert code == 0
    return path


class TestSimulateCommand:
    def test_writes_requested_rows(self, model_a_csv):
        lines = model_a_csv.read_text().strip().split("\n")
        assert len(lines) == 600
        assert all(int(v) >= 0 for v in lines)

    def test_deterministic_output(self, tmp_path):
        paths = [tmp_path / "s1.csv", tmp_path / "s2.csv"]
        for p in paths:
            assert run_cli(
                "simulate", "--family", "poisson", "--ingarch", "1,1",
                "--theta", "1,0.3,0.45", "--n", "200", "--seed", "3", "-o", str(p),
            ) == 0
        assert paths[0].read_bytes() == paths[1].read_bytes()

    def test_zero_length_is_usage_error(self, tmp_path):
        with pytest.raises(SystemExit) as err:
            run_cli("simulate", "--family", "poisson", "--ingarch", "1,0",
                    "--theta", "0.5,0.3", "--n", "0", "-o", str(tmp_path / "x.csv"))
        assert err.value.code == 2

    def test_invalid_theta_length_is_usage_error(self, tmp_path):
        with pytest.raises(SystemExit) as err:
            run_cli("simulate", "--family", "poisson", "--ingarch", "1,0",
                    "--theta", "0.5", "--n", "10", "-o", str(tmp_path / "x.csv"))
        assert err.value.code == 2

    def test_nonstationary_theta_is_runtime_error(self, tmp_path):
        code = run_cli("simulate", "--family", "poisson", "--ingarch", "1,0",
                       "--theta", "0.5,1.2", "--n", "10", "-o", str(tmp_path / "x.csv"))
        assert code == 1


class TestFitCommand:
    def test_fit_json_payload(self, model_a_csv, tmp_path):
        out = tmp_path / "fit.json"
        code = run_cli("fit", "--input", str(model_a_csv), "--family", "poisson",
                       "--ingarch", "2,0", "-o", str(out))
        assert code == 0
        doc = json.loads(out.read_text())
        assert set(doc) == {"theta", "loglik", "converged", "grad_norm", "std_errors"}
        assert len(doc["theta"]) == 3

    def test_intercept_only_fit_is_sample_mean(self, model_a_csv, tmp_path):
        out = tmp_path / "fit.json"
        code = run_cli("fit", "--input", str(model_a_csv), "--family", "poisson",
                       "--ingarch", "0,0", "-o", str(out))
        assert code == 0
        doc = json.loads(out.read_text())
        y = cs.read_csv(model_a_csv)
        assert doc["theta"][0] == pytest.approx(y.mean(), abs=1e-6)

    def test_parse_error_exits_one(self, tmp_path, capsys):
        bad = tmp_path / "bad.csv"
        bad.write_text("1\n2\n-1\n4\n")
        code = run_cli("fit", "--input", str(bad), "--family", "poisson", "--ingarch", "1,0")
        assert code == 1
        assert "line 3" in capsys.readouterr().err

    def test_deterministic_payload(self, model_a_csv, tmp_path):
        outs = [tmp_path / "f1.json", tmp_path / "f2.json"]
        for out in outs:
            assert run_cli("fit", "--input", str(model_a_csv), "--family", "poisson",
                           "--ingarch", "1,1", "-o", str(out)) == 0
        assert outs[0].read_bytes() == outs[1].read_bytes()


class TestSelectCommand:
    def test_intercept_only_collection(self, model_a_csv, tmp_path):
        out = tmp_path / "sel.json"
        code = run_cli("select", "--input", str(model_a_csv), "--family", "poisson",
                       "--pmax", "0", "--qmax", "0", "--penalty", "logn", "-o", str(out))
        assert code == 0
        doc = json.loads(out.read_text())
        assert doc["chosen"] == {"family": "poisson", "form": "ingarch", "p": 0, "q": 0}

    def test_two_penalties_share_fits(self, model_a_csv, tmp_path):
        out = tmp_path / "sel.json"
        code = run_cli("select", "--input", str(model_a_csv), "--family", "poisson",
                       "--pmax", "2", "--qmax", "1",
                       "--penalty", "logn", "--penalty", "pow:0.3333", "-o", str(out))
        assert code == 0
        doc = json.loads(out.read_text())
        assert len(doc["selections"]) == 2
        ll_a = [m["loglik"] for m in doc["selections"][0]["models"]]
        ll_b = [m["loglik"] for m in doc["selections"][1]["models"]]
        assert ll_a == ll_b

    def test_table_format(self, model_a_csv, tmp_path):
        out = tmp_path / "sel.txt"
        code = run_cli("select", "--input", str(model_a_csv), "--family", "poisson",
                       "--pmax", "1", "--qmax", "0", "--penalty", "logn",
                       "--format", "table", "-o", str(out))
        assert code == 0
        assert "criterion" in out.read_text()

    def test_knot_collection_needs_nb_family(self, model_a_csv):
        with pytest.raises(SystemExit) as err:
            run_cli("select", "--input", str(model_a_csv), "--family", "poisson",
                    "--kmax", "1", "--knot-candidates", "1,2")
        assert err.value.code == 2

    def test_deterministic_payload(self, model_a_csv, tmp_path):
        outs = [tmp_path / "s1.json", tmp_path / "s2.json"]
        for out in outs:
            assert run_cli("select", "--input", str(model_a_csv), "--family", "poisson",
                           "--pmax", "1", "--qmax", "1", "--penalty", "logn",
                           "-o", str(out)) == 0
        assert outs[0].read_bytes() == outs[1].read_bytes()


class TestMcCommand:
    def test_degenerate_single_replication(self, tmp_path):
        out = tmp_path / "mc.json"
        code = run_cli("mc", "--preset", "model-a", "--replications", "1",
                       "--sizes", "300", "--penalty", "logn", "-o", str(out))
        assert code == 0
        doc = json.loads(out.read_text())
        counts = doc["cells"]["log n|300"]["counts"]
        assert sum(counts) == 1

    def test_config_file(self, tmp_path):
        conf = tmp_path / "exp.conf"
        conf.write_text("preset=model-a\nsizes=300\nreplications=2\npenalties=logn\nseed=10\n")
        out = tmp_path / "mc.json"
        assert run_cli("mc", "--config", str(conf), "-o", str(out)) == 0
        doc = json.loads(out.read_text())
        assert doc["replications"] == 2
        assert doc["base_seed"] == 10

    def test_bad_config_field_is_usage_error(self, tmp_path):
        conf = tmp_path / "exp.conf"
        conf.write_text("preset=model-a\nreplications=two\n")
        with pytest.raises(SystemExit) as err:
            run_cli("mc", "--config", str(conf))
        assert err.value.code == 2

    def test_missing_preset_is_usage_error(self):
        with pytest.raises(SystemExit) as err:
            run_cli("mc", "--sizes", "300")
        assert err.value.code == 2

    def test_deterministic_payload(self, tmp_path):
        outs = [tmp_path / "m1.json", tmp_path / "m2.json"]
        for out in outs:
            assert run_cli("mc", "--preset", "model-a", "--replications", "2",
                           "--sizes", "300", "--penalty", "logn", "-o", str(out)) == 0
        assert outs[0].read_bytes() == outs[1].read_bytes()


class TestRoundTrip:
    def test_simulate_output_feeds_fit_and_select(self, tmp_path):
        csv = tmp_path / "d.csv"
        assert run_cli("simulate", "--family", "bernoulli", "--ingarch", "1,0",
                       "--theta", "0.12,0.748", "--n", "312", "--seed", "1",
                       "-o", str(csv)) == 0
        assert run_cli("fit", "--input", str(csv), "--family", "bernoulli",
                       "--ingarch", "1,0", "-o", str(tmp_path / "f.json")) == 0
        assert run_cli("select", "--input", str(csv), "--family", "bernoulli",
                       "--pmax", "1", "--qmax", "1", "--penalty", "logn",
                       "-o", str(tmp_path / "s.json")) == 0

    def test_console_entry_point(self, tmp_path):
        proc = subprocess.run(
            [sys.executable, "-m", "countsel", "simulate", "--family", "poisson",
             "--ingarch", "0,0", "--theta", "0.7", "--n", "5", "--seed", "2",
             "-o", str(tmp_path / "t.csv")],
            capture_output=True, text=True,
        )
        assert proc.returncode == 0
        assert "mean=" in proc.stdout


class TestPathValidation:
    def test_missing_output_directory_is_usage_error(self, model_a_csv, tmp_path):
        with pytest.raises(SystemExit) as err:
            run_cli("fit", "--input", str(model_a_csv), "--family", "poisson",
                    "--ingarch", "1,0", "-o", str(tmp_path / "no_such_dir" / "f.json"))
        assert err.value.code == 2
