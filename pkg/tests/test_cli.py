import json

import pytest

from spikelattice.cli import main, read_config


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_bound_gamma_zero(capsys):
    code, out, _ = run(capsys, "bound", "--gamma", "0")
    assert code == 0
    assert out.strip() == "0.5"


def test_bound_out_of_domain(capsys):
    code, _, err = run(capsys, "bound", "--gamma", "0.1")
    assert code == 1
    assert "16" in err


def test_exact_single_site(capsys):
    code, out, _ = run(capsys, "exact", "--n", "0", "--gamma", "1",
                       "--beta")
    assert code == 0
    assert "mean tau" in out and "0.5" in out
    beta = float(out.split("beta = ")[1].strip())
    assert beta == pytest.approx(0.5, abs=1e-7)


def test_exact_survival_query(capsys):
    code, out, _ = run(capsys, "exact", "--n", "1", "--gamma", "0.5",
                       "--t", "0.5,1")
    assert code == 0
    assert out.count("P(tau >") == 2


def test_unknown_flag_exits_one(capsys):
    assert main(["bound", "--gamma", "0", "--bogus"]) == 1


def test_missing_required_flag_exits_one(capsys):
    assert main(["bound"]) == 1


def test_verify_duality_passes(capsys):
    code, out, _ = run(capsys, "verify", "--suite", "duality",
                       "--sites", "4", "--reps", "50")
    assert code == 0
    assert "0 violations" in out


def test_verify_graphical_passes(capsys):
    code, out, _ = run(capsys, "verify", "--suite", "graphical",
                       "--sites", "4", "--reps", "30")
    assert code == 0


def test_verify_lemmas_passes(capsys):
    code, out, _ = run(capsys, "verify", "--suite", "lemmas",
                       "--sites", "2", "--reps", "50")
    assert code == 0
    assert "set-dominance: pass" in out


def test_simulate_writes_artifacts(tmp_path, capsys):
    out_dir = tmp_path / "run"
    code, _, _ = run(capsys, "simulate", "--n", "1", "--gamma", "0.5",
                     "--replicas", "50", "--seed", "4",
                     "--out", str(out_dir))
    assert code == 0
    csv = (out_dir / "samples.csv").read_text()
    assert csv.splitlines()[0] == "replica,tau,censored,n_spikes,n_leaks"
    assert len(csv.splitlines()) == 51
    doc = json.loads((out_dir / "manifest.json").read_text())
    assert doc["config"]["gamma"] == 0.5
    assert doc["counts"]["replicas"] == 50


def test_simulate_reproducible_across_worker_counts(tmp_path, capsys):
    args = ["simulate", "--n", "2", "--gamma", "0.5", "--replicas",
            "200", "--seed", "10"]
    a = tmp_path / "a"
    b = tmp_path / "b"
    run(capsys, *args, "--workers", "1", "--out", str(a))
    run(capsys, *args, "--workers", "8", "--out", str(b))
    assert (a / "samples.csv").read_bytes() == (b / "samples.csv").read_bytes()


def test_density_csv_schema(tmp_path, capsys):
    out_dir = tmp_path / "d"
    code, _, _ = run(capsys, "density", "--gamma", "0.3", "--t", "5",
                     "--m", "20", "--replicas", "200",
                     "--out", str(out_dir))
    assert code == 0
    header = (out_dir / "density.csv").read_text().splitlines()[0]
    assert header == ("gamma,T,M,rho_dual,se_dual,rho_spatial,"
                      "se_spatial,contamination")


def test_sweep_csv_schema(tmp_path, capsys):
    out_dir = tmp_path / "s"
    code, _, _ = run(capsys, "sweep", "--gammas", "0.2,2", "--t", "5",
                     "--m", "20", "--replicas", "100",
                     "--out", str(out_dir))
    assert code == 0
    lines = (out_dir / "sweep.csv").read_text().splitlines()
    assert lines[0] == "gamma,survival_full,se_full,survival_half,se_half"
    assert len(lines) == 3


def test_metastability_csv_schema(tmp_path, capsys):
    out_dir = tmp_path / "m"
    code, _, _ = run(capsys, "metastability", "--gamma", "0.5",
                     "--n-list", "0,1", "--replicas", "500",
                     "--out", str(out_dir))
    assert code == 0
    lines = (out_dir / "metastability.csv").read_text().splitlines()
    assert lines[0] == ("N,gamma,replicas,mean_tau,se_mean,beta_hat,"
                        "se_beta,ks_d,ks_p,ratio,censored")
    assert len(lines) == 3


class TestConfigFile:
    def test_grammar(self, tmp_path):
        p = tmp_path / "c.conf"
        p.write_text("# comment\n\ngamma = 0.5\nn-list = 0,1\n")
        conf = read_config(str(p))
        assert conf == {"gamma": "0.5", "n_list": "0,1"}

    def test_bad_line(self, tmp_path):
        p = tmp_path / "c.conf"
        p.write_text("no equals sign\n")
        with pytest.raises(ValueError, match="key = value"):
            read_config(str(p))

    def test_values_used_as_defaults(self, tmp_path, capsys):
        p = tmp_path / "c.conf"
        p.write_text("gamma = 0\n")
        code, out, _ = run(capsys, "--config", str(p), "bound")
        assert code == 0
        assert out.strip() == "0.5"

    def test_flags_override_config(self, tmp_path, capsys):
        p = tmp_path / "c.conf"
        p.write_text("gamma = 1\n")  # out of the bound's domain
        code, out, _ = run(capsys, "--config", str(p), "bound",
                           "--gamma", "0")
        assert code == 0
        assert out.strip() == "0.5"

    def test_unknown_key_rejected(self, tmp_path, capsys):
        p = tmp_path / "c.conf"
        p.write_text("gamma = 0\nnonsense = 1\n")
        code, _, err = run(capsys, "--config", str(p), "bound")
        assert code == 1
        assert "nonsense" in err
