"""End-to-end tests of the command-line harness and its exit-code contract."""

import json

import pytest

from dmatensor.cli import main
from dmatensor.scenario import load_dataset
from dmatensor.sweep import CSV_COLUMNS


def write_json(path, doc):
    path.write_text(json.dumps(doc, indent=1))
    return str(path)


@pytest.fixture
def gen_config(tmp_path):
    def make(**overrides):
        doc = {
            "version": 1,
            "scenario": {
                "n_f": 2, "n_m": 6, "n_u": 3,
                "coupling_strength": 0.7,
                "snr_db": None,
                "seed": 11,
                "alpha": [0.0, 0.0],
                "beta": [1.0, 0.0],
            },
            "k_train": 12,
            "q_test": 20,
            "config_seed": 5,
            "noise_seed": 6,
            "output": str(tmp_path / "dataset.json"),
        }
        doc.update(overrides)
        return write_json(tmp_path / "gen.json", doc)

    return make


@pytest.fixture
def dataset(tmp_path, gen_config):
    assert main(["generate", gen_config()]) == 0
    return str(tmp_path / "dataset.json")


class TestGenerate:
    def test_minimal_config_round_trips(self, tmp_path, gen_config):
        assert main(["generate", gen_config()]) == 0
        ms, params = load_dataset(tmp_path / "dataset.json")
        assert ms.k == 33  # reference + 12 + 20
        assert params is not None

    def test_missing_field_exits_2_naming_it(self, tmp_path, capsys):
        doc = {"version": 1, "scenario": {"n_f": 2, "n_u": 3}}
        cfg = write_json(tmp_path / "bad.json", doc)
        assert main(["generate", cfg]) == 2
        assert "scenario.n_m" in capsys.readouterr().err

    def test_flag_overrides(self, tmp_path, gen_config):
        out = tmp_path / "snr.json"
        assert main(["generate", gen_config(), "--snr-db", "20", "--out", str(out)]) == 0
        ms, _ = load_dataset(out)
        assert ms.snr_db == 20.0


class TestEstimate:
    def test_type4_noiseless_reaches_floor(self, tmp_path, dataset):
        out = tmp_path / "report.json"
        code = main(["estimate", dataset, "--type", "4", "--q", "20", "--out", str(out)])
        assert code == 0
        doc = json.loads(out.read_text())
        assert doc["k_train"] == 12 and doc["q_test"] == 20
        assert float(doc["nmse_db"]) <= -140.0

    def test_dataset_dims_are_reused(self, tmp_path, dataset):
        # no dimensions on the command line: everything comes from the file
        out = tmp_path / "report.json"
        assert main(["estimate", dataset, "--type", "3", "--q", "20", "--out", str(out)]) == 0
        doc = json.loads(out.read_text())
        assert doc["estimates"]["a"]["cols"] == 6

    def test_bilinear_below_bound_exits_3(self, tmp_path, dataset, capsys):
        code = main(["estimate", dataset, "--type", "rbf", "--q", "20", "--out",
                     str(tmp_path / "r.json")])
        assert code == 3
        assert "21" in capsys.readouterr().err  # N_M(N_M+1)/2 for N_M=6

    def test_no_mc_equals_aware_at_zero_coupling(self, tmp_path, gen_config):
        cfg = gen_config(scenario={
            "n_f": 2, "n_m": 6, "n_u": 3, "coupling_strength": 0.0,
            "snr_db": 30.0, "seed": 3, "alpha": [0.0, 0.0], "beta": [1.0, 0.0],
        })
        assert main(["generate", cfg]) == 0
        ds = str(tmp_path / "dataset.json")
        out_a, out_b = tmp_path / "a.json", tmp_path / "b.json"
        assert main(["estimate", ds, "--type", "2", "--q", "20", "--out", str(out_a)]) == 0
        assert main(["estimate", ds, "--type", "2", "--q", "20", "--no-mc",
                     "--out", str(out_b)]) == 0
        a = json.loads(out_a.read_text())
        b = json.loads(out_b.read_text())
        assert a["zeta_db"] == b["zeta_db"]
        assert a["nmse_db"] == b["nmse_db"]

    def test_k_larger_than_pool_exits_3(self, dataset, tmp_path):
        assert main(["estimate", dataset, "--type", "4", "--k", "500", "--q", "20",
                     "--out", str(tmp_path / "r.json")]) == 3

    def test_missing_dataset_parameters_exit_3(self, tmp_path, dataset):
        from dmatensor.scenario import load_dataset as ld, save_dataset

        ms, _ = ld(dataset)
        bare = tmp_path / "bare.json"
        save_dataset(ms, None, bare)
        assert main(["estimate", str(bare), "--type", "4", "--q", "20",
                     "--out", str(tmp_path / "r.json")]) == 3


@pytest.fixture
def sweep_config(tmp_path):
    def make(**overrides):
        doc = {
            "version": 1,
            "scenario": {
                "n_f": 2, "n_m": 6, "n_u": 3,
                "coupling_strength": 0.7,
                "snr_db": 30.0,
                "seed": 4,
                "alpha": [0.0, 0.0],
                "beta": [1.0, 0.0],
            },
            "problem_types": ["3", "4", "4_no_mc"],
            "k_grid": [2, 4, 8],
            "n_f_grid": [2, 3],
            "q": 20,
            "estimator": {"max_iter": 60},
            "config_seed": 7,
            "noise_seed": 8,
            "output_dir": ".",
        }
        doc.update(overrides)
        return write_json(tmp_path / "sweep.json", doc)

    return make


class TestSweep:
    def test_produces_csv_with_exact_columns(self, tmp_path, sweep_config):
        assert main(["sweep", sweep_config(), "--out-dir", str(tmp_path / "out")]) == 0
        csv_path = tmp_path / "out" / "sweep.csv"
        lines = csv_path.read_text().splitlines()
        assert lines[0] == ",".join(CSV_COLUMNS)
        assert len(lines) == 1 + 3 * 3 * 2  # types x k x n_f

    def test_cell_failures_recorded_not_fatal(self, tmp_path, sweep_config):
        # k=2 is below the type-3 bound for n_f=2: status column, no abort
        assert main(["sweep", sweep_config(), "--out-dir", str(tmp_path / "out")]) == 0
        text = (tmp_path / "out" / "sweep.csv").read_text()
        assert "identifiability" in text
        assert "ok" in text

    def test_empty_grid_exits_2(self, tmp_path, sweep_config, capsys):
        cfg = sweep_config(k_grid=[])
        assert main(["sweep", cfg, "--out-dir", str(tmp_path / "out")]) == 2
        assert "k_grid" in capsys.readouterr().err

    def test_byte_identical_reruns_without_timing(self, tmp_path, sweep_config):
        cfg = sweep_config()
        assert main(["sweep", cfg, "--no-timing", "--out-dir", str(tmp_path / "o1")]) == 0
        assert main(["sweep", cfg, "--no-timing", "--out-dir", str(tmp_path / "o2")]) == 0
        b1 = (tmp_path / "o1" / "sweep.csv").read_bytes()
        b2 = (tmp_path / "o2" / "sweep.csv").read_bytes()
        assert b1 == b2

    def test_parallel_jobs_match_serial(self, tmp_path, sweep_config):
        cfg = sweep_config()
        assert main(["sweep", cfg, "--no-timing", "--out-dir", str(tmp_path / "s")]) == 0
        assert main(["sweep", cfg, "--no-timing", "--jobs", "4",
                     "--out-dir", str(tmp_path / "p")]) == 0
        assert (tmp_path / "s" / "sweep.csv").read_bytes() == (tmp_path / "p" / "sweep.csv").read_bytes()


class TestOptimize:
    def test_ground_truth_model(self, tmp_path, dataset):
        out = tmp_path / "opt.json"
        code = main(["optimize", dataset, "--user", "0", "--feed", "1",
                     "--use-ground-truth", "--population", "40",
                     "--generations", "60", "--ga-seed", "2", "--out", str(out)])
        assert code == 0
        doc = json.loads(out.read_text())
        assert doc["enhancement"] >= 1.0
        assert doc["predicted_gain"] >= doc["baseline_max"]

    def test_estimated_model_matches_truth_noiseless(self, tmp_path, dataset):
        out = tmp_path / "opt.json"
        code = main(["optimize", dataset, "--user", "1", "--feed", "0",
                     "--type", "4", "--q", "20", "--population", "40",
                     "--generations", "60", "--ga-seed", "3", "--out", str(out)])
        assert code == 0
        doc = json.loads(out.read_text())
        pred, truth = doc["predicted_gain"], doc["ground_truth_gain"]
        assert abs(pred - truth) <= 1e-10 * max(truth, 1.0)

    def test_bad_user_index_exits_2(self, tmp_path, dataset):
        assert main(["optimize", dataset, "--user", "99", "--feed", "0",
                     "--use-ground-truth", "--out", str(tmp_path / "o.json")]) == 2


FIXTURE_ROWS = """type,n_f,k,seed,nmse_db,zeta_db,iterations,wall_time_ms,converged,status
1,2,4,9,-10.000000,12.000000,5,0.000,true,ok
1,2,8,9,-20.000000,26.000000,5,0.000,true,ok
1,2,16,9,-30.000000,28.500000,5,0.000,true,ok
1,2,32,9,-31.000000,29.100000,5,0.000,true,ok
1,2,2,9,,,,,,identifiability: K too small
"""


class TestReport:
    def test_k_min_extraction_matches_hand_computation(self, tmp_path, capsys):
        csv_path = tmp_path / "sweep.csv"
        csv_path.write_text(FIXTURE_ROWS)
        # threshold 25 dB: first k with zeta >= 25 is k=8
        assert main(["report", str(csv_path), "--zeta-threshold-db", "25",
                     "--out-dir", str(tmp_path / "rep"), "--no-plots"]) == 0
        doc = json.loads((tmp_path / "rep" / "report_tables.json").read_text())
        assert doc["cells"][0]["k_min_at_threshold"] == 8
        assert doc["cells"][0]["best_zeta_db"] == 29.1

    def test_snr_flag_derives_threshold(self, tmp_path):
        csv_path = tmp_path / "sweep.csv"
        csv_path.write_text(FIXTURE_ROWS)
        assert main(["report", str(csv_path), "--snr-db", "29",
                     "--out-dir", str(tmp_path / "rep"), "--no-plots"]) == 0
        doc = json.loads((tmp_path / "rep" / "report_tables.json").read_text())
        assert doc["threshold_db"] == 26.0
        assert doc["cells"][0]["k_min_at_threshold"] == 8

    def test_single_row_csv(self, tmp_path):
        csv_path = tmp_path / "one.csv"
        csv_path.write_text(
            ",".join(CSV_COLUMNS)
            + "\n4,2,8,1,-15.000000,14.000000,1,0.000,true,ok\n"
        )
        assert main(["report", str(csv_path), "--out-dir", str(tmp_path / "rep"),
                     "--no-plots"]) == 0
        doc = json.loads((tmp_path / "rep" / "report_tables.json").read_text())
        assert len(doc["cells"]) == 1

    def test_missing_status_column_exits_2(self, tmp_path, capsys):
        csv_path = tmp_path / "bad.csv"
        csv_path.write_text("type,n_f,k,seed,nmse_db,zeta_db,iterations,wall_time_ms,converged\n")
        assert main(["report", str(csv_path), "--no-plots",
                     "--out-dir", str(tmp_path / "rep")]) == 2

    def test_figures_rendered_by_default(self, tmp_path):
        csv_path = tmp_path / "sweep.csv"
        csv_path.write_text(FIXTURE_ROWS)
        assert main(["report", str(csv_path), "--out-dir", str(tmp_path / "rep")]) == 0
        assert (tmp_path / "rep" / "sweep_zeta_vs_k.png").exists()
        assert (tmp_path / "rep" / "sweep_nmse_vs_k.png").exists()


class TestEnvironment:
    def test_output_dir_env_var(self, tmp_path, gen_config, monkeypatch):
        monkeypatch.setenv("DMATENSOR_OUTPUT_DIR", str(tmp_path / "envout"))
        cfg = gen_config(output=None)
        cfg_doc = json.loads((tmp_path / "gen.json").read_text())
        del cfg_doc["output"]
        write_json(tmp_path / "gen.json", cfg_doc)
        assert main(["generate", str(tmp_path / "gen.json")]) == 0
        assert (tmp_path / "envout" / "dataset.json").exists()
