import json
import math
from pathlib import Path

import numpy as np
import pytest

import ternstab as ts
from ternstab.errors import ConfigError
from ternstab.harness import parse_sweep_spec, thread_count
from ternstab.serialize import register_custom_control

CONFIG_DIR = Path(__file__).resolve().parent.parent / "configs"


def load_raw(name):
    return json.loads((CONFIG_DIR / name).read_text())


class TestPerturbMap:
    def test_zero_theta_is_identity_on_base(self, oddpoly_derivation):
        spec = ts.PerturbationSpec(theta=0.0, p=0.5)
        f = ts.perturb_map(oddpoly_derivation, spec)
        rng = np.random.default_rng(0)
        for _ in range(1000):
            x = rng.standard_normal(2)
            np.testing.assert_array_equal(f(x), oddpoly_derivation(x))

    def test_magnitude_example(self, oddpoly_derivation):
        # |x| = 4, p = 0.5, theta = 0.1 -> offset norm 0.2
        spec = ts.PerturbationSpec(theta=0.1, p=0.5, direction="fixed")
        f = ts.perturb_map(oddpoly_derivation, spec)
        x = np.array([4.0, 0.0])
        assert np.linalg.norm(f(x) - oddpoly_derivation(x)) == pytest.approx(0.2, abs=1e-14)

    def test_magnitude_exact_for_hash_direction(self, oddpoly_derivation):
        spec = ts.PerturbationSpec(theta=0.3, p=0.25, direction="hash", seed=42)
        f = ts.perturb_map(oddpoly_derivation, spec)
        rng = np.random.default_rng(1)
        for _ in range(50):
            x = rng.standard_normal(2)
            got = np.linalg.norm(f(x) - oddpoly_derivation(x))
            want = 0.3 * np.linalg.norm(x) ** 0.25
            assert got == pytest.approx(want, rel=1e-12)

    def test_zero_maps_to_zero(self, oddpoly_derivation):
        for direction in ("fixed", "hash"):
            spec = ts.PerturbationSpec(theta=0.5, p=0.1, direction=direction)
            f = ts.perturb_map(oddpoly_derivation, spec)
            np.testing.assert_array_equal(f(np.zeros(2)), np.zeros(2))

    def test_same_seed_bitwise_identical(self, oddpoly_derivation):
        spec = ts.PerturbationSpec(theta=0.1, p=0.5, direction="hash", seed=7)
        f1 = ts.perturb_map(oddpoly_derivation, spec)
        f2 = ts.perturb_map(oddpoly_derivation, spec)
        rng = np.random.default_rng(2)
        for _ in range(20):
            x = rng.standard_normal(2)
            np.testing.assert_array_equal(f1(x), f2(x))

    def test_different_seeds_differ(self, oddpoly_derivation):
        a = ts.perturb_map(
            oddpoly_derivation, ts.PerturbationSpec(theta=0.1, p=0.5, direction="hash", seed=1)
        )
        b = ts.perturb_map(
            oddpoly_derivation, ts.PerturbationSpec(theta=0.1, p=0.5, direction="hash", seed=2)
        )
        x = np.array([1.0, 2.0])
        assert not np.array_equal(a(x), b(x))

    def test_spec_validation(self):
        with pytest.raises(ValueError):
            ts.PerturbationSpec(theta=-0.1, p=0.5)
        with pytest.raises(ValueError):
            ts.PerturbationSpec(theta=0.1, p=1.0)
        with pytest.raises(ValueError):
            ts.PerturbationSpec(theta=0.1, p=0.5, direction="sideways")

    def test_complex_base_map(self):
        base = ts.LinearMap(np.eye(2, dtype=np.complex128))
        spec = ts.PerturbationSpec(theta=0.1, p=0.5, direction="hash", seed=3)
        f = ts.perturb_map(base, spec)
        x = np.array([1.0 + 1.0j, 0.0])
        out = f(x)
        assert out.dtype == np.complex128
        assert np.linalg.norm(out - x) == pytest.approx(
            0.1 * np.linalg.norm(x) ** 0.5, rel=1e-12
        )


class TestRunExperiment:
    def test_bundled_oddpoly_config_passes(self):
        result = ts.run_experiment(CONFIG_DIR / "oddpoly3_p05.json", write_files=False)
        assert result.all_passed
        report = result.report
        assert report["errors"] == []
        assert report["recovered"]["truth_error"]["D"] <= 1e-9
        assert report["bounds"]["max_violation"] <= 0.0
        assert report["identity_residuals"]["passed"]

    def test_bundled_trivial_config_uses_zero_fallback(self):
        result = ts.run_experiment(CONFIG_DIR / "trivial2x2_p05.json", write_files=False)
        assert result.all_passed
        notes = result.report["notes"]
        assert any(n["code"] == "EMPTY_DERIVATION_SPACE" for n in notes)

    def test_zero_perturbation_recovers_exactly(self):
        raw = load_raw("oddpoly3_p05.json")
        raw["control"] = {"kind": "power", "theta": 0.0, "p": 0.5, "arity": 5}
        for name in "fghk":
            raw["perturbation"][name]["theta"] = 0.0
        result = ts.run_experiment(raw, write_files=False)
        assert result.all_passed
        truth = result.report["recovered"]["truth_error"]
        assert max(truth.values()) <= 1e-12
        iters = result.report["recovered"]["iterations"]
        assert all(n == 0 for seq in iters.values() for n in seq)

    def test_iteration_counts_follow_apriori_formula(self):
        counts = {}
        for p in (0.1, 0.9):
            raw = load_raw("oddpoly3_p05.json")
            raw["control"]["p"] = p
            for name in "fghk":
                raw["perturbation"][name]["p"] = p
            raw["tol"] = 1e-8
            raw["samples"] = {
                "bound_points": 5,
                "identity_triples": 5,
                "hypothesis_tuples": 0,
                "linearity_points": 1,
            }
            result = ts.run_experiment(raw, write_files=False)
            n_used = max(result.report["recovered"]["iterations"]["f"])
            denom = 1 - 2 ** (p - 1)
            apriori = math.ceil(math.log2(0.1 / (1e-8 * denom)) / (1 - p))
            assert n_used <= apriori
            assert n_used >= apriori - 1
            counts[p] = n_used
        assert counts[0.9] > counts[0.1]

    def test_empty_space_error_mode(self):
        raw = load_raw("trivial2x2_p05.json")
        raw["derivation"]["on_empty"] = "error"
        result = ts.run_experiment(raw, write_files=False)
        assert not result.all_passed
        assert result.report["errors"][0]["code"] == "EMPTY_DERIVATION_SPACE"
        assert result.report["recovered"] is None

    def test_nonconvergence_recorded_per_basis(self):
        # max_iter far below the a-priori requirement: every basis vector
        # fails with the NONCONVERGENT code and the run is marked failed
        raw = load_raw("oddpoly3_p05.json")
        raw["max_iter"] = 5
        raw["samples"]["hypothesis_tuples"] = 0
        result = ts.run_experiment(raw, write_files=False)
        assert not result.all_passed
        failures = result.report["recovered"]["failures"]
        assert failures and all(f["code"] == "NONCONVERGENT" for f in failures)

    def test_divergent_control_reported(self):
        register_custom_control(
            "test-divergent", lambda *args: float(sum(np.linalg.norm(a) ** 2 for a in args))
        )
        raw = load_raw("oddpoly3_p05.json")
        raw["control"] = {"kind": "custom", "name": "test-divergent", "arity": 5}
        result = ts.run_experiment(raw, write_files=False)
        assert not result.all_passed
        assert result.report["errors"][0]["code"] == "CONTROL_DIVERGENT"

    def test_report_files_and_traces(self, tmp_path):
        result = ts.run_experiment(
            CONFIG_DIR / "oddpoly3_p05.json", out_dir=tmp_path / "run"
        )
        assert result.report_path.exists()
        report = json.loads(result.report_path.read_text())
        for key in ("config_echo", "recovered", "bounds", "hypothesis",
                    "identity_residuals", "all_passed", "timestamp"):
            assert key in report
        for name in "fghk":
            trace = tmp_path / "run" / f"trace_{name}.csv"
            assert trace.exists()
            header = trace.read_text().splitlines()[0]
            assert header == "basis_index,n,error,tail_bound"

    def test_determinism_byte_identical_reports(self, tmp_path):
        ts.run_experiment(CONFIG_DIR / "oddpoly3_p05.json", out_dir=tmp_path / "a")
        ts.run_experiment(CONFIG_DIR / "oddpoly3_p05.json", out_dir=tmp_path / "b")
        lines_a = (tmp_path / "a" / "report.json").read_text().splitlines()
        lines_b = (tmp_path / "b" / "report.json").read_text().splitlines()
        stripped_a = [l for l in lines_a if '"timestamp"' not in l]
        stripped_b = [l for l in lines_b if '"timestamp"' not in l]
        assert stripped_a == stripped_b

    def test_jordan_mode_run(self):
        result = ts.run_experiment(CONFIG_DIR / "oddpoly3_jordan.json", write_files=False)
        assert result.all_passed
        assert result.report["identity_residuals"]["mode"] == "jordan"
        assert result.report["hypothesis"]["mode"] == "jordan"

    def test_complex_field_run(self):
        raw = load_raw("oddpoly3_p05.json")
        raw["algebra"]["field"] = "complex"
        result = ts.run_experiment(raw, write_files=False)
        assert result.all_passed
        assert result.report["recovered"]["truth_error"]["D"] <= 1e-9
        # the scalar grid switches to 16 unit-circle points over the
        # complex field
        assert result.report["hypothesis"]["lambda_count"] == 16


class TestConfigLoading:
    def test_missing_file(self):
        with pytest.raises(ConfigError):
            ts.load_config("no/such/config.json")

    def test_bad_tolerance(self):
        raw = load_raw("oddpoly3_p05.json")
        raw["tol"] = 0.0
        with pytest.raises(ConfigError, match="tolerances"):
            ts.load_config(raw)

    def test_mode_arity_mismatch(self):
        raw = load_raw("oddpoly3_p05.json")
        raw["mode"] = "jordan"  # control still has arity 5
        with pytest.raises(ConfigError, match="arity"):
            ts.load_config(raw)

    def test_unknown_builder(self):
        raw = load_raw("oddpoly3_p05.json")
        raw["algebra"] = {"builder": "octonion"}
        with pytest.raises(ConfigError):
            ts.load_config(raw)

    def test_missing_map_file(self):
        raw = load_raw("oddpoly3_p05.json")
        raw["maps"] = {"sigma": {"file": "missing_map.json"}, "tau": "identity", "xi": "identity"}
        with pytest.raises(ConfigError, match="does not exist"):
            ts.load_config(raw)

    def test_random_seeded_maps(self):
        raw = load_raw("oddpoly3_p05.json")
        raw["maps"] = {
            "sigma": {"random_seed": 5},
            "tau": "identity",
            "xi": {"matrix": [[1.0, 0.0], [0.0, 2.0]]},
        }
        cfg = ts.load_config(raw)
        sigma, tau, xi = cfg.map_candidates[0]
        assert not np.array_equal(sigma.matrix, np.eye(2))
        np.testing.assert_array_equal(xi.matrix, [[1.0, 0.0], [0.0, 2.0]])

    def test_fallback_maps_are_tried_in_order(self, tmp_path):
        # first candidate has an empty space, the fallback has a nontrivial one
        raw = load_raw("oddpoly3_p05.json")
        raw["maps"] = {"sigma": {"random_seed": 9}, "tau": {"random_seed": 10}, "xi": {"random_seed": 11}}
        raw["fallback_maps"] = [{"sigma": "identity", "tau": "identity", "xi": "identity"}]
        result = ts.run_experiment(raw, write_files=False)
        assert result.all_passed
        assert result.report["notes"] == []


class TestSweep:
    def test_monotone_iterations_in_p(self):
        raw = load_raw("oddpoly3_p05.json")
        raw["samples"] = {
            "bound_points": 10,
            "identity_triples": 10,
            "hypothesis_tuples": 0,
            "linearity_points": 1,
        }
        rows = ts.run_sweep(raw, "p", [0.2, 0.5, 0.8])
        assert all(row["all_passed"] for row in rows)
        iters = [row["max_iterations"] for row in rows]
        assert iters == sorted(iters)

    def test_csv_output(self, tmp_path):
        raw = load_raw("oddpoly3_p05.json")
        raw["samples"] = {
            "bound_points": 5,
            "identity_triples": 5,
            "hypothesis_tuples": 0,
            "linearity_points": 1,
        }
        out = tmp_path / "sweep.csv"
        ts.run_sweep(raw, "theta", [0.0, 0.1], out_csv=out)
        lines = out.read_text().splitlines()
        assert lines[0] == "param,value,all_passed,max_iterations,max_bound_violation,max_identity_residual"
        assert len(lines) == 3

    def test_parse_sweep_spec(self):
        name, values = parse_sweep_spec("p=0.1:0.9:0.2")
        assert name == "p"
        np.testing.assert_allclose(values, [0.1, 0.3, 0.5, 0.7, 0.9])
        with pytest.raises(ConfigError):
            parse_sweep_spec("p=1:2")
        with pytest.raises(ConfigError):
            parse_sweep_spec("p=0.1:0.9:-0.1")

    def test_unknown_sweep_param(self):
        raw = load_raw("oddpoly3_p05.json")
        with pytest.raises(ConfigError):
            ts.run_sweep(raw, "m", [1.0])


class TestThreadCount:
    def test_unset_is_auto(self, monkeypatch):
        monkeypatch.delenv("TERNSTAB_THREADS", raising=False)
        assert thread_count() >= 1

    def test_zero_is_auto(self, monkeypatch):
        monkeypatch.setenv("TERNSTAB_THREADS", "0")
        assert thread_count() >= 1

    def test_explicit_value(self, monkeypatch):
        monkeypatch.setenv("TERNSTAB_THREADS", "3")
        assert thread_count() == 3

    def test_invalid_value(self, monkeypatch):
        monkeypatch.setenv("TERNSTAB_THREADS", "many")
        with pytest.raises(ConfigError):
            thread_count()

    def test_sweep_runs_serial_when_capped(self, monkeypatch):
        monkeypatch.setenv("TERNSTAB_THREADS", "1")
        raw = load_raw("oddpoly3_p05.json")
        raw["samples"] = {
            "bound_points": 2,
            "identity_triples": 2,
            "hypothesis_tuples": 0,
            "linearity_points": 0,
        }
        rows = ts.run_sweep(raw, "p", [0.3, 0.6])
        assert [row["value"] for row in rows] == [0.3, 0.6]
