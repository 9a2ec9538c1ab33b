import numpy as np
import pytest

from contractix import harness
from contractix.fixedpoint import read_trace_csv, write_trace_csv
from contractix.harness import (
    ConfigError,
    ExperimentConfig,
    build_config,
    cmd_bounds,
    cmd_run,
    cmd_verify,
    main,
    parse_config_text,
    read_model_csv,
    read_report_csv,
    worker_count,
)
from contractix.objective import (
    RidgeRegressionProblem,
    exact_minimizer,
    ridge_to_quadratic,
    write_ridge_csv,
)


@pytest.fixture
def ridge_data(tmp_path):
    rng = np.random.default_rng(2024)
    D, y = rng.standard_normal((5, 50)), rng.standard_normal(50)
    path = tmp_path / "data.csv"
    write_ridge_csv(path, D, y)
    return path, D, y


class TestConfigParsing:
    def test_flat_file(self):
        values = parse_config_text(
            "# experiment\nobjective = quadratic\nQ = 2 0; 0 8\nq = 1, -1\nmethod = both\niters = 50  # budget\n"
        )
        cfg = build_config(values)
        np.testing.assert_array_equal(cfg.Q, [[2.0, 0.0], [0.0, 8.0]])
        np.testing.assert_array_equal(cfg.q, [1.0, -1.0])
        assert (cfg.method, cfg.iters) == ("both", 50)

    def test_optimal_alpha_keyword(self):
        assert parse_config_text("alpha = optimal")["alpha"] is None

    @pytest.mark.parametrize(
        "text,key",
        [
            ("frobnicate = 1", "frobnicate"),
            ("iters = ten", "iters"),
            ("iters = 0", "iters"),
            ("grad_tol = -1", "grad_tol"),
            ("method = newton", "method"),
            ("objective = worst_case\nn = 2", "n"),
            ("objective = ridge\nQ = 1", "Q"),
            ("objective = ridge\ndata = x.csv\nlambda = 0", "lambda"),
            ("objective = quadratic\nq = 1", "Q"),
            ("Q = 1 2; 3", "Q"),
            ("kappa = 2\nkappa = 3", "kappa"),
        ],
    )
    def test_errors_name_the_key(self, text, key):
        with pytest.raises(ConfigError, match=f"^{key}:"):
            build_config(parse_config_text(text))

    def test_missing_equals(self):
        with pytest.raises(ConfigError, match="line 2"):
            parse_config_text("n = 3\nkappa 4\n")


class TestCmdRun:
    def test_worst_case_ordering(self, tmp_path):
        cfg = ExperimentConfig(
            objective="worst_case", n=1024, kappa=100.0, method="both", iters=100, out=str(tmp_path / "wc.csv")
        )
        status, results = cmd_run(cfg)
        assert status == harness.EXIT_BUDGET
        gd = read_trace_csv(tmp_path / "wc_gd.csv")
        hb = read_trace_csv(tmp_path / "wc_hb.csv")
        assert len(gd) == len(hb) == 101
        for row in gd:
            assert row["lower_bound"] <= row["error"] <= row["gd_bound"]
        for row in hb[1:]:
            assert row["lower_bound"] <= row["error"] <= row["hb_bound"]

    def test_perfect_conditioning(self, tmp_path):
        cfg = ExperimentConfig(objective="random", n=4, kappa=1.0, iters=10, out=str(tmp_path / "t.csv"))
        status, results = cmd_run(cfg)
        assert status == harness.EXIT_OK
        rows = read_trace_csv(tmp_path / "t.csv")
        assert len(rows) == 11
        assert rows[1]["error"] <= 1e-12
        assert all(r["error"] is None for r in rows[2:])
        assert all(r["hb_bound"] is None and r["lower_bound"] is None for r in rows)

    def test_divergent_step(self, tmp_path):
        cfg = ExperimentConfig(objective="random", n=5, kappa=10.0, alpha=0.5, iters=50, out=str(tmp_path / "d.csv"))
        status, results = cmd_run(cfg)
        assert status == harness.EXIT_DIVERGED
        trace = results["gd"][0]
        assert trace.status == "diverged" and trace.iterations < 50
        rows = read_trace_csv(tmp_path / "d.csv")
        assert len(rows) == 51
        assert all(r["gd_bound"] is None for r in rows)  # q(alpha) > 1: no GD curve

    def test_explicit_contractive_step(self, tmp_path):
        cfg = ExperimentConfig(objective="random", n=5, kappa=10.0, alpha=0.05, iters=30, out=str(tmp_path / "s.csv"))
        cmd_run(cfg)
        rows = read_trace_csv(tmp_path / "s.csv")
        q = max(abs(1 - 10 * 0.05), abs(1 - 0.05))
        for row in rows:
            assert row["gd_bound"] == pytest.approx(q ** row["k"] * rows[0]["error"], rel=1e-12)
            assert row["error"] <= row["gd_bound"] * (1 + 1e-10)

    def test_deterministic_bytes(self, tmp_path):
        outs = []
        for name in ("a.csv", "b.csv"):
            cfg = ExperimentConfig(objective="random", n=6, kappa=30.0, method="hb", iters=40, seed=5,
                                   init="random", out=str(tmp_path / name))
            cmd_run(cfg)
            outs.append((tmp_path / name).read_bytes())
        assert outs[0] == outs[1]

    def test_round_trip(self, tmp_path):
        cfg = ExperimentConfig(objective="random", n=6, kappa=30.0, iters=25, out=str(tmp_path / "a.csv"))
        cmd_run(cfg)
        text = (tmp_path / "a.csv").read_text()
        write_trace_csv(tmp_path / "b.csv", read_trace_csv(tmp_path / "a.csv"))
        assert (tmp_path / "b.csv").read_text() == text

    def test_quadratic_literal(self, tmp_path):
        cfg = build_config(parse_config_text(
            f"objective = quadratic\nQ = 2 0; 0 8\nq = -2 8\nout = {tmp_path / 'q.csv'}\niters = 500\n"
        ))
        status, results = cmd_run(cfg)
        assert status == harness.EXIT_OK
        np.testing.assert_allclose(results["gd"][0].final, [1.0, -1.0], atol=1e-10)


class TestCmdBounds:
    def test_kappa_100_ratios(self, tmp_path):
        rows = read_trace_csv(cmd_bounds_path(tmp_path, 100.0, 100))
        for a, b in zip(rows[:-1], rows[1:]):
            assert b["gd_bound"] / a["gd_bound"] == pytest.approx(99 / 101, rel=1e-12)
            assert b["lower_bound"] / a["lower_bound"] == pytest.approx(9 / 11, rel=1e-12)
            if a["k"] >= 1:
                ratio = b["hb_bound"] / a["hb_bound"] * a["k"] / b["k"]
                assert ratio == pytest.approx(9 / 11, rel=1e-12)

    def test_crossover_exists(self, tmp_path):
        rows = read_trace_csv(cmd_bounds_path(tmp_path, 100.0, 400))
        cross = [r["k"] for r in rows if r["hb_bound"] is not None and r["hb_bound"] < r["gd_bound"]]
        assert cross and 0 < cross[0] < 400

    def test_kappa_one(self, tmp_path):
        rows = read_trace_csv(cmd_bounds_path(tmp_path, 1.0, 3))
        assert [r["gd_bound"] for r in rows] == [1.0, 0.0, 0.0, 0.0]
        assert all(r["hb_bound"] is None and r["lower_bound"] is None for r in rows)

    def test_rejects_kappa_below_one(self, tmp_path):
        with pytest.raises(ConfigError):
            cmd_bounds(0.5, 3, tmp_path / "b.csv")


def cmd_bounds_path(tmp_path, kappa, k_max):
    path = tmp_path / f"bounds_{kappa}_{k_max}.csv"
    cmd_bounds(kappa, k_max, path)
    return path


class TestCmdRidge:
    def test_singleton(self, tmp_path):
        path = tmp_path / "one.csv"
        path.write_text("f1,label\n1,0\n")
        status, model, trace, model_path = harness.cmd_ridge(path, 1.0, "gd", 100, tmp_path / "r.csv")
        assert status == harness.EXIT_OK
        assert model["kappa"] == 2.0
        assert model["alpha_star"] == pytest.approx(2 / 3, rel=1e-15)
        assert read_model_csv(model_path) == model

    def test_zero_features(self, tmp_path):
        path = tmp_path / "zero.csv"
        path.write_text("f1,f2,label\n0,0,1\n0,0,2\n")
        status, model, trace, _ = harness.cmd_ridge(path, 0.5, "gd", 100, tmp_path / "r.csv")
        assert model["kappa"] == 1.0
        assert status == harness.EXIT_OK and trace.iterations <= 1

    def test_matches_dense_solve(self, tmp_path, ridge_data):
        path, D, y = ridge_data
        status, model, trace, _ = harness.cmd_ridge(path, 0.1, "both", 100_000, tmp_path / "r.csv")
        assert status == harness.EXIT_OK
        f = ridge_to_quadratic(RidgeRegressionProblem(D, y, 0.1))
        x_dense = exact_minimizer(f)
        weights = np.array([model[f"x.f{i}"] for i in range(1, 6)])
        np.testing.assert_allclose(weights, x_dense, atol=1e-8)
        assert trace.grad_norms[-1] <= 1e-10
        eigs = np.linalg.eigvalsh(f.Q)
        assert model["L"] <= eigs[0] + 1e-9 and eigs[-1] <= model["U"] + 1e-9


class TestCmdVerify:
    def test_depth_zero(self, tmp_path):
        status, rows = cmd_verify([2.0, 4.0, 100.0], 0, tmp_path / "v.csv")
        assert status == harness.EXIT_OK and rows == []
        assert (tmp_path / "v.csv").read_text().strip() == ",".join(harness.REPORT_COLUMNS)

    def test_small_run_passes_and_round_trips(self, tmp_path):
        status, rows = cmd_verify([4.0], 3, tmp_path / "v.csv")
        assert status == harness.EXIT_OK and rows
        back = read_report_csv(tmp_path / "v.csv")
        assert [(r["check"], r["parameter"], r["pass"]) for r in back] == [
            (r["check"], r["parameter"], r["pass"]) for r in rows
        ]
        checks = {r["check"] for r in rows}
        assert {"schur_d_bound", "integral_identity", "hb_spectral_radius", "dual_route_norm",
                "eigenvalue_min", "delta_shrinkage"} <= checks

    def test_near_one_kappa(self, tmp_path):
        status, rows = cmd_verify([1.0001], 2, tmp_path / "v.csv")
        quad = [r for r in rows if r["check"] == "integral_identity"]
        assert quad and all(r["pass"] for r in quad)

    def test_order_independent_of_threads(self, tmp_path, monkeypatch):
        reports = []
        for threads in ("1", "4"):
            monkeypatch.setenv("CONTRACTIX_THREADS", threads)
            cmd_verify([2.0, 100.0], 2, tmp_path / f"v{threads}.csv")
            reports.append((tmp_path / f"v{threads}.csv").read_bytes())
        assert reports[0] == reports[1]

    def test_failed_check_sets_status(self, tmp_path, monkeypatch):
        monkeypatch.setattr(harness.analysis, "integral_identity", lambda kappa, k: 1.0)
        status, rows = cmd_verify([4.0], 1, tmp_path / "v.csv")
        assert status == harness.EXIT_CHECK_FAILED
        assert any(not r["pass"] for r in rows)


class TestWorkerCount:
    def test_cap(self, monkeypatch):
        monkeypatch.setenv("CONTRACTIX_THREADS", "1")
        assert worker_count() == 1

    @pytest.mark.parametrize("value", ["0", "many"])
    def test_invalid(self, monkeypatch, value):
        monkeypatch.setenv("CONTRACTIX_THREADS", value)
        with pytest.raises(ConfigError):
            worker_count()


class TestExitCodes:
    def test_converged(self, tmp_path):
        assert main(["run", "--kappa", "1", "--n", "3", "--out", str(tmp_path / "a.csv")]) == 0

    def test_budget(self, tmp_path):
        assert main(["run", "--kappa", "100", "--n", "5", "--iters", "3", "--out", str(tmp_path / "a.csv")]) == 2

    def test_diverged(self, tmp_path):
        assert main(["run", "--kappa", "10", "--n", "5", "--alpha", "0.5", "--out", str(tmp_path / "a.csv")]) == 3

    def test_config_error(self, tmp_path):
        cfg = tmp_path / "c.cfg"
        cfg.write_text("objective = worst_case\nn = 1\n")
        assert main(["run", "--config", str(cfg)]) == 4

    def test_bad_flag(self):
        assert main(["run", "--frobnicate"]) == 4

    def test_io_error(self, tmp_path):
        assert main(["ridge", str(tmp_path / "missing.csv"), "--lambda", "1"]) == 5

    def test_dataset_error(self, tmp_path, capsys):
        path = tmp_path / "bad.csv"
        path.write_text("f1,label\n1,2,3\n")
        assert main(["ridge", str(path), "--lambda", "1"]) == 5
        assert "line 2" in capsys.readouterr().err

    def test_unwritable_output(self, tmp_path):
        assert main(["bounds", "--kappa", "4", "--out", str(tmp_path / "no" / "dir" / "b.csv")]) == 5

    def test_verify_failure(self, tmp_path, monkeypatch):
        monkeypatch.setattr(harness.analysis, "integral_identity", lambda kappa, k: 1.0)
        assert main(["verify", "--kappa", "4", "--depth", "1", "--out", str(tmp_path / "v.csv")]) == 1

    def test_config_overrides(self, tmp_path):
        cfg = tmp_path / "c.cfg"
        cfg.write_text("objective = random\nkappa = 10\nn = 4\niters = 2\n")
        out = tmp_path / "o.csv"
        assert main(["run", "--config", str(cfg), "--iters", "5000", "--out", str(out)]) == 0
        assert len(read_trace_csv(out)) == 5001
