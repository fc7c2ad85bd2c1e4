import io
import json

import numpy as np
import pytest

from qtabu.bench import (
    ConfigError,
    ExperimentSpec,
    InstanceError,
    compute_ecdf,
    energy_distribution_export,
    load_result,
    make_reduced_suite,
    qubo_from_json,
    qubo_to_json,
    resolve,
    resolve_one,
    run_experiment,
    synthetic_a_series,
)
from qtabu.bench.cli import main
from qtabu.bench.data import BQPGKA_NAMES, best_known_min, dump_qubos_json, name_bqpgka
from qtabu.qaoa import diagonal_energies, index_to_bits
from qtabu.qubo import MAXIMIZE_NEGATED, Qubo, clamp, evaluate, move_values, parse_orlib, write_orlib
from qtabu.samplers import QaoaSamplerConfig, SaConfig, SamplerContext
from qtabu.tabu import RunTrace

from conftest import random_qubo


def trace(f_init, f_best, problem="p"):
    f_best = np.asarray(f_best, dtype=float)
    n = len(f_best)
    return RunTrace(f_init, f_best.copy(), f_best, np.ones(n, int), np.zeros(n, bool), "max_iters", problem=problem)


@pytest.fixture
def orlib_file(tmp_path, rng):
    qs = [random_qubo(rng, n, 0.5, integer=True) for n in (12, 15, 25)]
    path = tmp_path / "inst.txt"
    path.write_text(write_orlib(qs))
    return path


class TestData:
    def test_json_roundtrip(self, rng):
        q = random_qubo(rng, 9, 0.5, offset=2.5)
        q = Qubo(q.coeffs, q.offset, MAXIMIZE_NEGATED, "x", {"a": 1})
        back = qubo_from_json(json.loads(json.dumps(qubo_to_json(q))))
        np.testing.assert_array_equal(back.coeffs, q.coeffs)
        assert (back.offset, back.sense, back.name, back.meta) == (2.5, MAXIMIZE_NEGATED, "x", {"a": 1})

    def test_resolve_refs(self, orlib_file):
        assert [q.n for q in resolve(str(orlib_file))] == [12, 15, 25]
        assert resolve_one(f"{orlib_file}:1").n == 15
        assert resolve_one(f"{orlib_file}:inst:2").n == 25
        with pytest.raises(InstanceError):
            resolve_one(f"{orlib_file}:7")
        with pytest.raises(InstanceError):
            resolve_one(f"{orlib_file}:nope")
        with pytest.raises(InstanceError):
            resolve_one(str(orlib_file))
        with pytest.raises(InstanceError):
            resolve(str(orlib_file.parent / "missing.txt"))

    def test_json_file_ref(self, tmp_path, rng):
        qs = [Qubo(random_qubo(rng, 5).coeffs, 1.0, name=f"q{i}") for i in range(3)]
        path = tmp_path / "s.json"
        with open(path, "w") as fh:
            dump_qubos_json(qs, fh)
        got = resolve_one(f"{path}:q2")
        np.testing.assert_array_equal(got.coeffs, qs[2].coeffs)
        assert got.offset == 1.0

    def test_bqpgka_naming(self):
        sizes = {"d": 100, "e": 200, "f": 500}
        qs = [Qubo.zeros(sizes.get(name[-1], 3)) for name in BQPGKA_NAMES]
        named = name_bqpgka(qs)
        assert named[25].name == "1d" and named[25].n == 100
        assert named[-1].name == "5f"
        qs[25] = Qubo.zeros(7)
        with pytest.raises(InstanceError):
            name_bqpgka(qs)
        with pytest.raises(InstanceError):
            name_bqpgka(qs[:10])

    def test_best_known_sign(self):
        q = Qubo(Qubo.zeros(2).coeffs, sense=MAXIMIZE_NEGATED, name="1d")
        assert best_known_min(q) == -6333
        assert best_known_min(Qubo.zeros(2)) is None

    def test_synthetic_series(self):
        a = synthetic_a_series(3)
        b = synthetic_a_series(3)
        assert [q.n for q in a] == [30, 40, 50, 60, 70, 80, 90, 100]
        assert all(q.sense == MAXIMIZE_NEGATED for q in a)
        assert all(np.array_equal(x.coeffs, y.coeffs) for x, y in zip(a, b))
        assert np.all(np.abs(a[0].coeffs) <= 100)
        # written back out, the text parses to the same problems
        again = parse_orlib(write_orlib(a))
        assert all(np.array_equal(x.coeffs, y.coeffs) for x, y in zip(a, again))


class TestReduce:
    def test_cardinality_and_size(self):
        suite = make_reduced_suite(synthetic_a_series(0), seed=1)
        assert len(suite) == 40
        assert all(q.n == 20 for q in suite)
        assert suite[0].meta["parent"] == "syn1a"

    def test_identity_when_size_is_n(self, rng):
        q = random_qubo(rng, 10, integer=True)
        (r,) = make_reduced_suite([q], seed=0, per_instance=1, size=10)
        np.testing.assert_array_equal(r.coeffs, q.coeffs)
        assert r.offset == q.offset

    def test_embedding_spot_check(self, rng):
        parents = synthetic_a_series(2)[:2]
        suite = make_reduced_suite(parents, seed=5, per_instance=3, size=12)
        by_name = {q.name: q for q in parents}
        for r in suite:
            parent = by_name[r.meta["parent"]]
            base = np.array([int(c) for c in r.meta["solution"]], dtype=np.uint8)
            sel = np.array(r.meta["selected"])
            for _ in range(100):
                y = rng.integers(0, 2, r.n)
                x = base.copy()
                x[sel] = y
                assert evaluate(r, y) == evaluate(parent, x)

    def test_deterministic(self):
        a = make_reduced_suite(synthetic_a_series(0)[:3], seed=9, per_instance=2)
        b = make_reduced_suite(synthetic_a_series(0)[:3], seed=9, per_instance=2)
        assert all(np.array_equal(x.coeffs, y.coeffs) and x.offset == y.offset for x, y in zip(a, b))

    def test_too_small(self, rng):
        with pytest.raises(ValueError):
            make_reduced_suite([random_qubo(rng, 5)], seed=0, size=6)


class TestEcdf:
    def test_hits_optimum_at_one(self):
        rep = compute_ecdf([trace(10.0, [0.0, 0.0, 0.0])], [0.0], T=10)
        assert rep.curve[0] == pytest.approx(0.1)
        np.testing.assert_array_equal(rep.curve[1:], 1.0)

    def test_stalled_run_meets_only_worst_target(self):
        good = trace(10.0, [5.0, 0.0])
        stalled = trace(10.0, [10.0, 10.0])
        rep = compute_ecdf([good, stalled], None, T=5)
        np.testing.assert_array_equal(rep.hits[1], [-1, -1, -1, -1, 0])
        # targets 0, 2.5, 5, 7.5, 10: t=0 only the worst, t=1 adds 5 and 7.5 for the good run
        np.testing.assert_allclose(rep.curve, [2 / 10, 4 / 10, 6 / 10])

    def test_duplicate_runs_do_not_change_curve(self):
        a = trace(4.0, [3.0, 1.0, 1.0, 0.0])
        one = compute_ecdf([a], [0.0], T=4)
        two = compute_ecdf([a, a], [0.0], T=4)
        np.testing.assert_array_equal(one.curve, two.curve)

    def test_hand_computed_two_problems(self):
        # problem p: targets -4, -2, 0; problem q: targets 0, 5, 10
        runs = [trace(0.0, [-2.0, -4.0], "p"), trace(10.0, [10.0, 5.0, 0.0], "q")]
        rep = compute_ecdf(runs, {"p": -4.0, "q": 1.0}, T=3)
        np.testing.assert_array_equal(rep.targets["p"], [-4, -2, 0])
        np.testing.assert_array_equal(rep.normalized["p"], [1.0, 0.5, -0.0])
        np.testing.assert_array_equal(rep.hits, [[2, 1, 0], [3, 2, 0]])
        np.testing.assert_allclose(rep.curve, [2 / 6, 3 / 6, 5 / 6, 1.0])

    def test_monotone_and_bounded(self, rng):
        traces = []
        for r in range(12):
            f = np.minimum.accumulate(rng.normal(size=rng.integers(1, 40)).cumsum())
            traces.append(trace(float(f[0]) + 1, f, problem=f"p{r % 3}"))
        rep = compute_ecdf(traces, None, T=25)
        assert np.all(np.diff(rep.curve) >= 0)
        assert rep.curve[0] >= 0 and rep.curve[-1] <= 1

    def test_shared_grid(self):
        fast = trace(10.0, [0.0], "p")
        slow = trace(10.0, [5.0], "p")
        grid = compute_ecdf([fast, slow], None, T=3).targets
        rep = compute_ecdf([slow], None, T=3, grid=grid)
        np.testing.assert_allclose(rep.curve, [1 / 3, 2 / 3])

    def test_errors(self):
        with pytest.raises(ValueError):
            compute_ecdf([], None, T=3)
        with pytest.raises(ValueError):
            compute_ecdf([trace(1.0, [0.0])], None, T=1)

    def test_csv(self):
        text = compute_ecdf([trace(1.0, [0.0])], None, T=2).to_csv()
        assert text.splitlines() == ["iteration,proportion", "0,0.5", "1,1.0"]


@pytest.fixture
def sub6(rng):
    q = random_qubo(rng, 10, 0.6, integer=True)
    x = rng.integers(0, 2, 10)
    sub = clamp(q, x, [0, 2, 3, 5, 7, 8])
    ctx = SamplerContext(move_values(q, sub.base)[sub.parent_indices], sub.restrict(sub.base))
    return sub, ctx


class TestEnergyExport:
    def test_uniform_histogram(self, sub6):
        sub, ctx = sub6
        draws = 64_000
        cfg = QaoaSamplerConfig(p=1, angles=(0.0, 0.0), label="flat")
        data = energy_distribution_export(sub, [cfg], None, draws, np.random.default_rng(0))
        counts = np.bincount(data.column("index", kind="sample"), minlength=64)
        p = 1 / 64
        assert np.all(np.abs(counts - draws * p) < 5 * np.sqrt(draws * p * (1 - p)))

    def test_hamming_matches_popcount_oracle(self, sub6):
        sub, ctx = sub6
        cfgs = [QaoaSamplerConfig(p=1, angles=(0.4, 0.3), label="a"),
                QaoaSamplerConfig(p=1, angles=(0.4, 0.3), penalized=True, A=2.0, label="b")]
        data = energy_distribution_export(sub, cfgs, SaConfig(2.0, 20, 30), 500, np.random.default_rng(1), ctx)
        x_ts = sub.restrict(sub.base)
        energies = diagonal_energies(sub)
        for label, kind, idx, e, h, prob in data.rows:
            bits = index_to_bits(idx, sub.k)
            assert h == sum(int(a != b) for a, b in zip(bits, x_ts))
            assert e == pytest.approx(energies[idx])
        assert len(data.column("index", kind="sa")) == 30
        for label in ("a", "b"):
            assert sum(data.column("probability", label=label, kind="exact")) == pytest.approx(1.0)

    def test_draws_must_be_positive(self, sub6):
        sub, _ = sub6
        with pytest.raises(ValueError):
            energy_distribution_export(sub, [], None, 0, np.random.default_rng(0))

    def test_csv_header(self, sub6):
        sub, _ = sub6
        data = energy_distribution_export(sub, [QaoaSamplerConfig(angles=(0.1, 0.1))], None, 3,
                                          np.random.default_rng(0))
        lines = data.to_csv().splitlines()
        assert lines[0] == "label,kind,index,energy,hamming,probability"
        assert len(lines) == 1 + 3 + 64


@pytest.fixture
def bqp_file(tmp_path):
    qs = synthetic_a_series(0, sizes=(20, 25))
    path = tmp_path / "small.txt"
    path.write_text(write_orlib(qs))
    return path


class TestExperiment:
    def test_cardinality(self, bqp_file, tmp_path):
        spec = ExperimentSpec([f"{bqp_file}:0"], [0], tenures=[2, 3], max_iters=30)
        res = run_experiment(spec, tmp_path / "out")
        assert len(res.rows) == 2 and res.failed == 0

    def test_summary_consistent_with_trace(self, bqp_file, tmp_path):
        targets = tmp_path / "targets.json"
        # a reachable target in the reporting convention
        q = resolve_one(f"{bqp_file}:0")
        targets.write_text(json.dumps({q.name: 500}))
        spec = ExperimentSpec([f"{bqp_file}:0", f"{bqp_file}:1"], [0, 1], algorithms=["basic", "brute-force"],
                              tenures=[2], ks=[5], max_iters=40, targets=str(targets))
        res = run_experiment(spec, tmp_path / "out")
        rows, traces = load_result(tmp_path / "out")
        assert len(rows) == len(res.rows) == 8
        for r, tr in zip(rows, traces):
            # best is the maximum of the re-negated trace
            assert r["best"] == max(-tr.f_init, *(-tr.f_best))
            if r["target_min"] is not None:
                hits = [0] if tr.f_init <= r["target_min"] else []
                hits += [t + 1 for t, v in enumerate(tr.f_best) if v <= r["target_min"]]
                assert r["first_hit"] == (hits[0] if hits else None)
                assert r["target"] == 500

    def test_deterministic_summary(self, bqp_file, tmp_path):
        spec = ExperimentSpec([f"{bqp_file}:1"], [0, 1], algorithms=["basic", "sa"], tenures=[3], ks=[6],
                              rand_tenure=2, max_iters=25, sa_restarts=2, sa_steps=10)
        run_experiment(spec, tmp_path / "a")
        run_experiment(spec, tmp_path / "b", jobs=2)
        assert (tmp_path / "a" / "summary.json").read_bytes() == (tmp_path / "b" / "summary.json").read_bytes()

    def test_manifest(self, bqp_file, tmp_path):
        spec = ExperimentSpec([f"{bqp_file}:0"], [4], max_iters=5)
        run_experiment(spec, tmp_path / "out")
        man = json.loads((tmp_path / "out" / "manifest.json").read_text())
        assert man["schema"] == "qtabu.manifest/1"
        assert man["spec"]["seeds"] == [4]
        assert "toolkit_version" in man and len(man["cells"]) == 1

    def test_cell_errors_do_not_abort(self, bqp_file, tmp_path):
        spec = ExperimentSpec([f"{bqp_file}:0", str(tmp_path / "missing.txt")], [0],
                              algorithms=["basic", "brute-force"], ks=[30], max_iters=5)
        res = run_experiment(spec, tmp_path / "out")
        status = [(r["instance"].endswith("missing.txt"), r["algorithm"], r["status"]) for r in res.rows]
        assert status == [(False, "basic", "ok"), (False, "brute-force", "error"),
                          (True, "basic", "error"), (True, "brute-force", "error")]

    @pytest.mark.parametrize("change", [dict(instances=[]), dict(seeds=[]), dict(algorithms=["x"]),
                                        dict(ks=[0]), dict(targets="/no/such.json")])
    def test_config_errors(self, bqp_file, change):
        spec = ExperimentSpec(**{**dict(instances=[str(bqp_file)], seeds=[0]), **change})
        with pytest.raises(ConfigError):
            run_experiment(spec)

    def test_from_json_rejects_unknown(self):
        with pytest.raises(ConfigError):
            ExperimentSpec.from_json({"instances": ["a"], "seeds": [0], "bogus": 1})


class TestCli:
    def test_solve(self, bqp_file, tmp_path, capsys):
        out = tmp_path / "t.csv"
        code = main(["solve", f"{bqp_file}:0", "--tenure", "2", "--max-iters", "10", "--trace", str(out)])
        assert code == 0
        row = json.loads(capsys.readouterr().out)
        assert row["iterations"] == 10
        back = RunTrace.from_csv(io.StringIO(out.read_text()))
        assert back.iterations == 10 and -back.f_best.min() == row["best"]

    def test_bench_and_ecdf(self, bqp_file, tmp_path, capsys):
        out = tmp_path / "res"
        assert main(["bench", f"{bqp_file}:0", "--algorithms", "basic,brute-force", "--tenures", "2-3",
                     "--ks", "5", "--seeds", "2", "--max-iters", "20", "--out", str(out)]) == 0
        assert len(list((out / "traces").glob("*.csv"))) == 8
        ecdf = tmp_path / "ecdf.csv"
        assert main(["ecdf", str(out), "--targets", "10", "--out", str(ecdf)]) == 0
        lines = ecdf.read_text().splitlines()
        assert lines[0] == "iteration,basic_tt2,basic_tt3,brute-force_k5_tt2,brute-force_k5_tt3"
        cols = np.array([[float(v) for v in ln.split(",")[1:]] for ln in lines[1:]])
        assert np.all(np.diff(cols, axis=0) >= 0) and cols.max() <= 1

    def test_bench_from_spec_file(self, bqp_file, tmp_path):
        spec = tmp_path / "spec.json"
        spec.write_text(json.dumps({"instances": [f"{bqp_file}:1"], "seeds": [0], "max_iters": 5}))
        assert main(["bench", "--spec", str(spec), "--out", str(tmp_path / "r")]) == 0

    def test_exit_codes(self, bqp_file, tmp_path):
        assert main(["bench", f"{bqp_file}:0", str(tmp_path / "gone.txt"), "--max-iters", "5",
                     "--out", str(tmp_path / "r")]) == 1
        assert main(["bench", f"{bqp_file}:0", "--algorithms", "nope", "--out", str(tmp_path / "r")]) == 2
        assert main(["solve", str(tmp_path / "gone.txt")]) == 2
        with pytest.raises(SystemExit) as err:
            main(["solve"])
        assert err.value.code == 2

    def test_reduce(self, bqp_file, tmp_path):
        out = tmp_path / "suite.json"
        assert main(["reduce", str(bqp_file), "--per-instance", "2", "--size", "10", "--out", str(out)]) == 0
        suite = resolve(str(out))
        assert len(suite) == 4 and all(q.n == 10 for q in suite)
        txt = tmp_path / "suite.txt"
        assert main(["reduce", "--analog", "--out", str(txt)]) == 0
        assert len(parse_orlib(txt.read_text())) == 40
        assert main(["reduce", "--out", str(txt)]) == 2

    def test_energy_dist(self, bqp_file, tmp_path):
        out = tmp_path / "e.csv"
        assert main(["energy-dist", f"{bqp_file}:0", "--k", "5", "--draws", "20", "--depths", "1,2", "--A", "1",
                     "--max-evals", "20", "--shots", "20", "--sa-restarts", "4", "--out", str(out)]) == 0
        lines = out.read_text().splitlines()
        # four QAOA configs x (20 samples + 32 exact) + 4 annealing rows
        assert len(lines) == 1 + 4 * (20 + 32) + 4
        assert main(["energy-dist", f"{bqp_file}:0", "--k", "30"]) == 2
