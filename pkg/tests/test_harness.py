import csv
import io
import json
import math

import numpy as np
import pytest
from scipy import stats

from pandora_search.errors import ValidationError
from pandora_search.harness import (
    GeneratorSpec,
    bench,
    concentration_failures,
    empirical_weights,
    generate,
    partition_matroid_lb,
    pipeline_pa,
    sample_scenarios,
    set_cover_value,
    setcover_lb,
)
from pandora_search.harness.cli import main
from pandora_search.harness.generators import FAMILIES, mssc_pure, random_uniform
from pandora_search.lp import solve_lp_spa
from pandora_search.model import MatroidBasis, SearchInstance, SelectK, UniformMatroid, evaluate_spa
from pandora_search.oracle import opt_na, opt_spa


@pytest.mark.parametrize("family", FAMILIES)
def test_every_family_generates(family):
    inst, matroid = generate(GeneratorSpec(family, n=4, m=3, seed=2))
    assert isinstance(inst, SearchInstance)
    assert (matroid is not None) == (family == "partition-matroid-lb")
    again, _ = generate(GeneratorSpec(family, n=4, m=3, seed=2))
    assert again == inst
    assert SearchInstance.from_json(inst.to_json()) == inst


def test_generator_errors():
    with pytest.raises(ValidationError):
        generate(GeneratorSpec("nope"))
    with pytest.raises(ValidationError):
        generate(GeneratorSpec("random-uniform", n=0))
    with pytest.raises(ValidationError):
        setcover_lb([[0], [1]], universe=3)
    with pytest.raises(ValidationError):
        partition_matroid_lb(k=2, sets=[[0]])


def test_random_uniform_keeps_scenarios_feasible():
    inst = random_uniform(5, 20, seed=1, inf_rate=0.9, keep_finite=2)
    assert np.all(np.isfinite(inst.costs).sum(axis=0) >= 2)


def test_set_cover_family():
    sets = [[0, 1], [1, 2], [2, 3], [0, 3]]
    assert set_cover_value(sets, 4) == 2
    inst = setcover_lb(sets, universe=4)
    H = 4.59 * 2
    assert inst.m == 5
    assert inst.probs[-1] == pytest.approx(0.22)
    assert np.all(inst.costs[:, -1] == H)
    assert inst.costs[0, 0] == 0 and inst.costs[0, 2] == H
    # the good pair of sets covers every element, so probing both costs 2 + p * H
    assert opt_na(inst)[0] <= 2 + 0.22 * H + 1e-9


def test_partition_family_structure():
    inst, mat = partition_matroid_lb(k=2, sets=[[0], [1]], universe=2)
    assert inst.n == 4 and inst.m == 4
    assert mat.full_rank == 2
    # every scenario has exactly one free box per segment
    for s in range(inst.m):
        assert MatroidBasis(mat).best_cost(inst.costs[:, s], range(4)) == 0


def test_mssc_family_is_zero_inf():
    inst = mssc_pure(n=5, m=6, seed=3)
    vals = set(inst.costs.ravel().tolist())
    assert vals <= {0.0, math.inf}
    assert np.all(np.isfinite(inst.costs).any(axis=0))


def test_sampling():
    base = SearchInstance([[0, 5, 9], [4, 1, 2]], [0.5, 0.3, 0.2])
    w = empirical_weights(base, 20_000, seed=4)
    counts = np.round(w * 20_000)
    assert stats.chisquare(counts, base.probs * 20_000).pvalue > 1e-3
    one = sample_scenarios(base, 1, seed=4)
    assert one.m == 1 and one.probs[0] == 1.0
    samp = sample_scenarios(base, 500, seed=4)
    assert np.array_equal(samp.probe_times, base.probe_times)
    with pytest.raises(ValidationError):
        sample_scenarios(base, 0)


def test_concentration_improves_with_samples():
    inst = random_uniform(4, 6, seed=0)
    orders = [[0, 1, 2, 3], [3, 2, 1, 0]]
    few = concentration_failures(inst, orders, m=20, reps=300, eps=0.1, seed=1)
    many = concentration_failures(inst, orders, m=4000, reps=300, eps=0.1, seed=1)
    assert np.all(many <= few)
    assert np.all(many <= 0.05)


def test_pipeline_spa_pa(instance_a):
    rep = pipeline_pa(instance_a, method="spa-pa")
    assert rep.result("rounded-spa").mean == pytest.approx(1.5)
    pa = rep.result("rounded-pa")
    assert pa.exact and pa.mean <= 9.2205 * rep.oracles["opt_pa"]
    assert rep.ratio("rounded-spa", "lp") == pytest.approx(1.0)
    assert rep.lp["objective"] <= min(rep.result("rounded-spa").mean, rep.oracles["opt_spa"]) + 1e-9


def test_pipeline_spa_na(instance_a):
    rep = pipeline_pa(instance_a, method="spa-na", trials=20_000)
    spa = rep.result("rounded-spa")
    assert spa.mean <= 2.0 + 3 * spa.stderr
    assert rep.result("rounded-pa").upper() <= math.e / (math.e - 1) * rep.oracles["opt_na"] + 1e-9


def test_pipeline_kcover_and_matroid(rng):
    inst = random_uniform(4, 3, seed=5)
    rep = pipeline_pa(inst, SelectK(2), "kcover", trials=2000)
    assert rep.result("rounded-spa").mean <= 124 * rep.lp["objective"]
    assert set(rep.oracles) >= {"opt_na", "opt_spa", "opt_pa", "opt_fa"}
    rep = pipeline_pa(inst, MatroidBasis(UniformMatroid(4, 2)), "matroid", trials=500)
    assert rep.ratio("rounded-spa", "lp*ln(rank)") > 0
    with pytest.raises(ValidationError):
        pipeline_pa(inst, None, "kcover")
    with pytest.raises(ValidationError):
        pipeline_pa(inst, SelectK(2), "spa-na")
    with pytest.raises(ValidationError):
        pipeline_pa(inst, method="bogus")


def test_reports_are_reproducible(instance_a):
    a = pipeline_pa(instance_a, method="spa-na", seed=7, trials=500).dumps()
    b = pipeline_pa(instance_a, method="spa-na", seed=7, trials=500).dumps()
    assert a == b
    text = pipeline_pa(instance_a, method="spa-na", seed=7, trials=500).dumps("csv")
    rows = list(csv.reader(io.StringIO(text)))
    assert rows[0][:3] == ["record", "name", "value"]
    assert {r[0] for r in rows[1:]} >= {"lp", "method", "ratio"}
    timed = pipeline_pa(instance_a, method="spa-na", seed=7, trials=500, timing=True)
    assert timed.wall_clock is not None


def test_bench_lower_bounds():
    instances = [random_uniform(4, 4, seed=s) for s in range(3)]
    reps = bench(instances, lambda inst: None, "spa-pa", seed=1, oracles=False)
    for inst, rep in zip(instances, reps):
        assert rep.lp["objective"] == pytest.approx(solve_lp_spa(inst).objective)
        assert rep.lp["objective"] <= evaluate_spa(inst, rep.lp["order"]) + 1e-9
        assert rep.lp["objective"] <= opt_spa(inst)[0] + 1e-9


# -- command line ---------------------------------------------------------------


def run(args, capsys):
    code = main([str(a) for a in args])
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture
def inst_path(tmp_path, instance_a):
    path = tmp_path / "a.json"
    instance_a.save(path)
    return path


def test_cli_gen(tmp_path, capsys):
    code, out, _ = run(["gen", "--family", "random-uniform", "--n", 3, "--m", 2, "--seed", 4], capsys)
    assert code == 0 and SearchInstance.from_json(out).n == 3
    out_path = tmp_path / "p.json"
    code, _, _ = run(["gen", "--family", "partition-matroid-lb", "--k", 2, "--out", out_path], capsys)
    assert code == 0
    assert (tmp_path / "p.matroid.json").exists()
    code, _, _ = run(["gen", "--family", "general-times", "--P", 2, "--out", tmp_path / "g.json"], capsys)
    inst = SearchInstance.load(tmp_path / "g.json")
    assert code == 0 and inst.probe_times.max() <= 2


def test_cli_solve_lp(inst_path, tmp_path, capsys):
    code, out, _ = run(["solve-lp", "--instance", inst_path], capsys)
    doc = json.loads(out)
    assert code == 0 and doc["objective"] == pytest.approx(1.5) and doc["counting_gap"] <= 1e-9
    code, out, _ = run(["solve-lp", "--instance", inst_path, "--kind", "na", "--backend", "simplex"], capsys)
    assert json.loads(out)["objective"] == pytest.approx(2.0)
    dump = tmp_path / "lp.lp"
    code, out, _ = run(["solve-lp", "--instance", inst_path, "--kind", "mssc", "--format", "csv",
                        "--dump-lp", dump], capsys)
    assert code == 0 and out.startswith("scenario,time,cost") and "Subject To" in dump.read_text()
    code, out, _ = run(["solve-lp", "--instance", inst_path, "--constraint", "k:2"], capsys)
    assert json.loads(out)["kind"] == "lp-kcover"


def test_cli_round_and_evaluate(inst_path, tmp_path, capsys):
    strat = tmp_path / "s.json"
    assert run(["round", "--instance", inst_path, "--method", "spa-pa", "--out", strat], capsys)[0] == 0
    code, out, _ = run(["evaluate", "--instance", inst_path, "--strategy", strat, "--trials", 100], capsys)
    assert code == 0 and json.loads(out)["estimate"]["mean"] == pytest.approx(1.5)
    online = tmp_path / "o.json"
    assert run(["round", "--instance", inst_path, "--method", "spa-na", "--online", "--out", online], capsys)[0] == 0
    assert json.loads(online.read_text())["stopping"]["kind"] == "ski-rental"
    code, out, _ = run(["evaluate", "--instance", inst_path, "--order", "0,1", "--stopping", "spa"], capsys)
    doc = json.loads(out)
    assert doc["exact"] == pytest.approx(1.5) and doc["estimate"]["mean"] == pytest.approx(1.5)
    code, out, _ = run(["evaluate", "--instance", inst_path, "--order", "0,1", "--stopping", "na"], capsys)
    assert json.loads(out)["exact"] == pytest.approx(2.0)


def test_cli_oracle(inst_path, capsys):
    code, out, _ = run(["oracle", "--instance", inst_path, "--benchmark", "pa"], capsys)
    assert code == 0 and json.loads(out) == {"opt_pa": 1.5}
    code, out, _ = run(["oracle", "--instance", inst_path, "--witness"], capsys)
    doc = json.loads(out)
    assert doc["opt_fa"] == pytest.approx(1.5) and doc["na_witness"] == [0, 1]


def test_cli_pipeline_is_byte_identical(inst_path, capsys):
    args = ["pipeline", "--instance", inst_path, "--method", "spa-na", "--trials", 300, "--seed", 3]
    first = run(args, capsys)[1]
    assert first == run(args, capsys)[1]
    assert json.loads(first)["method"] == "spa-na"
    code, out, _ = run(["pipeline", "--instance", inst_path, "--format", "csv", "--no-oracles"], capsys)
    assert code == 0 and "opt_" not in out


def test_cli_bench(capsys):
    code, out, _ = run(["bench", "--family", "random-uniform", "--count", 3, "--n", 3, "--m", 3,
                        "--trials", 200], capsys)
    doc = json.loads(out)
    assert code == 0 and len(doc["reports"]) == 3 and "rounded-pa/opt_pa" in doc["max_ratios"]
    code, out, _ = run(["bench", "--family", "partition-matroid-lb", "--method", "matroid", "--count", 2,
                        "--params", '{"k": 2}', "--trials", 100, "--no-oracles", "--format", "csv"], capsys)
    assert code == 0 and out.startswith("record,")


def test_cli_exit_codes(inst_path, tmp_path, capsys):
    assert run(["frobnicate"], capsys)[0] == 1
    assert run(["oracle"], capsys)[0] == 1
    assert run(["oracle", "--instance", inst_path, "--seed", -1], capsys)[0] == 1
    assert run(["oracle", "--instance", inst_path, "--constraint", "k:5"], capsys)[0] == 2
    assert run(["oracle", "--instance", tmp_path / "missing.json"], capsys)[0] == 2
    bad = tmp_path / "bad.json"
    bad.write_text("{")
    assert run(["oracle", "--instance", bad], capsys)[0] == 2
    infeasible = tmp_path / "inf.json"
    SearchInstance([[math.inf, 1.0]]).save(infeasible)
    assert run(["solve-lp", "--instance", infeasible], capsys)[0] == 2
    big = tmp_path / "big.json"
    SearchInstance(np.zeros((9, 2))).save(big)
    code, _, err = run(["oracle", "--instance", big, "--benchmark", "pa"], capsys)
    assert code == 3 and "capped" in err
    assert run(["round", "--instance", inst_path, "--method", "matroid"], capsys)[0] == 2
