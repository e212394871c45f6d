"""Exit criteria, one test per criterion.

Run ``pytest tests/test_acceptance.py`` for the PASS/FAIL summary lines.
"""

import dataclasses
import io
import json

import numpy as np
from fundus_select.augment import augment_image
from fundus_select.cli import main
from fundus_select.datasetplan import (
    AugmentationPlan,
    ClassSource,
    SplitSpec,
    allocate_split,
    augmented_count,
    build_manifest,
    class_totals,
    reference_sources,
)
from fundus_select.io import manifest_to_json, read_runs, write_runs
from fundus_select.metrics import Label, MetricSet, abs_deltas, relative_comparison
from fundus_select.protocol import verify_generalization
from fundus_select.ranking import DEFAULT_WEIGHTS, RankVector, RunRecord, metric_ranks, overall_score, rank_stage
from fundus_select.report import render_report, result_from_json

TABLE1_RANKS = [1, 2, 16, 6, 10, 3, 7, 8, 13, 5, 17, 15, 4, 11, 9, 14, 12]
TABLE2_RANKS = [9, 3, 7, 4, 1, 2, 5, 8, 6]


def staged_ranks(records):
    """metric_ranks + overall_score + rank_stage, composed step by step."""
    n = len(records)
    columns = [metric_ranks([r.metrics.as_tuple()[j] for r in records]) for j in range(5)]
    totals = [overall_score(RankVector(*(c[i] for c in columns)), n, DEFAULT_WEIGHTS).total for i in range(n)]
    result = rank_stage(records, "ordinal", DEFAULT_WEIGHTS)
    assert [result.entry(r.model_name).score.total for r in records] == totals
    return result


def test_criterion_1_table1_ranks(criterion, table1_records):
    result = staged_ranks(table1_records)
    criterion(f"ranks={result.final_ranks()} winner={result.winner}")
    assert result.final_ranks() == TABLE1_RANKS
    assert result.winner == "Xception"
    assert result.entry("InceptionResNetV2").final_rank == 17


def test_criterion_2_table2_ranks(criterion, table2_records):
    result = staged_ranks(table2_records)
    criterion(f"ranks={result.final_ranks()} winner={result.winner}")
    assert result.final_ranks() == TABLE2_RANKS
    assert result.winner == "Adam, MSE"


def test_criterion_3_tie_order_robustness(criterion, table1_records):
    names = [r.model_name for r in table1_records]
    i, j = names.index("Resnet50V2"), names.index("Resnet101")
    assert table1_records[i].metrics.sensitivity == table1_records[j].metrics.sensitivity == 0.9355
    swapped = list(table1_records)
    swapped[i], swapped[j] = swapped[j], swapped[i]
    first = rank_stage(table1_records, "ordinal")
    second = rank_stage(swapped, "ordinal")
    col_a = [first.entry(n).final_rank for n in names]
    col_b = [second.entry(n).final_rank for n in names]
    criterion(f"table order={col_a} swapped tie={col_b}")
    assert col_a == col_b


def test_criterion_4_dataset_arithmetic(criterion):
    h = ClassSource("ORIGA-healthy", Label.HEALTHY, 482)
    g = ClassSource("ORIGA-glaucoma", Label.DISEASED, 168)
    dr = ClassSource("EYEPACS-retinopathy", Label.DISEASED, 987)
    got = (
        augmented_count(h, AugmentationPlan(3, 1)),
        augmented_count(g, AugmentationPlan(4, 3)),
        augmented_count(dr, AugmentationPlan(3, 0)),
        class_totals(reference_sources()),
        allocate_split(11541, SplitSpec(0.6, 0.2, 0.2)),
    )
    criterion(f"{got}")
    assert got == (2892, 2688, 2961, (5892, 5649, 11541), (6924, 2308, 2309))


def test_criterion_5_generalization(criterion):
    val, test = (0.9015, 0.9413, 0.8560), (0.8748, 0.8952, 0.8561)
    deltas = abs_deltas(val, test)
    report = verify_generalization(val, test, 0.05)
    criterion(f"deltas={tuple(round(d, 12) for d in deltas)} passed={report.passed}")
    for got, want in zip(deltas, (0.0267, 0.0461, 0.0001)):
        assert abs(got - want) <= 1e-9
    assert report.passed


def test_criterion_6_baseline_comparison(criterion, table2_records, baseline_record):
    final = next(r for r in table2_records if r.model_name == "Adam, MSE").metrics
    report = relative_comparison(final, baseline_record.metrics)
    rel = report.relative_change
    criterion(
        f"loss_ratio={report.loss_ratio:.6f} sens={rel['sensitivity']:.6f} "
        f"spec={rel['specificity']:.6f} acc={rel['val_accuracy']:.6f}"
    )
    assert abs(report.loss_ratio - 7.511) <= 0.001
    assert abs(rel["sensitivity"] - 0.884107) <= 0.0005
    assert abs(rel["specificity"] - 0.277803) <= 0.0005
    assert abs(rel["val_accuracy"] - 0.5434) <= 0.0005


def _random_records(rng, n, grid=None):
    params = rng.permutation(n) * 100 + 100
    records = []
    for i in range(n):
        vals = rng.uniform(0, 1, 5)
        vals[0] = rng.uniform(-0.3, 0.3)
        vals[2] = rng.uniform(0, 5)
        if grid:
            vals = np.round(vals * grid) / grid
        records.append(RunRecord(f"model {i}", MetricSet(*vals.tolist()), int(params[i])))
    return records


def test_criterion_7_property_suites(criterion, tmp_path):
    rng = np.random.default_rng(20240601)
    checks = {}

    # rank columns are permutations of 1..N under ordinal, 1000 stages
    for _ in range(1000):
        n = int(rng.integers(1, 18))
        result = rank_stage(_random_records(rng, n, grid=int(rng.choice([0, 3, 10])) or None))
        for col in zip(*(e.ranks.as_tuple() for e in result.entries)):
            assert sorted(col) == list(range(1, n + 1))
    checks["permutation"] = 1000

    # leaderboard order unchanged for K in {N, N+1, N+10}
    for _ in range(200):
        n = int(rng.integers(1, 18))
        records = _random_records(rng, n, grid=5)
        orders = {
            k: [e.model_name for e in rank_stage(records, shift=k).entries] for k in (n, n + 1, n + 10)
        }
        assert orders[n] == orders[n + 1] == orders[n + 10]
    checks["shift"] = 200

    # self-monotonicity under single-metric perturbation
    fields = ("overfitting", "val_accuracy", "val_loss", "sensitivity", "specificity")
    better_when_larger = {"val_accuracy": True, "sensitivity": True, "specificity": True,
                          "overfitting": False, "val_loss": False}
    for _ in range(300):
        n = int(rng.integers(2, 12))
        records = _random_records(rng, n, grid=4)
        k = int(rng.integers(n))
        field = fields[int(rng.integers(5))]
        old = getattr(records[k].metrics, field)
        new = old + float(rng.uniform(0, 0.5))
        if field in ("val_accuracy", "sensitivity", "specificity"):
            new = min(new, 1.0)
        changed = list(records)
        changed[k] = dataclasses.replace(records[k], metrics=dataclasses.replace(records[k].metrics, **{field: new}))
        before = rank_stage(records).entry(records[k].model_name).score.total
        after = rank_stage(changed).entry(records[k].model_name).score.total
        assert after >= before if better_when_larger[field] else after <= before
    checks["monotone"] = 300

    # augmentation count and noise bound
    for _ in range(60):
        h, w = (int(v) for v in rng.integers(1, 10, 2))
        img = rng.integers(0, 256, (h, w, 3), dtype=np.uint8)
        b, c = int(rng.integers(1, 4)), int(rng.integers(0, 4))
        out = augment_image(img, AugmentationPlan(b, c), seed=int(rng.integers(2**31)))
        assert len(out) == b * (c + 1)
        for i in range(b):
            control = out[i * (c + 1)].astype(int)
            for noisy in out[i * (c + 1) + 1 : (i + 1) * (c + 1)]:
                assert noisy.dtype == np.uint8
                assert np.abs(noisy.astype(int) - control).max() <= 2
    checks["augment"] = 60

    # manifest determinism
    pairs = [(ClassSource("a", "healthy", 50), AugmentationPlan(3, 1)), (ClassSource("b", "diseased", 70), AugmentationPlan(2, 0))]
    for seed in range(10):
        assert manifest_to_json(build_manifest(pairs, SplitSpec(), seed)) == manifest_to_json(
            build_manifest(pairs, SplitSpec(), seed)
        )
    checks["manifest"] = 10

    # CSV and JSON round trips
    for _ in range(100):
        records = _random_records(rng, int(rng.integers(1, 10)))
        assert read_runs(write_runs(records)) == records
        result = rank_stage(records, str(rng.choice(["ordinal", "average", "competition"])))
        assert result_from_json(render_report(result, "json")) == result
    checks["roundtrip"] = 100

    criterion(" ".join(f"{k}={v}" for k, v in checks.items()))


def _cli(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = main(list(argv), out, err)
    return code, out.getvalue(), err.getvalue()


def test_criterion_8_end_to_end(criterion, tmp_path):
    code, _, _ = _cli("fixtures", "--out", str(tmp_path))
    assert code == 0
    code, out1, _ = _cli("rank", "--runs", str(tmp_path / "table1_runs.csv"))
    assert code == 0
    stage1 = out1.splitlines()[2].split()[0]
    code, out2, _ = _cli("rank", "--runs", str(tmp_path / "table2_runs.csv"), "--format", "json")
    assert code == 0
    stage2 = json.loads(out2)["winner"]
    code, out3, _ = _cli("verify", "--file", str(tmp_path / "verification.csv"), "--tolerance", "0.05")
    verdict = out3.splitlines()[-1]
    criterion(f"stage1={stage1} stage2={stage2} verify={verdict}")
    assert (stage1, stage2, verdict, code) == ("Xception", "Adam, MSE", "PASS", 0)
