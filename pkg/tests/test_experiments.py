import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ohmlab.errors import PreconditionError
from ohmlab.experiments import (
    CSV_HEADER,
    ExperimentConfig,
    ReplicaStats,
    RowAborted,
    _collect,
    map_replicas,
    point_box,
    rows_to_csv,
    rows_to_json,
    run_averaged_influence,
    run_box_energy,
    run_left_right,
    run_p_scaling,
    run_point_to_point,
    run_shape,
    run_tail,
    tail_to_csv,
    target_offset,
    unit_sensitivity,
    wilson_interval,
)

finite = st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False)


def central(xs, k):
    m = math.fsum(xs) / len(xs)
    return math.fsum((x - m) ** k for x in xs)


@settings(max_examples=100)
@given(st.lists(finite, min_size=2, max_size=60))
def test_streaming_matches_two_pass(xs):
    s = ReplicaStats.from_values(xs)
    scale = max(1.0, max(abs(x) for x in xs))
    assert s.mean == pytest.approx(math.fsum(xs) / len(xs), abs=1e-12 * scale)
    assert s.variance == pytest.approx(central(xs, 2) / (len(xs) - 1), rel=1e-9, abs=1e-12 * scale**2)
    assert s.m3 == pytest.approx(central(xs, 3), rel=1e-7, abs=1e-9 * scale**3 * len(xs))
    assert s.m4 == pytest.approx(central(xs, 4), rel=1e-7, abs=1e-9 * scale**4 * len(xs))


@settings(max_examples=100)
@given(st.lists(finite, min_size=2, max_size=60), st.integers(1, 59))
def test_merge_equals_sequential(xs, cut):
    cut = min(cut, len(xs) - 1)
    a = ReplicaStats.from_values(xs[:cut])
    b = ReplicaStats.from_values(xs[cut:])
    whole = ReplicaStats.from_values(xs)
    merged = a.merge(b)
    scale = max(1.0, max(abs(x) for x in xs)) ** 2 * len(xs)
    assert merged.count == whole.count
    assert merged.m2 == pytest.approx(whole.m2, rel=1e-9, abs=1e-12 * scale)
    assert (merged.min, merged.max) == (min(xs), max(xs))


def test_merge_with_empty():
    s = ReplicaStats.from_values([1.0, 2.0])
    assert ReplicaStats().merge(s).mean == 1.5
    assert s.merge(ReplicaStats()).count == 2


def test_intervals():
    rng = np.random.default_rng(0)
    s = ReplicaStats.from_values(rng.normal(3.0, 2.0, 4000))
    lo, hi = s.mean_ci()
    assert lo < 3.0 < hi
    vlo, vhi = s.variance_ci()
    assert vlo < 4.0 < vhi


def test_wilson_reference_values():
    lo, hi = wilson_interval(0, 100)
    assert lo == 0.0 and hi == pytest.approx(0.03699, abs=1e-4)
    lo, hi = wilson_interval(50, 100)
    assert lo == pytest.approx(0.4038, abs=1e-4) and hi == pytest.approx(0.5962, abs=1e-4)


def test_config_validation():
    with pytest.raises(PreconditionError):
        ExperimentConfig("nope")
    with pytest.raises(PreconditionError):
        ExperimentConfig("p2p", replicas=1)
    with pytest.raises(PreconditionError):
        ExperimentConfig("p2p", distribution="uniform:0,1")
    with pytest.raises(PreconditionError):
        ExperimentConfig("p2p", buffer_factor=0.1)


def test_geometry_helpers():
    assert target_offset(2, 5) == (5, 0)
    assert target_offset(3, 7, "diagonal") == (3, 2, 2)
    net = point_box(2, (4, 0), 2)
    assert net.coords.min(axis=0).tolist() == [-2, -2] and net.coords.max(axis=0).tolist() == [6, 2]


def test_unit_sensitivity_shrinks_with_buffer():
    _, _, s_small = unit_sensitivity(2, (1, 0), 2)
    _, _, s_large = unit_sensitivity(2, (1, 0), 8)
    assert s_large < s_small


def test_failed_replicas():
    def fn(k):
        if k % 10 == 0:
            raise ArithmeticError("boom")
        return float(k)

    res = map_replicas(fn, 100, threads=1)
    with pytest.raises(RowAborted):
        _collect(res, "row")
    ok, failures = _collect(map_replicas(lambda k: 1.0, 100), "row")
    assert failures == 0 and len(ok) == 100


def test_one_failure_in_200_is_tolerated():
    def fn(k):
        if k == 7:
            raise ArithmeticError("boom")
        return 1.0

    vals, failures = _collect(map_replicas(fn, 200), "row")
    assert failures == 1 and len(vals) == 199


def test_point_to_point_rows_and_determinism():
    cfg = ExperimentConfig("p2p", scales=[2, 4], replicas=12, master_seed=5)
    rows = run_point_to_point(cfg, threads=1)
    assert [r.scale for r in rows] == [2, 4]
    for r in rows:
        assert r.mean_lo <= r.mean <= r.mean_hi
        assert r.extra["comparison_violations"] == 0
    csv_text = rows_to_csv(rows)
    assert csv_text.splitlines()[0] == ",".join(CSV_HEADER)
    assert rows_to_csv(run_point_to_point(cfg, threads=3)) == csv_text
    other = ExperimentConfig("p2p", scales=[2, 4], replicas=12, master_seed=6)
    assert rows_to_csv(run_point_to_point(other)) != csv_text
    assert '"rows"' in rows_to_json(rows, cfg)


def test_rows_keyed_by_scale():
    """A row does not change when other scales are added to the campaign."""
    one = run_point_to_point(ExperimentConfig("p2p", scales=[4], replicas=8))
    two = run_point_to_point(ExperimentConfig("p2p", scales=[2, 4], replicas=8))
    assert one[0].mean == two[1].mean


def test_left_right_constant_environment():
    rows = run_left_right(ExperimentConfig("leftright", scales=[2, 4], replicas=4, distribution="const:1"))
    for r in rows:
        assert r.mean == pytest.approx(r.scale / (r.scale + 1), rel=1e-9)
        assert r.var == pytest.approx(0.0, abs=1e-20)
    assert "variance_trend" not in rows[0].extra


def test_left_right_hammersley_sandwich():
    rows = run_left_right(ExperimentConfig("leftright", scales=[6], replicas=30))
    r = rows[0]
    assert r.extra["hammersley_lo"] == pytest.approx(4 / 3)
    assert r.extra["comparison_violations"] == 0


def test_tail():
    with pytest.raises(PreconditionError):
        run_tail(ExperimentConfig("tail", replicas=10), 4, [0.5])
    rows = run_tail(ExperimentConfig("tail", replicas=1000), 4, [0.0, 0.2, 5.0])
    assert rows[0].probability > rows[1].probability >= rows[2].probability == 0.0
    assert all(r.lo <= r.probability <= r.hi for r in rows)
    assert tail_to_csv(rows).startswith("t,threshold,probability")


def test_shape():
    res = run_shape(ExperimentConfig("shape", scales=[3], replicas=5), [0.5, 1.0, 5.0])
    assert res.inclusion.shape[0] == 3
    assert res.sandwich_ok.all()
    # larger level, larger ball
    assert all(len(b[0]) <= len(b[1]) <= len(b[2]) for b in res.balls)
    assert res.touches_boundary[:, 2].all()
    assert res.to_csv().startswith("level,x0,x1,frequency")


def test_p_scaling():
    with pytest.raises(PreconditionError):
        run_p_scaling(ExperimentConfig("pscaling", scales=[2]))
    rows = run_p_scaling(ExperimentConfig("pscaling", scales=[2, 4], replicas=3, p=3.0))
    assert all(r.reference == 1.0 and r.mean > 0 for r in rows)


def test_box_energy_small():
    rep = run_box_energy(ExperimentConfig("boxenergy", replicas=10), 4, 2, side=10)
    assert rep.violations == 0 and rep.max_energy <= rep.bound
    assert rep.averaged_violations == 0


def test_averaged_influence_small():
    rep = run_averaged_influence(ExperimentConfig("avginfluence", replicas=8), 4, 2, sample_edges=3)
    assert len(rep.l1) == 3 and all(x >= 0 for x in rep.l1)
    same = run_averaged_influence(ExperimentConfig("avginfluence", replicas=8), 4, 2, sample_edges=rep.edges, threads=2)
    assert same.l1 == rep.l1
