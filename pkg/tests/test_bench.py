import json

import pytest

from lievf.bench import bench_distance_kernels, bench_field_eval
from lievf.generators import composed_se3


@pytest.fixture(scope="module")
def small_report():
    return bench_field_eval(N=500, trials=40, workers=(1, 2), curve=composed_se3(500, check_simple=False))


def test_report_fields(small_report):
    r = small_report
    assert 0.0 <= r.fraction_in_search <= 1.0
    assert r.speedup_vs_serial[1] == pytest.approx(1.0, abs=0.1)
    assert all(v > 0 for v in r.speedup_vs_serial.values())
    assert r.bit_identical
    assert r.per_iteration_mean > 0 and r.per_iteration_stddev >= 0
    data = json.loads(r.to_json())
    assert data["N"] == 500
    assert "in s* search" in r.table()


def test_small_curve_rejected():
    with pytest.raises(ValueError):
        bench_field_eval(N=50)


def test_kernel_report():
    k = bench_distance_kernels(400)
    assert k.ratio >= 5.0
    assert k.max_abs_gap <= 1e-9 * 10
    assert k.checksum_timed == k.checksum_untimed
    again = bench_distance_kernels(400)
    assert 0.5 <= again.se3_ops_per_s / k.se3_ops_per_s <= 2.0


def test_zero_trial_kernel_report():
    k = bench_distance_kernels(0)
    assert k.trials == 0 and k.checksum_timed == ""
