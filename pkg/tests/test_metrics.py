"""Metric definitions against hand-computed values plus their symmetry,
invariance and normalization properties."""

import numpy as np
import pytest
from scipy.stats import spearmanr

from palign import MetricReport, cmae, make_report, mlre, mlre_avg, ncmae
from palign.metrics import normalize_columns


def test_cmae_identical_is_zero():
    z = np.array([[1.0, 2.0], [3.0, 4.0]])
    assert cmae(z, z) == 0.0


def test_cmae_single_distance():
    assert cmae(np.array([[0.0]]), np.array([[3.0]])) == 3.0


def test_cmae_hand_norms():
    z1 = np.zeros((2, 2))
    z2 = np.array([[3.0, 0.0], [4.0, 0.0]])
    assert cmae(z1, z2) == pytest.approx(2.5)


def test_cmae_shape_mismatch():
    with pytest.raises(ValueError):
        cmae(np.ones((2, 2)), np.ones((2, 3)))


def test_cmae_no_samples():
    with pytest.raises(ValueError):
        cmae(np.ones((2, 0)), np.ones((2, 0)))


def test_ncmae_collinear_columns():
    assert ncmae(np.array([[2.0], [0.0]]), np.array([[8.0], [0.0]])) == 0.0


def test_ncmae_orthogonal_units():
    val = ncmae(np.array([[1.0], [0.0]]), np.array([[0.0], [1.0]]))
    assert val == pytest.approx(np.sqrt(2.0))


def test_ncmae_identical():
    z = np.array([[1.0, -2.0], [0.5, 4.0]])
    assert ncmae(z, z) == 0.0


def test_ncmae_zero_columns_stay_zero():
    z1 = np.array([[0.0, 1.0], [0.0, 0.0]])
    z2 = np.array([[0.0, 1.0], [0.0, 0.0]])
    assert ncmae(z1, z2) == 0.0
    out = normalize_columns(z1)
    assert np.array_equal(out[:, 0], np.zeros(2))


def test_mlre_identical_is_zero():
    z = np.array([[1.0, 2.0]])
    assert mlre(z, z) == 0.0


def test_mlre_unit_distances():
    assert mlre(np.array([[0.0, 0.0]]), np.array([[1.0, 1.0]])) == pytest.approx(1.0)


def test_mlre_avg_arithmetic_mean():
    z_true = np.array([[0.0]])
    assert mlre_avg(z_true, [np.array([[2.0]]), np.array([[4.0]])]) == pytest.approx(3.0)


def test_mlre_avg_identical_estimates():
    z = np.array([[1.0, 2.0], [3.0, 4.0]])
    assert mlre_avg(z, [z, z]) == 0.0


def test_mlre_avg_single_modality():
    z_true = np.array([[0.0, 1.0]])
    z_hat = np.array([[2.0, 1.0]])
    assert mlre_avg(z_true, [z_hat]) == mlre(z_true, z_hat)


def test_mlre_avg_empty_list():
    with pytest.raises(ValueError):
        mlre_avg(np.ones((1, 1)), [])


# ---------------------------------------------------------------------------
# properties
# ---------------------------------------------------------------------------

def test_cmae_positive_unless_identical():
    rng = np.random.default_rng(0)
    z1 = rng.standard_normal((3, 10))
    z2 = z1.copy()
    z2[1, 4] += 1e-9
    assert cmae(z1, z2) > 0.0


def test_cmae_symmetric():
    rng = np.random.default_rng(1)
    a = rng.standard_normal((3, 8))
    b = rng.standard_normal((3, 8))
    assert cmae(a, b) == cmae(b, a)


def test_cmae_orthogonal_invariance():
    rng = np.random.default_rng(2)
    a = rng.standard_normal((4, 12))
    b = rng.standard_normal((4, 12))
    q, _ = np.linalg.qr(rng.standard_normal((4, 4)))
    assert cmae(q @ a, q @ b) == pytest.approx(cmae(a, b), rel=1e-12)


def test_ncmae_bounded_by_two():
    rng = np.random.default_rng(3)
    for _ in range(20):
        a = rng.standard_normal((3, 30))
        b = rng.standard_normal((3, 30))
        assert ncmae(a, b) <= 2.0 + 1e-12


def test_ncmae_per_column_scale_invariance():
    rng = np.random.default_rng(4)
    a = rng.standard_normal((3, 15))
    b = rng.standard_normal((3, 15))
    c1 = rng.uniform(0.1, 10.0, 15)
    c2 = rng.uniform(0.1, 10.0, 15)
    assert ncmae(a * c1, b * c2) == pytest.approx(ncmae(a, b), rel=1e-12)


def test_cmae_tracks_cosine_similarity_on_unit_batches():
    # for unit-norm columns, lower mean gap must mean higher mean cosine
    rng = np.random.default_rng(5)
    gaps, cosines = [], []
    for _ in range(200):
        a = normalize_columns(rng.standard_normal((4, 8)))
        b = normalize_columns(rng.standard_normal((4, 8)))
        gaps.append(cmae(a, b))
        cosines.append(float(np.mean(np.sum(a * b, axis=0))))
    rho = spearmanr(gaps, cosines).statistic
    assert rho < -0.9


# ---------------------------------------------------------------------------
# MetricReport
# ---------------------------------------------------------------------------

def test_report_avg_matches_mean():
    rng = np.random.default_rng(6)
    z_true = rng.standard_normal((2, 9))
    z1 = rng.standard_normal((2, 9))
    z2 = rng.standard_normal((2, 9))
    report = make_report(z1, z2, 1.0, z_true)
    assert report.mlre_avg == pytest.approx(np.mean(report.mlre_per_modality), abs=1e-12)
    assert report.n == 9


def test_report_rejects_bad_values():
    with pytest.raises(ValueError):
        MetricReport(cmae=-1.0, ncmae=0.0, residual_frobenius=0.0, n=1)
    with pytest.raises(ValueError):
        MetricReport(cmae=np.nan, ncmae=0.0, residual_frobenius=0.0, n=1)
    with pytest.raises(ValueError):
        MetricReport(cmae=0.0, ncmae=0.0, residual_frobenius=0.0, n=0)


def test_report_csv_round_shape():
    report = MetricReport(cmae=1.5, ncmae=0.25, residual_frobenius=2.0, n=4,
                          mlre_per_modality=(1.0, 3.0), mlre_avg=2.0)
    header = report.csv_header().split(",")
    row = report.csv_row().split(",")
    assert header == ["cmae", "ncmae", "mlre_1", "mlre_2", "mlre_avg",
                      "residual_frobenius", "n"]
    assert len(row) == len(header)
    assert row[0] == "1.5" and row[-1] == "4"


def test_report_without_ground_truth():
    report = MetricReport(cmae=0.5, ncmae=0.1, residual_frobenius=1.0, n=3)
    assert "mlre_per_modality" not in report.to_dict()
    assert "mlre_avg" not in report.to_dict()
    row = report.csv_row().split(",")
    assert row == ["0.5", "0.1", "", "1.0", "3"]
    block = report.format_block()
    assert "CMAE" in block and "samples" in block
