import numpy as np
import pytest

from sfpa import SeedSpec, noise_sv_distributions
from sfpa.simlab import (
    HETERO_ROW_BLOCKS,
    column_mean_square_mixture,
    homogenization_demo,
    profile_feature_sample_grid,
    profile_homogeneous,
    profile_row_blocks,
    row_variance_mixture,
    run_sweep,
)


def test_profile_homogeneous():
    t = profile_homogeneous(4, 3, 2.0)
    assert t.shape == (4, 3)
    assert np.allclose(t**2, 2.0)


def test_profile_row_blocks_counts():
    t = profile_row_blocks(10, 4, ((0.9, 0.4), (0.1, 1.0)))
    assert np.allclose(t[:9] ** 2, 0.4)
    assert np.allclose(t[9:] ** 2, 1.0)
    with pytest.raises(ValueError):
        profile_row_blocks(10, 4, ((0.5, 0.4), (0.1, 1.0)))  # fractions != 1
    with pytest.raises(ValueError):
        profile_row_blocks(10, 4, ((0.5, -0.4), (0.5, 1.0)))


def test_profile_grid_is_column_homogenized():
    t = profile_feature_sample_grid(500, 300)
    col_ms = np.mean(t**2, axis=0)
    # exact up to one ulp from the sqrt/square round trip
    assert np.allclose(col_ms, 1.0, rtol=0, atol=1e-15)
    # heterogeneous across samples: first half vs second half differ
    assert t[0, 0] ** 2 == pytest.approx(0.5)
    assert t[-1, 0] ** 2 == pytest.approx(1.5)
    assert t[0, -1] ** 2 == pytest.approx(1.0)


def test_mixtures_from_profiles():
    t = profile_row_blocks(10, 4, ((0.5, 0.1), (0.5, 0.9)))
    h_row = row_variance_mixture(t)
    assert np.allclose(h_row.atoms, [0.1, 0.9])
    assert np.allclose(h_row.weights, [0.5, 0.5])
    h_col = column_mean_square_mixture(t)
    assert len(h_col.atoms) == 1
    assert h_col.atoms[0] == pytest.approx(0.5)
    with pytest.raises(ValueError):
        row_variance_mixture(profile_feature_sample_grid(10, 10))  # not row-constant


def test_run_sweep_shapes_and_determinism():
    seed = SeedSpec(7)
    kwargs = dict(runs=3, theta_grid=[0.0, 4.0], n=40, p=24, trials=5)
    sweep1 = run_sweep(seed, **kwargs)
    sweep2 = run_sweep(seed, **kwargs)
    assert sweep1.mean_k.shape == (4, 2)
    assert np.array_equal(sweep1.mean_k, sweep2.mean_k)
    assert np.array_equal(sweep1.freq, sweep2.freq)
    # histograms count every run
    assert np.all(sweep1.freq.sum(axis=2) == 3)
    # strong spike at theta=4 in a small matrix: signflip finds it on average
    assert sweep1.mean_for("signflip", "pairwise")[1] >= 1.0
    # dominance is checked internally; also visible in the means
    assert np.all(
        sweep1.mean_for("signflip", "upper_edge")
        <= sweep1.mean_for("signflip", "pairwise")
    )


def test_run_sweep_worker_invariance():
    seed = SeedSpec(8)
    kwargs = dict(runs=2, theta_grid=[2.0], n=30, p=20, trials=4)
    a = run_sweep(seed, workers=1, **kwargs)
    b = run_sweep(seed, workers=3, **kwargs)
    assert np.array_equal(a.mean_k, b.mean_k)
    assert np.array_equal(a.freq, b.freq)


def test_sweep_serialization(tmp_path):
    sweep = run_sweep(SeedSpec(9), runs=2, theta_grid=[1.0], n=20, p=12, trials=3)
    csv_path = tmp_path / "sweep.csv"
    json_path = tmp_path / "sweep.json"
    sweep.to_csv(csv_path)
    sweep.to_json(json_path)
    lines = csv_path.read_text().splitlines()
    assert lines[0].startswith("theta,method,rule,mean_k,freq_0")
    assert len(lines) == 1 + 4  # header + one row per combo
    assert json_path.read_text().startswith("{")


def test_noise_sv_sample_counts_and_homogeneous_agreement():
    samples = noise_sv_distributions(SeedSpec(10), trials=30, n=150, p=90)
    assert len(samples.original) == 30
    assert len(samples.permuted) == 30
    assert len(samples.signflipped) == 30

    def stderr(x):
        return x.std(ddof=1) / np.sqrt(len(x))

    for arm in (samples.permuted, samples.signflipped):
        gap = abs(arm.mean() - samples.original.mean())
        assert gap <= 3.0 * np.sqrt(stderr(arm) ** 2 + stderr(samples.original) ** 2)


def test_noise_sv_heterogeneous_bias():
    profile = profile_row_blocks(200, 120, HETERO_ROW_BLOCKS)
    samples = noise_sv_distributions(SeedSpec(11), trials=40, profile=profile, n=200, p=120)
    # permutation homogenizes and shrinks the leading noise value
    assert samples.permuted.mean() < samples.original.mean()
    # signflips track the original closely
    assert abs(samples.signflipped.mean() - samples.original.mean()) < 0.05


def test_noise_sv_halfhalf_profile_bias():
    # half the samples at variance 0.1/n, half at 0.9/n: permutation shrinks
    # the leading noise value sharply, signflips track it
    profile = profile_row_blocks(500, 300, ((0.5, 0.1), (0.5, 0.9)))
    samples = noise_sv_distributions(SeedSpec(14), trials=60, profile=profile)

    def se(x):
        return x.std(ddof=1) / np.sqrt(len(x))

    flip_gap = abs(samples.signflipped.mean() - samples.original.mean())
    assert flip_gap <= 3.0 * np.hypot(se(samples.signflipped), se(samples.original))
    drop = samples.original.mean() - samples.permuted.mean()
    assert drop > 5.0 * np.hypot(se(samples.original), se(samples.permuted))


def test_noise_sv_validation():
    with pytest.raises(ValueError):
        noise_sv_distributions(SeedSpec(12), trials=5)
    with pytest.raises(ValueError):
        noise_sv_distributions(SeedSpec(12), trials=10, profile=np.ones((3, 3)), n=4, p=4)


def test_hetero_grid_selection_behavior():
    # feature/sample grid noise: column averages are homogeneous, so
    # permutation nulls look like plain MP noise and over-select wildly,
    # while signflip stays near the single true factor (desk scale;
    # bands frozen from a 40-run oracle measurement at this size)
    n, p = 250, 150
    profile = profile_feature_sample_grid(n, p)
    sweep = run_sweep(SeedSpec(15), runs=40, theta_grid=[2.0], profile=profile, n=n, p=p)
    sf_pw = sweep.mean_for("signflip", "pairwise")[0]
    sf_ue = sweep.mean_for("signflip", "upper_edge")[0]
    pm_pw = sweep.mean_for("permutation", "pairwise")[0]
    assert 1.0 <= sf_pw <= 1.9
    assert 0.8 <= sf_ue <= 1.2
    assert pm_pw > 1.5
    assert pm_pw > sf_pw


def test_homogenization_demo_small_scale(tmp_path):
    demo = homogenization_demo(
        SeedSpec(13), n=300, p=180, grid=np.linspace(1e-4, 2.2, 300), epsilon=1e-4
    )
    assert demo.ks["signflipped_vs_row_law"] <= 0.12
    assert demo.ks["permuted_vs_permuted_law"] <= 0.12
    assert demo.ks["permuted_vs_row_law"] > demo.ks["permuted_vs_permuted_law"]
    assert np.max(np.abs(demo.row_law.density - demo.permuted_law.density)) > 0.05
    demo.save(tmp_path / "demo")
    assert (tmp_path / "demo" / "row_law.csv").exists()
    assert (tmp_path / "demo" / "summary.json").exists()
    assert (tmp_path / "demo" / "esd_permuted.csv").exists()
