import numpy as np
import pytest

from lambid.dispersion import k_grid_for_fh_band, trace_curves
from lambid.wavefield import (DispersionImage, ObservationSet, RidgeError,
                              TXField, normalize_energy, read_observations,
                              read_txfield, ridge_pick, synth_wavefield,
                              two_dft, write_observations, write_txfield)

GEOMETRY = dict(n_x=1024, dx=0.3e-3, n_t=4096, dt=0.2e-6)
EXCITATION = dict(f_lo=0.05e6, f_hi=2.1e6, duration=0.3e-3)


def _plane_wave_field(f0, k0, n_t=512, n_x=256, dt=1e-6, dx=1e-3):
    t = np.arange(n_t) * dt
    x = np.arange(n_x) * dx
    field = np.cos(2 * np.pi * (k0 / (2 * np.pi) * 0) + 0)  # placeholder
    tt, xx = np.meshgrid(t, x, indexing="ij")
    field = np.cos(2 * np.pi * f0 * tt - k0 * xx)
    return TXField(samples=field, dt=dt, dx=dx)


class TestTwoDft:
    def test_plane_wave_lands_in_positive_quadrant(self):
        f0, k0 = 50e3, 800.0  # on-bin: f0 = 25.6 bins? choose exact bins
        n_t, n_x, dt, dx = 512, 256, 1e-6, 1e-3
        f0 = 20 / (n_t * dt)          # exactly bin 20
        k0 = 2 * np.pi * 10 / (n_x * dx)  # exactly bin 10
        field = _plane_wave_field(f0, k0, n_t, n_x, dt, dx)
        img = two_dft(field)
        i, j = np.unravel_index(np.argmax(img.magnitude), img.magnitude.shape)
        f_bin = np.argmin(np.abs(img.f_axis - f0))
        k_bin = np.argmin(np.abs(img.k_axis - k0))
        assert (i, j) == (f_bin, k_bin)

    def test_axes_units(self):
        field = _plane_wave_field(30e3, 500.0)
        img = two_dft(field)
        assert img.f_axis[0] == 0.0 and img.k_axis[0] == 0.0
        assert np.all(np.diff(img.f_axis) > 0)
        assert img.magnitude.shape == (img.f_axis.size, img.k_axis.size)

    def test_window_flag_changes_spectrum(self):
        field = _plane_wave_field(30e3, 500.0)
        a = two_dft(field, window=False)
        b = two_dft(field, window=True)
        assert not np.allclose(a.magnitude, b.magnitude)


class TestNormalize:
    def test_rows_sum_to_one(self):
        field = _plane_wave_field(30e3, 500.0)
        img = normalize_energy(two_dft(field))
        sums = img.magnitude.sum(axis=1)
        nonzero = sums > 0
        assert np.allclose(sums[nonzero], 1.0)
        assert img.normalized

    def test_zero_row_flagged_and_unchanged(self):
        mag = np.zeros((4, 8))
        mag[1] = np.arange(8.0)
        img = DispersionImage(magnitude=mag, f_axis=np.arange(4.0),
                              k_axis=np.arange(8.0), normalized=False,
                              zero_rows=None)
        out = normalize_energy(img)
        assert out.zero_rows[0] and not out.zero_rows[1]
        assert np.allclose(out.magnitude[0], 0.0)


class TestRidgePick:
    def test_flat_image_raises(self, plate):
        img = normalize_energy(
            DispersionImage(magnitude=np.ones((64, 64)),
                            f_axis=np.linspace(0, 2e6, 64),
                            k_axis=np.linspace(0, 4000, 64),
                            normalized=False, zero_rows=None))
        with pytest.raises(RidgeError):
            ridge_pick(img, band=(0.2, 4.0), plate=plate)

    def test_unnormalized_image_rejected(self, plate):
        img = DispersionImage(magnitude=np.ones((8, 8)),
                              f_axis=np.linspace(0, 2e6, 8),
                              k_axis=np.linspace(0, 4000, 8),
                              normalized=False, zero_rows=None)
        with pytest.raises(ValueError):
            ridge_pick(img, band=(0.2, 4.0), plate=plate)

    def test_recovers_synthetic_ridges(self, gfrp, plate):
        field = synth_wavefield(gfrp, plate, GEOMETRY, EXCITATION,
                                noise_rms=0.0, seed=1)
        obs = ridge_pick(normalize_energy(two_dft(field)), band=(0.2, 4.098),
                         plate=plate)
        modes = obs.by_mode()
        assert set(modes) == {"A0", "S0"}
        # A0 is slower: larger k at equal omega; compare mode-mean slopes
        for mode, (oms, ks) in modes.items():
            assert np.all(np.diff(np.sort(ks)) >= 0)
            assert oms.size > 20


class TestSynth:
    def test_round_trip_accuracy(self, gfrp, plate):
        field = synth_wavefield(gfrp, plate, GEOMETRY, EXCITATION,
                                noise_rms=0.01, seed=7)
        obs = ridge_pick(normalize_energy(two_dft(field)), band=(0.2, 4.098),
                         plate=plate)
        k_grid = k_grid_for_fh_band(gfrp, plate, 0.2, 4.098, n_points=400,
                                    order=12)
        a0, _ = trace_curves(gfrp, plate, k_grid, order=12, method="dense")
        oms, ks = obs.by_mode()["A0"]
        dk_bin = 2 * np.pi / (GEOMETRY["n_x"] * GEOMETRY["dx"])
        k_true = np.interp(oms, a0.omega, a0.k)
        med = np.median(np.abs(ks - k_true)) / dk_bin
        assert med <= 1.0

    def test_reproducible_for_seed(self, gfrp, plate):
        small = dict(n_x=64, dx=1e-3, n_t=256, dt=1e-6)
        exc = dict(f_lo=20e3, f_hi=300e3, duration=1e-4)
        a = synth_wavefield(gfrp, plate, small, exc, noise_rms=0.05, seed=3)
        b = synth_wavefield(gfrp, plate, small, exc, noise_rms=0.05, seed=3)
        assert np.array_equal(a.samples, b.samples)

    def test_nyquist_violation_names_axis(self, gfrp, plate):
        bad = dict(n_x=64, dx=1e-3, n_t=256, dt=1e-3)  # temporal undersampling
        exc = dict(f_lo=20e3, f_hi=900e3, duration=1e-4)
        with pytest.raises(ValueError, match="[Nn]yquist|time|frequency"):
            synth_wavefield(gfrp, plate, bad, exc)


class TestIO:
    def test_txfield_round_trip(self, gfrp, plate, tmp_path):
        small = dict(n_x=32, dx=1e-3, n_t=128, dt=1e-6)
        exc = dict(f_lo=20e3, f_hi=300e3, duration=5e-5)
        field = synth_wavefield(gfrp, plate, small, exc, seed=5)
        prefix = tmp_path / "wavefield"
        write_txfield(prefix, field)
        back = read_txfield(prefix)
        assert np.array_equal(back.samples, field.samples)
        assert back.dt == field.dt and back.dx == field.dx

    def test_observations_round_trip(self, tmp_path):
        obs = ObservationSet(points=[("A0", 1.5e5, 900.0), ("S0", 2e5, 400.0)],
                             band=(0.2, 4.0))
        path = tmp_path / "obs.csv"
        write_observations(path, obs)
        back = read_observations(path)
        assert back.band == obs.band
        assert back.points == obs.points
