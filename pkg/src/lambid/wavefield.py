"""Synthetic wavefields, frequency-wavenumber images, and ridge extraction.

Closes the loop in place of measured laser-vibrometer data: a forward
dispersion model drives synthesis of a time-distance field, which the 2DFT
and ridge picker convert back into discrete dispersion observations.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.signal

from .dispersion import (
    DispersionCurve,
    ElasticConstants,
    Mode,
    PlateSpec,
    k_grid_for_fh_band,
    trace_curves,
)

__all__ = [
    "TXField",
    "DispersionImage",
    "ObservationSet",
    "RidgeError",
    "synth_wavefield",
    "two_dft",
    "normalize_energy",
    "ridge_pick",
    "write_txfield",
    "read_txfield",
    "write_observations",
    "read_observations",
]


class RidgeError(RuntimeError):
    """No ridge could be tracked over enough of the requested band."""


@dataclass
class TXField:
    """Time-distance record of surface displacement, samples[n_x, n_t]."""

    samples: np.ndarray
    dt: float
    dx: float

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=float)
        if self.samples.ndim != 2 or min(self.samples.shape) < 2:
            raise ValueError("samples must be 2-D with at least 2x2 entries")
        if self.dt <= 0 or self.dx <= 0:
            raise ValueError("dt and dx must be positive")


@dataclass
class DispersionImage:
    """Magnitude grid over the positive-frequency, positive-wavenumber quadrant."""

    magnitude: np.ndarray  # [n_f, n_k]
    f_axis: np.ndarray  # Hz
    k_axis: np.ndarray  # rad/m
    normalized: bool = False
    zero_rows: np.ndarray | None = None  # flags for all-zero raw rows


@dataclass
class ObservationSet:
    """Mode-tagged (omega_hat, k_hat) points feeding the likelihood."""

    points: list  # (mode_label: str, omega_hat: float, k_hat: float)
    band: tuple  # (fh_min, fh_max) in MHz*mm

    def by_mode(self) -> dict[str, tuple[np.ndarray, np.ndarray]]:
        out: dict[str, tuple[list, list]] = {}
        for mode, om, kk in self.points:
            out.setdefault(mode, ([], []))
            out[mode][0].append(om)
            out[mode][1].append(kk)
        return {
            mode: (np.asarray(oms), np.asarray(kks))
            for mode, (oms, kks) in out.items()
        }

    def __len__(self) -> int:
        return len(self.points)


def _mode_k_of_omega(curve: DispersionCurve):
    """Interpolator k(omega) from a traced branch (omega monotone in k)."""
    om, kk = curve.omega, curve.k
    order = np.argsort(om)
    om, kk = om[order], kk[order]
    return lambda w: np.interp(w, om, kk, left=np.nan, right=np.nan)


def synth_wavefield(
    theta: ElasticConstants,
    plate: PlateSpec,
    geometry: dict,
    excitation: dict,
    noise_rms: float = 0.0,
    seed: int = 0,
    modes: tuple[str, ...] = ("A0", "S0"),
    order: int = 12,
    amplitude: float = 1.0,
) -> TXField:
    """Superpose dispersive propagation of the fundamental modes plus noise.

    Each positive-frequency bin of the excitation spectrum is advanced in x
    with phase exp(i k_mode(omega) x) per included mode; the field is the
    real signal recovered per trace.  geometry: {n_x, dx, n_t, dt};
    excitation: chirp {f_lo, f_hi, duration}.  Deterministic for fixed seed.
    """
    n_x, dx = int(geometry["n_x"]), float(geometry["dx"])
    n_t, dt = int(geometry["n_t"]), float(geometry["dt"])
    f_lo, f_hi = float(excitation["f_lo"]), float(excitation["f_hi"])
    duration = float(excitation["duration"])
    if n_x < 2 or n_t < 2 or dx <= 0 or dt <= 0:
        raise ValueError("geometry must define a positive 2-D grid")
    f_nyq = 0.5 / dt
    if f_hi >= f_nyq:
        raise ValueError(
            f"excitation f_hi={f_hi:.4g} Hz violates temporal Nyquist "
            f"{f_nyq:.4g} Hz (time axis)"
        )

    # excitation spectrum
    t = np.arange(n_t) * dt
    if amplitude == 0.0:
        sig = np.zeros(n_t)
    elif f_lo == f_hi:
        sig = amplitude * np.sin(2 * np.pi * f_lo * t) * (t <= duration)
    else:
        sig = amplitude * scipy.signal.chirp(t, f_lo, duration, f_hi) * (t <= duration)
    spec = np.fft.rfft(sig)
    freqs = np.fft.rfftfreq(n_t, dt)
    omega = 2 * np.pi * freqs

    x = (np.arange(n_x) * dx)[:, None]
    fieldspec = np.zeros((n_x, freqs.size), dtype=complex)
    if amplitude != 0.0:
        # trace curves over a band generously covering the excitation
        fh_max = f_hi * plate.thickness * 1e-3 * 1.05
        fh_min = max(f_lo, 0.02 * f_hi) * plate.thickness * 1e-3 * 0.5
        grid = k_grid_for_fh_band(theta, plate, fh_min, fh_max, n_points=300,
                                  order=order)
        a0, s0 = trace_curves(theta, plate, grid, order=order, method="dense")
        curve_map = {"A0": a0, "S0": s0}
        k_nyq = np.pi / dx
        active = (np.abs(spec) > 1e-12 * np.abs(spec).max()) & (freqs > 0)
        for mode in modes:
            interp = _mode_k_of_omega(curve_map[mode])
            k_of_w = interp(omega)
            usable = active & np.isfinite(k_of_w)
            if np.any(k_of_w[usable] >= k_nyq):
                raise ValueError(
                    f"mode {mode} wavenumber exceeds spatial Nyquist "
                    f"{k_nyq:.4g} rad/m (space axis)"
                )
            # irfft synthesizes with e^{+i w t}; the conjugate pair below
            # yields the forward-travelling real wave Re[S e^{i(k x - w t)}]
            phase = np.exp(-1j * k_of_w[None, usable] * x)
            fieldspec[:, usable] += np.conj(spec[None, usable]) * phase

    samples = np.fft.irfft(fieldspec, n=n_t, axis=1)
    if noise_rms > 0:
        rng = np.random.default_rng(seed)
        samples = samples + rng.normal(0.0, noise_rms, samples.shape)
    return TXField(samples=samples, dt=dt, dx=dx)


def two_dft(field: TXField, window: bool = False) -> DispersionImage:
    """Per-trace peak normalization followed by the 2-D Fourier transform.

    Magnitude is retained over the positive-frequency, positive-wavenumber
    quadrant; a component exp(i(k0 x - w0 t)) lands at (+f0, +k0).  With
    per-trace scaling factors g_x, Parseval holds as
    sum |T|^2 = (n_x / n_t) * sum |g_x * samples|^2 over the full transform
    (asserted below before quadrant truncation).
    """
    samples = field.samples.copy()
    peaks = np.abs(samples).max(axis=1)
    nonzero = peaks > 0
    samples[nonzero] /= peaks[nonzero, None]
    if window:
        samples = samples * np.hanning(samples.shape[1])[None, :]

    # fft over x picks +k; ifft over t picks +f for the e^{-i w t} convention
    full = np.fft.fft(np.fft.ifft(samples, axis=1), axis=0)
    n_x, n_t = samples.shape
    energy_in = np.sum(samples**2) * (n_x / n_t)
    energy_out = np.sum(np.abs(full) ** 2)
    if not np.isclose(energy_in, energy_out, rtol=1e-9, atol=1e-30):
        raise AssertionError("Parseval check failed in two_dft")

    n_k = n_x // 2 + 1
    n_f = n_t // 2 + 1
    magnitude = np.abs(full[:n_k, :n_f]).T  # [n_f, n_k]
    f_axis = np.fft.rfftfreq(n_t, field.dt)
    k_axis = 2 * np.pi * np.fft.rfftfreq(n_x, field.dx)
    return DispersionImage(magnitude=magnitude, f_axis=f_axis, k_axis=k_axis)


def normalize_energy(image: DispersionImage) -> DispersionImage:
    """Divide each frequency row by its sum; all-zero rows are flagged."""
    mag = image.magnitude.copy()
    sums = mag.sum(axis=1)
    zero = sums == 0
    mag[~zero] /= sums[~zero, None]
    return DispersionImage(
        magnitude=mag,
        f_axis=image.f_axis,
        k_axis=image.k_axis,
        normalized=True,
        zero_rows=zero,
    )


def ridge_pick(
    image: DispersionImage,
    band: tuple[float, float],
    plate: PlateSpec,
    n_modes: int = 2,
    min_prominence: float = 0.3,
    max_jump_bins: int = 3,
    min_coverage: float = 0.3,
) -> ObservationSet:
    """Track up to n_modes energy ridges through the banded image rows.

    Per frequency row inside the band, local maxima exceeding
    min_prominence times the row max are candidates.  Ridges are seeded
    from the strongest maxima at the low-frequency edge and grown upward by
    nearest-k association within max_jump_bins.  A0 is the larger-k ridge
    at shared frequencies (lower phase velocity).
    """
    if not image.normalized:
        raise ValueError("ridge_pick requires a normalized image")
    fh = image.f_axis * plate.thickness * 1e-3  # MHz*mm
    rows = np.nonzero((fh >= band[0]) & (fh <= band[1]))[0]
    if rows.size == 0:
        raise ValueError("band does not intersect the image frequency axis")

    def row_maxima(row: np.ndarray) -> np.ndarray:
        if row.max() <= 0:
            return np.array([], dtype=int)
        peaks, _ = scipy.signal.find_peaks(row, height=min_prominence * row.max())
        return peaks

    # seed ridges at the low-frequency edge: first row with enough peaks
    ridges: list[list[tuple[int, int]]] = []  # list of (row_idx, k_idx)
    seeded_at = None
    for ri in rows:
        peaks = row_maxima(image.magnitude[ri])
        if peaks.size >= 1:
            strongest = peaks[np.argsort(image.magnitude[ri][peaks])[::-1]]
            for p in strongest[:n_modes]:
                ridges.append([(ri, int(p))])
            seeded_at = ri
            break
    if seeded_at is None:
        raise RidgeError("no row in the band has a prominent maximum")

    for ri in rows[rows > seeded_at]:
        peaks = row_maxima(image.magnitude[ri])
        if peaks.size == 0:
            continue
        taken: set[int] = set()
        for ridge in ridges:
            last_k = ridge[-1][1]
            cands = [p for p in peaks if p not in taken
                     and abs(p - last_k) <= max_jump_bins]
            if not cands:
                continue
            best = min(cands, key=lambda p: abs(p - last_k))
            ridge.append((ri, int(best)))
            taken.add(best)
        # start additional ridges from strong unclaimed peaks
        if len(ridges) < n_modes:
            for p in peaks:
                if p not in taken:
                    ridges.append([(ri, int(p))])
                    taken.add(int(p))
                    if len(ridges) >= n_modes:
                        break

    ridges.sort(key=len, reverse=True)
    ridges = ridges[:n_modes]
    need = min_coverage * rows.size
    for i, ridge in enumerate(ridges):
        if len(ridge) < need:
            raise RidgeError(
                f"ridge {i} only trackable over {len(ridge)}/{rows.size} "
                "band rows"
            )
    if len(ridges) < n_modes:
        raise RidgeError(f"only {len(ridges)} of {n_modes} ridges found")

    # label: at shared frequencies A0 has the larger k (lower c_p)
    mean_k = [np.mean([kx for _, kx in ridge]) for ridge in ridges]
    ordering = np.argsort(mean_k)[::-1]  # descending k
    labels = [Mode.A0.value, Mode.S0.value]
    points = []
    for rank, ridge_idx in enumerate(ordering):
        label = labels[rank] if rank < len(labels) else f"M{rank}"
        pts = sorted(
            ((image.k_axis[kx], 2 * np.pi * image.f_axis[ri])
             for ri, kx in ridges[ridge_idx]),
            key=lambda p: p[0],
        )
        last_k = -np.inf
        for k_hat, om_hat in pts:
            if k_hat <= last_k:  # enforce strictly increasing k per mode
                continue
            last_k = k_hat
            points.append((label, float(om_hat), float(k_hat)))
    return ObservationSet(points=points, band=tuple(band))


# --- file formats -----------------------------------------------------------

def write_txfield(path_prefix, field: TXField) -> None:
    """Binary matrix (.npy) plus JSON sidecar header (.json)."""
    np.save(f"{path_prefix}.npy", field.samples)
    header = {
        "n_x": field.samples.shape[0],
        "n_t": field.samples.shape[1],
        "dx": field.dx,
        "dt": field.dt,
        "units": {"samples": "arbitrary", "dx": "m", "dt": "s"},
    }
    with open(f"{path_prefix}.json", "w") as fh:
        json.dump(header, fh, indent=1, sort_keys=True)


def read_txfield(path_prefix) -> TXField:
    samples = np.load(f"{path_prefix}.npy")
    with open(f"{path_prefix}.json") as fh:
        header = json.load(fh)
    if samples.shape != (header["n_x"], header["n_t"]):
        raise ValueError("sidecar header does not match matrix shape")
    return TXField(samples=samples, dt=header["dt"], dx=header["dx"])


_OBS_HEADER = "mode,omega_rad_s,k_rad_m"


def write_observations(path, obs: ObservationSet) -> None:
    """Delimited-text observation export consumed by the identifier."""
    with open(path, "w") as fh:
        fh.write(f"# band_mhz_mm,{obs.band[0]:.12g},{obs.band[1]:.12g}\n")
        fh.write(_OBS_HEADER + "\n")
        for mode, om, kk in obs.points:
            fh.write(f"{mode},{om:.12g},{kk:.12g}\n")


def read_observations(path) -> ObservationSet:
    points = []
    band = (0.0, np.inf)
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                parts = line.lstrip("# ").split(",")
                if parts[0] == "band_mhz_mm":
                    band = (float(parts[1]), float(parts[2]))
                continue
            if line == _OBS_HEADER:
                continue
            mode, om, kk = line.split(",")
            points.append((mode, float(om), float(kk)))
    if not points:
        raise ValueError(f"no observations found in {path}")
    return ObservationSet(points=points, band=band)
