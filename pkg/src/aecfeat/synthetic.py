"""Bundled synthetic benchmark data: classes of filtered noise with
distinct spectral envelopes, written as 3-second 16 kHz wavs plus a
manifest. Used by the demos and the end-to-end acceptance check."""

import os

import numpy as np

from .audio import SAMPLE_RATE, AudioSegment, write_wav
from .manifest import Manifest, ManifestEntry, save_manifest


def _class_envelope(n_bins, centers, width, floor=0.02):
    """Spectral envelope with Gaussian bumps at the given bin centers."""
    k = np.arange(n_bins)
    env = np.full(n_bins, floor)
    for c in centers:
        env = env + np.exp(-0.5 * ((k - c) / width) ** 2)
    return env


def class_envelopes(n_classes, n_bins, n_bumps=2, lo_frac=0.03, hi_frac=0.45,
                    width=None):
    """Distinct spectral envelopes, bump centers spread across the band."""
    lo, hi = int(n_bins * lo_frac), int(n_bins * hi_frac)
    if width is None:
        width = (hi - lo) / (6.0 * n_classes)
    envs = []
    for i in range(n_classes):
        centers = [lo + (hi - lo) * (i + 0.5 + j * n_classes) / (n_classes * n_bumps)
                   for j in range(n_bumps)]
        envs.append(_class_envelope(n_bins, centers, width))
    return envs


def shaped_noise_segment(envelope, n_samples, rng, amplitude=0.25):
    """White noise whose spectrum is shaped by the envelope (per rFFT bin)."""
    white = rng.standard_normal(n_samples)
    spec = np.fft.rfft(white)
    n_bins = len(envelope)
    shape = np.interp(np.linspace(0, n_bins - 1, len(spec)),
                      np.arange(n_bins), envelope)
    shaped = np.fft.irfft(spec * shape, n=n_samples)
    shaped = shaped / np.max(np.abs(shaped)) * amplitude
    return AudioSegment(shaped)


def generate_dataset(out_dir, n_source_classes=8, n_target_classes=4,
                     source_segments_per_class=8, target_train_per_class=20,
                     target_eval_per_class=10, segment_s=3.0, seed=0):
    """Write the synthetic corpus and return its Manifest.

    Source and target classes use different spectral envelopes drawn from
    the same band, so source pre-training is related but not identical to
    the target task.
    """
    os.makedirs(out_dir, exist_ok=True)
    n_samples = int(segment_s * SAMPLE_RATE)
    n_bins = 512
    src_envs = class_envelopes(n_source_classes, n_bins, n_bumps=2)
    # offset target bumps so they do not coincide with any source class
    tgt_envs = class_envelopes(n_target_classes, n_bins, n_bumps=3,
                               lo_frac=0.05, hi_frac=0.48)
    entries = []
    rng = np.random.default_rng(seed)
    for i, env in enumerate(src_envs):
        label = f"src{i:02d}"
        for j in range(source_segments_per_class):
            seg = shaped_noise_segment(env, n_samples, rng)
            path = os.path.join(out_dir, f"{label}_{j:03d}.wav")
            write_wav(path, seg)
            entries.append(ManifestEntry(path, label, "source", "train", "clean"))
    for i, env in enumerate(tgt_envs):
        label = f"tgt{i:02d}"
        for j in range(target_train_per_class + target_eval_per_class):
            seg = shaped_noise_segment(env, n_samples, rng)
            split = "train" if j < target_train_per_class else "eval"
            path = os.path.join(out_dir, f"{label}_{j:03d}.wav")
            write_wav(path, seg)
            entries.append(ManifestEntry(path, label, "target", split, "clean"))
    manifest = Manifest(entries)
    save_manifest(manifest, os.path.join(out_dir, "manifest.csv"))
    return manifest


def generate_noise_wav(out_dir, name="babblelike", duration_s=10.0, seed=99):
    """Long broadband noise wav usable for SNR conditions."""
    os.makedirs(out_dir, exist_ok=True)
    rng = np.random.default_rng(seed)
    env = _class_envelope(512, [40, 120, 260], 80.0, floor=0.1)
    seg = shaped_noise_segment(env, int(duration_s * SAMPLE_RATE), rng)
    path = os.path.join(out_dir, f"{name}.wav")
    write_wav(path, seg)
    return path
