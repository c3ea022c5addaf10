"""Dataset preparation: per-class length normalization of the source
corpus (random cuts / reverberant copies to hit a fixed audio budget) and
noisy evaluation conditions at fixed SNRs."""

import logging
import os
import zlib

import numpy as np

from .audio import AudioSegment, convolve_rir, mix_noise, read_wav, synth_rir, write_wav
from .errors import EmptyClass, NoiseTooShort
from .manifest import Manifest, ManifestEntry

logger = logging.getLogger(__name__)


def _class_groups(entries):
    groups = {}
    for e in entries:
        groups.setdefault(e.label, []).append(e)
    return groups


def prepare_source(manifest, out_dir, target_seconds=800.0, rir=None, seed=0):
    """Normalize every source class to roughly `target_seconds` of audio.

    Classes over the budget keep a seeded random contiguous cut per file
    until the budget is reached; classes under it append reverberated
    copies (convolved with `rir`, or a synthetic office response) until at
    or above budget. New wavs are written to out_dir; returns the
    augmented manifest.
    """
    os.makedirs(out_dir, exist_ok=True)
    source_entries = [e for e in manifest.entries if e.domain == "source"]
    if not source_entries:
        raise EmptyClass("manifest has no source-domain entries")
    if rir is None:
        rir = synth_rir(rt60_s=0.7, length_s=0.5, seed=seed)
    rng = np.random.default_rng(seed)
    out_entries = [e for e in manifest.entries if e.domain != "source"]

    for label, entries in sorted(_class_groups(source_entries).items()):
        segs = [read_wav(e.wav_path, label=label) for e in entries]
        total = sum(s.duration_s for s in segs)
        if total >= target_seconds:
            kept = 0.0
            for e, seg in zip(entries, segs):
                if kept >= target_seconds:
                    break
                remaining = target_seconds - kept
                if seg.duration_s <= remaining:
                    out_entries.append(e)
                    kept += seg.duration_s
                else:
                    n = int(remaining * seg.sample_rate)
                    if n < 1:
                        break
                    start = int(rng.integers(0, len(seg) - n + 1))
                    cut = AudioSegment(seg.samples[start : start + n],
                                       label=label)
                    path = os.path.join(out_dir, f"{label}_cut_{kept:.0f}.wav")
                    write_wav(path, cut)
                    out_entries.append(ManifestEntry(path, label, e.domain,
                                                     e.split, e.condition))
                    kept += cut.duration_s
        else:
            out_entries.extend(entries)
            have = total
            i = 0
            while have < target_seconds:
                e = entries[i % len(entries)]
                seg = segs[i % len(entries)]
                aug = convolve_rir(seg, rir)
                path = os.path.join(out_dir, f"{label}_rir_{i}.wav")
                write_wav(path, aug)
                out_entries.append(ManifestEntry(path, label, e.domain,
                                                 e.split, e.condition))
                have += aug.duration_s
                i += 1
    return Manifest(out_entries)


def prepare_conditions(manifest, noise_paths, out_dir, snrs=(5, 10, 15), seed=0):
    """Create one noisy condition per (noise, SNR) for target evaluation
    segments; clean entries pass through unchanged."""
    os.makedirs(out_dir, exist_ok=True)
    noises = {os.path.splitext(os.path.basename(p))[0]: read_wav(p)
              for p in noise_paths}
    out_entries = list(manifest.entries)
    eval_entries = [e for e in manifest.entries
                    if e.domain == "target" and e.split == "eval"
                    and e.condition == "clean"]
    for noise_name, noise in sorted(noises.items()):
        for snr in snrs:
            tag = f"{noise_name}_{snr}dB"
            for i, e in enumerate(eval_entries):
                seg = read_wav(e.wav_path, label=e.label)
                if len(noise) < len(seg):
                    raise NoiseTooShort(
                        f"noise {noise_name} ({len(noise)} samples) shorter "
                        f"than {e.wav_path} ({len(seg)})"
                    )
                tag_id = zlib.crc32(tag.encode()) & 0xFFFF
                mixed = mix_noise(seg, noise, snr,
                                  seed=int(np.random.SeedSequence(
                                      [seed, tag_id, i]).generate_state(1)[0]))
                path = os.path.join(out_dir, f"{tag}_{i:04d}.wav")
                write_wav(path, mixed)
                out_entries.append(ManifestEntry(path, e.label, e.domain,
                                                 e.split, tag))
    return Manifest(out_entries)
