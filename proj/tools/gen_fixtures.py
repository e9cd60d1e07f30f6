#!/usr/bin/env python3
"""Regenerate the reference fixtures in tests/fixtures from scipy and pystoi.

Usage: python3 tools/gen_fixtures.py [out_dir]
"""
import json
import sys
from pathlib import Path

import numpy as np
from scipy.io import wavfile
from scipy.signal import resample_poly, lfilter, butter
from pystoi import stoi


def octave_filter(p, q, rejection_db):
    g = np.gcd(p, q)
    p, q = p // g, q // g
    cutoff = 1.0 / (2 * max(p, q))
    roll_off = cutoff / 10
    half = int(np.ceil((rejection_db - 8) / (28.714 * roll_off)))
    t = np.arange(-half, half + 1)
    ideal = 2 * p * cutoff * np.sinc(2 * cutoff * t)
    if 21 <= rejection_db <= 50:
        beta = 0.5842 * (rejection_db - 21) ** 0.4 + 0.07886 * (rejection_db - 21)
    elif rejection_db > 50:
        beta = 0.1102 * (rejection_db - 8.7)
    else:
        beta = 0.0
    h = np.kaiser(2 * half + 1, beta) * ideal
    return h / np.sum(h)


def speechlike(fs, seconds, seed):
    rng = np.random.default_rng(seed)
    n = int(fs * seconds)
    t = np.arange(n) / fs
    f0 = 140 + 40 * np.sin(2 * np.pi * 0.7 * t)
    phase = 2 * np.pi * np.cumsum(f0) / fs
    x = np.zeros(n)
    for k in range(1, 25):
        if k * 200 > fs / 2:
            break
        x += np.sin(k * phase + rng.uniform(0, 2 * np.pi)) / k
    env = 0.5 * (1 + np.sin(2 * np.pi * 3.5 * t)) ** 2
    env[(t > 0.45) & (t < 0.6)] = 0.0
    x *= env
    return 0.1 * x / np.sqrt(np.mean(x ** 2))


def add_noise(x, snr_db, seed):
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(len(x))
    g = np.sqrt(np.mean(x ** 2) / (np.mean(v ** 2) * 10 ** (snr_db / 10)))
    return x + g * v


def main():
    out = Path(sys.argv[1] if len(sys.argv) > 1 else Path(__file__).parent.parent / "tests" / "fixtures")
    out.mkdir(parents=True, exist_ok=True)

    rng = np.random.default_rng(1234)
    x48 = rng.standard_normal(600)
    x16 = rng.standard_normal(200)
    res = {"x48": x48.tolist(), "x16": x16.tolist(), "cases": []}
    for rej in (60.0, 100.0):
        res["cases"].append({"from": 48000, "to": 16000, "rejection_db": rej,
                             "y": resample_poly(x48, 1, 3, window=octave_filter(1, 3, rej)).tolist()})
        res["cases"].append({"from": 16000, "to": 48000, "rejection_db": rej,
                             "y": resample_poly(x16, 3, 1, window=octave_filter(3, 1, rej)).tolist()})
    (out / "resample.json").write_text(json.dumps(res))

    cases = []
    b, a = butter(4, 0.25)
    for name, fs, snr, filt in (("s16k", 16000, 0.0, False), ("s48k", 48000, 5.0, False),
                                ("s10k", 10000, -5.0, True)):
        clean = speechlike(fs, 1.2, 7).astype(np.float32)
        proc = lfilter(b, a, clean) if filt else clean
        proc = add_noise(proc, snr, 11).astype(np.float32)
        wavfile.write(out / f"{name}_clean.wav", fs, clean)
        wavfile.write(out / f"{name}_proc.wav", fs, proc)
        c64, p64 = clean.astype(np.float64), proc.astype(np.float64)
        cases.append({"clean": f"{name}_clean.wav", "processed": f"{name}_proc.wav", "fs": fs,
                      "stoi": float(stoi(c64, p64, fs, extended=False)),
                      "estoi": float(stoi(c64, p64, fs, extended=True))})
    (out / "stoi.json").write_text(json.dumps({"cases": cases}, indent=1))


if __name__ == "__main__":
    main()
