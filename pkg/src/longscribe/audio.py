"""Audio ingestion and DSP: WAV read/write, rational resampling, noise mixing.

All functions are pure; buffers are treated as immutable values and may be
shared freely across worker threads.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass

import numpy as np

from . import _kernels

PIPELINE_SAMPLE_RATE = 16000


class WavFormatError(ValueError):
    """Malformed RIFF/WAVE container (bad magic, truncated chunks, ...)."""


class WavEncodingError(ValueError):
    """Well-formed WAV whose encoding is not 16-bit PCM."""


@dataclass(frozen=True)
class AudioBuffer:
    """Mono PCM audio: float samples in [-1, 1] plus a sample rate in Hz."""

    samples: np.ndarray
    sample_rate: int

    def __post_init__(self):
        if self.sample_rate <= 0:
            raise ValueError(f"sample_rate must be positive, got {self.sample_rate}")
        samples = np.asarray(self.samples, dtype=np.float32)
        if samples.ndim != 1:
            raise ValueError("samples must be one-dimensional (mono)")
        if samples.size and not np.all(np.isfinite(samples)):
            raise ValueError("samples contain non-finite values")
        if samples.size and (samples.min() < -1.0 or samples.max() > 1.0):
            raise ValueError("samples exceed [-1, 1]")
        object.__setattr__(self, "samples", samples)

    @property
    def duration_s(self) -> float:
        return len(self.samples) / self.sample_rate

    def slice_seconds(self, start_s: float, end_s: float) -> "AudioBuffer":
        """Return the samples covering [start_s, end_s) as a new buffer."""
        lo = max(0, int(round(start_s * self.sample_rate)))
        hi = min(len(self.samples), int(round(end_s * self.sample_rate)))
        return AudioBuffer(self.samples[lo:hi], self.sample_rate)


def read_wav(path) -> AudioBuffer:
    """Read a 16-bit PCM WAV file, downmixing multi-channel audio to mono.

    Samples are scaled to [-1, 1) by dividing by 32768.  Raises
    FileNotFoundError for a missing file, WavEncodingError for non-PCM16
    encodings and WavFormatError for a broken container.
    """
    with open(path, "rb") as f:
        data = f.read()
    if len(data) < 12 or data[:4] != b"RIFF" or data[8:12] != b"WAVE":
        raise WavFormatError(f"{path}: not a RIFF/WAVE file")
    fmt = None
    frames = None
    pos = 12
    while pos + 8 <= len(data):
        chunk_id = data[pos : pos + 4]
        (chunk_size,) = struct.unpack_from("<I", data, pos + 4)
        body = data[pos + 8 : pos + 8 + chunk_size]
        if chunk_id == b"fmt ":
            if len(body) < 16:
                raise WavFormatError(f"{path}: truncated fmt chunk")
            fmt = struct.unpack_from("<HHIIHH", body, 0)
        elif chunk_id == b"data":
            if len(body) < chunk_size:
                raise WavFormatError(f"{path}: data chunk larger than file")
            frames = body
        pos += 8 + chunk_size + (chunk_size & 1)
    if fmt is None or frames is None:
        raise WavFormatError(f"{path}: missing fmt or data chunk")
    audio_format, n_channels, sample_rate, _, _, bits = fmt
    if audio_format != 1:
        raise WavEncodingError(f"{path}: unsupported encoding (format code {audio_format}); only PCM is readable")
    if bits != 16:
        raise WavEncodingError(f"{path}: {bits}-bit PCM unsupported; only 16-bit")
    if n_channels < 1:
        raise WavFormatError(f"{path}: channel count {n_channels}")
    raw = np.frombuffer(frames, dtype="<i2")
    if n_channels > 1:
        usable = (len(raw) // n_channels) * n_channels
        raw = raw[:usable].reshape(-1, n_channels).mean(axis=1, dtype=np.float64)
    samples = np.asarray(raw, dtype=np.float64) / 32768.0
    return AudioBuffer(samples.astype(np.float32), int(sample_rate))


def write_wav(path, buffer: AudioBuffer) -> None:
    """Write a mono 16-bit PCM WAV (used by tests and evaluation tooling)."""
    pcm = np.clip(np.rint(buffer.samples.astype(np.float64) * 32768.0), -32768, 32767)
    frames = pcm.astype("<i2").tobytes()
    header = struct.pack(
        "<4sI4s4sIHHIIHH4sI",
        b"RIFF",
        36 + len(frames),
        b"WAVE",
        b"fmt ",
        16,
        1,
        1,
        buffer.sample_rate,
        buffer.sample_rate * 2,
        2,
        16,
        b"data",
        len(frames),
    )
    with open(path, "wb") as f:
        f.write(header + frames)


def _design_lowpass(up: int, down: int) -> np.ndarray:
    """Windowed-sinc prototype for a polyphase up/down resampler.

    Cutoff sits at the tighter of the two Nyquist limits; roughly
    10*max(up, down) taps per phase, Kaiser beta 8.6, unit DC gain, then
    scaled by `up` to compensate zero-stuffing.
    """
    max_ud = max(up, down)
    half = (10 * max_ud * up) // 2
    m = np.arange(-half, half + 1, dtype=np.float64)
    h = np.sinc(m / max_ud) / max_ud
    h *= np.kaiser(len(h), 8.6)
    h /= h.sum()
    return h * up


def stretch(buffer: AudioBuffer, up: int, down: int) -> AudioBuffer:
    """Resample by the rational factor up/down without relabeling the rate.

    The output keeps the input's sample_rate field, so playing it back (or
    feeding it to a recognizer) yields content slowed by up/down and pitched
    down accordingly.  Output length is ceil(len * up / down).
    """
    if up < 1 or down < 1:
        raise ValueError(f"up and down must be >= 1, got {up}/{down}")
    if len(buffer.samples) == 0:
        raise ValueError("cannot stretch an empty buffer")
    g = math.gcd(up, down)
    up //= g
    down //= g
    if up == 1 and down == 1:
        return AudioBuffer(buffer.samples.copy(), buffer.sample_rate)
    out_len = -(-len(buffer.samples) * up // down)
    h = _design_lowpass(up, down)
    delay = (len(h) - 1) // 2
    x = buffer.samples.astype(np.float64)
    y = _kernels.polyphase_filter(x, h, up, down, out_len, delay)
    return AudioBuffer(np.clip(y, -1.0, 1.0).astype(np.float32), buffer.sample_rate)


def resample_to(buffer: AudioBuffer, target_hz: int) -> AudioBuffer:
    """Resample to a new rate (same polyphase core, rate field updated)."""
    if target_hz <= 0:
        raise ValueError(f"target rate must be positive, got {target_hz}")
    if buffer.sample_rate == target_hz:
        return buffer
    if len(buffer.samples) == 0:
        return AudioBuffer(buffer.samples, target_hz)
    g = math.gcd(target_hz, buffer.sample_rate)
    stretched = stretch(buffer, target_hz // g, buffer.sample_rate // g)
    return AudioBuffer(stretched.samples, target_hz)


def rms(samples: np.ndarray) -> float:
    """Root mean square, accumulated in float64."""
    if len(samples) == 0:
        return 0.0
    return float(np.sqrt(np.mean(np.square(samples, dtype=np.float64))))


def noise_gain(signal: AudioBuffer, noise: AudioBuffer, snr_db: float) -> float:
    """Gain applied to `noise` so the mix hits `snr_db` before clipping.

    The noise RMS is measured after tiling/truncating it to the signal's
    length, which is what mix_noise actually adds.
    """
    if signal.sample_rate != noise.sample_rate:
        raise ValueError(
            f"sample-rate mismatch: signal {signal.sample_rate} Hz, noise {noise.sample_rate} Hz"
        )
    if len(signal.samples) == 0:
        raise ValueError("empty signal")
    fitted = np.resize(noise.samples, len(signal.samples))
    noise_rms = rms(fitted)
    if noise_rms == 0.0:
        raise ValueError("noise source is silent (zero RMS)")
    return rms(signal.samples) / (noise_rms * 10.0 ** (snr_db / 20.0))


def mix_noise(signal: AudioBuffer, noise: AudioBuffer, snr_db: float) -> AudioBuffer:
    """Add noise at the requested signal-to-noise ratio, clipping to [-1, 1].

    Noise shorter than the signal is tiled; longer noise is truncated.  The
    signal is left at its original level (no renormalization), so levels the
    recognizer was calibrated on are preserved.
    """
    gain = noise_gain(signal, noise, snr_db)
    fitted = np.resize(noise.samples, len(signal.samples)).astype(np.float64)
    mixed = signal.samples.astype(np.float64) + gain * fitted
    return AudioBuffer(np.clip(mixed, -1.0, 1.0).astype(np.float32), signal.sample_rate)
