#!/usr/bin/env python3
"""Pretrained CLAP helper for promptfx's "pretrained" embedding backend.

Reads one JSON request per line on stdin and writes one JSON reply per line:

  {"op": "describe"}                    -> {"name", "dimension", "sample_rate", "max_seconds", "differentiable_audio"}
  {"op": "text", "text": s}             -> {"embedding": [...]}
  {"op": "audio", "samples": [...]}     -> {"embedding": [...]}
  {"op": "audio_vjp", "samples": [...], "grad": [...]}
                                        -> {"grad_samples": [...]}

Failures are reported as {"error": message}. Embeddings are returned
unnormalized; the caller normalizes. Audio arrives at 48 kHz, mono, already
cropped to at most max_seconds.

The log-mel front end is re-implemented in torch (same filters, window, hop
and dB scaling as the Hugging Face feature extractor) so gradients reach the
waveform.
"""

import argparse
import json
import sys

import numpy as np
import torch


def load(checkpoint, device):
    from transformers import ClapModel, ClapProcessor
    from transformers.audio_utils import mel_filter_bank

    model = ClapModel.from_pretrained(checkpoint).to(device).eval().double()
    processor = ClapProcessor.from_pretrained(checkpoint)
    fe = processor.feature_extractor
    if getattr(fe, "truncation", "rand_trunc") == "fusion":
        mel = mel_filter_bank(
            num_frequency_bins=fe.fft_window_size // 2 + 1,
            num_mel_filters=fe.feature_size,
            min_frequency=fe.frequency_min,
            max_frequency=fe.frequency_max,
            sampling_rate=fe.sampling_rate,
            norm=None,
            mel_scale="htk",
        )
    else:
        mel = mel_filter_bank(
            num_frequency_bins=fe.fft_window_size // 2 + 1,
            num_mel_filters=fe.feature_size,
            min_frequency=fe.frequency_min,
            max_frequency=fe.frequency_max,
            sampling_rate=fe.sampling_rate,
            norm="slaney",
            mel_scale="slaney",
        )
    return model, processor, fe, torch.tensor(mel, dtype=torch.float64, device=device)


class Clap:
    def __init__(self, checkpoint, device):
        self.device = device
        self.model, self.processor, self.fe, self.mel = load(checkpoint, device)
        self.rate = float(self.fe.sampling_rate)
        self.max_len = int(self.fe.nb_max_samples)
        self.window = torch.hann_window(self.fe.fft_window_size, periodic=False, dtype=torch.float64, device=device)
        with torch.no_grad():
            probe = self.text("probe")
        self.dimension = int(probe.shape[-1])

    def describe(self):
        return {
            "name": "pretrained",
            "dimension": self.dimension,
            "sample_rate": self.rate,
            "max_seconds": self.max_len / self.rate,
            "differentiable_audio": True,
        }

    def text(self, text):
        tok = self.processor.tokenizer([text], return_tensors="pt", padding=True).to(self.device)
        return self.model.get_text_features(**tok)[0]

    def features(self, wave):
        # repeat-pad to the model's fixed input length
        n = wave.shape[0]
        if n < self.max_len:
            reps = self.max_len // n
            wave = wave.repeat(reps)
            wave = torch.nn.functional.pad(wave, (0, self.max_len - wave.shape[0]))
        else:
            wave = wave[: self.max_len]
        spec = torch.stft(
            wave,
            n_fft=self.fe.fft_window_size,
            hop_length=self.fe.hop_length,
            window=self.window,
            center=True,
            pad_mode="reflect",
            return_complex=True,
        )
        power = spec.real**2 + spec.imag**2
        mel = self.mel.T @ power
        logmel = 10.0 * torch.log10(torch.clamp(mel, min=1e-10))
        return logmel.T[None, None]

    def audio(self, wave):
        feats = self.features(wave)
        longer = torch.zeros((1, 1), dtype=torch.bool, device=self.device)
        return self.model.get_audio_features(input_features=feats, is_longer=longer)[0]


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--checkpoint", required=True)
    ap.add_argument("--device", default="cpu")
    args = ap.parse_args()

    torch.set_grad_enabled(False)
    try:
        clap = Clap(args.checkpoint, args.device)
    except Exception as e:  # reported on the first request
        clap = None
        load_error = f"cannot load checkpoint {args.checkpoint}: {e}"

    out = sys.stdout
    for line in sys.stdin:
        line = line.strip()
        if not line:
            continue
        try:
            req = json.loads(line)
            if clap is None:
                raise RuntimeError(load_error)
            op = req.get("op")
            if op == "describe":
                reply = clap.describe()
            elif op == "text":
                with torch.no_grad():
                    reply = {"embedding": clap.text(req["text"]).tolist()}
            elif op == "audio":
                wave = torch.tensor(np.asarray(req["samples"], dtype=np.float64), device=clap.device)
                with torch.no_grad():
                    reply = {"embedding": clap.audio(wave).tolist()}
            elif op == "audio_vjp":
                wave = torch.tensor(np.asarray(req["samples"], dtype=np.float64), device=clap.device)
                grad = torch.tensor(np.asarray(req["grad"], dtype=np.float64), device=clap.device)
                with torch.enable_grad():
                    wave.requires_grad_(True)
                    emb = clap.audio(wave)
                    (g,) = torch.autograd.grad(emb, wave, grad_outputs=grad)
                reply = {"grad_samples": g.tolist()}
            else:
                raise ValueError(f"unknown op {op!r}")
        except Exception as e:
            reply = {"error": str(e)}
        out.write(json.dumps(reply) + "\n")
        out.flush()


if __name__ == "__main__":
    main()
