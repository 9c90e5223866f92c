"""DAN, Conv-TasNet and TD-DAN models built on the autodiff engine.

Internally representations are channel-first ``(C, T)`` tensors so that they
feed straight into :func:`conv1d`; embeddings of the speaker-encoding stream
are ``(T, C, D)`` to match the (T, C) mask layout.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..autodiff import (
    Parameter, Tensor, abs_, conv1d, conv_transpose1d, getitem, mul, relu, reshape, stack,
    transpose, uniform_init,
)
from ..errors import EmptySpeaker, InvalidArgument, UnsupportedCondition
from ..masks import ibm_tf, speech_presence
from ..transforms import (
    ComplexSpectrogram, build_stacked_stft_kernel, encode, frame_padding, hann, istft, lps, stft,
)
from .attractors import (
    concentration_loss, discrimination_loss, kmeans_attractors, oracle_attractors, sds_masks,
    ses_masks,
)
from .config import LossWeights, ModelConfig, default_weights
from .losses import recon_loss, si_sdr_tensor, upit_loss
from .module import Module
from .tcn import TCN


def unit_rms_scale(x):
    rms = float(np.sqrt(np.mean(np.square(x))))
    return 1.0 / rms if rms > 0 else 1.0


class FreeEncoder(Module):
    """Learned 1-D analysis kernel, (C, 1, N) applied at stride ``hop``."""

    def __init__(self, rng, channels, kernel, hop):
        self.kernel = kernel
        self.hop = hop
        self.weight = uniform_init(rng, (channels, 1, kernel), kernel)

    def __call__(self, waveform):
        x = np.asarray(waveform, dtype=np.float64)
        if x.size < self.kernel:
            raise InvalidArgument("waveform shorter than one frame")
        left, right, _ = frame_padding(x.size, self.kernel, self.hop)
        return conv1d(Tensor(np.pad(x, (left, right))[None]), self.weight, stride=self.hop)


class FreeDecoder(Module):
    def __init__(self, rng, channels, kernel, hop):
        self.kernel = kernel
        self.hop = hop
        self.weight = uniform_init(rng, (channels, 1, kernel), channels)

    def __call__(self, rep, length):
        out = conv_transpose1d(rep, self.weight, stride=self.hop)
        left = self.kernel - self.hop
        return getitem(out, (0, slice(left, left + length)))


@dataclass
class SesOutput:
    """Speaker-encoding stream results for one utterance (all in the normalized domain)."""

    emb: Tensor
    mix_mag: Tensor
    presence: np.ndarray
    spec: object = None
    extra: dict = field(default_factory=dict)


class SpeakerEncoder(Module):
    """Encoder + TCN producing D-dim embeddings per (frame, channel) bin."""

    def __init__(self, cfg, tcn_cfg, rng):
        fr = cfg.framing
        self.kind = cfg.encoder
        self.D = cfg.D
        self.top_percent = fr.top_percent
        self.lps_window, self.lps_hop = fr.lps_window, fr.lps_hop
        if self.kind == "lps":
            channels = fr.lps_window // 2 + 1
        elif self.kind == "stft":
            self.kernel = build_stacked_stft_kernel(fr.ses_window, hop=fr.ses_hop)
            channels = fr.ses_window
        else:
            channels = fr.ses_free_channels
            self.free = FreeEncoder(rng, channels, fr.ses_window, fr.ses_hop)
        self.channels = channels
        self.tcn = TCN(channels, tcn_cfg, channels * cfg.D, rng, input_norm=cfg.input_norm)

    def represent(self, waveform):
        """Return ``(tcn_input (C, T), magnitude (T, C), complex spec or None)``."""
        if self.kind == "lps":
            spec = stft(waveform, self.lps_window, self.lps_hop, hann(self.lps_window))
            return Tensor(lps(spec).T), Tensor(np.abs(spec.data)), spec
        if self.kind == "stft":
            rep = encode(waveform, self.kernel).data
            return Tensor(rep.T), Tensor(np.abs(rep)), None
        rep = self.free(waveform)
        return rep, transpose(abs_(rep), None), None

    def target_mags(self, early):
        """(K, T, C) magnitudes of each early-reflection signal under this encoder."""
        if self.kind == "lps":
            w = hann(self.lps_window)
            return Tensor(np.stack([np.abs(stft(d, self.lps_window, self.lps_hop, w).data) for d in early]))
        if self.kind == "stft":
            return Tensor(np.stack([np.abs(encode(d, self.kernel).data) for d in early]))
        return stack([transpose(abs_(self.free(d)), None) for d in early])

    def __call__(self, waveform):
        feats, mag, spec = self.represent(waveform)
        out = self.tcn(feats)
        c, t = self.channels, feats.shape[1]
        emb = transpose(reshape(out, (c, self.D, t)), (2, 0, 1))
        presence = speech_presence(np.square(mag.values), self.top_percent).data
        return SesOutput(emb, mag, presence, spec)


def oracle_selection(target_mag_values, presence):
    """IBM and presence mask, relaxing the presence threshold if a speaker has no bins."""
    ibm = ibm_tf(target_mag_values).data
    v = presence
    for _ in range(8):
        counts = (ibm * v[None]).reshape(ibm.shape[0], -1).sum(1)
        if np.all(counts > 0):
            return ibm, v
        # widen the gate to the bins each speaker dominates
        v = np.maximum(v, (ibm.sum(0) > 0).astype(np.float64))
    raise EmptySpeaker(int(np.argmin(counts)))


class DAN(Module):
    """LPS front end, TCN embeddings, sigmoid attractor masks, iSTFT with mixture phase."""

    def __init__(self, cfg):
        self.cfg = cfg
        rng = np.random.default_rng(cfg.seed)
        self.ses = SpeakerEncoder(cfg, cfg.tcn, rng)

    def loss(self, mixture, early, weights=None):
        weights = weights or default_weights("dan", "lps")
        scale = unit_rms_scale(mixture)
        early = [scale * np.asarray(d) for d in early]
        ses = self.ses(scale * np.asarray(mixture))
        targets = self.ses.target_mags(early)
        ibm, v = oracle_selection(targets.values, ses.presence)
        att = oracle_attractors(ses.emb, ibm, v)
        masks = ses_masks(ses.emb, att)
        lr_ = recon_loss(ses.mix_mag, masks, targets)
        lc = concentration_loss(ses.emb, att, ibm, v)
        ld = discrimination_loss(att, weights.l_d)
        total = lr_ * weights.alpha_r + lc * weights.alpha_c + ld * weights.alpha_d
        diag = {"loss": total.item(), "recon": lr_.item(), "concentration": lc.item(),
                "discrimination": ld.item(), "si_sdr": float("nan")}
        return total, diag

    def separate(self, mixture, num_speakers, attractor_mode="oracle", early=None, seed=0, ses=None):
        """Numpy estimates of each speaker's early reflection (input scale)."""
        scale = unit_rms_scale(mixture)
        ses = ses or self.ses(scale * np.asarray(mixture))
        att = _attractors(self.ses, ses, num_speakers, attractor_mode, early, scale, seed,
                          self.cfg.kmeans_normalize)
        masks = ses_masks(ses.emb, att).values
        spec = ses.spec
        outs = []
        for m in masks:
            s = ComplexSpectrogram(spec.data * m, spec.window_size, spec.hop, spec.window, spec.length)
            outs.append(istft(s) / scale)
        return outs


def _attractors(ses_module, ses, k, mode, early, scale, seed, normalize):
    if mode == "oracle":
        if early is None:
            raise InvalidArgument("oracle attractors need the early-reflection references")
        targets = ses_module.target_mags([scale * np.asarray(d) for d in early])
        ibm, v = oracle_selection(targets.values, ses.presence)
        return oracle_attractors(ses.emb, ibm, v)
    if mode == "kmeans":
        return kmeans_attractors(ses.emb, ses.presence, k, seed, normalize)
    raise InvalidArgument(f"unknown attractor mode {mode!r}")


class ConvTasNet(Module):
    """Free encoder, TCN mask estimator with ReLU masks, free decoder; fixed speaker count."""

    def __init__(self, cfg):
        self.cfg = cfg
        fr = cfg.framing
        rng = np.random.default_rng(cfg.seed)
        self.K = cfg.num_speakers
        self.channels = fr.sds_channels
        self.encoder = FreeEncoder(rng, fr.sds_channels, fr.sds_kernel, fr.sds_hop)
        self.tcn = TCN(fr.sds_channels, cfg.tcn, self.K * fr.sds_channels, rng, input_norm=cfg.input_norm)
        self.decoder = FreeDecoder(rng, fr.sds_channels, fr.sds_kernel, fr.sds_hop)

    def forward(self, mixture, force_masks=None):
        x = np.asarray(mixture, dtype=np.float64)
        rep = self.encoder(x)
        t = rep.shape[1]
        if force_masks is None:
            masks = relu(reshape(self.tcn(rep), (self.K, self.channels, t)))
        else:
            masks = Tensor(np.broadcast_to(force_masks, (self.K, self.channels, t)))
        return [self.decoder(mul(getitem(masks, k), rep), x.size) for k in range(self.K)]

    def loss(self, mixture, early, weights=None):
        if len(early) != self.K:
            raise UnsupportedCondition(f"model separates {self.K} speakers, scene has {len(early)}")
        scale = unit_rms_scale(mixture)
        outs = self.forward(scale * np.asarray(mixture))
        loss, perm = upit_loss(outs, [scale * np.asarray(d) for d in early])
        return loss, {"loss": loss.item(), "si_sdr": -loss.item(), "recon": float("nan"),
                      "concentration": float("nan"), "discrimination": float("nan")}

    def separate(self, mixture, num_speakers, attractor_mode=None, early=None, seed=0):
        if num_speakers != self.K:
            raise UnsupportedCondition(
                f"Conv-TasNet was built for {self.K} speakers, scene has {num_speakers}")
        scale = unit_rms_scale(mixture)
        return [o.values / scale for o in self.forward(scale * np.asarray(mixture))]


@dataclass
class TddanForward:
    ses: SesOutput
    rep: Tensor
    sds_emb: Tensor


class TDDAN(Module):
    """Two streams: the SES yields attractors, the SDS masks and decodes waveforms."""

    def __init__(self, cfg):
        self.cfg = cfg
        fr = cfg.framing
        rng = np.random.default_rng(cfg.seed)
        self.ses = SpeakerEncoder(cfg, cfg.tcn.with_repeats(cfg.ses_repeats), rng)
        self.E = cfg.E
        self.channels = fr.sds_channels
        self.encoder = FreeEncoder(rng, fr.sds_channels, fr.sds_kernel, fr.sds_hop)
        self.sds_tcn = TCN(fr.sds_channels, cfg.tcn.with_repeats(cfg.tcn.R - cfg.ses_repeats),
                           fr.sds_channels * cfg.E, rng, input_norm=cfg.input_norm)
        self.transform = Parameter(np.eye(cfg.E, cfg.D))
        self.decoder = FreeDecoder(rng, fr.sds_channels, fr.sds_kernel, fr.sds_hop)

    def sds_forward(self, mixture):
        rep = self.encoder(mixture)
        t = rep.shape[1]
        emb = reshape(self.sds_tcn(rep), (self.channels, self.E, t))
        return rep, emb

    def sds_masks_and_decode(self, rep, emb, attractors, length):
        masks = sds_masks(emb, attractors, self.transform)
        return [self.decoder(mul(getitem(masks, k), rep), length) for k in range(masks.shape[0])]

    def forward(self, mixture):
        x = np.asarray(mixture, dtype=np.float64)
        rep, emb = self.sds_forward(x)
        return TddanForward(self.ses(x), rep, emb)

    def loss(self, mixture, early, weights=None, attractor_mode="oracle", seed=0):
        return tddan_loss(self, mixture, early, weights or default_weights("tddan", self.cfg.encoder),
                          attractor_mode, seed)

    def separate(self, mixture, num_speakers, attractor_mode="oracle", early=None, seed=0, fwd=None):
        scale = unit_rms_scale(mixture)
        x = scale * np.asarray(mixture, dtype=np.float64)
        fwd = fwd or self.forward(x)
        att = _attractors(self.ses, fwd.ses, num_speakers, attractor_mode, early, scale, seed,
                          self.cfg.kmeans_normalize)
        outs = self.sds_masks_and_decode(fwd.rep, fwd.sds_emb, att, x.size)
        return [o.values / scale for o in outs]


def tddan_loss(model, mixture, early, weights, attractor_mode="oracle", seed=0):
    """-mean SI-SDR + alpha_r L_r + alpha_c L_c + alpha_d L_d with oracle speaker order."""
    scale = unit_rms_scale(mixture)
    x = scale * np.asarray(mixture, dtype=np.float64)
    refs = [scale * np.asarray(d, dtype=np.float64) for d in early]
    fwd = model.forward(x)
    ses = fwd.ses
    targets = model.ses.target_mags(refs)
    ibm, v = oracle_selection(targets.values, ses.presence)
    if attractor_mode == "oracle":
        att = oracle_attractors(ses.emb, ibm, v)
    else:
        att = kmeans_attractors(ses.emb, ses.presence, len(refs), seed, model.cfg.kmeans_normalize)
    masks = ses_masks(ses.emb, att)
    l_r = recon_loss(ses.mix_mag, masks, targets)
    l_c = concentration_loss(ses.emb, att, ibm, v)
    l_d = discrimination_loss(att, weights.l_d)
    outs = model.sds_masks_and_decode(fwd.rep, fwd.sds_emb, att, x.size)
    sdrs = [si_sdr_tensor(o, r) for o, r in zip(outs, refs)]
    l_si = sdrs[0]
    for s in sdrs[1:]:
        l_si = l_si + s
    l_si = l_si * (-1.0 / len(sdrs))
    total = l_si + l_r * weights.alpha_r + l_c * weights.alpha_c + l_d * weights.alpha_d
    diag = {
        "loss": total.item(), "si_sdr": -l_si.item(), "recon": l_r.item(),
        "concentration": l_c.item(), "discrimination": l_d.item(),
    }
    return total, diag


def build_model(cfg):
    if isinstance(cfg, dict):
        cfg = ModelConfig.from_dict(cfg)
    return {"dan": DAN, "tasnet": ConvTasNet, "tddan": TDDAN}[cfg.kind](cfg)


def model_loss(model, mixture, early, weights=None):
    if weights is not None and not isinstance(weights, LossWeights):
        weights = LossWeights(**weights)
    return model.loss(mixture, early, weights)
