"""Conditional GAN over week-long load profiles.

Generator: noise (25) + label (6) through three fully-connected layers,
reshaped to 32 channels x 21 hours and up-sampled by three stride-2
transposed convolutions to one 168-hour profile with a sigmoid output.
Discriminator: two stride-2 convolutions over the profile, flattened features
concatenated with the label, three fully-connected layers to one sigmoid
score. The discriminator is updated twice per iteration on independent real
mini-batches; the generator once with a non-saturating loss.
"""

from __future__ import annotations

from dataclasses import dataclass, asdict
from pathlib import Path

import numpy as np

from .corpus import Corpus, LoadProfile, validate_label
from .errors import BadConfig, CheckpointError, NumericError, ShapeMismatch
from .evaluation import wasserstein1_empirical
from .nn import (
    Adam, Conv1d, Dense, TConv1d, Tensor, bce_loss, clip, concat,
    load_checkpoint, no_grad, reshape, save_checkpoint, sigmoid,
)

NOISE_DIM = 25
LABEL_DIM = 6
PROFILE_LEN = 168


def _spawn_rng(seed: int, *key: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=key))


class Generator:
    """Maps (noise, label) to a 168-value profile strictly inside (0, 1)."""

    def __init__(self, seed: int = 0):
        rng = _spawn_rng(seed, 0)
        self.fc = [
            Dense(NOISE_DIM + LABEL_DIM, 128, "relu", rng),
            Dense(128, 256, "relu", rng),
            Dense(256, 672, "relu", rng),
        ]
        self.up = [
            TConv1d(32, 16, 4, 2, 1, "relu", rng),
            TConv1d(16, 8, 4, 2, 1, "relu", rng),
            TConv1d(8, 1, 4, 2, 1, "none", rng),
        ]
        length = 21
        for layer in self.up:
            length = layer.out_len(length)
        if length != PROFILE_LEN:
            raise ShapeMismatch(f"generator up-sampling ends at {length}, not {PROFILE_LEN}")

    def forward(self, noise: np.ndarray, label: np.ndarray) -> Tensor:
        noise = np.atleast_2d(np.asarray(noise, dtype=np.float64))
        label = np.atleast_2d(np.asarray(label, dtype=np.float64))
        if noise.shape[1] != NOISE_DIM or label.shape[1] != LABEL_DIM \
                or noise.shape[0] != label.shape[0]:
            raise ShapeMismatch(f"generator inputs {noise.shape} / {label.shape}")
        x = concat([Tensor(noise), Tensor(label)], axis=1)
        for layer in self.fc:
            x = layer(x)
        x = reshape(x, (-1, 32, 21))
        for layer in self.up:
            x = layer(x)
        # keep the contract of strictly open (0, 1) even when sigmoid saturates
        return reshape(clip(sigmoid(x), 1e-12, 1.0 - 1e-12), (-1, PROFILE_LEN))

    def parameters(self) -> list[Tensor]:
        out = []
        for layer in self.fc + self.up:
            out.extend(layer.parameters())
        return out

    def spec(self) -> list[dict]:
        return [layer.spec() for layer in self.fc] + \
               [{"kind": "reshape", "channels": 32, "length": 21}] + \
               [layer.spec() for layer in self.up] + \
               [{"kind": "activation", "activation": "sigmoid"}]


class Discriminator:
    """Scores a (profile, label) pair with the probability of being real."""

    def __init__(self, seed: int = 0):
        rng = _spawn_rng(seed, 1)
        self.conv = [
            Conv1d(1, 16, 8, 2, 3, "leaky_relu", rng),
            Conv1d(16, 32, 8, 2, 3, "leaky_relu", rng),
        ]
        length = PROFILE_LEN
        for layer in self.conv:
            length = layer.out_len(length)
        self.flat = 32 * length  # 32 x 42 = 1344
        self.fc = [
            Dense(self.flat + LABEL_DIM, 512, "leaky_relu", rng),
            Dense(512, 256, "leaky_relu", rng),
            Dense(256, 1, "none", rng),
        ]

    def forward(self, profiles: np.ndarray | Tensor, label: np.ndarray) -> Tensor:
        x = profiles if isinstance(profiles, Tensor) else Tensor(np.atleast_2d(profiles))
        label = np.atleast_2d(np.asarray(label, dtype=np.float64))
        if x.data.shape[1] != PROFILE_LEN or label.shape[0] != x.data.shape[0]:
            raise ShapeMismatch(f"discriminator inputs {x.data.shape} / {label.shape}")
        x = reshape(x, (-1, 1, PROFILE_LEN))
        for layer in self.conv:
            x = layer(x)
        x = reshape(x, (-1, self.flat))
        x = concat([x, Tensor(label)], axis=1)
        for layer in self.fc:
            x = layer(x)
        return reshape(sigmoid(x), (-1,))

    def parameters(self) -> list[Tensor]:
        out = []
        for layer in self.conv + self.fc:
            out.extend(layer.parameters())
        return out

    def spec(self) -> list[dict]:
        return [layer.spec() for layer in self.conv] + \
               [{"kind": "concat_label", "width": LABEL_DIM}] + \
               [layer.spec() for layer in self.fc] + \
               [{"kind": "activation", "activation": "sigmoid"}]


# ----------------------------------------------------------------- training

@dataclass
class TrainConfig:
    epochs: int = 300
    batch_size: int = 64
    d_steps: int = 2
    lr: float = 2e-4
    beta1: float = 0.5
    beta2: float = 0.999
    adam_eps: float = 1e-8
    val_fraction: float = 0.1
    seed: int = 0
    checkpoint_every: int = 100
    probe_size: int = 256

    def validate(self) -> None:
        if self.epochs < 1:
            raise BadConfig("epochs must be >= 1")
        if self.batch_size < 1:
            raise BadConfig("batch_size must be >= 1")
        if self.d_steps < 1:
            raise BadConfig("d_steps must be >= 1")
        if not 0.0 < self.val_fraction < 1.0:
            raise BadConfig("val_fraction must be in (0, 1)")
        if self.checkpoint_every < 1:
            raise BadConfig("checkpoint_every must be >= 1")


@dataclass
class EpochTelemetry:
    epoch: int
    d_train: float     # mean D over a real training batch
    d_val: float       # mean D over the held-out batch
    d_fake: float      # mean D over a freshly generated batch
    w1: float          # Wasserstein-1 between pooled generated and validation values

    def as_row(self) -> list[float]:
        return [float(self.epoch), self.d_train, self.d_val, self.d_fake, self.w1]


TELEMETRY_HEADER = "epoch,d_train,d_val,d_fake,w1"


def stratified_split(labels: np.ndarray, fraction: float,
                     rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Per-label-class split into (train_idx, val_idx)."""
    keys = [tuple(row.astype(int)) for row in labels]
    train, val = [], []
    for key in sorted(set(keys)):
        idx = np.array([i for i, k in enumerate(keys) if k == key])
        idx = idx[rng.permutation(idx.size)]
        n_val = min(idx.size - 1, max(1, round(fraction * idx.size))) if idx.size > 1 else 0
        val.extend(idx[:n_val])
        train.extend(idx[n_val:])
    return np.sort(np.array(train, dtype=int)), np.sort(np.array(val, dtype=int))


class Trainer:
    """Holds model and optimizer state for the adversarial loop."""

    def __init__(self, corpus: Corpus, config: TrainConfig):
        config.validate()
        if corpus.n < 2:
            raise BadConfig("corpus too small to split")
        self.corpus = corpus
        self.config = config
        self.gen = Generator(config.seed)
        self.disc = Discriminator(config.seed)
        self.opt_g = Adam(self.gen.parameters(), config.lr, config.beta1,
                          config.beta2, config.adam_eps)
        self.opt_d = Adam(self.disc.parameters(), config.lr, config.beta1,
                          config.beta2, config.adam_eps)
        split_rng = _spawn_rng(config.seed, 2)
        self.train_idx, self.val_idx = stratified_split(corpus.labels,
                                                        config.val_fraction, split_rng)
        self.telemetry: list[EpochTelemetry] = []
        self.epochs_done = 0

    # -- single updates, exposed so tests can drive them directly ------------

    def discriminator_update(self, rng: np.random.Generator) -> float:
        """One D step on a fresh real batch and an equally sized fake batch."""
        b = min(self.config.batch_size, self.train_idx.size)
        idx = self.train_idx[rng.choice(self.train_idx.size, b, replace=False)]
        real_x = self.corpus.profiles[idx]
        real_y = self.corpus.labels[idx]
        z = rng.standard_normal((b, NOISE_DIM))
        with no_grad():
            fake_x = self.gen.forward(z, real_y).data

        loss = bce_loss(self.disc.forward(real_x, real_y), np.ones(b))
        loss_fake = bce_loss(self.disc.forward(fake_x, real_y), np.zeros(b))
        total_loss = Tensor(loss.data + loss_fake.data)  # reporting only
        self.opt_d.zero_grad()
        loss.backward()
        loss_fake.backward()
        self.opt_d.step()
        self.opt_d.zero_grad()
        return float(total_loss.data)

    def generator_update(self, rng: np.random.Generator) -> float:
        """One non-saturating G step: maximize log D(G(z, y), y)."""
        b = min(self.config.batch_size, self.train_idx.size)
        idx = self.train_idx[rng.choice(self.train_idx.size, b, replace=False)]
        y = self.corpus.labels[idx]
        z = rng.standard_normal((b, NOISE_DIM))
        loss = bce_loss(self.disc.forward(self.gen.forward(z, y), y), np.ones(b))
        self.opt_g.zero_grad()
        self.opt_d.zero_grad()
        loss.backward()
        self.opt_g.step()          # only generator parameters move
        self.opt_g.zero_grad()
        self.opt_d.zero_grad()     # discard discriminator gradients
        return float(loss.data)

    def run_epoch(self, epoch: int) -> EpochTelemetry:
        rng = _spawn_rng(self.config.seed, 10, epoch)
        iters = max(1, self.train_idx.size // self.config.batch_size)
        for _ in range(iters):
            for _ in range(self.config.d_steps):
                self.discriminator_update(rng)
            self.generator_update(rng)
        telemetry = self.measure(epoch)
        self.telemetry.append(telemetry)
        self.epochs_done = epoch + 1
        return telemetry

    def measure(self, epoch: int) -> EpochTelemetry:
        """Discriminator means on train/val/generated probes plus pooled W1."""
        rng = _spawn_rng(self.config.seed, 11, epoch)
        p = min(self.config.probe_size, self.train_idx.size)
        tr = self.train_idx[rng.choice(self.train_idx.size, p, replace=False)]
        val_x = self.corpus.profiles[self.val_idx]
        val_y = self.corpus.labels[self.val_idx]
        fake_y = val_y[rng.integers(0, self.val_idx.size, size=self.config.probe_size)]
        z = rng.standard_normal((self.config.probe_size, NOISE_DIM))
        with no_grad():
            fake_x = self.gen.forward(z, fake_y).data
            d_train = float(self.disc.forward(self.corpus.profiles[tr],
                                              self.corpus.labels[tr]).data.mean())
            d_val = float(self.disc.forward(val_x, val_y).data.mean())
            d_fake = float(self.disc.forward(fake_x, fake_y).data.mean())
        w1 = wasserstein1_empirical(fake_x.ravel(), val_x.ravel())
        return EpochTelemetry(epoch, d_train, d_val, d_fake, w1)


def train_cgan(corpus: Corpus, config: TrainConfig, out_dir=None,
               resume_from=None, log_every: int = 0) -> Trainer:
    """Run the adversarial loop; optionally checkpoint every K epochs.

    On NumericError the loop stops immediately; checkpoints already written
    stay on disk as the last good state.
    """
    if resume_from is not None:
        trainer = load_trainer(resume_from, corpus)
        if config is not None and asdict(config) != asdict(trainer.config):
            raise BadConfig("resume config differs from checkpointed config")
    else:
        trainer = Trainer(corpus, config)
    cfg = trainer.config

    out_dir = Path(out_dir) if out_dir is not None else None
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)

    for epoch in range(trainer.epochs_done, cfg.epochs):
        t = trainer.run_epoch(epoch)
        if log_every and (epoch % log_every == 0 or epoch == cfg.epochs - 1):
            print(f"epoch {epoch:5d}  d_train {t.d_train:.3f}  d_val {t.d_val:.3f}  "
                  f"d_fake {t.d_fake:.3f}  w1 {t.w1:.5f}", flush=True)
        if out_dir is not None and ((epoch + 1) % cfg.checkpoint_every == 0
                                    or epoch == cfg.epochs - 1):
            save_trainer(out_dir / f"ckpt_{epoch + 1:06d}.ckpt", trainer)
    if out_dir is not None:
        save_trainer(out_dir / "final.ckpt", trainer)
    return trainer


# --------------------------------------------------------------- generation

def generate_matrix(gen: Generator, label: np.ndarray, n: int,
                    seed: int = 0) -> np.ndarray:
    """n profiles for one label as an (n, 168) array (unique noise per row)."""
    validate_label(label)
    if n < 0:
        raise BadConfig("n must be >= 0")
    if n == 0:
        return np.zeros((0, PROFILE_LEN))
    rng = np.random.default_rng(seed)
    z = rng.standard_normal((n, NOISE_DIM))
    y = np.tile(np.asarray(label, dtype=np.float64), (n, 1))
    with no_grad():
        return gen.forward(z, y).data


def generate(gen: Generator, label: np.ndarray, n: int, seed: int = 0) -> list[LoadProfile]:
    values = generate_matrix(gen, label, n, seed)
    return [LoadProfile(values[i], 1.0, None, f"synthetic-{i:04d}") for i in range(n)]


# -------------------------------------------------------------- checkpoints

def _model_arrays(trainer: Trainer) -> list[tuple[str, np.ndarray]]:
    arrays = []
    for i, p in enumerate(trainer.gen.parameters()):
        arrays.append((f"g{i:02d}", p.data))
    for i, p in enumerate(trainer.disc.parameters()):
        arrays.append((f"d{i:02d}", p.data))
    for name, opt in (("og", trainer.opt_g), ("od", trainer.opt_d)):
        for i, a in enumerate(opt.state_arrays()):
            arrays.append((f"{name}{i:02d}", a))
    rows = np.array([t.as_row() for t in trainer.telemetry]).reshape(-1, 5)
    arrays.append(("telemetry", rows))
    return arrays


def save_trainer(path, trainer: Trainer) -> None:
    meta = {
        "kind": "cgan",
        "config": asdict(trainer.config),
        "epochs_done": trainer.epochs_done,
        "opt_g_t": trainer.opt_g.t,
        "opt_d_t": trainer.opt_d.t,
        "generator": trainer.gen.spec(),
        "discriminator": trainer.disc.spec(),
    }
    save_checkpoint(path, meta, _model_arrays(trainer))


def load_trainer(path, corpus: Corpus) -> Trainer:
    meta, arrays = load_checkpoint(path)
    if meta.get("kind") != "cgan":
        raise CheckpointError(f"{path}: not a cGAN checkpoint")
    config = TrainConfig(**meta["config"])
    trainer = Trainer(corpus, config)
    _load_params(trainer, meta, arrays)
    return trainer


def load_generator(path) -> tuple[Generator, dict]:
    """Generator only, for sampling without the training corpus."""
    meta, arrays = load_checkpoint(path)
    if meta.get("kind") != "cgan":
        raise CheckpointError(f"{path}: not a cGAN checkpoint")
    gen = Generator(TrainConfig(**meta["config"]).seed)
    for i, p in enumerate(gen.parameters()):
        _assign(p, arrays, f"g{i:02d}", path)
    return gen, meta


def _assign(p: Tensor, arrays: dict, name: str, path) -> None:
    if name not in arrays:
        raise CheckpointError(f"{path}: missing array {name!r}")
    if arrays[name].shape != p.data.shape:
        raise CheckpointError(f"{path}: array {name!r} has shape "
                              f"{arrays[name].shape}, expected {p.data.shape}")
    p.data = arrays[name].copy()


def _load_params(trainer: Trainer, meta: dict, arrays: dict) -> None:
    for i, p in enumerate(trainer.gen.parameters()):
        _assign(p, arrays, f"g{i:02d}", "checkpoint")
    for i, p in enumerate(trainer.disc.parameters()):
        _assign(p, arrays, f"d{i:02d}", "checkpoint")
    n_g = len(trainer.gen.parameters())
    n_d = len(trainer.disc.parameters())
    trainer.opt_g.load_state_arrays(
        [arrays[f"og{i:02d}"] for i in range(2 * n_g)], meta["opt_g_t"])
    trainer.opt_d.load_state_arrays(
        [arrays[f"od{i:02d}"] for i in range(2 * n_d)], meta["opt_d_t"])
    trainer.epochs_done = int(meta["epochs_done"])
    trainer.telemetry = [EpochTelemetry(int(r[0]), r[1], r[2], r[3], r[4])
                         for r in arrays["telemetry"]]


def telemetry_csv(telemetry: list[EpochTelemetry]) -> str:
    lines = [TELEMETRY_HEADER]
    for t in telemetry:
        lines.append(f"{t.epoch},{t.d_train!r},{t.d_val!r},{t.d_fake!r},{t.w1!r}")
    return "\n".join(lines) + "\n"
