"""Training loop: L1 objective on aligned crop pairs, Adam, step-halved
learning rate, continuous scale sampling, and a small synthetic texture
corpus for self-contained runs.
"""

import csv
import time
from dataclasses import dataclass

import numpy as np

from . import evaluate, imaging
from . import tensor as T


@dataclass
class TrainConfig:
    epochs: int = 200
    steps_per_epoch: int = 16
    batch_size: int = 8
    crop: int = 16
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    milestones: tuple = (100, 160, 180, 190)
    scale_min: float = 1.0
    scale_max: float = 4.0
    eval_scales: tuple = (2, 3, 4)
    eval_every: int = 25        # holdout PSNR cadence (final epoch always runs)
    seed: int = 0


def lr_at(config, epoch):
    """Initial LR halved at each milestone; ``epoch`` is 1-based."""
    halvings = sum(1 for m in config.milestones if epoch >= m)
    return config.lr * (0.5 ** halvings)


# ---------------------------------------------------------------------------
# data

def make_synthetic_textures(n, size=64, seed=0):
    """Seeded corpus of [size,size,3] textures.

    Flat color fields layered with many sharp-edged shapes (ellipses,
    rotated bars) and some moderate-frequency gratings.  Edge-dense on
    purpose: hard edges are where resamplers blur and ring, and the
    grating frequencies stay well below Nyquist so their structure
    survives downscaling.
    """
    rng = np.random.default_rng(seed)
    yy, xx = np.meshgrid(np.arange(size), np.arange(size), indexing="ij")
    images = []
    for _ in range(n):
        base = rng.uniform(0.2, 0.8, size=3)
        img = np.broadcast_to(base, (size, size, 3)).copy()
        for _ in range(int(rng.integers(10, 16))):
            color = rng.uniform(0.0, 1.0, size=3)
            alpha = rng.uniform(0.7, 1.0)
            kind = rng.random()
            if kind < 0.4:
                cy, cx = rng.uniform(0, size, size=2)
                ry, rx = rng.uniform(size / 16, size / 5, size=2)
                mask = ((yy - cy) / ry) ** 2 + ((xx - cx) / rx) ** 2 <= 1.0
            elif kind < 0.8:
                cy, cx = rng.uniform(0, size, size=2)
                ang = rng.uniform(0, np.pi)
                u = np.cos(ang) * (xx - cx) + np.sin(ang) * (yy - cy)
                v = -np.sin(ang) * (xx - cx) + np.cos(ang) * (yy - cy)
                mask = (np.abs(u) <= rng.uniform(size / 6, size / 2)) \
                    & (np.abs(v) <= rng.uniform(1.0, size / 12))
            else:
                theta = rng.uniform(0, np.pi)
                freq = rng.uniform(0.06, 0.18)
                wave = np.sin(
                    2 * np.pi * freq * (np.cos(theta) * xx + np.sin(theta) * yy)
                    + rng.uniform(0, 2 * np.pi))
                img = img + rng.uniform(0.08, 0.18) * wave[..., None] \
                    * rng.uniform(0.3, 1.0, size=3)
                continue
            img = np.where(mask[..., None], (1 - alpha) * img + alpha * color, img)
        images.append(np.clip(img, 0.0, 1.0).astype(np.float32))
    return images


def sample_batch(images, config, rng):
    """One batch of (CropPair, s) with a per-element scale from U[min,max]."""
    out = []
    for _ in range(config.batch_size):
        hr = images[int(rng.integers(len(images)))]
        s = float(rng.uniform(config.scale_min, config.scale_max))
        out.append((imaging.random_crop_pair(hr, s, config.crop, rng), s))
    return out


# ---------------------------------------------------------------------------
# loop

METRIC_COLUMNS = ("epoch", "lr", "train_l1",
                  "eval_psnr_x2", "eval_psnr_x3", "eval_psnr_x4")


def train(model, images, config, holdout=None, metrics_path=None, log=None):
    """Train in place; returns the per-epoch metric rows.

    ``holdout`` is an optional list of HR images evaluated (full-frame RGB
    PSNR against an antialiased bicubic LR synthesis) every ``eval_every``
    epochs and at the end.  A non-finite forward or gradient aborts with
    NonFiniteError rather than training through divergence.
    """
    rng = np.random.default_rng(config.seed)
    state = T.AdamState(model.params)
    history = []
    writer = None
    f = open(metrics_path, "w", newline="") if metrics_path else None
    if f:
        writer = csv.DictWriter(f, fieldnames=METRIC_COLUMNS)
        writer.writeheader()
    try:
        for epoch in range(1, config.epochs + 1):
            lr = lr_at(config, epoch)
            t0 = time.monotonic()
            epoch_loss = 0.0
            for _ in range(config.steps_per_epoch):
                batch = sample_batch(images, config, rng)
                model.params.zero_grad()
                with T.Tape() as tape:
                    loss = None
                    for pair, s in batch:
                        ys = pair.origin[0] + np.arange(pair.hr.shape[0])
                        xs = pair.origin[1] + np.arange(pair.hr.shape[1])
                        pred = model.decode_train(T.Tensor(pair.lr), s, ys, xs)
                        term = T.l1_loss(pred, T.Tensor(pair.hr))
                        loss = term if loss is None else T.add(loss, term)
                    loss = T.scale(loss, 1.0 / len(batch))
                    tape.backward(loss)
                T.adam_step(model.params, state, lr,
                            config.beta1, config.beta2, config.eps)
                epoch_loss += loss.item()
            row = {"epoch": epoch, "lr": lr,
                   "train_l1": epoch_loss / config.steps_per_epoch,
                   "eval_psnr_x2": "", "eval_psnr_x3": "", "eval_psnr_x4": ""}
            if holdout and (epoch % config.eval_every == 0 or epoch == config.epochs):
                _, means = evaluate.psnr_eval(
                    model, [(f"holdout{i}", im) for i, im in enumerate(holdout)],
                    config.eval_scales)
                for s, v in means.items():
                    key = f"eval_psnr_x{int(s)}"
                    if key in row:
                        row[key] = v
            history.append(row)
            if writer:
                writer.writerow(row)
                f.flush()
            if log:
                dt = time.monotonic() - t0
                evals = " ".join(f"x{int(s)}={row[f'eval_psnr_x{int(s)}']:.2f}"
                                 for s in config.eval_scales
                                 if row.get(f"eval_psnr_x{int(s)}") != "")
                log(f"epoch {epoch:4d}  lr {lr:.2e}  l1 {row['train_l1']:.4f}  "
                    f"{evals}  ({dt:.1f}s)")
    finally:
        if f:
            f.close()
    return history
