"""
Desk-scale decoder-only multimodal forecaster.

Pipeline per instance: character tokenization of the prompt, physical
context extraction for each image, position grid for the configured scheme,
additive positional embedding divided by d_model, then a causal transformer
with rotary attention over the 3-axis positions predicting the next token.
"""
import math
import pickle
from dataclasses import asdict, dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import torch
import torch.nn as nn
import torch.nn.functional as F

from .data import ForecastInstance, build_prompt, instance_contexts
from .encoding import PEMatrix, PEMode, Wavelengths, add_to_embeddings, build_pe_matrix
from .exceptions import ConfigError, DataError, TrainingDivergence, VocabularyError
from .geo import ImageSpec, PhysicalContext
from .indexing import ImageBlock, IndexingScheme, TextSegment, TokenLayout, VideoParams, build_position_grid
from .rope import RopeConfig, apply_rotation, rotation_angles
from .variables import IMAGE_TOKEN, PAD_TOKEN, PROMPT_LABEL_SEPARATOR
from .vartypes import CheckpointTyped
from .basedispatch import SendNotification
from ..notifications import NotificationType

__all__ = ["CharVocabulary", "ModelConfig", "Forecaster", "EncodedSequence", "Batch", "AttentionExport",
           "tokenize", "detokenize", "patchify", "embed_patches", "encode_sequence", "encode_instance",
           "collate", "forward", "sequence_loss", "train", "generate", "export_attention", "attention_rollout",
           "normalize_unit", "check_gradients", "IGNORE_INDEX"]

IGNORE_INDEX = -100

DEFAULT_ALPHABET = "\n" + "".join(chr(c) for c in range(32, 127))


class CharVocabulary:
    specials = (PAD_TOKEN, IMAGE_TOKEN)

    def __init__(self, alphabet: str = DEFAULT_ALPHABET):
        if len(set(alphabet)) != len(alphabet):
            raise ConfigError("vocabulary alphabet has duplicate characters")
        self.alphabet = alphabet
        self.itos: List[str] = [*self.specials, *alphabet]
        self.stoi: Dict[str, int] = {token: i for i, token in enumerate(self.itos)}

    @property
    def pad_id(self) -> int:
        return self.stoi[PAD_TOKEN]

    @property
    def image_id(self) -> int:
        return self.stoi[IMAGE_TOKEN]

    def __len__(self):
        return len(self.itos)

    def __eq__(self, other):
        return isinstance(other, CharVocabulary) and other.itos == self.itos


def tokenize(text: str, vocab: CharVocabulary) -> List[int]:
    ids = []
    i = 0
    while i < len(text):
        if text.startswith(IMAGE_TOKEN, i):
            ids.append(vocab.image_id)
            i += len(IMAGE_TOKEN)
            continue
        token = vocab.stoi.get(text[i])
        if token is None or text[i] in CharVocabulary.specials:
            raise VocabularyError(text[i], i)
        ids.append(token)
        i += 1
    return ids


def detokenize(ids: Sequence[int], vocab: CharVocabulary) -> str:
    return "".join(vocab.itos[i] for i in ids if i != vocab.pad_id)


@dataclass
class ModelConfig:
    vocab_size: int = len(DEFAULT_ALPHABET) + len(CharVocabulary.specials)
    d_model: int = 128
    n_layers: int = 2
    n_heads: int = 4
    d_ff: int = 512
    rope: Optional[RopeConfig] = None
    scheme: IndexingScheme = IndexingScheme.PHYSICS
    use_vision: bool = True
    use_variant_pe: bool = True
    use_standard_pe_only: bool = False
    use_pe: bool = True
    use_rope: bool = True
    negate: bool = True
    image: ImageSpec = field(default_factory=ImageSpec)
    wavelengths: Wavelengths = field(default_factory=Wavelengths)
    video: VideoParams = field(default_factory=VideoParams)
    seed: int = 0
    dtype: str = "float32"

    def __post_init__(self):
        self.scheme = IndexingScheme.parse(self.scheme)
        if self.d_model % 8:
            raise ConfigError(f"d_model must be divisible by 8, got {self.d_model}")
        if self.n_heads <= 0 or self.d_model % self.n_heads:
            raise ConfigError(f"d_model {self.d_model} is not divisible by n_heads {self.n_heads}")
        if self.n_layers <= 0 or self.d_ff <= 0:
            raise ConfigError("n_layers and d_ff must be positive")
        if self.dtype not in ("float32", "float64"):
            raise ConfigError(f"unsupported dtype '{self.dtype}'")
        if self.rope is None:
            self.rope = RopeConfig(self.head_dim)
        elif self.rope.head_dim != self.head_dim:
            raise ConfigError(f"rotary head_dim {self.rope.head_dim} does not match d_model/n_heads = {self.head_dim}")

    @property
    def head_dim(self) -> int:
        return self.d_model // self.n_heads

    @property
    def pe_mode(self) -> PEMode:
        if not self.use_pe:
            return PEMode.NONE
        if self.use_variant_pe and not self.use_standard_pe_only:
            return PEMode.VARIANT
        return PEMode.STANDARD

    @property
    def torch_dtype(self) -> torch.dtype:
        return torch.float64 if self.dtype == "float64" else torch.float32

    def toDict(self) -> dict:
        data = asdict(self)
        data["scheme"] = self.scheme.value
        data["rope"]["sections"] = list(self.rope.sections)
        return data

    @classmethod
    def fromDict(cls, data: dict) -> "ModelConfig":
        data = dict(data)
        rope = data.pop("rope", None)
        return cls(rope=RopeConfig(**{**rope, "sections": tuple(rope["sections"])}) if rope else None,
                   image=ImageSpec(**data.pop("image", {})),
                   wavelengths=Wavelengths(**data.pop("wavelengths", {})),
                   video=VideoParams(**data.pop("video", {})),
                   **data)


def patchify(images: np.ndarray, spec: ImageSpec) -> np.ndarray:
    """(..., px, px) -> (..., n_row * n_col, patch_px**2), row-major patch order."""
    images = np.asarray(images)
    if images.shape[-2:] != (spec.image_px, spec.image_px):
        raise DataError(f"image shape {images.shape[-2:]} does not match {spec.image_px}x{spec.image_px}")
    p, n = spec.patch_px, spec.n_row
    lead = images.shape[:-2]
    x = images.reshape(*lead, n, p, n, p)
    x = np.moveaxis(x, -3, -2)
    return x.reshape(*lead, n * n, p * p)


@dataclass
class EncodedSequence:
    tokenIds: List[int]
    layout: TokenLayout
    inputIds: np.ndarray
    positions: np.ndarray
    pe: np.ndarray
    patches: np.ndarray
    targets: np.ndarray

    @property
    def seq_len(self) -> int:
        return len(self.inputIds)


def _layoutFor(tokenIds: Sequence[int], contexts: Sequence[Optional[PhysicalContext]], spec: ImageSpec,
               vocab: CharVocabulary) -> Tuple[TokenLayout, np.ndarray, List[int]]:
    segments, expanded, compactStart = [], [], []
    run = 0
    image = 0
    for token in tokenIds:
        compactStart.append(len(expanded))
        if token == vocab.image_id:
            if run:
                segments.append(TextSegment(run))
                run = 0
            if image >= len(contexts):
                raise DataError(f"more image placeholders than images ({len(contexts)})")
            segments.append(ImageBlock(contexts[image], spec.n_row, spec.n_col))
            expanded.extend([vocab.image_id] * spec.n_patches)
            image += 1
        else:
            run += 1
            expanded.append(token)
    if run:
        segments.append(TextSegment(run))
    if image != len(contexts):
        raise DataError(f"{image} image placeholders for {len(contexts)} images")
    compactStart.append(len(expanded))
    return TokenLayout(tuple(segments)), np.asarray(expanded, dtype=np.int64), compactStart


def encode_sequence(tokenIds: Sequence[int], contexts: Sequence[Optional[PhysicalContext]], images: np.ndarray,
                    cfg: ModelConfig, vocab: CharVocabulary, labelStart: Optional[int] = None,
                    extraText: int = 0) -> EncodedSequence:
    """
    Expand image placeholders into patch tokens and attach positions, PE
    rows and next-token targets. Targets are set only for tokens of the
    label region (compact index >= labelStart). `extraText` reserves
    position/PE rows for that many generated text tokens.
    """
    images = np.asarray(images, dtype=np.float64)
    if len(images) != len(contexts):
        raise DataError(f"{len(images)} images for {len(contexts)} physical contexts")

    layout, inputIds, compactStart = _layoutFor(tokenIds, contexts, cfg.image, vocab)
    full = layout.extended(extraText)
    grid = build_position_grid(full, cfg.scheme, cfg.video, negate=cfg.negate)
    pe = build_pe_matrix(full, cfg.d_model, cfg.wavelengths, cfg.pe_mode)

    targets = np.full(len(inputIds), IGNORE_INDEX, dtype=np.int64)
    if labelStart is not None:
        first = compactStart[labelStart]
        if first == 0:
            raise DataError("label region must follow a non-empty prompt")
        targets[first - 1:len(inputIds) - 1] = inputIds[first:]
        targets[targets == vocab.image_id] = IGNORE_INDEX

    patches = patchify(images, cfg.image).reshape(-1, cfg.image.patch_px ** 2) if len(images) else \
        np.zeros((0, cfg.image.patch_px ** 2))
    return EncodedSequence(list(tokenIds), layout, inputIds, grid.axes.T.copy(), pe.values, patches, targets)


def encode_instance(instance: ForecastInstance, cfg: ModelConfig, vocab: CharVocabulary,
                    withLabel: bool = True, extraText: int = 0) -> EncodedSequence:
    prompt, label = build_prompt(instance)
    promptIds = tokenize(prompt + PROMPT_LABEL_SEPARATOR, vocab)
    contexts = instance_contexts(instance, cfg.image)
    if not withLabel:
        return encode_sequence(promptIds, contexts, instance.images, cfg, vocab, extraText=extraText)
    return encode_sequence(promptIds + tokenize(label, vocab), contexts, instance.images, cfg, vocab,
                           labelStart=len(promptIds))


@dataclass
class Batch:
    inputIds: torch.Tensor
    visionMask: torch.Tensor
    patches: torch.Tensor
    positions: torch.Tensor
    pe: torch.Tensor
    targets: torch.Tensor


def collate(sequences: Sequence[EncodedSequence], cfg: ModelConfig, vocab: CharVocabulary) -> Batch:
    length = max(s.seq_len for s in sequences)
    batch = len(sequences)
    dtype = cfg.torch_dtype

    inputIds = torch.full((batch, length), vocab.pad_id, dtype=torch.long)
    positions = torch.zeros((batch, length, 3), dtype=dtype)
    pe = torch.zeros((batch, length, cfg.d_model), dtype=dtype)
    targets = torch.full((batch, length), IGNORE_INDEX, dtype=torch.long)
    for b, s in enumerate(sequences):
        n = s.seq_len
        inputIds[b, :n] = torch.from_numpy(s.inputIds)
        positions[b, :n] = torch.from_numpy(s.positions[:n])
        pe[b, :n] = torch.from_numpy(s.pe[:n])
        targets[b, :n] = torch.from_numpy(s.targets)

    patches = torch.from_numpy(np.concatenate([s.patches for s in sequences])).to(dtype)
    return Batch(inputIds, inputIds == vocab.image_id, patches, positions, pe, targets)


class CausalSelfAttention(nn.Module):
    def __init__(self, cfg: ModelConfig):
        super().__init__()
        self.cfg = cfg
        self.qkv = nn.Linear(cfg.d_model, 3 * cfg.d_model)
        self.out = nn.Linear(cfg.d_model, cfg.d_model)

    def forward(self, x, angles, cache=None):
        B, L, _ = x.shape
        H, hd = self.cfg.n_heads, self.cfg.head_dim
        q, k, v = self.qkv(x).view(B, L, 3, H, hd).permute(2, 0, 3, 1, 4)
        if self.cfg.use_rope:
            q = apply_rotation(q, angles.unsqueeze(1))
            k = apply_rotation(k, angles.unsqueeze(1))

        past = 0
        if cache is not None:
            if cache:
                past = cache[0].shape[2]
                k = torch.cat([cache[0], k], dim=2)
                v = torch.cat([cache[1], v], dim=2)
            cache[:] = [k, v]

        scores = q @ k.transpose(-2, -1) / math.sqrt(hd)
        allowed = torch.ones(L, past + L, dtype=torch.bool).tril(diagonal=past)
        scores = scores.masked_fill(~allowed, float("-inf"))
        weights = torch.softmax(scores, dim=-1)
        y = (weights @ v).transpose(1, 2).reshape(B, L, -1)
        return self.out(y), weights


class DecoderBlock(nn.Module):
    def __init__(self, cfg: ModelConfig):
        super().__init__()
        self.ln1 = nn.LayerNorm(cfg.d_model)
        self.attention = CausalSelfAttention(cfg)
        self.ln2 = nn.LayerNorm(cfg.d_model)
        self.mlp = nn.Sequential(nn.Linear(cfg.d_model, cfg.d_ff), nn.GELU(), nn.Linear(cfg.d_ff, cfg.d_model))

    def forward(self, x, angles, cache=None):
        attended, weights = self.attention(self.ln1(x), angles, cache)
        x = x + attended
        return x + self.mlp(self.ln2(x)), weights


class Forecaster(nn.Module):
    def __init__(self, cfg: ModelConfig):
        super().__init__()
        self.cfg = cfg
        self.tokenEmbedding = nn.Embedding(cfg.vocab_size, cfg.d_model)
        self.patchProjection = nn.Linear(cfg.image.patch_px ** 2, cfg.d_model)
        self.nullImage = nn.Parameter(torch.zeros(cfg.d_model))
        self.blocks = nn.ModuleList(DecoderBlock(cfg) for _ in range(cfg.n_layers))
        self.lnFinal = nn.LayerNorm(cfg.d_model)
        self.head = nn.Linear(cfg.d_model, cfg.vocab_size)

        self.to(cfg.torch_dtype)
        self.resetParameters()

    def resetParameters(self):
        """Seeded init from a private generator; the global torch RNG is left untouched."""
        generator = torch.Generator().manual_seed(self.cfg.seed)

        def normal(parameter):
            parameter.copy_(torch.randn(parameter.shape, generator=generator, dtype=torch.float64) * 0.02)

        with torch.no_grad():
            for module in self.modules():
                if isinstance(module, nn.LayerNorm):
                    module.weight.fill_(1.0)
                    module.bias.zero_()
                elif isinstance(module, nn.Linear):
                    normal(module.weight)
                    module.bias.zero_()
                elif isinstance(module, nn.Embedding):
                    normal(module.weight)
            self.nullImage.zero_()

    def parameterCount(self) -> int:
        return sum(p.numel() for p in self.parameters())

    def embedPatches(self, patches: torch.Tensor) -> torch.Tensor:
        return self.patchProjection(patches)

    def embed(self, batch: Batch) -> torch.Tensor:
        x = self.tokenEmbedding(batch.inputIds)
        if batch.visionMask.any():
            if self.cfg.use_vision:
                vision = self.embedPatches(batch.patches)
            else:
                vision = self.nullImage.unsqueeze(0).repeat(int(batch.visionMask.sum()), 1)
            x = x.masked_scatter(batch.visionMask.unsqueeze(-1), vision)
        return add_to_embeddings(x, PEMatrix(batch.pe, self.cfg.d_model, batch.visionMask))

    def forward(self, batch: Batch, cache: Optional[List[list]] = None, returnAttention: bool = False):
        x = self.embed(batch)
        angles = rotation_angles(batch.positions, self.cfg.rope)
        attention = []
        for i, block in enumerate(self.blocks):
            x, weights = block(x, angles, None if cache is None else cache[i])
            if returnAttention:
                attention.append(weights)
        logits = self.head(self.lnFinal(x))
        return (logits, attention) if returnAttention else logits


def embed_patches(model: Forecaster, image: np.ndarray, spec: ImageSpec) -> torch.Tensor:
    """(image_px, image_px) image -> (n_row * n_col, d_model) patch embeddings."""
    patches = torch.from_numpy(patchify(np.asarray(image, dtype=np.float64), spec)).to(model.cfg.torch_dtype)
    with torch.no_grad():
        return model.embedPatches(patches)


def forward(model: Forecaster, layout: TokenLayout, token_ids: Sequence[int], images: np.ndarray,
            vocab: CharVocabulary) -> torch.Tensor:
    """Logits (seq_len, vocab_size) for one instance whose image contexts come from `layout`."""
    contexts = [block.context for block in layout.images]
    placeholders = sum(1 for t in token_ids if t == vocab.image_id)
    if placeholders != len(images) or placeholders != len(contexts):
        raise DataError(f"{placeholders} image placeholders, {len(images)} images, {len(contexts)} image blocks")

    encoded = encode_sequence(token_ids, contexts, images, model.cfg, vocab)
    if encoded.layout.seq_len != layout.seq_len:
        raise DataError(f"layout length {layout.seq_len} does not match token stream length {encoded.seq_len}")
    with torch.no_grad():
        return model(collate([encoded], model.cfg, vocab))[0]


def sequence_loss(model: Forecaster, batch: Batch) -> torch.Tensor:
    logits = model(batch)
    return F.cross_entropy(logits.reshape(-1, logits.shape[-1]), batch.targets.reshape(-1),
                           ignore_index=IGNORE_INDEX)


def train(dataset: Sequence[ForecastInstance], cfg: ModelConfig, epochs: int = 1, lr: float = 3e-4,
          batch_size: int = 8, vocab: Optional[CharVocabulary] = None, max_steps: Optional[int] = None,
          weight_decay: float = 0.01,
          onStep: Optional[Callable[[int, int, float], None]] = None) -> Tuple[Forecaster, List[float]]:
    """AdamW on label-region cross entropy. Deterministic for a given cfg.seed."""
    if not dataset:
        raise DataError("training split is empty")
    vocab = vocab or CharVocabulary()
    if len(vocab) != cfg.vocab_size:
        raise ConfigError(f"model vocab_size {cfg.vocab_size} does not match vocabulary size {len(vocab)}")

    model = Forecaster(cfg)
    SendNotification(NotificationType.ParameterCount, model.parameterCount())
    encoded = [encode_instance(instance, cfg, vocab) for instance in dataset]
    optimizer = torch.optim.AdamW(model.parameters(), lr=lr, weight_decay=weight_decay)
    generator = torch.Generator().manual_seed(cfg.seed)

    SendNotification(NotificationType.TrainingStarted, len(encoded), epochs, lr)
    lossTrace: List[float] = []
    step = 0
    model.train()
    for epoch in range(epochs):
        order = torch.randperm(len(encoded), generator=generator).tolist()
        for start in range(0, len(order), batch_size):
            batch = collate([encoded[i] for i in order[start:start + batch_size]], cfg, vocab)
            loss = sequence_loss(model, batch)
            if not torch.isfinite(loss):
                SendNotification(NotificationType.TrainingDiverged, epoch, step, float(loss))
                raise TrainingDivergence(f"non-finite loss {float(loss)} at epoch {epoch}, step {step} (lr={lr})")

            optimizer.zero_grad()
            loss.backward()
            torch.nn.utils.clip_grad_norm_(model.parameters(), 1.0)
            optimizer.step()

            lossTrace.append(float(loss))
            SendNotification(NotificationType.TrainingStep, epoch, step, lossTrace[-1])
            if onStep is not None:
                onStep(epoch, step, lossTrace[-1])
            step += 1
            if max_steps is not None and step >= max_steps:
                break
        SendNotification(NotificationType.TrainingEpoch, epoch, lossTrace[-1])
        if max_steps is not None and step >= max_steps:
            break

    model.eval()
    SendNotification(NotificationType.TrainingFinished, step, lossTrace[-1])
    return model, lossTrace


def _labelClosed(text: str) -> bool:
    depth = 0
    opened = False
    for char in text:
        if char == "{":
            depth += 1
            opened = True
        elif char == "}":
            depth -= 1
            if opened and depth <= 0:
                return True
    return False


def generate(model: Forecaster, instance: ForecastInstance, vocab: CharVocabulary, max_new: int = 256) -> str:
    """Greedy decoding until max_new tokens or the label object's braces close."""
    encoded = encode_instance(instance, model.cfg, vocab, withLabel=False, extraText=max_new)
    length = encoded.seq_len
    dtype = model.cfg.torch_dtype
    cache = [[] for _ in model.blocks]

    generated: List[int] = []
    with torch.no_grad():
        logits = model(collate([encoded], model.cfg, vocab), cache=cache)
        for step in range(max_new):
            token = int(torch.argmax(logits[0, -1]))
            generated.append(token)
            if _labelClosed(detokenize(generated, vocab)) or step == max_new - 1:
                break
            k = length + step
            # generated tokens are text; a stray <image> id keeps its token embedding
            single = Batch(torch.tensor([[token]]), torch.zeros((1, 1), dtype=torch.bool),
                           torch.zeros((0, model.cfg.image.patch_px ** 2), dtype=dtype),
                           torch.from_numpy(encoded.positions[k:k + 1]).to(dtype).unsqueeze(0),
                           torch.from_numpy(encoded.pe[k:k + 1]).to(dtype).unsqueeze(0),
                           torch.tensor([[IGNORE_INDEX]]))
            logits = model(single, cache=cache)

    return detokenize(generated, vocab)


def normalize_unit(matrix: np.ndarray) -> np.ndarray:
    """Min-max scale to [0, 1]; a constant matrix maps to zeros."""
    matrix = np.asarray(matrix, dtype=np.float64)
    low, high = matrix.min(), matrix.max()
    if high - low <= 0:
        return np.zeros_like(matrix)
    return (matrix - low) / (high - low)


def attention_rollout(layers: Sequence[np.ndarray]) -> np.ndarray:
    """Product of row-normalised 0.5 (A + I) over layers, first layer applied first."""
    rollout = None
    for attention in layers:
        attention = np.asarray(attention, dtype=np.float64)
        augmented = 0.5 * (attention + np.eye(attention.shape[-1]))
        augmented = augmented / augmented.sum(axis=-1, keepdims=True)
        rollout = augmented if rollout is None else augmented @ rollout
    return rollout


@dataclass
class AttentionExport:
    raw: np.ndarray
    layers: List[np.ndarray]
    steps: List[np.ndarray]
    queries: List[int]


def export_attention(model: Forecaster, instance: ForecastInstance, vocab: CharVocabulary,
                     mode: str = "last_layer") -> AttentionExport:
    """
    Head-averaged attention of the label-region queries over the image
    patches (one matrix of shape (n_images, n_patches) per forecast token),
    each min-max normalised.
    """
    if mode not in ("last_layer", "rollout"):
        raise ConfigError(f"unknown attention export mode '{mode}'")

    encoded = encode_instance(instance, model.cfg, vocab)
    with torch.no_grad():
        _, attention = model(collate([encoded], model.cfg, vocab), returnAttention=True)
    layers = [weights[0].mean(dim=0).double().numpy() for weights in attention]
    raw = layers[-1] if mode == "last_layer" else attention_rollout(layers)

    vision = encoded.inputIds == vocab.image_id
    queries = [int(q) for q in np.nonzero(encoded.targets != IGNORE_INDEX)[0]] or [encoded.seq_len - 1]
    nImages = len(encoded.layout.images)
    steps = []
    for q in queries:
        row = raw[q, vision].reshape(nImages, -1) if nImages else raw[q:q + 1, :q + 1]
        steps.append(normalize_unit(row))
    return AttentionExport(raw, layers, steps, queries)


def check_gradients(model: Forecaster, batch: Batch, eps: float = 1e-5, floor: float = 1e-5,
                    sample: Optional[int] = None, seed: int = 0) -> float:
    """
    Max relative error |analytic - numeric| / max(|analytic|, |numeric|, floor)
    between autograd and central finite differences. Every parameter entry is
    checked unless `sample` limits it to that many random entries per tensor.
    """
    model.zero_grad()
    sequence_loss(model, batch).backward()
    generator = torch.Generator().manual_seed(seed)
    worst = 0.0
    with torch.no_grad():
        for parameter in model.parameters():
            flat = parameter.data.view(-1)
            if parameter.grad is None:
                analytic = torch.zeros_like(flat)
            else:
                analytic = parameter.grad.detach().clone().reshape(-1)
            entries = range(flat.numel())
            if sample is not None and sample < flat.numel():
                entries = torch.randperm(flat.numel(), generator=generator)[:sample].tolist()
            for i in entries:
                original = float(flat[i])
                flat[i] = original + eps
                plus = float(sequence_loss(model, batch))
                flat[i] = original - eps
                minus = float(sequence_loss(model, batch))
                flat[i] = original
                numeric = (plus - minus) / (2 * eps)
                a = float(analytic[i])
                worst = max(worst, abs(a - numeric) / max(abs(a), abs(numeric), floor))
    return worst


def save_checkpoint(model: Forecaster, vocab: CharVocabulary, path: str, formatType: str, formatVersion: int):
    data: CheckpointTyped = {"formatType": formatType, "formatVersion": formatVersion, "config": model.cfg.toDict(),
                             "vocabulary": vocab.alphabet, "state": model.state_dict()}
    torch.save(data, path)


def load_checkpoint(path: str, formatType: str, formatVersion: int) -> Tuple[Forecaster, CharVocabulary]:
    try:
        data = torch.load(path, map_location="cpu", weights_only=False)
    except (RuntimeError, EOFError, pickle.UnpicklingError) as e:
        raise DataError(f"{path}: unreadable checkpoint ({e})")
    if not isinstance(data, dict) or data.get("formatType") != formatType \
            or data.get("formatVersion", 0) > formatVersion:
        raise DataError(f"{path} is not a supported checkpoint")
    model = Forecaster(ModelConfig.fromDict(data["config"]))
    model.load_state_dict(data["state"])
    model.eval()
    return model, CharVocabulary(data["vocabulary"])
