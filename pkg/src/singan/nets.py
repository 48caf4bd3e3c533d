"""Per-scale generator and critic architectures.

Both nets are small fully-convolutional stacks of five 3x3 convolutions:
four Conv-BatchNorm-LeakyReLU(0.2) blocks followed by a bare 3x3 head
(tanh to image channels for the generator, a single linear channel of
patch scores for the critic). Five 3x3 layers give an 11x11 receptive
field, so each output unit judges one 11x11 patch.

All convolutions are built unpadded; boundary handling is a forward-pass
policy (see PaddingMode), which keeps one weight set usable under every
padding configuration.
"""

from __future__ import annotations

import enum

import torch
import torch.nn.functional as F
from torch import nn


NUM_CONV_LAYERS = 5
KERNEL_SIZE = 3
BASE_KERNELS = 32
MAX_KERNELS = 128
LEAKY_SLOPE = 0.2


class PaddingMode(str, enum.Enum):
    """Boundary policy for the generator's inputs.

    LAYER_ZERO  — zero padding inside every conv layer, inputs untouched.
    INPUT_ZERO  — image and noise zero-padded once by half the receptive
                  field (5 px) per side; convs run unpadded.
    NOISE_PAD   — image zero-padded as above, but the noise map is drawn
                  10 px larger per axis so the border carries real noise.
    """

    LAYER_ZERO = "layer"
    INPUT_ZERO = "input"
    NOISE_PAD = "noise"

    @classmethod
    def parse(cls, value) -> "PaddingMode":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value))
        except ValueError:
            raise ConfigError(f"unknown padding mode {value!r}") from None


class ConfigError(ValueError):
    pass


class ShapeError(ValueError):
    pass


def receptive_field(num_blocks: int, kernel: int = KERNEL_SIZE) -> int:
    """Receptive field of a stack of stride-1 convolutions."""
    if num_blocks < 1:
        raise ConfigError("num_blocks must be >= 1")
    return 1 + num_blocks * (kernel - 1)


RECEPTIVE_FIELD = receptive_field(NUM_CONV_LAYERS)  # 11
PAD_HALF = RECEPTIVE_FIELD // 2  # 5


def kernels_for_scale(index_from_coarse: int) -> int:
    """Channel width at a scale: 32 at the coarsest, doubled every 4 scales, capped at 128."""
    if index_from_coarse < 0:
        raise ConfigError("scale index must be >= 0")
    return min(BASE_KERNELS * 2 ** (index_from_coarse // 4), MAX_KERNELS)


def noise_dims(image_dims: tuple[int, int], mode: PaddingMode) -> tuple[int, int]:
    """Spatial dims a noise map must have for the given padding mode."""
    h, w = image_dims
    if mode == PaddingMode.NOISE_PAD:
        return (h + 2 * PAD_HALF, w + 2 * PAD_HALF)
    return (h, w)


def apply_padding(
    img: torch.Tensor, z: torch.Tensor, mode: PaddingMode
) -> tuple[torch.Tensor, torch.Tensor]:
    """Prepare (image, noise) tensors for the generator body.

    Returns tensors of equal spatial dims. For LAYER_ZERO both pass
    through unchanged (the body pads per layer); for INPUT_ZERO both are
    zero-padded by 5 per side; for NOISE_PAD the image is zero-padded and
    the noise must already be 10 px larger per axis.
    """
    mode = PaddingMode.parse(mode)
    if mode == PaddingMode.LAYER_ZERO:
        if img.shape[-2:] != z.shape[-2:]:
            raise ShapeError(f"noise dims {tuple(z.shape[-2:])} != image dims {tuple(img.shape[-2:])}")
        return img, z
    pad = (PAD_HALF,) * 4
    img_p = F.pad(img, pad)
    if mode == PaddingMode.INPUT_ZERO:
        if img.shape[-2:] != z.shape[-2:]:
            raise ShapeError(f"noise dims {tuple(z.shape[-2:])} != image dims {tuple(img.shape[-2:])}")
        return img_p, F.pad(z, pad)
    # NOISE_PAD: the caller drew the noise oversized.
    if z.shape[-2:] != img_p.shape[-2:]:
        raise ShapeError(
            f"noise-padded mode expects noise dims {tuple(img_p.shape[-2:])}, got {tuple(z.shape[-2:])}"
        )
    return img_p, z


class ConvBlock(nn.Module):
    """Unpadded 3x3 conv, optionally BatchNorm, then LeakyReLU/tanh/identity."""

    def __init__(self, in_ch: int, out_ch: int, norm: bool = True, act: str = "lrelu"):
        super().__init__()
        self.conv = nn.Conv2d(in_ch, out_ch, KERNEL_SIZE, stride=1, padding=0)
        self.norm = nn.BatchNorm2d(out_ch) if norm else None
        self.act = act

    def forward(self, x: torch.Tensor, layer_pad: bool = False) -> torch.Tensor:
        if layer_pad:
            x = F.pad(x, (1, 1, 1, 1))
        x = self.conv(x)
        if self.norm is not None:
            x = self.norm(x)
        if self.act == "lrelu":
            x = F.leaky_relu(x, LEAKY_SLOPE)
        elif self.act == "tanh":
            x = torch.tanh(x)
        return x


def _make_body(channels: int, width: int, head_out: int, head_act: str) -> nn.ModuleList:
    blocks = [ConvBlock(channels, width)]
    for _ in range(NUM_CONV_LAYERS - 2):
        blocks.append(ConvBlock(width, width))
    blocks.append(ConvBlock(width, head_out, norm=False, act=head_act))
    return nn.ModuleList(blocks)


def _run_body(blocks: nn.ModuleList, x: torch.Tensor, layer_pad: bool) -> torch.Tensor:
    for block in blocks:
        x = block(x, layer_pad=layer_pad)
    return x


class Generator(nn.Module):
    """One pyramid scale: residual refinement of the upsampled coarser image.

    ``forward(z, prev_up)`` returns ``prev_up + body(z + prev_up)`` where
    the padding policy decides how boundaries are fed. At the coarsest
    scale ``prev_up`` is the zero field and the output is purely the body
    of the noise.
    """

    def __init__(self, channels: int, width: int, padding_mode: PaddingMode = PaddingMode.INPUT_ZERO):
        super().__init__()
        self.channels = channels
        self.width = width
        self.padding_mode = PaddingMode.parse(padding_mode)
        self.blocks = _make_body(channels, width, channels, head_act="tanh")

    def forward(
        self,
        z: torch.Tensor,
        prev_up: torch.Tensor,
        padding_mode: PaddingMode | None = None,
    ) -> torch.Tensor:
        mode = PaddingMode.parse(padding_mode) if padding_mode is not None else self.padding_mode
        if prev_up.shape[-2:] != noise_dims_inverse(z.shape[-2:], mode):
            raise ShapeError(
                f"noise {tuple(z.shape[-2:])} incompatible with image {tuple(prev_up.shape[-2:])} under {mode.value}"
            )
        img_p, z_p = apply_padding(prev_up, z, mode)
        residual = _run_body(self.blocks, z_p + img_p, layer_pad=(mode == PaddingMode.LAYER_ZERO))
        if residual.shape[-2:] != prev_up.shape[-2:]:
            raise ShapeError(
                f"body output {tuple(residual.shape[-2:])} != input {tuple(prev_up.shape[-2:])}"
            )
        return prev_up + residual


def noise_dims_inverse(z_dims: tuple[int, int], mode: PaddingMode) -> tuple[int, int]:
    """Image dims implied by a noise map's dims under the padding mode."""
    h, w = int(z_dims[0]), int(z_dims[1])
    if mode == PaddingMode.NOISE_PAD:
        return (h - 2 * PAD_HALF, w - 2 * PAD_HALF)
    return (h, w)


class Discriminator(nn.Module):
    """Patch critic: a map of scores over all overlapping 11x11 patches.

    Convolutions are unpadded, so the map has dims (H-10, W-10); the
    scalar score of an image is the mean of that map.
    """

    def __init__(self, channels: int, width: int):
        super().__init__()
        self.channels = channels
        self.width = width
        self.blocks = _make_body(channels, width, 1, head_act="none")

    def forward(self, img: torch.Tensor) -> torch.Tensor:
        if img.shape[-2] < RECEPTIVE_FIELD or img.shape[-1] < RECEPTIVE_FIELD:
            raise ShapeError(
                f"image {tuple(img.shape[-2:])} smaller than receptive field {RECEPTIVE_FIELD}"
            )
        return _run_body(self.blocks, img, layer_pad=False)

    def score(self, img: torch.Tensor) -> torch.Tensor:
        return self.forward(img).mean()


def init_weights(module: nn.Module, seed: int) -> None:
    """DCGAN-style init: conv N(0, 0.02), norm weight N(1, 0.02), biases 0."""
    gen = torch.Generator().manual_seed(seed & 0x7FFFFFFFFFFFFFFF)
    for m in module.modules():
        if isinstance(m, nn.Conv2d):
            nn.init.normal_(m.weight, 0.0, 0.02, generator=gen)
            if m.bias is not None:
                nn.init.zeros_(m.bias)
        elif isinstance(m, nn.BatchNorm2d):
            nn.init.normal_(m.weight, 1.0, 0.02, generator=gen)
            nn.init.zeros_(m.bias)


def zero_body(gen: Generator) -> None:
    """Force the residual branch to the zero function (head conv zeroed)."""
    head = gen.blocks[-1]
    with torch.no_grad():
        head.conv.weight.zero_()
        head.conv.bias.zero_()
