import numpy as np
import pytest
import torch

from singan.nets import (
    PAD_HALF,
    RECEPTIVE_FIELD,
    ConfigError,
    Discriminator,
    Generator,
    PaddingMode,
    ShapeError,
    apply_padding,
    init_weights,
    kernels_for_scale,
    noise_dims,
    receptive_field,
    zero_body,
    _run_body,
)


def make_gen(seed=0, channels=3, width=32):
    g = Generator(channels, width)
    init_weights(g, seed)
    g.eval()
    return g


def make_disc(seed=0, channels=3, width=32):
    d = Discriminator(channels, width)
    init_weights(d, seed)
    d.eval()
    return d


class TestReceptiveField:
    def test_five_blocks(self):
        assert receptive_field(5, 3) == 11
        assert RECEPTIVE_FIELD == 11

    def test_single_block(self):
        assert receptive_field(1, 3) == 3

    def test_invalid(self):
        with pytest.raises(ConfigError):
            receptive_field(0, 3)

    def test_empirical_probe(self):
        """Perturbing one input pixel changes only an 11x11 output patch."""
        g = make_gen(seed=42)
        size, cy, cx = 41, 20, 20
        zeros = torch.zeros(1, 3, size, size)
        z0 = torch.zeros(1, 3, size, size)
        z1 = z0.clone()
        z1[0, :, cy, cx] = 1.0
        with torch.no_grad():
            base = g(z0, zeros, padding_mode=PaddingMode.LAYER_ZERO)
            pert = g(z1, zeros, padding_mode=PaddingMode.LAYER_ZERO)
        diff = (pert - base).abs().sum(dim=1)[0]
        ys, xs = torch.nonzero(diff > 0, as_tuple=True)
        half = RECEPTIVE_FIELD // 2
        assert ys.min() >= cy - half and ys.max() <= cy + half
        assert xs.min() >= cx - half and xs.max() <= cx + half
        assert len(ys) > 0


class TestKernelSchedule:
    def test_doubling_table(self):
        expected = {0: 32, 1: 32, 2: 32, 3: 32, 4: 64, 5: 64, 6: 64, 7: 64, 8: 128}
        for i, k in expected.items():
            assert kernels_for_scale(i) == k

    def test_capped_at_128(self):
        assert kernels_for_scale(12) == 128
        assert kernels_for_scale(30) == 128

    def test_negative_index(self):
        with pytest.raises(ConfigError):
            kernels_for_scale(-1)


class TestGeneratorForward:
    @pytest.mark.parametrize("mode", list(PaddingMode))
    def test_residual_identity_bitwise(self, mode):
        g = make_gen(seed=1)
        zero_body(g)
        prev = torch.rand(1, 3, 25, 25) * 2 - 1
        z = torch.randn((1, 3) + noise_dims((25, 25), mode))
        out = g(z, prev, padding_mode=mode)
        assert torch.equal(out, prev)

    def test_pure_generative_equals_body(self):
        g = make_gen(seed=2)
        z = torch.randn(1, 3, 25, 25)
        zeros = torch.zeros(1, 3, 25, 25)
        with torch.no_grad():
            out = g(z, zeros, padding_mode=PaddingMode.INPUT_ZERO)
            img_p, z_p = apply_padding(zeros, z, PaddingMode.INPUT_ZERO)
            body = _run_body(g.blocks, z_p + img_p, layer_pad=False)
        assert torch.equal(out, body)

    def test_deterministic_in_eval(self):
        g = make_gen(seed=3)
        z = torch.randn(1, 3, 30, 20)
        prev = torch.rand(1, 3, 30, 20) * 2 - 1
        with torch.no_grad():
            a = g(z, prev)
            b = g(z, prev)
        assert torch.equal(a, b)

    def test_fully_convolutional_dims(self):
        g = make_gen(seed=4)
        for dims in [(11, 11), (25, 30), (64, 48)]:
            z = torch.randn((1, 3) + dims)
            prev = torch.zeros((1, 3) + dims)
            with torch.no_grad():
                out = g(z, prev)
            assert out.shape[-2:] == dims

    def test_dim_mismatch_raises(self):
        g = make_gen(seed=5)
        with pytest.raises(ShapeError):
            g(torch.randn(1, 3, 20, 20), torch.zeros(1, 3, 25, 25))

    def test_single_channel(self):
        g = make_gen(seed=6, channels=1)
        out = g(torch.randn(1, 1, 15, 15), torch.zeros(1, 1, 15, 15))
        assert out.shape == (1, 1, 15, 15)


class TestDiscriminator:
    def test_zero_weights_zero_map(self):
        d = Discriminator(3, 32)
        for p in d.parameters():
            torch.nn.init.zeros_(p)
        with torch.no_grad():
            m = d(torch.randn(1, 3, 25, 25))
        assert torch.equal(m, torch.zeros_like(m))

    def test_map_dims_and_scalar_is_mean(self):
        d = make_disc(seed=7)
        img = torch.randn(1, 3, 25, 30)
        with torch.no_grad():
            m = d(img)
        assert m.shape == (1, 1, 15, 20)
        assert torch.equal(d.score(img), m.mean())

    def test_too_small_input(self):
        d = make_disc(seed=8)
        with pytest.raises(ShapeError):
            d(torch.randn(1, 3, 10, 12))

    def test_translation_equivariance_interior(self):
        d = make_disc(seed=9)
        img = torch.from_numpy(
            np.random.default_rng(0).uniform(-1, 1, (1, 3, 32, 32)).astype(np.float32)
        )
        shifted = torch.roll(img, shifts=(1, 1), dims=(2, 3))
        with torch.no_grad():
            m = d(img)[0, 0]
            m2 = d(shifted)[0, 0]
        # content moved down-right by 1px; interior scores follow it
        assert torch.allclose(m2[1:, 1:], m[:-1, :-1], atol=1e-5)


class TestPadding:
    def test_pad_half_from_receptive_field(self):
        assert PAD_HALF == RECEPTIVE_FIELD // 2 == 5

    def test_layer_zero_passthrough(self):
        img = torch.randn(1, 3, 25, 25)
        z = torch.randn(1, 3, 25, 25)
        pi, pz = apply_padding(img, z, PaddingMode.LAYER_ZERO)
        assert torch.equal(pi, img) and torch.equal(pz, z)

    def test_input_zero_pads_both(self):
        img = torch.randn(1, 3, 25, 25)
        z = torch.randn(1, 3, 25, 25)
        pi, pz = apply_padding(img, z, PaddingMode.INPUT_ZERO)
        assert pi.shape[-2:] == (35, 35) and pz.shape[-2:] == (35, 35)
        assert torch.equal(pi[..., 5:-5, 5:-5], img)
        assert pi[..., :5, :].abs().sum() == 0
        # the generator crops back to the unpadded size
        g = make_gen(seed=10)
        out = g(z, img, padding_mode=PaddingMode.INPUT_ZERO)
        assert out.shape[-2:] == (25, 25)

    def test_noise_pad_dims(self):
        assert noise_dims((25, 25), PaddingMode.NOISE_PAD) == (35, 35)
        assert noise_dims((25, 25), PaddingMode.INPUT_ZERO) == (25, 25)
        img = torch.randn(1, 3, 25, 25)
        z = torch.randn(1, 3, 35, 35)
        pi, pz = apply_padding(img, z, PaddingMode.NOISE_PAD)
        assert pi.shape == pz.shape
        assert torch.equal(pz, z)

    def test_noise_pad_wrong_dims(self):
        img = torch.randn(1, 3, 25, 25)
        with pytest.raises(ShapeError):
            apply_padding(img, torch.randn(1, 3, 25, 25), PaddingMode.NOISE_PAD)

    def test_unknown_mode(self):
        with pytest.raises(ConfigError):
            PaddingMode.parse("mirror")


class TestWeightInit:
    def test_seeded_init_reproducible(self):
        a = Generator(3, 32)
        b = Generator(3, 32)
        init_weights(a, 123)
        init_weights(b, 123)
        for pa, pb in zip(a.parameters(), b.parameters()):
            assert torch.equal(pa, pb)

    def test_different_seeds_differ(self):
        a = Generator(3, 32)
        b = Generator(3, 32)
        init_weights(a, 123)
        init_weights(b, 124)
        assert not torch.equal(a.blocks[0].conv.weight, b.blocks[0].conv.weight)
