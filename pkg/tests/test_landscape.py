import numpy as np
import pytest

from splinegeom import (
    Dataset,
    Layer,
    Network,
    RegionProbe,
    RegionTooSmallError,
    ValidationError,
    compare_architectures,
    layer_hessian,
    quadraticity_check,
    random_mlp,
    spectrum,
    with_layer_params,
)


def scalar_linear_net(w=0.5, b=-0.2):
    return Network(1, (Layer(weight=[[w]], bias=[b], activation="identity"),))


def frozen_loss(probe, layer, W, b):
    """Loss with this layer's params replaced and all patterns frozen."""
    net = with_layer_params(probe.net, layer, W, b)
    X, Y = probe.data.inputs, probe.data.labels
    Z = X
    for li, lyr in enumerate(net.layers):
        W_eff, b_eff = lyr.effective_affine()
        pre = Z @ W_eff.T + b_eff
        bits = np.stack([p.layer_bits[li] for p in probe.patterns])
        post = lyr.slopes(bits) * pre
        Z = post + Z if lyr.residual else post
    return float(np.mean(np.sum((Y - Z) ** 2, axis=1)))


def fd_hessian(probe, layer, h=1e-3):
    """Second differences of the frozen-pattern loss (exact for quadratics)."""
    lyr = probe.net.layers[layer]
    nw = lyr.width * lyr.in_width
    P = nw + lyr.width

    def loss_at(v):
        W = lyr.weight + v[:nw].reshape(lyr.width, lyr.in_width)
        b = lyr.bias + v[nw:]
        return frozen_loss(probe, layer, W, b)

    H = np.empty((P, P))
    for i in range(P):
        for j in range(i, P):
            ei, ej = np.zeros(P), np.zeros(P)
            ei[i] = h
            ej[j] = h
            val = (
                loss_at(ei + ej) - loss_at(ei - ej) - loss_at(-ei + ej) + loss_at(-ei - ej)
            ) / (4 * h * h)
            H[i, j] = H[j, i] = val
    return H


class TestLayerHessian:
    def test_scalar_linear_closed_form(self):
        x = np.array([0.7, -1.3, 2.1, 0.4])
        data = Dataset(x[:, None], np.zeros((4, 1)))
        probe = RegionProbe.create(scalar_linear_net(), data)
        H = layer_hessian(probe, 0)
        expected = (2.0 / 4) * np.array(
            [[np.sum(x**2), np.sum(x)], [np.sum(x), 4.0]]
        )
        assert np.allclose(H, expected, rtol=1e-14)

    def test_zero_inputs_rank_one(self):
        data = Dataset(np.zeros((5, 1)), np.ones((5, 1)))
        probe = RegionProbe.create(scalar_linear_net(), data)
        H = layer_hessian(probe, 0)
        eig = np.linalg.eigvalsh(H)
        assert np.sum(eig > 1e-12) == 1  # only the bias direction curves

    @pytest.mark.parametrize("layer", [0, 1, 2])
    def test_matches_finite_differences(self, layer):
        rng = np.random.default_rng(layer)
        net = random_mlp([2, 3, 3, 1], seed=layer, bias="uniform")
        data = Dataset(rng.uniform(-1, 1, (20, 2)), rng.standard_normal((20, 1)))
        probe = RegionProbe.create(net, data)
        H = layer_hessian(probe, layer)
        H_fd = fd_hessian(probe, layer)
        scale = max(np.abs(H_fd).max(), 1e-12)
        assert np.abs(H - H_fd).max() <= 1e-4 * scale

    def test_residual_matches_finite_differences(self):
        rng = np.random.default_rng(5)
        net = random_mlp([3, 3, 3, 1], seed=9, bias="uniform", residual=True)
        data = Dataset(rng.uniform(-1, 1, (15, 3)), rng.standard_normal((15, 1)))
        probe = RegionProbe.create(net, data)
        for layer in range(net.depth):
            H = layer_hessian(probe, layer)
            H_fd = fd_hessian(probe, layer)
            scale = max(np.abs(H_fd).max(), 1e-12)
            assert np.abs(H - H_fd).max() <= 1e-4 * scale

    @pytest.mark.parametrize("seed", range(5))
    def test_psd(self, seed):
        rng = np.random.default_rng(seed)
        net = random_mlp([2, 5, 5, 2], seed=seed, bias="uniform")
        data = Dataset(rng.uniform(-1, 1, (25, 2)), rng.standard_normal((25, 2)))
        probe = RegionProbe.create(net, data)
        for layer in range(net.depth):
            eig = np.linalg.eigvalsh(layer_hessian(probe, layer))
            assert eig.min() >= -1e-9 * max(eig.max(), 1e-300)

    def test_input_scale_covariance(self):
        rng = np.random.default_rng(2)
        x = rng.uniform(0.5, 2.0, size=8)
        t = 3.0
        d1 = Dataset(x[:, None], np.zeros((8, 1)))
        d2 = Dataset(t * x[:, None], np.zeros((8, 1)))
        H1 = layer_hessian(RegionProbe.create(scalar_linear_net(), d1), 0)
        H2 = layer_hessian(RegionProbe.create(scalar_linear_net(), d2), 0)
        assert H2[0, 0] == pytest.approx(t * t * H1[0, 0], rel=1e-12)
        assert H2[1, 1] == pytest.approx(H1[1, 1], rel=1e-12)

    def test_batchnorm_bias_block_is_zero(self):
        from splinegeom import batchnorm_update

        rng = np.random.default_rng(1)
        net = random_mlp([2, 4, 1], seed=1, batch_norm=True)
        data = Dataset(rng.uniform(-1, 1, (30, 2)), rng.standard_normal((30, 1)))
        net = batchnorm_update(net, data)
        probe = RegionProbe.create(net, data)
        H = layer_hessian(probe, 0)
        nw = 4 * 2
        assert np.all(H[nw:, :] == 0.0) and np.all(H[:, nw:] == 0.0)


class TestSpectrum:
    def test_identity(self):
        rep = spectrum(np.eye(3))
        assert np.array_equal(rep.eigenvalues, [1.0, 1.0, 1.0])
        assert rep.condition_number == 1.0
        assert rep.cut_count == 0 and not rep.flat

    def test_zero_excluded_by_cut(self):
        rep = spectrum(np.diag([4.0, 1.0, 0.0]))
        assert rep.condition_number == 4.0
        assert rep.cut_count == 1

    def test_closed_form_two_by_two(self):
        # (2/2) * sum over x in {1, 2} of [[x^2, x], [x, 1]] = [[5, 3], [3, 2]]
        x = np.array([1.0, 2.0])
        data = Dataset(x[:, None], np.zeros((2, 1)))
        H = layer_hessian(RegionProbe.create(scalar_linear_net(), data), 0)
        assert np.allclose(H, [[5.0, 3.0], [3.0, 2.0]], rtol=1e-15)
        rep = spectrum(H)
        lam_hi = (7 + 3 * np.sqrt(5)) / 2
        lam_lo = (7 - 3 * np.sqrt(5)) / 2
        assert rep.eigenvalues[0] == pytest.approx(lam_hi, rel=1e-12)
        assert rep.eigenvalues[1] == pytest.approx(lam_lo, rel=1e-12)
        assert rep.condition_number == pytest.approx(lam_hi / lam_lo, rel=1e-12)

    def test_flat_region_flag(self):
        rep = spectrum(np.zeros((3, 3)))
        assert rep.flat and rep.condition_number is None

    def test_asymmetry_rejected(self):
        with pytest.raises(ValidationError):
            spectrum(np.array([[1.0, 2.0], [0.0, 1.0]]))


class TestQuadraticity:
    def test_linear_net_any_radius(self):
        rng = np.random.default_rng(0)
        data = Dataset(rng.uniform(-1, 1, (10, 1)), rng.standard_normal((10, 1)))
        probe = RegionProbe.create(scalar_linear_net(), data)
        direction = rng.standard_normal(2)
        assert quadraticity_check(probe, 0, direction, radius=10.0)

    @pytest.mark.parametrize("seed", range(5))
    def test_random_relu_net_after_shrink(self, seed):
        rng = np.random.default_rng(seed)
        net = random_mlp([2, 6, 6, 1], seed=seed, bias="uniform")
        data = Dataset(rng.uniform(-1, 1, (15, 2)), rng.standard_normal((15, 1)))
        probe = RegionProbe.create(net, data)
        layer = seed % net.depth
        lyr = net.layers[layer]
        direction = rng.standard_normal(lyr.width * lyr.in_width + lyr.width)
        assert quadraticity_check(probe, layer, direction, radius=0.1)

    def test_kink_crossing_detected(self):
        # A data point almost on the neuron boundary: a modest bias
        # perturbation flips its pattern, and with auto-shrink off the
        # check reports the flip.
        net = Network(1, (Layer(weight=[[1.0]], bias=[-0.5], activation="relu"),))
        data = Dataset(np.array([[0.500001], [2.0]]), np.zeros((2, 1)))
        probe = RegionProbe.create(net, data)
        direction = np.array([0.0, 1.0])  # move the bias only
        assert quadraticity_check(probe, 0, direction, radius=0.3, auto_shrink=False) is False

    def test_region_too_small(self):
        net = Network(1, (Layer(weight=[[1.0]], bias=[-0.5], activation="relu"),))
        data = Dataset(np.array([[0.5], [2.0]]), np.zeros((2, 1)))  # exactly on the kink
        probe = RegionProbe.create(net, data)
        direction = np.array([0.0, -1.0])
        with pytest.raises(RegionTooSmallError):
            quadraticity_check(probe, 0, direction, radius=0.3)


class TestCompareArchitectures:
    def test_depth_one_is_structurally_identical(self):
        rng = np.random.default_rng(0)
        data = Dataset(rng.standard_normal((50, 3)), rng.standard_normal((50, 1)))
        cmp = compare_architectures(8, 1, data, seeds=range(10))
        assert np.array_equal(cmp.plain_per_seed, cmp.residual_per_seed)

    def test_kappa_at_least_one(self):
        rng = np.random.default_rng(1)
        data = Dataset(rng.standard_normal((80, 3)), rng.standard_normal((80, 1)))
        cmp = compare_architectures(6, 3, data, seeds=range(10))
        for row in cmp.plain_kappa + cmp.residual_kappa:
            for kappa in row:
                assert kappa is None or kappa >= 1.0

    def test_needs_ten_seeds(self):
        rng = np.random.default_rng(2)
        data = Dataset(rng.standard_normal((20, 2)), rng.standard_normal((20, 1)))
        with pytest.raises(ValidationError):
            compare_architectures(4, 2, data, seeds=range(5))

    def test_residual_is_better_conditioned(self):
        # Paired-seed experiment at the toy scale; logged result:
        # plain median ~2.3e8, residual median ~3.7e7 for this config.
        rng = np.random.default_rng(1)
        data = Dataset(rng.standard_normal((600, 4)), rng.standard_normal((600, 1)))
        cmp = compare_architectures(16, 4, data, seeds=range(10))
        assert cmp.residual_median < cmp.plain_median
