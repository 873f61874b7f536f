import numpy as np
import pytest

from splinegeom import (
    DegeneratePoolError,
    LatentDomain,
    Layer,
    Network,
    ShapeError,
    ValidationError,
    build_pool,
    forward_batch,
    jacobian_volume,
    jacobian_volumes_batch,
    polarity_sweep,
    random_mlp,
    resample,
)
from splinegeom.sampler import pool_weights


def two_tile_generator(a1=(1.0, 0.0), a2=(0.0, 2.0)):
    """1D -> 2D generator with slope a1 on x < 0 and a2 on x >= 0."""
    a1, a2 = np.asarray(a1), np.asarray(a2)
    return Network(
        1,
        (
            Layer(weight=[[1.0], [-1.0]], bias=[0.0, 0.0], activation="relu"),
            Layer(weight=np.column_stack([a2, -a1]), bias=[0.0, 0.0], activation="identity"),
        ),
    )


def staircase_generator():
    """1D -> 2D generator with four equal-length tiles of factors 1..4."""
    slopes = [np.array([1.0, 0.0]), np.array([0.0, 2.0]),
              np.array([3.0, 0.0]), np.array([0.0, 4.0])]
    W2 = np.column_stack([slopes[0]] + [slopes[k] - slopes[k - 1] for k in (1, 2, 3)])
    return Network(
        1,
        (
            Layer(weight=[[1.0]] * 4, bias=[0.0, -0.25, -0.5, -0.75], activation="relu"),
            Layer(weight=W2, bias=[0.0, 0.0], activation="identity"),
        ),
    )


UNIT_DOMAIN = LatentDomain(dim=1, box=np.array([[-1.0, 1.0]]))


class TestJacobianVolume:
    def test_scalar_doubling(self):
        gen = Network(1, (Layer(weight=[[2.0]], bias=[0.0], activation="identity"),))
        assert jacobian_volume(gen, np.array([0.3])) == 2.0

    def test_line_into_plane(self):
        gen = Network(1, (Layer(weight=[[1.0], [1.0]], bias=[0.0, 0.0], activation="identity"),))
        assert jacobian_volume(gen, np.array([0.3])) == pytest.approx(np.sqrt(2.0), rel=1e-15)

    def test_shape_guard(self):
        gen = Network(2, (Layer(weight=[[1.0, 0.0]], bias=[0.0], activation="identity"),))
        with pytest.raises(ShapeError):
            jacobian_volume(gen, np.array([0.0, 0.0]))

    def test_rank_deficient_is_zero(self):
        gen = Network(2, (Layer(weight=np.zeros((3, 2)), bias=np.zeros(3), activation="identity"),))
        assert jacobian_volume(gen, np.zeros(2)) == 0.0

    def test_matches_mesh_area_ratio(self):
        # Oracle: map a fine square mesh of an in-tile patch and compare
        # its surface area to the patch area.
        from splinegeom.complexity import neuron_distances

        gen = random_mlp([2, 6, 6, 3], seed=2, bias="uniform")
        rng = np.random.default_rng(0)
        checked = 0
        while checked < 5:
            x = rng.uniform(-1, 1, 2)
            dmin = min(d for _, _, d in neuron_distances(gen, x) if np.isfinite(d))
            if dmin < 1e-3:
                continue
            checked += 1
            h = 0.4 * dmin / np.sqrt(2)
            k = 8
            g = np.linspace(-h, h, k + 1)
            P = np.stack(np.meshgrid(g, g), axis=-1) + x
            Y, _ = forward_batch(gen, P.reshape(-1, 2))
            Y = Y.reshape(k + 1, k + 1, 3)
            area = 0.0
            for i in range(k):
                for j in range(k):
                    a, b, c, d = Y[i, j], Y[i + 1, j], Y[i + 1, j + 1], Y[i, j + 1]
                    area += 0.5 * np.linalg.norm(np.cross(b - a, c - a))
                    area += 0.5 * np.linalg.norm(np.cross(c - a, d - a))
            ratio = area / (2 * h) ** 2
            vol = jacobian_volume(gen, x)
            assert abs(ratio - vol) <= 0.01 * vol

    def test_batch_agrees_with_scalar(self):
        gen = two_tile_generator()
        X = np.array([[-0.5], [0.5], [0.9]])
        batch = jacobian_volumes_batch(gen, X)
        singles = [jacobian_volume(gen, x) for x in X]
        assert np.allclose(batch, singles, rtol=1e-15)
        assert np.allclose(batch, [1.0, 2.0, 2.0], rtol=1e-15)


class TestBuildPool:
    def test_rho_zero_is_uniform(self):
        gen = two_tile_generator()
        pool = build_pool(gen, UNIT_DOMAIN, N=500, rho=0.0, seed=3)
        assert np.allclose(pool.weights, 1.0 / 500, rtol=0, atol=1e-18)

    def test_single_tile_uniform_for_any_rho(self):
        gen = Network(1, (Layer(weight=[[3.0], [4.0]], bias=[1.0, -2.0], activation="identity"),))
        for rho in (-10.0, -0.5, 0.0, 0.5, 10.0):
            pool = build_pool(gen, UNIT_DOMAIN, N=200, rho=rho, seed=1)
            assert np.allclose(pool.weights, 1.0 / 200, rtol=1e-12)

    def test_two_tile_magnet_split(self):
        gen = two_tile_generator()
        pool = build_pool(gen, UNIT_DOMAIN, N=100_000, rho=0.5, seed=7)
        mass_fast = pool.weights[pool.proposals[:, 0] >= 0].sum()
        assert mass_fast == pytest.approx(2.0 / 3.0, abs=0.01)

    def test_zero_volume_proposals_get_zero_weight(self):
        # Generator collapsing x < 0 to a point: volumes are 0 there.
        gen = Network(
            1,
            (
                Layer(weight=[[1.0]], bias=[0.0], activation="relu"),
                Layer(weight=[[1.0], [2.0]], bias=[0.0, 0.0], activation="identity"),
            ),
        )
        pool = build_pool(gen, UNIT_DOMAIN, N=1000, rho=0.5, seed=5)
        dead = pool.proposals[:, 0] < 0
        assert np.all(pool.weights[dead] == 0.0)
        assert pool.weights.sum() == pytest.approx(1.0, abs=1e-12)

    def test_degenerate_pool_raises(self):
        gen = Network(1, (Layer(weight=[[0.0]], bias=[0.0], activation="identity"),))
        with pytest.raises(DegeneratePoolError):
            build_pool(gen, UNIT_DOMAIN, N=50, rho=0.5, seed=0)

    def test_weight_scale_invariance(self):
        vols = np.array([0.5, 1.5, 2.5, 0.0, 3.0])
        w1 = pool_weights(vols, rho=0.7)
        w2 = pool_weights(123.0 * vols, rho=0.7)
        assert np.allclose(w1, w2, rtol=1e-12)

    def test_extreme_rho_is_finite(self):
        vols = np.array([1e-8, 1.0, 1e8])
        for rho in (-50.0, 50.0):
            w = pool_weights(vols, rho)
            assert np.all(np.isfinite(w)) and w.sum() == pytest.approx(1.0)


class TestResample:
    def test_single_proposal_pool(self):
        gen = two_tile_generator()
        pool = build_pool(gen, UNIT_DOMAIN, N=1, rho=0.5, seed=2)
        latents, outputs = resample(pool, 7, seed=0)
        assert latents.shape == (7, 1)
        assert np.all(latents == latents[0])
        assert np.allclose(outputs, forward_batch(gen, latents)[0])

    def test_uniform_weights_match_base_occupancy(self):
        gen = two_tile_generator()
        pool = build_pool(gen, UNIT_DOMAIN, N=20_000, rho=0.0, seed=11)
        latents, _ = resample(pool, 10_000, seed=12)
        frac = np.mean(latents[:, 0] >= 0)
        sigma = 0.5 / np.sqrt(10_000)
        assert abs(frac - 0.5) < 3 * sigma + 0.01

    def test_two_tile_magnet_occupancy(self):
        gen = two_tile_generator()
        pool = build_pool(gen, UNIT_DOMAIN, N=100_000, rho=0.5, seed=7)
        latents, _ = resample(pool, 10_000, seed=8)
        frac = np.mean(latents[:, 0] >= 0)
        assert abs(frac - 2.0 / 3.0) < 0.02

    def test_multi_tile_frequencies(self):
        # Four tiles, equal lengths, factors 1..4: at rho = 1/2 the
        # resampled tile frequencies follow factor_k / sum(factors).
        gen = staircase_generator()
        domain = LatentDomain(dim=1, box=np.array([[0.0, 1.0]]))
        pool = build_pool(gen, domain, N=200_000, rho=0.5, seed=20)
        latents, _ = resample(pool, 20_000, seed=21)
        edges = [0.0, 0.25, 0.5, 0.75, 1.0]
        for k in range(4):
            frac = np.mean((latents[:, 0] >= edges[k]) & (latents[:, 0] < edges[k + 1]))
            target = (k + 1) / 10.0
            sigma = np.sqrt(target * (1 - target) / 20_000)
            assert abs(frac - target) < 4 * sigma + 0.005

    def test_invalid_count(self):
        gen = two_tile_generator()
        pool = build_pool(gen, UNIT_DOMAIN, N=10, rho=0.0, seed=1)
        with pytest.raises(ValidationError):
            resample(pool, 0, seed=0)

    def test_determinism(self):
        gen = two_tile_generator()
        p1 = build_pool(gen, UNIT_DOMAIN, N=5000, rho=0.5, seed=42)
        p2 = build_pool(gen, UNIT_DOMAIN, N=5000, rho=0.5, seed=42)
        assert np.array_equal(p1.proposals, p2.proposals)
        assert np.array_equal(p1.weights, p2.weights)
        l1, o1 = resample(p1, 100, seed=9)
        l2, o2 = resample(p2, 100, seed=9)
        assert np.array_equal(l1, l2) and np.array_equal(o1, o2)


class TestPolaritySweep:
    def test_single_tile_full_ess(self):
        gen = Network(1, (Layer(weight=[[1.0], [2.0]], bias=[0.0, 0.0], activation="identity"),))
        report = polarity_sweep(gen, UNIT_DOMAIN, [-2.0, 0.0, 2.0], N=400, seed=5, n_out=100)
        for point in report:
            assert point.ess == pytest.approx(400.0, rel=1e-9)

    def test_two_tile_limits_and_monotonicity(self):
        gen = two_tile_generator()
        rhos = [-10.0, -1.0, 0.0, 1.0, 10.0]
        report = polarity_sweep(gen, UNIT_DOMAIN, rhos, N=100_000, seed=13, n_out=10_000)
        means = [p.mean_volume_resampled for p in report]
        assert means[0] == pytest.approx(1.0, abs=0.01)   # mode tile
        assert means[-1] == pytest.approx(2.0, abs=0.01)  # anti-mode tile
        assert all(a <= b + 1e-12 for a, b in zip(means, means[1:]))
        weighted = [p.mean_volume_weighted for p in report]
        assert all(a <= b + 1e-12 for a, b in zip(weighted, weighted[1:]))

    def test_rho_zero_matches_native_statistics(self):
        gen = two_tile_generator()
        report = polarity_sweep(gen, UNIT_DOMAIN, [0.0], N=50_000, seed=3, n_out=5_000)
        pool = build_pool(gen, UNIT_DOMAIN, N=50_000, rho=0.0, seed=3)
        assert report[0].mean_volume_weighted == pytest.approx(
            float(np.mean(pool.volumes)), rel=1e-12
        )
        assert report[0].ess == pytest.approx(pool.ess, rel=1e-12)

    def test_monotone_weighted_mean_random_generator(self):
        gen = random_mlp([2, 8, 8, 4], seed=6, bias="uniform")
        domain = LatentDomain(dim=2, box=np.array([[-1.0, 1.0], [-1.0, 1.0]]))
        report = polarity_sweep(gen, domain, np.linspace(-3, 3, 9), N=20_000, seed=2, n_out=100)
        weighted = [p.mean_volume_weighted for p in report]
        assert all(a <= b + 1e-12 for a, b in zip(weighted, weighted[1:]))
