import numpy as np
import pytest

from bdris.channel import ChannelSet, draw_channel_set, rng_stream, unvec, vec
from bdris.config import SystemConfig
from bdris.errors import DegenerateInputError, SingularityError
from bdris.scattering import (
    ao_interference_nulling,
    dris_nulling,
    dris_projection,
    identity_scattering,
    maxF_relaxed,
    maxF_scattering,
    maxl2_scattering,
    min_elements_for_nulling,
    mrt_relaxed,
    mrt_scattering,
    project_nulling,
    project_symmetric,
    project_symmetric_unitary,
    project_unitary,
    random_init,
    zf_relaxed_scattering,
)

RNG = np.random.default_rng(20240811)


def cgauss(*shape, rng=RNG):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def unit_cfg(**kw):
    base = dict(c0=1.0, d_bs_ris=1.0, d_ris_user=1.0)
    base.update(kw)
    return SystemConfig(**base)


def draw(cfg, key):
    return draw_channel_set(cfg, rng_stream(cfg.seed, key))


def random_unitary(n, rng):
    q, r = np.linalg.qr(rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n)))
    return q * (np.diag(r) / np.abs(np.diag(r)))


class TestProjectSymmetric:
    def test_forced_example(self):
        out = project_symmetric(np.array([[0.0, 1.0], [0.0, 0.0]]))
        assert np.array_equal(out, np.array([[0.0, 0.5], [0.5, 0.0]]))

    def test_symmetric_fixed_point(self):
        x = cgauss(4, 4)
        s = x + x.T
        assert np.array_equal(project_symmetric(s), s)

    def test_antisymmetric_maps_to_zero(self):
        x = cgauss(4, 4)
        a = x - x.T
        assert np.allclose(project_symmetric(a), 0.0)

    def test_output_exactly_symmetric(self):
        for _ in range(20):
            out = project_symmetric(cgauss(5, 5))
            assert np.array_equal(out, out.T)


class TestProjectUnitary:
    def test_scaled_identity(self):
        assert np.allclose(project_unitary(2.0 * np.eye(3)), np.eye(3))

    def test_unitary_fixed_point(self):
        u = random_unitary(5, np.random.default_rng(1))
        assert np.linalg.norm(project_unitary(u) - u) < 1e-12

    def test_positive_diagonal(self):
        assert np.allclose(project_unitary(np.diag([3.0, 0.5])), np.eye(2))

    def test_zero_input_rejected(self):
        with pytest.raises(DegenerateInputError):
            project_unitary(np.zeros((3, 3)))

    def test_nearest_among_random_unitaries(self):
        rng = np.random.default_rng(7)
        for _ in range(3):
            x = cgauss(4, 4, rng=rng)
            best = project_unitary(x)
            d_best = np.linalg.norm(x - best)
            for _ in range(1000):
                q = random_unitary(4, rng)
                assert d_best <= np.linalg.norm(x - q) + 1e-12


def takagi_family(theta, alpha, beta):
    """Every 2x2 symmetric unitary matrix, on a 3-parameter grid."""
    c, s = np.cos(theta), np.sin(theta)
    e11 = c * np.exp(1j * alpha)
    e12 = s * np.exp(1j * beta)
    e22 = -c * np.exp(1j * (2 * beta - alpha))
    return e11, e12, e22


def grid_min_distance(b, stages=6, pts=48):
    """Brute-force nearest symmetric unitary to the 2x2 matrix b."""
    centers = np.array([np.pi / 4, np.pi, np.pi])
    half = np.array([np.pi / 4, np.pi, np.pi])
    best = np.inf
    for _ in range(stages):
        th = np.linspace(centers[0] - half[0], centers[0] + half[0], pts)
        al = np.linspace(centers[1] - half[1], centers[1] + half[1], pts)
        be = np.linspace(centers[2] - half[2], centers[2] + half[2], pts)
        tg, ag, bg = np.meshgrid(th, al, be, indexing="ij")
        e11, e12, e22 = takagi_family(tg, ag, bg)
        d2 = (
            np.abs(e11 - b[0, 0]) ** 2
            + np.abs(e12 - b[0, 1]) ** 2
            + np.abs(e12 - b[1, 0]) ** 2
            + np.abs(e22 - b[1, 1]) ** 2
        )
        idx = np.unravel_index(np.argmin(d2), d2.shape)
        best = min(best, float(np.sqrt(d2[idx])))
        centers = np.array([tg[idx], ag[idx], bg[idx]])
        half = half / 8.0
    return best


class TestProjectSymmetricUnitary:
    def test_symmetric_unitary_fixed_point(self):
        rng = np.random.default_rng(3)
        u = random_unitary(4, rng)
        s = u @ u.T  # symmetric unitary by construction
        out = project_symmetric_unitary(s)
        assert np.linalg.norm(out.theta - s) < 1e-10

    def test_identity(self):
        out = project_symmetric_unitary(np.eye(4))
        assert np.allclose(out.theta, np.eye(4))

    def test_feasibility_flags(self):
        out = project_symmetric_unitary(cgauss(6, 6))
        assert out.sym_residual == 0.0
        assert out.uni_residual <= 1e-10

    def test_matches_bruteforce_on_2x2(self):
        rng = np.random.default_rng(11)
        for _ in range(5):
            x = cgauss(2, 2, rng=rng)
            b = project_symmetric(x)
            ours = project_symmetric_unitary(x).theta
            d_ours = np.linalg.norm(ours - b)
            d_grid = grid_min_distance(b)
            assert d_ours <= d_grid + 1e-8
            assert abs(d_ours - d_grid) <= 1e-8

    def test_rank_deficient_input(self):
        # symmetrized rank-1 matrix exercises the null-space replacement
        v = cgauss(5)
        x = np.outer(v, v)
        out = project_symmetric_unitary(x)
        assert out.sym_residual == 0.0
        assert out.uni_residual <= 1e-10

    def test_zero_input_rejected(self):
        with pytest.raises(DegenerateInputError):
            project_symmetric_unitary(np.zeros((3, 3)))
        x = cgauss(3, 3)
        with pytest.raises(DegenerateInputError):
            project_symmetric_unitary(x - x.T)


class TestMrt:
    def test_identity_cascade(self):
        cs = ChannelSet.from_channels(np.eye(2), np.eye(2))
        assert np.allclose(mrt_relaxed(cs), np.eye(2))
        assert np.allclose(mrt_scattering(cs).theta, np.eye(2))

    def test_diagonal_cascade(self):
        # G = diag(2, 0) comes from H = diag(2, 0), W = I
        cs = ChannelSet.from_channels(np.diag([2.0, 0.0]), np.eye(2))
        assert np.allclose(mrt_relaxed(cs), np.diag([np.sqrt(2.0), 0.0]))

    def test_norm_constraint(self):
        cfg = unit_cfg(K=3, N=8)
        for key in range(10):
            cs = draw(cfg, key)
            th = mrt_relaxed(cs)
            assert np.real(np.vdot(th, th)) == pytest.approx(cfg.N, rel=1e-12)

    def test_relaxed_maximizes_cophased_trace(self):
        cfg = unit_cfg(K=2, N=4)
        cs = draw(cfg, 0)
        th = mrt_relaxed(cs)
        best = np.real(np.trace(cs.G @ th))
        rng = np.random.default_rng(5)
        for _ in range(1000):
            cand = cgauss(4, 4, rng=rng)
            cand *= np.sqrt(cfg.N / np.real(np.vdot(cand, cand)))
            assert best >= np.real(np.trace(cs.G @ cand)) - 1e-12

    def test_symmetric_orthogonal_cascade_is_fixed_point(self):
        # Householder reflection: real symmetric orthogonal G
        v = np.random.default_rng(9).standard_normal(4)
        v /= np.linalg.norm(v)
        g = np.eye(4) - 2.0 * np.outer(v, v)
        cs = ChannelSet.from_channels(g, np.eye(4))  # G = W H = g
        out = mrt_scattering(cs).theta
        assert np.linalg.norm(out - g) < 1e-10

    def test_zero_channel_rejected(self):
        cs = ChannelSet.from_channels(np.zeros((2, 3)), np.zeros((3, 2)))
        with pytest.raises(DegenerateInputError):
            mrt_relaxed(cs)


class TestZfRelaxed:
    def test_identity_channels(self):
        cs = ChannelSet.from_channels(np.eye(3), np.eye(3))
        assert np.allclose(zf_relaxed_scattering(cs), np.eye(3))

    def test_equivalent_channel_is_scaled_identity(self):
        cfg = unit_cfg(K=2, N=4)
        cs = draw(cfg, 1)
        th = zf_relaxed_scattering(cs)
        e = cs.H @ th @ cs.W
        c = np.mean(np.diag(e))
        assert np.allclose(e, c * np.eye(2), atol=1e-8 * abs(c))

    def test_symmetrized_version_breaks_nulling(self):
        cfg = unit_cfg(K=2, N=4)
        off_ratios = []
        for key in range(20):
            cs = draw(cfg, key)
            th = project_symmetric(zf_relaxed_scattering(cs))
            e = cs.H @ th @ cs.W
            off = e - np.diag(np.diag(e))
            off_ratios.append(np.linalg.norm(off) ** 2 / np.linalg.norm(e) ** 2)
        assert np.median(off_ratios) > 1e-3

    def test_rank_deficient_rejected(self):
        h = np.ones((2, 4), dtype=complex)  # duplicated rows
        w = cgauss(4, 2)
        cs = ChannelSet.from_channels(h, w)
        with pytest.raises(SingularityError):
            zf_relaxed_scattering(cs)

    def test_needs_enough_elements(self):
        cs = ChannelSet.from_channels(cgauss(3, 2), cgauss(2, 3))
        with pytest.raises(SingularityError):
            zf_relaxed_scattering(cs)


class TestMinElements:
    def test_known_values(self):
        assert min_elements_for_nulling(1) == 1
        assert min_elements_for_nulling(2) == 3
        assert min_elements_for_nulling(5) == 9

    def test_matches_integer_search(self):
        # smallest N with N(N+1)/2 >= 2K(K-1)
        for k in range(2, 60):
            target = 2 * k * (k - 1)
            n = 1
            while n * (n + 1) // 2 < target:
                n += 1
            assert min_elements_for_nulling(k) == n

    def test_invalid(self):
        with pytest.raises(ValueError):
            min_elements_for_nulling(0)


class TestProjectNulling:
    def test_fixed_point(self):
        cfg = unit_cfg(K=2, N=3)
        cs = draw(cfg, 0)
        th = project_nulling(cgauss(3, 3), cs)
        again = project_nulling(th, cs)
        assert np.linalg.norm(again - th) < 1e-12 * np.linalg.norm(th)

    def test_residual_zero(self):
        cfg = unit_cfg(K=3, N=5)
        cs = draw(cfg, 1)
        for _ in range(5):
            th = project_nulling(cgauss(5, 5), cs)
            r = cs.A_bar.T @ vec(th)
            bound = 1e-10 * np.linalg.norm(cs.A_bar) * max(np.linalg.norm(th), 1.0)
            assert np.linalg.norm(r) <= bound

    def test_matches_qr_nullspace_oracle(self):
        cfg = unit_cfg(K=2, N=3)
        cs = draw(cfg, 2)
        x = cgauss(3, 3)
        ours = project_nulling(x, cs)
        q, _ = np.linalg.qr(cs.A_bar.conj())
        v = vec(x)
        oracle = unvec(v - q @ (q.conj().T @ v), 3)
        assert np.linalg.norm(ours - oracle) < 1e-9

    def test_nonexpansive(self):
        cfg = unit_cfg(K=3, N=6)
        cs = draw(cfg, 3)
        for _ in range(100):
            x, y = cgauss(6, 6), cgauss(6, 6)
            px, py = project_nulling(x, cs), project_nulling(y, cs)
            assert np.linalg.norm(px - py) <= np.linalg.norm(x - y) + 1e-12


class TestIdempotence:
    def test_all_projections_idempotent(self):
        cfg = unit_cfg(K=2, N=4)
        cs = draw(cfg, 4)
        rng = np.random.default_rng(13)
        for _ in range(100):
            x = cgauss(4, 4, rng=rng)
            s = project_symmetric(x)
            assert np.linalg.norm(project_symmetric(s) - s) < 1e-10
            u = project_unitary(x)
            assert np.linalg.norm(project_unitary(u) - u) < 1e-10
            su = project_symmetric_unitary(x).theta
            assert np.linalg.norm(project_symmetric_unitary(su).theta - su) < 1e-10
            pn = project_nulling(x, cs)
            assert np.linalg.norm(project_nulling(pn, cs) - pn) < 1e-10


class TestAoNulling:
    def test_single_user_trivial(self):
        cfg = unit_cfg(K=1, N=3)
        cs = draw(cfg, 0)
        th0 = cgauss(3, 3)
        sm, trace = ao_interference_nulling(cs, th0, cfg)
        assert trace.iterations == 1
        assert sm.null_residual == 0.0
        assert np.linalg.norm(sm.theta - project_symmetric_unitary(th0).theta) < 1e-12

    def test_regression_fixed_seed(self):
        # shipped seed 99: channel stream (99, 0), init stream (99, 1)
        cfg = unit_cfg(K=2, N=3, max_iter=100, eps_null=1e-6)
        cs = draw_channel_set(cfg, rng_stream(99, 0))
        th0 = random_init(3, rng_stream(99, 1))
        sm, trace = ao_interference_nulling(cs, th0, cfg)
        assert sm.null_residual < 1e-6
        assert trace.stop_reason == "absolute-norm"
        assert trace.iterations == 68
        assert trace.residuals[-1] == pytest.approx(9.599966865893994e-07, rel=1e-5)

    def test_output_always_feasible(self):
        # infeasible element count: no convergence, output still feasible
        cfg = unit_cfg(K=3, N=4, max_iter=50)
        cs = draw(cfg, 5)
        sm, trace = ao_interference_nulling(cs, random_init(4, np.random.default_rng(0)), cfg)
        assert sm.sym_residual == 0.0
        assert sm.uni_residual <= 1e-10
        assert trace.stop_reason in ("relative-change", "absolute-norm", "iteration-cap")

    def test_trace_shapes_and_signs(self):
        cfg = unit_cfg(K=2, N=3, max_iter=30, eps_null=1e-30, eps_rel=1e-30)
        cs = draw(cfg, 6)
        _, trace = ao_interference_nulling(cs, random_init(3, np.random.default_rng(1)), cfg)
        assert len(trace.residuals) == trace.iterations + 1
        assert len(trace.deltas) == trace.iterations
        assert np.all(trace.residuals >= 0.0)
        # signed relative change is recomputable from the residuals
        recomputed = np.diff(trace.residuals) / trace.residuals[:-1]
        assert np.allclose(recomputed, trace.deltas)

    def test_residual_matches_offdiagonal_energy(self):
        cfg = unit_cfg(K=2, N=3)
        cs = draw(cfg, 7)
        sm, _ = ao_interference_nulling(cs, random_init(3, np.random.default_rng(2)), cfg)
        e = cs.H @ sm.theta @ cs.W
        off = np.sum(np.abs(e - np.diag(np.diag(e))) ** 2)
        assert sm.null_residual == pytest.approx(off, abs=1e-12)


class TestDrisNulling:
    def test_single_user(self):
        cfg = unit_cfg(K=1, N=4)
        cs = draw(cfg, 0)
        th0 = cgauss(4, 4)
        sm, trace = dris_nulling(cs, th0, cfg)
        assert sm.null_residual == 0.0
        assert np.allclose(sm.theta, dris_projection(th0))

    def test_output_structure(self):
        cfg = unit_cfg(K=3, N=16)
        cs = draw(cfg, 1)
        sm, _ = dris_nulling(cs, random_init(16, np.random.default_rng(3)), cfg)
        d = np.diag(sm.theta)
        assert np.allclose(np.abs(d), 1.0, atol=1e-10)
        assert np.allclose(sm.theta - np.diag(d), 0.0)

    def test_zero_diagonal_tiebreak(self):
        th = np.ones((3, 3), dtype=complex)
        np.fill_diagonal(th, 0.0)
        out = dris_projection(th)
        assert np.allclose(np.diag(out), 1.0)

    def test_needs_many_more_elements_than_bdris(self):
        # at N = 2K-1 the diagonal comparator essentially never nulls
        cfg = unit_cfg(K=5, N=9, max_iter=4000)
        bd_ok = dr_ok = 0
        for trial in range(20):
            cs = draw(cfg, 100 + trial)
            rng = np.random.default_rng(trial)
            _, trb = ao_interference_nulling(cs, random_init(9, rng), cfg)
            _, trd = dris_nulling(cs, random_init(9, rng), cfg)
            bd_ok += trb.residuals[-1] <= 1e-6
            dr_ok += trd.residuals[-1] <= 1e-6
        assert bd_ok >= 15
        assert dr_ok < bd_ok // 2


class TestMaxF:
    def test_relaxed_attains_dominant_eigenvalue(self):
        cfg = unit_cfg(K=2, N=4)
        cs = draw(cfg, 8)
        th = maxF_relaxed(cs)
        value = np.linalg.norm(cs.A @ vec(th)) ** 2
        gram = cs.A.conj().T @ cs.A  # 16 x 16, small enough to check densely
        lam_max = np.linalg.eigvalsh(gram)[-1]
        assert value == pytest.approx(cfg.N * lam_max, rel=1e-10)

    def test_relaxed_beats_random_candidates(self):
        cfg = unit_cfg(K=2, N=4)
        cs = draw(cfg, 9)
        best = np.linalg.norm(cs.A @ vec(maxF_relaxed(cs))) ** 2
        rng = np.random.default_rng(17)
        for _ in range(1000):
            cand = cgauss(4, 4, rng=rng)
            cand *= np.sqrt(cfg.N / np.real(np.vdot(cand, cand)))
            assert best >= np.linalg.norm(cs.A @ vec(cand)) ** 2 - 1e-9

    def test_projected_is_feasible(self):
        cfg = unit_cfg(K=3, N=6)
        cs = draw(cfg, 10)
        out = maxF_scattering(cs)
        assert out.sym_residual == 0.0
        assert out.uni_residual <= 1e-10

    def test_zero_channels_rejected(self):
        cs = ChannelSet.from_channels(np.zeros((2, 3)), np.zeros((3, 2)))
        with pytest.raises(DegenerateInputError):
            maxF_relaxed(cs)
        with pytest.raises(DegenerateInputError):
            maxl2_scattering(cs)


class TestMaxL2:
    def test_single_user_bound(self):
        cfg = unit_cfg(K=1, N=8)
        for key in range(10):
            cs = draw(cfg, key)
            out = maxl2_scattering(cs)
            e = cs.H @ out.theta @ cs.W
            bound = np.linalg.norm(cs.H) * np.linalg.norm(cs.W)
            assert np.abs(e[0, 0]) >= 0.9 * bound

    def test_attains_spectral_bound_exactly(self):
        cfg = unit_cfg(K=3, N=6)
        for key in (11, 14, 15):
            cs = draw(cfg, key)
            e = cs.H @ maxl2_scattering(cs).theta @ cs.W
            bound = np.linalg.svd(cs.H)[1][0] * np.linalg.svd(cs.W)[1][0]
            assert np.linalg.norm(e, 2) == pytest.approx(bound, rel=1e-10)

    def test_beats_identity_on_orthonormal_channels(self):
        rng = np.random.default_rng(23)
        q, _ = np.linalg.qr(cgauss(6, 6, rng=rng))
        h = q[:, :3].T  # orthonormal rows
        cs = ChannelSet.from_channels(h, h.T)
        out = maxl2_scattering(cs)
        s_design = np.linalg.svd(cs.H @ out.theta @ cs.W)[1][0]
        s_identity = np.linalg.svd(cs.H @ cs.W)[1][0]
        assert s_design >= s_identity - 1e-10

    def test_feasible(self):
        cfg = unit_cfg(K=2, N=5)
        cs = draw(cfg, 12)
        out = maxl2_scattering(cs)
        assert out.sym_residual == 0.0
        assert out.uni_residual <= 1e-10


class TestIdentityScattering:
    def test_trivial(self):
        out = identity_scattering(1)
        assert np.array_equal(out.theta, np.eye(1))
        out = identity_scattering(5)
        assert out.sym_residual == 0.0
        assert out.uni_residual == 0.0

    def test_equivalent_channel_is_direct_product(self):
        cfg = unit_cfg(K=2, N=4)
        cs = draw(cfg, 13)
        e = cs.H @ identity_scattering(4).theta @ cs.W
        assert np.allclose(e, cs.H @ cs.W)


class TestEnsembleOrderings:
    """Paired 100-draw comparisons of the projected and relaxed designs."""

    @pytest.fixture(scope="class")
    @staticmethod
    def ensemble():
        cfg = unit_cfg(K=5, N=64)
        rows = []
        for trial in range(100):
            cs = draw_channel_set(cfg, rng_stream(555, trial))
            rows.append(
                {
                    "cs": cs,
                    "mrt_rel": mrt_relaxed(cs),
                    "mrt": mrt_scattering(cs).theta,
                    "maxF_rel": maxF_relaxed(cs),
                    "maxF": maxF_scattering(cs).theta,
                }
            )
        return cfg, rows

    @staticmethod
    def _signal_interf(cs, th):
        e = cs.H @ th @ cs.W
        p2 = np.abs(e) ** 2
        sig = float(np.sum(np.diag(p2)))
        return sig, float(p2.sum() - sig)

    def test_projected_mrt_keeps_more_signal_than_maxF(self, ensemble):
        _, rows = ensemble
        sig_mrt = [self._signal_interf(r["cs"], r["mrt"])[0] for r in rows]
        sig_maxF = [self._signal_interf(r["cs"], r["maxF"])[0] for r in rows]
        assert np.mean(sig_mrt) > np.mean(sig_maxF)

    def test_projection_improves_mean_sum_sinr_for_mrt(self, ensemble):
        cfg, rows = ensemble
        p = cfg.p_max / cfg.K

        def sum_sinr(cs, th):
            e = cs.H @ th @ cs.W
            p2 = np.abs(e) ** 2
            sig = np.diag(p2)
            interf = p2.sum(axis=1) - sig
            return float(np.sum(p * sig / (p * interf + cfg.n0)))

        rel = [sum_sinr(r["cs"], r["mrt_rel"]) for r in rows]
        proj = [sum_sinr(r["cs"], r["mrt"]) for r in rows]
        assert np.mean(proj) >= np.mean(rel)

    def test_relaxed_maxF_has_largest_total_power_per_draw(self, ensemble):
        _, rows = ensemble
        for r in rows:
            totals = {
                name: sum(self._signal_interf(r["cs"], r[name]))
                for name in ("mrt_rel", "mrt", "maxF_rel", "maxF")
            }
            assert totals["maxF_rel"] >= max(totals.values()) - 1e-9
