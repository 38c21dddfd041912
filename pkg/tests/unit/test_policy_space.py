import itertools
import math

import numpy as np
import pytest

from exteam.exceptions import BudgetExceededError, PolicyError
from exteam.infra.simplex import total_variation
from exteam.models import MixtureTag
from exteam.services.policy_space import (
    DeterministicPolicy,
    KernelLaw,
    Mixture,
    PolicyProfile,
    RelaxedKernel,
    check_tag,
    definetti_extract,
    deterministic_law,
    df_extend_marginal,
    enumerate_deterministic,
    is_exchangeable,
    kernel_grid,
    kernel_to_deterministic_mixture,
    mix_kernels,
    permute_mixture,
    random_exchangeable_mixture,
    restrict,
    symmetrize,
    symmetrize_sampled,
)


def _k(*row: float) -> RelaxedKernel:
    return RelaxedKernel(np.array([[row]]))


A = _k(1.0, 0.0)
B = _k(0.0, 1.0)
C = _k(0.5, 0.5)


def _dirac(*kernels: RelaxedKernel) -> Mixture:
    return Mixture.dirac(PolicyProfile(kernels))


def _pair_mixture() -> Mixture:
    """½δ_(a,b) + ½δ_(b,a)."""
    return Mixture.general([(0.5, PolicyProfile.of(A, B)), (0.5, PolicyProfile.of(B, A))])


class TestKernels:
    def test_rows_must_sum_to_one(self):
        with pytest.raises(PolicyError, match="sum to 1"):
            RelaxedKernel(np.array([[[0.6, 0.6]]]))

    def test_entries_in_unit_interval(self):
        with pytest.raises(PolicyError, match=r"\[0, 1\]"):
            RelaxedKernel(np.array([[[1.5, -0.5]]]))

    def test_two_dim_rows_get_stage_axis(self):
        assert RelaxedKernel(np.array([[0.5, 0.5]])).shape == (1, 1, 2)

    def test_equality_by_rounded_key(self):
        assert _k(0.5, 0.5) == _k(0.5 + 1e-14, 0.5 - 1e-14)
        assert len({_k(0.5, 0.5), _k(0.5, 0.5)}) == 1

    def test_deterministic_round_trip(self):
        policy = DeterministicPolicy(((1, 0),))
        kernel = policy.to_kernel(2)
        assert kernel.is_deterministic
        assert kernel.to_deterministic() == policy

    def test_to_labels(self):
        policy = DeterministicPolicy(((1, 0),))
        assert policy.to_labels(["y0", "y1"], ["u0", "u1"]) == [{"y0": "u1", "y1": "u0"}]

    def test_enumerate_deterministic_lexicographic(self):
        policies = enumerate_deterministic(1, 2, 2)
        assert [p.table for p in policies] == [((0, 0),), ((0, 1),), ((1, 0),), ((1, 1),)]

    def test_kernel_grid_size(self):
        assert len(kernel_grid((1, 2, 2), 0.5)) == 9


class TestMixture:
    def test_weights_must_sum_to_one(self):
        with pytest.raises(PolicyError, match="sum"):
            Mixture.general([(0.5, PolicyProfile.of(A, B))])

    def test_atoms_must_match(self):
        with pytest.raises(PolicyError, match="same DMs"):
            Mixture.general([(0.5, PolicyProfile.of(A, B)), (0.5, PolicyProfile.of(A))])

    def test_dirac_tags(self):
        assert _dirac(A, B).tag is MixtureTag.DIRAC
        assert _dirac(C, C).tag is MixtureTag.PR_SYM
        assert _dirac(C, A).tag is MixtureTag.PR

    def test_iid_of_kernel_law(self):
        P = Mixture.iid(KernelLaw(((0.5, A), (0.5, B))), 2)
        assert P.tag is MixtureTag.PR_SYM
        law = P.law()
        assert law[PolicyProfile.of(A, A)] == pytest.approx(0.25)
        assert law[PolicyProfile.of(A, B)] == pytest.approx(0.25)

    def test_common_randomness_symmetric(self):
        P = Mixture.common_randomness_mixture([0.3, 0.7], [[A, A], [B, B]])
        assert P.tag is MixtureTag.CO_SYM
        assert P.law()[PolicyProfile.of(A, A)] == pytest.approx(0.3)

    def test_common_randomness_asymmetric(self):
        P = Mixture.common_randomness_mixture([1.0], [[A, B]])
        assert P.tag is MixtureTag.CO

    def test_co_needs_layout(self):
        with pytest.raises(PolicyError, match="common-randomness layout"):
            Mixture(((1.0, PolicyProfile.of(A, A)),), MixtureTag.CO)

    def test_marginal(self):
        assert _pair_mixture().marginal(0) == {A: 0.5, B: 0.5}


class TestPermuteMixture:
    def test_swap(self):
        P = permute_mixture(_dirac(A, B), (1, 0))
        assert P.support == [PolicyProfile.of(B, A)]

    def test_three_cycle(self):
        """new[j] = old[sigma[j]]."""
        P = permute_mixture(_dirac(A, B, C), (1, 2, 0))
        assert P.support == [PolicyProfile.of(B, C, A)]

    def test_exchangeable_fixed_point(self):
        P = _pair_mixture()
        assert permute_mixture(P, (1, 0)).same_law(P)

    def test_inverse_restores(self):
        P = _dirac(A, B, C)
        sigma = (2, 0, 1)
        inverse = tuple(np.argsort(sigma).tolist())
        assert permute_mixture(permute_mixture(P, sigma), inverse).same_law(P, tol=0.0)

    @pytest.mark.parametrize("sigma", [(0, 0), (0, 2), (0,), ("a", "b")])
    def test_not_a_bijection(self, sigma):
        with pytest.raises(PolicyError):
            permute_mixture(_dirac(A, B), sigma)


class TestSymmetrize:
    def test_dirac_pair(self):
        S = symmetrize(_dirac(A, B))
        assert S.tag is MixtureTag.EX
        assert S.same_law(_pair_mixture())

    def test_exchangeable_input_is_fixed_point(self):
        P = Mixture.iid(C, 3)
        assert symmetrize(P).same_law(P)

    def test_idempotent(self):
        S = symmetrize(_dirac(A, B, C))
        assert symmetrize(S).same_law(S)
        assert len(S.law()) == 6

    def test_result_is_exchangeable(self):
        assert is_exchangeable(symmetrize(_dirac(A, A, B, C)))

    def test_mislabeled_ex_tag_is_not_trusted(self):
        """EX 태그가 붙었어도 교환가능하지 않으면 전체 평균을 낸다."""
        P = Mixture(((1.0, PolicyProfile.of(A, B)),), MixtureTag.EX)
        S = symmetrize(P)
        assert is_exchangeable(S)
        assert S.same_law(_pair_mixture())

    def test_budget(self):
        with pytest.raises(BudgetExceededError, match="symmetrize_sampled"):
            symmetrize(_dirac(*([A] * 8 + [B])))

    def test_sampled_variant(self):
        P = _dirac(*([A] * 8 + [B]))
        S = symmetrize_sampled(P, 50, seed=3)
        assert S.tag is MixtureTag.GENERAL
        assert sum(S.law().values()) == pytest.approx(1.0)
        assert all(sum(k == B for k in p) == 1 for p in S.support)


class TestIsExchangeable:
    def test_iid_product(self):
        assert is_exchangeable(Mixture.iid(C, 4))

    def test_asymmetric_dirac(self):
        assert not is_exchangeable(_dirac(A, B))

    def test_single_dm(self):
        assert is_exchangeable(_dirac(A))

    def test_swap_invariance_alone_is_not_enough(self):
        """A law invariant under the swap of the first two but not the 3-cycle."""
        P = Mixture.general([(0.5, PolicyProfile.of(A, B, A)), (0.5, PolicyProfile.of(B, A, A))])
        assert not is_exchangeable(P)


class TestRestrict:
    def test_identity(self):
        P = _pair_mixture()
        assert restrict(P, 2) is P

    def test_pair_marginal(self):
        R = restrict(_pair_mixture(), 1)
        assert R.same_law(Mixture.general([(0.5, PolicyProfile.of(A)), (0.5, PolicyProfile.of(B))]))

    def test_iid_product(self):
        assert restrict(Mixture.iid(C, 4), 2).same_law(Mixture.iid(C, 2))

    def test_tag_preserved(self):
        assert restrict(symmetrize(_dirac(A, B, C)), 2).tag is MixtureTag.EX
        assert restrict(_dirac(A, B, A), 2).tag is MixtureTag.DIRAC
        assert restrict(_dirac(A, C, B), 2).tag is MixtureTag.PR

    @pytest.mark.parametrize("m", [0, 3])
    def test_out_of_range(self, m):
        with pytest.raises(PolicyError, match="m must be"):
            restrict(_pair_mixture(), m)


class TestDFExtension:
    def test_pair_attains_bound(self):
        E = df_extend_marginal(_pair_mixture(), 2)
        for profile in itertools.product([A, B], repeat=2):
            assert E.law()[PolicyProfile(profile)] == pytest.approx(0.25)
        assert total_variation(E.law(), _pair_mixture().law()) == pytest.approx(0.5)

    def test_iid_pair(self):
        P = Mixture.iid(KernelLaw(((0.5, A), (0.5, B))), 2)
        E = df_extend_marginal(P, 2)
        law = E.law()
        assert law[PolicyProfile.of(A, A)] == pytest.approx(3 / 8)
        assert law[PolicyProfile.of(A, B)] == pytest.approx(1 / 8)
        assert total_variation(law, P.law()) == pytest.approx(0.25)

    def test_m_one_is_restriction(self):
        P = symmetrize(_dirac(A, B, B))
        assert df_extend_marginal(P, 1).same_law(restrict(P, 1), tol=1e-12)

    def test_projective_consistency(self):
        P = symmetrize(_dirac(A, B, C, C))
        E3 = df_extend_marginal(P, 3)
        assert restrict(E3, 2).same_law(df_extend_marginal(P, 2), tol=1e-12)

    def test_result_exchangeable(self):
        assert is_exchangeable(df_extend_marginal(symmetrize(_dirac(A, B, C)), 3))

    def test_needs_exchangeable(self):
        with pytest.raises(PolicyError, match="exchangeable"):
            df_extend_marginal(_dirac(A, B), 2)

    def test_budget(self):
        with pytest.raises(BudgetExceededError):
            df_extend_marginal(_pair_mixture(), 5, budget=16)


class TestKernelDecomposition:
    def test_already_deterministic(self):
        D = kernel_to_deterministic_mixture(RelaxedKernel(np.array([[[1.0, 0.0], [0.0, 1.0]]])))
        assert D.tag is MixtureTag.DIRAC
        assert len(D.atoms) == 1

    def test_two_point_row(self):
        D = kernel_to_deterministic_mixture(C)
        assert sorted(w for w, _ in D.atoms) == [0.5, 0.5]

    def test_product_of_rows(self):
        kernel = RelaxedKernel(np.full((1, 2, 2), 0.5))
        D = kernel_to_deterministic_mixture(kernel)
        assert len(D.atoms) == 4
        assert all(w == pytest.approx(0.25) for w, _ in D.atoms)

    def test_remix_reproduces_kernel(self):
        rng = np.random.default_rng(1)
        kernel = RelaxedKernel(rng.dirichlet(np.ones(3), size=(2, 2)))
        remixed = mix_kernels(kernel_to_deterministic_mixture(kernel))
        np.testing.assert_allclose(remixed.rows, kernel.rows, atol=1e-12)

    def test_budget(self):
        kernel = RelaxedKernel(np.full((1, 4, 4), 0.25))
        with pytest.raises(BudgetExceededError):
            kernel_to_deterministic_mixture(kernel, budget=100)

    def test_deterministic_law_of_dirac(self):
        law = deterministic_law(_dirac(A, B))
        np.testing.assert_allclose(law, [0.0, 1.0, 0.0, 0.0])


class TestDeFinettiExtract:
    def test_exact_atom(self):
        fit = definetti_extract(Mixture.iid(C, 2), [A, C, B])
        assert fit.weights[1] == pytest.approx(1.0, abs=1e-6)
        assert fit.residual <= 1e-10

    def test_two_atom_mixture(self):
        q1 = _k(0.2, 0.8)
        q2 = _k(0.9, 0.1)
        P = Mixture.common_randomness_mixture([0.3, 0.7], [[q1, q1], [q2, q2]])
        fit = definetti_extract(P, [q1, q2])
        np.testing.assert_allclose(fit.weights, [0.3, 0.7], atol=1e-6)
        assert fit.residual <= 1e-8
        assert fit.mixture(2).same_law(P, tol=1e-6)

    def test_antisymmetric_pair_has_residual(self):
        fit = definetti_extract(_pair_mixture(), [A, B])
        assert fit.residual > 0.01
        assert fit.residual_tv > 0

    def test_weights_are_constrained_optimum(self):
        """가중치 합은 정확히 1이고, 심플렉스 위 최소제곱의 KKT 조건을 만족한다."""
        rng = np.random.default_rng(17)
        atoms = [(w, PolicyProfile.of(_k(p, 1 - p), _k(q, 1 - q)))
                 for w, p, q in ((0.6, 0.9, 0.3), (0.4, 0.1, 0.2))]
        P = symmetrize(Mixture.general(atoms))
        candidates = [_k(p, 1 - p) for p in rng.uniform(0, 1, size=6)]
        fit = definetti_extract(P, candidates)
        eta = np.array(fit.weights)
        assert math.fsum(eta) == pytest.approx(1.0, abs=1e-12)
        assert np.all(eta >= 0)

        target = deterministic_law(P)
        A_mat = np.column_stack([deterministic_law(Mixture.iid(k, 2)) for k in candidates])
        grad = A_mat.T @ (A_mat @ eta - target)
        active = eta > 1e-9
        level = grad[active].min()
        np.testing.assert_allclose(grad[active], level, atol=1e-9)
        assert np.all(grad[~active] >= level - 1e-9)

    def test_grid_candidates(self):
        fit = definetti_extract(Mixture.iid(C, 2), "grid", pitch=0.25)
        assert fit.residual <= 1e-8

    def test_empty_candidates(self):
        with pytest.raises(PolicyError, match="at least one"):
            definetti_extract(Mixture.iid(C, 2), [])

    def test_shape_mismatch(self):
        with pytest.raises(PolicyError, match="spaces"):
            definetti_extract(Mixture.iid(C, 2), [RelaxedKernel(np.full((1, 2, 2), 0.5))])


class TestCheckTag:
    def test_sound_tags(self):
        assert check_tag(_dirac(A, B))
        assert check_tag(Mixture.iid(C, 3))
        assert check_tag(symmetrize(_dirac(A, B)))
        assert check_tag(Mixture.common_randomness_mixture([0.5, 0.5], [[A, A], [B, B]]))

    def test_false_ex_claim(self):
        P = Mixture(((1.0, PolicyProfile.of(A, B)),), MixtureTag.EX)
        assert not check_tag(P)

    def test_false_pr_sym_claim(self):
        P = Mixture(_pair_mixture().atoms, MixtureTag.PR_SYM)
        assert not check_tag(P)

    def test_random_exchangeable_mixture(self):
        rng = np.random.default_rng(5)
        for _ in range(5):
            P = random_exchangeable_mixture(rng, 3)
            assert P.tag is MixtureTag.EX
            assert check_tag(P)
