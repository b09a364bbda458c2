from math import log

import numpy as np
import pytest
from scipy.stats import chisquare

from graphs.graph import Graph, characteristic_graph_chain, confusion_graph, epsilon_characteristic_graph, is_edge_subset
from graphs.partition import CliquePartition, clique_partition_exact
from lumping.lump import (
    LumpingFunction,
    binary_entropy,
    certify_lossless,
    conditional_entropy_given_lump_and_prev,
    dmax_lower_bound,
    error_propagation,
    information_loss_profile,
    loss_bounds,
    lossy_lump,
    lumped_marginal_entropy,
    lumping_from_partition,
    reconstruct,
    reconstruct_lossy,
    simulate_chain,
    stochastic_lumping_from_cover,
)
from markov.chain import (
    TransitionMatrix,
    adjacency,
    entropy_rate,
    random_chain,
    random_chain_with_adjacency,
    stationary,
)
from sources.jointsource import JointDistribution, check_prop1
from utils.errors import AmbiguityError, ImpossibleObservationError, ValidationError

LAZY_CYCLE_MAP = (0, 0, 1, 1)
BAD_MAP = (0, 1, 0, 1)
# two-state chain, flip probability 0.1, decoder that never flips:
# x_i is wrong iff an odd number of flips happened in i steps
EPS_CHAIN_RATE = 0.5 * (1 - sum(0.8 ** i for i in range(1, 50)) / 49)


def lossless_lumping(P):
    return lumping_from_partition(clique_partition_exact(characteristic_graph_chain(adjacency(P))))


def positive_chain(rng, n):
    P = rng.random((n, n)) + 0.1
    return TransitionMatrix(P / P.sum(axis=1, keepdims=True))


class TestLumpingFunction:
    def test_from_partition(self, lazy_cycle_chain):
        g = lossless_lumping(lazy_cycle_chain)
        assert g.map == LAZY_CYCLE_MAP and g.n_out == 2

    def test_singletons_and_single_block(self):
        G = Graph.from_edges(3, [(0, 1), (1, 2), (0, 2)])
        assert lumping_from_partition(CliquePartition(G, ((0,), (1,), (2,)))).map == (0, 1, 2)
        assert lumping_from_partition(CliquePartition(G, ((0, 1, 2),))).n_out == 1

    def test_not_surjective(self):
        with pytest.raises(ValidationError):
            LumpingFunction(3, 3, (0, 0, 1))

    def test_out_of_range(self):
        with pytest.raises(ValidationError):
            LumpingFunction(2, 1, (0, 1))

    def test_confusion_graph_is_block_union(self, lazy_cycle_chain):
        g = LumpingFunction.from_map(LAZY_CYCLE_MAP)
        assert g.confusion_graph().edges() == [(0, 1), (2, 3)]
        assert g.preimage(1) == [2, 3]


class TestConditionalEntropy:
    def test_lazy_cycle_lossless(self, lazy_cycle_chain):
        g = LumpingFunction.from_map(LAZY_CYCLE_MAP)
        assert conditional_entropy_given_lump_and_prev(lazy_cycle_chain, g) == pytest.approx(0.0, abs=1e-12)

    def test_constant_lumping(self, eps_chain):
        g = LumpingFunction.from_map((0, 0))
        assert conditional_entropy_given_lump_and_prev(eps_chain(0.1), g) == pytest.approx(binary_entropy(0.1), abs=1e-12)

    def test_bijective(self, rng):
        P = random_chain(5, rng)
        g = LumpingFunction.from_map(range(5))
        assert conditional_entropy_given_lump_and_prev(P, g) == pytest.approx(0.0, abs=1e-12)

    def test_size_mismatch(self, lazy_cycle_chain):
        with pytest.raises(ValidationError):
            conditional_entropy_given_lump_and_prev(lazy_cycle_chain, LumpingFunction.from_map((0, 1)))

    def test_sub_threshold_entry_counts_as_zero(self, leaky_cycle_chain):
        g = LumpingFunction.from_map(LAZY_CYCLE_MAP)
        assert conditional_entropy_given_lump_and_prev(leaky_cycle_chain, g) == 0.0
        assert conditional_entropy_given_lump_and_prev(leaky_cycle_chain, g, positivity=0.0) > 0.0

    def test_lumped_process_keeps_rate(self, lazy_cycle_chain):
        g = LumpingFunction.from_map(LAZY_CYCLE_MAP)
        assert lumped_marginal_entropy(lazy_cycle_chain, g) == pytest.approx(log(2), abs=1e-12)
        assert entropy_rate(lazy_cycle_chain) == pytest.approx(log(2), abs=1e-12)


class TestCertify:
    def test_lazy_cycle(self, lazy_cycle_chain):
        certificate = certify_lossless(lazy_cycle_chain, LumpingFunction.from_map(LAZY_CYCLE_MAP))
        assert certificate.lossless and certificate.witness_edge is None

    def test_bad_lumping_witness(self, lazy_cycle_chain):
        certificate = certify_lossless(lazy_cycle_chain, LumpingFunction.from_map(BAD_MAP))
        assert not certificate.lossless
        assert certificate.witness_edge == (0, 2)
        assert certificate.accessor == 0
        assert certificate.conditional_entropy > 0

    def test_sub_threshold_entry(self, leaky_cycle_chain):
        certificate = certify_lossless(leaky_cycle_chain, LumpingFunction.from_map(LAZY_CYCLE_MAP))
        assert certificate.lossless
        assert certificate.conditional_entropy == 0.0

    def test_bijective(self, lazy_cycle_chain):
        assert certify_lossless(lazy_cycle_chain, LumpingFunction.from_map(range(4))).lossless

    def test_positive_matrix_needs_bijection(self, rng):
        P = positive_chain(rng, 5)
        g = lossless_lumping(P)
        assert g.n_out == 5
        assert certify_lossless(P, g).lossless
        assert not certify_lossless(P, LumpingFunction.from_map((0, 0, 1, 2, 3))).lossless

    def test_universal_for_adjacency(self, rng):
        A = adjacency(random_chain(7, rng, density=0.25))
        g = lumping_from_partition(clique_partition_exact(characteristic_graph_chain(A)))
        for _ in range(20):
            P = random_chain_with_adjacency(A, rng)
            assert certify_lossless(P, g).lossless

    def test_dmax_bound(self, rng):
        for _ in range(30):
            P = random_chain(int(rng.integers(2, 13)), rng, density=0.2, max_out_degree=4)
            assert lossless_lumping(P).n_out >= dmax_lower_bound(adjacency(P))


class TestDmax:
    def test_values(self, lazy_cycle_chain, permutation_chain, rng):
        assert dmax_lower_bound(adjacency(lazy_cycle_chain)) == 2
        assert dmax_lower_bound(adjacency(permutation_chain)) == 1
        assert dmax_lower_bound(adjacency(positive_chain(rng, 6))) == 6

    def test_lazy_cycle_attained(self, lazy_cycle_chain):
        assert lossless_lumping(lazy_cycle_chain).n_out == dmax_lower_bound(adjacency(lazy_cycle_chain))


class TestLossyLump:
    @pytest.mark.parametrize("epsilon", [0.05, 0.1, 0.25])
    def test_eps_chain_collapses(self, eps_chain, epsilon):
        g, report = lossy_lump(eps_chain(epsilon), epsilon)
        assert g.n_out == 1
        assert report.conditional_entropy_nats == pytest.approx(binary_entropy(epsilon), abs=1e-12)
        assert not report.lossless

    def test_zero_epsilon_is_lossless(self, lazy_cycle_chain):
        g, report = lossy_lump(lazy_cycle_chain, 0.0)
        assert g.map == LAZY_CYCLE_MAP
        assert report.lossless
        assert report.bound_first_nats == 0.0

    def test_sub_threshold_entry_at_zero_epsilon(self, leaky_cycle_chain):
        g, report = lossy_lump(leaky_cycle_chain, 0.0)
        assert g.map == LAZY_CYCLE_MAP
        assert report.conditional_entropy_nats == 0.0
        assert report.lossless

    def test_bound_value(self):
        first, second = loss_bounds(4, 2, 0.01)
        assert first == pytest.approx(2 * 0.01 * (1 - log(0.01)), rel=1e-12)
        assert first == pytest.approx(0.1121034037, rel=1e-9)
        assert second == pytest.approx(4 * binary_entropy(0.01), rel=1e-12)

    def test_bounds_only_in_range(self):
        assert loss_bounds(4, 2, 0.3) == (pytest.approx(2 * 0.3 * (1 - log(0.3))), None)
        assert loss_bounds(4, 2, 0.5) == (None, None)

    def test_invalid_epsilon(self, lazy_cycle_chain):
        with pytest.raises(ValidationError):
            lossy_lump(lazy_cycle_chain, 1.0)

    def test_lazy_cycle_large_threshold(self, lazy_cycle_chain):
        g, report = lossy_lump(lazy_cycle_chain, 0.6)
        assert g.n_out == 1
        assert report.conditional_entropy_nats == pytest.approx(log(2), abs=1e-12)

    def test_bound_suite(self, rng):
        for _ in range(200):
            n = int(rng.integers(3, 9))
            P = random_chain(n, rng, density=float(rng.uniform(0.2, 0.9)))
            epsilon = float(rng.uniform(0.0, 1.0 / n))
            g, report = lossy_lump(P, epsilon)
            assert report.conditional_entropy_nats <= report.bound_first_nats + 1e-12
            assert report.bound_first_nats <= report.bound_second_nats + 1e-12

    def test_gamma_monotone(self, rng):
        for _ in range(20):
            P = random_chain(6, rng, density=0.5)
            low, high = sorted(rng.uniform(0.0, 0.4, size=2))
            assert clique_partition_exact(epsilon_characteristic_graph(P, low)).size >= \
                clique_partition_exact(epsilon_characteristic_graph(P, high)).size


class TestStochasticLumping:
    def test_lazy_cycle_cover(self, lazy_cycle_chain):
        G = characteristic_graph_chain(adjacency(lazy_cycle_chain))
        W = stochastic_lumping_from_cover(G, [[0, 1], [2, 3], [1]])
        assert np.allclose(W.sum(axis=1), 1.0)
        assert W[1].tolist() == [0.5, 0.0, 0.5]
        assert is_edge_subset(confusion_graph(W), G)
        result = check_prop1(JointDistribution.from_chain(lazy_cycle_chain), W)
        assert result.subset and result.entropy_nats <= 1e-12

    def test_invalid_cover(self, lazy_cycle_chain):
        G = characteristic_graph_chain(adjacency(lazy_cycle_chain))
        with pytest.raises(ValidationError):
            stochastic_lumping_from_cover(G, [[0, 2], [1], [3]])
        with pytest.raises(ValidationError):
            stochastic_lumping_from_cover(G, [[0, 1]])


class TestInformationLossProfile:
    def test_lossless_increments_vanish(self, lazy_cycle_chain):
        profile = information_loss_profile(lazy_cycle_chain, LumpingFunction.from_map(LAZY_CYCLE_MAP), 6)
        # only the first state is uncertain
        assert profile == pytest.approx([log(2)] * 6, abs=1e-9)

    def test_chain_rule_bound(self, rng):
        for _ in range(15):
            n_states = int(rng.integers(2, 5))
            P = random_chain(n_states, rng, density=0.5)
            g = LumpingFunction.from_map([0] + [int(y) for y in rng.integers(0, 2, size=n_states - 1)])
            h = conditional_entropy_given_lump_and_prev(P, g)
            horizon = 8
            profile = information_loss_profile(P, g, horizon)
            increments = np.diff(profile)
            assert np.all(increments <= h + 1e-9)
            assert profile[-1] / horizon <= (profile[0] + (horizon - 1) * h) / horizon + 1e-9


class TestReconstruct:
    def test_lazy_cycle_step(self, lazy_cycle_chain):
        g = LumpingFunction.from_map(LAZY_CYCLE_MAP)
        assert reconstruct(adjacency(lazy_cycle_chain), g, 0, [1]) == [0, 2]

    def test_bijective(self, lazy_cycle_chain):
        g = LumpingFunction.from_map((2, 0, 3, 1))
        assert reconstruct(adjacency(lazy_cycle_chain), g, 0, [3, 0, 1]) == [0, 2, 1, 3]

    def test_impossible(self, lazy_cycle_chain):
        g = LumpingFunction.from_map(range(4))
        with pytest.raises(ImpossibleObservationError) as info:
            reconstruct(adjacency(lazy_cycle_chain), g, 0, [0, 1])
        assert info.value.position == 2
        assert info.value.previous == 0

    def test_ambiguous(self, lazy_cycle_chain):
        with pytest.raises(AmbiguityError) as info:
            reconstruct(adjacency(lazy_cycle_chain), LumpingFunction.from_map(BAD_MAP), 0, [0])
        assert info.value.position == 1
        assert info.value.candidates == (0, 2)

    def test_bad_initial_state(self, lazy_cycle_chain):
        with pytest.raises(ValidationError):
            reconstruct(adjacency(lazy_cycle_chain), LumpingFunction.from_map(LAZY_CYCLE_MAP), 7, [])

    def test_round_trip(self, rng):
        for trial in range(20):
            P = random_chain(int(rng.integers(2, 13)), rng, density=0.5, max_out_degree=3)
            g = lossless_lumping(P)
            states = simulate_chain(P, 10_000, seed=trial)
            assert reconstruct(adjacency(P), g, states[0], g.apply(states[1:])) == states

    def test_lossy_decoder_prefers_likely_state(self, eps_chain):
        g = LumpingFunction.from_map((0, 0))
        assert reconstruct_lossy(eps_chain(0.1), g, 1, [0, 0]) == [1, 1, 1]


class TestSimulate:
    def test_deterministic(self, lazy_cycle_chain):
        assert simulate_chain(lazy_cycle_chain, 500, seed=3) == simulate_chain(lazy_cycle_chain, 500, seed=3)
        assert simulate_chain(lazy_cycle_chain, 500, seed=3) != simulate_chain(lazy_cycle_chain, 500, seed=4)

    def test_permutation_orbit(self, permutation_chain):
        states = simulate_chain(permutation_chain, 7, seed=1)
        assert all(b == (a + 1) % 3 for a, b in zip(states, states[1:]))

    def test_only_positive_transitions(self, lazy_cycle_chain):
        A = adjacency(lazy_cycle_chain).bits
        states = simulate_chain(lazy_cycle_chain, 5000, seed=11)
        assert all(A[a, b] for a, b in zip(states, states[1:]))

    def test_long_run_frequencies(self, lazy_cycle_chain):
        states = simulate_chain(lazy_cycle_chain, 1_000_000, seed=0)
        assert np.allclose(np.bincount(states, minlength=4) / len(states), 0.25, atol=0.01)

    def test_initial_state_distribution(self):
        P = TransitionMatrix([[0.2, 0.8, 0.0], [0.0, 0.3, 0.7], [0.6, 0.0, 0.4]])
        firsts = [simulate_chain(P, 1, seed=s)[0] for s in range(5000)]
        expected = stationary(P).mu * len(firsts)
        assert chisquare(np.bincount(firsts, minlength=3), expected).pvalue > 0.001

    def test_invalid_length(self, lazy_cycle_chain):
        with pytest.raises(ValidationError):
            simulate_chain(lazy_cycle_chain, 0)


class TestErrorPropagation:
    def test_lossless_is_exact(self, lazy_cycle_chain):
        assert error_propagation(lazy_cycle_chain, LumpingFunction.from_map(LAZY_CYCLE_MAP), trials=20, length=200) == 0.0

    def test_bijective(self, rng):
        P = random_chain(5, rng)
        assert error_propagation(P, LumpingFunction.from_map(range(5)), trials=10, length=100) == 0.0

    def test_constant_lumping(self, eps_chain):
        P = eps_chain(0.1)
        g = LumpingFunction.from_map((0, 0))
        rate = error_propagation(P, g, trials=2000, length=50, seed=7)
        assert rate > 0.0
        assert rate == error_propagation(P, g, trials=2000, length=50, seed=7)
        assert rate == pytest.approx(EPS_CHAIN_RATE, abs=0.02)

    def test_lossy_lumping_rate(self, eps_chain):
        # ε above the off-diagonal mass collapses the chain to one symbol
        P = eps_chain(0.1)
        g, report = lossy_lump(P, 0.15)
        assert g.map == (0, 0) and not report.lossless
        rate = error_propagation(P, g, trials=2000, length=50, seed=11)
        assert rate > 0.0
        assert rate == error_propagation(P, g, trials=2000, length=50, seed=11)
        assert rate == pytest.approx(EPS_CHAIN_RATE, abs=0.02)

    def test_random_lossy_lumping_is_reproducible(self, rng):
        P = random_chain(6, rng, density=0.7)
        g, report = lossy_lump(P, 0.15)
        rate = error_propagation(P, g, trials=50, length=100, seed=1)
        assert rate == error_propagation(P, g, trials=50, length=100, seed=1)
        if report.lossless:
            assert rate == 0.0

    def test_invalid(self, lazy_cycle_chain):
        with pytest.raises(ValidationError):
            error_propagation(lazy_cycle_chain, LumpingFunction.from_map(LAZY_CYCLE_MAP), trials=1, length=1)
