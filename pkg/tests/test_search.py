from itertools import product

import numpy as np
import pytest
from hypothesis import given, strategies as st

from qomdp.classical import ClassicalMoore, belief_update, embed_as_quantum, reachability_to_nonoccurrence
from qomdp.exceptions import ValidationError
from qomdp.random_models import random_classical_moore, random_mealy, random_moore
from qomdp.search import SearchConfig, Witness, search_nonoccurrence, search_reachability
from qomdp.transducers import QuantumMooreMachine, acceptance, acceptance_marginal, run

seeds = st.integers(0, 2**32 - 1)


def with_accept(M, P):
    return QuantumMooreMachine(M.transition, M.output, M.rho0, P)


def two_step_chain():
    """s0 -go-> s1 -go-> g; 'stay' keeps the state; only 'go go' reaches g in two steps."""
    go = np.array([[0, 0, 0], [1, 0, 0], [0, 1, 1.0]])
    stay = np.eye(3)
    return ClassicalMoore(("s0", "s1", "g"), ("stay", "go"), ("o",), {"stay": stay, "go": go},
                          np.ones((1, 3)), [1, 0, 0], goal="g")


def test_config_validation():
    with pytest.raises(ValidationError):
        SearchConfig(max_len=-1, tau=0.5)
    with pytest.raises(ValidationError):
        SearchConfig(max_len=1, tau=1.5)
    with pytest.raises(ValidationError):
        SearchConfig(max_len=1, tau=0.5, node_cap=0)
    with pytest.raises(ValidationError):
        Witness(("a",), (), 0.0)


def test_reachability_examples(rng):
    M = random_moore(2, rng=rng)
    res = search_reachability(with_accept(M, np.eye(2)), SearchConfig(3, 1.0))
    assert res.found and res.witness.alpha == () and res.witness.achieved == pytest.approx(1.0)
    for L in range(4):
        res = search_reachability(with_accept(M, np.zeros((2, 2))), SearchConfig(L, 0.5))
        assert res.status == "exhausted" and res.max_len_searched == L
        assert res.nodes_expanded == sum(2**n for n in range(L + 1))


def test_reachability_two_step_plan():
    m = two_step_chain()
    res = search_reachability(embed_as_quantum(m), SearchConfig(4, 1.0))
    assert res.found and res.witness.alpha == ("go", "go")
    b = m.p0
    for a in res.witness.alpha:
        _, b = belief_update(m, b, a, "o")
    assert b[2] == pytest.approx(1.0)
    assert search_reachability(embed_as_quantum(m), SearchConfig(1, 1.0)).status == "exhausted"


def test_nonoccurrence_examples(rng):
    M = random_moore(2, rng=rng)
    res = search_nonoccurrence(with_accept(M, np.zeros((2, 2))), SearchConfig(2, 0.0))
    assert res.found and res.witness.alpha == () and res.witness.beta == ()
    res = search_nonoccurrence(with_accept(M, np.eye(2)), SearchConfig(2, 0.9))
    assert res.status == "exhausted" and res.notes


def test_nonoccurrence_two_step_plan():
    # reach the goal-transformed sink: b_hat-free outputs vanish once the goal is surely hit
    m2, tau2 = reachability_to_nonoccurrence(two_step_chain(), 0.5)
    M = embed_as_quantum(m2)
    # accept = sink projector; Acc <= 0 needs a realizable run that avoids the sink
    res = search_nonoccurrence(M, SearchConfig(3, 0.0))
    assert res.found and res.witness.alpha == () and res.witness.beta == ()
    not_sink = QuantumMooreMachine(M.transition, M.output, M.rho0, np.eye(4) - M.accept)
    res = search_nonoccurrence(not_sink, SearchConfig(4, 0.0))
    assert res.found and len(res.witness.alpha) == 3
    assert res.witness.beta[-1] == "b_hat"


def test_node_cap_reports_frontier(rng):
    M = with_accept(random_moore(2, rng=rng), np.zeros((2, 2)))
    res = search_reachability(M, SearchConfig(10, 0.5, node_cap=5))
    assert res.status == "node_cap" and res.frontier_size > 0 and res.nodes_expanded == 5
    res = search_nonoccurrence(with_accept(M, np.eye(2)), SearchConfig(10, 0.5, node_cap=5))
    assert res.status == "node_cap"


def test_result_json(rng):
    res = search_reachability(with_accept(random_moore(2, rng=rng), np.eye(2)), SearchConfig(1, 1.0))
    js = res.to_json()
    assert {"alpha", "beta", "achieved", "maxLenSearched", "nodesExpanded"} <= set(js)
    assert js["alpha"] == [] and js["beta"] is None


@given(seeds, st.floats(0, 1))
def test_witnesses_reverify(seed, tau):
    rng = np.random.default_rng(seed)
    M = random_moore(2, rng=rng) if rng.random() < 0.5 else random_mealy(2, rng=rng)
    r = search_reachability(M, SearchConfig(3, tau))
    if r.found:
        w = r.witness
        assert abs(acceptance_marginal(M, w.alpha, method="enumerate") - w.achieved) <= 1e-10
        assert w.achieved >= tau - 1e-12
    n = search_nonoccurrence(M, SearchConfig(3, tau))
    if n.found:
        w = n.witness
        assert run(M, w.alpha, w.beta).probability > 1e-12
        assert abs(acceptance(M, w.alpha, w.beta) - w.achieved) <= 1e-10
        assert w.achieved <= tau + 1e-12


@given(seeds)
def test_shortest_and_monotone(seed):
    rng = np.random.default_rng(seed)
    M = random_moore(2, rng=rng)
    tau = float(rng.uniform(0.3, 1.0))
    found = None
    for L in range(4):
        r = search_reachability(M, SearchConfig(L, tau))
        if found is not None:
            assert r.witness == found
        elif r.found:
            found = r.witness
            # nothing shorter or earlier qualifies
            for n in range(len(found.alpha) + 1):
                for alpha in product(M.inputs, repeat=n):
                    if alpha == found.alpha:
                        break
                    assert acceptance_marginal(M, alpha) < tau - 1e-12
    assert search_reachability(M, SearchConfig(3, tau)) == search_reachability(M, SearchConfig(3, tau))


@given(seeds)
def test_transformed_machine_nonoccurrence_mass(seed):
    rng = np.random.default_rng(seed)
    m = random_classical_moore(3, rng=rng, goal=True)
    m2, _ = reachability_to_nonoccurrence(m, 0.5)
    M = embed_as_quantum(m2)
    hat = m2.outputs[-1]
    for n in range(1, 4):
        for alpha in product(m.actions, repeat=n):
            free = sum(run(M, alpha, beta).probability
                       for beta in product(m2.outputs, repeat=n) if hat not in beta)
            b = m.p0
            for a in alpha[:-1]:
                b = m.transitions[a] @ b
            assert abs(free - (1 - b[-1])) <= 1e-9


def test_nonoccurrence_length_two_witness():
    m = two_step_chain()
    plain = ClassicalMoore(m.states, m.actions, m.outputs, m.transitions, m.emission, m.p0)
    M = embed_as_quantum(plain, accept=np.diag([1.0, 1.0, 0.0]))
    res = search_nonoccurrence(M, SearchConfig(4, 0.0))
    assert res.found and res.witness.alpha == ("go", "go") and res.witness.beta == ("o", "o")
    assert res.witness.achieved == 0.0
