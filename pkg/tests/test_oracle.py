import math

import numpy as np
import pytest

import netgen
from gasflow.eos import PotentialCoeffs
from gasflow.errors import MultipleSlacks, NotATree
from gasflow.models import Classification
from gasflow.oracle import (
    Infeasible,
    SinglePipeCase,
    balance_check,
    pipe_profile,
    single_pipe_cnga,
    single_pipe_ideal,
    tree_solve,
)
from gasflow.solver import Solution, SolverConfig, SolverState, residuals, solve


def _case(snet):
    return SinglePipeCase(
        p1=float(snet.slack_p_bar[0]),
        f=-float(snet.q_bar[0]),
        beta=float(snet.beta[0]),
        coeffs=snet.coeffs,
    )


def _outlet_pa(length, eos):
    snet = netgen.scaled(netgen.single_pipe(length=length, eos=eos))
    oracle = single_pipe_ideal if eos == "ideal" else single_pipe_cnga
    value = oracle(_case(snet))
    if isinstance(value, Infeasible):
        return value
    return value * snet.nominals.p0


def test_single_pipe_ideal_closed_form():
    ideal = PotentialCoeffs.ideal()
    assert single_pipe_ideal(SinglePipeCase(1.0, 0.0, 0.25, ideal)) == 1.0
    assert single_pipe_ideal(SinglePipeCase(1.0, 1.0, 0.25, ideal)) == pytest.approx(math.sqrt(0.5))
    assert isinstance(single_pipe_ideal(SinglePipeCase(1.0, 1.0, 1.0, ideal)), Infeasible)
    with pytest.raises(ValueError):
        single_pipe_ideal(SinglePipeCase(1.0, 1.0, 0.25, PotentialCoeffs(1.0, 0.1)))


def test_single_pipe_cnga_boundaries():
    c = PotentialCoeffs(1.0024, 0.1)
    assert single_pipe_cnga(SinglePipeCase(0.8, 0.0, 0.3, c)) == pytest.approx(0.8, rel=1e-10)
    start = 0.5 * 1.0024 + 0.1 / 3.0
    exhausted = SinglePipeCase(1.0, 1.01 * math.sqrt(start / 0.3), 0.3, c)
    assert isinstance(single_pipe_cnga(exhausted), Infeasible)
    with pytest.raises(ValueError):
        single_pipe_cnga(SinglePipeCase(1.0, 0.0, 0.3, PotentialCoeffs.ideal()))


def test_case_rejects_non_positive_inputs():
    with pytest.raises(ValueError):
        SinglePipeCase(0.0, 1.0, 0.1, PotentialCoeffs.ideal())
    with pytest.raises(ValueError):
        SinglePipeCase(1.0, 1.0, 0.0, PotentialCoeffs.ideal())


def test_long_transmission_pipe_regression():
    assert _outlet_pa(50_000.0, "ideal") == pytest.approx(2.03521e6, rel=1e-3)
    assert _outlet_pa(50_000.0, "cnga") == pytest.approx(2.29e6, rel=1e-2)
    assert isinstance(_outlet_pa(70_000.0, "ideal"), Infeasible)
    assert isinstance(_outlet_pa(70_000.0, "cnga"), Infeasible)


def test_cnga_outlet_exceeds_ideal_and_gap_grows_with_length():
    gaps = []
    for length in (7_000.0, 20_000.0, 50_000.0):
        ideal = _outlet_pa(length, "ideal")
        cnga = _outlet_pa(length, "cnga")
        assert cnga > ideal
        gaps.append((cnga - ideal) / ideal)
    assert gaps == sorted(gaps)


def test_pipe_profile_decreases_toward_outlet():
    snet = netgen.scaled(netgen.single_pipe(eos="cnga"))
    case = _case(snet)
    fractions = np.linspace(0.0, 1.0, 11)
    profile = pipe_profile(case, fractions)
    assert profile[0] == pytest.approx(case.p1, rel=1e-10)
    assert profile[-1] == pytest.approx(single_pipe_cnga(case), rel=1e-10)
    assert np.all(np.diff(profile) < 0)


def test_tree_solve_on_path():
    snet = netgen.scaled(netgen.path3(q2=3.0, q3=2.0))
    sol = tree_solve(snet)
    f0 = snet.nominals.f0
    np.testing.assert_allclose(sol.f * f0, [5.0, 2.0], rtol=1e-12)
    assert sol.p[0] == snet.slack_p_bar[0]
    assert sol.p[0] > sol.p[1] > sol.p[2]


def test_tree_solve_rejects_meshes_and_multiple_slacks():
    with pytest.raises(NotATree):
        tree_solve(netgen.scaled(netgen.mixed_fixture()))
    with pytest.raises(MultipleSlacks):
        tree_solve(netgen.scaled(netgen.three_slacks()))


def test_tree_solve_reports_exhausted_pressure():
    result = tree_solve(netgen.scaled(netgen.single_pipe(length=70_000.0)))
    assert isinstance(result, Infeasible)
    assert result.element_id == "2"


def test_tree_solution_satisfies_the_residuals():
    rng = np.random.default_rng(11)
    snet = netgen.scaled(netgen.random_tree(rng, 20, eos="cnga"))
    sol = tree_solve(snet)
    assert isinstance(sol, Solution)
    assert residuals(snet, SolverState(sol.p, sol.f)).norm_inf <= 1e-10


def test_newton_matches_tree_substitution():
    rng = np.random.default_rng(5)
    for k in range(50):
        eos = "cnga" if k % 2 else "ideal"
        snet = netgen.scaled(netgen.random_tree(rng, int(rng.integers(3, 31)), eos=eos))
        expected = tree_solve(snet)
        outcome = solve(snet, SolverConfig(seed=k, tolerance=1e-12))
        assert outcome.classification is Classification.E1_CONVERGED_IN_DOMAIN
        np.testing.assert_allclose(outcome.solution.p, expected.p, rtol=1e-6)
        np.testing.assert_allclose(outcome.solution.f, expected.f, rtol=1e-6, atol=1e-9)


def test_balance_check():
    sol = Solution(
        junction_ids=("a", "b"),
        edge_ids=(),
        edge_kinds=(),
        p=np.ones(2),
        f=np.zeros(0),
        q_full=np.array([1.0, -0.5]),
        rho=np.ones(2),
    )
    assert balance_check(sol) == pytest.approx(0.5)

    rng = np.random.default_rng(8)
    tree = tree_solve(netgen.scaled(netgen.random_tree(rng, 15)))
    assert balance_check(tree) <= 1e-12
