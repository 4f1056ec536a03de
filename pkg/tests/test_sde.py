import pytest

from padicsde.measure import MonteCarloEnsemble, wiener_path
from padicsde.padic import BallSpec, PAdicValue
from padicsde.sde import (
    FamilyTerm,
    SDEProblem,
    constant_program,
    ensemble_paths,
    linear_state_program,
    moment_diagnostic,
    picard_as_family,
    polynomial_program,
    solve_general,
    solve_picard,
    stability_diagnostic,
    zero_program,
)

N = 6


def make_problem(p, depth, x0_int=1, drift=None, diffusion=None, family=()):
    ball = BallSpec.unit(p, N)
    return SDEProblem(
        ball=ball,
        depth=depth,
        x0=PAdicValue.from_int(x0_int, p, N),
        drift=drift or zero_program(p, N),
        diffusion=diffusion or zero_program(p, N),
        family=tuple(family),
    )


def path_for(problem, seed):
    return wiener_path("tree", problem.ball, problem.depth, 1.0, seed=seed)


def test_zero_coefficients_constant_solution():
    prob = make_problem(5, 3, x0_int=4)
    sol = solve_picard(prob, path_for(prob, 1))
    assert all(v == prob.x0 for v in sol.values.values)
    assert sol.residual == 0.0
    assert sol.iterations <= 2


def test_pure_drift_solution_is_x0_plus_t():
    p = 5
    prob = make_problem(p, 4, x0_int=2,
                        drift=constant_program(PAdicValue.one(p, N)))
    sol = solve_picard(prob, path_for(prob, 2))
    for k in range(sol.values.size):
        t = prob.ball.point(k, prob.depth)
        assert sol.values.values[k] == prob.x0 + t
    assert sol.residual == 0.0


def test_pure_noise_solution_is_x0_plus_w():
    p = 3
    prob = make_problem(p, 4, x0_int=1,
                        diffusion=constant_program(PAdicValue.one(p, N)))
    w = path_for(prob, 3)
    sol = solve_picard(prob, w)
    for k in range(sol.values.size):
        assert sol.values.values[k] == prob.x0 + w.at_index(k)
    assert sol.residual == 0.0


def test_linear_drift_contracts_without_subdivision():
    p = 5
    alpha = PAdicValue.from_int(1, p, N)
    prob = make_problem(p, 4, x0_int=1, drift=linear_state_program(alpha))
    sol = solve_picard(prob, path_for(prob, 4))
    assert sol.residual == 0.0
    assert not sol.subdivisions
    assert all(c < 1.0 for c in sol.contraction.values())


def test_steep_drift_triggers_subdivision():
    # Lipschitz constant p stalls the unit-ball iteration and forces the
    # leading-digit split; the patched solution still satisfies the equation
    p = 3
    alpha = PAdicValue.from_rational(1, p, p, N)  # norm p
    prob = make_problem(p, 4, x0_int=1, drift=linear_state_program(alpha))
    sol = solve_picard(prob, path_for(prob, 5))
    assert sol.subdivisions
    assert sol.residual == 0.0
    assert all(c < 1.0 for c in sol.contraction.values())


def test_unique_fixed_point_from_perturbed_start():
    p = 5
    alpha = PAdicValue.from_int(2, p, N)
    prob = make_problem(p, 3, x0_int=1, drift=linear_state_program(alpha))
    w = path_for(prob, 6)
    base = solve_picard(prob, w)
    bump = PAdicValue.from_int(3, p, N)
    shifted = tuple(prob.x0 + bump for _ in range(prob.ball.grid_size(3)))
    pert = solve_picard(prob, w, initial=shifted)
    assert base.values.values == pert.values.values


def test_solution_is_path_measurable():
    # permuting ensemble order leaves each per-path solution unchanged
    p = 3
    prob = make_problem(p, 3, x0_int=1,
                        diffusion=constant_program(PAdicValue.one(p, N)))
    ens = MonteCarloEnsemble(77, 6)
    paths = ensemble_paths("tree", prob.ball, prob.depth, 1.0, ens)
    sols = [solve_picard(prob, w).values.values for w in paths]
    sols_rev = [solve_picard(prob, w).values.values for w in reversed(paths)]
    assert sols == list(reversed(sols_rev))


def test_defect_trace_strictly_decreasing():
    p = 5
    alpha = PAdicValue.from_int(1, p, N)
    prob = make_problem(p, 4, x0_int=1, drift=linear_state_program(alpha))
    sol = solve_picard(prob, path_for(prob, 8))
    trace = [d for d in sol.defect_trace if d > 0]
    assert all(b < a for a, b in zip(trace, trace[1:]))


def test_family_single_term_reductions_bit_identical():
    p = 5
    alpha = PAdicValue.from_int(2, p, N)
    beta = PAdicValue.from_int(3, p, N)
    drift = linear_state_program(alpha)
    diffusion = linear_state_program(beta)
    prob = make_problem(p, 3, x0_int=1, drift=drift, diffusion=diffusion)
    w = path_for(prob, 9)
    picard = solve_picard(prob, w)
    fam = picard_as_family(prob)
    general = solve_general(fam, w)
    assert picard.values.values == general.values.values
    # drift-only and diffusion-only single-term families
    drift_only = make_problem(p, 3, x0_int=1, drift=drift)
    fam_d = make_problem(p, 3, x0_int=1, drift=drift,
                         family=[FamilyTerm(1, 0, 0, drift)])
    assert solve_picard(drift_only, w).values.values == \
        solve_general(fam_d, w).values.values
    one = constant_program(PAdicValue.one(p, N))
    diff_only = make_problem(p, 3, x0_int=1, diffusion=diffusion)
    fam_e = make_problem(p, 3, x0_int=1, diffusion=diffusion,
                         family=[FamilyTerm(0, 1, 1, diffusion, e_slot=one)])
    assert solve_picard(diff_only, w).values.values == \
        solve_general(fam_e, w).values.values


def test_family_two_term_quadratic():
    p = 5
    alpha = PAdicValue.from_int(2, p, N)
    drift = linear_state_program(alpha)
    one = constant_program(PAdicValue.one(p, N))
    small = constant_program(PAdicValue.from_int(p**2, p, N))
    base_terms = [FamilyTerm(1, 0, 0, drift)]
    quad = FamilyTerm(0, 2, 2, small, e_slot=one, declared_norm=p ** -2.0)
    prob1 = make_problem(p, 3, x0_int=1, drift=drift, family=base_terms)
    prob2 = make_problem(p, 3, x0_int=1, drift=drift,
                         family=base_terms + [quad])
    w = path_for(prob1, 10)
    s1 = solve_general(prob1, w)
    s2 = solve_general(prob2, w)
    assert s2.residual == 0.0
    # the added term has norm <= p^-2 * max |dw|^2; the solutions differ by
    # at most that sup-norm
    bound = 0.0
    for k in range(prob1.ball.grid_size(3)):
        for _lev, j, jn, _step in s1.values.chain_steps(k):
            dw = (w.at_index(jn) - w.at_index(j)).norm()
            bound = max(bound, (p ** -2.0) * dw * dw)
    gap = max((a - b).norm() for a, b in
              zip(s1.values.values, s2.values.values))
    assert gap <= bound + 1e-12


def test_family_decay_validation():
    p = 3
    big = constant_program(PAdicValue.one(p, N))
    with pytest.raises(ValueError, match="decay"):
        make_problem(p, 3, family=[
            FamilyTerm(1, 0, 0, big, declared_norm=0.1),
            FamilyTerm(0, 2, 0, big, declared_norm=1.0),
        ])


def test_family_index_validation():
    p = 3
    prog = constant_program(PAdicValue.one(p, N))
    with pytest.raises(ValueError, match="index"):
        FamilyTerm(0, 1, 2, prog)


def test_lipschitz_advisory():
    p = 5
    alpha = PAdicValue.from_int(3, p, N)
    prob = make_problem(p, 3, drift=linear_state_program(alpha))
    measured = prob.validate_lipschitz(samples=64, seed=1)
    assert measured <= prob.drift.lipschitz + 1e-12


def test_moment_diagnostic_zero_problem():
    p = 3
    prob = make_problem(p, 3, x0_int=0)
    ens = MonteCarloEnsemble(5, 4)
    paths = ensemble_paths("tree", prob.ball, prob.depth, 1.0, ens)
    rows = moment_diagnostic(prob, paths, s=1, c1=0.0, c2=0.0)
    assert all(r.stat == 0.0 and r.ok for r in rows)


def test_moment_diagnostic_linear_problem():
    # s-th moments of a q-Gaussian norm exist only for s < q, so the
    # diagnostic pairs s = 1 with q = 2 paths
    p = 3
    alpha = PAdicValue.from_int(p, p, N)
    beta = PAdicValue.from_int(p, p, N)
    prob = make_problem(p, 3, x0_int=1, drift=linear_state_program(alpha),
                        diffusion=linear_state_program(beta))
    ens = MonteCarloEnsemble(11, 32)
    paths = ensemble_paths("tree", prob.ball, prob.depth, 2.0, ens)
    rows = moment_diagnostic(prob, paths, s=1, c1=float(p**3), c2=2.0)
    assert all(r.ok for r in rows)


def test_stability_zero_gap_exact():
    p = 3
    alpha = PAdicValue.from_int(2, p, N)
    prob = make_problem(p, 3, x0_int=1, drift=linear_state_program(alpha))
    ens = MonteCarloEnsemble(13, 8)
    paths = ensemble_paths("tree", prob.ball, prob.depth, 1.0, ens)
    x0 = PAdicValue.from_int(1, p, N)
    rows = stability_diagnostic(prob, x0, x0, paths, s=1, c1=1.0, c2=1.0)
    assert all(r.stat == 0.0 and r.ok for r in rows)


def test_stability_constant_coefficients_tight():
    p = 5
    prob = make_problem(p, 3, x0_int=0,
                        drift=constant_program(PAdicValue.from_int(2, p, N)),
                        diffusion=constant_program(PAdicValue.one(p, N)))
    ens = MonteCarloEnsemble(17, 8)
    paths = ensemble_paths("tree", prob.ball, prob.depth, 1.0, ens)
    a = PAdicValue.from_int(1, p, N)
    b = PAdicValue.from_int(2, p, N)  # gap norm 1
    rows = stability_diagnostic(prob, a, b, paths, s=1,
                                c1=float(p**3), c2=0.0)
    assert all(r.stat == 1.0 for r in rows)
    assert all(r.ok for r in rows)


def test_polynomial_coefficients_converge():
    p = 5
    coeffs = (PAdicValue.from_int(1, p, N), PAdicValue.zero(p, N),
              PAdicValue.from_int(5, p, N))
    prob = make_problem(p, 3, x0_int=1,
                        drift=polynomial_program(coeffs, lipschitz=1.0))
    sol = solve_picard(prob, path_for(prob, 21))
    assert sol.residual == 0.0


def test_functional_coefficient_program():
    # the drift may read the whole previous iterate; anchoring it to the
    # center value keeps it constant across sweeps
    from padicsde.sde import functional_program

    p = 5
    kappa = PAdicValue.from_int(2, p, N)

    def fn(t, x, state):
        return kappa * state[0]

    prob = make_problem(p, 3, x0_int=3,
                        drift=functional_program("anchor", fn))
    sol = solve_picard(prob, path_for(prob, 30))
    for k in range(sol.values.size):
        t = prob.ball.point(k, prob.depth)
        assert sol.values.values[k] == prob.x0 + kappa * prob.x0 * t
    assert sol.residual == 0.0


def test_solver_accepts_series_paths():
    from padicsde.measure import standard_zetas

    p = 3
    prob = make_problem(p, 3, x0_int=1,
                        diffusion=constant_program(PAdicValue.one(p, N)))
    w = wiener_path("mahler", prob.ball, prob.depth, 1.0, seed=44,
                    zetas=standard_zetas(p, N, 8))
    sol = solve_picard(prob, w)
    assert sol.residual == 0.0
    for k in range(sol.values.size):
        assert sol.values.values[k] == prob.x0 + w.at_index(k)
