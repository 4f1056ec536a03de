import math
from fractions import Fraction

import pytest

from padicsde.evolution import (
    EvolutionOperator,
    ExpEvolution,
    GeneratorSpec,
    MofReport,
    generating_operator,
    mat_identity,
    mat_is_zero,
    mat_mul,
    mat_norm,
    mat_sub,
    mof_check,
    perturbation_check,
    scalar_flow,
    solve_evolution,
)
from padicsde.measure import wiener_path
from padicsde.padic import BallSpec, PAdicValue
from padicsde.sde import SDEProblem, linear_state_program, solve_picard

N = 6
P = 3
DEPTH = 3
D = 3


def unit_ball():
    return BallSpec.unit(P, N)


def const_generator(scale_exp: int, dim: int = D) -> GeneratorSpec:
    """Constant generator with entries of norm <= p**(-scale_exp)."""
    base = [[Fraction(0)] * dim for _ in range(dim)]
    val = Fraction(P**scale_exp)
    for i in range(dim):
        for j in range(dim):
            base[i][j] = val * (1 + ((i + 2 * j) % 3))
    return GeneratorSpec.constant(tuple(tuple(r) for r in base), p=P)


def varying_generator(dim: int = D) -> GeneratorSpec:
    def fn(t: PAdicValue):
        shift = t.as_fraction() * P
        return tuple(tuple(Fraction(P) * (1 + (i + j) % 2) + (shift if i == j else 0)
                           for j in range(dim)) for i in range(dim))
    return GeneratorSpec(dim=dim, fn=fn, sup_norm=1.0 / P)


def test_identity_at_equal_times():
    u = solve_evolution(const_generator(1), unit_ball(), DEPTH)
    for k in range(u.size):
        assert u.exact(k, k) == mat_identity(D)


def test_zero_generator_gives_identity_everywhere():
    zero = GeneratorSpec(dim=D, fn=lambda t: tuple(
        tuple(Fraction(0) for _ in range(D)) for _ in range(D)), sup_norm=0.0)
    u = solve_evolution(zero, unit_ball(), DEPTH)
    for ti, si in ((0, 1), (5, 17), (26, 3)):
        assert u.exact(ti, si) == mat_identity(D)


def test_equation_residual_exact_zero():
    a = varying_generator()
    u = solve_evolution(a, unit_ball(), DEPTH)
    for ti, si in ((4, 0), (17, 5), (26, 13), (9, 9)):
        assert mat_is_zero(u.equation_residual(ti, si, a))


def test_dual_equation_equals_primal():
    a = varying_generator()
    u = solve_evolution(a, unit_ball(), DEPTH)
    for ti, si in ((4, 0), (22, 7), (11, 19)):
        assert mat_is_zero(u.dual_residual(ti, si, a))


def test_semigroup_bit_exact_on_triples():
    import random
    a = varying_generator()
    u = solve_evolution(a, unit_ball(), DEPTH)
    r = random.Random(5)
    for _ in range(100):
        ti, si, vi = (r.randrange(u.size) for _ in range(3))
        lhs = mat_mul(u.exact(ti, si), u.exact(si, vi))
        assert lhs == u.exact(ti, vi)


def test_exp_agreement_to_guard_digits():
    # the digit-chain flow and the exponential agree through second order;
    # with |A| <= p**-3 the gap sits below p**-(N-1)
    a = const_generator(3)
    ball = unit_ball()
    u = solve_evolution(a, ball, DEPTH)
    e = ExpEvolution(a(PAdicValue.zero(P, N)), ball, DEPTH)
    for ti, si in ((1, 0), (8, 2), (26, 0), (13, 13)):
        mu = u.matrix(ti, si)
        me = e.matrix(ti, si)
        for ru, re in zip(mu, me):
            for x, y in zip(ru, re):
                assert x.agrees_abs(y, N - 1)


def test_exp_identity_at_equal_times():
    a = const_generator(3)
    e = ExpEvolution(a(PAdicValue.zero(P, N)), unit_ball(), DEPTH)
    m = e.matrix(7, 7)
    for i in range(D):
        for j in range(D):
            want = PAdicValue.from_int(1 if i == j else 0, P, N)
            assert m[i][j] == want


def test_generator_recovery_constant():
    a = const_generator(2)
    u = solve_evolution(a, unit_ball(), DEPTH)
    got = generating_operator(u, 0, start_depth=0)
    want = a(PAdicValue.zero(P, N))
    for i in range(D):
        for j in range(D):
            assert got[i][j].agrees_abs(
                PAdicValue.from_fraction(want[i][j], P, N), N - 2)


def test_generator_zero():
    zero = GeneratorSpec(dim=2, fn=lambda t: tuple(
        tuple(Fraction(0) for _ in range(2)) for _ in range(2)), sup_norm=0.0)
    u = solve_evolution(zero, unit_ball(), DEPTH)
    got = generating_operator(u, 0, start_depth=0)
    assert all(x.is_zero for row in got for x in row)


def test_generator_same_for_same_operator():
    a = const_generator(3)
    u = solve_evolution(a, unit_ball(), DEPTH)
    g1 = generating_operator(u, 0, start_depth=0)
    g2 = generating_operator(u, 0, start_depth=0)
    assert g1 == g2


def test_perturbation_zero_is_exact():
    a = varying_generator()
    zero = GeneratorSpec(dim=D, fn=lambda t: tuple(
        tuple(Fraction(0) for _ in range(D)) for _ in range(D)), sup_norm=0.0)
    rep = perturbation_check(a, zero, unit_ball(), DEPTH,
                             pairs=[(4, 0), (17, 5), (26, 13)])
    assert rep.gap_norm == 0.0
    assert rep.identity_residual == 0.0
    assert rep.bound_holds


def test_perturbation_bound_and_identity():
    a = const_generator(1)
    b = const_generator(2)
    pairs = [(1, 0), (4, 2), (13, 7), (26, 0), (22, 22)]
    rep = perturbation_check(a, b, unit_ball(), DEPTH, pairs)
    assert rep.identity_residual == 0.0
    assert rep.bound_holds
    assert rep.hypothesis_met
    assert rep.uniform_bound_holds


def test_perturbation_scaling_rate():
    a = const_generator(1)
    pairs = [(4, 0), (17, 5), (26, 13)]
    gaps = []
    for n_scale in (2, 3, 4):
        b = const_generator(n_scale)
        rep = perturbation_check(a, b, unit_ball(), DEPTH, pairs)
        gaps.append(rep.gap_norm)
    assert gaps[0] >= gaps[1] >= gaps[2]
    assert gaps[2] <= float(P) ** (-4) + 1e-12


def test_scalar_flow_identity_and_cocycle():
    ball = unit_ball()
    w = wiener_path("tree", ball, DEPTH, 2.0, seed=3)
    alpha = PAdicValue.from_int(P**2, P, N)
    beta = PAdicValue.from_int(P**2, P, N)
    flow = scalar_flow(alpha, beta, w)
    assert flow[0] == 1
    assert flow[8] / flow[2] * (flow[2] / flow[5]) == flow[8] / flow[5]


def test_mof_representation_bit_exact():
    # linear equation: the Picard solution equals the multiplicative
    # functional applied to the initial value, path by path; coefficient
    # valuations keep |beta dw| < 1 on every edge of these seeded paths
    ball = unit_ball()
    paths = [wiener_path("tree", ball, DEPTH, 2.0, seed=s)
             for s in (101, 202, 303)]
    alpha = PAdicValue.from_int(P**3, P, N)
    beta = PAdicValue.from_int(2 * P**3, P, N)
    inits = tuple(PAdicValue.from_int(c, P, N) for c in (1, 2, 7))
    rep = mof_check(alpha, beta, paths, q=1.0, initial_values=inits)
    assert rep.identity_ok
    assert rep.cocycle_ok
    assert rep.representation_ok
    assert rep.moment_constant > 0.0


def test_mof_scaling_linearity():
    ball = unit_ball()
    w = wiener_path("tree", ball, DEPTH, 2.0, seed=11)
    alpha = PAdicValue.from_int(P**2, P, N)
    beta = PAdicValue.from_int(P**2, P, N)
    flow = scalar_flow(alpha, beta, w)
    c = Fraction(3)
    x0 = Fraction(2)
    for k in range(len(flow)):
        assert flow[k] * (c * x0) == c * (flow[k] * x0)


def test_deterministic_generator_reduces_to_semigroup():
    # no noise: the functional of the deterministic linear problem is the
    # one-dimensional evolution family itself
    ball = unit_ball()
    w_zero = wiener_path("tree", ball, DEPTH, 2.0, seed=1)
    zero_grid = type(w_zero)(
        values=w_zero.values.__class__(
            ball, DEPTH,
            tuple(PAdicValue.zero(P, N) for _ in range(w_zero.values.size))),
        sampler="tree", seed=0)
    alpha = PAdicValue.from_int(P, P, N)
    beta = PAdicValue.zero(P, N)
    flow = scalar_flow(alpha, beta, zero_grid)
    a = GeneratorSpec(dim=1, fn=lambda t: ((alpha.as_fraction(),),),
                      sup_norm=alpha.norm())
    u = solve_evolution(a, ball, DEPTH)
    for k in range(u.size):
        assert u.exact(k, 0)[0][0] == flow[k]


def test_path_derivative_linear_path_exact():
    from padicsde.antider import GridFunction
    from padicsde.evolution import path_derivative

    ball = unit_ball()
    c = PAdicValue.from_int(7, P, N)
    wlin = GridFunction.from_callable(ball, DEPTH, lambda t: c * t)
    assert path_derivative(wlin, 4) == c


def test_path_derivative_rejects_rough_path():
    from padicsde.evolution import path_derivative

    w = wiener_path("tree", unit_ball(), DEPTH, 1.0, seed=5)
    with pytest.raises(ValueError, match="path not C1"):
        path_derivative(w.values, 2)


def test_generator_series_trivial_and_drift_cases():
    from padicsde.antider import GridFunction
    from padicsde.evolution import generator_series
    from padicsde.sde import constant_program, zero_program

    ball = unit_ball()
    zero = zero_program(P, N)
    one = PAdicValue.one(P, N)
    fid = {(0, 1): lambda t, x: one}
    wlin = GridFunction.from_callable(ball, DEPTH,
                                      lambda t: PAdicValue.from_int(2, P, N) * t)
    xi = GridFunction.constant(ball, DEPTH, PAdicValue.from_int(2, P, N))
    assert generator_series(fid, zero, zero, wlin, xi, 5, m_max=3).is_zero
    aval = PAdicValue.from_int(4, P, N)
    a = constant_program(aval)
    got = generator_series(fid, a, zero, wlin, xi, 5, m_max=3)
    assert got == aval


def test_generator_series_square_matches_difference_quotient():
    # drift-only problem, f(t, x) = x**2: the series value agrees with the
    # radial quotient of eta = xi**2 once the coefficient norm makes the
    # second-order terms sit below the quotient's resolution
    from padicsde.antider import GridFunction
    from padicsde.evolution import generator_series, path_derivative
    from padicsde.sde import constant_program, zero_program, solve_picard

    ball = unit_ball()
    zero = zero_program(P, N)
    aval = PAdicValue.from_int(P**2, P, N)
    a = constant_program(aval)
    prob = SDEProblem(ball=ball, depth=DEPTH, x0=PAdicValue.one(P, N),
                      drift=a, diffusion=zero)
    w = wiener_path("tree", ball, DEPTH, 2.0, seed=9)
    sol = solve_picard(prob, w)
    two = PAdicValue.from_int(2, P, N)
    derivs = {
        (0, 1): lambda t, x: two * x,
        (0, 2): lambda t, x: two,
    }
    ti = 4
    formula = generator_series(derivs, a, zero, w.values, sol.values, ti,
                               m_max=3)
    eta = GridFunction(ball, DEPTH,
                       tuple(v * v for v in sol.values.values))
    dq = path_derivative(eta, ti)
    assert formula.agrees_abs(dq, 2 * aval.v)
