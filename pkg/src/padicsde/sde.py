"""Picard fixed-point solvers for stochastic antiderivational equations,
with moment and stability diagnostics.

The state equation is ``xi(t) = xi0 + P_u a(u, xi) + P_w e(u, xi)`` over the
digit grid of a ball; the generalized form replaces the two terms by a
finite family of mixed-power terms.  Each Picard sweep evaluates the chain
sums in exact integer cells, reading only the previous iterate, and rounds
once per grid point; iteration stops when two successive iterates are
bit-identical, which the ultrametric contraction forces after finitely many
sweeps.  When the measured sweep defect stops shrinking the solver splits
the ball into its p leading-digit children and solves them independently,
seeding each child with the parent equation's exact value at the child
root; chain sums of deeper points only ever pass through ancestor prefixes,
so the patched solution satisfies the full equation bit-exactly.

States are scalars (H = K).  Diagonal systems over K^d can be solved one
coordinate at a time; coupled operator-valued systems live in the evolution
module.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

from .antider import (
    Cell,
    ZERO_CELL,
    GridFunction,
    cell_add,
    cell_mul,
    cell_of,
    cell_pow,
    cell_round,
    cell_sub,
)
from .measure import MonteCarloEnsemble, WienerPath, wiener_path
from .padic import BallSpec, PAdicValue, _pow


@dataclass(frozen=True)
class Program:
    """A named coefficient program over (grid point, state value).

    ``lipschitz`` is the user-declared local Lipschitz constant in the
    state; ``time_c1``/``time_c2``/``time_b`` declare the time-variation
    bound |f(t,x) - f(v,x)| <= |t - v| (C1 + C2 |x|**b) used by the moment
    and stability diagnostics.  Declared constants are spot-validated by
    sampling, never inferred.

    A ``functional`` program receives the whole previous iterate (the
    state as an element of the continuous-function space) as a third
    argument; pointwise programs are the common special case.
    """

    name: str
    fn: Callable
    lipschitz: float = 0.0
    time_c1: float = 0.0
    time_c2: float = 0.0
    time_b: int = 0
    functional: bool = False

    def __call__(self, t: PAdicValue, x: PAdicValue, state=None) -> PAdicValue:
        if self.functional:
            return self.fn(t, x, state)
        return self.fn(t, x)


def functional_program(name: str, fn, lipschitz: float = 0.0) -> Program:
    """A coefficient depending on the whole current iterate; fn receives
    (t, x, values) with values the previous iterate over the grid."""
    return Program(name, fn, lipschitz=lipschitz, functional=True)


def zero_program(p: int, n: int) -> Program:
    z = PAdicValue.zero(p, n)
    return Program("zero", lambda t, x: z)


def constant_program(value: PAdicValue) -> Program:
    return Program(f"constant({value.qp_str()})", lambda t, x: value)


def linear_state_program(alpha: PAdicValue, const: PAdicValue | None = None) -> Program:
    c = const if const is not None else PAdicValue.zero(alpha.p, alpha.n)
    if c.is_zero:
        fn = lambda t, x: alpha * x
    else:
        fn = lambda t, x: alpha * x + c
    return Program(f"linear({alpha.qp_str()})", fn, lipschitz=alpha.norm())


def linear_time_program(kappa: PAdicValue) -> Program:
    return Program(f"drift_t({kappa.qp_str()})", lambda t, x: kappa * t,
                   time_c1=kappa.norm())


def polynomial_program(coeffs: tuple[PAdicValue, ...], lipschitz: float) -> Program:
    def fn(t, x):
        acc = PAdicValue.zero(x.p, x.n)
        power = PAdicValue.one(x.p, x.n)
        for c in coeffs:
            if not c.is_zero:
                acc = acc + c * power
            power = power * x
        return acc
    return Program("polynomial", fn, lipschitz=lipschitz)


def locally_constant_program(ball: BallSpec, table: tuple[PAdicValue, ...]) -> Program:
    """Value chosen by the leading digit of t - center (constant on the p
    leading-digit children of the ball)."""
    p = ball.p
    r = ball.radius_exp

    def fn(t, x):
        off = (t - ball.center).scale_pow(r)
        d = 0 if off.is_zero or off.v > 0 else off.m % p
        return table[d]

    return Program("locally_constant", fn)


@dataclass(frozen=True)
class FamilyTerm:
    """One mixed-power term of the generalized equation: the chain sum of
    ``prog(t_j, x_j) * dt**(b+m-l) * a_slot(t_j, x_j)**(m-l)
      * (e_slot(t_j, x_j) * dw_j)**l``.

    Slot programs default to the problem's drift/diffusion; the plain
    drift term is (b, m, l) = (1, 0, 0) and the plain diffusion term is
    (0, 1, 1) with a constant-one diffusion slot.
    """

    b: int
    m: int
    l: int
    prog: Program
    a_slot: Program | None = None
    e_slot: Program | None = None
    declared_norm: float = 1.0

    def __post_init__(self):
        if self.l > self.m or min(self.b, self.m, self.l) < 0:
            raise ValueError("index")


@dataclass(frozen=True)
class SDEProblem:
    """A stochastic antiderivational equation on the grid of a ball."""

    ball: BallSpec
    depth: int
    x0: PAdicValue
    drift: Program
    diffusion: Program
    family: tuple[FamilyTerm, ...] = ()
    lipschitz: float = 0.0

    def __post_init__(self):
        if self.family:
            sup = {}
            for term in self.family:
                order = term.b + term.m
                sup[order] = max(sup.get(order, 0.0), term.declared_norm)
            orders = sorted(sup)
            for a, b in zip(orders, orders[1:]):
                if sup[b] > sup[a] + 1e-15:
                    raise ValueError("decay")

    def validate_lipschitz(self, samples: int = 64, seed: int = 0) -> float:
        """Advisory check: largest sampled difference quotient of the
        coefficients against the declared constant."""
        from .measure import RandomStream
        stream = RandomStream(seed)
        p, n = self.ball.p, self.ball.n
        worst = 0.0
        for _ in range(samples):
            t = self.ball.point(stream.below(self.ball.grid_size(self.depth)),
                                self.depth)
            x = PAdicValue(p, n, stream.below(3), 1 + stream.below(p - 1))
            y = x + PAdicValue(p, n, stream.below(3) + 1, 1 + stream.below(p - 1))
            gap = (x - y).norm()
            if gap == 0.0:
                continue
            for prog in (self.drift, self.diffusion):
                if prog.functional:
                    continue
                quot = (prog(t, x) - prog(t, y)).norm() / gap
                worst = max(worst, quot)
        return worst


@dataclass(frozen=True)
class SDESolution:
    """A solved path equation: the solution grid plus convergence data."""

    values: GridFunction
    iterations: int
    defect_trace: tuple[float, ...]
    contraction: dict
    residual: float
    subdivisions: tuple[str, ...]

    def __getitem__(self, t: PAdicValue) -> PAdicValue:
        return self.values[t]


class _RegionSolver:
    """Recursive Picard solver over digit subtrees of one ball grid."""

    def __init__(self, problem: SDEProblem, w: WienerPath,
                 max_iter: int | None, initial: tuple | None):
        ball, depth = problem.ball, problem.depth
        wg = w.values
        if wg.ball != ball or wg.depth != depth:
            raise ValueError("grid mismatch")
        self.p = ball.p
        self.n = ball.n
        self.r = ball.radius_exp
        self.levels = ball.radius_exp + depth
        self.size = ball.grid_size(depth)
        self.points = tuple(ball.point(k, depth) for k in range(self.size))
        self.wcells = tuple(cell_of(v) for v in wg.values)
        self.x0cell = cell_of(problem.x0)
        self.problem = problem
        self.max_iter = max_iter if max_iter is not None else self.n * self.p
        self.cur = list(initial) if initial is not None \
            else [problem.x0] * self.size
        self.iterations = 0
        self.contraction: dict = {}
        self.subdivisions: list[str] = []
        self.top_trace: tuple[float, ...] = ()

    # -- edge terms -------------------------------------------------------

    def _node_terms(self, j: int):
        """Evaluate the coefficient programs once per node; returns a
        closure producing the exact edge cell for a child."""
        t = self.points[j]
        x = self.cur[j]
        prob = self.problem
        if not prob.family:
            acell = cell_of(prob.drift(t, x, self.cur))
            ecell = cell_of(prob.diffusion(t, x, self.cur))

            def edge(jn: int, step: Cell) -> Cell:
                term = cell_mul(acell, step)
                if ecell[0]:
                    dw = cell_sub(self.p, self.wcells[jn], self.wcells[j])
                    term = cell_add(self.p, term, cell_mul(ecell, dw))
                return term

            return edge

        pieces = []
        for ft in prob.family:
            pv = cell_of(ft.prog(t, x, self.cur))
            av = cell_of((ft.a_slot or prob.drift)(t, x, self.cur)) \
                if ft.m - ft.l else None
            ev = cell_of((ft.e_slot or prob.diffusion)(t, x, self.cur)) \
                if ft.l else None
            pieces.append((ft, pv, av, ev))

        def edge(jn: int, step: Cell) -> Cell:
            total = ZERO_CELL
            dw = None
            for ft, pv, av, ev in pieces:
                if pv[0] == 0:
                    continue
                term = pv
                du = ft.b + ft.m - ft.l
                if du:
                    term = cell_mul(term, cell_pow(step, du))
                if av is not None:
                    term = cell_mul(term, cell_pow(av, ft.m - ft.l))
                if ft.l:
                    if dw is None:
                        dw = cell_sub(self.p, self.wcells[jn], self.wcells[j])
                    term = cell_mul(term, cell_pow(cell_mul(ev, dw), ft.l))
                total = cell_add(self.p, total, term)
            return total

        return edge

    # -- sweeps ------------------------------------------------------------

    def _sweep(self, level0: int, j0: int, acc0: Cell) -> float:
        """One Picard sweep over the subtree rooted at (level0, j0); writes
        the delivered values into ``cur`` and returns the sweep defect."""
        p, n = self.p, self.n
        prob = self.problem
        plain = not prob.family
        drift, diff = prob.drift, prob.diffusion
        points, cur, wc, x0c = self.points, self.cur, self.wcells, self.x0cell
        acc: dict[int, Cell] = {j0: acc0}
        newvals: dict[int, PAdicValue] = {}
        defect = 0.0
        stride = _pow(p, level0)
        for level in range(level0, self.levels):
            width = _pow(p, level)
            exp = level - self.r
            for j in range(j0, width, stride):
                base = acc[j]
                if plain:
                    t, x = points[j], cur[j]
                    acell = cell_of(drift(t, x, cur))
                    ecell = cell_of(diff(t, x, cur))
                    wj = wc[j]
                    for d in range(1, p):
                        jn = j + d * width
                        term = cell_mul(acell, (d, exp))
                        if ecell[0]:
                            dw = cell_sub(p, wc[jn], wj)
                            term = cell_add(p, term, cell_mul(ecell, dw))
                        cell = cell_add(p, base, term)
                        acc[jn] = cell
                        val = cell_round(p, n, cell_add(p, x0c, cell))
                        newvals[jn] = val
                        if val != cur[jn]:
                            defect = max(defect, (val - cur[jn]).norm())
                else:
                    edge = self._node_terms(j)
                    for d in range(1, p):
                        jn = j + d * width
                        cell = cell_add(p, base, edge(jn, (d, exp)))
                        acc[jn] = cell
                        val = cell_round(p, n, cell_add(p, x0c, cell))
                        newvals[jn] = val
                        if val != cur[jn]:
                            defect = max(defect, (val - cur[jn]).norm())
        for k, v in newvals.items():
            self.cur[k] = v
        return defect

    def _region_id(self, level0: int, j0: int) -> str:
        return f"ball[level={level0},index={j0}]"

    def solve_region(self, level0: int, j0: int, acc0: Cell) -> None:
        p = self.p
        self.cur[j0] = cell_round(p, self.n, cell_add(p, self.x0cell, acc0))
        if level0 >= self.levels:
            return
        trace: list[float] = []
        prev = None
        stalled = False
        for _ in range(self.max_iter):
            self.iterations += 1
            defect = self._sweep(level0, j0, acc0)
            trace.append(defect)
            if defect == 0.0:
                break
            if prev is not None and defect >= prev:
                stalled = True
                break
            prev = defect
        else:
            stalled = True
        if level0 == 0:
            self.top_trace = tuple(trace)
        if not stalled:
            ratios = [b / a for a, b in zip(trace, trace[1:]) if a > 0]
            self.contraction[self._region_id(level0, j0)] = max(ratios, default=0.0)
            return
        if level0 + 1 > self.levels:
            raise ValueError("no contraction on ball")
        self.subdivisions.append(self._region_id(level0, j0))
        width = _pow(p, level0)
        exp = level0 - self.r
        edge = self._node_terms(j0)
        for d in range(p):
            jd = j0 + d * width
            acc_child = acc0 if d == 0 else \
                cell_add(p, acc0, edge(jd, (d, exp)))
            self.solve_region(level0 + 1, jd, acc_child)

    def residual(self) -> float:
        """Sup-norm residual of the delivered equation at the fixed point."""
        before = list(self.cur)
        defect = self._sweep(0, 0, ZERO_CELL)
        worst = defect
        for k in range(self.size):
            if self.cur[k] != before[k]:
                worst = max(worst, (self.cur[k] - before[k]).norm())
                self.cur[k] = before[k]
        return worst


def solve_picard(problem: SDEProblem, w: WienerPath,
                 max_iter: int | None = None,
                 initial: tuple | None = None) -> SDESolution:
    """Solve the drift/diffusion equation along one sampled path.

    Iterates the Picard map from the constant initial guess (or a supplied
    one) until two successive iterates agree bit-exactly; the fixed point
    does not depend on the starting iterate.  The residual reported is the
    sup-norm mismatch of one extra delivery sweep, exactly zero on success.
    """
    solver = _RegionSolver(problem, w, max_iter, initial)
    solver.solve_region(0, 0, ZERO_CELL)
    res = solver.residual()
    grid = GridFunction(problem.ball, problem.depth, tuple(solver.cur))
    return SDESolution(values=grid, iterations=solver.iterations,
                       defect_trace=solver.top_trace,
                       contraction=dict(solver.contraction),
                       residual=res,
                       subdivisions=tuple(solver.subdivisions))


def solve_general(problem: SDEProblem, w: WienerPath,
                  max_iter: int | None = None,
                  initial: tuple | None = None) -> SDESolution:
    """Solve the generalized finite-family equation; a single-term family
    with (b, m, l) = (1, 0, 0) or (0, 1, 1) reproduces solve_picard
    bit-exactly."""
    if not problem.family:
        raise ValueError("term family required")
    return solve_picard(problem, w, max_iter=max_iter, initial=initial)


def picard_as_family(problem: SDEProblem) -> SDEProblem:
    """The drift/diffusion problem rewritten as a two-term family; the
    diffusion slot is the constant one so the diffusion term reduces to
    the plain path antiderivation."""
    one = constant_program(PAdicValue.one(problem.ball.p, problem.ball.n))
    fam = (
        FamilyTerm(1, 0, 0, problem.drift, declared_norm=1.0),
        FamilyTerm(0, 1, 1, problem.diffusion, e_slot=one, declared_norm=1.0),
    )
    return SDEProblem(ball=problem.ball, depth=problem.depth, x0=problem.x0,
                      drift=problem.drift, diffusion=problem.diffusion,
                      family=fam, lipschitz=problem.lipschitz)


# -- ensemble diagnostics --------------------------------------------------------


def ensemble_paths(kind: str, ball: BallSpec, depth: int, q: float,
                   ensemble: MonteCarloEnsemble, betas=None, zetas=None):
    """One path per ensemble sample, derived-seed reproducible."""
    from .measure import derive_seed
    return [wiener_path(kind, ball, depth, q,
                        seed=derive_seed(ensemble.master_seed, i),
                        betas=betas, zetas=zetas)
            for i in range(ensemble.size)]


@dataclass(frozen=True)
class LevelRow:
    radius_level: int
    stat: float
    bound: float
    ok: bool


def _level_profile(values_per_path, points, center, s: float):
    """Ensemble mean of |value|**s grouped by radius level |t - t0|."""
    by_level: dict[int, list[int]] = {}
    for k in range(1, len(points)):
        by_level.setdefault((points[k] - center).v, []).append(k)
    means: dict[int, float] = {}
    for lev, idxs in by_level.items():
        acc = 0.0
        for vals in values_per_path:
            for k in idxs:
                acc += vals[k].norm() ** s
        means[lev] = acc / (len(idxs) * len(values_per_path))
    return means


def moment_diagnostic(problem: SDEProblem, paths, s: int,
                      c1: float, c2: float) -> list[LevelRow]:
    """Empirical moment inequality report.

    For each radius level |t - t0| = p**(-j) the statistic is the sup over
    levels >= that radius of the ensemble mean of the s-th norm power of
    the solution; the bound is max(|xi0|**s, |t - t0| (C1 + C2 stat)) with
    the supplied constants.
    """
    sols = [solve_picard(problem, w) for w in paths]
    ball = problem.ball
    pts = tuple(ball.point(k, problem.depth)
                for k in range(ball.grid_size(problem.depth)))
    means = _level_profile([sol.values.values for sol in sols], pts,
                           ball.center, s)
    rows = []
    base = problem.x0.norm() ** s
    for lev in sorted(means, reverse=True):
        stat = max(means[lev2] for lev2 in means if lev2 >= lev)
        radius = float(ball.p) ** (-lev)
        bound = max(base, radius * (c1 + c2 * stat))
        rows.append(LevelRow(lev, stat, bound, stat <= bound + 1e-12))
    return rows


def stability_diagnostic(problem: SDEProblem, x0_a: PAdicValue,
                         x0_b: PAdicValue, paths, s: int,
                         c1: float, c2: float) -> list[LevelRow]:
    """Coupled two-solution stability report on common paths.

    Equal initial values give the identically zero gap (unique fixed point
    path by path); otherwise the gap statistic is checked against
    max(|xi0_a - xi0_b|**s, |t - t0| (C1 + C2 stat)).
    """
    prob_a = SDEProblem(ball=problem.ball, depth=problem.depth, x0=x0_a,
                        drift=problem.drift, diffusion=problem.diffusion,
                        family=problem.family, lipschitz=problem.lipschitz)
    prob_b = SDEProblem(ball=problem.ball, depth=problem.depth, x0=x0_b,
                        drift=problem.drift, diffusion=problem.diffusion,
                        family=problem.family, lipschitz=problem.lipschitz)
    gaps = []
    for w in paths:
        sa = solve_picard(prob_a, w)
        sb = solve_picard(prob_b, w)
        gaps.append(tuple(a - b for a, b in
                          zip(sa.values.values, sb.values.values)))
    ball = problem.ball
    pts = tuple(ball.point(k, problem.depth)
                for k in range(ball.grid_size(problem.depth)))
    means = _level_profile(gaps, pts, ball.center, s)
    base = (x0_a - x0_b).norm() ** s
    rows = []
    for lev in sorted(means, reverse=True):
        stat = max(means[lev2] for lev2 in means if lev2 >= lev)
        radius = float(ball.p) ** (-lev)
        bound = max(base, radius * (c1 + c2 * stat))
        rows.append(LevelRow(lev, stat, bound, stat <= bound + 1e-12))
    return rows
