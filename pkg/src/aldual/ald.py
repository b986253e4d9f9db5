"""Duality machinery: enumeration oracle, penalized relaxations, sweeps.

The integer variables are always enumerated over a box implied by the
linear set (computed by LP), so the ground-truth mixed integer value and
every penalized relaxation value are exact minima over finitely many
convex subproblems.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction

from . import penalty as pen_mod
from .convexsolve import (
    INFEASIBLE,
    LinearProgram,
    OPTIMAL,
    QuadraticProgram,
    SolveReport,
    UNBOUNDED,
    solve_lp,
    solve_qp,
)
from .errors import (
    DimMismatchError,
    InfeasibleDomainError,
    InternalInvariantError,
    NlpInfeasibleError,
    NlpUnboundedError,
    UnboundedIntegerVarError,
)
from .instance import MiqpInstance
from .numkit import RatMat, RatVec, ceil_rat, floor_rat, format_rat, rat

_ZERO = Fraction(0)
_ONE = Fraction(1)


@dataclass(frozen=True)
class IntegerBox:
    """Componentwise bounds on the integer variables, implied by E x <= f."""

    lower: tuple[int, ...]
    upper: tuple[int, ...]

    @staticmethod
    def empty(n2: int) -> "IntegerBox":
        return IntegerBox((0,) * n2, (-1,) * n2)

    @property
    def is_empty(self) -> bool:
        return any(lo > hi for lo, hi in zip(self.lower, self.upper))

    def size(self) -> int:
        total = 1
        for lo, hi in zip(self.lower, self.upper):
            total *= max(0, hi - lo + 1)
        return total

    def assignments(self):
        """Integer points in lexicographic order (empty tuple when n2 = 0)."""
        ranges = [range(lo, hi + 1) for lo, hi in zip(self.lower, self.upper)]
        return itertools.product(*ranges)


def integer_box(inst: MiqpInstance) -> IntegerBox:
    """ceil/floor of the LP min/max of each integer coordinate over Ex <= f."""
    lower, upper = [], []
    for j in range(inst.n2):
        col = inst.n1 + j
        obj = RatVec.unit(inst.n, col)
        lo_rep = solve_lp(LinearProgram(obj, RatMat([], cols=inst.n), RatVec([]),
                                        inst.E, inst.f))
        if lo_rep.status == INFEASIBLE:
            return IntegerBox.empty(inst.n2)
        if lo_rep.status == UNBOUNDED:
            raise UnboundedIntegerVarError(j)
        hi_rep = solve_lp(LinearProgram(-obj, RatMat([], cols=inst.n), RatVec([]),
                                        inst.E, inst.f))
        if hi_rep.status == UNBOUNDED:
            raise UnboundedIntegerVarError(j)
        lower.append(ceil_rat(lo_rep.value))
        upper.append(floor_rat(-hi_rep.value))
    return IntegerBox(tuple(lower), tuple(upper))


def relaxation_program(inst: MiqpInstance) -> QuadraticProgram:
    """The continuous relaxation (integrality dropped)."""
    return QuadraticProgram(inst.Q, inst.c, inst.A, inst.b, inst.E, inst.f)


@dataclass(frozen=True)
class NlpDuals:
    """Optimal multipliers of the continuous relaxation."""

    lambda_bar: RatVec
    lambda_E: RatVec
    z_nlp: Fraction
    x: RatVec


def lambda_bar(inst: MiqpInstance) -> NlpDuals:
    rep = solve_qp(relaxation_program(inst))
    if rep.status == INFEASIBLE:
        raise NlpInfeasibleError("continuous relaxation is infeasible")
    if rep.status == UNBOUNDED:
        raise NlpUnboundedError("continuous relaxation is unbounded")
    return NlpDuals(rep.eq_duals, rep.ineq_duals, rep.value, rep.x)


class _SliceSolver:
    """Per-assignment continuous subproblems for a fixed objective shape.

    The quadratic/linear data live over the full variable vector (plus
    optional auxiliary columns); fixing the integer part specializes each
    constraint row and the objective exactly.
    """

    def __init__(self, inst: MiqpInstance, Qfull: RatMat, cfull: RatVec,
                 const: Fraction, enc: pen_mod.EpigraphEncoding | None,
                 aux_cost: list[Fraction] | None, include_eq: bool = False):
        self.inst = inst
        n1, n = inst.n1, inst.n
        idx1, idx2 = list(range(n1)), list(range(n1, n))
        self.Q11 = Qfull.submatrix(idx1, idx1)
        self.Q12 = Qfull.submatrix(idx1, idx2)
        self.Q22 = Qfull.submatrix(idx2, idx2)
        self.c1 = cfull[:n1]
        self.c2 = cfull[n1:]
        self.const = const
        self.E1, self.E2 = inst.split_cols(inst.E)
        self.n_aux = enc.n_aux if enc is not None else 0
        self.aux_cost = aux_cost or []
        width = n1 + self.n_aux
        # E rows padded with zero aux columns
        self.ineq_rows = [list(self.E1.row(i)) + [_ZERO] * self.n_aux
                          for i in range(self.E1.rows)]
        self.ineq_base = list(inst.f)
        self.ineq_x2 = [self.E2.row(i) for i in range(self.E2.rows)]
        self.eq_rows: list[list[Fraction]] = []
        self.eq_base: list[Fraction] = []
        self.eq_x2: list[RatVec] = []
        if include_eq:
            A1, A2 = inst.split_cols(inst.A)
            for i in range(inst.m):
                self.eq_rows.append(list(A1.row(i)) + [_ZERO] * self.n_aux)
                self.eq_base.append(inst.b[i])
                self.eq_x2.append(A2.row(i))
        if enc is not None:
            for i in range(enc.ineq_lhs.rows):
                row = list(enc.ineq_lhs.row(i))
                self.ineq_rows.append(row[:n1] + row[n:])
                self.ineq_base.append(enc.ineq_rhs[i])
                self.ineq_x2.append(RatVec(row[n1:n]))
            for i in range(enc.eq_lhs.rows):
                row = list(enc.eq_lhs.row(i))
                self.eq_rows.append(row[:n1] + row[n:])
                self.eq_base.append(enc.eq_rhs[i])
                self.eq_x2.append(RatVec(row[n1:n]))
        pad = RatMat.zeros(self.n_aux, self.n_aux)
        top = RatMat.hstack([self.Q11, RatMat.zeros(n1, self.n_aux)])
        bot = RatMat.hstack([RatMat.zeros(self.n_aux, n1), pad])
        self.Qsub = RatMat.vstack([top, bot], cols=width)
        self.width = width
        # constraint matrices are x2-independent; only right-hand sides move
        self.ineq_mat = RatMat(self.ineq_rows, cols=width)
        self.eq_mat = RatMat(self.eq_rows, cols=width)
        self.quad_free = self.Qsub.is_zero()

    def solve(self, x2: tuple[int, ...]) -> tuple[SolveReport, Fraction]:
        """Returns the block report and the x2-dependent constant term."""
        x2v = RatVec(x2)
        lin = list(self.c1 + self.Q12.matvec(x2v)) + list(self.aux_cost)
        const = self.const + self.c2.dot(x2v) + x2v.dot(self.Q22.matvec(x2v)) / 2
        ineq_rhs = RatVec(base - coeff.dot(x2v)
                          for base, coeff in zip(self.ineq_base, self.ineq_x2))
        eq_rhs = RatVec(base - coeff.dot(x2v)
                        for base, coeff in zip(self.eq_base, self.eq_x2))
        if self.quad_free:
            rep = solve_lp(LinearProgram(RatVec(lin), self.eq_mat, eq_rhs,
                                         self.ineq_mat, ineq_rhs))
        else:
            rep = solve_qp(QuadraticProgram(self.Qsub, RatVec(lin),
                                            self.eq_mat, eq_rhs,
                                            self.ineq_mat, ineq_rhs))
        return rep, const

    def lift(self, x2: tuple[int, ...], block_x: RatVec) -> RatVec:
        """Full primal point (x1, x2) from a block solution (x1, aux)."""
        return RatVec(list(block_x[: self.inst.n1]) + list(x2))


def _ip_slicer(inst: MiqpInstance) -> _SliceSolver:
    return _SliceSolver(inst, inst.Q, inst.c, _ZERO, None, None, include_eq=True)


def solve_ip(inst: MiqpInstance) -> SolveReport:
    """Ground-truth mixed integer optimum by exact enumeration.

    Ties between integer assignments are broken toward the
    lexicographically smallest one.
    """
    box = integer_box(inst)
    slicer = _ip_slicer(inst)
    best_val = None
    best_x = None
    for x2 in box.assignments():
        rep, const = slicer.solve(x2)
        if rep.status == INFEASIBLE:
            continue
        if rep.status == UNBOUNDED:
            ray = RatVec(list(rep.ray[: inst.n1]) + [_ZERO] * inst.n2)
            return SolveReport(status=UNBOUNDED, x=slicer.lift(x2, rep.x), ray=ray)
        total = rep.value + const
        if best_val is None or total < best_val:
            best_val = total
            best_x = slicer.lift(x2, rep.x)
    if best_val is None:
        return SolveReport(status=INFEASIBLE)
    return SolveReport(status=OPTIMAL, value=best_val, x=best_x)


@dataclass(frozen=True)
class RelaxReport:
    """Exact penalized-relaxation value and its witnessing point.

    ``unbounded`` marks the minus-infinity sentinel (possible for poorly
    chosen multipliers, reported as data rather than an error).
    """

    value: Fraction | None
    argmin_x: RatVec | None
    violation: Fraction | None
    assignment: tuple[int, ...] | None
    unbounded: bool = False
    per_assignment: tuple[tuple[tuple[int, ...], Fraction], ...] | None = None


def _relax_slicer(inst: MiqpInstance, lam: RatVec, rho: Fraction,
                  pen: pen_mod.Penalty) -> _SliceSolver:
    chat = inst.c - inst.A.tmatvec(lam) if inst.m else inst.c
    const = lam.dot(inst.b)
    if rho == 0:
        return _SliceSolver(inst, inst.Q, chat, const, None, None)
    if pen.kind == pen_mod.SQL2:
        At = inst.A.transpose()
        Qrho = inst.Q + At.matmul(inst.A).scale(2 * rho)
        crho = chat - At.matvec(inst.b).scale(2 * rho)
        return _SliceSolver(inst, Qrho, crho, const + rho * inst.b.dot(inst.b),
                            None, None)
    enc = pen_mod.epigraph_rows(pen, inst.A, inst.b)
    if pen.dim == 0 and enc.ineq_lhs.rows == 0 and enc.eq_lhs.rows == 0:
        # no residual coordinates: pin w at zero
        enc = pen_mod.EpigraphEncoding(
            enc.n_aux,
            enc.ineq_lhs, enc.ineq_rhs,
            RatMat([[_ZERO] * inst.n + [_ONE] * enc.n_aux], cols=inst.n + enc.n_aux),
            RatVec([_ZERO]),
        )
    aux_cost = [_ZERO] * (enc.n_aux - 1) + [rho]
    return _SliceSolver(inst, inst.Q, chat, const, enc, aux_cost)


def eval_lr_plus(inst: MiqpInstance, lam: RatVec, rho, pen: pen_mod.Penalty,
                 keep_table: bool = False) -> RelaxReport:
    """Exact value of the penalized Lagrangian relaxation.

    Minimizes  c^T x + 1/2 x^T Q x + lam^T (b - Ax) + rho * psi(b - Ax)
    over the mixed integer linear set, by enumerating integer assignments
    and solving one exact convex subproblem per assignment (epigraph rows
    for the norm kinds, quadratic absorption for sql2).  With rho = 0 this
    is the classical Lagrangian relaxation.
    """
    if len(lam) != inst.m:
        raise DimMismatchError(f"multiplier dim {len(lam)} vs {inst.m} rows")
    rho = rat(rho)
    if rho < 0:
        raise ValueError("rho must be nonnegative")
    if pen.dim != inst.m:
        raise DimMismatchError(f"penalty dim {pen.dim} vs {inst.m} rows")
    box = integer_box(inst)
    slicer = _relax_slicer(inst, lam, rho, pen)
    best_val = None
    best_x = None
    best_x2 = None
    feasible_slice = False
    table = [] if keep_table else None
    for x2 in box.assignments():
        rep, const = slicer.solve(x2)
        if rep.status == INFEASIBLE:
            continue
        feasible_slice = True
        if rep.status == UNBOUNDED:
            return RelaxReport(None, None, None, x2, unbounded=True)
        total = rep.value + const
        if table is not None:
            table.append((x2, total))
        if best_val is None or total < best_val:
            best_val = total
            best_x = slicer.lift(x2, rep.x)
            best_x2 = x2
    if not feasible_slice:
        raise InfeasibleDomainError("the mixed integer linear set is empty")
    residual = inst.b - inst.A.matvec(best_x) if inst.m else RatVec([])
    violation = pen_mod.evaluate(pen, residual)
    return RelaxReport(best_val, best_x, violation, best_x2,
                       per_assignment=tuple(table) if table is not None else None)


@dataclass(frozen=True)
class DualAscentReport:
    best_lambda: RatVec | None
    best_value: Fraction | None
    trace: tuple[tuple[RatVec, Fraction | None], ...]


def dual_ascent(inst: MiqpInstance, rho, pen: pen_mod.Penalty, lambda0: RatVec,
                max_iters: int = 50, step0=1) -> DualAscentReport:
    """Projected supergradient ascent with diminishing steps step0/k.

    Returns the best relaxation value seen, a valid lower bound on the
    penalized dual optimum; stops early at a zero supergradient.
    """
    step0 = rat(step0)
    lam = lambda0
    best_lam, best_val = None, None
    trace: list[tuple[RatVec, Fraction | None]] = []
    for k in range(1, max_iters + 1):
        rep = eval_lr_plus(inst, lam, rho, pen)
        if rep.unbounded:
            trace.append((lam, None))
            break
        trace.append((lam, rep.value))
        if best_val is None or rep.value > best_val:
            best_lam, best_val = lam, rep.value
        g = inst.b - inst.A.matvec(rep.argmin_x)
        if g.is_zero():
            break
        lam = lam + g.scale(step0 / k)
    return DualAscentReport(best_lam, best_val, tuple(trace))


@dataclass(frozen=True)
class SweepRow:
    """One penalty-weight step of a gap sweep.

    ``z_lr`` is None when the relaxation is unbounded below (minus-infinity
    sentinel); ``z_ld`` is filled only when dual ascent was requested;
    ``kappa_rho`` is the sublevel diameter at height 2*(z_ip - z_nlp)/rho,
    undefined at rho = 0.
    """

    rho: Fraction
    z_lr: Fraction | None
    z_ld: Fraction | None
    gap_lr: Fraction | None
    violation: Fraction | None
    kappa_rho: Fraction | None


def stream_gap_sweep(inst: MiqpInstance, pen: pen_mod.Penalty, rhos,
                     lam: RatVec | None = None, ascent_iters: int = 0,
                     step0=1):
    """Yield SweepRows in schedule order, enforcing exact monotonicity."""
    rhos = [rat(r) for r in rhos]
    if not rhos:
        raise ValueError("empty rho schedule")
    if any(r < 0 for r in rhos) or any(a >= b for a, b in zip(rhos, rhos[1:])):
        raise ValueError("rho schedule must be nonnegative and strictly increasing")
    ip = solve_ip(inst)
    if ip.status != OPTIMAL:
        raise InfeasibleDomainError(f"ground-truth solve is {ip.status}")
    duals = lambda_bar(inst)
    if lam is None:
        lam = duals.lambda_bar
    z_ip, z_nlp = ip.value, duals.z_nlp
    prev: Fraction | None = None
    have_prev = False
    for rho in rhos:
        rep = eval_lr_plus(inst, lam, rho, pen)
        z_lr = None if rep.unbounded else rep.value
        gap = None if z_lr is None else z_ip - z_lr
        if gap is not None and gap < 0:
            raise InternalInvariantError("relaxation exceeded the integer optimum")
        kappa = None
        if rho > 0:
            kappa = pen_mod.level_diam(pen, 2 * (z_ip - z_nlp) / rho)
        z_ld = None
        if ascent_iters:
            asc = dual_ascent(inst, rho, pen, lam, ascent_iters, step0)
            z_ld = asc.best_value
        if have_prev and _lt_with_neg_inf(z_lr, prev):
            raise InternalInvariantError("relaxation value decreased along rho")
        prev, have_prev = z_lr, True
        yield SweepRow(rho, z_lr, z_ld, gap, rep.violation, kappa)


def gap_sweep(inst: MiqpInstance, pen: pen_mod.Penalty, rhos,
              lam: RatVec | None = None, ascent_iters: int = 0,
              step0=1) -> list[SweepRow]:
    return list(stream_gap_sweep(inst, pen, rhos, lam, ascent_iters, step0))


def _lt_with_neg_inf(a: Fraction | None, b: Fraction | None) -> bool:
    """a < b treating None as minus infinity."""
    if a is None:
        return b is not None
    if b is None:
        return False
    return a < b


SWEEP_CSV_HEADER = "rho,z_lr,z_ld,gap_lr,violation,kappa_rho"


def _cell(value: Fraction | None, if_none: str = "") -> str:
    return if_none if value is None else format_rat(value)


def sweep_row_csv(row: SweepRow) -> str:
    z_lr = "-inf" if row.z_lr is None else format_rat(row.z_lr)
    gap = "inf" if row.gap_lr is None else format_rat(row.gap_lr)
    return ",".join([
        format_rat(row.rho), z_lr, _cell(row.z_ld), gap,
        _cell(row.violation), _cell(row.kappa_rho),
    ])


def sweep_row_json(row: SweepRow) -> dict:
    return {
        "rho": format_rat(row.rho),
        "z_lr": None if row.z_lr is None else format_rat(row.z_lr),
        "z_ld": None if row.z_ld is None else format_rat(row.z_ld),
        "gap_lr": None if row.gap_lr is None else format_rat(row.gap_lr),
        "violation": None if row.violation is None else format_rat(row.violation),
        "kappa_rho": None if row.kappa_rho is None else format_rat(row.kappa_rho),
    }


@dataclass(frozen=True)
class ViolationBoundReport:
    ok: bool
    lhs: Fraction
    rhs: Fraction


def violation_bound_check(inst: MiqpInstance, pen: pen_mod.Penalty,
                          rho) -> ViolationBoundReport:
    """Exact check of psi(b - A x*) <= (z_ip - z_nlp)/rho at a relaxation
    minimizer for the optimal multipliers; holds for every rho > 0."""
    rho = rat(rho)
    if rho <= 0:
        raise ValueError("rho must be positive")
    ip = solve_ip(inst)
    if ip.status != OPTIMAL:
        raise InfeasibleDomainError(f"ground-truth solve is {ip.status}")
    duals = lambda_bar(inst)
    rep = eval_lr_plus(inst, duals.lambda_bar, rho, pen)
    if rep.unbounded:
        raise InternalInvariantError("relaxation unbounded at optimal multipliers")
    rhs = (ip.value - duals.z_nlp) / rho
    return ViolationBoundReport(rep.violation <= rhs, rep.violation, rhs)
