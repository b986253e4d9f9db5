"""Exact LP and convex QP solvers over the rationals.

Both solvers work with free variables, return exact optimal values and
multipliers, and certify infeasibility/unboundedness.  Every OPTIMAL report
is verified against the KKT conditions before it is returned, with the sign
convention fixed once here:

    Qobj x + cobj - eq_lhs^T y_eq + ineq_lhs^T y_ineq = 0,   y_ineq >= 0,

inequalities written as ineq_lhs x <= ineq_rhs.  UNBOUNDED reports carry a
feasible recession ray along which the objective strictly decreases.

The LP solver is a two-phase primal simplex with Bland's rule; the QP
solver is a primal active-set method whose working set stays linearly
independent, also with least-index (Bland) selection, so multipliers are
unique and anti-cycling is principled rather than perturbation-based.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .errors import (
    DimMismatchError,
    InternalInvariantError,
    NotPsdError,
)
from .numkit import (
    INCONSISTENT,
    RatMat,
    RatVec,
    UNIQUE,
    ceil_rat,
    format_rat,
    independent_rows,
    ldl_psd_check,
    nullspace_basis,
    quad_form,
    solve_linear,
)

_ZERO = Fraction(0)
_ONE = Fraction(1)

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"


def _check_system(n, eq_lhs, eq_rhs, ineq_lhs, ineq_rhs):
    if eq_lhs.rows != len(eq_rhs):
        raise DimMismatchError("equality rows vs rhs")
    if ineq_lhs.rows != len(ineq_rhs):
        raise DimMismatchError("inequality rows vs rhs")
    for M in (eq_lhs, ineq_lhs):
        if M.rows > 0 and M.cols != n:
            raise DimMismatchError(f"constraint width {M.cols} vs {n} variables")


@dataclass(frozen=True)
class LinearProgram:
    """min objective^T x  s.t.  eq_lhs x = eq_rhs, ineq_lhs x <= ineq_rhs."""

    objective: RatVec
    eq_lhs: RatMat
    eq_rhs: RatVec
    ineq_lhs: RatMat
    ineq_rhs: RatVec

    def __post_init__(self):
        _check_system(len(self.objective), self.eq_lhs, self.eq_rhs,
                      self.ineq_lhs, self.ineq_rhs)


@dataclass(frozen=True)
class QuadraticProgram:
    """min 1/2 x^T Qobj x + cobj^T x under the same constraint shapes."""

    Qobj: RatMat
    cobj: RatVec
    eq_lhs: RatMat
    eq_rhs: RatVec
    ineq_lhs: RatMat
    ineq_rhs: RatVec

    def __post_init__(self):
        _check_system(len(self.cobj), self.eq_lhs, self.eq_rhs,
                      self.ineq_lhs, self.ineq_rhs)
        if self.Qobj.rows != len(self.cobj) or self.Qobj.cols != len(self.cobj):
            raise DimMismatchError("objective matrix vs linear term")


@dataclass(frozen=True)
class SolveReport:
    """Exact outcome of an optimization call."""

    status: str
    value: Fraction | None = None
    x: RatVec | None = None
    eq_duals: RatVec | None = None
    ineq_duals: RatVec | None = None
    ray: RatVec | None = None


@dataclass(frozen=True)
class FarkasCertificate:
    """Multipliers proving the recession program has value zero.

    Satisfies lam_E^T E + lam_A^T A + lam_Q^T Q = c^T with lam_E <= 0.
    """

    lam_E: RatVec
    lam_A: RatVec
    lam_Q: RatVec


@dataclass(frozen=True)
class BoundednessReport:
    """Verdict on boundedness of the continuous relaxation.

    Exactly one certificate is present: Farkas multipliers when bounded, or
    an integral ray r with c^T r <= -1, A r = 0, E r <= 0, Q r = 0.
    """

    nlp_bounded: bool
    farkas: FarkasCertificate | None
    ray: RatVec | None

    def to_json_dict(self) -> dict:
        doc: dict = {"nlp_bounded": self.nlp_bounded}
        if self.farkas is not None:
            doc["farkas"] = {
                "lam_E": [format_rat(v) for v in self.farkas.lam_E],
                "lam_A": [format_rat(v) for v in self.farkas.lam_A],
                "lam_Q": [format_rat(v) for v in self.farkas.lam_Q],
            }
        if self.ray is not None:
            doc["descent_ray"] = [format_rat(v) for v in self.ray]
        return doc


_MAX_PIVOTS = 200_000


def solve_lp(lp: LinearProgram) -> SolveReport:
    """Two-phase primal simplex with Bland's rule, free variables split."""
    n = len(lp.objective)
    m_eq, m_in = lp.eq_lhs.rows, lp.ineq_lhs.rows
    m = m_eq + m_in
    nstruct = 2 * n + m_in
    ncols = nstruct + m  # artificial columns form the initial identity

    T: list[list[Fraction]] = []
    sign: list[int] = []
    for i in range(m):
        if i < m_eq:
            coeffs, rhs = lp.eq_lhs.row(i), lp.eq_rhs[i]
        else:
            j = i - m_eq
            coeffs, rhs = lp.ineq_lhs.row(j), lp.ineq_rhs[j]
        row = [_ZERO] * (ncols + 1)
        for k in range(n):
            row[k] = coeffs[k]
            row[n + k] = -coeffs[k]
        if i >= m_eq:
            row[2 * n + (i - m_eq)] = _ONE
        row[-1] = rhs
        s = 1
        if rhs < 0:
            s = -1
            row = [-e for e in row]
        sign.append(s)
        row[nstruct + i] = _ONE
        T.append(row)
    basis = [nstruct + i for i in range(m)]

    def pivot(r: int, c: int) -> None:
        piv = T[r][c]
        if piv != 1:
            T[r] = [a / piv for a in T[r]]
        prow = T[r]
        nonzero = [j for j, b in enumerate(prow) if b != 0]
        for i in range(len(T)):
            if i == r:
                continue
            f = T[i][c]
            if f != 0:
                row = list(T[i])
                for j in nonzero:
                    row[j] -= f * prow[j]
                T[i] = row
        basis[r] = c

    def run_simplex(obj: list[Fraction], allowed: int) -> int | None:
        """Bland pivoting on the appended objective row.

        ``obj`` holds reduced costs (updated in place via T-append);
        ``allowed`` restricts entering columns to indices < allowed.
        Returns the entering column when unbounded, else None at optimum.
        """
        T.append(obj)
        try:
            for _ in range(_MAX_PIVOTS):
                enter = next(
                    (j for j in range(allowed) if T[-1][j] < 0), None
                )
                if enter is None:
                    return None
                best_ratio = None
                leave = None
                leave_var = None
                for r in range(m):
                    a = T[r][enter]
                    if a > 0:
                        ratio = T[r][-1] / a
                        if (
                            best_ratio is None
                            or ratio < best_ratio
                            or (ratio == best_ratio and basis[r] < leave_var)
                        ):
                            best_ratio, leave, leave_var = ratio, r, basis[r]
                if leave is None:
                    return enter
                pivot(leave, enter)
            raise InternalInvariantError("simplex pivot cap exceeded")
        finally:
            obj[:] = T[-1]
            del T[-1]

    # phase 1: drive artificial variables to zero
    obj1 = [_ZERO] * (ncols + 1)
    for j in range(nstruct, ncols):
        obj1[j] = _ONE
    for r in range(m):  # price out the initial basis
        obj1 = [a - b for a, b in zip(obj1, T[r])]
    unb = run_simplex(obj1, ncols)
    if unb is not None:
        raise InternalInvariantError("phase-1 simplex reported unbounded")
    if -obj1[-1] > 0:
        return SolveReport(status=INFEASIBLE)

    # pivot remaining artificials out of the basis where possible
    for r in range(m):
        if basis[r] >= nstruct:
            c = next((j for j in range(nstruct) if T[r][j] != 0), None)
            if c is not None:
                pivot(r, c)

    # phase 2 on the original costs
    cost = [_ZERO] * (ncols + 1)
    for k in range(n):
        cost[k] = lp.objective[k]
        cost[n + k] = -lp.objective[k]
    obj2 = list(cost)
    for r in range(m):
        cb = cost[basis[r]]
        if cb != 0:
            obj2 = [a - cb * b for a, b in zip(obj2, T[r])]
    enter = run_simplex(obj2, nstruct)

    def structural_point() -> RatVec:
        xs = [_ZERO] * nstruct
        for r in range(m):
            if basis[r] < nstruct:
                xs[basis[r]] = T[r][-1]
        return RatVec(xs[k] - xs[n + k] for k in range(n))

    if enter is not None:
        xs_dir = [_ZERO] * nstruct
        xs_dir[enter] = _ONE
        for r in range(m):
            if basis[r] < nstruct:
                xs_dir[basis[r]] = -T[r][enter]
        ray = RatVec(xs_dir[k] - xs_dir[n + k] for k in range(n))
        report = SolveReport(status=UNBOUNDED, x=structural_point(), ray=ray)
        _verify_ray(lp.objective, lp.eq_lhs, lp.ineq_lhs, ray)
        return report

    x = structural_point()
    value = lp.objective.dot(x)
    y_hat = []
    for i in range(m):
        yi = _ZERO
        col = nstruct + i
        for r in range(m):
            cb = cost[basis[r]]
            if cb != 0 and T[r][col] != 0:
                yi += cb * T[r][col]
        y_hat.append(yi)
    y_orig = [sign[i] * y_hat[i] for i in range(m)]
    eq_duals = RatVec(y_orig[:m_eq])
    ineq_duals = RatVec(-y_orig[m_eq + j] for j in range(m_in))
    report = SolveReport(OPTIMAL, value, x, eq_duals, ineq_duals, None)
    _verify_kkt(None, lp.objective, lp.eq_lhs, lp.eq_rhs, lp.ineq_lhs,
                lp.ineq_rhs, report)
    return report


def _verify_kkt(Qobj, cobj, eq_lhs, eq_rhs, ineq_lhs, ineq_rhs,
                report: SolveReport) -> None:
    """Exact KKT check; raises InternalInvariantError on any residual."""
    x, y_eq, y_in = report.x, report.eq_duals, report.ineq_duals
    grad = cobj if Qobj is None else Qobj.matvec(x) + cobj
    resid = grad
    if eq_lhs.rows:
        resid = resid - eq_lhs.tmatvec(y_eq)
    if ineq_lhs.rows:
        resid = resid + ineq_lhs.tmatvec(y_in)
    if not resid.is_zero():
        raise InternalInvariantError("stationarity residual nonzero")
    if eq_lhs.rows and eq_lhs.matvec(x) != eq_rhs:
        raise InternalInvariantError("equality constraints violated")
    for j in range(ineq_lhs.rows):
        slack = ineq_rhs[j] - ineq_lhs.row(j).dot(x)
        if slack < 0:
            raise InternalInvariantError("inequality constraints violated")
        if y_in[j] < 0:
            raise InternalInvariantError("negative inequality multiplier")
        if y_in[j] * slack != 0:
            raise InternalInvariantError("complementary slackness violated")


def _verify_ray(cobj, eq_lhs, ineq_lhs, ray: RatVec, Qobj=None) -> None:
    if eq_lhs.rows and not eq_lhs.matvec(ray).is_zero():
        raise InternalInvariantError("ray leaves the equality system")
    if ineq_lhs.rows and any(a > 0 for a in ineq_lhs.matvec(ray)):
        raise InternalInvariantError("ray is not a recession direction")
    if Qobj is not None and not Qobj.matvec(ray).is_zero():
        raise InternalInvariantError("ray has curvature")
    if cobj.dot(ray) >= 0:
        raise InternalInvariantError("ray does not decrease the objective")


def solve_qp(qp: QuadraticProgram) -> SolveReport:
    """Primal active-set method in exact arithmetic.

    The working set is kept linearly independent together with a row basis
    of the equality system, so multipliers at candidate optima are unique;
    unboundedness is detected through a curvature-free descent direction in
    the reduced space and certified by the returned ray.
    """
    n = len(qp.cobj)
    psd = ldl_psd_check(qp.Qobj)
    if not psd.is_psd:
        raise NotPsdError("objective matrix is not PSD", witness=psd.witness)

    feas = solve_lp(LinearProgram(RatVec.zeros(n), qp.eq_lhs, qp.eq_rhs,
                                  qp.ineq_lhs, qp.ineq_rhs))
    if feas.status == INFEASIBLE:
        return SolveReport(status=INFEASIBLE)
    x = feas.x

    keep = independent_rows(qp.eq_lhs)
    eq_rows = [qp.eq_lhs.row(i) for i in keep]
    G = qp.ineq_lhs
    h = qp.ineq_rhs
    m_in = G.rows
    working: list[int] = []

    def active_matrix() -> RatMat:
        rows = [list(r) for r in eq_rows] + [list(G.row(i)) for i in working]
        return RatMat(rows, cols=n)

    max_iters = 500 + 30 * (n + m_in + len(keep)) ** 2
    for _ in range(max_iters):
        g = qp.Qobj.matvec(x) + qp.cobj
        C = active_matrix()
        Z = nullspace_basis(C)

        direction = None
        ray_dir = None
        if Z:
            Zm = RatMat([list(z) for z in Z], cols=n).transpose()  # n x z
            H = Zm.transpose().matmul(qp.Qobj).matmul(Zm)
            gz = Zm.tmatvec(g)
            sol = solve_linear(H, -gz)
            if sol.status == INCONSISTENT:
                k = next((k for k in solve_linear(H, RatVec.zeros(H.rows)).nullspace
                          if k.dot(gz) != 0), None)
                if k is None:
                    raise InternalInvariantError(
                        "inconsistent reduced system without a kernel witness")
                u = Zm.matvec(k)
                if g.dot(u) > 0:
                    u = -u
                if not qp.Qobj.matvec(u).is_zero():
                    raise InternalInvariantError("recession direction has curvature")
                ray_dir = u
            else:
                d = Zm.matvec(sol.x)
                if not d.is_zero():
                    direction = d

        if ray_dir is not None:
            blocker, alpha = _ratio_test(G, h, x, ray_dir, working, cap=None)
            if blocker is None:
                report = SolveReport(status=UNBOUNDED, x=x, ray=ray_dir)
                _verify_ray(qp.cobj, qp.eq_lhs, qp.ineq_lhs, ray_dir, qp.Qobj)
                return report
            x = x + ray_dir.scale(alpha)
            working = sorted(working + [blocker])
            continue

        if direction is not None:
            blocker, alpha = _ratio_test(G, h, x, direction, working, cap=_ONE)
            x = x + direction.scale(alpha)
            if blocker is not None:
                working = sorted(working + [blocker])
            continue

        # d = 0: candidate optimum on the current active manifold
        cols = [list(r) for r in eq_rows] + [list(-G.row(i)) for i in working]
        Mt = RatMat(cols, cols=n).transpose() if cols else RatMat([], cols=0)
        if cols:
            msol = solve_linear(Mt, g)
            if msol.status != UNIQUE:
                raise InternalInvariantError("active-set multipliers not unique")
            y = msol.x
        else:
            if not g.is_zero():
                raise InternalInvariantError("zero direction with nonzero gradient")
            y = RatVec([])
        y_keep = list(y[: len(keep)])
        y_work = list(y[len(keep):])
        neg = next((wi for wi, i in enumerate(working) if y_work[wi] < 0), None)
        if neg is not None:
            working.pop(neg)
            continue

        eq_duals = [_ZERO] * qp.eq_lhs.rows
        for idx, val in zip(keep, y_keep):
            eq_duals[idx] = val
        ineq_duals = [_ZERO] * m_in
        for i, val in zip(working, y_work):
            ineq_duals[i] = val
        value = quad_form(qp.Qobj, x) / 2 + qp.cobj.dot(x)
        report = SolveReport(OPTIMAL, value, x, RatVec(eq_duals),
                             RatVec(ineq_duals), None)
        _verify_kkt(qp.Qobj, qp.cobj, qp.eq_lhs, qp.eq_rhs, qp.ineq_lhs,
                    qp.ineq_rhs, report)
        return report
    raise InternalInvariantError("active-set iteration cap exceeded")


def _ratio_test(G: RatMat, h: RatVec, x: RatVec, d: RatVec,
                working: list[int], cap: Fraction | None):
    """Largest feasible step along d, capped; smallest blocking row wins ties."""
    blocker = None
    alpha = cap
    wset = set(working)
    for i in range(G.rows):
        if i in wset:
            continue
        gd = G.row(i).dot(d)
        if gd > 0:
            ratio = (h[i] - G.row(i).dot(x)) / gd
            if alpha is None or ratio < alpha:
                alpha, blocker = ratio, i
    return blocker, alpha


def check_boundedness(inst) -> BoundednessReport:
    """Exact boundedness test for the continuous relaxation.

    Minimizes c^T x over the recession cone {Ax = 0, Qx = 0, Ex <= 0} (Qx=0
    rows enter as equalities, valid on the cone since Q is PSD).  The value
    is 0 iff the relaxation is bounded, in which case the LP duals are the
    Farkas multipliers; otherwise the simplex ray, scaled to integer entries
    with c^T r <= -1, certifies a feasible direction of unbounded descent.
    """
    n = inst.n
    eq = RatMat.vstack([inst.A, inst.Q], cols=n)
    rep = solve_lp(LinearProgram(
        inst.c, eq, RatVec.zeros(eq.rows), inst.E, RatVec.zeros(inst.E.rows)))
    if rep.status == OPTIMAL:
        if rep.value != 0:
            raise InternalInvariantError("recession program value nonzero")
        m = inst.A.rows
        lam_A = RatVec(rep.eq_duals[:m])
        lam_Q = RatVec(rep.eq_duals[m:])
        lam_E = -rep.ineq_duals
        cert = FarkasCertificate(lam_E, lam_A, lam_Q)
        combo = inst.E.tmatvec(cert.lam_E) + inst.A.tmatvec(cert.lam_A) \
            + inst.Q.tmatvec(cert.lam_Q)
        if combo != inst.c or any(v > 0 for v in cert.lam_E):
            raise InternalInvariantError("Farkas certificate failed to verify")
        return BoundednessReport(True, cert, None)
    if rep.status != UNBOUNDED:
        raise InternalInvariantError("recession program cannot be infeasible")
    ray = _integral_descent_ray(inst, rep.ray)
    return BoundednessReport(False, None, ray)


def _integral_descent_ray(inst, ray: RatVec) -> RatVec:
    den = 1
    for a in ray:
        den = den * a.denominator // _gcd(den, a.denominator)
    r = ray.scale(den)
    drop = inst.c.dot(r)
    if drop > -1:
        r = r.scale(ceil_rat(_ONE / -drop))
    if any(a.denominator != 1 for a in r) or inst.c.dot(r) > -1:
        raise InternalInvariantError("integral ray scaling failed")
    if not inst.A.matvec(r).is_zero() or not inst.Q.matvec(r).is_zero() \
            or any(v > 0 for v in inst.E.matvec(r)):
        raise InternalInvariantError("descent ray leaves the recession cone")
    return r


def _gcd(a: int, b: int) -> int:
    while b:
        a, b = b, a % b
    return a
