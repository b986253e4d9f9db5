"""Exact penalty weights with machine-checkable certificates.

Every certificate is verified primally before it is issued: the penalized
relaxation at (lambda_used, rho_star) must equal the ground-truth integer
value exactly, otherwise construction raises.  Three bound-producing
routes (a violation-margin formula, a per-assignment dual construction for
the max-norm, and conversions to other norms / other multipliers) are
cross-checked by an empirical bisection oracle.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from . import penalty as pen_mod
from .ald import (
    NlpDuals,
    _relax_slicer,
    eval_lr_plus,
    integer_box,
    lambda_bar,
    solve_ip,
)
from .convexsolve import INFEASIBLE, OPTIMAL, UNBOUNDED
from .errors import (
    BisectionCapError,
    DeltaZeroError,
    InfeasibleDomainError,
    InternalInvariantError,
    UnsupportedKindError,
)
from .instance import MiqpInstance
from .numkit import RatMat, RatVec, ceil_rat, ceil_sqrt, format_rat, rat

_ZERO = Fraction(0)
_ONE = Fraction(1)

SUFFICIENT = "sufficient"
DUAL_LINF = "dual-linf"
NORM_CONVERT = "norm-convert"
LAMBDA_SHIFT = "lambda-shift"
EMPIRICAL = "empirical"

_BISECTION_CAP = Fraction(2) ** 40
_EMPIRICAL_WIDTH = Fraction(1, 1024)


@dataclass(frozen=True)
class SufficientEvidence:
    """Inputs of the margin formula: a feasible point, the positive lower
    bound on any attainable violation, and the relaxation value."""

    x_tilde: RatVec
    delta: Fraction
    z_nlp: Fraction


@dataclass(frozen=True)
class DualAssignmentRecord:
    """Exact dual optimum of one integer assignment's subproblem.

    Identities (all exact, checked at construction): the multipliers on the
    two-sided residual rows sum to rho_x2; the stationarity row matches
    Q11^T nu; the dual objective value equals the primal subproblem value
    and is at least the integer optimum.
    """

    assignment: tuple[int, ...]
    nu: RatVec
    y1: RatVec
    y2: RatVec
    y3: RatVec
    y4: RatVec
    y5: RatVec
    rho_x2: Fraction
    dual_value: Fraction


@dataclass(frozen=True)
class DualLinfEvidence:
    records: tuple[DualAssignmentRecord, ...]


@dataclass(frozen=True)
class NormConvertEvidence:
    gamma: int
    base_rho: Fraction


@dataclass(frozen=True)
class LambdaShiftEvidence:
    eta: int
    norm_shift_bound: Fraction
    base_rho: Fraction


@dataclass(frozen=True)
class EmpiricalEvidence:
    width: Fraction


def _bit_size(value: Fraction) -> int:
    """Binary encoding size of a rational (numerator + denominator bits)."""
    return abs(value.numerator).bit_length() + value.denominator.bit_length()


@dataclass(frozen=True)
class RhoCertificate:
    rho_star: Fraction
    method: str
    lambda_used: RatVec
    evidence: object

    def bit_size(self) -> int:
        """Encoding size of the certified weight, reported for inspection;
        no polynomiality claim is checked."""
        return _bit_size(self.rho_star)

    def to_json_dict(self) -> dict:
        ev: dict = {}
        e = self.evidence
        if isinstance(e, SufficientEvidence):
            ev = {
                "x_tilde": [format_rat(v) for v in e.x_tilde],
                "delta": format_rat(e.delta),
                "z_nlp": format_rat(e.z_nlp),
            }
        elif isinstance(e, DualLinfEvidence):
            ev = {
                "records": [
                    {
                        "assignment": list(r.assignment),
                        "nu": [format_rat(v) for v in r.nu],
                        "y1": [format_rat(v) for v in r.y1],
                        "y2": [format_rat(v) for v in r.y2],
                        "y3": [format_rat(v) for v in r.y3],
                        "y4": [format_rat(v) for v in r.y4],
                        "y5": [format_rat(v) for v in r.y5],
                        "rho_x2": format_rat(r.rho_x2),
                        "dual_value": format_rat(r.dual_value),
                    }
                    for r in e.records
                ]
            }
        elif isinstance(e, NormConvertEvidence):
            ev = {"gamma": e.gamma, "base_rho": format_rat(e.base_rho)}
        elif isinstance(e, LambdaShiftEvidence):
            ev = {
                "eta": e.eta,
                "norm_shift_bound": format_rat(e.norm_shift_bound),
                "base_rho": format_rat(e.base_rho),
            }
        elif isinstance(e, EmpiricalEvidence):
            ev = {"width": format_rat(e.width)}
        return {
            "rho_star": format_rat(self.rho_star),
            "rho_star_bits": self.bit_size(),
            "method": self.method,
            "lambda_used": [format_rat(v) for v in self.lambda_used],
            "evidence": ev,
        }


def certify(inst: MiqpInstance, lam: RatVec, rho, pen: pen_mod.Penalty,
            z_ip: Fraction | None = None) -> bool:
    """Exact predicate: does the relaxation at (lam, rho) close the gap."""
    if z_ip is None:
        ip = solve_ip(inst)
        if ip.status != OPTIMAL:
            raise InfeasibleDomainError(f"ground-truth solve is {ip.status}")
        z_ip = ip.value
    rep = eval_lr_plus(inst, lam, rho, pen)
    return (not rep.unbounded) and rep.value == z_ip


def _issue(inst, lam, rho, pen, method, evidence, z_ip) -> RhoCertificate:
    if not certify(inst, lam, rho, pen, z_ip):
        raise InternalInvariantError(
            f"{method} weight {rho} failed primal verification"
        )
    return RhoCertificate(rat(rho), method, lam, evidence)


def rho_sufficient(inst: MiqpInstance, pen: pen_mod.Penalty,
                   lam: RatVec | None = None) -> RhoCertificate:
    """Margin-formula weight: (objective at a feasible point - z_nlp)/delta.

    delta is the exact minimum of the penalty over integer assignments
    whose continuous slice cannot reach a zero residual; if some slice
    touches zero residual while the continuous variables act on the
    dualized rows, the infimum over violating points is zero and
    DeltaZeroError is raised (the formula is inapplicable).
    """
    ip = solve_ip(inst)
    if ip.status != OPTIMAL:
        raise InfeasibleDomainError(f"ground-truth solve is {ip.status}")
    duals = lambda_bar(inst)
    if lam is None:
        lam = duals.lambda_bar
    n = inst.n
    A1, _ = inst.split_cols(inst.A)
    continuous_acts = not A1.is_zero()

    # per-assignment exact minimum of psi(b - Ax) over the continuous slice
    from .ald import _SliceSolver

    if pen.kind == pen_mod.SQL2:
        At = inst.A.transpose()
        slicer = _SliceSolver(inst, At.matmul(inst.A).scale(2),
                              -At.matvec(inst.b).scale(2),
                              inst.b.dot(inst.b), None, None)
    else:
        enc = pen_mod.epigraph_rows(pen, inst.A, inst.b)
        aux_cost = [_ZERO] * (enc.n_aux - 1) + [_ONE]
        slicer = _SliceSolver(inst, RatMat.zeros(n, n), RatVec.zeros(n),
                              _ZERO, enc, aux_cost)

    candidates: list[Fraction] = []
    for x2 in integer_box(inst).assignments():
        rep, const = slicer.solve(x2)
        if rep.status == INFEASIBLE:
            continue
        if rep.status == UNBOUNDED:
            raise InternalInvariantError("penalty minimization unbounded")
        vmin = rep.value + const
        if vmin > 0:
            candidates.append(vmin)
        elif continuous_acts:
            raise DeltaZeroError(
                f"assignment {x2} attains zero residual with continuous "
                "variables acting on the dualized rows"
            )
    delta = min(candidates) if candidates else _ONE
    rho_star = (inst.objective_value(ip.x) - duals.z_nlp) / delta
    evidence = SufficientEvidence(ip.x, delta, duals.z_nlp)
    return _issue(inst, lam, rho_star, pen, SUFFICIENT, evidence, ip.value)


def _dual_probe(inst: MiqpInstance, duals: NlpDuals,
                pen_linf: pen_mod.Penalty, slicer_cache: dict,
                x2: tuple[int, ...], rho: Fraction):
    """Solve one assignment's subproblem and extract the exact dual point.

    Returns (status, record); status is 'infeasible' or 'ok'; the record's
    dual objective equals the subproblem value by strong duality, checked
    exactly along with the multiplier identities.
    """
    if rho not in slicer_cache:
        slicer_cache[rho] = _relax_slicer(inst, duals.lambda_bar, rho, pen_linf)
    slicer = slicer_cache[rho]
    rep, const = slicer.solve(x2)
    if rep.status == INFEASIBLE:
        return "infeasible", None
    if rep.status == UNBOUNDED:
        raise InternalInvariantError(
            "subproblem unbounded at the optimal multipliers"
        )
    value = rep.value + const
    m, m2, n1 = inst.m, inst.m2, inst.n1
    mu = rep.ineq_duals
    y3 = RatVec(mu[:m2])
    y1 = RatVec(mu[m2 + 2 * i] for i in range(m))
    y2 = RatVec(mu[m2 + 2 * i + 1] for i in range(m))
    zeros1 = RatVec.zeros(n1)
    x1 = RatVec(rep.x[:n1])
    nu = -x1
    x2v = RatVec(x2)

    Q11, Q12, Q22 = inst.q_blocks()
    A1, A2 = inst.split_cols(inst.A)
    E1, E2 = inst.split_cols(inst.E)
    c1, c2 = inst.c_split()
    lam = duals.lambda_bar

    if sum(y1, _ZERO) + sum(y2, _ZERO) != rho:
        raise InternalInvariantError("residual-row multipliers do not sum to rho")
    lhs = c1 - A1.tmatvec(lam) + Q12.matvec(x2v) + A1.tmatvec(y1 - y2) \
        + E1.tmatvec(y3) + zeros1 - zeros1
    if lhs != Q11.tmatvec(nu):
        raise InternalInvariantError("dual stationarity row failed")
    dual_value = (
        -nu.dot(Q11.matvec(nu)) / 2
        + (A2.matvec(x2v) - inst.b).dot(y1)
        - (A2.matvec(x2v) - inst.b).dot(y2)
        + (E2.matvec(x2v) - inst.f).dot(y3)
        + lam.dot(inst.b)
        + (c2 - A2.tmatvec(lam)).dot(x2v)
        + x2v.dot(Q22.matvec(x2v)) / 2
    )
    if dual_value != value:
        raise InternalInvariantError("dual objective differs from primal value")
    record = DualAssignmentRecord(
        assignment=tuple(x2), nu=nu, y1=y1, y2=y2, y3=y3,
        y4=zeros1, y5=zeros1, rho_x2=rho, dual_value=dual_value,
    )
    return "ok", record


def rho_dual_linf(inst: MiqpInstance) -> RhoCertificate:
    """Max-norm weight from per-assignment dual constructions.

    For each integer assignment, the smallest weight (within interval
    width 1, by bisection over rho >= 1) whose dual subproblem value
    reaches the integer optimum is found; the overall weight is the
    maximum over assignments and is re-verified primally.
    """
    ip = solve_ip(inst)
    if ip.status != OPTIMAL:
        raise InfeasibleDomainError(f"ground-truth solve is {ip.status}")
    z_ip = ip.value
    duals = lambda_bar(inst)
    lam = duals.lambda_bar
    pen_linf = pen_mod.Penalty(pen_mod.LINF, inst.m)
    if inst.m == 0:
        return _issue(inst, lam, _ONE, pen_linf, DUAL_LINF,
                      DualLinfEvidence(()), z_ip)

    slicer_cache: dict = {}
    records: list[DualAssignmentRecord] = []
    current = _ONE
    for x2 in integer_box(inst).assignments():
        status, rec = _dual_probe(inst, duals, pen_linf,
                                  slicer_cache, x2, current)
        if status == "infeasible":
            continue
        if rec.dual_value >= z_ip:
            records.append(rec)
            continue
        lo, hi = current, 2 * current
        rec_hi = None
        while True:
            if hi > _BISECTION_CAP:
                raise BisectionCapError(
                    f"no certifying weight below {_BISECTION_CAP} for {x2}"
                )
            _, rec_hi = _dual_probe(inst, duals, pen_linf,
                                    slicer_cache, x2, hi)
            if rec_hi.dual_value >= z_ip:
                break
            lo, hi = hi, 2 * hi
        while hi - lo > 1:
            mid = (lo + hi) / 2
            _, rec_mid = _dual_probe(inst, duals, pen_linf,
                                     slicer_cache, x2, mid)
            if rec_mid.dual_value >= z_ip:
                hi, rec_hi = mid, rec_mid
            else:
                lo = mid
        records.append(rec_hi)
        current = hi
    return _issue(inst, lam, current, pen_linf, DUAL_LINF,
                  DualLinfEvidence(tuple(records)), z_ip)


def rho_for_norm(rho_hat, pen: pen_mod.Penalty) -> Fraction:
    """Convert a max-norm certificate weight to the given norm kind."""
    if not pen.is_norm:
        raise UnsupportedKindError("conversion target must be a norm kind")
    gamma = pen_mod.norm_constants(pen).gamma
    return rat(rho_hat) * gamma


def rho_for_lambda(rho_star_bar, lambda_tilde: RatVec, lambda_bar_vec: RatVec,
                   pen: pen_mod.Penalty) -> Fraction:
    """Shift a certificate weight from the optimal multipliers to any
    multipliers: ceil(rho + eta * upper-bound on the Euclidean shift)."""
    if not pen.is_norm:
        raise UnsupportedKindError("multiplier shift needs a norm kind")
    eta = pen_mod.norm_constants(pen).eta
    diff = lambda_tilde - lambda_bar_vec
    shift = Fraction(ceil_sqrt(diff.dot(diff)))
    return Fraction(ceil_rat(rat(rho_star_bar) + eta * shift))


def certificate_for_norm(inst: MiqpInstance, pen: pen_mod.Penalty,
                         base: RhoCertificate | None = None) -> RhoCertificate:
    """Full certificate for any norm kind via the max-norm construction."""
    if base is None:
        base = rho_dual_linf(inst)
    rho = rho_for_norm(base.rho_star, pen)
    gamma = pen_mod.norm_constants(pen).gamma
    return _issue(inst, base.lambda_used, rho, pen, NORM_CONVERT,
                  NormConvertEvidence(gamma, base.rho_star), None)


def certificate_for_lambda(inst: MiqpInstance, pen: pen_mod.Penalty,
                           lambda_tilde: RatVec,
                           base: RhoCertificate | None = None) -> RhoCertificate:
    """Full certificate at arbitrary multipliers for a norm kind."""
    if base is None:
        base = certificate_for_norm(inst, pen) if pen.kind != pen_mod.LINF \
            else rho_dual_linf(inst)
    eta = pen_mod.norm_constants(pen).eta
    diff = lambda_tilde - base.lambda_used
    shift = Fraction(ceil_sqrt(diff.dot(diff)))
    rho = rho_for_lambda(base.rho_star, lambda_tilde, base.lambda_used, pen)
    return _issue(inst, lambda_tilde, rho, pen, LAMBDA_SHIFT,
                  LambdaShiftEvidence(eta, shift, base.rho_star), None)


@dataclass(frozen=True)
class EmpiricalBound:
    rho_min_upper: Fraction
    achieved: bool


def rho_bisect_empirical(inst: MiqpInstance, lam: RatVec,
                         pen: pen_mod.Penalty, rho_max) -> EmpiricalBound:
    """Bisection oracle for the minimal certifying weight (norm kinds).

    Returns an upper bound within 2**-10 of the minimal weight at which the
    relaxation value equals the integer optimum, or achieved=False when
    even rho_max fails.
    """
    if not pen.is_norm:
        raise UnsupportedKindError("empirical bisection needs a norm kind")
    rho_max = rat(rho_max)
    ip = solve_ip(inst)
    if ip.status != OPTIMAL:
        raise InfeasibleDomainError(f"ground-truth solve is {ip.status}")
    z_ip = ip.value

    def hit(rho: Fraction) -> bool:
        rep = eval_lr_plus(inst, lam, rho, pen)
        return (not rep.unbounded) and rep.value == z_ip

    if hit(_ZERO):
        return EmpiricalBound(_ZERO, True)
    if not hit(rho_max):
        return EmpiricalBound(rho_max, False)
    lo, hi = _ZERO, rho_max
    while hi - lo > _EMPIRICAL_WIDTH:
        mid = (lo + hi) / 2
        if hit(mid):
            hi = mid
        else:
            lo = mid
    return EmpiricalBound(hi, True)


def certificate_empirical(inst: MiqpInstance, lam: RatVec,
                          pen: pen_mod.Penalty, rho_max) -> RhoCertificate:
    bound = rho_bisect_empirical(inst, lam, pen, rho_max)
    if not bound.achieved:
        raise BisectionCapError(f"no certifying weight below {rho_max}")
    return _issue(inst, lam, bound.rho_min_upper, pen, EMPIRICAL,
                  EmpiricalEvidence(_EMPIRICAL_WIDTH), None)
