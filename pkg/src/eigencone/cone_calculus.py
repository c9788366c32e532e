"""Normalized mean curvature operator and exact eigencubic verdicts."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .poly import Polynomial, Scalar, norm_sq


@dataclass(frozen=True)
class EigencubicReport:
    name: str
    is_harmonic: bool
    munzner_gradient_constant: Scalar | None = None
    weight: Scalar | None = None
    residual_zero: bool = False

    def to_json_dict(self) -> dict:
        return {
            "name": self.name,
            "harmonic": self.is_harmonic,
            "munzner_c": scalar_to_json(self.munzner_gradient_constant),
            "weight": scalar_to_json(self.weight),
        }


def scalar_to_json(s: Scalar | None):
    """Integers stay integers; anything else is rendered exactly as a string."""
    if s is None:
        return None
    if s.b == 0 and s.a.denominator == 1:
        return s.a.numerator
    return str(s)


def gradient_norm_sq(f: Polynomial) -> Polynomial:
    out = Polynomial.zero(f.nvars)
    for g in f.gradient():
        out = out + g * g
    return out


def mean_curvature_op(f: Polynomial) -> Polynomial:
    """L(f) = |grad f|^2 lap f - sum_ij f_ij f_i f_j, exactly."""
    grad = f.gradient()
    lap = Polynomial.zero(f.nvars)
    contraction = Polynomial.zero(f.nvars)
    for i, fi in enumerate(grad):
        if fi.is_zero():
            continue
        lap = lap + fi.partial(i)
        # sum_j f_ij f_j, then contracted with f_i
        row = Polynomial.zero(f.nvars)
        for j, fj in enumerate(grad):
            fij = fi.partial(j)
            if not fij.is_zero() and not fj.is_zero():
                row = row + fij * fj
        contraction = contraction + fi * row
    return gradient_norm_sq(f) * lap - contraction


def _proportionality(target: Polynomial, basis: Polynomial) -> Scalar | None:
    """The c with ``target == c * basis`` exactly, or None.

    c is read off the graded-lex least monomial of ``basis`` and then verified
    on every term.
    """
    if basis.is_zero():
        return Scalar(0) if target.is_zero() else None
    exp, b = basis.least_term()
    c = target.coefficient(exp) / b
    return c if (target - basis.scale(c)).is_zero() else None


def check_munzner(f: Polynomial, name: str = "") -> EigencubicReport:
    harmonic = f.laplacian().is_zero()
    r4 = norm_sq(f.nvars) * norm_sq(f.nvars)
    c = _proportionality(gradient_norm_sq(f), r4)
    return EigencubicReport(name, harmonic, munzner_gradient_constant=c, residual_zero=c is not None)


def check_radial_eigencubic(f: Polynomial, name: str = "") -> EigencubicReport:
    if f.is_zero():
        raise ValueError("the zero polynomial is not an eigencubic")
    lam = _proportionality(mean_curvature_op(f), norm_sq(f.nvars) * f)
    return EigencubicReport(name, f.laplacian().is_zero(), weight=lam, residual_zero=lam is not None)


def analyze(f: Polynomial, name: str = "") -> EigencubicReport:
    """Harmonicity, Munzner constant and radial weight in one report."""
    m = check_munzner(f, name)
    r = check_radial_eigencubic(f, name)
    return EigencubicReport(
        name,
        m.is_harmonic,
        munzner_gradient_constant=m.munzner_gradient_constant,
        weight=r.weight,
        residual_zero=r.residual_zero,
    )


def is_cartan_verdict(report: EigencubicReport) -> bool:
    """Munzner constant 9 together with weight -54 and harmonicity."""
    return (
        report.is_harmonic
        and report.munzner_gradient_constant == Fraction(9)
        and report.weight == Fraction(-54)
    )
