"""Scaling degrees of the pulled-back potential and the self-adjointness classifier.

All thresholds are evaluated on Fractions; no floating point enters a verdict.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from fractions import Fraction

from .renormalize import ModelSpec
from .symgrammar import scaling, to_text, INF

ESA = "EssentiallySelfAdjoint"
EXTENSION = "SelfAdjointExtensionExists"
NOT_COVERED = "NotCovered"

TABLE_COLUMNS = ("beta_theta", "beta_omega", "beta_v", "beta_V", "m_theta", "m_omega", "m_v", "m_V")


class NonExactScaling(ValueError):
    pass


def _deg(sym, name):
    if sym.is_zero:
        raise NonExactScaling(f"{name} = 0 has no scaling degree")
    rep = scaling(sym)
    if not rep.exact:
        raise NonExactScaling(f"{name} = {to_text(sym)} does not scale exactly")
    if rep.beta in (INF, -INF) or rep.m in (INF, -INF):
        raise NonExactScaling(f"{name} has an infinite scaling degree")
    return Fraction(rep.beta), Fraction(rep.m)


@dataclass(frozen=True)
class PotentialScaling:
    beta_V: Fraction
    m_V: Fraction
    d: int

    @property
    def in_wedge(self):
        """Position-space degrees apply for -d < m_V and beta_V < 0."""
        return -self.d < self.m_V and self.beta_V < 0

    @property
    def alpha_V(self):
        return -self.d - self.m_V

    @property
    def delta_V(self):
        return -self.d - self.beta_V

    def to_dict(self):
        return {"beta_V": str(self.beta_V), "m_V": str(self.m_V),
                "alpha_V": str(self.alpha_V), "delta_V": str(self.delta_V),
                "position_space_valid": self.in_wedge}


def potential_scaling(model: ModelSpec) -> PotentialScaling:
    bv, mv = _deg(model.v, "v")
    bw, mw = _deg(model.omega, "omega")
    return PotentialScaling(2 * bv - bw, 2 * mv - mw, model.d)


def degrees(model: ModelSpec) -> dict:
    bt, mt = _deg(model.theta, "theta")
    bw, mw = _deg(model.omega, "omega")
    bv, mv = _deg(model.v, "v")
    ps = potential_scaling(model)
    return {"beta_theta": bt, "beta_omega": bw, "beta_v": bv, "beta_V": ps.beta_V,
            "m_theta": mt, "m_omega": mw, "m_v": mv, "m_V": ps.m_V}


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    detail: str = ""

    def to_dict(self):
        return {"condition": self.name, "pass": self.passed, "detail": self.detail}


@dataclass(frozen=True)
class Verdict:
    kind: str
    reasons: tuple = ()
    scaling: PotentialScaling | None = None
    m_theta: Fraction | None = None

    def to_dict(self):
        out = {"verdict": self.kind, "reasons": [r.to_dict() for r in self.reasons]}
        if self.scaling is not None:
            out["scaling"] = self.scaling.to_dict()
        if self.m_theta is not None:
            out["m_theta"] = str(self.m_theta)
        return out


def _fmt(x):
    return str(Fraction(x))


def m_V_bound(d: int, m_theta) -> Fraction:
    """Upper bound for m_V in the ESA theorems (strict)."""
    if m_theta == 2:
        return Fraction(0) if d < 2 else Fraction(2 - d)
    if m_theta == 1:
        return Fraction(1 - d)
    raise ValueError("ESA bounds exist only for m_theta in {1, 2}")


def threshold_checks(d: int, m_theta, beta_V, m_V) -> list:
    """The strict inequalities of the theorem selected by m_theta."""
    beta_V, m_V = Fraction(beta_V), Fraction(m_V)
    bound = m_V_bound(d, m_theta)
    return [
        Check("beta_V > -d", beta_V > -d, f"{_fmt(beta_V)} > {-d}"),
        Check(f"m_V < {_fmt(bound)}", m_V < bound, f"{_fmt(m_V)} < {_fmt(bound)}"),
    ]


def _extension_checks(model: ModelSpec, ps: PotentialScaling) -> list:
    d = model.d
    l1 = ps.beta_V > -d
    sym = model.V_profile
    # radial grammar symbols are even, real up to a constant phase, and smooth
    # away from 0, so their transforms are singular at most at the origin
    radial = all(t.window is None for t in sym.terms)
    real = all(t.coeff.imag == 0 for t in sym.terms)
    return [
        Check("V^ locally integrable (beta_V > -d)", l1, f"{_fmt(ps.beta_V)} > {-d}"),
        Check("sing supp V in {0}", l1 and radial,
              "certified: unwindowed radial power/mass-power symbol" if radial else "windowed profile"),
        Check("symmetry V^(k) = conj V^(-k)", radial and real,
              "radial and real profile" if real else "complex coefficient"),
    ]


def classify(model: ModelSpec) -> Verdict:
    try:
        _, m_theta = _deg(model.theta, "theta")
        ps = potential_scaling(model)
    except NonExactScaling as ex:
        return Verdict(NOT_COVERED, (Check("exact polynomial scaling", False, str(ex)),))
    reasons = [Check("exact polynomial scaling of theta, omega, v", True)]
    # cross-check: the degrees of v* s read off the symbol directly
    b2, m2 = _deg(model.V_profile, "V")
    reasons.append(Check("(beta_V, m_V) from v* s agrees with 2 deg v - deg omega",
                         (b2, m2) == (ps.beta_V, ps.m_V),
                         f"({_fmt(b2)}, {_fmt(m2)}) vs ({_fmt(ps.beta_V)}, {_fmt(ps.m_V)})"))
    ext = _extension_checks(model, ps)
    ext_ok = all(c.passed for c in ext)
    if m_theta in (1, 2):
        thm = "non-relativistic" if m_theta == 2 else "pseudo-relativistic"
        reasons.append(Check(f"m_theta = {_fmt(m_theta)} ({thm} theorem applies)", True))
        th = threshold_checks(model.d, m_theta, ps.beta_V, ps.m_V)
        reasons += th + ext
        ok = all(c.passed for c in reasons)
        reasons.append(Check("self-adjoint extension exists", ext_ok, "recorded only"))
        return Verdict(ESA if ok else NOT_COVERED, tuple(reasons), ps, m_theta)
    reasons.append(Check("m_theta in {1, 2}", False, f"m_theta = {_fmt(m_theta)}: no uniqueness theorem"))
    reasons += ext
    kind = EXTENSION if ext_ok and reasons[1].passed else NOT_COVERED
    return Verdict(kind, tuple(reasons), ps, m_theta)


# ------------------------------------------------------------ tables

@dataclass(frozen=True)
class TableRow:
    name: str
    values: tuple   # Fractions in TABLE_COLUMNS order

    def as_dict(self):
        return dict(zip(TABLE_COLUMNS, self.values))


def model_table(models) -> list:
    rows = []
    for m in models:
        deg = degrees(m)
        rows.append(TableRow(m.name, tuple(deg[c] for c in TABLE_COLUMNS)))
    return rows


def table_csv(tables) -> str:
    """tables: [(title, rows)] -> CSV with a leading 'table' column."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("table", "model") + TABLE_COLUMNS)
    for title, rows in tables:
        for r in rows:
            w.writerow((title, r.name) + tuple(_fmt(x) for x in r.values))
    return buf.getvalue()


# ------------------------------------------------------------ regions

def region_point(d: int, m_theta, beta_V=None, m_V=None) -> str:
    """Verdict of the theorem's inequalities on the given coordinates only
    (a coordinate left as None is not constrained, as in the planar figures)."""
    ok = True
    if beta_V is not None:
        ok &= Fraction(beta_V) > -d
    if m_V is not None:
        ok &= Fraction(m_V) < m_V_bound(d, m_theta)
    return ESA if ok else NOT_COVERED


def _frange(lo, hi, step):
    lo, hi, step = Fraction(lo), Fraction(hi), Fraction(step)
    x = lo
    while x <= hi:
        yield x
        x += step


def region_grid(d_range, m_theta, resolution, beta_range=(-4, 2), m_range=(-4, 2)):
    """Rows (d, beta_V, m_V, verdict) over an exact rational grid."""
    if Fraction(resolution) <= 0:
        raise ValueError("resolution must be positive")
    if m_theta not in (1, 2):
        raise ValueError("m_theta must be 1 or 2")
    lo, hi = d_range
    rows = []
    for d in range(int(lo), int(hi) + 1):
        for b in _frange(*beta_range, resolution):
            for m in _frange(*m_range, resolution):
                rows.append((d, b, m, region_point(d, m_theta, b, m)))
    return rows


def region_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("d", "beta_V", "m_V", "verdict"))
    for d, b, m, v in rows:
        w.writerow((d, _fmt(b), _fmt(m), v))
    return buf.getvalue()
