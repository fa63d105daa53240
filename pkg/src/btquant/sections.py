"""Twisted sections, the xi-vector-field calculus and the interpolating polynomials.

A section of twist ``m`` is stored like a symbol: component ``a`` is a
harmonic polynomial of bidegree ``(a, a + m)``.  The xi engine works on
expressions in ``x``, ``conj(x)`` and the column symbols ``g(k, v)`` and
``conj(g)(k, v)`` of a unitary matrix whose first column is ``x``.  Each
``v`` is a summation variable over the column indices ``2..d``; chain
labels point to variables, and a Kronecker delta between two variables is
resolved by merging them.
"""

from __future__ import annotations

from typing import Dict, List, Mapping, Sequence, Tuple

from gmpy2 import mpq

from . import polys
from .exactcore import DimensionError, GaussianRational, G_ONE, Rational, multi_indices, rational
from .symbols import Symbol


class NonInvariantExpressionError(ValueError):
    """Raised when column symbols cannot be contracted to a function of ``x``."""


class Section:
    """Element of the twisted space of twist ``m`` by harmonic components."""

    __slots__ = ("d", "m", "components")

    def __init__(self, d: int, m: int, components: Mapping[int, polys.Poly]):
        self.d = d
        self.m = m
        self.components: Dict[int, polys.Poly] = {a: dict(p) for a, p in components.items() if p}

    def representative(self) -> polys.Poly:
        out: polys.Poly = {}
        for p in self.components.values():
            polys.add_into(out, p)
        return out

    def __add__(self, other: "Section") -> "Section":
        self._check(other)
        comps = {a: dict(p) for a, p in self.components.items()}
        for a, p in other.components.items():
            polys.add_into(comps.setdefault(a, {}), p)
        return Section(self.d, self.m, comps)

    def __sub__(self, other: "Section") -> "Section":
        return self + other.scale(-1)

    def scale(self, c) -> "Section":
        c = GaussianRational.coerce(c)
        return Section(self.d, self.m, {a: polys.scale(p, c) for a, p in self.components.items()})

    def map_components(self, fn) -> "Section":
        return Section(self.d, self.m, {a: polys.scale(p, fn(a)) for a, p in self.components.items() if fn(a)})

    def _check(self, other: "Section") -> None:
        if (self.d, self.m) != (other.d, other.m):
            raise DimensionError("sections of different dimension or twist")

    def is_zero(self) -> bool:
        return not self.components

    def __eq__(self, other):
        if not isinstance(other, Section):
            return NotImplemented
        return (self.d, self.m) == (other.d, other.m) and self.components == other.components

    __hash__ = None

    def __repr__(self):
        return f"Section(d={self.d}, m={self.m}, degrees={sorted(self.components)})"

    def as_symbol(self) -> Symbol:
        if self.m != 0:
            raise ValueError("only untwisted sections are functions")
        return Symbol(self.d, self.components)


def section_from_poly(d: int, m: int, raw: Mapping) -> Section:
    p: polys.Poly = {}
    for (g, e), v in raw.items():
        g, e = tuple(g), tuple(e)
        if len(g) != d or len(e) != d:
            raise DimensionError(f"monomial {(g, e)} does not live in dimension {d}")
        polys.add_into(p, {(g, e): GaussianRational.coerce(v)})
    return Section(d, m, polys.restrict_to_sphere(p, d, m))


def basis_sections(d: int, m: int, a: int) -> List[Section]:
    """Harmonic projections of the monomials of bidegree ``(a, a + m)``; they span ``H_{a,a+m}``."""
    out = []
    for g in multi_indices(d, a):
        for e in multi_indices(d, a + m):
            s = section_from_poly(d, m, {(g, e): 1})
            comp = s.components.get(a)
            if comp:
                out.append(Section(d, m, {a: comp}))
    return out


def mu(d: int, m: int, a: int) -> int:
    """Eigenvalue ``a(a + m + d - 1)`` of ``D_m`` on ``H_{a,a+m}``."""
    return a * (a + m + d - 1)


def d_m_apply(s: Section) -> Section:
    """``(d-1) a s - sum_{k,l} (delta_kl - x_l xbar_k) dbar_k d_l s`` on each component."""
    d = s.d
    acc: polys.Poly = {}
    for a, p in s.components.items():
        polys.add_into(acc, p, GaussianRational((d - 1) * a))
        for l in range(d):
            dl = polys.derivative(p, l)
            if not dl:
                continue
            for k in range(d):
                dkl = polys.derivative(dl, k, anti=True)
                if not dkl:
                    continue
                factor: polys.Poly = {}
                xl = tuple(1 if i == l else 0 for i in range(d))
                xk = tuple(1 if i == k else 0 for i in range(d))
                factor[(xl, xk)] = GaussianRational(-1)
                if k == l:
                    zero = (0,) * d
                    factor[(zero, zero)] = G_ONE
                polys.add_into(acc, polys.mul(factor, dkl), GaussianRational(-1))
    return Section(d, s.m, polys.restrict_to_sphere(acc, d, s.m))


# ---------------------------------------------------------------------------
# xi engine

# A term key is (gamma, delta, gsyms, gbsyms, alias):
#   gsyms / gbsyms: sorted tuples of (k, var) for g(k, var) / conj(g)(k, var)
#   alias: sorted tuple of (label, var)
TermKey = Tuple[tuple, tuple, tuple, tuple, tuple]


def _canonical(key: TermKey) -> TermKey:
    gamma, delta, gs, gbs, alias = key
    rename: Dict[int, int] = {}
    for _, v in alias:
        if v not in rename:
            rename[v] = len(rename)
    for _, v in gs + gbs:
        if v not in rename:
            rename[v] = len(rename)
    return (
        gamma,
        delta,
        tuple(sorted((k, rename[v]) for k, v in gs)),
        tuple(sorted((k, rename[v]) for k, v in gbs)),
        tuple((lab, rename[v]) for lab, v in alias),
    )


def _merge(key: TermKey, old: int, new: int) -> TermKey:
    gamma, delta, gs, gbs, alias = key
    sub = lambda v: new if v == old else v
    return (
        gamma,
        delta,
        tuple(sorted((k, sub(v)) for k, v in gs)),
        tuple(sorted((k, sub(v)) for k, v in gbs)),
        tuple((lab, sub(v)) for lab, v in alias),
    )


class XiExpression:
    """Linear combination of monomials in ``x``, ``conj(x)`` and column symbols."""

    __slots__ = ("d", "terms")

    def __init__(self, d: int, terms: Mapping[TermKey, GaussianRational] | None = None):
        self.d = d
        self.terms: Dict[TermKey, GaussianRational] = {}
        for k, v in (terms or {}).items():
            self._add(k, v)

    def _add(self, key: TermKey, coef) -> None:
        key = _canonical(key)
        cur = self.terms.get(key)
        new = coef if cur is None else cur + coef
        if new:
            self.terms[key] = new
        elif cur is not None:
            del self.terms[key]

    @classmethod
    def from_poly(cls, d: int, p: polys.Poly) -> "XiExpression":
        return cls(d, {(g, e, (), (), ()): v for (g, e), v in p.items()})

    @classmethod
    def from_section(cls, s) -> "XiExpression":
        if isinstance(s, XiExpression):
            return s
        return cls.from_poly(s.d, s.representative())

    def is_zero(self) -> bool:
        return not self.terms

    def __add__(self, other: "XiExpression") -> "XiExpression":
        out = XiExpression(self.d, self.terms)
        for k, v in other.terms.items():
            out._add(k, v)
        return out

    def __sub__(self, other: "XiExpression") -> "XiExpression":
        out = XiExpression(self.d, self.terms)
        for k, v in other.terms.items():
            out._add(k, -v)
        return out

    def scale(self, c) -> "XiExpression":
        c = GaussianRational.coerce(c)
        return XiExpression(self.d, {k: v * c for k, v in self.terms.items()})

    def __mul__(self, other: "XiExpression") -> "XiExpression":
        """Product; shared labels refer to the same summation variable."""
        out = XiExpression(self.d)
        for k1, c1 in self.terms.items():
            for k2, c2 in other.terms.items():
                key = _multiply_terms(k1, k2)
                out._add(key, c1 * c2)
        return out

    def labels(self) -> set:
        return {lab for key in self.terms for lab, _ in key[4]}

    def __repr__(self):
        return f"XiExpression(d={self.d}, terms={len(self.terms)})"


def _multiply_terms(k1: TermKey, k2: TermKey) -> TermKey:
    g1, e1, gs1, gbs1, al1 = k1
    g2, e2, gs2, gbs2, al2 = k2
    off = 1 + max([v for _, v in al1 + gs1 + gbs1], default=-1)
    gs2 = tuple((k, v + off) for k, v in gs2)
    gbs2 = tuple((k, v + off) for k, v in gbs2)
    al2 = tuple((lab, v + off) for lab, v in al2)
    key = (
        tuple(a + b for a, b in zip(g1, g2)),
        tuple(a + b for a, b in zip(e1, e2)),
        tuple(sorted(gs1 + gs2)),
        tuple(sorted(gbs1 + gbs2)),
        tuple(sorted(set(al1) | set(al2))),
    )
    vars1 = dict(al1)
    for lab, v in al2:
        if lab in vars1:
            key = _merge(key, v, vars1[lab])
    alias = {}
    for lab, v in key[4]:
        alias[lab] = v
    return key[:4] + (tuple(sorted(alias.items())),)


def _label_var(key: TermKey, label) -> Tuple[TermKey, int]:
    alias = dict(key[4])
    if label in alias:
        return key, alias[label]
    used = [v for _, v in key[4] + key[2] + key[3]]
    var = 1 + max(used, default=-1)
    alias[label] = var
    return key[:4] + (tuple(sorted(alias.items())),), var


def _remove_one(items: tuple, idx: int) -> tuple:
    return items[:idx] + items[idx + 1:]


def _unit(d: int, k: int) -> tuple:
    return tuple(1 if i == k else 0 for i in range(d))


def _dec(t: tuple, k: int) -> tuple:
    return t[:k] + (t[k] - 1,) + t[k + 1:]


def _inc(t: tuple, k: int) -> tuple:
    return t[:k] + (t[k] + 1,) + t[k + 1:]


def _apply_lower(key: TermKey, label) -> List[Tuple[TermKey, int]]:
    """Derivation ``xi_{label,1}`` on one monomial."""
    key, s = _label_var(key, label)
    gamma, delta, gs, gbs, alias = key
    out = []
    # x_k -> -g(k, s)
    for k, c in enumerate(gamma):
        if c:
            out.append(((_dec(gamma, k), delta, tuple(sorted(gs + ((k, s),))), gbs, alias), -c))
    # conj(g)(k, v) -> delta_{s v} conj(x_k)
    for idx, (k, v) in enumerate(gbs):
        nk = (gamma, _inc(delta, k), gs, _remove_one(gbs, idx), alias)
        if v != s:
            nk = _merge(nk, v, s)
        out.append((nk, 1))
    return out


def _apply_raise(key: TermKey, label) -> List[Tuple[TermKey, int]]:
    """Derivation ``xi_{1,label}`` on one monomial."""
    key, s = _label_var(key, label)
    gamma, delta, gs, gbs, alias = key
    out = []
    # conj(x_k) -> conj(g)(k, s)
    for k, c in enumerate(delta):
        if c:
            out.append(((gamma, _dec(delta, k), gs, tuple(sorted(gbs + ((k, s),))), alias), c))
    # g(k, v) -> -delta_{s v} x_k
    for idx, (k, v) in enumerate(gs):
        nk = (_inc(gamma, k), delta, _remove_one(gs, idx), gbs, alias)
        if v != s:
            nk = _merge(nk, v, s)
        out.append((nk, -1))
    return out


def _apply(e: XiExpression, label, rule) -> XiExpression:
    out = XiExpression(e.d)
    for key, coef in e.terms.items():
        for nk, c in rule(key, label):
            out._add(nk, coef * c)
    return out


def xi_lower_chain(s, slots: Sequence) -> XiExpression:
    """Apply ``xi_{slot,1}`` for each slot in order (first slot acts first)."""
    e = XiExpression.from_section(s)
    for lab in slots:
        e = _apply(e, lab, _apply_lower)
    return e


def xi_raise_chain(s, slots: Sequence) -> XiExpression:
    """Apply ``xi_{1,slot}`` for each slot in order (first slot acts first)."""
    e = XiExpression.from_section(s)
    for lab in slots:
        e = _apply(e, lab, _apply_raise)
    return e


def contract_poly(e: XiExpression) -> polys.Poly:
    """Replace ``sum_v conj(g)(k,v) g(l,v)`` by ``delta_kl - x_l conj(x_k)`` and free
    variables by ``d - 1``; any other column-symbol pattern is an error."""
    d = e.d
    zero = (0,) * d
    acc: polys.Poly = {}
    for (gamma, delta, gs, gbs, alias), coef in e.terms.items():
        vars_ = {v for _, v in alias} | {v for _, v in gs} | {v for _, v in gbs}
        poly: polys.Poly = {(gamma, delta): coef}
        for v in vars_:
            ks = [k for k, w in gbs if w == v]
            ls = [l for l, w in gs if w == v]
            if not ks and not ls:
                poly = polys.scale(poly, d - 1)
            elif len(ks) == 1 and len(ls) == 1:
                k, l = ks[0], ls[0]
                factor: polys.Poly = {(_unit(d, l), _unit(d, k)): GaussianRational(-1)}
                if k == l:
                    factor[(zero, zero)] = G_ONE
                poly = polys.mul(poly, factor)
            else:
                raise NonInvariantExpressionError(
                    f"summation variable with {len(ls)} g and {len(ks)} conj(g) symbols cannot be contracted")
        polys.add_into(acc, poly)
    return acc


def contract(e: XiExpression, m: int | None = None):
    """Contract column symbols; returns a :class:`Section` (or :class:`Symbol` when untwisted)."""
    p = contract_poly(e)
    if m is None:
        offsets = {sum(de) - sum(g) for g, de in p}
        if len(offsets) > 1:
            raise NonInvariantExpressionError("contracted expression mixes twists")
        m = offsets.pop() if offsets else 0
    s = Section(e.d, m, polys.restrict_to_sphere(p, e.d, m))
    return s.as_symbol() if m == 0 else s


def xi_sandwich(s: Section, n: int) -> Section:
    """``sum_I xi_{1,i_1}...xi_{1,i_n} xi_{i_n,1}...xi_{i_1,1} s`` through the engine."""
    labels = list(range(n))
    e = xi_lower_chain(s, labels)
    e = xi_raise_chain(e, list(reversed(labels)))
    p = contract_poly(e)
    return Section(s.d, s.m, polys.restrict_to_sphere(p, s.d, s.m))


def xi_star_n(f: Symbol, g: Symbol, n: int) -> Symbol:
    """Engine evaluation of ``(-1)^n sum_I (xi_{1,I} f)(xi_{I^rev,1} g)``."""
    labels = list(range(n))
    F = xi_raise_chain(XiExpression.from_poly(f.d, f.representative()), labels)
    G = xi_lower_chain(XiExpression.from_poly(g.d, g.representative()), list(reversed(labels)))
    p = contract_poly(F * G)
    return Symbol(f.d, polys.restrict_to_sphere(p, f.d, 0)).scale((-1) ** n)


def xi_commutator_trace(s: Section) -> Section:
    """``sum_i [xi_{1,i}, xi_{i,1}] s`` through the engine."""
    a = xi_raise_chain(xi_lower_chain(s, [0]), [0])
    b = xi_lower_chain(xi_raise_chain(s, [0]), [0])
    p = contract_poly(a - b)
    return Section(s.d, s.m, polys.restrict_to_sphere(p, s.d, s.m))


def check_d_products(d: int, m: int, n_max: int, a_max: int = 2) -> dict:
    """Compare the engine's xi sandwich with ``prod_{i<n} (D_m - mu_i)`` on basis sections."""
    if n_max > 3:
        raise ValueError("n_max is limited to 3")
    cases = []
    for a in range(a_max + 1):
        for s in basis_sections(d, m, a):
            for n in range(1, n_max + 1):
                lhs = xi_sandwich(s, n)
                rhs = s
                for i in range(n):
                    rhs = d_m_apply(rhs) - rhs.scale(mu(d, m, i))
                cases.append({"a": a, "n": n, "equal": lhs == rhs})
    ok = all(c["equal"] for c in cases)
    return {"d": d, "m": m, "n_max": n_max, "cases": len(cases), "pass": ok,
            "failures": [c for c in cases if not c["equal"]]}


# ---------------------------------------------------------------------------
# interpolating polynomials (coefficient lists, lowest degree first)

def _pmul(p: List[Rational], q: List[Rational]) -> List[Rational]:
    out = [mpq(0)] * (len(p) + len(q) - 1)
    for i, a in enumerate(p):
        for j, b in enumerate(q):
            out[i + j] += a * b
    return out


def _padd(p: List[Rational], q: List[Rational]) -> List[Rational]:
    n = max(len(p), len(q))
    out = [(p[i] if i < len(p) else mpq(0)) + (q[i] if i < len(q) else mpq(0)) for i in range(n)]
    while len(out) > 1 and out[-1] == 0:
        out.pop()
    return out


def peval(p: Sequence[Rational], x) -> Rational:
    x = rational(x)
    acc = mpq(0)
    for c in reversed(p):
        acc = acc * x + c
    return acc


def q_poly(d: int, m: int, n: int) -> List[Rational]:
    """Coefficients of ``prod_{i=1}^n (mu_i - x)/mu_i``."""
    if n < 0:
        raise ValueError("n must be non-negative")
    out = [mpq(1)]
    for i in range(1, n + 1):
        mi = mu(d, m, i)
        out = _pmul(out, [mpq(1), mpq(-1, mi)])
    return out


def sum_of_products_poly(d: int, m: int, n: int) -> List[Rational]:
    """``sum_{j<=n} (-1)^j prod_{i<=j} (x - mu_{i-1})/mu_i``."""
    total = [mpq(0)]
    prod = [mpq(1)]
    for j in range(n + 1):
        if j:
            prod = _pmul(prod, [mpq(-mu(d, m, j - 1), mu(d, m, j)), mpq(1, mu(d, m, j))])
        total = _padd(total, [c * (-1) ** j for c in prod])
    return total


def _upper_product(d: int, m: int, n: int, x) -> Rational:
    out = mpq(1)
    for i in range(1, n + 2):
        out *= (x - mu(d, m, i - 1)) / mpq(mu(d, m, i))
    return out


def _grid(lo: int, hi: int, per_gap: int, marks: Sequence[int]) -> List[Rational]:
    pts = set()
    marks = sorted(set(marks))
    for a, b in zip(marks, marks[1:]):
        if b <= lo or a >= hi:
            continue
        a, b = max(a, lo), min(b, hi)
        for t in range(per_gap + 1):
            pts.add(mpq(a) + (mpq(b) - a) * t / per_gap)
    return sorted(pts)


def check_interpolating_lemma(d: int, m: int, n: int, per_gap: int = 10) -> dict:
    q = q_poly(d, m, n)
    identity = _padd(q, [-c for c in sum_of_products_poly(d, m, n)]) == [mpq(0)]
    marks = [mu(d, m, i) for i in range(n, n + 6)]
    sign = (-1) ** n
    grid1 = _grid(mu(d, m, n), mu(d, m, n + 5), per_gap, marks)
    ineq1 = all(sign * peval(q, x) >= 0 for x in grid1)
    grid2 = _grid(mu(d, m, n + 1), mu(d, m, n + 5), per_gap, marks)
    ineq2 = all(sign * peval(q, x) <= _upper_product(d, m, n, x) for x in grid2)
    x_tight = mpq(mu(d, m, n + 1))
    tight = sign * peval(q, x_tight) == _upper_product(d, m, n, x_tight)
    zeros = peval(q, 0) == 1 and all(peval(q, mu(d, m, i)) == 0 for i in range(1, n + 1))
    telescoping = _padd(_padd(q_poly(d, m, n + 1), [-c for c in q]),
                        [-c * (-1) ** (n + 1) for c in _product_poly(d, m, n + 1)]) == [mpq(0)]
    return {"d": d, "m": m, "n": n, "sum_of_products": identity, "nonnegative": ineq1, "upper": ineq2,
            "interpolates": zeros, "telescoping": telescoping, "tight": tight,
            "grid_points": len(grid1) + len(grid2),
            "pass": identity and ineq1 and ineq2 and zeros and telescoping and tight}


def _product_poly(d: int, m: int, n: int) -> List[Rational]:
    prod = [mpq(1)]
    for i in range(1, n + 1):
        prod = _pmul(prod, [mpq(-mu(d, m, i - 1), mu(d, m, i)), mpq(1, mu(d, m, i))])
    return prod
