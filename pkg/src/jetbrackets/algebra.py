"""Exact arithmetic in the free superalgebra of differential polynomials.

The ring has even generators u^a_k (jet variables, a = 1..q, k >= 0) and odd
generators theta_{a,k}.  Coefficients are exact rationals.  In *hat* mode
(q = 1 only) Laurent powers of u_1 are permitted, nothing else may be
inverted.

Monomials are stored in a normal form: the even part is a sorted tuple of
((a, k), exponent) pairs with nonzero exponents, the odd part a strictly
increasing tuple of (a, k).  All signs coming from sorting odd factors are
absorbed into the coefficients, so equality of polynomials is equality of
dictionaries.  Odd partial derivatives are left derivations.
"""

from __future__ import annotations

from fractions import Fraction
from math import comb


class AlgebraError(Exception):
    """Base class for errors raised by the algebra layer."""


class IncompatibleAlgebras(AlgebraError):
    """Operands live in different rings (q or hat flag mismatch)."""


class UndefinedGrading(AlgebraError):
    """Grading of the zero polynomial was requested."""


class SkewnessError(AlgebraError):
    """An operator required to be skew-adjoint is not."""


Coord = tuple[int, int]  # (alpha, k)

_ZERO = Fraction(0)
_ONE = Fraction(1)


def _coerce(c) -> Fraction:
    if isinstance(c, Fraction):
        return c
    if isinstance(c, int):
        return Fraction(c)
    raise TypeError(f"expected an exact rational, got {type(c).__name__}")


def _merge_odd(o1: tuple, o2: tuple):
    """Interleave two sorted odd tuples; return (sign, merged) or None if a
    generator repeats (theta^2 = 0)."""
    if not o1:
        return 1, o2
    if not o2:
        return 1, o1
    merged = []
    sign = 1
    i = j = 0
    n1, n2 = len(o1), len(o2)
    while i < n1 and j < n2:
        a, b = o1[i], o2[j]
        if a == b:
            return None
        if a < b:
            merged.append(a)
            i += 1
        else:
            # b jumps over the n1 - i remaining factors of o1
            if (n1 - i) & 1:
                sign = -sign
            merged.append(b)
            j += 1
    merged.extend(o1[i:])
    merged.extend(o2[j:])
    return sign, tuple(merged)


class SuperPolynomial:
    """Sparse differential superpolynomial with exact rational coefficients."""

    __slots__ = ("terms", "q", "hat")

    def __init__(self, terms=None, q: int = 1, hat: bool = False):
        self.terms = dict(terms) if terms else {}
        self.q = q
        self.hat = hat

    # -- constructors ------------------------------------------------------

    @classmethod
    def zero(cls, q=1, hat=False):
        return cls({}, q, hat)

    @classmethod
    def const(cls, c, q=1, hat=False):
        c = _coerce(c)
        if c == 0:
            return cls({}, q, hat)
        return cls({((), ()): c}, q, hat)

    @classmethod
    def u(cls, k=0, alpha=1, power=1, q=1, hat=False):
        if k < 0 or not (1 <= alpha <= q):
            raise AlgebraError(f"invalid jet coordinate u^{alpha}_{k}")
        if power == 0:
            return cls.const(1, q, hat)
        if power < 0 and not (hat and q == 1 and alpha == 1 and k == 1):
            raise AlgebraError("negative powers are only allowed for u_1 in hat mode")
        return cls({((((alpha, k), power),), ()): _ONE}, q, hat)

    @classmethod
    def theta(cls, k=0, alpha=1, q=1, hat=False):
        if k < 0 or not (1 <= alpha <= q):
            raise AlgebraError(f"invalid odd coordinate theta_{alpha},{k}")
        return cls({((), ((alpha, k),)): _ONE}, q, hat)

    # -- ring structure ----------------------------------------------------

    def _check_compatible(self, other: "SuperPolynomial"):
        if self.q != other.q or self.hat != other.hat:
            raise IncompatibleAlgebras(
                f"operands live in different algebras: q={self.q},hat={self.hat} "
                f"vs q={other.q},hat={other.hat}"
            )

    def is_zero(self) -> bool:
        return not self.terms

    def __bool__(self):
        return bool(self.terms)

    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            other = SuperPolynomial.const(other, self.q, self.hat)
        if not isinstance(other, SuperPolynomial):
            return NotImplemented
        return self.q == other.q and self.hat == other.hat and self.terms == other.terms

    def __hash__(self):
        return hash((self.q, self.hat, frozenset(self.terms.items())))

    def __add__(self, other):
        if isinstance(other, (int, Fraction)):
            other = SuperPolynomial.const(other, self.q, self.hat)
        self._check_compatible(other)
        terms = dict(self.terms)
        for m, c in other.terms.items():
            s = terms.get(m, _ZERO) + c
            if s:
                terms[m] = s
            elif m in terms:
                del terms[m]
        return SuperPolynomial(terms, self.q, self.hat)

    __radd__ = __add__

    def __neg__(self):
        return SuperPolynomial({m: -c for m, c in self.terms.items()}, self.q, self.hat)

    def __sub__(self, other):
        if isinstance(other, (int, Fraction)):
            other = SuperPolynomial.const(other, self.q, self.hat)
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            c = _coerce(other)
            if c == 0:
                return SuperPolynomial.zero(self.q, self.hat)
            return SuperPolynomial({m: cc * c for m, cc in self.terms.items()}, self.q, self.hat)
        self._check_compatible(other)
        out: dict = {}
        for (e1, o1), c1 in self.terms.items():
            for (e2, o2), c2 in other.terms.items():
                merged = _merge_odd(o1, o2)
                if merged is None:
                    continue
                sign, odd = merged
                if e1 and e2:
                    exps = dict(e1)
                    for k, v in e2:
                        nv = exps.get(k, 0) + v
                        if nv:
                            exps[k] = nv
                        elif k in exps:
                            del exps[k]
                    even = tuple(sorted(exps.items()))
                else:
                    even = e1 or e2
                key = (even, odd)
                c = c1 * c2 * sign
                s = out.get(key, _ZERO) + c
                if s:
                    out[key] = s
                elif key in out:
                    del out[key]
        return SuperPolynomial(out, self.q, self.hat)

    def __rmul__(self, other):
        if isinstance(other, (int, Fraction)):
            return self * other
        return NotImplemented

    def __truediv__(self, other):
        c = _coerce(other)
        if c == 0:
            raise ZeroDivisionError("division of a polynomial by zero")
        return self * (1 / c)

    def __pow__(self, n: int):
        if not isinstance(n, int) or n < 0:
            raise AlgebraError("only nonnegative integer powers of polynomials")
        out = SuperPolynomial.const(1, self.q, self.hat)
        for _ in range(n):
            out = out * self
        return out

    # -- derivations -------------------------------------------------------

    def partial_u(self, k: int, alpha: int = 1) -> "SuperPolynomial":
        """Partial derivative with respect to the jet variable u^alpha_k."""
        coord = (alpha, k)
        out: dict = {}
        for (even, odd), c in self.terms.items():
            for i, (co, e) in enumerate(even):
                if co == coord:
                    ne = e - 1
                    if ne:
                        new_even = even[:i] + ((co, ne),) + even[i + 1:]
                    else:
                        new_even = even[:i] + even[i + 1:]
                    key = (new_even, odd)
                    s = out.get(key, _ZERO) + c * e
                    if s:
                        out[key] = s
                    elif key in out:
                        del out[key]
                    break
        return SuperPolynomial(out, self.q, self.hat)

    def partial_theta(self, k: int, alpha: int = 1) -> "SuperPolynomial":
        """Left graded derivative with respect to theta_{alpha,k}."""
        coord = (alpha, k)
        out: dict = {}
        for (even, odd), c in self.terms.items():
            for i, co in enumerate(odd):
                if co == coord:
                    sign = -1 if i & 1 else 1
                    key = (even, odd[:i] + odd[i + 1:])
                    s = out.get(key, _ZERO) + c * sign
                    if s:
                        out[key] = s
                    elif key in out:
                        del out[key]
                    break
        return SuperPolynomial(out, self.q, self.hat)

    def total_derivative(self) -> "SuperPolynomial":
        """The total derivative: u^a_k -> u^a_{k+1}, theta_{a,k} -> theta_{a,k+1}."""
        out: dict = {}
        cache = _DERIV_CACHE
        get = out.get
        for mono, c in self.terms.items():
            ents = cache.get(mono)
            if ents is None:
                ents = _derive_monomial(mono)
                cache[mono] = ents
            for key, mult in ents:
                s = get(key)
                s = c * mult if s is None else s + c * mult
                if s:
                    out[key] = s
                elif key in out:
                    del out[key]
        return SuperPolynomial(out, self.q, self.hat)

    def dx(self, n: int = 1) -> "SuperPolynomial":
        p = self
        for _ in range(n):
            p = p.total_derivative()
        return p

    # -- gradings ----------------------------------------------------------

    @staticmethod
    def _mono_degree(mono) -> int:
        even, odd = mono
        return sum(k * e for (_, k), e in even) + sum(k for (_, k) in odd)

    @staticmethod
    def _mono_order(mono) -> int:
        even, odd = mono
        n = 0
        for (_, k), _e in even:
            if k > n:
                n = k
        for (_, k) in odd:
            if k > n:
                n = k
        return n

    def theta_degree(self):
        """Uniform theta-degree, or None if mixed.  Zero polynomial -> None."""
        degs = {len(odd) for (_, odd) in self.terms}
        if len(degs) == 1:
            return degs.pop()
        return None

    def degree(self):
        """Uniform homogeneity degree (deg u^a_k = deg theta_{a,k} = k,
        deg u_1^{-1} = -1), or None if inhomogeneous."""
        degs = {self._mono_degree(m) for m in self.terms}
        if len(degs) == 1:
            return degs.pop()
        return None

    def order(self) -> int:
        """Largest jet index appearing (even or odd); 0 for constants."""
        return max((self._mono_order(m) for m in self.terms), default=0)

    def grading_info(self):
        """Return (degree, theta_degree, order) with "inhomogeneous" markers."""
        if not self.terms:
            raise UndefinedGrading("the zero polynomial has no grading")
        d = self.degree()
        t = self.theta_degree()
        return (
            d if d is not None else "inhomogeneous",
            t if t is not None else "inhomogeneous",
            self.order(),
        )

    def homogeneous_components(self) -> dict:
        """Split into homogeneity-degree components: degree -> polynomial."""
        comps: dict = {}
        for m, c in self.terms.items():
            comps.setdefault(self._mono_degree(m), {})[m] = c
        return {d: SuperPolynomial(t, self.q, self.hat) for d, t in sorted(comps.items())}

    def theta_components(self) -> dict:
        comps: dict = {}
        for m, c in self.terms.items():
            comps.setdefault(len(m[1]), {})[m] = c
        return {k: SuperPolynomial(t, self.q, self.hat) for k, t in sorted(comps.items())}

    # -- coefficient extraction --------------------------------------------

    def coefficient_layers(self, k: int, alpha: int = 1) -> dict:
        """Collect by the exponent of u^alpha_k: exponent -> polynomial free
        of that variable."""
        coord = (alpha, k)
        layers: dict = {}
        for (even, odd), c in self.terms.items():
            e = 0
            rest = even
            for i, (co, ee) in enumerate(even):
                if co == coord:
                    e = ee
                    rest = even[:i] + even[i + 1:]
                    break
            layers.setdefault(e, {})[(rest, odd)] = c
        return {e: SuperPolynomial(t, self.q, self.hat) for e, t in sorted(layers.items())}

    def max_u_power(self, alpha: int = 1) -> int:
        """Largest exponent of the undifferentiated u^alpha."""
        coord = (alpha, 0)
        best = 0
        for (even, _odd) in self.terms:
            for co, e in even:
                if co == coord and e > best:
                    best = e
        return best

    def to_hat(self) -> "SuperPolynomial":
        if self.hat:
            return self
        if self.q != 1:
            raise AlgebraError("hat mode is restricted to q = 1")
        return SuperPolynomial(self.terms, 1, True)

    # -- printing ----------------------------------------------------------

    def sorted_terms(self):
        return sorted(self.terms.items(), key=lambda kv: (len(kv[0][1]), kv[0][1], kv[0][0]))

    def __str__(self):
        if not self.terms:
            return "0"
        parts = []
        for (even, odd), c in self.sorted_terms():
            factors = []
            for (a, k), e in even:
                name = _u_name(a, k, self.q)
                factors.append(name if e == 1 else f"{name}^{e}")
            for (a, k) in odd:
                factors.append(_theta_name(a, k, self.q))
            if not factors:
                parts.append(str(c))
            elif c == 1:
                parts.append("*".join(factors))
            elif c == -1:
                parts.append("-" + "*".join(factors))
            else:
                parts.append(str(c) + "*" + "*".join(factors))
        out = parts[0]
        for p in parts[1:]:
            out += " - " + p[1:] if p.startswith("-") else " + " + p
        return out

    def __repr__(self):
        flags = f", q={self.q}" if self.q != 1 else ""
        flags += ", hat=True" if self.hat else ""
        return f"SuperPolynomial({self}{flags})"


# table of monomial derivatives: mono -> ((mono', integer multiplier), ...);
# the coefficients are integers (exponents), so total_derivative reduces to
# integer-scaled accumulation.  The cache is add-only with deterministic
# values, so concurrent readers are safe (a racing recompute is identical).
_DERIV_CACHE: dict = {}


def _derive_monomial(mono):
    even, odd = mono
    ents = []
    # even part, Leibniz term by term
    for i, ((a, k), e) in enumerate(even):
        ne = e - 1
        if ne:
            base = even[:i] + (((a, k), ne),) + even[i + 1:]
        else:
            base = even[:i] + even[i + 1:]
        exps = dict(base)
        up = (a, k + 1)
        nv = exps.get(up, 0) + 1
        if nv:
            exps[up] = nv
        else:
            del exps[up]
        ents.append(((tuple(sorted(exps.items())), odd), e))
    # odd part: even derivation, no Koszul signs; the lex order has nothing
    # strictly between (a, k) and (a, k+1), so replacing in place keeps the
    # tuple sorted, and the only possible collision is the immediate successor
    for i, (a, k) in enumerate(odd):
        lifted = (a, k + 1)
        if i + 1 < len(odd) and odd[i + 1] == lifted:
            continue
        ents.append(((even, odd[:i] + (lifted,) + odd[i + 1:]), 1))
    return tuple(ents)


def _u_name(a, k, q):
    base = "u" if q == 1 else f"u{a}"
    return base if k == 0 else f"{base}_{k}"


def _theta_name(a, k, q):
    base = "theta" if q == 1 else f"theta{a}"
    return base if k == 0 else f"{base}_{k}"


def superproduct(a: SuperPolynomial, b: SuperPolynomial) -> SuperPolynomial:
    """Graded-commutative product (same as a * b)."""
    return a * b


def total_derivative(a: SuperPolynomial) -> SuperPolynomial:
    return a.total_derivative()


def partial_derivative(a: SuperPolynomial, kind: str, k: int, alpha: int = 1) -> SuperPolynomial:
    """Partial derivative; kind is "u" or "theta"."""
    if kind == "u":
        return a.partial_u(k, alpha)
    if kind == "theta":
        return a.partial_theta(k, alpha)
    raise AlgebraError(f"unknown coordinate kind {kind!r}")


def grading_info(a: SuperPolynomial):
    return a.grading_info()


class DiffOperator:
    """A one-component differential operator sum_j P_j d^j with theta-free
    polynomial coefficients."""

    __slots__ = ("coeffs", "q", "hat")

    def __init__(self, coeffs: dict, q: int = 1, hat: bool = False):
        clean = {}
        for j, p in coeffs.items():
            if isinstance(p, (int, Fraction)):
                p = SuperPolynomial.const(p, q, hat)
            if p.theta_degree() not in (0, None):
                raise AlgebraError("operator coefficients must be free of odd coordinates")
            if p:
                clean[j] = p
        self.coeffs = clean
        self.q = q
        self.hat = hat

    @classmethod
    def zero(cls, q=1, hat=False):
        return cls({}, q, hat)

    @classmethod
    def d(cls, j=1, q=1, hat=False):
        return cls({j: SuperPolynomial.const(1, q, hat)}, q, hat)

    def order(self) -> int:
        return max(self.coeffs, default=0)

    def is_zero(self) -> bool:
        return not self.coeffs

    def __eq__(self, other):
        if not isinstance(other, DiffOperator):
            return NotImplemented
        return self.q == other.q and self.hat == other.hat and self.coeffs == other.coeffs

    def __add__(self, other):
        if isinstance(other, (int, Fraction)):
            other = DiffOperator({0: other}, self.q, self.hat)
        coeffs = dict(self.coeffs)
        for j, p in other.coeffs.items():
            s = coeffs.get(j, SuperPolynomial.zero(self.q, self.hat)) + p
            if s:
                coeffs[j] = s
            elif j in coeffs:
                del coeffs[j]
        return DiffOperator(coeffs, self.q, self.hat)

    def __neg__(self):
        return DiffOperator({j: -p for j, p in self.coeffs.items()}, self.q, self.hat)

    def __sub__(self, other):
        return self + (-other)

    def scale(self, c) -> "DiffOperator":
        return DiffOperator({j: p * c for j, p in self.coeffs.items()}, self.q, self.hat)

    def apply(self, f: SuperPolynomial) -> SuperPolynomial:
        out = SuperPolynomial.zero(self.q, self.hat)
        for j, p in self.coeffs.items():
            out = out + p * f.dx(j)
        return out

    def compose(self, other: "DiffOperator") -> "DiffOperator":
        """Operator composition self . other."""
        out: dict = {}
        for i, a in self.coeffs.items():
            for j, b in other.coeffs.items():
                for t in range(i + 1):
                    c = a * b.dx(t) * comb(i, t)
                    key = i + j - t
                    cur = out.get(key)
                    out[key] = c if cur is None else cur + c
        return DiffOperator(out, self.q, self.hat)

    def adjoint(self) -> "DiffOperator":
        """Formal adjoint: (P d^j)* = (-d)^j . P."""
        out: dict = {}
        for j, p in self.coeffs.items():
            sign = -1 if j & 1 else 1
            for t in range(j + 1):
                c = p.dx(t) * (comb(j, t) * sign)
                key = j - t
                cur = out.get(key)
                out[key] = c if cur is None else cur + c
        return DiffOperator(out, self.q, self.hat)

    def is_skew_adjoint(self) -> bool:
        return (self.adjoint() + self).is_zero()

    def __str__(self):
        if not self.coeffs:
            return "0"
        parts = []
        for j in sorted(self.coeffs, reverse=True):
            p = self.coeffs[j]
            head = str(p)
            if " + " in head or " - " in head[1:]:
                head = f"({head})"
            if j == 0:
                parts.append(head)
            else:
                dpart = "del" if j == 1 else f"del^{j}"
                parts.append(dpart if head == "1" else f"-{dpart}" if head == "-1" else f"{head}*{dpart}")
        out = parts[0]
        for p in parts[1:]:
            out += " - " + p[1:] if p.startswith("-") else " + " + p
        return out

    def __repr__(self):
        return f"DiffOperator({self})"


def adjoint(d: DiffOperator) -> DiffOperator:
    return d.adjoint()
