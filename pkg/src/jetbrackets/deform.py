"""Deformation calculus for Hamiltonian and bihamiltonian structures.

Epsilon-expansions of bivectors with their Maurer-Cartan residuals and
obstruction cocycles, the double complex of a compatible pair, Miura and
quasi-Miura pushforwards, and a constructive primitive solver: acyclicity of
d_H on the positive-degree graded pieces is realized by enumerating a finite
monomial slice, materializing d_H as an exact rational matrix and solving.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, replace
from fractions import Fraction

from .algebra import AlgebraError, SuperPolynomial
from .schouten import Pencil, schouten_bracket
from .variational import EvolutionaryVF, MultiVector, canonical_class


class NoSolution(AlgebraError):
    """The linear problem has no solution in the given slice."""


class MCViolation(AlgebraError):
    """The epsilon-series fails the Maurer-Cartan equation at some order."""


class EpsilonDeformation:
    """base + sum_k eps^k H_k, truncated; all entries theta-degree-2 classes."""

    def __init__(self, base: MultiVector, corrections=(), truncation=None):
        if base.theta_degree != 2:
            raise AlgebraError("deformations are built from bivectors")
        self.base = base
        self.corrections = list(corrections)
        for H in self.corrections:
            if not H.is_zero() and H.theta_degree != 2:
                raise AlgebraError("corrections must be bivectors")
        self.truncation = len(self.corrections) if truncation is None else truncation
        while len(self.corrections) < self.truncation:
            self.corrections.append(self._zero())

    def _zero(self) -> MultiVector:
        return MultiVector(SuperPolynomial.zero(self.base.q, self.base.hat), 2)

    def term(self, k: int) -> MultiVector:
        """Coefficient of eps^k (the base at k = 0, zero beyond truncation)."""
        if k == 0:
            return self.base
        if 1 <= k <= len(self.corrections):
            return self.corrections[k - 1]
        return self._zero()

    def to_hat(self) -> "EpsilonDeformation":
        return EpsilonDeformation(self.base.to_hat(),
                                  [H.to_hat() for H in self.corrections],
                                  self.truncation)

    def __eq__(self, other):
        if not isinstance(other, EpsilonDeformation):
            return NotImplemented
        n = max(self.truncation, other.truncation)
        return all(self.term(k) == other.term(k) for k in range(n + 1))

    def __repr__(self):
        return (f"EpsilonDeformation(base={self.base!r}, "
                f"corrections={self.corrections!r}, N={self.truncation})")


def mc_residual(D: EpsilonDeformation, up_to: int | None = None):
    """Coefficients of eps^k, 1 <= k <= up_to, in (1/2)[[H, H]].

    The coefficient is [[H_0, H_k]] + (1/2) sum_{i=1}^{k-1} [[H_i, H_{k-i}]];
    corrections beyond the truncation are zero.
    """
    n = D.truncation if up_to is None else up_to
    out = []
    for k in range(1, n + 1):
        acc = schouten_bracket(D.term(0), D.term(k))
        inner = MultiVector(SuperPolynomial.zero(D.base.q, D.base.hat), 3)
        for i in range(1, k):
            inner = inner + schouten_bracket(D.term(i), D.term(k - i))
        out.append(acc + inner.scale(Fraction(1, 2)))
    return out


def is_order_n_deformation(D: EpsilonDeformation, n: int) -> bool:
    return all(r.is_zero() for r in mc_residual(D, n))


def obstruction(D: EpsilonDeformation, n: int) -> MultiVector:
    """The obstruction cocycle sum_{i=1}^{n} [[H_i, H_{n-i+1}]] blocking the
    extension of an order-n deformation; always closed for the base."""
    if not is_order_n_deformation(D, n):
        raise MCViolation(f"not a deformation of order {n}")
    acc = MultiVector(SuperPolynomial.zero(D.base.q, D.base.hat), 3)
    for i in range(1, n + 1):
        acc = acc + schouten_bracket(D.term(i), D.term(n - i + 1))
    closure = schouten_bracket(D.term(0), acc)
    if not closure.is_zero():
        raise AssertionError("obstruction cocycle is not closed: internal error")
    return acc


# ---------------------------------------------------------------------------
# The double complex of a compatible pair
# ---------------------------------------------------------------------------

class Cochain:
    """A tuple (c_0, ..., c_k) of multivectors of equal theta-degree."""

    def __init__(self, entries):
        self.entries = tuple(entries)
        degs = {c.theta_degree for c in self.entries if not c.is_zero()}
        if len(degs) > 1:
            raise AlgebraError("cochain entries must share their theta-degree")

    @property
    def bidegree(self) -> int:
        return len(self.entries) - 1

    def is_zero(self) -> bool:
        return all(c.is_zero() for c in self.entries)

    def __eq__(self, other):
        if not isinstance(other, Cochain):
            return NotImplemented
        return len(self.entries) == len(other.entries) and all(
            a == b for a, b in zip(self.entries, other.entries))

    def __getitem__(self, i):
        return self.entries[i]

    def __len__(self):
        return len(self.entries)

    def __repr__(self):
        return f"Cochain({', '.join(repr(c) for c in self.entries)})"


def bicomplex_d(c: Cochain, pencil: Pencil) -> Cochain:
    """(c_0,...,c_k) -> (d_P c_0, d_Q c_0 + d_P c_1, ..., d_Q c_k)."""
    if not pencil.certified:
        raise AlgebraError("the ambient pencil must be certified")
    out = [pencil.d_P(c[0])]
    for i in range(1, len(c)):
        out.append(pencil.d_Q(c[i - 1]) + pencil.d_P(c[i]))
    out.append(pencil.d_Q(c[len(c) - 1]))
    return Cochain(out)


def is_cocycle(c: Cochain, pencil: Pencil) -> bool:
    return bicomplex_d(c, pencil).is_zero()


def biham_obstruction(P1: EpsilonDeformation, Q1: EpsilonDeformation,
                      pencil: Pencil) -> Cochain:
    """First obstruction ((1/2)[[P1,P1]], [[P1,Q1]], (1/2)[[Q1,Q1]]) of a
    first-order compatible deformation pair; asserts its d-closure."""
    p1, q1 = P1.term(1), Q1.term(1)
    lin = bicomplex_d(Cochain([p1, q1]), pencil)
    if not lin.is_zero():
        raise MCViolation("pair is not compatible to first order")
    triple = Cochain([
        schouten_bracket(p1, p1).scale(Fraction(1, 2)),
        schouten_bracket(p1, q1),
        schouten_bracket(q1, q1).scale(Fraction(1, 2)),
    ])
    if not bicomplex_d(triple, pencil).is_zero():
        raise AssertionError("bihamiltonian obstruction is not closed: internal error")
    return triple


# ---------------------------------------------------------------------------
# Miura pushforward
# ---------------------------------------------------------------------------

def miura_push(D: EpsilonDeformation, X, weight: int = 1,
               truncation: int | None = None) -> EpsilonDeformation:
    """exp(-eps^p ad_X) applied to the series, truncated at eps^N.

    X is a vector field (class of theta-degree 1 or an EvolutionaryVF); hat
    characteristics give quasi-Miura transformations.
    """
    if isinstance(X, EvolutionaryVF):
        X = X.as_class()
    if X.theta_degree != 1:
        raise AlgebraError("Miura generators are vector fields")
    N = D.truncation if truncation is None else truncation
    if X.hat and not D.base.hat:
        D = D.to_hat()
    if D.base.hat and not X.hat:
        X = X.to_hat()
    p = weight
    out = [MultiVector(SuperPolynomial.zero(D.base.q, D.base.hat), 2)
           for _ in range(N + 1)]
    for k in range(0, N + 1):
        H = D.term(k)
        if H.is_zero():
            continue
        m = 0
        cur = H
        fact = Fraction(1)
        while k + m * p <= N:
            out[k + m * p] = out[k + m * p] + cur.scale(fact * (-1) ** m)
            m += 1
            if k + m * p > N:
                break
            cur = schouten_bracket(X, cur)
            fact = fact / m
    return EpsilonDeformation(out[0], out[1:], N)


# ---------------------------------------------------------------------------
# Graded slices and the primitive solver
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GradedSlice:
    """A finite-dimensional space of densities: fixed theta-degree and
    homogeneity, capped order, capped power of the undifferentiated u, capped
    Laurent depth in u_1 (hat mode)."""

    theta_degree: int | None = None
    degree: int | None = None
    max_order: int = 4
    max_udeg: int = 4
    laurent_depth: int = 0

    def grown(self) -> "GradedSlice":
        return replace(self, max_order=self.max_order + 2,
                       max_udeg=self.max_udeg * 2 + 2,
                       laurent_depth=self.laurent_depth * 2 + 2
                       if self.laurent_depth else 0)


def enumerate_basis(slice_: GradedSlice, theta_degree: int, degree: int,
                    q: int = 1, hat: bool = False):
    """All normal-form monomials of the given theta-degree and homogeneity
    degree within the slice caps.  q = 1 only (the graded solver's domain)."""
    if q != 1:
        raise AlgebraError("graded slices are implemented for q = 1")
    n = slice_.max_order
    depth = slice_.laurent_depth if hat else 0
    out = []
    for odd in itertools.combinations(range(0, n + 1), theta_degree):
        rem = degree - sum(odd)
        # even exponents: e_k for k >= 2 with sum k e_k <= rem + depth,
        # e_1 := rem - sum, e_0 free up to the cap
        for evens in _even_parts(rem + depth, 2, n):
            e1 = rem - sum(k * e for k, e in evens)
            if e1 < -depth or (not hat and e1 < 0):
                continue
            for e0 in range(slice_.max_udeg + 1):
                even = []
                if e0:
                    even.append(((1, 0), e0))
                if e1:
                    even.append(((1, 1), e1))
                even.extend((((1, k), e) for k, e in evens))
                key = (tuple(sorted(even)), tuple((1, j) for j in odd))
                out.append(SuperPolynomial({key: Fraction(1)}, 1, hat))
    return out


def _even_parts(budget: int, kmin: int, kmax: int):
    """Exponent patterns [(k, e_k)] with k in [kmin, kmax], e_k >= 1 and
    sum k e_k <= budget."""
    if budget < kmin or kmin > kmax:
        yield []
        return
    for rest in _even_parts(budget, kmin + 1, kmax):
        used = sum(k * e for k, e in rest)
        yield rest
        e = 1
        while kmin * e + used <= budget:
            yield [(kmin, e)] + rest
            e += 1


def solve_exact(rows, rhs):
    """Gaussian elimination over the rationals; rows are dense lists.
    Returns a solution with free variables set to zero, or None."""
    m = [list(r) + [rhs[i]] for i, r in enumerate(rows)]
    nrows = len(m)
    ncols = len(rows[0]) if nrows else 0
    piv_cols = []
    r = 0
    for col in range(ncols):
        piv = None
        for i in range(r, nrows):
            if m[i][col] != 0:
                piv = i
                break
        if piv is None:
            continue
        m[r], m[piv] = m[piv], m[r]
        pv = m[r][col]
        m[r] = [x / pv for x in m[r]]
        for i in range(nrows):
            if i != r and m[i][col] != 0:
                f = m[i][col]
                m[i] = [a - f * b for a, b in zip(m[i], m[r])]
        piv_cols.append(col)
        r += 1
        if r == nrows:
            break
    for i in range(r, nrows):
        if m[i][ncols] != 0:
            return None
    sol = [Fraction(0)] * ncols
    for i, col in enumerate(piv_cols):
        sol[col] = m[i][ncols]
    return sol


def nullspace_exact(rows):
    """Basis of the kernel of the matrix (dense rational rows)."""
    nrows = len(rows)
    ncols = len(rows[0]) if nrows else 0
    m = [list(r) for r in rows]
    piv_cols = []
    r = 0
    for col in range(ncols):
        piv = None
        for i in range(r, nrows):
            if m[i][col] != 0:
                piv = i
                break
        if piv is None:
            continue
        m[r], m[piv] = m[piv], m[r]
        pv = m[r][col]
        m[r] = [x / pv for x in m[r]]
        for i in range(nrows):
            if i != r and m[i][col] != 0:
                f = m[i][col]
                m[i] = [a - f * b for a, b in zip(m[i], m[r])]
        piv_cols.append(col)
        r += 1
        if r == nrows:
            break
    basis = []
    free = [c for c in range(ncols) if c not in piv_cols]
    for fc in free:
        v = [Fraction(0)] * ncols
        v[fc] = Fraction(1)
        for i, col in enumerate(piv_cols):
            v[col] = -m[i][fc]
        basis.append(v)
    return basis


def _linear_system(targets, c_rep):
    """Rows/columns for sum_b x_b targets[b] = c_rep, indexed by monomials."""
    monos = set(c_rep.terms)
    for t in targets:
        monos.update(t.terms)
    monos = sorted(monos)
    rows = [[t.terms.get(mn, Fraction(0)) for t in targets] for mn in monos]
    rhs = [c_rep.terms.get(mn, Fraction(0)) for mn in monos]
    return rows, rhs


def primitive_solve(c: MultiVector, H: MultiVector, slice_: GradedSlice,
                    max_grows: int = 2) -> MultiVector:
    """Solve d_H y = c for y in the slice; exact, deterministic, growing the
    slice a bounded number of times before reporting NoSolution."""
    if not schouten_bracket(H, c).is_zero():
        raise AlgebraError("primitive_solve needs a d_H-closed input")
    if c.is_zero():
        return MultiVector(SuperPolynomial.zero(c.q, c.hat), max(c.theta_degree - 1, 0))
    t = c.theta_degree - 1
    deg = c.homogeneity()
    if deg is None:
        raise AlgebraError("primitive_solve needs homogeneous input")
    Huse = H.to_hat() if c.hat and not H.hat else H
    s = slice_
    for _ in range(max_grows + 1):
        basis = enumerate_basis(s, t, deg - 1, c.q, c.hat)
        if basis:
            images = [schouten_bracket(Huse, canonical_class(b)).rep for b in basis]
            rows, rhs = _linear_system(images, c.rep)
            sol = solve_exact(rows, rhs)
            if sol is not None:
                density = SuperPolynomial.zero(c.q, c.hat)
                for x, b in zip(sol, basis):
                    if x:
                        density = density + b * x
                y = canonical_class(density)
                if schouten_bracket(Huse, y) != c:
                    raise AssertionError("primitive_solve verification failed")
                return y
        s = s.grown()
    raise NoSolution(
        f"no primitive in slices up to {s}: enlarge the slice or the class is not exact")


def reduce_to_tail(c: Cochain, pencil: Pencil, slice_: GradedSlice):
    """Cohomologous cochain (0, ..., 0, tail) plus the chain used.

    Subtracts d(a_i, 0, ..., 0) repeatedly, where d_P a_i kills the leading
    entry; requires acyclicity of d_P in the slice degrees.
    """
    entries = list(c.entries)
    chain = []
    for i in range(len(entries) - 1):
        lead = entries[i]
        if lead.is_zero():
            chain.append(MultiVector(
                SuperPolynomial.zero(lead.q, lead.hat),
                max(lead.theta_degree - 1, 0)))
            continue
        a = primitive_solve(lead, pencil.P, slice_)
        chain.append(a)
        entries[i] = lead - pencil.d_P(a)
        if not entries[i].is_zero():
            raise AssertionError("reduce_to_tail failed to clear an entry")
        entries[i + 1] = entries[i + 1] - pencil.d_Q(a)
    return Cochain(entries), chain


def homogenize(D: EpsilonDeformation, p: int, slice_: GradedSlice,
               pencil_base: MultiVector | None = None) -> EpsilonDeformation:
    """Equivalent deformation with the eps^k term homogeneous of degree kp+1.

    The first correction must already be homogeneous of degree p+1; stray
    components of later corrections are removed by Miura transformations
    generated by primitives of d_base.
    """
    base = D.base if pencil_base is None else pencil_base
    H1 = D.term(1)
    if not H1.is_zero() and H1.homogeneity() != p + 1:
        raise AlgebraError("first correction is not homogeneous of degree p+1")
    N = D.truncation
    cur = D
    for k in range(2, N + 1):
        target = k * p + 1
        comps = cur.term(k).rep.homogeneous_components()
        stray_degs = [d for d in comps if d != target]
        for d in stray_degs:
            if d - 1 <= 0:
                raise NoSolution("stray component outside the acyclic range")
            stray = canonical_class(comps[d])
            I_k = primitive_solve(stray.scale(-1), base, slice_)
            cur = miura_push(cur, I_k, k, N)
        comps = cur.term(k).rep.homogeneous_components()
        if any(d != target for d in comps):
            raise AssertionError("homogenization failed to clean a correction")
    return cur
