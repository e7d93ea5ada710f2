"""Exact integer linear algebra on Python big integers.

Smith forms, unimodularity, right inverses, integer kernels, lattice
membership over Z and F_q, and brute-force successive minima.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Optional, Sequence


class IntMatrix:
    """Immutable integer matrix. A 0-row matrix keeps its column count."""

    __slots__ = ("_rows", "_nrows", "_ncols")

    def __init__(self, rows: Iterable[Iterable[int]], ncols: Optional[int] = None):
        raw = [list(r) for r in rows]
        if any(isinstance(x, bool) for r in raw for x in r):
            raise TypeError("boolean entries are not integers")
        data = tuple(tuple(int(x) for x in r) for r in raw)
        if data:
            widths = {len(r) for r in data}
            if len(widths) != 1:
                raise ValueError("ragged rows")
            width = widths.pop()
            if ncols is not None and ncols != width:
                raise ValueError("column count mismatch")
        else:
            if ncols is None:
                raise ValueError("empty matrix needs an explicit column count")
            width = ncols
        self._rows = data
        self._nrows = len(data)
        self._ncols = width

    @classmethod
    def identity(cls, n: int) -> "IntMatrix":
        return cls([[int(i == j) for j in range(n)] for i in range(n)], ncols=n)

    @classmethod
    def zeros(cls, m: int, n: int) -> "IntMatrix":
        return cls([[0] * n for _ in range(m)], ncols=n)

    @classmethod
    def empty(cls, n: int) -> "IntMatrix":
        return cls([], ncols=n)

    @classmethod
    def coerce(cls, x) -> "IntMatrix":
        if isinstance(x, IntMatrix):
            return x
        rows = [list(r) for r in x]
        for r in rows:
            for v in r:
                if int(v) != v:
                    raise ValueError(f"non-integer entry {v!r}")
        return cls(rows)

    @property
    def shape(self) -> tuple[int, int]:
        return self._nrows, self._ncols

    @property
    def nrows(self) -> int:
        return self._nrows

    @property
    def ncols(self) -> int:
        return self._ncols

    def rows(self) -> tuple[tuple[int, ...], ...]:
        return self._rows

    def tolist(self) -> list[list[int]]:
        return [list(r) for r in self._rows]

    def __getitem__(self, ij):
        i, j = ij
        return self._rows[i][j]

    def row(self, i: int) -> tuple[int, ...]:
        return self._rows[i]

    def select_rows(self, idx: Sequence[int]) -> "IntMatrix":
        return IntMatrix([self._rows[i] for i in idx], ncols=self._ncols)

    def select_cols(self, idx: Sequence[int]) -> "IntMatrix":
        return IntMatrix([[r[j] for j in idx] for r in self._rows], ncols=len(idx))

    def transpose(self) -> "IntMatrix":
        return IntMatrix([[r[j] for r in self._rows] for j in range(self._ncols)], ncols=self._nrows)

    T = property(transpose)

    def __matmul__(self, other: "IntMatrix") -> "IntMatrix":
        other = IntMatrix.coerce(other)
        if self._ncols != other._nrows:
            raise ValueError(f"shape mismatch {self.shape} @ {other.shape}")
        cols = other.transpose()._rows
        return IntMatrix(
            [[sum(a * b for a, b in zip(r, c)) for c in cols] for r in self._rows],
            ncols=other._ncols,
        )

    def __mul__(self, k: int) -> "IntMatrix":
        return IntMatrix([[k * x for x in r] for r in self._rows], ncols=self._ncols)

    __rmul__ = __mul__

    def __neg__(self) -> "IntMatrix":
        return self * -1

    def __eq__(self, other) -> bool:
        if not isinstance(other, IntMatrix):
            return NotImplemented
        return self.shape == other.shape and self._rows == other._rows

    def __hash__(self) -> int:
        return hash((self._nrows, self._ncols, self._rows))

    def __repr__(self) -> str:
        return f"IntMatrix({self.tolist()!r})" if self._nrows else f"IntMatrix.empty({self._ncols})"

    def max_abs(self) -> int:
        return max((abs(x) for r in self._rows for x in r), default=0)

    def max_row_sum(self) -> int:
        """Induced infinity norm: largest absolute row sum."""
        return max((sum(abs(x) for x in r) for r in self._rows), default=0)

    def mod(self, q: int) -> "IntMatrix":
        return IntMatrix([[mod_centered(x, q) for x in r] for r in self._rows], ncols=self._ncols)


def mod_centered(x: int, q: int) -> int:
    """Centered residue of x modulo q, in [-(q-1)/2, (q-1)/2] for odd q."""
    r = x % q
    if 2 * r >= q:
        r -= q
    return r


@dataclass(frozen=True)
class SmithForm:
    S: IntMatrix
    Sigma: tuple[int, ...]
    T: IntMatrix
    rank: int

    def reconstruct(self) -> IntMatrix:
        scaled = IntMatrix([[s * x for x in row] for s, row in zip(self.Sigma, self.T.rows())], ncols=self.T.ncols)
        return self.S @ scaled


def _smith_full(Q: IntMatrix):
    """Return (U, D, V, Uinv, Vinv, rank) with U*Q*V = D diagonal."""
    m, n = Q.shape
    D = [list(r) for r in Q.rows()]
    U = [[int(i == j) for j in range(m)] for i in range(m)]
    Ui = [[int(i == j) for j in range(m)] for i in range(m)]
    V = [[int(i == j) for j in range(n)] for i in range(n)]
    Vi = [[int(i == j) for j in range(n)] for i in range(n)]

    # Row ops act on D and U from the left and on Ui from the right (inverse).
    def row_swap(i, j):
        D[i], D[j] = D[j], D[i]
        U[i], U[j] = U[j], U[i]
        for r in Ui:
            r[i], r[j] = r[j], r[i]

    def row_add(i, j, k):  # row_i += k * row_j
        if k == 0:
            return
        D[i] = [a + k * b for a, b in zip(D[i], D[j])]
        U[i] = [a + k * b for a, b in zip(U[i], U[j])]
        for r in Ui:
            r[j] -= k * r[i]

    def row_neg(i):
        D[i] = [-a for a in D[i]]
        U[i] = [-a for a in U[i]]
        for r in Ui:
            r[i] = -r[i]

    def col_swap(i, j):
        for r in D:
            r[i], r[j] = r[j], r[i]
        for r in V:
            r[i], r[j] = r[j], r[i]
        Vi[i], Vi[j] = Vi[j], Vi[i]

    def col_add(j, i, k):  # col_j += k * col_i
        if k == 0:
            return
        for r in D:
            r[j] += k * r[i]
        for r in V:
            r[j] += k * r[i]
        Vi[i] = [a - k * b for a, b in zip(Vi[i], Vi[j])]

    t = 0
    while t < min(m, n):
        # Smallest nonzero pivot in the trailing block.
        best = None
        for i in range(t, m):
            for j in range(t, n):
                if D[i][j] and (best is None or abs(D[i][j]) < abs(D[best[0]][best[1]])):
                    best = (i, j)
        if best is None:
            break
        if best[0] != t:
            row_swap(t, best[0])
        if best[1] != t:
            col_swap(t, best[1])
        while True:
            done = True
            for i in range(t + 1, m):
                if D[i][t]:
                    row_add(i, t, -(D[i][t] // D[t][t]))
                    if D[i][t]:
                        done = False
            for j in range(t + 1, n):
                if D[t][j]:
                    col_add(j, t, -(D[t][j] // D[t][t]))
                    if D[t][j]:
                        done = False
            if not done:
                # Move the smallest leftover in row/column t to the pivot.
                cand = [(abs(D[i][t]), i, t) for i in range(t + 1, m) if D[i][t]]
                cand += [(abs(D[t][j]), t, j) for j in range(t + 1, n) if D[t][j]]
                _, i, j = min(cand)
                if i != t:
                    row_swap(t, i)
                else:
                    col_swap(t, j)
                continue
            bad = None
            for i in range(t + 1, m):
                for j in range(t + 1, n):
                    if D[i][j] % D[t][t]:
                        bad = i
                        break
                if bad is not None:
                    break
            if bad is None:
                break
            row_add(t, bad, 1)
        if D[t][t] < 0:
            row_neg(t)
        t += 1
    return U, D, V, Ui, Vi, t


def smith_normal_form(Q) -> SmithForm:
    """Reduced Smith form Q = S diag(Sigma) T with S m x r, T r x n."""
    Q = IntMatrix.coerce(Q)
    m, n = Q.shape
    _, D, _, Ui, Vi, r = _smith_full(Q)
    S = IntMatrix([row[:r] for row in Ui], ncols=r)
    T = IntMatrix(Vi[:r], ncols=n)
    return SmithForm(S=S, Sigma=tuple(D[i][i] for i in range(r)), T=T, rank=r)


def determinant(Q) -> int:
    """Exact determinant by fraction-free (Bareiss) elimination."""
    Q = IntMatrix.coerce(Q)
    n, m = Q.shape
    if n != m:
        raise ValueError("determinant of a non-square matrix")
    if n == 0:
        return 1
    a = [list(r) for r in Q.rows()]
    sign, prev = 1, 1
    for k in range(n - 1):
        if a[k][k] == 0:
            swap = next((i for i in range(k + 1, n) if a[i][k]), None)
            if swap is None:
                return 0
            a[k], a[swap] = a[swap], a[k]
            sign = -sign
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) // prev
        prev = a[k][k]
    return sign * a[n - 1][n - 1]


def adjugate(Q) -> IntMatrix:
    """Integer adjugate, so that Q adj(Q) = det(Q) I."""
    Q = IntMatrix.coerce(Q)
    n = Q.nrows
    if n != Q.ncols:
        raise ValueError("adjugate of a non-square matrix")
    if n == 1:
        return IntMatrix([[1]])
    idx = range(n)
    return IntMatrix(
        [
            [
                (-1) ** (i + j) * determinant(Q.select_rows([r for r in idx if r != j]).select_cols([c for c in idx if c != i]))
                for j in idx
            ]
            for i in idx
        ]
    )


def lattice_coordinates(B, R) -> IntMatrix:
    """Integer Z with Z R = B, for B whose rows lie in the row lattice of full-row-rank R."""
    B, R = IntMatrix.coerce(B), IntMatrix.coerce(R)
    cols = next(c for c in itertools.combinations(range(R.ncols), R.nrows) if determinant(R.select_cols(c)))
    Rs = R.select_cols(cols)
    det = determinant(Rs)
    num = B.select_cols(cols) @ adjugate(Rs)
    if any(x % det for row in num.rows() for x in row):
        raise ValueError("rows are not in the lattice")
    Z = IntMatrix([[x // det for x in row] for row in num.rows()], ncols=R.nrows)
    if Z @ R != B:
        raise ValueError("rows are not in the lattice")
    return Z


def rank(Q, modulus: Optional[int] = None) -> int:
    Q = IntMatrix.coerce(Q)
    if modulus is None:
        return smith_normal_form(Q).rank
    return len(rref_mod(Q, modulus))


def minors_gcd(Q, k: int) -> int:
    """gcd of all k x k minors (d_k); d_0 = 1."""
    Q = IntMatrix.coerce(Q)
    if k == 0:
        return 1
    g = 0
    for ri in itertools.combinations(range(Q.nrows), k):
        sub = Q.select_rows(ri)
        for ci in itertools.combinations(range(Q.ncols), k):
            g = math.gcd(g, determinant(sub.select_cols(ci)))
    return g


def is_unimodular(Q) -> bool:
    Q = IntMatrix.coerce(Q)
    if Q.nrows != Q.ncols:
        raise ValueError("unimodularity needs a square matrix")
    return abs(determinant(Q)) == 1


def right_inverse(Q) -> Optional[IntMatrix]:
    """Integer R with Q R = I, or None when Q is not right-invertible."""
    Q = IntMatrix.coerce(Q)
    m, n = Q.shape
    if m > n:
        raise ValueError("right inverse needs at least as many columns as rows")
    U, D, V, _, _, r = _smith_full(Q)
    if r < m or any(D[i][i] != 1 for i in range(r)):
        return None
    # Q V[:, :m] U = I when the divisors are all one.
    Vm = IntMatrix([row[:m] for row in V], ncols=m)
    return Vm @ IntMatrix(U, ncols=m)


def hermite_rows(Q) -> IntMatrix:
    """Row-style Hermite normal form with zero rows dropped.

    Pivots are positive and entries above each pivot lie in [0, pivot).
    """
    Q = IntMatrix.coerce(Q)
    a = [list(r) for r in Q.rows()]
    m, n = Q.shape
    piv_row = 0
    pivots = []
    for col in range(n):
        if piv_row >= m:
            break
        while True:
            nz = [i for i in range(piv_row, m) if a[i][col]]
            if not nz:
                break
            i0 = min(nz, key=lambda i: abs(a[i][col]))
            a[piv_row], a[i0] = a[i0], a[piv_row]
            p = a[piv_row][col]
            clean = True
            for i in range(piv_row + 1, m):
                if a[i][col]:
                    k = a[i][col] // p
                    a[i] = [x - k * y for x, y in zip(a[i], a[piv_row])]
                    if a[i][col]:
                        clean = False
            if clean:
                break
        if any(a[i][col] for i in range(piv_row, m)):
            if a[piv_row][col] < 0:
                a[piv_row] = [-x for x in a[piv_row]]
            p = a[piv_row][col]
            for i in range(piv_row):
                k = a[i][col] // p
                if k:
                    a[i] = [x - k * y for x, y in zip(a[i], a[piv_row])]
            pivots.append(col)
            piv_row += 1
    return IntMatrix(a[:piv_row], ncols=n)


def saturated_basis(Q) -> IntMatrix:
    """Canonical basis of the integer points of Q's rational row space."""
    Q = IntMatrix.coerce(Q)
    return hermite_rows(smith_normal_form(Q).T)


def orthogonal_lattice_basis(Q) -> IntMatrix:
    """Basis (as columns, Hermite-reduced) of the integer kernel of Q."""
    Q = IntMatrix.coerce(Q)
    n = Q.ncols
    # Q V = U^{-1} D, so the last n - r columns of V span the kernel.
    _, _, V, _, _, r = _smith_full(Q)
    kernel_rows = [[V[i][j] for i in range(n)] for j in range(r, n)]
    if not kernel_rows:
        return IntMatrix.zeros(n, 0) if n else IntMatrix.empty(0)
    return hermite_rows(IntMatrix(kernel_rows, ncols=n)).transpose()


def _reduce_by_hermite(H: IntMatrix, v: Sequence[int]) -> list[int]:
    v = list(v)
    for row in H.rows():
        col = next(j for j, x in enumerate(row) if x)
        if v[col] % row[col]:
            return v
        k = v[col] // row[col]
        v = [a - k * b for a, b in zip(v, row)]
    return v


def rref_mod(Q, q: int) -> list[list[int]]:
    """Reduced row echelon form over F_q (entries in [0, q)), zero rows dropped."""
    Q = IntMatrix.coerce(Q)
    a = [[x % q for x in r] for r in Q.rows()]
    m, n = Q.shape
    r = 0
    for col in range(n):
        p = next((i for i in range(r, m) if a[i][col]), None)
        if p is None:
            continue
        a[r], a[p] = a[p], a[r]
        inv = pow(a[r][col], -1, q)
        a[r] = [x * inv % q for x in a[r]]
        for i in range(m):
            if i != r and a[i][col]:
                k = a[i][col]
                a[i] = [(x - k * y) % q for x, y in zip(a[i], a[r])]
        r += 1
        if r == m:
            break
    return a[:r]


def row_lattice_contains(B, A, modulus: Optional[int] = None) -> bool:
    """True iff every row of A is an integer (or F_q) combination of rows of B."""
    B = IntMatrix.coerce(B)
    A = IntMatrix.coerce(A)
    if A.ncols != B.ncols:
        raise ValueError("column counts differ")
    if modulus is not None:
        base = len(rref_mod(B, modulus))
        return len(rref_mod(IntMatrix(B.tolist() + A.tolist(), ncols=B.ncols), modulus)) == base
    H = hermite_rows(B)
    return all(not any(_reduce_by_hermite(H, row)) for row in A.rows())


class InconclusiveSearch(Exception):
    """The enumeration box cannot certify the requested quantity."""


def _pinv_row_bounds(Q: IntMatrix) -> list[Fraction]:
    """Row l1 norms of the exact left pseudo-inverse (Q^T Q)^{-1} Q^T."""
    G = Q.transpose() @ Q
    d = G.nrows
    a = [[Fraction(x) for x in r] + [Fraction(int(i == j)) for j in range(d)] for i, r in enumerate(G.rows())]
    for c in range(d):
        p = next(i for i in range(c, d) if a[i][c])
        a[c], a[p] = a[p], a[c]
        a[c] = [x / a[c][c] for x in a[c]]
        for i in range(d):
            if i != c and a[i][c]:
                k = a[i][c]
                a[i] = [x - k * y for x, y in zip(a[i], a[c])]
    Ginv = [r[d:] for r in a]
    Qt = Q.transpose().rows()
    pinv = [[sum(g * Qt[k][j] for k, g in enumerate(Ginv[i])) for j in range(Q.nrows)] for i in range(d)]
    return [sum(abs(x) for x in r) for r in pinv]


def lll_reduce(Q, delta: Fraction = Fraction(3, 4)) -> IntMatrix:
    """LLL-reduced basis (exact rational arithmetic) of the lattice spanned by Q's columns."""
    Q = IntMatrix.coerce(Q)
    if rank(Q) != Q.ncols:
        raise ValueError("basis must have full column rank")
    b = [list(c) for c in Q.transpose().rows()]
    n = len(b)

    def dot(x, y):
        return sum(p * q for p, q in zip(x, y))

    def gso():
        bs, mu = [], [[Fraction(0)] * n for _ in range(n)]
        for i in range(n):
            v = [Fraction(x) for x in b[i]]
            for j in range(i):
                mu[i][j] = dot(b[i], bs[j]) / dot(bs[j], bs[j])
                v = [x - mu[i][j] * y for x, y in zip(v, bs[j])]
            bs.append(v)
        return bs, mu

    bs, mu = gso()
    k = 1
    while k < n:
        for j in range(k - 1, -1, -1):
            c = round(mu[k][j])
            if c:
                b[k] = [x - c * y for x, y in zip(b[k], b[j])]
                bs, mu = gso()
        if dot(bs[k], bs[k]) >= (delta - mu[k][k - 1] ** 2) * dot(bs[k - 1], bs[k - 1]):
            k += 1
        else:
            b[k], b[k - 1] = b[k - 1], b[k]
            bs, mu = gso()
            k = max(k - 1, 1)
    return IntMatrix(b, ncols=Q.nrows).transpose()


def successive_minima(Q, norm: str = "infinity", radius: int = 3) -> list:
    """Successive minima of the lattice spanned by Q's columns.

    The search runs over a coefficient box around an LLL-reduced basis.
    Exact Fractions for the infinity norm; floats (square roots of exact
    squared norms) for the Euclidean norm.  Raises InconclusiveSearch when
    the coefficient box of the given radius cannot certify the answer.
    """
    Q = IntMatrix.coerce(Q)
    n, d = Q.shape
    if rank(Q) != d:
        raise ValueError("basis must have full column rank")
    if norm not in ("infinity", "euclidean"):
        raise ValueError(f"unknown norm {norm!r}")
    Q = lll_reduce(Q)
    cols = Q.transpose().rows()
    found = []
    for coef in itertools.product(range(-radius, radius + 1), repeat=d):
        if not any(coef):
            continue
        x = [sum(c * col[i] for c, col in zip(coef, cols)) for i in range(n)]
        key = max(abs(v) for v in x) if norm == "infinity" else sum(v * v for v in x)
        found.append((key, x))
    found.sort(key=lambda t: t[0])
    chosen: list[list[int]] = []
    minima = []
    for key, x in found:
        if rank(IntMatrix(chosen + [x], ncols=n)) > len(chosen):
            chosen.append(x)
            minima.append(key)
            if len(chosen) == d:
                break
    if len(chosen) < d:
        raise InconclusiveSearch("box holds fewer than d independent vectors")
    # Any lattice vector x = Q v with norm <= lambda_d has |v_i| <= ||row_i(Q^+)||_1 ||x||_inf.
    top = minima[-1]
    inf_bound = Fraction(top) if norm == "infinity" else Fraction(math.isqrt(top) + 1)
    if any(b * inf_bound > radius for b in _pinv_row_bounds(Q)):
        raise InconclusiveSearch("coefficient radius too small to certify the minima")
    if norm == "infinity":
        return [Fraction(v) for v in minima]
    return [math.sqrt(v) for v in minima]


def lattice_determinant(Q) -> float:
    """Covolume sqrt(det(Q^T Q)) of the lattice spanned by Q's columns."""
    Q = IntMatrix.coerce(Q)
    return math.sqrt(determinant(Q.transpose() @ Q))
