"""Free noncommutative polynomials with matrix coefficients.

Words are sequences of letters x_{jl} drawn from a g' x g grid (letters may
carry an involution star).  A polynomial is a finite map word -> complex
d' x d coefficient matrix, kept in canonical form (no stored zero
coefficients).  Evaluation substitutes n x n matrices for the letters and
tensors the coefficient on the LEFT of the Kronecker product:

    p(X) = sum_w  a_w (x) w(X),      w(X) = ordered product of the X_{jl}.

A truncated series is a list of homogeneous polynomials f^(0), ..., f^(D);
its value is the sum of the homogeneous parts in increasing degree.

All objects are immutable after construction and every operation is a pure
function, so concurrent evaluation is safe.
"""

from dataclasses import dataclass
import re

import numpy as np

COEFF_DROP_TOL = 1e-14


@dataclass(frozen=True, order=True)
class Letter:
    """One letter x_{row,col}; ``star`` marks the involuted symbol x_{row,col}*."""

    row: int
    col: int
    star: bool = False

    def starred(self) -> "Letter":
        return Letter(self.row, self.col, not self.star)

    def text(self, g: int) -> str:
        if g == 1:
            base = f"x{self.row}"
        elif self.row <= 9 and self.col <= 9:
            base = f"x{self.row}{self.col}"
        else:
            base = f"x{self.row}_{self.col}"
        return base + ("*" if self.star else "")


@dataclass(frozen=True)
class Word:
    """A word over the letter grid; the empty word acts as the identity."""

    letters: tuple = ()

    def __len__(self):
        return len(self.letters)

    def __iter__(self):
        return iter(self.letters)

    def __mul__(self, other: "Word") -> "Word":
        return Word(self.letters + other.letters)

    def reversed_starred(self) -> "Word":
        return Word(tuple(l.starred() for l in reversed(self.letters)))

    def sort_key(self):
        # graded lexicographic: length first, then letter indices row-major
        return (len(self.letters), tuple((l.row, l.col, l.star) for l in self.letters))

    def text(self, g: int) -> str:
        if not self.letters:
            return "1"
        return " ".join(l.text(g) for l in self.letters)


EMPTY_WORD = Word()


def _freeze(a):
    a = np.array(a, dtype=complex)
    a.flags.writeable = False
    return a


class GridError(ValueError):
    pass


class NCPolynomial:
    """Canonical NC polynomial: finite map Word -> d' x d coefficient matrix."""

    __slots__ = ("grid", "shape", "terms")

    def __init__(self, grid, shape, terms):
        gp, g = grid
        dp, d = shape
        if gp < 1 or g < 1:
            raise GridError(f"invalid grid {grid}")
        clean = {}
        for w, a in terms.items():
            a = np.asarray(a, dtype=complex)
            if a.shape != (dp, d):
                raise ValueError(f"coefficient shape {a.shape} != {(dp, d)}")
            for l in w:
                if not (1 <= l.row <= gp and 1 <= l.col <= g):
                    raise GridError(f"letter x{l.row},{l.col} outside grid {grid}")
            if np.linalg.norm(a) > COEFF_DROP_TOL:
                clean[w] = _freeze(a)
        self.grid = (gp, g)
        self.shape = (dp, d)
        self.terms = clean

    # -- constructors -------------------------------------------------

    @classmethod
    def zero(cls, grid, shape=(1, 1)):
        return cls(grid, shape, {})

    @classmethod
    def constant(cls, grid, matrix):
        matrix = np.atleast_2d(np.asarray(matrix, dtype=complex))
        return cls(grid, matrix.shape, {EMPTY_WORD: matrix})

    @classmethod
    def monomial(cls, grid, word, coeff=1.0):
        coeff = np.atleast_2d(np.asarray(coeff, dtype=complex))
        return cls(grid, coeff.shape, {word: coeff})

    @classmethod
    def letter(cls, grid, row, col=1, star=False):
        return cls.monomial(grid, Word((Letter(row, col, star),)))

    # -- basic queries ------------------------------------------------

    def degree(self) -> int:
        return max((len(w) for w in self.terms), default=0)

    def is_zero(self) -> bool:
        return not self.terms

    def coeff(self, word):
        dp, d = self.shape
        return np.array(self.terms.get(word, np.zeros((dp, d), dtype=complex)))

    def words(self):
        return sorted(self.terms, key=Word.sort_key)

    def has_stars(self) -> bool:
        return any(l.star for w in self.terms for l in w)

    def __eq__(self, other):
        if not isinstance(other, NCPolynomial):
            return NotImplemented
        if self.grid != other.grid or self.shape != other.shape:
            return False
        if set(self.terms) != set(other.terms):
            return False
        return all(np.array_equal(self.terms[w], other.terms[w]) for w in self.terms)

    def __repr__(self):
        return f"NCPolynomial(grid={self.grid}, shape={self.shape}, {len(self.terms)} terms)"

    # -- algebra ------------------------------------------------------

    def _check_grid(self, other):
        if self.grid != other.grid:
            raise GridError(f"grid mismatch {self.grid} vs {other.grid}")

    def __add__(self, other):
        self._check_grid(other)
        if self.shape != other.shape:
            raise ValueError(f"shape mismatch {self.shape} vs {other.shape}")
        terms = {w: self.coeff(w) for w in self.terms}
        for w, a in other.terms.items():
            terms[w] = terms.get(w, 0) + a
        return NCPolynomial(self.grid, self.shape, terms)

    def __neg__(self):
        return self.scale(-1.0)

    def __sub__(self, other):
        return self + (-other)

    def scale(self, c):
        return NCPolynomial(
            self.grid, self.shape, {w: c * a for w, a in self.terms.items()}
        )

    def __mul__(self, other):
        if not isinstance(other, NCPolynomial):
            return self.scale(other)
        self._check_grid(other)
        dp1, d1 = self.shape
        dp2, d2 = other.shape
        if self.shape != (1, 1) and other.shape != (1, 1) and d1 != dp2:
            raise ValueError(f"cannot multiply shapes {self.shape} x {other.shape}")
        terms = {}
        for u, a in self.terms.items():
            for v, b in other.terms.items():
                if a.shape == (1, 1) and b.shape != (1, 1):
                    c = a[0, 0] * b
                elif b.shape == (1, 1) and a.shape != (1, 1):
                    c = b[0, 0] * a
                else:
                    c = a @ b
                w = u * v
                terms[w] = terms.get(w, 0) + c
        if self.shape == (1, 1):
            shape = other.shape
        elif other.shape == (1, 1):
            shape = self.shape
        else:
            shape = (dp1, d2)
        return NCPolynomial(self.grid, shape, terms)

    def __rmul__(self, c):
        return self.scale(c)

    def involution(self) -> "NCPolynomial":
        """Anti-automorphism: reverse words, star letters, adjoint coefficients."""
        dp, d = self.shape
        return NCPolynomial(
            self.grid,
            (d, dp),
            {w.reversed_starred(): a.conj().T for w, a in self.terms.items()},
        )

    def homogeneous_part(self, alpha: int) -> "NCPolynomial":
        return NCPolynomial(
            self.grid,
            self.shape,
            {w: a for w, a in self.terms.items() if len(w) == alpha},
        )

    def left_mul(self, matrix) -> "NCPolynomial":
        matrix = np.atleast_2d(np.asarray(matrix, dtype=complex))
        if self.shape == (1, 1):
            return NCPolynomial(
                self.grid, matrix.shape, {w: a[0, 0] * matrix for w, a in self.terms.items()}
            )
        return NCPolynomial(
            self.grid,
            (matrix.shape[0], self.shape[1]),
            {w: matrix @ a for w, a in self.terms.items()},
        )

    def right_mul(self, matrix) -> "NCPolynomial":
        matrix = np.atleast_2d(np.asarray(matrix, dtype=complex))
        if self.shape == (1, 1):
            return NCPolynomial(
                self.grid, matrix.shape, {w: a[0, 0] * matrix for w, a in self.terms.items()}
            )
        return NCPolynomial(
            self.grid,
            (self.shape[0], matrix.shape[1]),
            {w: a @ matrix for w, a in self.terms.items()},
        )


StarPolynomial = NCPolynomial  # same canonical object; stars live on the letters


class MatrixTuple:
    """A point of the NC space at level n: a g' x g array of n x n matrices."""

    __slots__ = ("grid", "level", "entries")

    def __init__(self, grid, entries):
        gp, g = grid
        if len(entries) != gp or any(len(row) != g for row in entries):
            raise GridError(f"entries do not form a {gp} x {g} array")
        n = None
        rows = []
        for row in entries:
            out = []
            for m in row:
                m = np.atleast_2d(np.asarray(m, dtype=complex))
                if m.shape[0] != m.shape[1]:
                    raise ValueError("tuple entries must be square")
                if n is None:
                    n = m.shape[0]
                elif m.shape[0] != n:
                    raise ValueError("tuple entries must share one size")
                out.append(_freeze(m))
            rows.append(tuple(out))
        self.grid = (gp, g)
        self.level = n
        self.entries = tuple(rows)

    @classmethod
    def zero(cls, grid, level):
        gp, g = grid
        z = np.zeros((level, level))
        return cls(grid, [[z for _ in range(g)] for _ in range(gp)])

    @classmethod
    def from_flat(cls, m, grid, level):
        """Split a g'n x gn block matrix into its n x n blocks."""
        gp, g = grid
        m = np.asarray(m, dtype=complex)
        if m.shape != (gp * level, g * level):
            raise ValueError(f"flat matrix shape {m.shape} != {(gp * level, g * level)}")
        return cls(
            grid,
            [
                [m[j * level : (j + 1) * level, l * level : (l + 1) * level] for l in range(g)]
                for j in range(gp)
            ],
        )

    def entry(self, row, col=1):
        return self.entries[row - 1][col - 1]

    def flatten(self):
        """Block matrix [X_{jl}], rows j-major: shape g'n x gn."""
        return np.block([[np.array(m) for m in row] for row in self.entries])

    def norm(self) -> float:
        return float(np.linalg.norm(self.flatten(), 2))

    def scale(self, c) -> "MatrixTuple":
        return MatrixTuple(
            self.grid, [[c * np.array(m) for m in row] for row in self.entries]
        )

    def direct_sum(self, other: "MatrixTuple") -> "MatrixTuple":
        if self.grid != other.grid:
            raise GridError("grid mismatch in direct sum")
        gp, g = self.grid
        n1, n2 = self.level, other.level
        rows = []
        for j in range(gp):
            row = []
            for l in range(g):
                m = np.zeros((n1 + n2, n1 + n2), dtype=complex)
                m[:n1, :n1] = self.entries[j][l]
                m[n1:, n1:] = other.entries[j][l]
                row.append(m)
            rows.append(row)
        return MatrixTuple(self.grid, rows)


def canonical_shuffle(d: int, n1: int, n2: int):
    """Index permutation aligning A (x) diag(B, C) with diag(A (x) B, A (x) C).

    Returns idx with  M[idx] pulled from a d(n1+n2)-indexed axis so that
    kron(a, diag(b, c))[ix_(idx_r, idx_c)] == diag(kron(a, b), kron(a, c)).
    """
    n = n1 + n2
    first = [i * n + s for i in range(d) for s in range(n1)]
    second = [i * n + n1 + s for i in range(d) for s in range(n2)]
    return np.array(first + second)


def word_value(word: Word, x: MatrixTuple):
    """Ordered product w(X); the empty word gives the identity."""
    n = x.level
    out = np.eye(n, dtype=complex)
    for l in word:
        m = x.entries[l.row - 1][l.col - 1]
        out = out @ (m.conj().T if l.star else m)
    return out


def eval_poly(p: NCPolynomial, x: MatrixTuple):
    """p(X) = sum_w a_w (x) w(X), coefficient on the left of the Kronecker product."""
    if p.grid != x.grid:
        raise GridError(f"grid mismatch {p.grid} vs {x.grid}")
    dp, d = p.shape
    n = x.level
    out = np.zeros((dp * n, d * n), dtype=complex)
    cache = {EMPTY_WORD: np.eye(n, dtype=complex)}

    def value(w):
        if w in cache:
            return cache[w]
        head = Word(w.letters[:-1])
        l = w.letters[-1]
        m = x.entries[l.row - 1][l.col - 1]
        v = value(head) @ (m.conj().T if l.star else m)
        cache[w] = v
        return v

    for w, a in p.terms.items():
        out += np.kron(a, value(w))
    return out


class TruncatedSeries:
    """NC power series truncated at degree D, stored by homogeneous parts."""

    __slots__ = ("grid", "shape", "degree", "parts")

    def __init__(self, grid, shape, parts, degree=None):
        parts = list(parts)
        if degree is None:
            degree = len(parts) - 1
        if degree < 0:
            raise ValueError("degree must be >= 0")
        while len(parts) <= degree:
            parts.append(NCPolynomial.zero(grid, shape))
        if len(parts) > degree + 1:
            raise ValueError("more parts than degree allows")
        for alpha, p in enumerate(parts):
            if p.grid != grid or p.shape != shape:
                raise ValueError("part grid/shape mismatch")
            if any(len(w) != alpha for w in p.terms):
                raise ValueError(f"part {alpha} contains words of the wrong length")
        self.grid = grid
        self.shape = shape
        self.degree = degree
        self.parts = tuple(parts)

    # -- constructors -------------------------------------------------

    @classmethod
    def from_poly(cls, p: NCPolynomial, degree=None):
        if degree is None:
            degree = p.degree()
        parts = [p.homogeneous_part(a) for a in range(degree + 1)]
        return cls(p.grid, p.shape, parts, degree)

    @classmethod
    def zero(cls, grid, shape=(1, 1), degree=0):
        return cls(grid, shape, [], degree)

    @classmethod
    def constant(cls, grid, matrix, degree=0):
        p = NCPolynomial.constant(grid, matrix)
        return cls(grid, p.shape, [p], degree)

    @classmethod
    def identity(cls, grid, degree=1):
        """The coordinate series: f^(1)(x) = x as a g' x g matrix of letters."""
        gp, g = grid
        terms = {}
        for j in range(1, gp + 1):
            for l in range(1, g + 1):
                a = np.zeros((gp, g), dtype=complex)
                a[j - 1, l - 1] = 1.0
                terms[Word((Letter(j, l),))] = a
        lin = NCPolynomial(grid, (gp, g), terms)
        return cls.from_poly(lin, degree=max(1, degree))

    # -- queries ------------------------------------------------------

    def as_poly(self) -> NCPolynomial:
        out = NCPolynomial.zero(self.grid, self.shape)
        for p in self.parts:
            out = out + p
        return out

    def constant_term(self):
        return self.parts[0].coeff(EMPTY_WORD)

    def coeff(self, word):
        return self.parts[len(word)].coeff(word) if len(word) <= self.degree else np.zeros(self.shape, dtype=complex)

    def top_part_norm(self) -> float:
        """Sum of coefficient operator norms in the last nonzero part.

        Used as the heuristic tail indicator; no truncation bound is claimed.
        """
        for p in reversed(self.parts):
            if not p.is_zero():
                return float(sum(np.linalg.norm(a, 2) for a in p.terms.values()))
        return 0.0

    def __eq__(self, other):
        if not isinstance(other, TruncatedSeries):
            return NotImplemented
        if (self.grid, self.shape, self.degree) != (other.grid, other.shape, other.degree):
            return False
        return all(p == q for p, q in zip(self.parts, other.parts))

    def __repr__(self):
        return f"TruncatedSeries(grid={self.grid}, shape={self.shape}, degree={self.degree})"

    # -- algebra ------------------------------------------------------

    def __add__(self, other):
        if self.grid != other.grid or self.shape != other.shape:
            raise ValueError("grid/shape mismatch")
        deg = max(self.degree, other.degree)
        parts = []
        for a in range(deg + 1):
            p = self.parts[a] if a <= self.degree else NCPolynomial.zero(self.grid, self.shape)
            q = other.parts[a] if a <= other.degree else NCPolynomial.zero(self.grid, self.shape)
            parts.append(p + q)
        return TruncatedSeries(self.grid, self.shape, parts, deg)

    def __neg__(self):
        return self.scale(-1.0)

    def __sub__(self, other):
        return self + (-other)

    def scale(self, c):
        return TruncatedSeries(
            self.grid, self.shape, [p.scale(c) for p in self.parts], self.degree
        )

    def left_mul(self, matrix):
        m = np.atleast_2d(matrix)
        shape = m.shape if self.shape == (1, 1) else (m.shape[0], self.shape[1])
        return TruncatedSeries(
            self.grid, shape, [p.left_mul(matrix) for p in self.parts], self.degree
        )

    def right_mul(self, matrix):
        m = np.atleast_2d(matrix)
        shape = m.shape if self.shape == (1, 1) else (self.shape[0], m.shape[1])
        return TruncatedSeries(
            self.grid, shape, [p.right_mul(matrix) for p in self.parts], self.degree
        )

    def mul(self, other: "TruncatedSeries", degree=None) -> "TruncatedSeries":
        if self.grid != other.grid:
            raise GridError("grid mismatch")
        if degree is None:
            degree = min(self.degree, other.degree)
        if self.shape == (1, 1):
            shape = other.shape
        elif other.shape == (1, 1):
            shape = self.shape
        else:
            if self.shape[1] != other.shape[0]:
                raise ValueError(f"cannot multiply shapes {self.shape} x {other.shape}")
            shape = (self.shape[0], other.shape[1])
        parts = []
        for a in range(degree + 1):
            acc = NCPolynomial.zero(self.grid, shape)
            for i in range(a + 1):
                if i <= self.degree and a - i <= other.degree:
                    acc = acc + self.parts[i] * other.parts[a - i]
            parts.append(acc)
        return TruncatedSeries(self.grid, shape, parts, degree)

    def truncate(self, degree: int) -> "TruncatedSeries":
        return TruncatedSeries(
            self.grid, self.shape, list(self.parts[: degree + 1]), min(degree, self.degree)
        ) if degree < self.degree else TruncatedSeries(
            self.grid, self.shape, list(self.parts), degree
        )

    def scalar_entry(self, row, col) -> "TruncatedSeries":
        """The (row, col) scalar-entry series (1-indexed)."""
        parts = []
        for p in self.parts:
            parts.append(
                NCPolynomial(
                    self.grid,
                    (1, 1),
                    {w: np.array([[a[row - 1, col - 1]]]) for w, a in p.terms.items()},
                )
            )
        return TruncatedSeries(self.grid, (1, 1), parts, self.degree)


def series_eval(f: TruncatedSeries, x: MatrixTuple):
    """Sum of the homogeneous parts f^(0)(X) + ... + f^(D)(X), in that order."""
    if f.grid != x.grid:
        raise GridError(f"grid mismatch {f.grid} vs {x.grid}")
    dp, d = f.shape
    n = x.level
    out = np.zeros((dp * n, d * n), dtype=complex)
    for p in f.parts:
        out = out + eval_poly(p, x)
    return out


class NilpotencyError(ValueError):
    def __init__(self, word, norm):
        self.word = word
        self.norm = norm
        super().__init__(f"tuple is not nilpotent of the claimed order: |{word.sort_key()}| has norm {norm:.3e}")


def nilpotency_witness(x: MatrixTuple, order: int, tol: float = 1e-12):
    """A word w of length `order` with w(X) != 0, or None if all vanish.

    All length->=order products vanish once the length-order ones do, since
    any longer word factors through one of them.
    """
    gp, g = x.grid
    letters = [Letter(j, l) for j in range(1, gp + 1) for l in range(1, g + 1)]
    frontier = {EMPTY_WORD: np.eye(x.level, dtype=complex)}
    for _ in range(order):
        nxt = {}
        for w, v in frontier.items():
            for l in letters:
                nv = v @ x.entries[l.row - 1][l.col - 1]
                if np.linalg.norm(nv) > tol:
                    nxt[w * Word((l,))] = nv
        frontier = nxt
        if not frontier:
            return None
    if frontier:
        w, v = next(iter(frontier.items()))
        return w, float(np.linalg.norm(v, 2))
    return None


def eval_nilpotent(f: TruncatedSeries, x: MatrixTuple, order: int, tol: float = 1e-12):
    """Exact value of f at a tuple nilpotent of the given order.

    Verifies the nilpotency claim first; homogeneous parts of degree >= order
    contribute nothing, so the truncation introduces no error.
    """
    wit = nilpotency_witness(x, order, tol)
    if wit is not None:
        raise NilpotencyError(*wit)
    dp, d = f.shape
    n = x.level
    out = np.zeros((dp * n, d * n), dtype=complex)
    for alpha, p in enumerate(f.parts):
        if alpha >= order:
            break
        out = out + eval_poly(p, x)
    return out


def compose_series(h: TruncatedSeries, f: TruncatedSeries, degree=None) -> TruncatedSeries:
    """Substitute the scalar-entry blocks of f for the variables of h.

    h must live on the grid matching f's output shape.  The result is exact
    up to the stated degree when f has zero constant term or h is stored to
    its full (polynomial) degree.
    """
    if h.grid != f.shape:
        raise ValueError(f"h grid {h.grid} does not match f shape {f.shape}")
    if degree is None:
        degree = min(h.degree, f.degree)
    gp, g = f.grid
    blocks = {}

    def block(j, l):
        if (j, l) not in blocks:
            blocks[(j, l)] = f.scalar_entry(j, l).truncate(degree)
        return blocks[(j, l)]

    out = TruncatedSeries.zero(f.grid, h.shape, degree)
    one = TruncatedSeries.constant(f.grid, np.eye(1), degree)
    for p in h.parts:
        for v, b in p.terms.items():
            prod = one
            for letter in v:
                if letter.star:
                    raise ValueError("cannot substitute into starred variables")
                prod = prod.mul(block(letter.row, letter.col), degree)
            out = out + prod.left_mul(b)
    return out


def coefficient_bound(f: TruncatedSeries, d=None) -> dict:
    """Sum of squared coefficient operator norms against the bound d.

    A necessary condition for f to be a contraction-valued NC analytic map;
    reported as a diagnostic, not a certificate.
    """
    if d is None:
        d = f.shape[1]
    total = 0.0
    for p in f.parts:
        for a in p.terms.values():
            total += float(np.linalg.norm(a, 2)) ** 2
    return {"sum": total, "bound": float(d), "pass": bool(total <= d + 1e-12)}


# ---------------------------------------------------------------------------
# text grammar
#
#   poly  := term (("+"|"-") term)*
#   term  := [coeff] [monomial]
#   coeff := complex-literal | NAME
#   monomial := letter+
#   letter := "x" INT ["_" INT] ["*"]
#   complex-literal := "(" FLOAT ("+"|"-") FLOAT "i" ")" | FLOAT
#
# A "*" immediately followed by another letter is a product separator
# (as in "x11*x21"); in any other position it is the involution star
# (as in "x23* x34*").  NAME coefficients resolve in a sidecar table.
# ---------------------------------------------------------------------------


class ParseError(ValueError):
    def __init__(self, message, text, pos):
        line = text.count("\n", 0, pos) + 1
        col = pos - (text.rfind("\n", 0, pos) + 1) + 1
        super().__init__(f"{message} (line {line}, column {col})")
        self.line = line
        self.column = col


_FLOAT = r"(?:\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?"
_TOKEN = re.compile(
    r"(?P<ws>\s+)"
    rf"|(?P<complex>\(\s*[+-]?{_FLOAT}\s*[+-]\s*{_FLOAT}\s*i\s*\))"
    rf"|(?P<float>{_FLOAT})"
    r"|(?P<letter>x\d+(?:_\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z0-9_]*)"
    r"|(?P<op>[+\-*])"
)
_COMPLEX = re.compile(
    rf"\(\s*(?P<re>[+-]?{_FLOAT})\s*(?P<sign>[+-])\s*(?P<im>{_FLOAT})\s*i\s*\)"
)
_LETTER_START = re.compile(r"x\d")


def _lex(text):
    pos = 0
    tokens = []
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", text, pos)
        kind = m.lastgroup
        val = m.group()
        end = m.end()
        if kind == "ws":
            pos = end
            continue
        if kind == "op" and val == "*":
            # star suffix vs product separator, decided by what follows
            if _LETTER_START.match(text, end):
                tokens.append(("mul", val, pos))
            else:
                tokens.append(("star", val, pos))
        else:
            tokens.append((kind, val, pos))
        pos = end
    tokens.append(("end", "", len(text)))
    return tokens


def _letter_from_token(val, grid, text, pos):
    gp, g = grid
    body = val[1:]
    if "_" in body:
        r, c = body.split("_")
        row, col = int(r), int(c)
    else:
        n = int(body)
        if g == 1 and 1 <= n <= gp:
            row, col = n, 1
        elif len(body) == 2:
            row, col = int(body[0]), int(body[1])
        else:
            raise ParseError(f"cannot read letter index {val!r} in grid {grid}", text, pos)
    if not (1 <= row <= gp and 1 <= col <= g):
        raise ParseError(f"letter {val!r} outside grid {grid}", text, pos)
    return row, col


def parse_poly(text: str, grid, coeff_table=None, shape=None) -> NCPolynomial:
    """Parse the grammar above into a canonical NCPolynomial.

    Named coefficients resolve in `coeff_table`; all coefficients in one
    polynomial must share one shape (scalar literals broadcast to it).
    """
    coeff_table = coeff_table or {}
    tokens = _lex(text)
    idx = 0

    def peek():
        return tokens[idx]

    def advance():
        nonlocal idx
        tok = tokens[idx]
        idx += 1
        return tok

    terms = []  # (scalar_or_matrix, word)

    def parse_term(sign):
        kind, val, pos = peek()
        coeff = None
        if kind == "complex":
            m = _COMPLEX.match(val)
            re_part = float(m.group("re"))
            im_part = float(m.group("im"))
            if m.group("sign") == "-":
                im_part = -im_part
            coeff = complex(re_part, im_part)
            advance()
        elif kind == "float":
            coeff = complex(float(val))
            advance()
        elif kind == "name":
            if val not in coeff_table:
                raise ParseError(f"unknown coefficient name {val!r}", text, pos)
            coeff = np.atleast_2d(np.asarray(coeff_table[val], dtype=complex))
            advance()
        letters = []
        while True:
            kind, val, pos = peek()
            if kind == "mul":
                advance()
                continue
            if kind != "letter":
                break
            row, col = _letter_from_token(val, grid, text, pos)
            advance()
            star = False
            if peek()[0] == "star":
                advance()
                star = True
            letters.append(Letter(row, col, star))
        if coeff is None and not letters:
            raise ParseError("empty term", text, peek()[2])
        if coeff is None:
            coeff = complex(1.0)
        terms.append((sign * np.atleast_2d(np.asarray(coeff)), Word(tuple(letters))))

    sign = 1.0
    kind, val, pos = peek()
    if kind == "op" and val in "+-":
        sign = -1.0 if val == "-" else 1.0
        advance()
    parse_term(sign)
    while True:
        kind, val, pos = peek()
        if kind == "end":
            break
        if kind == "op" and val in "+-":
            advance()
            parse_term(-1.0 if val == "-" else 1.0)
        else:
            raise ParseError(f"expected '+' or '-', found {val!r}", text, pos)

    if shape is None:
        shape = (1, 1)
        for c, _ in terms:
            if c.shape != (1, 1):
                shape = c.shape
                break
    acc = {}
    for c, w in terms:
        if c.shape == (1, 1) and shape != (1, 1):
            if shape[0] != shape[1]:
                raise ParseError("scalar coefficient in a non-square matrix polynomial", text, 0)
            c = c[0, 0] * np.eye(shape[0])
        if c.shape != shape:
            raise ParseError(f"coefficient shape {c.shape} != {shape}", text, 0)
        acc[w] = acc.get(w, 0) + c
    return NCPolynomial(grid, shape, acc)


def _format_scalar(c: complex):
    """(sign, text) with the printed literal kept unsigned, per the grammar."""
    c = complex(c.real + 0.0, c.imag + 0.0)  # normalize -0.0
    if c.imag == 0.0:
        sign = "-" if c.real < 0 else "+"
        return sign, repr(abs(c.real))
    sign = "-" if c.real < 0 or (c.real == 0 and c.imag < 0) else "+"
    if sign == "-":
        c = complex(-c.real + 0.0, -c.imag + 0.0)
    im_sign = "-" if c.imag < 0 else "+"
    return sign, f"({c.real!r}{im_sign}{abs(c.imag)!r}i)"


def format_poly(p: NCPolynomial, name_prefix: str = "C"):
    """Canonical text for p; returns (text, coefficient table).

    Scalar-shaped polynomials print literal coefficients and an empty table;
    matrix-shaped ones print generated names resolving in the table.
    parse(format(p)) reproduces p exactly on canonical forms.
    """
    _, g = p.grid
    if not p.terms:
        return "0", {}
    scalar = p.shape == (1, 1)
    pieces = []
    table = {}
    for k, w in enumerate(p.words()):
        a = p.terms[w]
        if scalar:
            sign, coeff_txt = _format_scalar(complex(a[0, 0]))
            if coeff_txt == "1.0" and len(w) > 0:
                coeff_txt = ""
        else:
            name = f"{name_prefix}{k}"
            table[name] = np.array(a)
            sign, coeff_txt = "+", name
        body = " ".join(x for x in (coeff_txt, w.text(g) if len(w) else "") if x)
        if not body:
            body = "1.0"
        pieces.append((sign, body))
    first_sign, first_body = pieces[0]
    text = ("- " if first_sign == "-" else "") + first_body
    for sign, body in pieces[1:]:
        text += f" {sign} {body}"
    return text, table
