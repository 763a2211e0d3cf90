"""Benchmark objectives and matrix-completion data plumbing.

Factorized problems act on one flat vector: ``U`` (m x r) row-major,
followed by ``V`` (n x r) row-major.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import sparse

from .core import DimensionMismatch, Problem, RestartOptError


class ParseError(RestartOptError, ValueError):
    pass


class DuplicateEntry(RestartOptError, ValueError):
    pass


class InvalidSign(RestartOptError, ValueError):
    pass


class ConvergenceWarning(UserWarning):
    pass


# --- analytic testbeds ---


def cosine_problem(d: int) -> Problem:
    """``f(x) = sum_i cos(x_i)``; L = rho = 1 and ``f >= -d``."""
    if d < 1:
        raise ValueError("d must be >= 1")
    return Problem(
        dim=d,
        value=lambda x: float(np.sum(np.cos(x))),
        gradient=lambda x: -np.sin(x),
        lipschitz_gradient=1.0,
        lipschitz_hessian=1.0,
        lower_bound=-float(d),
        name=f"cosine-{d}",
    )


def diag_quadratic_problem(lambdas) -> Problem:
    """``f(x) = 0.5 * sum_i lambda_i x_i^2``."""
    lam = np.asarray(lambdas, dtype=np.float64)
    lower = 0.0 if np.all(lam >= 0) else None
    return Problem(
        dim=lam.size,
        value=lambda x: 0.5 * float(np.sum(lam * x * x)),
        gradient=lambda x: lam * x,
        lipschitz_gradient=float(np.max(np.abs(lam))) if lam.size else 0.0,
        lipschitz_hessian=0.0,
        lower_bound=lower,
        name="diag-quadratic",
    )


# --- observed matrices ---


@dataclass(frozen=True, eq=False)
class ObservedMatrix:
    """Sparse observations ``(rows[t], cols[t]) -> values[t]``, 0-based."""

    m: int
    n: int
    rows: np.ndarray
    cols: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        rows = np.asarray(self.rows, dtype=np.int64)
        cols = np.asarray(self.cols, dtype=np.int64)
        values = np.asarray(self.values, dtype=np.float64)
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "cols", cols)
        object.__setattr__(self, "values", values)
        if self.m < 1 or self.n < 1:
            raise ValueError("matrix dimensions must be positive")
        if not rows.shape == cols.shape == values.shape or rows.ndim != 1:
            raise DimensionMismatch("rows, cols and values must be equal-length 1-D arrays")
        if rows.size == 0:
            raise ValueError("at least one observation is required")
        if rows.min() < 0 or rows.max() >= self.m or cols.min() < 0 or cols.max() >= self.n:
            raise IndexError("observation index out of range")
        flat = rows * self.n + cols
        if np.unique(flat).size != flat.size:
            raise DuplicateEntry("duplicate (row, col) observation")

    @classmethod
    def from_entries(cls, m: int, n: int, entries) -> "ObservedMatrix":
        entries = list(entries)
        if not entries:
            raise ValueError("at least one observation is required")
        i, j, v = zip(*entries)
        return cls(m, n, np.array(i), np.array(j), np.array(v, dtype=np.float64))

    @property
    def nnz(self) -> int:
        return int(self.rows.size)

    def entries(self):
        return list(zip(self.rows.tolist(), self.cols.tolist(), self.values.tolist()))

    def to_sparse(self) -> sparse.csr_matrix:
        return sparse.csr_matrix((self.values, (self.rows, self.cols)), shape=(self.m, self.n))

    def transpose(self) -> "ObservedMatrix":
        return ObservedMatrix(self.n, self.m, self.cols, self.rows, self.values)


@dataclass(frozen=True, eq=False)
class FactorPair:
    U: np.ndarray
    V: np.ndarray

    def __post_init__(self):
        if self.U.ndim != 2 or self.V.ndim != 2 or self.U.shape[1] != self.V.shape[1]:
            raise DimensionMismatch("U and V must be 2-D with the same number of columns")
        if self.U.shape[1] < 1:
            raise ValueError("rank must be >= 1")

    @property
    def rank(self) -> int:
        return self.U.shape[1]

    def flatten(self) -> np.ndarray:
        return np.concatenate([self.U.ravel(), self.V.ravel()])

    @classmethod
    def unflatten(cls, x, m: int, n: int, r: int) -> "FactorPair":
        x = np.asarray(x, dtype=np.float64)
        if x.shape != ((m + n) * r,):
            raise DimensionMismatch(f"expected vector of length {(m + n) * r}, got {x.shape}")
        return cls(x[: m * r].reshape(m, r), x[m * r:].reshape(n, r))


# --- factorized objectives ---


def balance_term(U: np.ndarray, V: np.ndarray, n_obs: int) -> float:
    """``||U^T U - V^T V||_F^2 / (2N)``."""
    gap = U.T @ U - V.T @ V
    return float(np.sum(gap * gap)) / (2.0 * n_obs)


def _factorized_problem(obs: ObservedMatrix, r: int, loss, dloss, name: str) -> Problem:
    """Shared scaffolding: ``sum loss(z_ij) / N + balance``, z = (U V^T)_ij."""
    if r < 1:
        raise ValueError("rank must be >= 1")
    m, n, N = obs.m, obs.n, obs.nnz
    rows, cols, vals = obs.rows, obs.cols, obs.values

    def split(x):
        return FactorPair.unflatten(x, m, n, r)

    def products(U, V):
        return np.einsum("ij,ij->i", U[rows], V[cols])

    def value(x):
        fp = split(x)
        z = products(fp.U, fp.V)
        return float(np.sum(loss(z, vals))) / N + balance_term(fp.U, fp.V, N)

    def gradient(x):
        fp = split(x)
        U, V = fp.U, fp.V
        z = products(U, V)
        S = sparse.csr_matrix((dloss(z, vals), (rows, cols)), shape=(m, n))
        gap = U.T @ U - V.T @ V
        gU = (S @ V + 2.0 * U @ gap) / N
        gV = (S.T @ U - 2.0 * V @ gap) / N
        return np.concatenate([gU.ravel(), gV.ravel()])

    # both losses are nonnegative, so 0 bounds f from below
    return Problem(dim=(m + n) * r, value=value, gradient=gradient, lower_bound=0.0,
                   name=name)


def matrix_completion_problem(obs: ObservedMatrix, r: int) -> Problem:
    """``sum_O ((U V^T)_ij - X_ij)^2 / (2N) + ||U^T U - V^T V||_F^2 / (2N)``."""
    return _factorized_problem(
        obs, r,
        loss=lambda z, y: 0.5 * (z - y) ** 2,
        dloss=lambda z, y: z - y,
        name="matrix-completion",
    )


def log_sigmoid(z):
    """``log(1 / (1 + exp(-z)))`` without overflow."""
    return -np.logaddexp(0.0, -z)


def sigmoid(z):
    return np.exp(log_sigmoid(z))


def one_bit_problem(signs: ObservedMatrix, r: int) -> Problem:
    """Logistic negative log-likelihood of observed signs plus the balance term."""
    if not np.all(np.isin(signs.values, (-1.0, 1.0))):
        raise InvalidSign("one-bit observations must be +1 or -1")
    # -log sigma(y z) covers both label cases
    return _factorized_problem(
        signs, r,
        loss=lambda z, y: -log_sigmoid(y * z),
        dloss=lambda z, y: -y * sigmoid(-y * z),
        name="one-bit",
    )


# --- initialisation and data ---


def truncated_svd(X, r: int, seed: int = 0, max_iters: int = 50, tol: float = 1e-10):
    """Top-``r`` singular triplets by randomized subspace iteration.

    Returns ``(A, s, B, converged)`` with ``A`` m x r, ``B`` n x r.
    """
    m, n = X.shape
    if not 1 <= r <= min(m, n):
        raise ValueError("need 1 <= r <= min(m, n)")
    rng = np.random.default_rng(seed)
    width = min(r + 10, min(m, n))
    Q, _ = np.linalg.qr(X @ rng.standard_normal((n, width)))
    converged = False
    for _ in range(max_iters):
        P, _ = np.linalg.qr(X.T @ Q)
        Q, _ = np.linalg.qr(X @ P)
        small = np.asarray((X.T @ Q).T)  # = Q^T X, width x n
        W, s, Bt = np.linalg.svd(small, full_matrices=False)
        A = Q @ W[:, :r]
        B = Bt[:r].T
        s = s[:r]
        if s[0] == 0.0:
            converged = True
            break
        resid = np.linalg.norm(X @ B - A * s, axis=0).max() / s[0]
        if resid < tol:
            converged = True
            break
    return A, s, B, converged


def svd_init(obs: ObservedMatrix, r: int, seed: int = 0) -> FactorPair:
    """``U = A_r sqrt(S_r)``, ``V = B_r sqrt(S_r)`` from the zero-filled data.

    Emits :class:`ConvergenceWarning` if the subspace iteration stops short
    of its tolerance; the result is still returned.
    """
    if not 1 <= r <= min(obs.m, obs.n):
        raise ValueError("need 1 <= r <= min(m, n)")
    A, s, B, converged = truncated_svd(obs.to_sparse(), r, seed)
    if not converged:
        warnings.warn("truncated SVD did not reach its residual tolerance",
                      ConvergenceWarning, stacklevel=2)
    root = np.sqrt(s)
    return FactorPair(np.ascontiguousarray(A * root), np.ascontiguousarray(B * root))


def generate_synthetic_mc(m: int, n: int, r: int, density: float, noise: float,
                          seed: int) -> ObservedMatrix:
    """Observe entries of ``G H^T`` independently with probability ``density``."""
    if not 0 < density <= 1:
        raise ValueError("density must lie in (0, 1]")
    if noise < 0:
        raise ValueError("noise must be nonnegative")
    rng = np.random.default_rng(seed)
    G = rng.standard_normal((m, r))
    H = rng.standard_normal((n, r))
    mask = rng.random((m, n)) < density
    rows, cols = np.nonzero(mask)
    vals = np.einsum("ij,ij->i", G[rows], H[cols])
    if noise > 0:
        vals = vals + noise * rng.standard_normal(vals.size)
    if rows.size == 0:
        raise ValueError("no entries observed; raise density")
    return ObservedMatrix(m, n, rows, cols, vals)


def generate_synthetic_one_bit(m: int, n: int, r: int, density: float,
                               seed: int) -> ObservedMatrix:
    """Signs drawn as ``+1`` with probability ``sigmoid(X_ij)`` on observed entries."""
    obs = generate_synthetic_mc(m, n, r, density, 0.0, seed)
    rng = np.random.default_rng([seed, 1])
    signs = np.where(rng.random(obs.nnz) < sigmoid(obs.values), 1.0, -1.0)
    return ObservedMatrix(m, n, obs.rows, obs.cols, signs)


def load_ratings_csv(path) -> ObservedMatrix:
    """Read ``user,item,rating[,timestamp]`` lines with 1-based ids.

    A first line whose first field is not numeric is treated as a header.
    """
    rows, cols, vals = [], [], []
    seen = set()
    with open(path, newline="") as fh:
        for lineno, rec in enumerate(csv.reader(fh), start=1):
            if not rec or all(not f.strip() for f in rec):
                continue
            if lineno == 1 and not _is_number(rec[0]):
                continue
            if len(rec) < 3:
                raise ParseError(f"line {lineno}: expected user,item,rating")
            try:
                i, j, v = int(rec[0]) - 1, int(rec[1]) - 1, float(rec[2])
            except ValueError as exc:
                raise ParseError(f"line {lineno}: {exc}") from None
            if i < 0 or j < 0:
                raise ParseError(f"line {lineno}: ids are 1-based")
            if (i, j) in seen:
                raise DuplicateEntry(f"line {lineno}: duplicate entry ({i + 1}, {j + 1})")
            seen.add((i, j))
            rows.append(i)
            cols.append(j)
            vals.append(v)
    if not rows:
        raise ParseError(f"{path}: no ratings found")
    return ObservedMatrix(max(rows) + 1, max(cols) + 1, np.array(rows), np.array(cols),
                          np.array(vals))


def _is_number(s: str) -> bool:
    try:
        float(s)
    except ValueError:
        return False
    return True


def save_coo(obs: ObservedMatrix, path) -> None:
    """Write ``i j value`` lines (0-based); values round-trip exactly."""
    with open(path, "w") as fh:
        for i, j, v in obs.entries():
            fh.write(f"{i} {j} {v!r}\n")


def load_coo(path, m: int | None = None, n: int | None = None) -> ObservedMatrix:
    rows, cols, vals = [], [], []
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        if not line.strip():
            continue
        parts = line.split()
        if len(parts) != 3:
            raise ParseError(f"line {lineno}: expected 'i j value'")
        try:
            rows.append(int(parts[0]))
            cols.append(int(parts[1]))
            vals.append(float(parts[2]))
        except ValueError as exc:
            raise ParseError(f"line {lineno}: {exc}") from None
    if not rows:
        raise ParseError(f"{path}: no entries found")
    return ObservedMatrix(m if m is not None else max(rows) + 1,
                          n if n is not None else max(cols) + 1,
                          np.array(rows), np.array(cols), np.array(vals))
