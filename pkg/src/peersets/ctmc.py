"""Transition-rate matrix, equilibrium distribution, and matrix-log recovery.

The joint choice process is a finite continuous-time Markov chain whose
generator has nonzero off-diagonal entries only between configurations that
differ in exactly one person's choice. This module builds that generator,
solves for its invariant distribution, moves between the generator and the
interval-Delta transition matrix, and checks the Gibbs-style balance
characterization available when attention ignores the person's own choice.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.sparse
import scipy.sparse.csgraph
import scipy.sparse.linalg
from numpy.typing import NDArray

from .ccp import CcpTable, ccp_table
from .model import ModelSpec, PreferenceProfile, Variant, count_peers
from .states import Config, StateSpace

DENSE_LIMIT = 10_000

BALANCE_TOL = 1e-10
EIG_DISTINCT_TOL = 1e-8
NEGATIVE_RATE_TOL = 1e-8
RATE_CONSISTENCY_TOL = 1e-8


class CtmcError(RuntimeError):
    """Base class for solver failures in this module."""


class ReducibleChainError(CtmcError):
    """The rate matrix is not irreducible; no unique invariant distribution."""


class MatrixLogError(CtmcError):
    """Matrix-log recovery failed an eigenvalue or sparsity diagnostic."""


class InconsistentRatesError(CtmcError):
    """Off-diagonal rates are not consistent with any single-rate model."""


# ---------------------------------------------------------------------------
# rate matrix
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class RateMatrix:
    """Infinitesimal generator over the configuration space.

    Rows/columns are indexed by lexicographic configuration order (0-based
    rows; the 1-based ordinal is row+1). ``matrix`` is dense below
    ``DENSE_LIMIT`` states and scipy CSR above.
    """

    space: StateSpace
    matrix: NDArray[np.float64] | scipy.sparse.csr_matrix

    @property
    def dimension(self) -> int:
        return self.space.size

    @property
    def is_sparse(self) -> bool:
        return scipy.sparse.issparse(self.matrix)

    def toarray(self) -> NDArray[np.float64]:
        if self.is_sparse:
            return np.asarray(self.matrix.todense())
        return np.asarray(self.matrix)

    def entry(self, source: Config, target: Config) -> float:
        i, j = self.space.row(source), self.space.row(target)
        return float(self.matrix[i, j])

    def scaled(self, factor: float) -> "RateMatrix":
        return RateMatrix(self.space, self.matrix * factor)


def build_rate_matrix(model: ModelSpec, ccps: CcpTable | None = None) -> RateMatrix:
    """Assemble the generator from per-person revision rates and CCPs.

    Off-diagonal entry (y, y') with y' differing from y only in person a's
    choice equals rate_a * P_a(y'_a | y); rows sum to zero.
    """
    if ccps is None:
        ccps = ccp_table(model)
    space = ccps.space
    moves = space.move_table()  # (S, A, base)
    probs = ccps.values  # (S, A, Y+1)
    if not space.include_default:
        probs = probs[:, :, 1:]
    total_rate = model.total_rate()
    size, num_people, base = moves.shape
    rows = np.repeat(np.arange(size, dtype=np.int64), num_people * base)
    cols = moves.reshape(-1)
    vals = (probs * model.rates[None, :, None]).reshape(-1)
    if size <= DENSE_LIMIT:
        m = np.zeros((size, size))
        np.add.at(m, (rows, cols), vals)
        m[np.arange(size), np.arange(size)] -= total_rate
        return RateMatrix(space, m)
    m = scipy.sparse.coo_matrix((vals, (rows, cols)), shape=(size, size)).tocsr()
    m = m - scipy.sparse.identity(size, format="csr") * total_rate
    return RateMatrix(space, m)


def one_move_mask(space: StateSpace) -> NDArray[np.bool_]:
    """Boolean (size, size) mask of entries reachable by a single-person move."""
    moves = space.move_table()
    mask = np.zeros((space.size, space.size), dtype=bool)
    rows = np.repeat(np.arange(space.size), moves.shape[1] * moves.shape[2])
    mask[rows, moves.reshape(-1)] = True
    mask[np.arange(space.size), np.arange(space.size)] = True
    return mask


# ---------------------------------------------------------------------------
# invariant distribution
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class InvariantDistribution:
    """Long-run occupancy of each configuration (mu M = 0, sums to one)."""

    space: StateSpace
    probabilities: NDArray[np.float64]
    residual: float

    def probability(self, config: Config) -> float:
        return float(self.probabilities[self.space.row(config)])

    def marginal(self, person: int) -> NDArray[np.float64]:
        """Distribution of one person's choice, indexed by alternative id."""
        digits = self.space.digits()
        y = self.space.num_alternatives
        out = np.zeros(y + 1)
        for alt in range(0 if self.space.include_default else 1, y + 1):
            out[alt] = float(self.probabilities[digits[:, person] == alt].sum())
        return out

    def co_marginal(self, person: int) -> NDArray[np.float64]:
        """Marginal over everyone but ``person``, flattened in lex order."""
        base = self.space.base
        shaped = self.probabilities.reshape((base,) * self.space.num_people)
        return shaped.sum(axis=person).reshape(-1)


def invariant_distribution(rate_matrix: RateMatrix, balance_tol: float = BALANCE_TOL) -> InvariantDistribution:
    """Solve mu M = 0 with the normalization row swapped in for one balance row."""
    _check_irreducible(rate_matrix)
    n = rate_matrix.dimension
    if rate_matrix.is_sparse:
        system = scipy.sparse.lil_matrix(rate_matrix.matrix.T)
        system[n - 1, :] = 1.0
        rhs = np.zeros(n)
        rhs[n - 1] = 1.0
        mu = scipy.sparse.linalg.spsolve(system.tocsc(), rhs)
    else:
        system = rate_matrix.matrix.T.copy()
        system[n - 1, :] = 1.0
        rhs = np.zeros(n)
        rhs[n - 1] = 1.0
        try:
            mu = scipy.linalg.solve(system, rhs)
        except scipy.linalg.LinAlgError as exc:
            raise CtmcError(f"singular balance system: {exc}") from exc
    residual = float(np.max(np.abs(mu @ rate_matrix.matrix)))
    if residual > balance_tol:
        raise CtmcError(f"balance residual {residual:.3e} above {balance_tol:.1e}")
    mu = np.clip(mu, 0.0, None)
    mu /= mu.sum()
    return InvariantDistribution(rate_matrix.space, mu, residual)


def _check_irreducible(rate_matrix: RateMatrix) -> None:
    pattern = rate_matrix.matrix if rate_matrix.is_sparse else scipy.sparse.csr_matrix(
        rate_matrix.matrix != 0.0
    )
    n_components, _ = scipy.sparse.csgraph.connected_components(
        pattern, directed=True, connection="strong"
    )
    if n_components != 1:
        raise ReducibleChainError(
            f"rate matrix has {n_components} strongly connected components"
        )


def marginals(mu: InvariantDistribution, person: int) -> NDArray[np.float64]:
    """Equilibrium choice distribution of one person."""
    if not 0 <= person < mu.space.num_people:
        raise ValueError(f"person {person} out of range")
    return mu.marginal(person)


def mistake_probability(
    mu: InvariantDistribution, preferences: PreferenceProfile, person: int
) -> float:
    """Long-run probability the person is not at her most preferred option."""
    return 1.0 - float(mu.marginal(person)[preferences.best(person)])


def consideration_miss_probability(mu: InvariantDistribution, model: ModelSpec, person: int) -> float:
    """Equilibrium chance a revision draw omits the best option from the set."""
    assert model.attention is not None
    best = model.preferences.best(person)
    total = 0.0
    for row, config in enumerate(mu.space.configs()):
        n = count_peers(model.network, config, person, best)
        q = model.attention.value(person, best, config[person], n)
        total += mu.probabilities[row] * (1.0 - q)
    return total


# ---------------------------------------------------------------------------
# matrix exponential / logarithm
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class TransitionMatrix:
    """Row-stochastic transition matrix over one observation interval."""

    space: StateSpace
    matrix: NDArray[np.float64]
    delta: float

    def probability(self, source: Config, target: Config) -> float:
        return float(self.matrix[self.space.row(source), self.space.row(target)])


def transition_matrix(rate_matrix: RateMatrix, delta: float) -> TransitionMatrix:
    """exp(delta * M) via scaling-and-squaring."""
    if delta <= 0:
        raise ValueError(f"delta must be positive, got {delta}")
    dense = rate_matrix.toarray()
    p = scipy.linalg.expm(dense * delta)
    return TransitionMatrix(rate_matrix.space, p, delta)


@dataclass(frozen=True)
class RecoveryDiagnostics:
    """Eigenvalue and projection diagnostics for matrix-log recovery.

    ``branch_margin`` is pi minus the largest |imaginary part| among the
    principal log eigenvalues; a small margin means rates close to the
    identification boundary where eigenvalues separated by 2*pi*i/Delta
    become indistinguishable.
    """

    eigenvalues: NDArray[np.complex128]
    min_eigenvalue_gap: float
    imaginary_residual: float
    projection_residual: float
    min_offdiagonal: float
    branch_margin: float


def recover_rate_matrix(
    transition: TransitionMatrix,
    delta: float | None = None,
    eig_tol: float = EIG_DISTINCT_TOL,
    negative_tol: float = NEGATIVE_RATE_TOL,
    branch_tol: float = 1e-6,
) -> tuple[RateMatrix, RecoveryDiagnostics]:
    """Principal matrix logarithm of P(delta) divided by delta.

    Two generator eigenvalues differing by an integer multiple of
    2*pi*i/delta collapse onto one eigenvalue of P (aliasing) and recovery is
    not unique. That failure surfaces as an eigenvalue of P on or near the
    negative real axis (the principal branch cut), a non-real reconstruction,
    or rates violating the single-move sparsity; all three abort. Exact
    eigenvalue repeats from model symmetry are benign for the principal log
    (equal values get equal logs), so the log is taken on the Schur form,
    which stays stable where a computed eigenvector basis would be defective.
    """
    if delta is None:
        delta = transition.delta
    if delta <= 0:
        raise ValueError(f"delta must be positive, got {delta}")
    p = np.asarray(transition.matrix, dtype=float)
    n = p.shape[0]
    if n > 2000:
        raise MatrixLogError(f"dense matrix logarithm refused at dimension {n}")
    eigvals = scipy.linalg.eigvals(p)
    gap = _min_pairwise_gap(eigvals)
    if np.min(np.abs(eigvals)) < 1e-300:
        raise MatrixLogError("transition matrix has a zero eigenvalue; log undefined")
    log_eigs = np.log(eigvals.astype(complex))
    branch_margin = float(np.pi - np.max(np.abs(log_eigs.imag)))
    if branch_margin < branch_tol:
        raise MatrixLogError(
            f"eigenvalue of P lies on or near the negative real axis (branch "
            f"margin {branch_margin:.3e}); generator eigenvalues separated by a "
            f"multiple of 2*pi*i/delta are aliased at this observation interval"
        )
    with np.errstate(all="ignore"):
        recovered = scipy.linalg.logm(p)
    recovered = np.asarray(recovered)
    scale = 1.0 + float(np.max(np.abs(recovered.real)))
    if np.iscomplexobj(recovered):
        imag_residual = float(np.max(np.abs(recovered.imag)))
    else:
        imag_residual = 0.0
    if imag_residual > 1e-8 * scale:
        raise MatrixLogError(
            f"principal log is not real (imaginary residual {imag_residual:.3e}); "
            "the observation interval aliases the generator's complex rates"
        )
    m = recovered.real / delta

    mask = one_move_mask(transition.space)
    discarded = m[~mask]
    projection_residual = float(np.max(np.abs(discarded))) if discarded.size else 0.0
    m = np.where(mask, m, 0.0)
    off = m.copy()
    np.fill_diagonal(off, 0.0)
    min_off = float(off.min())
    if min_off < -negative_tol:
        raise MatrixLogError(
            f"recovered generator has negative off-diagonal rate {min_off:.3e} "
            f"beyond tolerance {negative_tol:.1e} after projection"
        )
    off = np.clip(off, 0.0, None)
    m = off
    np.fill_diagonal(m, -off.sum(axis=1))
    diagnostics = RecoveryDiagnostics(
        eigenvalues=eigvals,
        min_eigenvalue_gap=gap,
        imaginary_residual=imag_residual,
        projection_residual=projection_residual,
        min_offdiagonal=min_off,
        branch_margin=branch_margin,
    )
    return RateMatrix(transition.space, m), diagnostics


def _min_pairwise_gap(values: NDArray[np.complex128]) -> float:
    order = np.argsort(values.real, kind="stable")
    v = values[order]
    gap = np.inf
    for i in range(len(v)):
        for j in range(i + 1, len(v)):
            if v[j].real - v[i].real > gap:
                break
            gap = min(gap, abs(v[j] - v[i]))
    return float(gap)


# ---------------------------------------------------------------------------
# reading rates and choice probabilities off a generator
# ---------------------------------------------------------------------------


def rates_and_ccps_from_M(
    rate_matrix: RateMatrix,
    tol: float = RATE_CONSISTENCY_TOL,
    variant: Variant | None = None,
) -> tuple[NDArray[np.float64], CcpTable]:
    """Split the generator into revision rates and a full CCP table.

    Each off-diagonal single-move entry equals rate_a * P_a(new | y). The
    missing stay-probability is read from the row of a sibling configuration,
    which is valid when CCPs do not depend on the person's own current choice
    (as in the count-only attention models); rate estimates are cross-checked
    over all sibling pairs and an inconsistency beyond ``tol`` aborts.
    """
    space = rate_matrix.space
    m = rate_matrix.toarray()
    base = space.base
    num_people = space.num_people
    y = space.num_alternatives
    moves = space.move_table()
    digits = space.digits() - (0 if space.include_default else 1)

    rates = np.empty(num_people)
    for a in range(num_people):
        estimates: list[float] = []
        context_rows = np.flatnonzero(digits[:, a] == 0)  # one row per y_{-a}
        for row in context_rows:
            siblings = moves[row, a]  # rows for each own-choice digit
            for u in range(base):
                s_u = siblings[u]
                leave = m[s_u, siblings].sum() - m[s_u, s_u]
                for w in range(base):
                    if w == u:
                        continue
                    stay = m[siblings[w], s_u]  # rate_a * P_a(u | w, y_-a)
                    estimates.append(leave + stay)
        estimates_arr = np.asarray(estimates)
        spread = float(estimates_arr.max() - estimates_arr.min())
        scale = max(1.0, float(np.abs(estimates_arr).max()))
        if spread > tol * scale:
            raise InconsistentRatesError(
                f"person {a}: rate estimates spread {spread:.3e} across "
                "configurations; generator is not consistent with a single "
                "revision rate and own-choice-independent choice probabilities"
            )
        rates[a] = float(estimates_arr.mean())

    values = np.zeros((space.size, num_people, y + 1))
    offset = 0 if space.include_default else 1
    for row in range(space.size):
        for a in range(num_people):
            own_digit = digits[row, a]
            total = 0.0
            for c in range(base):
                if c == own_digit:
                    continue
                p = m[row, moves[row, a, c]] / rates[a]
                values[row, a, c + offset] = p
                total += p
            values[row, a, own_digit + offset] = 1.0 - total
    if variant is None:
        variant = Variant.BASELINE_DEFAULT if space.include_default else Variant.NO_DEFAULT
    return rates, CcpTable(space, values, variant)


# ---------------------------------------------------------------------------
# Gibbs-style checks
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GibbsReport:
    """Result of the conditional-compatibility checks.

    ``odds_ratios`` is filled for two-person binary models, where equality of
    the per-person odds ratios is necessary and sufficient for the CCPs to be
    the conditionals of some joint distribution.
    """

    g1_holds: bool
    g1_detail: str
    odds_ratios: tuple[float, ...] | None
    odds_ratio_gap: float | None
    conditional_residual: float | None
    compatible: bool

    def __str__(self) -> str:
        lines = [f"own-choice independence (G1): {'holds' if self.g1_holds else 'fails'}"]
        if not self.g1_holds:
            lines.append(f"  {self.g1_detail}")
        if self.odds_ratios is not None:
            lines.append(
                f"odds ratios: {self.odds_ratios} (gap {self.odds_ratio_gap:.3e})"
            )
        if self.conditional_residual is not None:
            lines.append(f"max |P_a(y_a|y) - mu(y)/mu_-a(y_-a)| = {self.conditional_residual:.3e}")
        lines.append(f"compatible: {self.compatible}")
        return "\n".join(lines)


def check_gibbs_compatibility(model: ModelSpec, tol: float = 1e-9) -> GibbsReport:
    """Test whether the model's CCPs are compatible conditional distributions."""
    if model.variant is not Variant.BASELINE_DEFAULT:
        raise ValueError("compatibility check applies to the base variant")
    assert model.attention is not None
    g1 = model.attention.own_independent()
    detail = "" if g1 else "attention depends on the person's own current choice"
    odds: tuple[float, ...] | None = None
    gap: float | None = None
    if model.num_people == 2 and model.num_alternatives == 1 and g1:
        vals = []
        for a in range(2):
            q0 = model.attention.value(a, 1, 0, 0)
            q1 = model.attention.value(a, 1, 0, 1)
            vals.append((1.0 - q0) / q0 * q1 / (1.0 - q1))
        odds = tuple(vals)
        gap = abs(vals[0] - vals[1])
    residual: float | None = None
    if g1:
        residual = conditional_match_residual(model)
        compatible = residual < tol
    else:
        compatible = False
    return GibbsReport(
        g1_holds=g1,
        g1_detail=detail,
        odds_ratios=odds,
        odds_ratio_gap=gap,
        conditional_residual=residual,
        compatible=compatible,
    )


def conditional_match_residual(model: ModelSpec) -> float:
    """max over (a, y) of |P_a(y_a|y) - mu(y)/mu_-a(y_-a)|."""
    mu = invariant_distribution(build_rate_matrix(model))
    table = ccp_table(model)
    digits = mu.space.digits()
    worst = 0.0
    for a in range(model.num_people):
        co = _co_marginal_per_row(mu, a)
        own_prob = table.values[np.arange(mu.space.size), a, digits[:, a]]
        worst = max(worst, float(np.max(np.abs(own_prob - mu.probabilities / co))))
    return worst


def verify_balance(mu: InvariantDistribution, model: ModelSpec, ccps: CcpTable | None = None) -> float:
    """Residual of mu(y) = sum_a rate_a P_a(y_a|y) mu_-a(y_-a) / sum_a rate_a.

    Valid when attention ignores the person's own choice; raises otherwise.
    """
    assert model.attention is not None
    if not model.attention.own_independent():
        raise ValueError("balance characterization requires own-choice-independent attention")
    if ccps is None:
        ccps = ccp_table(model)
    digits = mu.space.digits()
    size = mu.space.size
    acc = np.zeros(size)
    for a in range(model.num_people):
        co = _co_marginal_per_row(mu, a)
        own_prob = ccps.values[np.arange(size), a, digits[:, a]]
        acc += model.rates[a] * own_prob * co
    acc /= model.total_rate()
    return float(np.max(np.abs(mu.probabilities - acc)))


def _co_marginal_per_row(mu: InvariantDistribution, person: int) -> NDArray[np.float64]:
    """mu_-a(y_-a) aligned with the full configuration rows."""
    space = mu.space
    base = space.base
    shaped = mu.probabilities.reshape((base,) * space.num_people)
    co = shaped.sum(axis=person)  # shape (base,)^(A-1)
    rows = np.arange(space.size, dtype=np.int64)
    low_w = base ** (space.num_people - 1 - person)
    high = rows // (low_w * base)
    low = rows % low_w
    return co.reshape(-1)[high * low_w + low]
