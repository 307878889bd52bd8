"""Tensor ring decomposition: recover quadratic units {Q_a} from the trace
moments S_ab = Tr(Q_a Q_b) and T_abc = Tr(Q_a Q_b Q_c).

The gauge O(r) is broken by two random unit combinations lambda, mu chosen so
that Q_lambda has a spectral gap and Q_mu has no vanishing entries in
Q_lambda's eigenbasis; the canonical representative has Q_lambda diagonal
ascending and the first row of Q_mu nonnegative.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np
from scipy.optimize import least_squares

from .errors import ConvergenceError, DegeneracyError, UsageError
from .gauge import AlignmentConfig, gauge_distance
from .networks import PolyNetwork, rotate_network
from .relaxation import (
    Poly,
    SolverConfig,
    Infeasible,
    encode_tensor_ring,
    pseudo_expect,
    solve,
)
from .tensors import GaugeRotation

__all__ = [
    "NonDegenCombo",
    "TRConfig",
    "RecoveryReport",
    "find_combo",
    "validate_nondegeneracy",
    "gauge_fix",
    "decompose",
    "jennrich_diagonal",
    "extend_tail",
    "verify_assumption_tr",
]


@dataclass
class NonDegenCombo:
    lam: np.ndarray
    mu: np.ndarray
    upsilon: Optional[tuple[float, float]] = None

    def __post_init__(self):
        self.lam = np.asarray(self.lam, dtype=float)
        self.mu = np.asarray(self.mu, dtype=float)
        for v in (self.lam, self.mu):
            if abs(np.linalg.norm(v) - 1.0) > 1e-10:
                raise UsageError("combination vectors must be unit norm")


@dataclass
class TRConfig:
    r: int
    backend: str = "local"  # sos | local | hybrid
    degree: int = 4
    restarts: int = 20
    tol: float = 1e-9
    rng_seed: int = 0
    penalty: float = 10.0
    penalty_growth: float = 10.0
    penalty_stages: int = 3
    combo_retries: int = 5
    kappa: float = 0.01
    eta: float = 0.0
    solver: SolverConfig = field(default_factory=SolverConfig)


@dataclass
class RecoveryReport:
    network: Optional[PolyNetwork]
    residual_S: float
    residual_T: float
    gauge_dist: Optional[float] = None
    diagnostics: dict = field(default_factory=dict)

    @property
    def residual(self) -> float:
        return max(self.residual_S, self.residual_T)


def find_combo(Ghat: np.ndarray, r: int, rng_seed: int = 0) -> NonDegenCombo:
    """Randomized symmetry-breaking combinations from the Gram matrix Ghat.

    Takes the best rank-m approximation of Ghat (m = C(r+1,2)), forms
    H~ = U sqrt(diag of top eigenvalues), pulls back the standard basis via
    w^{(ij)} = H~ (H~^T H~)^{-1} e_{ij}, and mixes with Gaussian weights.
    """
    Ghat = np.asarray(Ghat, dtype=float)
    d = Ghat.shape[0]
    m = r * (r + 1) // 2
    if d < m:
        raise UsageError(f"need d >= C(r+1,2) = {m}, got d = {d}")
    if np.max(np.abs(Ghat - Ghat.T)) > 1e-8:
        raise UsageError("Ghat must be symmetric")
    w, U = np.linalg.eigh(0.5 * (Ghat + Ghat.T))
    top = np.argsort(w)[::-1][:m]
    vals = w[top]
    if np.min(vals) <= 0:
        raise DegeneracyError(
            "rank-m eigenvalue block of Ghat is not positive; instance too "
            "noisy or degenerate"
        )
    Ht = U[:, top] * np.sqrt(vals)
    W = Ht @ np.linalg.inv(Ht.T @ Ht)  # columns w^{(ij)}
    rng = np.random.Generator(np.random.Philox(key=(rng_seed & (2**64 - 1), 11)))
    g = rng.standard_normal(m)
    gp = rng.standard_normal(m)
    h = W @ g
    hp = W @ gp
    return NonDegenCombo(lam=h / np.linalg.norm(h), mu=hp / np.linalg.norm(hp))


def validate_nondegeneracy(
    net: PolyNetwork, lam: np.ndarray, mu: np.ndarray
) -> tuple[float, float]:
    """(min eigengap of Q_lambda, min |entry| of Q_mu in Q_lambda's eigenbasis)."""
    if net.kind != "quadratic":
        raise UsageError("non-degeneracy validation needs a quadratic network")
    Qlam = np.einsum("a,aij->ij", np.asarray(lam, dtype=float), net.Q)
    Qmu = np.einsum("a,aij->ij", np.asarray(mu, dtype=float), net.Q)
    w, V = np.linalg.eigh(Qlam)
    gap = float(np.min(np.diff(np.sort(w)))) if len(w) > 1 else float("inf")
    X = V.T @ Qmu @ V
    return gap, float(np.min(np.abs(X)))


def gauge_fix(
    net: PolyNetwork, lam: np.ndarray, mu: np.ndarray, gap_tol: float = 1e-12
) -> tuple[PolyNetwork, GaugeRotation]:
    """Canonical gauge representative given symmetry-breaking combinations.

    Rotates so the lambda-combination is diagonal with ascending diagonal and
    flips signs so the first row of the mu-combination is nonnegative (its
    (1,1) entry is sign-invariant and left as-is).
    """
    if net.kind == "quadratic":
        combo = np.einsum("a,aij->ij", np.asarray(lam, dtype=float), net.Q)
        combo_mu = np.einsum("a,aij->ij", np.asarray(mu, dtype=float), net.Q)
    else:
        raise UsageError("gauge_fix operates on quadratic networks")
    w, V = np.linalg.eigh(combo)
    if len(w) > 1 and float(np.min(np.diff(w))) <= gap_tol:
        raise DegeneracyError("zero eigengap in the lambda combination")
    Wrot = V.T
    X = Wrot @ combo_mu @ Wrot.T
    signs = np.where(X[0] >= 0, 1.0, -1.0)
    signs[0] = 1.0
    R = signs[:, None] * Wrot
    return rotate_network(net, R), GaugeRotation(R)


# ---------------------------------------------------------------------------
# local (nonconvex) backend
# ---------------------------------------------------------------------------

def _tri_pairs(r: int):
    return [(i, j) for i in range(r) for j in range(i, r)]


def _unpack(x: np.ndarray, d: int, r: int) -> np.ndarray:
    pairs = _tri_pairs(r)
    Q = np.zeros((d, r, r))
    for a in range(d):
        for k, (i, j) in enumerate(pairs):
            Q[a, i, j] = x[a * len(pairs) + k]
            Q[a, j, i] = x[a * len(pairs) + k]
    return Q


def _pack(Q: np.ndarray) -> np.ndarray:
    d, r, _ = Q.shape
    pairs = _tri_pairs(r)
    return np.array([Q[a, i, j] for a in range(d) for (i, j) in pairs])


def _moment_residuals(Q: np.ndarray, S: np.ndarray, T: np.ndarray):
    d = Q.shape[0]
    res = []
    P = np.einsum("aij,bji->ab", Q, Q)
    for a in range(d):
        for b in range(a, d):
            res.append(P[a, b] - S[a, b])
    C = np.einsum("aij,bjk,cki->abc", Q, Q, Q)
    for a in range(d):
        for b in range(a, d):
            for c in range(b, d):
                res.append(C[a, b, c] - T[a, b, c])
    return res


def _gauge_residuals(Q: np.ndarray, lam: np.ndarray, mu: np.ndarray):
    r = Q.shape[1]
    Qlam = np.einsum("a,aij->ij", lam, Q)
    Qmu = np.einsum("a,aij->ij", mu, Q)
    res = []
    for i in range(r):
        for j in range(i + 1, r):
            res.append(Qlam[i, j])
    for i in range(r - 1):
        res.append(min(0.0, Qlam[i + 1, i + 1] - Qlam[i, i]))
    for j in range(r):
        res.append(min(0.0, Qmu[0, j]))
    return res


def _local_fit(
    S: np.ndarray,
    T: np.ndarray,
    lam: np.ndarray,
    mu: np.ndarray,
    cfg: TRConfig,
    x0: np.ndarray,
) -> np.ndarray:
    d = S.shape[0]
    r = cfg.r

    # the gauge is restored exactly by gauge_fix afterwards, so the fit only
    # needs to match the trace moments
    def fun(x):
        Q = _unpack(x, d, r)
        return np.array(_moment_residuals(Q, S, T))

    sol = least_squares(
        fun, x0, method="lm", xtol=1e-15, ftol=1e-15, gtol=1e-15,
        max_nfev=2000,
    )
    return sol.x


def decompose(
    S: np.ndarray,
    T: np.ndarray,
    config: TRConfig,
    truth: Optional[PolyNetwork] = None,
) -> RecoveryReport:
    """Recover {Q_a} from trace moments.

    ``local`` fits the trace residuals plus annealed gauge penalties by
    damped least squares over ``config.restarts`` initializations and returns
    the best; ``sos`` solves the moment relaxation and reads units off the
    pseudoexpectation; ``hybrid`` refines the sos rounding locally.  The
    symmetry-breaking combinations come from find_combo on S, retried with
    fresh weights up to config.combo_retries times.
    """
    S = np.asarray(S, dtype=float)
    T = np.asarray(T, dtype=float)
    d = S.shape[0]
    r = config.r
    eta = config.eta
    best: Optional[tuple[float, PolyNetwork, NonDegenCombo, dict]] = None
    for attempt in range(config.combo_retries):
        try:
            combo = find_combo(S, r, rng_seed=config.rng_seed * 1000 + attempt)
            net, diag = _decompose_once(S, T, combo, config)
        except (DegeneracyError, ConvergenceError):
            continue
        table_res = _table_residuals(net, S, T)
        ups = validate_nondegeneracy(net, combo.lam, combo.mu)
        combo.upsilon = ups
        score = max(table_res)
        diag["upsilon"] = ups
        diag["attempt"] = attempt
        if best is None or score < best[0]:
            best = (score, net, combo, diag)
        break_thr = max(1e3 * eta, config.tol)
        if config.backend in ("sos", "hybrid"):
            # the conic solver's rounding only resolves entries to ~solver tol
            break_thr = max(break_thr, 100 * config.solver.tol)
        if score <= break_thr:
            break
    if best is None and config.backend != "sos":
        # degenerate Gram (e.g. commuting units): no symmetry-breaking combo
        # exists.  Commuting instances are simultaneously diagonalizable, and
        # that is also the accurate recovery route -- the moment map loses
        # first-order identifiability there, so a least-squares fit would be
        # limited to ~sqrt(residual) accuracy.
        fit = None
        try:
            comps = jennrich_diagonal(T, rng_seed=config.rng_seed)
            if len(comps) == r:
                Qdiag = np.stack(
                    [np.diag([float(c[a]) for c in comps]) for a in range(d)]
                )
                fit = PolyNetwork(kind="quadratic", r=r, d=d, Q=Qdiag)
        except DegeneracyError:
            fit = None
        if fit is not None and max(_table_residuals(fit, S, T)) > max(
            1e3 * eta, 1e-8
        ):
            fit = None
        if fit is None:
            fit = _best_local_fit(S, T, config)
        if fit is not None:
            score = max(_table_residuals(fit, S, T))
            best = (score, fit, None, {"backend": config.backend,
                                       "gauge_fixed": False})
    if best is None:
        raise ConvergenceError("every symmetry-breaking attempt failed")
    score, net, combo, diag = best
    threshold = max(1e3 * eta, 1e-6) if config.backend != "sos" else 1e-3
    if score > threshold:
        raise ConvergenceError(
            f"best residual {score:.3e} above threshold {threshold:.3e}"
        )
    res_S, res_T = _table_residual_pair(net, S, T)
    gd = None
    if truth is not None:
        gd, _ = gauge_distance(net, truth, AlignmentConfig(rng_seed=config.rng_seed))
    return RecoveryReport(
        network=net, residual_S=res_S, residual_T=res_T, gauge_dist=gd,
        diagnostics=diag,
    )


def _decompose_once(S, T, combo: NonDegenCombo, config: TRConfig):
    d = S.shape[0]
    r = config.r
    diag: dict = {"backend": config.backend}
    R = math.sqrt(float(np.max(np.diag(S)))) * 1.05 + 1e-9
    if config.backend in ("sos", "hybrid"):
        lam, mu = combo.lam, combo.mu
        # the (1,1) entry of the gauge-fixed mu-combination is sign-invariant;
        # flip mu when the instance pins it negative so the first-row family
        # stays feasible.  A quick local fit provides both the sign estimate
        # and a warm start for the conic solver.
        fit = _best_local_fit(S, T, config)
        if fit is not None:
            Qlam = np.einsum("a,aij->ij", lam, fit.Q)
            Qmu = np.einsum("a,aij->ij", mu, fit.Q)
            _, V = np.linalg.eigh(Qlam)
            corner = float(np.sign((V.T @ Qmu @ V)[0, 0]) or 1.0)
        else:
            corner = _mu_corner_sign(S, T, lam, mu, r)
        if corner < 0:
            mu = -mu
            combo = NonDegenCombo(lam=lam, mu=mu)
        # scale the instance so Q entries are O(1): first-order conic solvers
        # are very sensitive to variable magnitude
        sc = 1.0 / math.sqrt(float(np.max(np.diag(S))) + 1e-300)
        prog = encode_tensor_ring(
            r, S * sc**2, T * sc**3, lam, mu, R=R * sc, kappa=config.kappa,
            eta=config.eta * sc**2, degree=config.degree,
        )
        warm = None
        if fit is not None:
            warm = _warm_point(prog, fit, lam, mu, config, sc)
            if warm is None:
                # A tight moment fit exists but violates the encoded norm
                # caps: the instance is too degenerate for this program, so
                # a long cold solve cannot succeed either.
                raise ConvergenceError(
                    "instance violates non-degeneracy caps of the relaxation"
                )
        solver_cfg = replace(config.solver, warm_start=warm)
        if warm is not None:
            # a feasible warm point needs no tie-break; the trace objective
            # would only drag the iterates away from it
            solver_cfg = replace(solver_cfg, trace_weight=0.0)
        if warm is None:
            # without a warm start, bound the worst case so degenerate
            # instances fail in bounded time instead of grinding
            solver_cfg = replace(
                solver_cfg, max_iter=min(solver_cfg.max_iter, 10000)
            )
        out = solve(prog, solver_cfg)
        if isinstance(out, Infeasible):
            raise ConvergenceError(
                f"relaxation reported infeasible (residual {out.residual:.3e})"
            )
        qvar = prog.meta["qvar"]
        Q = np.zeros((d, r, r))
        for (a, i, j), v in qvar.items():
            val = pseudo_expect(out, Poly.var(v)) / sc
            Q[a, i, j] = val
            Q[a, j, i] = val
        net = PolyNetwork(kind="quadratic", r=r, d=d, Q=Q)
        diag["solver_iterations"] = out.iterations
        diag["solver_residual"] = out.residual
        if config.backend == "sos":
            return net, diag
        x_init = [_pack(Q)]
    else:
        x_init = []
    rng = np.random.Generator(
        np.random.Philox(key=(config.rng_seed & (2**64 - 1), 21))
    )
    m = len(_tri_pairs(r))
    scale = math.sqrt(float(np.max(np.diag(S))) / max(r, 1)) + 1e-12
    for _ in range(config.restarts):
        x_init.append(scale * rng.standard_normal(d * m))
    best_x, best_res = None, np.inf
    tried = 0
    for x0 in x_init:
        x = _local_fit(S, T, combo.lam, combo.mu, config, x0)
        Q = _unpack(x, d, r)
        res = max(_table_residuals(PolyNetwork(kind="quadratic", r=r, d=d, Q=Q), S, T))
        tried += 1
        if res < best_res:
            best_res, best_x = res, x
        if best_res <= config.tol:
            break
    diag["restarts_used"] = tried
    Q = _unpack(best_x, d, r)
    net = PolyNetwork(kind="quadratic", r=r, d=d, Q=Q)
    # exact canonicalization (the annealed penalties only enforce it softly)
    try:
        net, _ = gauge_fix(net, combo.lam, combo.mu)
    except DegeneracyError:
        pass
    return net, diag


def _best_local_fit(S, T, config: TRConfig) -> Optional[PolyNetwork]:
    """Best gauge-free moment fit over a handful of restarts, or None."""
    d = S.shape[0]
    r = config.r
    m = len(_tri_pairs(r))
    rng = np.random.Generator(
        np.random.Philox(key=(config.rng_seed & (2**64 - 1), 23))
    )
    scale = math.sqrt(float(np.max(np.diag(S))) / max(r, 1)) + 1e-12
    best_x, best_res = None, np.inf
    for _ in range(max(5, config.restarts)):
        x0 = scale * rng.standard_normal(d * m)
        x = _local_fit(S, T, None, None, config, x0)
        Q = _unpack(x, d, r)
        res = max(_table_residuals(PolyNetwork(kind="quadratic", r=r, d=d, Q=Q), S, T))
        if res < best_res:
            best_res, best_x = res, x
        if best_res <= max(config.eta, 1e-10):
            break
    if best_x is None or best_res > max(10 * config.eta, 1e-6):
        return None
    return PolyNetwork(kind="quadratic", r=r, d=d, Q=_unpack(best_x, d, r))


def _warm_point(prog, fit: PolyNetwork, lam, mu, config: TRConfig, sc: float):
    """Feasible assignment seeding the conic solver: the local fit gauge-fixed
    against (lam, mu), with L the least-norm left inverse of the flattening.
    Returns None when the assignment fails the program's own constraints."""
    d, r = fit.d, fit.r
    pairs = prog.meta["pairs"]
    qvar, lvar = prog.meta["qvar"], prog.meta["lvar"]
    m = len(pairs)
    try:
        net, _ = gauge_fix(fit, lam, mu)
    except DegeneracyError:
        return None
    point = np.zeros(prog.nvars)
    M = np.zeros((d, m))
    for a in range(d):
        for u, (i, j) in enumerate(pairs):
            val = net.Q[a, i, j] * sc
            point[qvar[(a, i, j)]] = val
            M[a, u] = val
    L = np.linalg.pinv(M)
    for k in range(m):
        for a in range(d):
            point[lvar[(k, a)]] = L[k, a]
    if prog.check_point(point, tol=1e-9) > max(config.eta * sc**2, 1e-7):
        return None
    return point


def _mu_corner_sign(S, T, lam, mu, r) -> float:
    """Sign of the gauge-invariant (1,1) entry of the mu-combination, estimated
    from the moment tables via a quick unconstrained local fit."""
    # cheap estimate: the entry's sign equals the sign of
    # e_1^T (V^T Q_mu V) e_1 for any recovery; use lam/mu on a raw fit seed.
    # When the estimate is unavailable, keep mu unchanged.
    try:
        cfg = TRConfig(r=r, backend="local", restarts=3, rng_seed=7)
        d = S.shape[0]
        rng = np.random.Generator(np.random.Philox(key=(7, 22)))
        m = len(_tri_pairs(r))
        best_x, best_res = None, np.inf
        for _ in range(3):
            x0 = rng.standard_normal(d * m)
            def fun(x):
                return np.array(_moment_residuals(_unpack(x, d, r), S, T))
            sol = least_squares(fun, x0, method="lm", max_nfev=300)
            res = float(np.max(np.abs(fun(sol.x))))
            if res < best_res:
                best_res, best_x = res, sol.x
        Q = _unpack(best_x, d, r)
        Qlam = np.einsum("a,aij->ij", lam, Q)
        Qmu = np.einsum("a,aij->ij", mu, Q)
        _, V = np.linalg.eigh(Qlam)
        return float(np.sign((V.T @ Qmu @ V)[0, 0]) or 1.0)
    except Exception:
        return 1.0


def _table_residuals(net: PolyNetwork, S, T) -> list[float]:
    rs, rt = _table_residual_pair(net, S, T)
    return [rs, rt]


def _table_residual_pair(net: PolyNetwork, S, T) -> tuple[float, float]:
    Q = net.Q
    P = np.einsum("aij,bji->ab", Q, Q)
    C = np.einsum("aij,bjk,cki->abc", Q, Q, Q)
    return float(np.max(np.abs(P - S))), float(np.max(np.abs(C - T)))


def jennrich_diagonal(T: np.ndarray, rng_seed: int = 0, retries: int = 10):
    """Components of a symmetric third-order tensor T ~ sum_i v_i^{x3} by
    simultaneous diagonalization of two random contractions."""
    T = np.asarray(T, dtype=float)
    d = T.shape[0]
    rng = np.random.Generator(np.random.Philox(key=(rng_seed & (2**64 - 1), 31)))
    # numerical rank of the flattening determines the component count
    flat = T.reshape(d, d * d)
    svals = np.linalg.svd(flat, compute_uv=False)
    tol = max(T.shape) * np.finfo(float).eps * (svals[0] if svals.size else 0.0)
    rank = int(np.sum(svals > max(tol, 1e-10)))
    if rank == 0:
        return []
    last_exc = None
    for _ in range(retries):
        g1 = rng.standard_normal(d)
        g2 = rng.standard_normal(d)
        M1 = np.einsum("ijk,k->ij", T, g1)
        M2 = np.einsum("ijk,k->ij", T, g2)
        try:
            # eigenvectors of M1 M2^+ span the component directions
            vals, vecs = np.linalg.eig(M1 @ np.linalg.pinv(M2))
            order = np.argsort(-np.abs(vals))
            U = np.real(vecs[:, order[:rank]])
            if np.max(np.abs(np.imag(vecs[:, order[:rank]]))) > 1e-8:
                raise np.linalg.LinAlgError("complex eigenvectors")
            sep = np.min(
                [np.abs(vals[order[i]] - vals[order[j]])
                 for i in range(rank) for j in range(i + 1, rank)]
                or [np.inf]
            )
            if sep < 1e-8:
                raise np.linalg.LinAlgError("degenerate contraction spectrum")
        except np.linalg.LinAlgError as exc:
            last_exc = exc
            continue
        U = U / np.linalg.norm(U, axis=0, keepdims=True)
        # weights: T = sum_i w_i u_i^{x3}
        design = np.stack([np.multiply.outer(np.outer(u, u), u).reshape(-1)
                           for u in U.T], axis=1)
        w, *_ = np.linalg.lstsq(design, T.reshape(-1), rcond=None)
        recon = design @ w
        if np.max(np.abs(recon - T.reshape(-1))) > 1e-6 * max(1.0, np.max(np.abs(T))):
            last_exc = ValueError("poor reconstruction")
            continue
        comps = [float(np.cbrt(w[i])) * U[:, i] for i in range(rank)]
        return comps
    raise DegeneracyError(f"simultaneous diagonalization failed: {last_exc}")


def extend_tail(
    S: np.ndarray, head: np.ndarray, d: int
) -> np.ndarray:
    """Tail units by per-unit least squares against the recovered head.

    head: (d', r, r) recovered units; S: full (d, d) pair moments.  Returns
    (d - d', r, r) units solving argmin sum_a (S_ab - <Q_a, Q>)^2.
    """
    S = np.asarray(S, dtype=float)
    head = np.asarray(head, dtype=float)
    dp, r, _ = head.shape
    m = r * (r + 1) // 2
    if dp < m:
        raise UsageError(f"head must have at least C(r+1,2) = {m} units")
    pairs = _tri_pairs(r)
    X = np.zeros((dp, m))
    for a in range(dp):
        for k, (i, j) in enumerate(pairs):
            X[a, k] = head[a, i, j] * (1.0 if i == j else 2.0)
    svals = np.linalg.svd(X, compute_uv=False)
    if svals[-1] < 1e-10 * max(1.0, svals[0]):
        raise DegeneracyError("head flattening is rank deficient")
    rhs = X.T @ S[:dp, dp:d]  # (m, d - d')
    coef = np.linalg.solve(X.T @ X, rhs)  # (m, d - d')
    out = np.zeros((d - dp, r, r))
    for b in range(d - dp):
        for k, (i, j) in enumerate(pairs):
            out[b, i, j] = coef[k, b]
            out[b, j, i] = coef[k, b]
    return out


@dataclass
class AssumptionReportTR:
    radius: float
    sigma_m: float
    m: int
    d: int
    predicted_kappa: Optional[float] = None
    flag: Optional[bool] = None
    warning: Optional[str] = None


def verify_assumption_tr(net: PolyNetwork) -> AssumptionReportTR:
    """Condition-number diagnostics of the flattening matrix M*.

    Reports sigma_m (m = C(r+1,2)) of the d x m upper-triangular flattening
    (off-diagonal entries weighted by sqrt(2) so the row Gram equals the
    Frobenius products, making sigma_m gauge-invariant) and, when the network
    carries smoothing metadata rho, whether sigma_m >= 0.1 * rho * sqrt(d/r).
    """
    if net.kind != "quadratic":
        raise UsageError("verify_assumption_tr needs a quadratic network")
    r, d = net.r, net.d
    m = r * (r + 1) // 2
    pairs = _tri_pairs(r)
    M = np.zeros((d, m))
    for a in range(d):
        for k, (i, j) in enumerate(pairs):
            M[a, k] = net.Q[a, i, j] * (1.0 if i == j else math.sqrt(2.0))
    svals = np.linalg.svd(M, compute_uv=False)
    sigma_m = float(svals[m - 1]) if d >= m else 0.0
    warning = None if d >= m else f"d = {d} < C(r+1,2) = {m}; sigma_m is 0"
    rep = AssumptionReportTR(
        radius=net.radius, sigma_m=sigma_m, m=m, d=d, warning=warning
    )
    if net.smoothing_rho is not None:
        rho = net.smoothing_rho
        rep.predicted_kappa = rho * math.sqrt(d / r)
        rep.flag = sigma_m >= 0.1 * rep.predicted_kappa
    return rep
