"""Low-rank symmetric tensor factorization from pairwise Sigma-inner products.

Recovers rank-ell order-omega networks from S_ab ~ <T_a, T_b>_Sigma.  The
gauge is broken through the paired-contraction vectors f_a: the rank-one
matrices F_a = f_a f_a^T transform like quadratic units, so the quadratic
symmetry-breaking machinery (find_combo / gauge_fix) applies; the leftover
+-Id ambiguity of odd orders is resolved by an argmax anchor and pairwise
signs.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np
from scipy.optimize import least_squares

from .errors import ConvergenceError, DegeneracyError, ResourceError, UsageError
from .gauge import AlignmentConfig, gauge_distance
from .moments import PairMomentTable, hermite_pair_moment, sigma_matrix
from .networks import PolyNetwork, rotate_network
from .relaxation import (
    Poly,
    SolverConfig,
    Infeasible,
    encode_lowrank,
    pseudo_expect,
    solve,
)
from .tensor_ring import RecoveryReport, find_combo, gauge_fix
from .tensors import (
    SymTensor,
    multiplicity,
    paired_contraction,
    sorted_multi_indices,
)

__all__ = [
    "LRConfig",
    "f_vector",
    "factorize",
    "exact_lowrank_pair_moments",
    "extend_tail_lr",
    "verify_assumption_lr",
    "hermite_network_pair_moments",
    "pair_inner",
]


@dataclass
class LRConfig:
    r: int
    omega: int = 3
    ell: int = 1
    backend: str = "local"  # sos | local | hybrid
    degree: Optional[int] = None
    restarts: int = 20
    tol: float = 1e-10
    rng_seed: int = 0
    sigma_mode: str = "gaussian"  # gaussian | identity | rotation_invariant
    sigma_scale: float = 1.0  # rotation-invariant degree-2*omega factor
    kappa: float = 0.01
    eta: float = 0.0
    solver: SolverConfig = field(default_factory=SolverConfig)

    def __post_init__(self):
        if self.omega % 2 == 0:
            raise UsageError("the factorization path needs odd omega")


def f_vector(T) -> np.ndarray:
    """Paired-index contraction of an odd-order symmetric tensor to R^r."""
    if isinstance(T, SymTensor):
        T = T.to_dense()
    T = np.asarray(T, dtype=float)
    if T.ndim % 2 == 0:
        raise UsageError("f_vector needs an odd-order tensor")
    return paired_contraction(T)


def pair_inner(va, vb, omega: int, mode: str = "gaussian", scale: float = 1.0):
    """<v^{x omega}, w^{x omega}>_Sigma for the supported Sigma modes.

    gaussian: the Gaussian pair moment E<v,g>^omega <w,g>^omega;
    identity: plain Frobenius product <v,w>^omega;
    rotation_invariant: the Gaussian value times the degree-2*omega radial scale.
    """
    if mode == "identity":
        return float(np.dot(va, vb)) ** omega
    val = hermite_pair_moment(va, vb, omega)
    if mode == "rotation_invariant":
        val *= scale
    return val


def _network_pair_table(net: PolyNetwork, mode: str, scale: float) -> np.ndarray:
    d = net.d
    S = np.zeros((d, d))
    for a in range(d):
        for b in range(a, d):
            total = 0.0
            for t in range(net.ell):
                for tp in range(net.ell):
                    total += pair_inner(
                        net.components[a, t], net.components[b, tp],
                        net.omega, mode, scale,
                    )
            S[a, b] = S[b, a] = total
    return S


def exact_lowrank_pair_moments(
    net: PolyNetwork, mode: str = "gaussian", scale: float = 1.0
) -> PairMomentTable:
    """Exact pair moments E[y_a y_b] of a low-rank network's pushforward."""
    if net.kind != "lowrank":
        raise UsageError("pair-moment tables need a low-rank network")
    return PairMomentTable(S=_network_pair_table(net, mode, scale), eta=0.0)


def hermite_network_pair_moments(
    coeffs: np.ndarray, units: np.ndarray, omega: int
) -> PairMomentTable:
    """Pair moments of a Hermite-activation network with unit directions.

    S_ab = sum_{t,t'} lambda_{a,t} lambda_{b,t'} <v_{a,t}, v_{b,t'}>^omega,
    which equals the plain Frobenius product <T_a, T_b> for
    T_a = sum_t lambda_{a,t} v_{a,t}^{x omega}; usable directly as
    identity-Sigma factorization input.
    """
    coeffs = np.asarray(coeffs, dtype=float)
    units = np.asarray(units, dtype=float)
    d, ell, r = units.shape
    if coeffs.shape != (d, ell):
        raise UsageError("coefficient array must be (d, ell)")
    norms = np.linalg.norm(units, axis=2)
    if np.max(np.abs(norms - 1.0)) > 1e-8:
        raise UsageError("Hermite directions must be unit vectors")
    dots = np.einsum("ati,bsi->atbs", units, units)
    S = np.einsum("at,bs,atbs->ab", coeffs, coeffs, dots**omega)
    return PairMomentTable(S=0.5 * (S + S.T), eta=0.0)


# ---------------------------------------------------------------------------
# local backend
# ---------------------------------------------------------------------------

def _fit_components(
    S: np.ndarray, cfg: LRConfig, rng: np.random.Generator
) -> tuple[np.ndarray, float]:
    d = S.shape[0]
    r, ell, omega = cfg.r, cfg.ell, cfg.omega
    n = d * ell * r
    idx_pairs = [(a, b) for a in range(d) for b in range(a, d)]

    def fun(x):
        comps = x.reshape(d, ell, r)
        res = np.empty(len(idx_pairs))
        for k, (a, b) in enumerate(idx_pairs):
            total = 0.0
            for t in range(ell):
                for tp in range(ell):
                    total += pair_inner(
                        comps[a, t], comps[b, tp], omega,
                        cfg.sigma_mode, cfg.sigma_scale,
                    )
            res[k] = total - S[a, b]
        return res

    scale = (float(np.max(np.abs(np.diag(S)))) + 1e-12) ** (1.0 / (2 * omega))
    best_x, best_res = None, np.inf
    for _ in range(cfg.restarts):
        x0 = scale * rng.standard_normal(n) / math.sqrt(r)
        sol = least_squares(fun, x0, method="lm", xtol=1e-15, ftol=1e-15)
        res = float(np.max(np.abs(sol.fun)))
        if res < best_res:
            best_res, best_x = res, sol.x
        if best_res <= cfg.tol:
            break
    threshold = max(1e3 * cfg.eta, 1e-6)
    if best_res > threshold:
        raise ConvergenceError(
            f"component fit residual {best_res:.3e} above {threshold:.3e}"
        )
    return best_x.reshape(d, ell, r), best_res


def _canonicalize(net: PolyNetwork, rng_seed: int) -> PolyNetwork:
    """Gauge-fix a lowrank network through its F_a = f_a f_a^T matrices and
    resolve the global +-Id ambiguity by the argmax anchor sign rule."""
    d, r = net.d, net.r
    F = np.zeros((d, r, r))
    for a in range(d):
        f = f_vector(net.unit_tensor(a))
        F[a] = np.outer(f, f)
    Ghat = np.einsum("aij,bij->ab", F, F)
    qnet = PolyNetwork(kind="quadratic", r=r, d=d, Q=F)
    m = r * (r + 1) // 2
    if d < m:
        return net  # cannot break the gauge; report as-is
    last = None
    for attempt in range(5):
        try:
            combo = find_combo(Ghat, r, rng_seed=rng_seed * 100 + attempt)
            _, rot = gauge_fix(qnet, combo.lam, combo.mu)
            last = rot
            break
        except DegeneracyError:
            continue
    if last is None:
        return net
    out = rotate_network(net, last.V)
    # +-Id: make the anchor entry (largest magnitude) positive
    tens = out.unit_tensors()
    flat = np.abs(tens).reshape(d, -1)
    a_star = int(np.argmax(np.max(flat, axis=1)))
    i_star = int(np.argmax(flat[a_star]))
    if tens.reshape(d, -1)[a_star, i_star] < 0:
        out = rotate_network(out, -np.eye(r))
    return out


# ---------------------------------------------------------------------------
# sos backend (two-stage pseudoexpectation pipeline)
# ---------------------------------------------------------------------------

def _sos_factorize(S: np.ndarray, cfg: LRConfig):
    r, omega, ell = cfg.r, cfg.omega, cfg.ell
    d = S.shape[0]
    if r > 2 or d > 4 or omega != 3:
        raise ResourceError(
            "the relaxation path is capped at r <= 2, d <= 4, omega = 3"
        )
    sidx = sorted_multi_indices(r, omega)
    m = len(sidx)
    if d < m:
        raise UsageError(f"relaxation path needs d >= C(r+omega-1,omega) = {m}")
    sig = sigma_matrix(r, omega)
    Sigma_sym = sig.Sigma_sym if cfg.sigma_mode != "identity" else _identity_sigma_sym(r, omega)
    # scale so the tensor entries are O(1) (conic solver conditioning)
    sc = 1.0 / math.sqrt(float(np.max(np.diag(S))) + 1e-300)
    S = S * sc**2
    eta_sc = cfg.eta * sc**2
    R = (float(np.max(np.diag(S))) + 1e-9) ** 0.5 / min(
        1.0, np.sqrt(float(np.min(np.linalg.eigvalsh(Sigma_sym))))
    )
    w_sig, U_sig = np.linalg.eigh(Sigma_sym)
    B = sig.D @ ((U_sig * np.sqrt(np.clip(w_sig, 0.0, None))) @ U_sig.T)
    # quick local fit on the scaled table: seeds both solver stages and pins
    # the sign of the mu combination below
    fitnet: Optional[PolyNetwork] = None
    try:
        rng = np.random.Generator(
            np.random.Philox(key=(cfg.rng_seed & (2**64 - 1), 29))
        )
        comps, _ = _fit_components(S, replace(cfg, eta=eta_sc), rng)
        fitnet = PolyNetwork(
            kind="lowrank", r=r, d=d, omega=omega, ell=ell, components=comps
        )
    except ConvergenceError:
        fitnet = None

    def _solve_stage(prog, warm):
        solver_cfg = replace(cfg.solver, warm_start=warm)
        if warm is None:
            solver_cfg = replace(
                solver_cfg, max_iter=min(solver_cfg.max_iter, 10000)
            )
        else:
            # a feasible warm point needs no tie-break; the trace objective
            # would only drag the iterates away from it
            solver_cfg = replace(solver_cfg, trace_weight=0.0)
        return solve(prog, solver_cfg)

    stage1 = encode_lowrank(
        r, omega, ell, S, Sigma_sym, sig.D, R=R, kappa=cfg.kappa,
        eta=eta_sc, degree=cfg.degree,
    )
    warm1 = _warm_point_lr(stage1, fitnet, B, eta_sc) if fitnet is not None else None
    if fitnet is not None and warm1 is None:
        # a tight moment fit violating the encoded caps certifies that the
        # instance is too degenerate for this program; a cold solve cannot
        # succeed either
        raise ConvergenceError(
            "instance violates non-degeneracy caps of the relaxation"
        )
    pe1 = _solve_stage(stage1, warm1)
    if isinstance(pe1, Infeasible):
        raise ConvergenceError("stage-1 relaxation infeasible")
    tvar = stage1.meta["tvar"]
    fcoef = _f_coefficients(r, omega, sidx)

    def f_poly(a, i):
        p = Poly()
        for u, c in fcoef[i].items():
            p = p + c * Poly.var(tvar[(a, u)])
        return p

    Ghat = np.zeros((d, d))
    for a in range(d):
        for b in range(a, d):
            p = Poly()
            for i in range(r):
                for j in range(r):
                    p = p + f_poly(a, i) * f_poly(a, j) * f_poly(b, i) * f_poly(b, j)
            Ghat[a, b] = Ghat[b, a] = pseudo_expect(pe1, p)
    combo = find_combo(Ghat, r, rng_seed=cfg.rng_seed)
    lam, mu = combo.lam, combo.mu
    # the (1,1) entry of the gauge-fixed mu combination of F_a = f_a f_a^T is
    # sign-invariant: flip mu when a local fit pins it negative, otherwise
    # the stage-2 families are infeasible by construction
    rot_net: Optional[PolyNetwork] = None
    if fitnet is not None:
        F = np.zeros((d, r, r))
        for a in range(d):
            f = f_vector(fitnet.unit_tensor(a))
            F[a] = np.outer(f, f)
        Flam = np.einsum("a,aij->ij", lam, F)
        Fmu = np.einsum("a,aij->ij", mu, F)
        _, V = np.linalg.eigh(Flam)
        corner = float(np.sign((V.T @ Fmu @ V)[0, 0]) or 1.0)
        if corner < 0:
            mu = -mu
            Fmu = -Fmu
        try:
            _, grot = gauge_fix(
                PolyNetwork(kind="quadratic", r=r, d=d, Q=F), lam, mu
            )
            rot_net = rotate_network(fitnet, grot)
        except DegeneracyError:
            rot_net = None

    def _stage2(mu_eff):
        return encode_lowrank(
            r, omega, ell, S, Sigma_sym, sig.D, R=R, kappa=cfg.kappa,
            eta=eta_sc, degree=cfg.degree, lam_mu=(lam, mu_eff),
        )

    stage2 = _stage2(mu)
    warm2 = _warm_point_lr(stage2, rot_net, B, eta_sc) if rot_net is not None else None
    pe2 = _solve_stage(stage2, warm2)
    if isinstance(pe2, Infeasible) and fitnet is None:
        # without a fit the mu sign is a coin flip; retry the other branch
        mu = -mu
        stage2 = _stage2(mu)
        pe2 = _solve_stage(stage2, None)
    if isinstance(pe2, Infeasible):
        raise ConvergenceError("stage-2 relaxation infeasible")
    tvar2 = stage2.meta["tvar"]
    mags = np.zeros((d, m))
    for a in range(d):
        for u in range(m):
            v = Poly.var(tvar2[(a, u)])
            mags[a, u] = math.sqrt(max(0.0, pseudo_expect(pe2, v * v)))
    a_star, u_star = np.unravel_index(int(np.argmax(mags)), mags.shape)
    anchor = Poly.var(tvar2[(a_star, u_star)])
    signs = np.ones((d, m))
    for a in range(d):
        for u in range(m):
            corr = pseudo_expect(pe2, Poly.var(tvar2[(a, u)]) * anchor)
            signs[a, u] = 1.0 if corr >= 0 else -1.0
    entries = signs * mags / sc
    tensors = np.zeros((d,) + (r,) * omega)
    for a in range(d):
        dense = np.zeros((r,) * omega)
        for u, tup in enumerate(sidx):
            for perm in set(itertools.permutations(tup)):
                dense[perm] = entries[a, u]
        tensors[a] = dense
    diag = {
        "stage1_iterations": pe1.iterations,
        "stage2_iterations": pe2.iterations,
        "stage1_residual": pe1.residual,
        "stage2_residual": pe2.residual,
        "magnitudes": mags,
    }
    return tensors, diag


def _warm_point_lr(prog, net: PolyNetwork, B: np.ndarray, eta: float):
    """Feasible assignment seeding the conic solver from a component fit.

    Packs the sorted tensor entries, the components, and the least-norm left
    inverses L = pinv(M) and P = pinv(M B); returns None when the assignment
    fails the program's own constraints.
    """
    meta = prog.meta
    d, m, r, ell = meta["d"], meta["m"], meta["r"], meta["ell"]
    sidx, tvar, vvar = meta["sidx"], meta["tvar"], meta["vvar"]
    lvar, pvar = meta["lvar"], meta["pvar"]
    point = np.zeros(prog.nvars)
    M = np.zeros((d, m))
    for a in range(d):
        tens = net.unit_tensor(a)
        for u, tup in enumerate(sidx):
            val = float(tens[tup])
            point[tvar[(a, u)]] = val
            M[a, u] = val
        for t in range(ell):
            for i in range(r):
                point[vvar[(a, t, i)]] = net.components[a, t, i]
    L = np.linalg.pinv(M)
    P = np.linalg.pinv(M @ B)
    for k in range(m):
        for a in range(d):
            point[lvar[(k, a)]] = L[k, a]
            point[pvar[(k, a)]] = P[k, a]
    if prog.check_point(point, tol=1e-9) > max(eta, 1e-7):
        return None
    return point


def _identity_sigma_sym(r: int, omega: int) -> np.ndarray:
    """Sigma_sym for the identity-Sigma mode: diag(1/|i|) on sorted indices,
    making vec^T Sigma vec the plain Frobenius product of symmetric tensors."""
    sidx = sorted_multi_indices(r, omega)
    return np.diag([1.0 / multiplicity(t) for t in sidx])


def _f_coefficients(r: int, omega: int, sidx) -> list[dict[int, float]]:
    k = (omega - 1) // 2
    pos = {tup: u for u, tup in enumerate(sidx)}
    out: list[dict[int, float]] = [dict() for _ in range(r)]
    for i in range(r):
        for js in itertools.product(range(r), repeat=k):
            idx = tuple(sorted(sum(((j, j) for j in js), ()) + (i,)))
            u = pos[idx]
            out[i][u] = out[i].get(u, 0.0) + 1.0
    return out


def components_from_tensors(
    tensors: np.ndarray, ell: int, omega: int, rng_seed: int = 0, restarts: int = 12
) -> np.ndarray:
    """Per-unit rank-ell fit v_{a,t} minimizing ||sum_t v_t^{x omega} - T_a||_F."""
    tensors = np.asarray(tensors, dtype=float)
    d = tensors.shape[0]
    r = tensors.shape[1]
    rng = np.random.Generator(np.random.Philox(key=(rng_seed & (2**64 - 1), 41)))
    comps = np.zeros((d, ell, r))
    for a in range(d):
        target = tensors[a].reshape(-1)

        def fun(x):
            cs = x.reshape(ell, r)
            recon = np.zeros_like(target)
            for t in range(ell):
                out = cs[t]
                for _ in range(omega - 1):
                    out = np.multiply.outer(out, cs[t])
                recon = recon + out.reshape(-1)
            return recon - target

        scale = float(np.max(np.abs(target))) ** (1.0 / omega) + 1e-9
        best_x, best_res = None, np.inf
        for _ in range(restarts):
            x0 = scale * rng.standard_normal(ell * r)
            sol = least_squares(fun, x0, method="lm", xtol=1e-15, ftol=1e-15)
            res = float(np.max(np.abs(sol.fun)))
            if res < best_res:
                best_res, best_x = res, sol.x
        comps[a] = best_x.reshape(ell, r)
    return comps


def factorize(
    S: np.ndarray,
    config: LRConfig,
    truth: Optional[PolyNetwork] = None,
) -> RecoveryReport:
    """Recover a rank-ell network from pairwise Sigma-moments.

    local: damped least squares on components with restarts, gauge-fixed via
    the F_a machinery and the anchor sign rule.  sos: two-stage relaxation —
    stage 1 unconstrained-gauge, Gram of F's queried from the
    pseudoexpectation, find_combo, stage 2 with the gauge families, entries
    from square-root magnitudes and pairwise signs.  hybrid: local refinement
    of the sos tensors.
    """
    S = np.asarray(S, dtype=float)
    d = S.shape[0]
    cfg = config
    diag: dict = {"backend": cfg.backend}
    if cfg.backend in ("sos", "hybrid"):
        tensors, sos_diag = _sos_factorize(S, cfg)
        diag.update(sos_diag)
        comps = components_from_tensors(tensors, cfg.ell, cfg.omega, cfg.rng_seed)
        net = PolyNetwork(
            kind="lowrank", r=cfg.r, d=d, omega=cfg.omega, ell=cfg.ell,
            components=comps,
        )
        if cfg.backend == "hybrid":
            rng = np.random.Generator(np.random.Philox(key=(cfg.rng_seed, 42)))
            comps, res = _fit_components(S, cfg, rng)
            net = PolyNetwork(
                kind="lowrank", r=cfg.r, d=d, omega=cfg.omega, ell=cfg.ell,
                components=comps,
            )
            net = _canonicalize(net, cfg.rng_seed)
    else:
        rng = np.random.Generator(np.random.Philox(key=(cfg.rng_seed, 42)))
        comps, res = _fit_components(S, cfg, rng)
        net = PolyNetwork(
            kind="lowrank", r=cfg.r, d=d, omega=cfg.omega, ell=cfg.ell,
            components=comps,
        )
        net = _canonicalize(net, cfg.rng_seed)
    model = _network_pair_table(net, cfg.sigma_mode, cfg.sigma_scale)
    res_S = float(np.max(np.abs(model - S)))
    gd = None
    if truth is not None:
        gd, _ = gauge_distance(net, truth, AlignmentConfig(rng_seed=cfg.rng_seed))
    return RecoveryReport(
        network=net, residual_S=res_S, residual_T=0.0, gauge_dist=gd,
        diagnostics=diag,
    )


def extend_tail_lr(
    S: np.ndarray,
    Sigma_sym: np.ndarray,
    head_tensors: np.ndarray,
    d: int,
) -> np.ndarray:
    """Tail tensors by per-unit least squares in the Sigma inner product.

    head_tensors: (d', r, ..., r) recovered units; returns the (d - d') tail
    as dense symmetric tensors solving argmin sum_a (S_ab - <T_a, T>_Sigma)^2.
    """
    S = np.asarray(S, dtype=float)
    head_tensors = np.asarray(head_tensors, dtype=float)
    dp = head_tensors.shape[0]
    r = head_tensors.shape[1]
    omega = head_tensors.ndim - 1
    sidx = sorted_multi_indices(r, omega)
    m = len(sidx)
    mult = np.array([multiplicity(t) for t in sidx])
    if dp < m:
        raise UsageError(f"head must have at least C(r+omega-1,omega) = {m} units")
    # design row a: <T_a, T>_Sigma = sum_v [sum_u mult_u Ta_u Sig_uv mult_v] T_v
    H = np.zeros((dp, m))
    for a in range(dp):
        ta = np.array([head_tensors[a][tup] for tup in sidx])
        H[a] = (mult * ta) @ Sigma_sym * mult
    svals = np.linalg.svd(H, compute_uv=False)
    if svals[-1] < 1e-10 * max(1.0, svals[0]):
        raise DegeneracyError("head design matrix is rank deficient")
    coef, *_ = np.linalg.lstsq(H, S[:dp, dp:d], rcond=None)  # (m, d-d')
    out = np.zeros((d - dp,) + (r,) * omega)
    for b in range(d - dp):
        dense = np.zeros((r,) * omega)
        for u, tup in enumerate(sidx):
            for perm in set(itertools.permutations(tup)):
                dense[perm] = coef[u, b]
        out[b] = dense
    return out


@dataclass
class AssumptionReportLR:
    radius: float
    sigma_min_M: float
    sigma_min_H: float
    sigma_min_K: Optional[float] = None
    k_skipped: Optional[str] = None
    predicted_psi: Optional[float] = None
    predicted_kappa: Optional[float] = None
    flag_psi: Optional[bool] = None
    flag_kappa: Optional[bool] = None


@dataclass
class VerifyLimits:
    max_cols: int = 20000


def verify_assumption_lr(
    net: PolyNetwork, limits: Optional[VerifyLimits] = None
) -> AssumptionReportLR:
    """Condition-number diagnostics for low-rank networks.

    M*: rows are sorted-index flattenings of T_a (multiplicity-weighted so the
    Gram matches the Frobenius product); H: rows (f_a)_i (f_a)_j over i <= j;
    K^{(e)}: rows are sorted-index flattenings of w_a^{x e} for the
    concatenated component vector w_a, e = omega*(ell+1), computed only when
    the column count stays under limits.max_cols.
    """
    if net.kind != "lowrank":
        raise UsageError("verify_assumption_lr needs a lowrank network")
    limits = limits or VerifyLimits()
    r, d, omega, ell = net.r, net.d, net.omega, net.ell
    sidx = sorted_multi_indices(r, omega)
    m = len(sidx)
    mult = np.sqrt(np.array([multiplicity(t) for t in sidx], dtype=float))
    M = np.zeros((d, m))
    tensors = net.unit_tensors()
    for a in range(d):
        M[a] = mult * np.array([tensors[a][tup] for tup in sidx])
    svals = np.linalg.svd(M, compute_uv=False)
    sigma_min_M = float(svals[min(d, m) - 1])

    mh = r * (r + 1) // 2
    H = np.zeros((d, mh))
    for a in range(d):
        f = f_vector(tensors[a])
        k = 0
        for i in range(r):
            for j in range(i, r):
                H[a, k] = f[i] * f[j]
                k += 1
    hs = np.linalg.svd(H, compute_uv=False)
    sigma_min_H = float(hs[min(d, mh) - 1])

    rep = AssumptionReportLR(
        radius=net.radius, sigma_min_M=sigma_min_M, sigma_min_H=sigma_min_H
    )
    e = omega * (ell + 1)
    ncols = math.comb(r * ell + e - 1, e)
    if ncols > limits.max_cols:
        rep.k_skipped = f"K^({e}) needs {ncols} columns (> {limits.max_cols}); skipped"
    else:
        kidx = sorted_multi_indices(r * ell, e)
        kmult = np.sqrt(np.array([multiplicity(t) for t in kidx], dtype=float))
        K = np.zeros((d, len(kidx)))
        for a in range(d):
            w = net.components[a].reshape(-1)
            for u, tup in enumerate(kidx):
                K[a, u] = kmult[u] * np.prod(w[list(tup)])
        ks = np.linalg.svd(K, compute_uv=False)
        rep.sigma_min_K = float(ks[min(d, len(kidx)) - 1]) if d >= 1 else 0.0
        if d < len(kidx):
            rep.sigma_min_K = float(ks[d - 1])
    if net.smoothing_rho is not None:
        rho = net.smoothing_rho
        rep.predicted_psi = (rho / (r * omega)) ** omega
        rep.predicted_kappa = math.sqrt(d * ell) * (rho**2 * omega / r) ** (omega / 2)
        rep.flag_psi = sigma_min_H >= 0.01 * rep.predicted_psi
        rep.flag_kappa = sigma_min_M >= 0.01 * rep.predicted_kappa
    return rep
