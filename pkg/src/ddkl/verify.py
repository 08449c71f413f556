"""Executable invariant suite behind ``ddkl verify``.

Every check reports the measured error next to its tolerance.  Sample
sizes are the ones the invariants are stated at, so a full run takes
tens of seconds; ``quick=True`` shrinks the Monte-Carlo checks.
"""

from __future__ import annotations

import math
import time
from dataclasses import asdict, dataclass

import numpy as np

from . import denoiser as dn
from . import gff, kernels, multires, odeint, samplers, schedules
from .covariance import IDENTITY, DenseCovariance
from .kernels import VEProcess, VPProcess

MODULES = ("schedules", "odeint", "gff", "kernels", "samplers", "multires", "denoiser", "cli")


@dataclass
class CheckResult:
    module: str
    name: str
    measured: float
    tolerance: float
    passed: bool
    seconds: float = 0.0

    def as_dict(self) -> dict:
        return asdict(self)


class _Suite:
    def __init__(self, module: str):
        self.module = module
        self.results: list[CheckResult] = []
        self._t = time.perf_counter()

    def le(self, name: str, measured: float, tol: float):
        self._add(name, measured, tol, bool(measured <= tol))

    def inside(self, name: str, value: float, lo: float, hi: float):
        # measured is the signed distance outside the interval (0 when inside)
        out = max(lo - value, value - hi, 0.0)
        self._add(f"{name} [{value:.6g} in {lo:g}..{hi:g}]", out, 0.0, lo <= value <= hi)

    def true(self, name: str, ok: bool):
        self._add(name, 0.0 if ok else 1.0, 0.0, bool(ok))

    def _add(self, name, measured, tol, ok):
        now = time.perf_counter()
        self.results.append(CheckResult(self.module, name, float(measured), float(tol), ok, now - self._t))
        self._t = now


def _rel_fro(a, b) -> float:
    return float(np.linalg.norm(a - b) / np.linalg.norm(b))


# --------------------------------------------------------------------------


def check_schedules(rng, quick=False):
    s = _Suite("schedules")
    sch = schedules.make_linear_beta(1000, 1e-4, 0.02)
    ab = sch.alpha_bars
    s.true("alpha_bar strictly decreasing", bool(np.all(np.diff(ab) < 0)))
    prev = np.concatenate([[1.0], ab[:-1]])
    s.le("alpha_bar recursion", float(np.abs(ab - (1 - sch.betas) * prev).max()), 1e-15)
    bt = np.array([sch.beta_tilde(t) for t in range(2, 1001)])
    s.true("0 < beta_tilde < beta for t >= 2", bool(np.all((bt > 0) & (bt < sch.betas[1:]))))
    ve = schedules.make_geometric_sigma(0.01, 20.0, 207)
    s.le("geometric ratio constant", float(np.abs(ve.sigmas[1:] / ve.sigmas[:-1] - ve.gamma).max()), 1e-12)
    g = schedules.tune_gamma(3072)
    s.le("tune_gamma is a root", abs(schedules.radial_overlap(g, 3072) - 0.5), 1e-9)
    s.inside("tune_gamma(3072)", g, 1.035, 1.045)
    s.true("tune_num_scales(20, 0.01, 1.0376) == 207", schedules.tune_num_scales(20, 0.01, 1.0376) == 207)
    s.true("tune_num_scales(50, 0.01, 1.0376) == 232", schedules.tune_num_scales(50, 0.01, 1.0376) == 232)
    s.true("tune_num_scales(s, s*g, g) == 2", schedules.tune_num_scales(1.0 * 1.3, 1.0, 1.3) == 2)
    # closed form vs explicit recursion
    gam, eps, smin, T = 1.0376, 6.2e-6, 0.01, 5
    a = eps / smin**2
    v = gam**2
    for _ in range(T):
        v = (1 - a) ** 2 * v + 2 * a
    s.le("terminal variance closed form vs recursion", abs(v - schedules.langevin_terminal_variance(gam, eps, smin, T)), 1e-10)
    e = schedules.tune_langevin_eps(gam, smin, T)
    s.inside("isotropic Langevin eps (T=5)", e, 5e-6, 8e-6)
    return s.results


def check_odeint(rng, quick=False):
    s = _Suite("odeint")
    f = lambda x, t, p: 2 * x * t  # noqa: E731
    eu = odeint.solve(odeint.IVP(f, np.array([3.0]), 0, 1), odeint.SolverConfig("euler", 0.25))[0]
    s.le("Euler h=0.25 on 2xt from 3 -> 5.8008", abs(round(eu, 4) - 5.8008), 0.0)
    rk = odeint.solve(odeint.IVP(f, np.array([2.0]), 0, 1), odeint.SolverConfig("rk4", 0.05))[0]
    s.le("RK4 h=0.05 on 2xt from 2 -> 5.436", abs(rk - 5.436), 1e-3)
    ivp = odeint.IVP(lambda x, t, p: np.sin(x) + t, np.array([0.3, -1.2]), 0, 1)
    cfg = odeint.SolverConfig("rk4", 1e-3)
    x1 = odeint.solve(ivp, cfg)
    back = odeint.solve(odeint.IVP(ivp.f, x1, 1, 0), cfg)
    s.le("forward/backward reversibility", float(np.abs(back - ivp.x0).max()), 1e-6)
    exact = 3 * math.e
    for method, order in (("euler", 1), ("rk4", 4)):
        hs = np.array([0.1, 0.05, 0.025, 0.0125])
        errs = [abs(odeint.solve(odeint.IVP(f, np.array([3.0]), 0, 1), odeint.SolverConfig(method, h))[0] - exact) for h in hs]
        slope = np.polyfit(np.log(hs), np.log(errs), 1)[0]
        s.le(f"{method} convergence order {slope:.2f} vs {order}", abs(slope - order), 0.3)
    th = 0.7
    lin = lambda x, t, p: p[0] * x  # noqa: E731
    g, gx0 = odeint.adjoint_gradient(odeint.IVP(lin, np.array([1.0]), 0, 1, np.array([th])), np.array([1.0]), cfg)
    d = 1e-5
    fd = (odeint.solve(odeint.IVP(lin, np.array([1.0]), 0, 1, np.array([th + d])), cfg)[0]
          - odeint.solve(odeint.IVP(lin, np.array([1.0]), 0, 1, np.array([th - d])), cfg)[0]) / (2 * d)
    s.le("adjoint dL/dtheta vs finite difference (rel)", abs(g[0] - fd) / abs(fd), 1e-4)
    s.le("adjoint dL/dx0 vs e^theta", abs(gx0[0] - math.exp(th)), 1e-4)
    A = np.array([[0.3, -0.5], [0.2, -0.1]])
    _, dlp = odeint.cnf_logdensity(lambda v, t, p: A @ v, np.array([0.4, 0.1]), odeint.SolverConfig("rk4", 1e-2))
    s.le("CNF linear flow delta logp = -Tr A", abs(dlp + np.trace(A)), 1e-8)
    x = np.array([0.5, -0.3])
    lp = odeint.cnf_log_prob(lambda v, t, p: np.zeros_like(v), x, cfg)
    s.le("identity flow keeps base density", abs(lp - odeint.standard_normal_logpdf(x)), 0.0)
    return s.results


def check_gff(rng, quick=False):
    s = _Suite("gff")
    for n in (2, 4, 8):
        c = gff.build(n, 1.0)
        D = gff.dense_sigma(c)
        basis = np.eye(n * n).reshape(-1, n, n)
        ok = max(float(np.abs(c.apply_sigma(b).ravel() - D[:, j]).max()) for j, b in enumerate(basis))
        s.le(f"operator/dense agreement n={n}", ok, 1e-12)
    c = gff.build(8, 1.0)
    D = gff.dense_sigma(c)
    R = gff.dense_sqrt_sigma(c)
    s.le("sqrt(S) sqrt(S)^T = S (dense)", float(np.abs(R @ R.T - D).max()), 1e-10)
    s.true("dense Sigma symmetric positive definite", bool(np.abs(D - D.T).max() < 1e-12 and np.linalg.eigvalsh(D).min() > 0))
    s.le("spectral vs dense log-det (n=8)", abs(gff.flow_logdet_term(c) - 0.5 * np.linalg.slogdet(D)[1]), 1e-6)
    s.le("gamma=0 gives identity", float(np.abs(gff.dense_sigma(gff.build(8, 0.0)) - np.eye(64)).max()), 1e-10)
    draws = 20_000 if quick else 200_000
    g = gff.sample(c, rng, draws).reshape(draws, -1)
    emp = g.T @ g / draws
    s.le(f"empirical covariance vs dense ({draws} draws, rel Frobenius)", _rel_fro(emp, D), 0.05)
    var = g.var(axis=0)
    s.inside("min per-pixel variance", float(var.min()), 0.95, 1.05)
    s.inside("max per-pixel variance", float(var.max()), 0.95, 1.05)
    w = c.apply_inv_sqrt_sigma(g.reshape(draws, 8, 8)).reshape(draws, -1)
    # sampling noise of a d-dim empirical identity is about sqrt((d + 1) / N) in relative Frobenius
    s.le("whitened samples have identity covariance", _rel_fro(w.T @ w / draws, np.eye(64)),
         max(0.05, 3 * math.sqrt(65 / draws)))
    n_var = 20_000 if quick else 100_000
    for n in (16, 32):
        v = gff.pixel_variance(gff.build(n, 1.0), rng, n_var)
        s.inside(f"min per-pixel variance n={n}", float(v.min()), 0.95, 1.05)
        s.inside(f"max per-pixel variance n={n}", float(v.max()), 0.95, 1.05)
    rho = [gff.lag1_autocorrelation(gff.sample(gff.build(16, ge), rng, 2000)) for ge in (0.0, 0.5, 1.0, 2.0)]
    s.true(f"lag-1 autocorrelation nondecreasing in gamma {np.round(rho, 3).tolist()}", bool(np.all(np.diff(rho) >= -1e-3)))
    return s.results


def check_kernels(rng, quick=False):
    s = _Suite("kernels")
    sch = schedules.make_linear_beta(1000, 1e-4, 0.02)
    proc = VPProcess(sch)
    n = 10_000 if quick else 100_000
    for label, cov in (("scalar", IDENTITY), ("gff 8x8", gff.build(8, 1.0))):
        p = VPProcess(schedules.make_linear_beta(10, 1e-3, 0.2), cov)
        shape = (n,) if cov is IDENTITY else (n // 10, 8, 8)
        x0 = np.ones(shape)
        x = x0
        for t in range(1, 11):
            x = kernels.forward_transition(p, x, t, rng.standard_normal(shape))
        ab = p.schedule.alpha_bar(10)
        m = float(x.mean())
        v = float(x.var())
        se_m, se_v = math.sqrt((1 - ab) / x.size) / math.sqrt(ab), math.sqrt(2 / x.size)
        s.le(f"{label}: composed transitions mean (rel)", abs(m - math.sqrt(ab)) / math.sqrt(ab), max(0.02, 4 * se_m))
        s.le(f"{label}: composed transitions variance (rel)", abs(v - (1 - ab)) / (1 - ab), max(0.02, 4 * se_v))
    # score-noise identity
    c = gff.build(8, 1.0)
    pn = VPProcess(sch, c)
    x0 = rng.standard_normal((4, 8, 8))
    e = rng.standard_normal((4, 8, 8))
    xt = kernels.forward_marginal(pn, x0, 500, e)
    sc = kernels.score(pn, xt, x0, 500)
    s.le("score-noise identity (GFF)", float(np.abs(sc + c.apply_inv_sqrt_sigma(e) / math.sqrt(1 - sch.alpha_bar(500))).max()), 1e-10)
    # posterior two forms over random tuples
    worst = 0.0
    for _ in range(1000):
        b = np.sort(rng.uniform(1e-4, 0.3, 2))
        ps = VPProcess(schedules.DiscreteVPSchedule.from_betas(b))
        x0, e = rng.standard_normal(2)
        xt = kernels.forward_marginal(ps, x0, 2, e)
        long = kernels.posterior(ps, xt, x0, 2).mu_tilde
        short = kernels.posterior_mean_from_eps(ps, xt, e, 2)
        worst = max(worst, abs(float(long - short)))
    s.le("posterior long vs simplified form (1000 tuples)", worst, 1e-8)
    # DDIM oracle exactness over 1000 steps
    x0 = rng.standard_normal(16)
    e = rng.standard_normal(16)
    x = kernels.forward_marginal(proc, x0, 1000, e)
    err = 0.0
    for t in range(1000, 1, -1):
        x = samplers.ddim_step(proc, x, e, t, t - 1)
        err = max(err, float(np.abs(x - kernels.forward_marginal(proc, x0, t - 1, e)).max()))
    s.le("DDIM oracle exactness along 1000 steps", err, 1e-8)
    # NI with identity reproduces isotropic exactly
    ni = VPProcess(sch, DenseCovariance(np.eye(16)))
    a1 = kernels.forward_marginal(proc, x0, 300, e)
    a2 = kernels.forward_marginal(ni, x0, 300, e)
    s.le("NI with identity matrix vs isotropic", float(np.abs(a1 - a2).max()), 1e-12)
    s.true("IDENTITY operator path equals isotropic formula bit-for-bit",
           bool(np.array_equal(a1, math.sqrt(sch.alpha_bar(300)) * x0 + math.sqrt(1 - sch.alpha_bar(300)) * e)))
    # DDIM marginal induction by Monte Carlo
    x0 = 0.7
    t = 400
    xt = kernels.forward_marginal(proc, np.full(n, x0), t, rng.standard_normal(n))
    eps_true = (xt - math.sqrt(sch.alpha_bar(t)) * x0) / math.sqrt(1 - sch.alpha_bar(t))
    xp = samplers.ddim_step(proc, xt, eps_true, t, t - 1)
    abp = sch.alpha_bar(t - 1)
    se = math.sqrt((1 - abp) / n) / (math.sqrt(abp) * x0)
    s.le("DDIM marginal mean (rel)", abs(xp.mean() - math.sqrt(abp) * x0) / (math.sqrt(abp) * x0), max(0.02, 4 * se))
    s.le("DDIM marginal variance (rel)", abs(xp.var() - (1 - abp)) / (1 - abp), max(0.02, 4 * math.sqrt(2 / n)))
    # discrete vs continuous VP, compared in the log domain: -log ᾱ_t vs ∫β
    cs = schedules.ContinuousVPSchedule(0.1, 20.0)
    worst = max(abs(-math.log(sch.alpha_bar(int(round(tt * 1000)))) - schedules.beta_integral(cs, tt))
                / schedules.beta_integral(cs, tt) for tt in np.linspace(0.1, 1.0, 10))
    s.le("discrete -log alpha_bar vs int beta (rel, t >= 0.1)", worst, 0.01)
    return s.results


def _gauss_score(var):
    return lambda x, i: -x / var(i)


def check_samplers(rng, quick=False):
    s = _Suite("samplers")
    sch = schedules.make_linear_beta(1000, 1e-4, 0.02)
    proc = VPProcess(sch)
    x0 = rng.standard_normal(8)
    e = rng.standard_normal(8)
    xL = kernels.forward_marginal(proc, x0, 1000, e)
    spec = samplers.SamplerSpec.evenly("ddim", 1000, 100)
    traj = samplers.sample_vp(proc, lambda x, t: e, spec, None, x_init=xL, trajectory=True)
    err = max(float(np.abs(x - (x0 if t == 0 else kernels.forward_marginal(proc, x0, t, e))).max()) for t, x in traj)
    s.le("DDIM subsequence oracle exactness", err, 1e-8)
    s.true("100-of-1000 subsequence visits 1000, 990, ..., 10, 1",
           [t for t, _ in traj][:-1] == list(range(1000, 0, -10)) + [1])
    x = xL
    for t in range(1000, 0, -1):
        eps_t = (x - math.sqrt(sch.alpha_bar(t)) * x0) / math.sqrt(1 - sch.alpha_bar(t))
        x = samplers.ancestral_step(proc, x, eps_t, t, "tilde", z=np.zeros(8))
    s.le("ancestral chain with true eps and zero noise lands on x0", float(np.abs(x - x0).max()), 1e-6)
    a = samplers.sample_vp(proc, lambda x, t: 0.1 * x, samplers.SamplerSpec.evenly("ancestral_tilde", 1000, 50, 3), (5,))
    b = samplers.sample_vp(proc, lambda x, t: 0.1 * x, samplers.SamplerSpec.evenly("ancestral_tilde", 1000, 50, 3), (5,))
    s.true("ancestral sampler deterministic under seed", bool(np.array_equal(a, b)))
    # VE samplers against analytic 1-D Gaussian scores
    ve = VEProcess(schedules.make_geometric_sigma(0.05, 5.0, 60))
    s0 = 1.0
    var = lambda i: s0**2 + ve.schedule.sigma(i) ** 2  # noqa: E731
    chains = 2000 if quick else 10_000
    eps = 0.05 * ve.schedule.sigma_min**2
    xs = samplers.annealed_langevin(ve, _gauss_score(var), 100, eps, np.random.default_rng(1), shape=(chains,))
    s.le("ALS terminal variance vs target (rel)", abs(xs.var() - var(1)) / var(1), 0.05)
    b2 = samplers.cas_noise_scale(1.0376, 0.062, 1.0)
    s.le("CAS beta = sqrt(1 - 1.0376^2 0.938^2) = 0.229669", abs(b2 - 0.229669), 1e-6)
    # CAS is exactly variance-consistent for a point-mass target
    mu = 0.5
    eps_c = 0.5 * ve.schedule.sigma_min**2
    xc = samplers.consistent_annealed(ve, lambda x, i: -(x - mu) / ve.schedule.sigma(i) ** 2, eps_c,
                                      np.random.default_rng(2), shape=(chains,))
    smin2 = ve.schedule.sigma_min**2
    s.le("CAS terminal variance vs sigma_min-level target (rel)", abs(xc.var() - smin2) / smin2, 0.05)
    return s.results


def check_multires(rng, quick=False):
    s = _Suite("multires")
    s.le("det(unimodular synthesis) = 1", abs(np.linalg.det(multires.synthesis_matrix("unimodular")) - 1), 1e-12)
    s.le("det(haar synthesis) = 2", abs(np.linalg.det(multires.synthesis_matrix("haar")) - 2), 1e-12)
    M = multires.synthesis_matrix("unimodular")[:, :3]
    G = M.T @ M
    s.le("unimodular detail columns orthogonal", float(np.abs(G - np.diag(np.diag(G))).max()), 1e-12)
    for S in (2, 3, 4):
        for kind in multires.KINDS:
            x = rng.standard_normal((3, 16, 16))
            p = multires.decompose(x, S, kind)
            s.le(f"{kind} round trip S={S}", float(np.abs(multires.reconstruct(p) - x).max()), 1e-12)
    x = rng.standard_normal((3, 16, 16))
    p = multires.decompose(x, 3)
    s.le("coarse level = 2x2 block means", float(np.abs(multires.decompose(x, 2).coarsest - multires.block_mean(x)).max()), 1e-12)
    s.le("unimodular log-det total = 0", abs(p.logdet_total), 0.0)
    s.le("haar log-det 48 dims", abs(multires.logdet_term("haar", 48) - 48 * math.log(0.5)), 1e-12)
    s.le("bpd_8bit = bpd + 8", abs(multires.bpd_8bit(-123.4, 10) - multires.bpd(-123.4, 10) - 8.0), 0.0)
    v = multires.reconstruct(multires.sample_noise_pyramid((4000 if quick else 25_000, 8, 8), 3, rng)).var()
    s.inside("synthesized multi-resolution noise variance", float(v), 0.95, 1.05)
    return s.results


def _fd_grad(fun, p, h=1e-5):
    g = np.zeros_like(p)
    for i in range(p.size):
        d = h * (1 + abs(p[i]))
        q = p.copy()
        q[i] += d
        fp = fun(q)
        q[i] -= 2 * d
        g[i] = (fp - fun(q)) / (2 * d)
    return g


def gradient_check(model, loss_at) -> float:
    """Max relative deviation of the analytic gradient from central differences."""
    p0 = model.params.copy()

    def f(q):
        model.params[:] = q
        return loss_at()[0]

    try:
        g = loss_at()[1]
        fd = _fd_grad(f, p0)
    finally:
        model.params[:] = p0
    return float(np.abs(g - fd).max() / max(np.abs(fd).max(), 1e-12))


def check_denoiser(rng, quick=False):
    s = _Suite("denoiser")
    sch = schedules.make_linear_beta(50, 1e-3, 0.2)
    proc = VPProcess(sch)
    m = dn.MLPDenoiser(3, 50, emb_dim=4, hidden=(8, 8), seed=1)
    x0 = rng.standard_normal((5, 3))
    t, e = dn.draw_noise(proc, x0.shape, rng)
    s.le("noise-matching gradient vs finite differences", gradient_check(m, lambda: dn.loss_noise_matching(m, proc, x0, t=t, eps=e)), 1e-4)
    c = gff.build(2, 1.0)
    pn = VPProcess(sch, c)
    mg = dn.MLPDenoiser(4, 50, emb_dim=4, hidden=(6,), seed=2)
    xg = rng.standard_normal((3, 2, 2))
    tg, eg = dn.draw_noise(pn, xg.shape, rng)
    for v in "abc":
        s.le(f"NI variant {v} gradient vs finite differences", gradient_check(mg, lambda: dn.loss_ni(mg, pn, xg, v, t=tg, eps=eg)), 1e-4)
    cfg = dn.MaskConfig(p=1, k=1, f=1)
    mm = dn.MLPDenoiser(3, 50, cond_dim=6, emb_dim=4, hidden=(6,), seed=3)
    w = rng.standard_normal((4, 3, 3))
    tm, em = dn.draw_noise(proc, (4, 3), rng)
    masks = (np.array([1.0, 0, 1, 0]), np.array([1.0, 1, 0, 0]))
    s.le("masked conditional gradient vs finite differences",
         gradient_check(mm, lambda: dn.loss_masked_conditional(mm, proc, w, cfg, t=tm, eps=em, masks=masks)), 1e-4)
    _, _, gp, gf = dn.loss_masked_conditional(mm, proc, w, cfg, t=tm, eps=em, masks=masks, return_cond_grad=True)
    s.true("masked frames receive exactly zero gradient", bool(np.all(gp[[1, 3]] == 0) and np.all(gf[[2, 3]] == 0)))
    out = rng.standard_normal((6, 3))
    ee = rng.standard_normal((6, 3))
    abar = rng.uniform(0.01, 0.99, 6)
    s.le("weighted score matching = noise matching",
         abs(dn.score_matching_objective(out, ee, abar) - float(np.sum((ee - out) ** 2) / 6)), 1e-10)
    n = 20_000 if quick else 100_000
    mp, mf = dn.sample_masks(dn.MaskConfig(p_mask=0.5), rng, n)
    freq = [float(np.mean((mp == a) & (mf == b))) for a in (0, 1) for b in (0, 1)]
    s.le("mask pattern frequencies vs 1/4", max(abs(f - 0.25) for f in freq), 0.01)
    return s.results


def check_cli(rng, quick=False):
    import tempfile
    from pathlib import Path

    from . import io

    s = _Suite("cli")
    s.true("quantize 0.5 -> 128, -0.1 -> 0", bool(io.quantize(0.5) == 128 and io.quantize(-0.1) == 0))
    with tempfile.TemporaryDirectory() as d:
        img = rng.integers(0, 256, (5, 7), dtype=np.uint8)
        io.write_pnm(Path(d) / "a.pgm", img)
        s.true("P5 round trip", bool(np.array_equal(io.read_pnm(Path(d) / "a.pgm"), img)))
        rgb = rng.integers(0, 256, (4, 3, 3), dtype=np.uint8)
        io.write_pnm(Path(d) / "a.ppm", rgb)
        s.true("P6 round trip", bool(np.array_equal(io.read_pnm(Path(d) / "a.ppm"), rgb)))
        arr = rng.standard_normal((2, 3, 4)).astype(np.float32)
        io.write_f32(Path(d) / "a.f32", arr)
        s.true("raw f32 round trip", bool(np.array_equal(io.read_f32(Path(d) / "a.f32"), arr)))
        p = rng.standard_normal(33).astype(np.float32)
        arch = {"data_dim": 2}
        io.save_checkpoint(Path(d) / "m.ddkl", p, arch)
        q, a, _ = io.load_checkpoint(Path(d) / "m.ddkl", arch)
        s.true("checkpoint round trip bitwise", bool(np.array_equal(p, q) and a == arch))
    return s.results


CHECKS = {
    "schedules": check_schedules,
    "odeint": check_odeint,
    "gff": check_gff,
    "kernels": check_kernels,
    "samplers": check_samplers,
    "multires": check_multires,
    "denoiser": check_denoiser,
    "cli": check_cli,
}


def run(modules=None, *, seed: int = 0, quick: bool = False) -> list[CheckResult]:
    from .config import component_rng

    mods = MODULES if not modules else tuple(modules)
    out = []
    for m in mods:
        if m not in CHECKS:
            raise KeyError(m)
        out.extend(CHECKS[m](component_rng(seed, f"verify.{m}"), quick))
    return out
