"""``ddkl`` command line: train, sample, tune, gff, pyramid, ode-demo, verify.

Every command reads optional defaults from ``--config FILE`` (flat
``key = value``) and lets flags override them.  Flags are generated from
the same schema as the file keys (``--beta-1`` sets ``beta_1``).
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .config import ConfigError, Key, component_rng, int_list, non_negative, one_of, parse_bool, positive, read_config_file, resolve
from .io import FormatError

COMMON = {
    "seed": Key(int, 0, "global seed; component streams are split from it", non_negative, "an integer >= 0"),
    "out": Key(str, None, "output directory"),
}


def _schema(**keys) -> dict:
    return {**COMMON, **keys}


def _cov_matrix(rho: float) -> np.ndarray:
    return np.array([[1.0, rho], [rho, 1.0]])


SCHEMAS = {
    "train": _schema(
        data=Key(str, "eight_gaussians", "toy dataset", one_of("eight_gaussians", "pulse")),
        L=Key(int, 1000, "number of diffusion steps", positive, "an integer >= 1"),
        beta_1=Key(float, 1e-4, "first beta", lambda v: 0 < v < 1, "a value in (0, 1)"),
        beta_L=Key(float, 0.02, "last beta", lambda v: 0 < v < 1, "a value in (0, 1)"),
        cov=Key(str, "identity", "noise covariance (eight_gaussians only)", one_of("identity", "correlated")),
        cov_rho=Key(float, 0.5, "correlation of the 2x2 noise covariance", lambda v: -1 < v < 1, "a value in (-1, 1)"),
        loss=Key(str, "a", "NI loss weighting", one_of("a", "b", "c")),
        iterations=Key(int, 20000, "training iterations", non_negative, "an integer >= 0"),
        batch_size=Key(int, 256, "batch size", positive, "an integer >= 1"),
        lr=Key(float, 2e-3, "Adam step size", non_negative, "a value >= 0"),
        lr_final=Key(float, 1e-4, "final step size of the linear decay", non_negative, "a value >= 0"),
        hidden=Key(int_list, (128, 128, 128), "hidden widths, comma separated", lambda v: len(v) > 0 and min(v) > 0, "positive widths"),
        emb_dim=Key(int, 16, "time embedding width", lambda v: v >= 2 and v % 2 == 0, "an even integer >= 2"),
        p=Key(int, 2, "past frames (pulse)", positive, "an integer >= 1"),
        k=Key(int, 2, "current frames (pulse)", positive, "an integer >= 1"),
        f=Key(int, 2, "future frames (pulse)", non_negative, "an integer >= 0"),
        p_mask=Key(float, 0.5, "mask probability (pulse)", lambda v: 0 <= v <= 1, "a value in [0, 1]"),
        width=Key(int, 16, "pixels per frame (pulse)", lambda v: v >= 2, "an integer >= 2"),
    ),
    "sample": _schema(
        checkpoint=Key(str, None, "trained model (VP samplers)"),
        sampler=Key(str, "ddim", "sampler", one_of("ancestral", "ancestral-beta", "ddim", "als", "cas")),
        steps=Key(int, 100, "VP: sampling steps out of L; VE: number of noise levels", lambda v: v >= 1, "an integer >= 1"),
        count=Key(int, 10000, "number of samples / sequences", positive, "an integer >= 1"),
        inner=Key(int, 5, "Langevin steps per level (als)", positive, "an integer >= 1"),
        sigma_min=Key(float, 0.01, "smallest VE noise level", positive, "a value > 0"),
        sigma_max=Key(float, 5.0, "largest VE noise level", positive, "a value > 0"),
        eps=Key(float, None, "Langevin step constant (default: tuned for als, 0.5 sigma_min^2 for cas)", positive, "a value > 0"),
        blocks=Key(int, 4, "autoregressive blocks (pulse)", positive, "an integer >= 1"),
        clip=Key(parse_bool, False, "clamp x0 estimates to [-1, 1] (pulse data range)"),
    ),
    "tune": _schema(
        D=Key(int, 3072, "data dimensionality for the gamma rule", positive, "an integer >= 1"),
        target=Key(float, 0.5, "neighbouring-level overlap", lambda v: 0 < v < 1, "a value in (0, 1)"),
        sigma1=Key(float, 20.0, "largest noise level", positive, "a value > 0"),
        sigmaL=Key(float, 0.01, "smallest noise level", positive, "a value > 0"),
        T=Key(int, 5, "Langevin steps per level", positive, "an integer >= 1"),
        gff_n=Key(int, 32, "GFF side for the NI eps rule (0 skips it)", non_negative, "an integer >= 0"),
        gff_gamma=Key(float, 1.0, "GFF spectral exponent", non_negative, "a value >= 0"),
        channels=Key(int, 3, "GFF channels", positive, "an integer >= 1"),
        format=Key(str, "jsonl", "report format", one_of("jsonl", "csv")),
    ),
    "gff": _schema(
        n=Key(int, 32, "field side length", positive, "an integer >= 1"),
        gamma=Key(float, 1.0, "spectral exponent", non_negative, "a value >= 0"),
        count=Key(int, 4, "number of fields", positive, "an integer >= 1"),
    ),
    "pyramid": _schema(
        **{"in": Key(str, None, "input PGM/PPM image")},
        levels=Key(int, 3, "pyramid levels S", positive, "an integer >= 1"),
        kind=Key(str, "unimodular", "patch transform", one_of("haar", "unimodular")),
    ),
    "ode-demo": _schema(
        h_euler=Key(float, 0.25, "Euler step", positive, "a value > 0"),
        h_rk4=Key(float, 0.05, "RK4 step", positive, "a value > 0"),
        format=Key(str, "text", "table format", one_of("text", "csv")),
    ),
    "verify": _schema(
        module=Key(str, "all", "module to verify", one_of("all", "schedules", "odeint", "gff", "kernels", "samplers", "multires", "denoiser", "cli")),
        format=Key(str, "jsonl", "report format", one_of("jsonl", "csv")),
        quick=Key(parse_bool, False, "smaller Monte-Carlo sample sizes"),
    ),
}

REQUIRED = {"pyramid": ("in", "out"), "gff": ("out",), "train": ("out",), "sample": ("out",)}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        # one-line diagnostics instead of the multi-line usage dump
        self.exit(2, f"ddkl: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="ddkl", description="Diffusion-kernel numerics toolkit.")
    ap.add_argument("--version", action="version", version=f"ddkl {__version__}")
    sub = ap.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True
    for name, schema in SCHEMAS.items():
        sp = sub.add_parser(name, help=f"{name} command")
        sp.add_argument("--config", help="key = value file with defaults")
        for key, spec in schema.items():
            flags = {f"--{key.replace('_', '-')}"}
            flags.add(f"--{key}")
            sp.add_argument(*sorted(flags), dest=key, default=None, help=spec.help, metavar="VALUE")
    return ap


def _emit(records, fmt: str, stream=None) -> None:
    stream = sys.stdout if stream is None else stream
    if fmt == "csv":
        w = csv.DictWriter(stream, fieldnames=list(records[0].keys()))
        w.writeheader()
        w.writerows(records)
    else:
        for r in records:
            stream.write(json.dumps(r) + "\n")


def _outdir(cfg) -> Path:
    p = Path(cfg["out"])
    p.mkdir(parents=True, exist_ok=True)
    return p


# --------------------------------------------------------------------------
# commands
# --------------------------------------------------------------------------


def _vp_process(L, beta_1, beta_L, cov="identity", rho=0.5):
    from .covariance import IDENTITY, DenseCovariance
    from .kernels import VPProcess
    from .schedules import make_linear_beta

    c = IDENTITY if cov == "identity" else DenseCovariance(_cov_matrix(rho))
    return VPProcess(make_linear_beta(L, beta_1, beta_L), c)


def cmd_train(cfg) -> int:
    from . import denoiser as dn
    from . import io, toy

    if cfg["L"] > 1 and not cfg["beta_1"] < cfg["beta_L"]:
        raise ConfigError("beta_L", "must exceed beta_1")
    if cfg["data"] == "pulse" and cfg["cov"] != "identity":
        raise ConfigError("cov", "the pulse dataset supports only the identity covariance")
    proc = _vp_process(cfg["L"], cfg["beta_1"], cfg["beta_L"], cfg["cov"], cfg["cov_rho"])
    init_seed = int(component_rng(cfg["seed"], "train.init").integers(2**31))
    train_seed = int(component_rng(cfg["seed"], "train.loop").integers(2**31))
    tc = dn.TrainConfig(lr=cfg["lr"], lr_final=cfg["lr_final"], batch_size=cfg["batch_size"], iterations=cfg["iterations"], seed=train_seed)
    if cfg["data"] == "eight_gaussians":
        model = dn.MLPDenoiser(2, cfg["L"], emb_dim=cfg["emb_dim"], hidden=cfg["hidden"], seed=init_seed)
        var = cfg["loss"]
        res = dn.train(model, lambda m, b, r: dn.loss_ni(m, proc, b, var, r), lambda r, n: toy.eight_gaussians(r, n), tc)
    else:
        mc = dn.MaskConfig(cfg["p"], cfg["k"], cfg["f"], cfg["p_mask"])
        w = cfg["width"]
        model = dn.MLPDenoiser(mc.k * w, cfg["L"], cond_dim=(mc.p + mc.f) * w, emb_dim=cfg["emb_dim"], hidden=cfg["hidden"], seed=init_seed)
        res = dn.train(model, lambda m, b, r: dn.loss_masked_conditional(m, proc, b, mc, r),
                       lambda r, n: toy.moving_pulse(r, n, mc.window, w), tc)
    out = _outdir(cfg)
    sched = {k: cfg[k] for k in ("data", "L", "beta_1", "beta_L", "cov", "cov_rho", "p", "k", "f", "p_mask", "width")}
    io.save_checkpoint(out / "model.ddkl", model.params, model.architecture(), sched)
    io.write_loss_csv(out / "loss.csv", res.losses)
    head = float(res.losses[: max(1, len(res.losses) // 100)].mean()) if len(res.losses) else float("nan")
    tail = float(res.losses[-max(1, len(res.losses) // 100):].mean()) if len(res.losses) else float("nan")
    _emit([{"command": "train", "params": int(model.num_params), "loss_initial": head, "loss_final": tail,
            "checkpoint": str(out / "model.ddkl")}], "jsonl")
    return 0


def _load_model(path):
    from . import denoiser as dn
    from . import io

    try:
        params, arch, sched = io.load_checkpoint(path)
    except FileNotFoundError:
        raise ConfigError("checkpoint", f"no such file {path}") from None
    model = dn.MLPDenoiser(arch["data_dim"], arch["L"], cond_dim=arch["cond_dim"], emb_dim=arch["emb_dim"], hidden=arch["hidden"])
    if model.architecture() != arch:
        raise FormatError(f"checkpoint architecture {arch} cannot be rebuilt")
    model.params[:] = params.astype(float)
    return model, sched


def cmd_sample(cfg) -> int:
    from . import io, samplers, schedules, toy
    from .kernels import VEProcess

    out = _outdir(cfg)
    rng = component_rng(cfg["seed"], "sample.chain")
    kind = cfg["sampler"]
    report = {"command": "sample", "sampler": kind}
    if kind in ("als", "cas"):
        if cfg["steps"] < 2:
            raise ConfigError("steps", "VE samplers need at least 2 noise levels")
        if not cfg["sigma_min"] < cfg["sigma_max"]:
            raise ConfigError("sigma_max", "must exceed sigma_min")
        ve = VEProcess(schedules.make_geometric_sigma(cfg["sigma_min"], cfg["sigma_max"], cfg["steps"]))
        sch = ve.schedule

        def score(x, i):
            return toy.mixture_score_ve(x, sch.sigma(i))

        if kind == "als":
            eps = cfg["eps"] or schedules.tune_langevin_eps(sch.gamma, sch.sigma_min, cfg["inner"])
            x = samplers.annealed_langevin(ve, score, cfg["inner"], eps, rng, shape=(cfg["count"], 2))
        else:
            eps = cfg["eps"] or 0.5 * sch.sigma_min**2
            try:
                x = samplers.consistent_annealed(ve, score, eps, rng, shape=(cfg["count"], 2))
            except ValueError as e:
                raise ConfigError("eps", str(e)) from None
        report.update(eps=eps, levels=sch.L, gamma=sch.gamma, score="analytic eight_gaussians")
    else:
        if not cfg["checkpoint"]:
            raise ConfigError("checkpoint", "required for VP samplers")
        model, sched = _load_model(cfg["checkpoint"])
        proc = _vp_process(sched["L"], sched["beta_1"], sched["beta_L"], sched.get("cov", "identity"), sched.get("cov_rho", 0.5))
        vp_kind = {"ancestral": "ancestral_tilde", "ancestral-beta": "ancestral_beta", "ddim": "ddim"}[kind]
        if cfg["steps"] > proc.L:
            raise ConfigError("steps", f"cannot exceed the trained L={proc.L}")
        spec = samplers.SamplerSpec.evenly(vp_kind, proc.L, cfg["steps"], cfg["seed"])
        clip = (-1.0, 1.0) if cfg["clip"] else None
        if sched.get("data") == "pulse":
            p, k, w = sched["p"], sched["k"], sched["width"]
            past = toy.moving_pulse(component_rng(cfg["seed"], "sample.past"), cfg["count"], p, w)
            x = samplers.blockwise_autoregressive(model.cond_eps_fn(), proc, spec, past, cfg["blocks"], k,
                                                  p=p, f=sched["f"], rng=rng, clip_x0=clip)
            x = np.concatenate([past, x], axis=1)
            for j in range(min(cfg["count"], 8)):
                io.write_pnm(out / f"sequence_{j:03d}.pgm", 0.5 * (np.clip(x[j], -1, 1) + 1))
        else:
            x = samplers.sample_vp(proc, model.eps_fn(), spec, (cfg["count"], 2), rng=rng, clip_x0=clip)
        report.update(steps=int(len(spec.steps)))
    io.write_f32(out / "samples.f32", x)
    if x.ndim == 2 and x.shape[1] == 2:
        frac = np.bincount(toy.assign_modes(x), minlength=8) / len(x)
        report.update(mean=x.mean(0).tolist(), cov=np.cov(x.T).tolist(), mode_fractions=frac.round(4).tolist())
    report["samples"] = str(out / "samples.f32")
    _emit([report], "jsonl")
    return 0


def cmd_tune(cfg) -> int:
    from . import gff, schedules

    if not cfg["sigma1"] >= cfg["sigmaL"]:
        raise ConfigError("sigma1", "must be >= sigmaL")
    g = schedules.tune_gamma(cfg["D"], cfg["target"])
    pg = schedules.REFERENCE_GAMMA
    recs = [
        {"quantity": "gamma_root", "value": g, "note": f"overlap root at D={cfg['D']}"},
        {"quantity": "gamma_reference", "value": pg, "note": "rounded operating point"},
        {"quantity": "L_at_root", "value": schedules.tune_num_scales(cfg["sigma1"], cfg["sigmaL"], g), "note": ""},
        {"quantity": "L_at_reference", "value": schedules.tune_num_scales(cfg["sigma1"], cfg["sigmaL"], pg), "note": ""},
    ]
    iso = schedules.tune_langevin_eps_report(pg, cfg["sigmaL"], cfg["T"])
    recs.append({"quantity": "eps_isotropic", "value": iso.eps, "note": f"T={cfg['T']} mean ratio {iso.mean_ratio:.4f}"})
    if cfg["gff_n"]:
        cov = gff.build(cfg["gff_n"], cfg["gff_gamma"], cfg["channels"])
        ni = schedules.tune_langevin_eps_report(pg, cfg["sigmaL"], cfg["T"], cov)
        recs.append({"quantity": "eps_gff", "value": ni.eps,
                     "note": f"T={cfg['T']} mean ratio {ni.mean_ratio:.4f}, per-mode {ni.min_ratio:.4f}..{ni.max_ratio:.4f}"})
    _emit(recs, cfg["format"])
    if cfg["out"]:
        with open(_outdir(cfg) / f"tune.{cfg['format']}", "w", newline="") as fh:
            _emit(recs, cfg["format"], fh)
    return 0


def cmd_gff(cfg) -> int:
    from . import gff, io

    cov = gff.build(cfg["n"], cfg["gamma"])
    g = gff.sample(cov, component_rng(cfg["seed"], "gff.sample"), cfg["count"])
    out = _outdir(cfg)
    io.write_f32(out / "fields.f32", g)
    for j in range(cfg["count"]):
        # ±3 standard deviations span the gray range
        io.write_pnm(out / f"field_{j:03d}.pgm", 0.5 + g[j] / 6.0)
    _emit([{"command": "gff", "n": cfg["n"], "gamma": cfg["gamma"], "count": cfg["count"], "sigma_N": cov.sigma_N,
            "logdet_sqrt_sigma": gff.flow_logdet_term(cov), "fields": str(out / "fields.f32")}], "jsonl")
    return 0


def cmd_pyramid(cfg) -> int:
    from . import io, multires

    try:
        img = io.pnm_to_chw(io.read_pnm(cfg["in"]))
    except FileNotFoundError:
        raise ConfigError("in", f"no such file {cfg['in']}") from None
    try:
        pyr = multires.decompose(img, cfg["levels"], cfg["kind"])
    except ValueError as e:
        raise ConfigError("levels", str(e)) from None
    out = _outdir(cfg)
    x = img
    levels = []
    for s, (y, ld) in enumerate(zip(pyr.details, pyr.logdets), 1):
        x = multires.block_mean(x)
        ext = "ppm" if x.shape[0] == 3 else "pgm"
        io.write_pnm(out / f"coarse_{s + 1}.{ext}", io.chw_to_pnm(x))
        for j in range(3):
            io.write_pnm(out / f"detail_{s}_{j + 1}.{ext}", io.chw_to_pnm(0.5 + 0.5 * y[..., j, :, :]))
        levels.append({"level": s, "coarse_dims": int(x.size), "logdet": ld})
    err = float(np.abs(multires.reconstruct(pyr) - img).max())
    report = {"command": "pyramid", "kind": cfg["kind"], "levels": cfg["levels"], "per_level": levels,
              "logdet_total": pyr.logdet_total, "roundtrip_max_error": err}
    (out / "logdet.json").write_text(json.dumps(report, indent=2) + "\n")
    _emit([report], "jsonl")
    return 0


def cmd_ode_demo(cfg) -> int:
    from .odeint import IVP, SolverConfig, solve

    def f_lin(x, t, p):
        return 2.0 * t * np.ones_like(x)

    def f_exp(x, t, p):
        return 2.0 * x * t

    rows = []
    for name, f, x0, exact in (("dx/dt=2t", f_lin, 2.0, 3.0), ("dx/dt=2xt", f_exp, 3.0, 3.0 * math.e), ("dx/dt=2xt", f_exp, 2.0, 2.0 * math.e)):
        for method, h in (("euler", cfg["h_euler"]), ("rk4", cfg["h_rk4"])):
            v = float(solve(IVP(f, np.array([x0]), 0.0, 1.0), SolverConfig(method, h))[0])
            rows.append({"problem": name, "x0": x0, "method": method, "h": h, "x1": round(v, 6), "exact": round(exact, 6),
                         "abs_error": float(f"{abs(v - exact):.3g}")})
    if cfg["format"] == "csv":
        _emit(rows, "csv")
    else:
        print(f"{'problem':<11} {'x0':>4} {'method':<6} {'h':>6} {'x(1)':>10} {'exact':>10} {'|err|':>9}")
        for r in rows:
            print(f"{r['problem']:<11} {r['x0']:>4g} {r['method']:<6} {r['h']:>6g} {r['x1']:>10.4f} {r['exact']:>10.4f} {r['abs_error']:>9.2e}")
    return 0


def cmd_verify(cfg) -> int:
    from . import verify

    mods = None if cfg["module"] == "all" else [cfg["module"]]
    res = verify.run(mods, seed=cfg["seed"], quick=cfg["quick"])
    recs = [r.as_dict() for r in res]
    _emit(recs, cfg["format"])
    if cfg["out"]:
        with open(_outdir(cfg) / f"verify.{cfg['format']}", "w", newline="") as fh:
            _emit(recs, cfg["format"], fh)
    failed = [r for r in res if not r.passed]
    print(f"# {len(res) - len(failed)}/{len(res)} checks passed", file=sys.stderr)
    return 1 if failed else 0


COMMANDS = {
    "train": cmd_train,
    "sample": cmd_sample,
    "tune": cmd_tune,
    "gff": cmd_gff,
    "pyramid": cmd_pyramid,
    "ode-demo": cmd_ode_demo,
    "verify": cmd_verify,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    schema = SCHEMAS[args.command]
    try:
        file_vals = read_config_file(args.config) if args.config else {}
        overrides = {k: getattr(args, k) for k in schema}
        cfg = resolve(schema, file_vals, overrides)
        for k in REQUIRED.get(args.command, ()):
            if cfg[k] is None:
                raise ConfigError(k, "is required")
        return COMMANDS[args.command](cfg)
    except ConfigError as e:
        print(f"ddkl: error: {e}", file=sys.stderr)
        return 2
    except FormatError as e:
        print(f"ddkl: error: {e}", file=sys.stderr)
        return 2
    except FileNotFoundError as e:
        print(f"ddkl: error: config key 'config': {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
