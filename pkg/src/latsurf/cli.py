"""Batch command line front end.

Every experiment in the library runs as a subcommand that writes CSV
or JSON artifacts: geometry (per-vertex curvature table), surface
(mesh container), gamma (zero-curvature curve and tangential points),
assumptions (certificate constants), decay (radial scans of the
surface measure transform with the bound column), l4 (cutoff sweep of
the fourth-power integral), denom (resolvent denominator eta sweeps
or the FFT/direct oracle comparison), diagnostics (dyadic curvature
by angle table).

Output conventions: one comment line with the command name and the
sha256 hash of the resolved configuration, then a schema line naming
the columns, then data rows with floats at 12 significant digits in
lowercase scientific notation. Identical configurations produce byte
identical CSV. Exit codes: 0 on success, 1 when a computation rejects
its inputs (domain errors), 2 when the configuration is invalid.
"""

import argparse
import hashlib
import json
import os
import sys

import numpy as np

from . import cache, dispersion
from .curvegeom import (check_assumptions, extract_gamma,
                        find_tangential_points)
from .denominators import (ResolventParams, direct_four_denominator,
                           eta_sweep, four_denominator)
from .errors import ConfigInvalid, LatsurfError
from .levelset import extract_surface
from .oscillatory import (DyadicConfig, PhaseQuadrature, SamplerConfig,
                          decay_scan, dyadic_diagnostics, l4_integral,
                          refine_mesh, tangential_set_for, theorem_bound)

EXCEPTIONAL_GAP = 0.02


def _fmt(x):
    return "%.11e" % float(x)


def _config_of(args, skip=("command", "config", "out", "fit_out", "func")):
    cfg = {k: v for k, v in sorted(vars(args).items())
           if k not in skip and not k.startswith("_")}
    return cfg


def _config_hash(cfg):
    blob = json.dumps(cfg, sort_keys=True, default=str).encode("utf-8")
    return hashlib.sha256(blob).hexdigest()[:12]


def _write_csv(path, command, cfg_hash, columns, rows, notes=()):
    lines = ["# latsurf %s config=%s" % (command, cfg_hash)]
    lines.extend("# %s" % note for note in notes)
    lines.append(",".join(columns))
    lines.extend(",".join(r) for r in rows)
    with open(path, "w") as f:
        f.write("\n".join(lines) + "\n")


def _write_json(path, command, cfg, payload):
    doc = {"_meta": {"command": command, "config": cfg,
                     "config_hash": _config_hash(cfg)}}
    doc.update(payload)
    with open(path, "w") as f:
        json.dump(doc, f, indent=2, sort_keys=True)
        f.write("\n")


def _parse_vec(text, name):
    try:
        parts = [float(x) for x in text.split(",")]
    except ValueError:
        raise ConfigInvalid("%s must be comma-separated floats, got %r"
                            % (name, text))
    if len(parts) != 3:
        raise ConfigInvalid("%s must have three components, got %r"
                            % (name, text))
    return np.array(parts)


def _check_level(a):
    if not 0.0 < a < 6.0:
        raise ConfigInvalid("a must lie in (0, 6), got %g" % a)
    if dispersion.triple_norm(a) < EXCEPTIONAL_GAP:
        raise ConfigInvalid(
            "a=%g is within %g of an exceptional value of e" %
            (a, EXCEPTIONAL_GAP))


def _check_resolution(n, floor=16):
    if n < floor:
        raise ConfigInvalid("n must be at least %d, got %d" % (floor, n))


# --------------------------------------------------------------- commands

def cmd_geometry(args):
    _check_level(args.a)
    _check_resolution(args.n)
    cfg = _config_of(args)
    mesh = extract_surface(args.a, args.n)
    g = mesh.geometry
    rows = [
        [_fmt(v[0]), _fmt(v[1]), _fmt(v[2]), _fmt(g.grad_norm[i]),
         _fmt(g.gauss[i]), _fmt(g.mean[i]), _fmt(g.kappa1[i]),
         _fmt(g.kappa2[i])]
        for i, v in enumerate(mesh.vertices)
    ]
    _write_csv(args.out, "geometry", _config_hash(cfg),
               ["px", "py", "pz", "grad_norm", "gauss", "mean",
                "kappa1", "kappa2"], rows)
    return 0


def cmd_surface(args):
    _check_level(args.a)
    _check_resolution(args.n)
    cfg = _config_of(args)
    mesh = extract_surface(args.a, args.n)
    digest = cache.store(mesh, args.out,
                         extra={"config_hash": _config_hash(cfg)})
    print("stored %s checksum=%s" % (args.out, digest))
    return 0


def cmd_gamma(args):
    _check_level(args.a)
    _check_resolution(args.n)
    cfg = _config_of(args)
    mesh = extract_surface(args.a, args.n)
    gamma = extract_gamma(args.a, mesh)
    tset = find_tangential_points(args.a, gamma)
    payload = {
        "level": float(args.a),
        "components": [c.tolist() for c in gamma.components],
        "w": [w.tolist() for w in gamma.w],
        "z": [z.tolist() for z in gamma.z],
        "mu": [m.tolist() for m in gamma.mu],
        "d_a": [d.tolist() for d in gamma.d_a],
        "residual_m": [r.tolist() for r in gamma.residual_m],
        "residual_e": [r.tolist() for r in gamma.residual_e],
        "tangential": {
            "points": tset.points.tolist(),
            "normals": tset.normals.tolist(),
            "provenance": tset.provenance.tolist(),
            "residuals": tset.residuals.tolist(),
        },
    }
    _write_json(args.out, "gamma", cfg, payload)
    return 0


def cmd_assumptions(args):
    _check_level(args.a_min)
    _check_level(args.a_max)
    if args.a_min >= args.a_max:
        raise ConfigInvalid("need a_min < a_max")
    _check_resolution(args.n)
    cfg = _config_of(args)
    cert = check_assumptions((args.a_min, args.a_max), n=args.n,
                             samples=args.samples, levels=args.levels,
                             seed=args.seed)
    payload = {"c2": cert.c2, "c3": cert.c3, "c4": cert.c4, "c6": cert.c6,
               "metadata": cert.metadata}
    _write_json(args.out, "assumptions", cfg, payload)
    return 0


def cmd_decay(args):
    _check_level(args.a)
    _check_resolution(args.n)
    if not 0 < args.r_min < args.r_max:
        raise ConfigInvalid("need 0 < r-min < r-max")
    omegas = [_parse_vec(t, "--omega") for t in args.omega]
    cfg = _config_of(args)
    mesh = extract_surface(args.a, args.n)
    evaluator = PhaseQuadrature(mesh,
                                max_cache_triangles=args.cache_triangles)
    tset = tangential_set_for(mesh)
    rows = []
    for w in omegas:
        w = w / np.linalg.norm(w)
        scan = decay_scan(args.a, w, (args.r_min, args.r_max),
                          evaluator=evaluator, n_radii=args.n_radii,
                          envelope=args.envelope,
                          cluster_step=args.cluster_step, tset=tset)
        bounds = theorem_bound(scan.radii, w, tset)
        for r, v, b in zip(scan.radii, scan.values, bounds):
            rows.append([_fmt(args.a), _fmt(w[0]), _fmt(w[1]), _fmt(w[2]),
                         _fmt(r), _fmt(v), _fmt(b)])
    _write_csv(args.out, "decay", _config_hash(cfg),
               ["a", "omega_x", "omega_y", "omega_z", "r", "abs_mu_hat",
                "bound_value"], rows)
    return 0


def cmd_l4(args):
    _check_level(args.a)
    _check_resolution(args.n)
    m_values = sorted(set(args.m_values))
    if m_values[0] < 2:
        raise ConfigInvalid("every M must be at least 2")
    cfg = _config_of(args)
    mesh = extract_surface(args.a, args.n)
    evaluator = PhaseQuadrature(mesh,
                                max_cache_triangles=args.cache_triangles)
    sampler = SamplerConfig(n_samples=args.samples, seed=args.seed,
                            target_rel_se=args.target_rel_se)
    rows = []
    for m in m_values:
        est = l4_integral(args.a, m, evaluator=evaluator, config=sampler)
        rows.append([_fmt(args.a), _fmt(m), _fmt(est.value),
                     _fmt(est.std_error)])
    _write_csv(args.out, "l4", _config_hash(cfg),
               ["a", "M", "J", "stderr"], rows)
    return 0


def cmd_denom(args):
    if not 2.0 < args.alpha < 4.0:
        raise ConfigInvalid("alpha must lie in (2, 4), got %g" % args.alpha)
    for eta in args.eta:
        if not 0.0 < eta <= 0.5:
            raise ConfigInvalid("eta must lie in (0, 1/2], got %g" % eta)
    u = _parse_vec(args.u, "--u")
    q = _parse_vec(args.q, "--q") if args.kind == "two" else None
    cfg = _config_of(args)

    if args.oracle:
        if args.kind != "four":
            raise ConfigInvalid("--oracle compares the four-denominator "
                                "convolution against the direct sum")
        if len(args.eta) != 1:
            raise ConfigInvalid("--oracle takes exactly one --eta")
        params = ResolventParams(alpha=args.alpha, eta=args.eta[0],
                                 n=args.n, u=tuple(u))
        fast = four_denominator(params, check=False)
        direct = direct_four_denominator(params)
        rel = abs(fast - direct) / abs(direct)
        print("oracle kind=four alpha=%s eta=%s n=%d fft=%s direct=%s "
              "rel_err=%s" % (_fmt(args.alpha), _fmt(args.eta[0]), args.n,
                              _fmt(fast), _fmt(direct), _fmt(rel)))
        return 0

    if len(args.eta) < 3:
        raise ConfigInvalid("an eta sweep needs at least three --eta values")
    template = ResolventParams(alpha=args.alpha, eta=max(args.eta),
                               n=args.n, u=tuple(u))
    report = eta_sweep(args.kind, template, args.eta, q=q,
                       n_max=args.n_max)
    if args.kind == "two":
        q_or_u = float(np.linalg.norm(q))
    elif args.kind == "four":
        q_or_u = float(np.linalg.norm(report.shift))
    else:
        q_or_u = 0.0
    rows = [[args.kind, _fmt(args.alpha), _fmt(eta), str(int(n)),
             _fmt(q_or_u), _fmt(v), _fmt(rc)]
            for eta, n, v, rc in zip(report.etas, report.ns, report.values,
                                     report.rel_changes)]
    _write_csv(args.out, "denom", _config_hash(cfg),
               ["kind", "alpha", "eta", "N", "q_or_u", "value",
                "doubling_check_rel_change"], rows)
    _write_json(args.fit_out, "denom-fit", cfg, report.as_dict())
    return 0


def cmd_diagnostics(args):
    _check_level(args.a)
    _check_resolution(args.n)
    omega = _parse_vec(args.omega, "--omega")
    if not np.linalg.norm(omega) > 0:
        raise ConfigInvalid("--omega must be nonzero")
    omega = omega / np.linalg.norm(omega)
    cfg = _config_of(args)
    mesh = extract_surface(args.a, args.n)
    if args.refine:
        mesh = refine_mesh(mesh, args.refine)
    tset = tangential_set_for(mesh)
    table = dyadic_diagnostics(mesh, tset, omega,
                               DyadicConfig(depth=args.depth, c0=args.c0,
                                            j_max=args.j_max))
    rows = []
    for k in range(table.config.depth):
        for j in range(table.config.j_max + 1):
            rows.append([str(k + 1), str(j), _fmt(table.volumes[k, j]),
                         _fmt(table.bounds[k, j]),
                         str(int(table.branch2[k, j])),
                         str(int(table.violations[k, j]))])
    notes = ("d_omega=%s fitted_constant=%s row_constant=%s violations=%d"
             % (_fmt(table.d_omega), _fmt(table.fitted_constant),
                _fmt(table.row_constant), table.n_violations),)
    _write_csv(args.out, "diagnostics", _config_hash(cfg),
               ["k", "j", "volume", "bound", "second_branch", "violation"],
               rows, notes=notes)
    return 0


# ----------------------------------------------------------------- parser

def build_parser():
    ap = argparse.ArgumentParser(
        prog="latsurf",
        description="lattice level-set geometry and decay experiments")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, default_out):
        p.add_argument("--config", default=None,
                       help="JSON file whose entries override flags")
        p.add_argument("--out", default=default_out,
                       help="output artifact path")

    p = sub.add_parser("geometry", help="per-vertex curvature table (CSV)")
    p.add_argument("--a", type=float, required=True)
    p.add_argument("--n", type=int, default=64)
    common(p, "geometry.csv")
    p.set_defaults(func=cmd_geometry)

    p = sub.add_parser("surface", help="mesh container (npz)")
    p.add_argument("--a", type=float, required=True)
    p.add_argument("--n", type=int, default=64)
    common(p, "surface.npz")
    p.set_defaults(func=cmd_surface)

    p = sub.add_parser("gamma", help="zero-curvature curve (JSON)")
    p.add_argument("--a", type=float, required=True)
    p.add_argument("--n", type=int, default=64)
    common(p, "gamma.json")
    p.set_defaults(func=cmd_gamma)

    p = sub.add_parser("assumptions", help="certificate constants (JSON)")
    p.add_argument("--a-min", type=float, default=2.3)
    p.add_argument("--a-max", type=float, default=2.7)
    p.add_argument("--n", type=int, default=64)
    p.add_argument("--samples", type=int, default=500)
    p.add_argument("--levels", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    common(p, "assumptions.json")
    p.set_defaults(func=cmd_assumptions)

    p = sub.add_parser("decay", help="radial decay scan (CSV)")
    p.add_argument("--a", type=float, required=True)
    p.add_argument("--n", type=int, default=64)
    p.add_argument("--omega", action="append", default=None,
                   help="direction x,y,z; repeatable")
    p.add_argument("--r-min", type=float, default=10.0)
    p.add_argument("--r-max", type=float, default=300.0)
    p.add_argument("--n-radii", type=int, default=8)
    p.add_argument("--envelope", type=int, default=6)
    p.add_argument("--cluster-step", type=float, default=0.45)
    p.add_argument("--cache-triangles", type=int, default=3_000_000)
    common(p, "decay.csv")
    p.set_defaults(func=cmd_decay)

    p = sub.add_parser("l4", help="fourth-power cutoff sweep (CSV)")
    p.add_argument("--a", type=float, required=True)
    p.add_argument("--n", type=int, default=64)
    p.add_argument("--m-values", type=float, nargs="+",
                   default=[8.0, 16.0, 32.0, 64.0])
    p.add_argument("--samples", type=int, default=4096)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--target-rel-se", type=float, default=0.2)
    p.add_argument("--cache-triangles", type=int, default=200_000)
    common(p, "l4.csv")
    p.set_defaults(func=cmd_l4)

    p = sub.add_parser("denom", help="resolvent denominator sweep (CSV)")
    p.add_argument("--kind", choices=("one", "two", "four"), required=True)
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--eta", type=float, action="append", required=True,
                   help="repeatable; one value with --oracle")
    p.add_argument("--n", type=int, default=64,
                   help="template grid size (power of two)")
    p.add_argument("--n-max", type=int, default=2048)
    p.add_argument("--q", default="0.9,0.4,0.2",
                   help="two-denominator shift x,y,z")
    p.add_argument("--u", default="0,0,0",
                   help="four-denominator shift x,y,z")
    p.add_argument("--oracle", action="store_true",
                   help="compare FFT and direct four-denominator values")
    p.add_argument("--fit-out", default="denom_fit.json")
    common(p, "denom.csv")
    p.set_defaults(func=cmd_denom)

    p = sub.add_parser("diagnostics", help="dyadic curvature table (CSV)")
    p.add_argument("--a", type=float, required=True)
    p.add_argument("--n", type=int, default=64)
    p.add_argument("--omega", default="1,0,0")
    p.add_argument("--refine", type=int, default=0)
    p.add_argument("--depth", type=int, default=5)
    p.add_argument("--c0", type=float, default=0.05)
    p.add_argument("--j-max", type=int, default=8)
    common(p, "diagnostics.csv")
    p.set_defaults(func=cmd_diagnostics)

    return ap


def _apply_config_file(args):
    try:
        with open(args.config) as f:
            overrides = json.load(f)
    except (OSError, ValueError) as exc:
        raise ConfigInvalid("cannot read --config %s: %s"
                            % (args.config, exc))
    if not isinstance(overrides, dict):
        raise ConfigInvalid("--config must hold a JSON object")
    for key, value in overrides.items():
        attr = key.replace("-", "_")
        if not hasattr(args, attr) or attr in ("command", "func", "config"):
            raise ConfigInvalid("--config has no such setting: %r" % key)
        setattr(args, attr, value)


def _apply_thread_env():
    count = os.environ.get("LATSURF_THREADS")
    if not count:
        return
    try:
        from numba import set_num_threads
        set_num_threads(int(count))
    except (ImportError, ValueError):
        pass


def main(argv=None):
    args = build_parser().parse_args(argv)
    _apply_thread_env()
    try:
        if args.config:
            _apply_config_file(args)
        if getattr(args, "omega", None) is None and args.command == "decay":
            args.omega = ["0.2,0.4,1.0"]
        return args.func(args)
    except ConfigInvalid as exc:
        print("config error: %s" % exc, file=sys.stderr)
        return 2
    except LatsurfError as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
