"""Command-line client for the truncation/reconstruction toolkit.

Subcommands:
  modes        estimate eigenvalue modes of the Wishart ensemble (CSV)
  truncate     apply the truncation map to a spectrum (JSON)
  reconstruct  invert the truncation map from a damped spectrum (JSON)
  study        run the Monte Carlo convergence sweep (CSV, multi-process)
  fit          fit the scaling law (and kappa when several v are given) (JSON)
  serve        start the HTTP service

`modes`, `truncate`, `reconstruct` and `fit` accept --server URL to act as
thin clients of a running service instead of computing in-process. `study`
is batch compute and always runs locally.
"""

import argparse
import json
import sys

import numpy as np

from . import __version__
from .ensembles import RngStream, WishartConfig, mode_table
from .experiments import (
    ExperimentConfig,
    config_dict,
    fit_kappa,
    fit_scaling,
    read_study_csv,
    resolve_rho_values,
    run_convergence_study,
    write_study_csv,
)
from .reconstruction import SolverConfig, solve
from .truncation import TruncatedSpectrum, truncate_spectrum


def _floats(text):
    return [float(tok) for tok in text.replace(",", " ").split()]


def _emit(text, out):
    if out and out != "-":
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _emit_json(payload, out):
    _emit(json.dumps(payload, indent=2) + "\n", out)


def _post(server, path, payload):
    import httpx

    resp = httpx.post(server.rstrip("/") + path, json=payload, timeout=600.0)
    if resp.status_code != 200:
        sys.stderr.write(f"server error {resp.status_code}: {resp.text}\n")
        raise SystemExit(1)
    return resp.json()


def cmd_modes(args):
    if args.server:
        data = _post(args.server, "/modes", {
            "v": args.v, "p": args.p, "n_samples": args.n_samples,
            "r": args.r, "s": args.s, "seed": args.seed,
        })
        lines = ["v,p,k,mode,r,s,N,seed"]
        for k, mode in enumerate(data["modes"], start=1):
            lines.append(f"{data['v']},{data['p']},{k},{mode!r},{data['r']},"
                         f"{data['s']!r},{data['n_samples']},{data['seed']}")
        _emit("\n".join(lines) + "\n", args.out)
        return
    table = mode_table(WishartConfig(args.v, args.p), args.n_samples,
                       RngStream(args.seed), r=args.r, s=args.s)
    _emit(table.to_csv(), args.out)


def cmd_truncate(args):
    lam = _floats(args.lam)
    if args.server:
        data = _post(args.server, "/truncate",
                     {"lambda": lam, "rho": args.rho, "epsilon": args.epsilon})
        mu = data["mu"]
    else:
        mu = truncate_spectrum(lam, args.rho, args.epsilon).mu.tolist()
    _emit_json({
        "config": {"rho": args.rho, "epsilon": args.epsilon},
        "lambda": lam,
        "mu": mu,
    }, args.out)


def cmd_reconstruct(args):
    mu = _floats(args.mu)
    payload_cfg = {
        "rho": args.rho, "scheme": args.scheme, "omega": args.omega,
        "beta": args.beta, "eps_t": args.eps_t, "max_iter": args.max_iter,
        "warmup": args.warmup, "epsilon": args.epsilon,
    }
    if args.server:
        data = _post(args.server, "/reconstruct", {"mu": mu, **payload_cfg})
        result = {"lambda": data["lambda"], "n_it": data["n_it"],
                  "status": data["status"], "omega": data["omega"]}
    else:
        trace = solve(
            TruncatedSpectrum(mu=np.asarray(mu), rho=args.rho),
            SolverConfig(scheme=args.scheme, omega=args.omega, beta=args.beta,
                         eps_t=args.eps_t, max_iter=args.max_iter,
                         warmup=args.warmup, epsilon=args.epsilon),
        )
        result = {
            "lambda": None if trace.lambda_hat is None else trace.lambda_hat.tolist(),
            "n_it": trace.n_it, "status": trace.status, "omega": trace.omega,
        }
    _emit_json({"config": payload_cfg, "mu": mu, **result}, args.out)


def cmd_study(args):
    betas = tuple(args.beta_grid) if args.beta_grid else (args.beta,)
    cfg = ExperimentConfig(
        v=args.v, n_samples=args.n_samples, p=args.p,
        rho_values=tuple(args.rho) if args.rho else None,
        scheme=args.scheme, beta_grid=betas, eps_t=args.eps_t,
        epsilon=args.epsilon, warmup=args.warmup, max_iter=args.max_iter,
        seed=args.seed, threads=args.threads, mode_samples=args.mode_samples,
    )
    if not args.rho and not args.rho_from_modes:
        sys.stderr.write("study: pass --rho values or --rho-from-modes\n")
        raise SystemExit(2)
    rhos = resolve_rho_values(cfg)
    rows = run_convergence_study(cfg, rho_values=rhos)
    if not args.out or args.out == "-":
        sys.stderr.write("study: --out CSV path is required\n")
        raise SystemExit(2)
    write_study_csv(rows, args.out)
    meta = {"config": config_dict(cfg, rhos), "rows": len(rows), "csv": args.out}
    sys.stdout.write(json.dumps(meta, indent=2) + "\n")


def cmd_fit(args):
    rows = []
    for path in args.csv:
        rows.extend(read_study_csv(path))
    if args.server:
        groups = sorted({(r.v, r.beta) for r in rows})
        fits = []
        for v, beta in groups:
            sub = [row.__dict__ for row in rows if row.v == v]
            data = _post(args.server, "/fit/scaling",
                         {"rows": sub, "beta": beta, "window_max_rho": args.window})
            fits.append({"v": v, **data})
        result = {"scaling": fits}
        kappas = _kappa_payload(fits, args, server=True)
    else:
        groups = sorted({(r.v, r.beta) for r in rows})
        fits = []
        for v, beta in groups:
            sub = [r for r in rows if r.v == v]
            fit = fit_scaling(sub, beta=beta, window_max_rho=args.window)
            fits.append({"v": v, "a": fit.a, "b": fit.b, "a_err": fit.a_err,
                         "b_err": fit.b_err, "beta": fit.beta,
                         "window_max_rho": fit.window_max_rho,
                         "n_rho": fit.n_rho, "n_runs": fit.n_runs})
        result = {"scaling": fits}
        kappas = _kappa_payload(fits, args, server=False)
    if kappas:
        result["kappa"] = kappas
    result["config"] = {"window_max_rho": args.window, "inputs": args.csv}
    _emit_json(result, args.out)


def _kappa_payload(fits, args, server):
    by_beta = {}
    for f in fits:
        by_beta.setdefault(f["beta"], []).append((f["v"], f["a"]))
    out = []
    for beta, points in sorted(by_beta.items()):
        if len({v for v, _ in points}) < 3:
            continue
        if server:
            out.append(_post(args.server, "/fit/kappa",
                             {"points": points, "beta": beta}))
        else:
            fit = fit_kappa(points, beta=beta)
            out.append({"a0": fit.a0, "kappa": fit.kappa, "beta": fit.beta,
                        "n_points": fit.n_points})
    return out


def cmd_serve(args):
    import uvicorn

    from .service import app

    uvicorn.run(app, host=args.host, port=args.port)


def build_parser():
    parser = argparse.ArgumentParser(prog="spheretrunc", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, server=True):
        p.add_argument("--out", default="-", help="output path ('-' for stdout)")
        if server:
            p.add_argument("--server", default=None,
                           help="base URL of a running service (thin-client mode)")

    p = sub.add_parser("modes", help="estimate eigenvalue modes (CSV)")
    p.add_argument("--v", type=int, required=True)
    p.add_argument("--p", type=int, default=None)
    p.add_argument("--n-samples", type=int, default=100_000)
    p.add_argument("--r", type=int, default=None)
    p.add_argument("--s", type=float, default=5.0)
    p.add_argument("--seed", type=int, default=0)
    common(p)
    p.set_defaults(func=cmd_modes)

    p = sub.add_parser("truncate", help="lambda, rho -> mu (JSON)")
    p.add_argument("--lam", required=True, help="comma/space separated eigenvalues")
    p.add_argument("--rho", type=float, required=True)
    p.add_argument("--epsilon", type=float, default=1e-14)
    common(p)
    p.set_defaults(func=cmd_truncate)

    p = sub.add_parser("reconstruct", help="mu, rho -> lambda (JSON)")
    p.add_argument("--mu", required=True, help="comma/space separated values")
    p.add_argument("--rho", type=float, required=True)
    p.add_argument("--scheme", choices=["gj", "gjor", "boosted"], default="gj")
    p.add_argument("--omega", type=float, default=None)
    p.add_argument("--beta", type=float, default=0.0)
    p.add_argument("--eps-t", type=float, default=1e-7)
    p.add_argument("--epsilon", type=float, default=1e-14)
    p.add_argument("--warmup", type=int, default=40)
    p.add_argument("--max-iter", type=int, default=1_000_000)
    common(p)
    p.set_defaults(func=cmd_reconstruct)

    p = sub.add_parser("study", help="Monte Carlo convergence sweep (CSV)")
    p.add_argument("--v", type=int, required=True)
    p.add_argument("--p", type=int, default=None)
    p.add_argument("--n-samples", type=int, required=True)
    p.add_argument("--rho", type=float, action="append", default=None,
                   help="repeatable explicit radius^2 values")
    p.add_argument("--rho-from-modes", action="store_true")
    p.add_argument("--mode-samples", type=int, default=100_000)
    p.add_argument("--scheme", choices=["gj", "gjor", "boosted"], default="gjor")
    p.add_argument("--beta", type=float, default=0.0)
    p.add_argument("--beta-grid", type=float, nargs="+", default=None)
    p.add_argument("--eps-t", type=float, default=1e-7)
    p.add_argument("--epsilon", type=float, default=1e-14)
    p.add_argument("--warmup", type=int, default=40)
    p.add_argument("--max-iter", type=int, default=1_000_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=1)
    common(p, server=False)
    p.set_defaults(func=cmd_study)

    p = sub.add_parser("fit", help="scaling-law fit from study CSVs (JSON)")
    p.add_argument("csv", nargs="+", help="study CSV files")
    p.add_argument("--window", type=float, default=1.0,
                   help="max rho admitted into the fit window")
    common(p)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.set_defaults(func=cmd_serve)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    args.func(args)


if __name__ == "__main__":
    main()
