"""FastAPI service wrapping the core numerics.

Request/response compute only; the long-running Monte Carlo sweep stays in
the CLI (`spheretrunc study`), which writes CSVs that `/fit/scaling` can
consume once parsed.
"""

import numpy as np
from fastapi import FastAPI, HTTPException

from .. import __version__
from ..ensembles import RngStream, WishartConfig, mode_table, rho_grid
from ..experiments import StudyRow, fit_kappa, fit_scaling
from ..reconstruction import SolverConfig, jacobian, solve
from ..ruben import RubenEvaluator
from ..truncation import TruncatedSpectrum, check_feasibility, truncate_matrix, truncate_spectrum
from . import schemas


def create_app() -> FastAPI:
    app = FastAPI(title="spheretrunc", version=__version__)

    @app.exception_handler(ValueError)
    async def _value_error(request, exc):
        raise HTTPException(status_code=400, detail=str(exc))

    @app.get("/health")
    def health():
        return {"status": "ok", "version": __version__}

    @app.post("/integrals", response_model=schemas.IntegralsResponse)
    def integrals(req: schemas.IntegralsRequest):
        ints = RubenEvaluator(req.lam, req.epsilon).integrals(req.rho, want=req.want)
        return schemas.IntegralsResponse(
            alpha=ints.alpha,
            alpha_k=None if ints.alpha_k is None else ints.alpha_k.tolist(),
            alpha_jk=None if ints.alpha_jk is None else ints.alpha_jk.tolist(),
            rho=req.rho,
            epsilon=req.epsilon,
        )

    @app.post("/truncate", response_model=schemas.TruncateResponse)
    def truncate(req: schemas.TruncateRequest):
        trunc = truncate_spectrum(req.lam, req.rho, req.epsilon)
        return schemas.TruncateResponse(mu=trunc.mu.tolist(), rho=req.rho,
                                        epsilon=req.epsilon)

    @app.post("/truncate-matrix", response_model=schemas.TruncateMatrixResponse)
    def truncate_mat(req: schemas.TruncateMatrixRequest):
        out = truncate_matrix(req.sigma, req.rho, req.epsilon)
        return schemas.TruncateMatrixResponse(sigma_b=out.tolist(), rho=req.rho)

    @app.post("/feasibility", response_model=schemas.FeasibilityResponse)
    def feasibility(req: schemas.FeasibilityRequest):
        report = check_feasibility(req.mu, req.rho)
        return schemas.FeasibilityResponse(in_H=report.in_H, violated=report.violated)

    @app.post("/reconstruct", response_model=schemas.ReconstructResponse)
    def reconstruct(req: schemas.ReconstructRequest):
        trace = solve(
            TruncatedSpectrum(mu=np.asarray(req.mu, dtype=float), rho=req.rho),
            SolverConfig(scheme=req.scheme, omega=req.omega, beta=req.beta,
                         eps_t=req.eps_t, max_iter=req.max_iter, warmup=req.warmup,
                         epsilon=req.epsilon, keep_iterates=req.keep_iterates),
        )
        return schemas.ReconstructResponse(
            lam=None if trace.lambda_hat is None else trace.lambda_hat.tolist(),
            n_it=trace.n_it,
            status=trace.status,
            omega=trace.omega,
            iterates=None if trace.iterates is None else trace.iterates.tolist(),
        )

    @app.post("/jacobian", response_model=schemas.JacobianResponse)
    def jacobian_route(req: schemas.JacobianRequest):
        info = jacobian(req.lam, req.rho, req.epsilon)
        return schemas.JacobianResponse(J=info.J.tolist(), Omega=info.Omega.tolist(),
                                        inf_norm_J=info.inf_norm_J)

    @app.post("/modes", response_model=schemas.ModesResponse)
    def modes(req: schemas.ModesRequest):
        table = mode_table(WishartConfig(req.v, req.p), req.n_samples,
                           RngStream(req.seed), r=req.r, s=req.s)
        return schemas.ModesResponse(
            v=table.v, p=table.p, n_samples=table.n_samples, r=table.r,
            s=table.s, seed=table.seed, modes=table.modes.tolist(),
            rho_grid=rho_grid(table).tolist(),
        )

    @app.post("/fit/scaling", response_model=schemas.ScalingFitResponse)
    def scaling(req: schemas.ScalingFitRequest):
        rows = [StudyRow(**row.model_dump()) for row in req.rows]
        fit = fit_scaling(rows, beta=req.beta, window_max_rho=req.window_max_rho)
        return schemas.ScalingFitResponse(
            a=fit.a, b=fit.b, a_err=fit.a_err, b_err=fit.b_err, beta=fit.beta,
            window_max_rho=fit.window_max_rho, n_rho=fit.n_rho, n_runs=fit.n_runs,
        )

    @app.post("/fit/kappa", response_model=schemas.KappaFitResponse)
    def kappa(req: schemas.KappaFitRequest):
        fit = fit_kappa(req.points, beta=req.beta)
        return schemas.KappaFitResponse(a0=fit.a0, kappa=fit.kappa, beta=fit.beta,
                                        n_points=fit.n_points)

    return app


app = create_app()
