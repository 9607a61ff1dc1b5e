"""FastAPI application exposing the tree library over HTTP.

The CLI is a thin client of these endpoints (in-process by default); all
actual work happens in the core modules.
"""

from __future__ import annotations

from fastapi import FastAPI
from fastapi.responses import JSONResponse

from .. import exact, formulas, mc
from ..mc import ExperimentConfig, ExperimentResult, ModelSpec
from ..samplers import GuardError
from ..trees import RecursiveTree, TreeError
from ..weights import WeightError, parse_weights
from . import schemas


def _model_spec(params: schemas.ModelParams) -> ModelSpec:
    return ModelSpec.build(
        params.model,
        weights=params.weights,
        theta=params.theta,
        k=params.k,
        p=params.p,
        a=params.a,
    )


def _row(res: ExperimentResult) -> schemas.ExperimentRow:
    return schemas.ExperimentRow(**res.json_row())


def create_app() -> FastAPI:
    app = FastAPI(
        title="rectree",
        description="Random recursive tree sampling and formula verification",
    )

    @app.exception_handler(GuardError)
    async def guard_handler(request, exc: GuardError):  # noqa: ANN001
        return JSONResponse(status_code=400, content={"detail": {"guard": str(exc)}})

    @app.exception_handler(WeightError)
    async def weight_handler(request, exc: WeightError):  # noqa: ANN001
        return JSONResponse(status_code=422, content={"detail": {"invalid": str(exc)}})

    @app.exception_handler(TreeError)
    async def tree_handler(request, exc: TreeError):  # noqa: ANN001
        return JSONResponse(status_code=422, content={"detail": {"invalid": str(exc)}})

    @app.get("/health")
    def health() -> dict:
        return {"status": "ok"}

    @app.post("/sample", response_model=schemas.SampleResponse)
    def sample(req: schemas.SampleRequest) -> schemas.SampleResponse:
        spec = _model_spec(req.model)
        if req.stat:
            values = mc.sample_statistics(
                spec, req.stat, req.n, req.reps, req.seed, req.threads
            )
            return schemas.SampleResponse(
                seed=req.seed, stat=req.stat, values=[float(v) for v in values]
            )
        keys = mc.sample_tree_keys(spec, req.n, req.reps, req.seed, req.threads)
        trees = [RecursiveTree(key).to_text() for key in keys]
        return schemas.SampleResponse(seed=req.seed, trees=trees)

    @app.post("/enumerate", response_model=schemas.EnumerateResponse)
    def enumerate_model(req: schemas.EnumerateRequest) -> schemas.EnumerateResponse:
        spec = _model_spec(req.model)
        dist = exact.tree_pmf_for_model(
            spec.model,
            req.n,
            weights=spec.weights,
            params=spec.shuffle,
            theta=spec.theta,
            k=spec.k,
        )
        if req.stat:
            dist = exact.statistic_pmf(dist, req.stat)
            keys = [repr(key) for key in dist.support]
        else:
            keys = [" ".join(str(p) for p in key) for key in dist.support]
        return schemas.EnumerateResponse(
            keys=keys, probabilities=[float(x) for x in dist.mass]
        )

    @app.get("/oracles", response_model=schemas.OracleListResponse)
    def oracles() -> schemas.OracleListResponse:
        infos = [
            schemas.OracleInfo(formula_id=e.formula_id, args=list(e.args), doc=e.doc)
            for e in formulas.REGISTRY.values()
        ]
        infos.sort(key=lambda i: i.formula_id)
        return schemas.OracleListResponse(formulas=infos)

    @app.post("/oracle", response_model=schemas.OracleResponse)
    def oracle(req: schemas.OracleRequest) -> schemas.OracleResponse:
        value = formulas.evaluate_formula(req.name, req.params)
        return schemas.OracleResponse(
            value=float(value), formula_id=req.name, params=req.params
        )

    @app.post("/verify", response_model=schemas.VerifyResponse)
    def verify(req: schemas.VerifyRequest) -> schemas.VerifyResponse:
        spec = _model_spec(req.model)
        cfg = ExperimentConfig(
            spec=spec,
            stat=req.stat,
            n=req.n,
            reps=req.reps,
            seed=req.seed,
            mode=req.mode,
            threads=req.threads,
            z_max=req.z_max,
            tv_max=req.tv_max,
            ci_mult=req.ci_mult,
            dk_coeff=req.dk_coeff,
            abs_tol=req.abs_tol,
        )
        if req.mode == "oracle-moments":
            results = [mc.run_moment_check(cfg)]
        elif req.mode == "exact-pmf":
            results = [mc.run_tv_check(cfg)]
        elif req.mode == "normal-CLT":
            results = mc.run_clt_check(cfg)
        elif req.mode == "concentration":
            results = mc.run_concentration_check(cfg, req.t_grid or [10.0, 20.0, 40.0])
        else:
            results = [mc.run_limit_check(cfg)]
        rows = [_row(r) for r in results]
        return schemas.VerifyResponse(rows=rows, all_passed=all(r.passed for r in results))

    @app.post("/converge", response_model=schemas.ConvergeResponse)
    def converge(req: schemas.ConvergeRequest) -> schemas.ConvergeResponse:
        spec = _model_spec(req.model)
        cfg = ExperimentConfig(
            spec=spec,
            stat=req.stat,
            n=req.n_grid[-1],
            n_grid=tuple(req.n_grid),
            reps=req.reps,
            seed=req.seed,
            mode="normal-CLT",
            threads=req.threads,
            dk_coeff=req.dk_coeff,
        )
        results = mc.run_clt_check(cfg)
        bounded = bool(results[0].flags.get("bounded_variance", False))
        return schemas.ConvergeResponse(
            rows=[_row(r) for r in results],
            bounded_variance=bounded,
            normality=str(results[0].flags.get("normality", "asserted")),
            all_passed=all(r.passed for r in results),
        )

    @app.post("/couple", response_model=schemas.CoupleResponse)
    def couple(req: schemas.CoupleRequest) -> schemas.CoupleResponse:
        weights = parse_weights(req.weights) if req.weights else None
        report = mc.run_couple_check(
            req.kind,
            req.n,
            req.reps,
            req.seed,
            weights=weights,
            theta=req.theta,
            k=req.k,
            m=req.m,
            stats=req.stats,
        )
        rows = [
            schemas.CouplePairRow(
                rep=row["rep"],
                values={k: float(v) for k, v in row.items() if k != "rep"},
            )
            for row in report["rows"]
        ]
        exact_tv = None
        if req.exact_tv_n is not None:
            exact_tv = mc.coupling_exact_tv(
                req.kind,
                req.exact_tv_n,
                weights=weights,
                theta=req.theta,
                k=req.k,
                m=req.m,
            )
        violations = dict(report["sandwich_violations"])
        passed = all(v == 0 for v in violations.values()) and (
            exact_tv is None or exact_tv <= 1e-12
        )
        return schemas.CoupleResponse(
            kind=req.kind,
            rows=rows,
            sandwich_violations=violations,
            exact_tv=exact_tv,
            all_passed=passed,
        )

    return app


app = create_app()
