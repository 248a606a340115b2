"""Pydantic request/response models for the HTTP service."""

from pydantic import BaseModel, ConfigDict, Field


class _Payload(BaseModel):
    model_config = ConfigDict(populate_by_name=True)


class IntegralsRequest(_Payload):
    lam: list[float] = Field(alias="lambda", min_length=1)
    rho: float = Field(gt=0)
    epsilon: float = Field(default=1e-14, gt=0)
    want: str = Field(default="all", pattern="^(alpha|alpha_and_k|all)$")


class IntegralsResponse(_Payload):
    alpha: float
    alpha_k: list[float] | None
    alpha_jk: list[list[float]] | None
    rho: float
    epsilon: float


class TruncateRequest(_Payload):
    lam: list[float] = Field(alias="lambda", min_length=1)
    rho: float = Field(gt=0)
    epsilon: float = Field(default=1e-14, gt=0)


class TruncateResponse(_Payload):
    mu: list[float]
    rho: float
    epsilon: float


class TruncateMatrixRequest(_Payload):
    sigma: list[list[float]]
    rho: float = Field(gt=0)
    epsilon: float = Field(default=1e-14, gt=0)


class TruncateMatrixResponse(_Payload):
    sigma_b: list[list[float]]
    rho: float


class FeasibilityRequest(_Payload):
    mu: list[float] = Field(min_length=1)
    rho: float = Field(gt=0)


class FeasibilityResponse(_Payload):
    in_H: bool
    violated: list[str]


class ReconstructRequest(_Payload):
    mu: list[float] = Field(min_length=1)
    rho: float = Field(gt=0)
    scheme: str = Field(default="gj", pattern="^(gj|gjor|boosted)$")
    omega: float | None = None
    beta: float = Field(default=0.0, ge=0)
    eps_t: float = Field(default=1e-7, gt=0)
    max_iter: int = Field(default=1_000_000, ge=1)
    warmup: int = Field(default=40, ge=0)
    epsilon: float = Field(default=1e-14, gt=0)
    keep_iterates: bool = False


class ReconstructResponse(_Payload):
    lam: list[float] | None = Field(alias="lambda")
    n_it: int
    status: str
    omega: float
    iterates: list[list[float]] | None = None


class JacobianRequest(_Payload):
    lam: list[float] = Field(alias="lambda", min_length=1)
    rho: float = Field(gt=0)
    epsilon: float = Field(default=1e-14, gt=0)


class JacobianResponse(_Payload):
    J: list[list[float]]
    Omega: list[list[float]]
    inf_norm_J: float


class ModesRequest(_Payload):
    v: int = Field(ge=1)
    p: int | None = None
    n_samples: int = Field(default=100_000, ge=2)
    r: int | None = Field(default=None, ge=1)
    s: float = Field(default=5.0, gt=0)
    seed: int = 0


class ModesResponse(_Payload):
    v: int
    p: int
    n_samples: int
    r: int
    s: float
    seed: int
    modes: list[float]
    rho_grid: list[float]


class StudyRowModel(_Payload):
    v: int
    p: int
    rho: float
    beta: float
    scheme: str
    stream_index: int
    status: str
    n_it: int
    n_cond: float
    seed: int


class ScalingFitRequest(_Payload):
    rows: list[StudyRowModel]
    beta: float = 0.0
    window_max_rho: float = 1.0


class ScalingFitResponse(_Payload):
    a: float
    b: float
    a_err: float
    b_err: float
    beta: float
    window_max_rho: float
    n_rho: int
    n_runs: int


class KappaFitRequest(_Payload):
    points: list[tuple[int, float]]  # (v, a) pairs
    beta: float = 0.0


class KappaFitResponse(_Payload):
    a0: float
    kappa: float
    beta: float
    n_points: int
