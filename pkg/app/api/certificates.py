from fastapi import APIRouter
from fastapi.concurrency import run_in_threadpool
from pydantic import BaseModel
from typing import Literal, Optional, List, Dict
import logging

import numpy as np

from app.config import settings
from app.core.certify import (
    CertificateBundle,
    build_closed_loop,
    check_padetc_certificate,
    check_petc_certificate,
    check_psdetc_certificate,
    min_eigenvalue,
    petc_matrices,
    psdetc_matrices,
)

logger = logging.getLogger(__name__)

router = APIRouter()


class CertifyRequest(BaseModel):
    """Кандидат в сертификат и матрицы контура (по умолчанию WaterBox, режим 2)"""
    kind: Literal["PETC", "PSDETC", "PADETC"]
    bundle: CertificateBundle
    sigma: float = 0.2
    A: Optional[List[List[float]]] = None
    B: Optional[List[List[float]]] = None
    K: Optional[List[List[float]]] = None


class CertifyResponse(BaseModel):
    kind: str
    feasible: bool
    min_eigenvalues: Dict[str, float] = {}


def certify(request: CertifyRequest) -> CertifyResponse:
    """Проверка кандидата; K в форме u = Kξ̂"""
    B = np.asarray(request.B if request.B is not None else settings.B2, dtype=float)
    n = B.shape[0]
    A = np.asarray(request.A, dtype=float) if request.A is not None else np.zeros((n, n))
    K = np.asarray(request.K, dtype=float) if request.K is not None else -np.asarray(settings.K2, dtype=float)
    cl = build_closed_loop(A, B, K)
    bundle = request.bundle

    if request.kind == "PADETC":
        feasible = check_padetc_certificate(bundle, cl, tol=settings.PD_TOL)
        return CertifyResponse(kind=request.kind, feasible=feasible)

    if request.kind == "PETC":
        feasible = check_petc_certificate(bundle, request.sigma, cl, tol=settings.PD_TOL)
        matrices = petc_matrices(bundle, request.sigma, cl)
    else:
        feasible = check_psdetc_certificate(bundle, request.sigma, cl, tol=settings.PD_TOL)
        matrices = psdetc_matrices(bundle, request.sigma, cl)
    eigen = {"P": min_eigenvalue(bundle.P_matrix)}
    eigen.update({f"M{k + 1}": min_eigenvalue(m) for k, m in enumerate(matrices)})
    logger.info(f"Сертификат {request.kind}: {'принят' if feasible else 'отклонён'}")
    return CertifyResponse(kind=request.kind, feasible=feasible, min_eigenvalues=eigen)


@router.post("", response_model=CertifyResponse)
async def certify_endpoint(request: CertifyRequest):
    """Проверка сертификата устойчивости"""
    return await run_in_threadpool(certify, request)
