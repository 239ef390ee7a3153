import logging
from typing import List, Optional

from fastapi import APIRouter, HTTPException
from pydantic import BaseModel, Field

from app.config import config
from app.harness import run_batch, run_episode
from app.scenario import ScenarioError, scenario_loader

logger = logging.getLogger(__name__)

router = APIRouter()


class EpisodeRequest(BaseModel):
    scenario: str = Field(..., description="Scenario name in the scenario directory")
    algo: str = Field("eroas", description="One of eroas, eroas-nomem, apf, dwa")
    seed: Optional[int] = Field(None, description="Override the scenario seed")


class BatchRequest(BaseModel):
    scenarios: List[str] = Field(..., description="Scenario names to run")
    algos: List[str] = Field(default_factory=lambda: ["eroas", "apf", "dwa"])
    repetitions: int = Field(1, ge=1, le=20, description="Seeds per scenario and algorithm")


def _check_algos(algos: List[str]) -> None:
    unknown = [a for a in algos if a not in config.ALGORITHMS]
    if unknown:
        raise HTTPException(status_code=422, detail=f"Unknown algorithm(s): {unknown}")


def _load(name: str, seed: Optional[int] = None):
    if scenario_loader.resolve(name) is None:
        raise HTTPException(status_code=404, detail=f"Scenario not found: {name}")
    try:
        return scenario_loader.load(name, seed=seed)
    except ScenarioError as e:
        logger.error(f"Invalid scenario {name}: {e}")
        raise HTTPException(status_code=422, detail=str(e))


@router.get("/healthz")
async def health_check():
    """Health check endpoint."""
    return {"status": "ok"}


@router.get("/scenarios")
def list_scenarios():
    return {"scenarios": scenario_loader.list_scenarios()}


@router.post("/episodes")
def episode_endpoint(request: EpisodeRequest):
    """Run one episode and return its metrics."""
    _check_algos([request.algo])
    spec = _load(request.scenario, request.seed)
    try:
        logger.info(f"Episode request: {request.scenario} with {request.algo}")
        result = run_episode(spec, request.algo)
        return {
            "scenario": spec.name,
            "algo": request.algo,
            "seed": spec.seed,
            "metrics": result.metrics.model_dump(),
        }
    except Exception as e:
        logger.error(f"Error in episode endpoint: {e}")
        raise HTTPException(status_code=500, detail="Internal server error")


@router.post("/batch")
def batch_endpoint(request: BatchRequest):
    """Run a small batch synchronously and return the summary."""
    _check_algos(request.algos)
    specs = [_load(name) for name in request.scenarios]
    try:
        logger.info(
            f"Batch request: {len(specs)} scenario(s) x {len(request.algos)} algo(s) "
            f"x {request.repetitions} seed(s)"
        )
        summary = run_batch(specs, request.algos, repetitions=request.repetitions)
        return summary.model_dump()
    except Exception as e:
        logger.error(f"Error in batch endpoint: {e}")
        raise HTTPException(status_code=500, detail="Internal server error")
