"""Base strategy shared by every interval method in the comparison."""

from abc import ABC, abstractmethod
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Any, Callable, Dict, List, Optional, TypeVar

import numpy as np

from ..core import mlp
from ..core.conformal import IntervalSet, RiskSpec, ensemble_hull
from ..core.mlp import MLPParams, TrainConfig
from ..core.training_aware import LoopConfig
from ..data.dataset import Dataset
from ..utils.logger import get_logger


T = TypeVar('T')


@dataclass
class MethodContext:
    """
    Everything the methods of one repeat share.

    Base models are trained once per ensemble member and reused by the
    post-hoc methods (base, cp, crc).
    """
    train: Dataset
    val: Dataset
    test: Dataset
    train_config: TrainConfig
    spec: RiskSpec
    lambda_grid: np.ndarray
    member_seeds: List[int]
    warmup_epochs: Optional[int] = None
    ct_penalty: str = 'lower'
    recalibrate: bool = False
    max_workers: int = 1
    _base_models: Optional[List[MLPParams]] = field(default=None, repr=False)

    def member_config(self, member: int, **overrides: Any) -> TrainConfig:
        return replace(self.train_config, seed=self.member_seeds[member], **overrides)

    def loop_config(self, member: int) -> LoopConfig:
        return LoopConfig(
            base=self.member_config(member),
            spec=self.spec,
            lambda_grid=tuple(self.lambda_grid),
            warmup_epochs=self.warmup_epochs,
            penalty=self.ct_penalty,
            recalibrate=self.recalibrate,
        )

    def map_members(self, fn: Callable[[int], T]) -> List[T]:
        """Run `fn` for every member index; results keep member order."""
        members = range(len(self.member_seeds))
        if self.max_workers <= 1 or len(self.member_seeds) == 1:
            return [fn(m) for m in members]
        with ThreadPoolExecutor(max_workers=self.max_workers) as pool:
            return list(pool.map(fn, members))

    def base_models(self) -> List[MLPParams]:
        if self._base_models is None:
            self._base_models = self.map_members(
                lambda m: mlp.train(self.train.X, self.train.y, self.member_config(m))
            )
        return self._base_models


@dataclass
class MethodOutput:
    """Test intervals of a method plus per-member calibration details."""
    intervals: IntervalSet
    details: Dict[str, List[float]] = field(default_factory=dict)
    point_predictions: Optional[np.ndarray] = None


class MethodStrategy(ABC):
    """
    Abstract base class for the interval methods.

    Subclasses produce one interval set per ensemble member; `run` combines
    them with the conservative hull.
    """
    
    name: str = ''
    has_intervals: bool = True
    uses_base_models: bool = False
    
    def __init__(self):
        self.logger = get_logger(self.__class__.__name__)
    
    @abstractmethod
    def member_intervals(self, ctx: MethodContext, member: int) -> Dict[str, Any]:
        """
        Calibrate one ensemble member and build its test intervals.
        
        Args:
            ctx: Shared repeat context
            member: Ensemble member index
            
        Returns:
            Dictionary with key 'intervals' (IntervalSet) plus scalar details
        """
        pass
    
    def run(self, ctx: MethodContext) -> MethodOutput:
        """Build member intervals and aggregate them across the ensemble."""
        if self.uses_base_models:
            # train shared models before members fan out to threads
            ctx.base_models()
        results = ctx.map_members(lambda m: self.member_intervals(ctx, m))
        intervals = ensemble_hull([r['intervals'] for r in results])
        details: Dict[str, List[float]] = {}
        for result in results:
            for key, value in result.items():
                if key != 'intervals':
                    details.setdefault(key, []).append(float(value))
        summary = ', '.join(f"{k}={np.mean(v):.4f}" for k, v in details.items())
        self.logger.info(f"{self.name}: {len(results)} members{', ' + summary if summary else ''}")
        return MethodOutput(intervals=intervals, details=details)
