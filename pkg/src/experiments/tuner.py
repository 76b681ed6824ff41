"""Grid search over the base model hyperparameters."""

import itertools
from dataclasses import dataclass, replace
from typing import Any, Dict, List, Optional

import numpy as np

from ..core import mlp
from ..core.mlp import TrainConfig
from ..data.dataset import Dataset
from ..utils.errors import DivergedTrainingError, EmptyInputError
from ..utils.logger import get_logger


DEFAULT_GRID: Dict[str, List[Any]] = {
    'hidden': [50, 100, 200],
    'activation': ['relu', 'sigmoid'],
    'epochs': [500, 1000, 1500],
    'learning_rate': [0.1, 0.01, 0.001],
}


@dataclass(frozen=True)
class TuningResult:
    best: Dict[str, Any]
    best_mse: float
    scores: List[Dict[str, Any]]


class HyperparameterTuner:
    """
    Trains one base model per grid point and keeps the lowest validation MSE.

    Candidates whose training diverges are logged and skipped. Ties keep the
    earliest grid point.
    """

    def __init__(self, grid: Optional[Dict[str, List[Any]]] = None):
        grid = dict(DEFAULT_GRID if grid is None else grid)
        unknown = set(grid) - set(DEFAULT_GRID)
        if unknown:
            raise ValueError(f"Unknown tuning grid keys: {sorted(unknown)}")
        if any(not values for values in grid.values()):
            raise ValueError("Every tuning grid entry needs at least one value")
        self.grid = grid
        self.logger = get_logger(self.__class__.__name__)

    def candidates(self) -> List[Dict[str, Any]]:
        keys = list(self.grid)
        return [dict(zip(keys, values)) for values in itertools.product(*(self.grid[k] for k in keys))]

    def tune(self, train: Dataset, val: Dataset, base: TrainConfig) -> TuningResult:
        """
        Search the grid.

        Args:
            train: Standardized (balanced) training split
            val: Standardized validation split
            base: Configuration providing every value the grid does not set

        Returns:
            TuningResult with the best candidate and every score

        Raises:
            EmptyInputError: If every candidate diverged
        """
        candidates = self.candidates()
        self.logger.info(f"Tuning over {len(candidates)} candidates")
        scores = []
        best = None
        for candidate in candidates:
            config = replace(base, **candidate)
            try:
                params = mlp.train(train.X, train.y, config)
            except DivergedTrainingError as e:
                self.logger.warning(f"Skipping {candidate}: {e}")
                continue
            val_mse = float(np.mean((mlp.predict(params, val.X) - val.y) ** 2))
            scores.append({**candidate, 'val_mse': val_mse})
            self.logger.debug(f"{candidate}: val_mse={val_mse:.4f}")
            if best is None or val_mse < best[1]:
                best = (candidate, val_mse)

        if best is None:
            raise EmptyInputError("Every tuning candidate diverged")
        self.logger.info(f"Best hyperparameters: {best[0]} (val_mse={best[1]:.4f})")
        return TuningResult(best=best[0], best_mse=best[1], scores=scores)
