"""Ensemble base model without intervals."""

import numpy as np

from .method_strategy import MethodContext, MethodOutput, MethodStrategy
from ..core import mlp
from ..core.conformal import IntervalSet


class BaseModelMethod(MethodStrategy):
    """Mean of the member predictions, triaged directly against the threshold."""
    
    name = 'base'
    has_intervals = False
    
    def member_intervals(self, ctx: MethodContext, member: int):
        prediction = mlp.predict(ctx.base_models()[member], ctx.test.X)
        return {'intervals': IntervalSet.symmetric(prediction, 0.0)}
    
    def run(self, ctx: MethodContext) -> MethodOutput:
        predictions = np.mean([mlp.predict(p, ctx.test.X) for p in ctx.base_models()], axis=0)
        self.logger.info(f"base: mean test prediction {predictions.mean():.4f}")
        return MethodOutput(
            intervals=IntervalSet.symmetric(predictions, 0.0),
            point_predictions=predictions,
        )
