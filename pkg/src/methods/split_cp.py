"""Split conformal prediction on the shared base models."""

from .method_strategy import MethodContext, MethodStrategy
from ..core import conformal, mlp
from ..core.conformal import IntervalSet


class SplitConformalMethod(MethodStrategy):
    """Fixed-width intervals from the corrected (1 - alpha) residual quantile."""
    
    name = 'cp'
    uses_base_models = True
    
    def member_intervals(self, ctx: MethodContext, member: int):
        params = ctx.base_models()[member]
        scores = conformal.nonconformity(mlp.predict(params, ctx.val.X), ctx.val.y)
        half_width = conformal.conformal_quantile(scores, ctx.spec.alpha)
        return {
            'intervals': IntervalSet.symmetric(mlp.predict(params, ctx.test.X), half_width),
            'I': half_width,
        }
