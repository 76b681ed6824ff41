"""Conformalized quantile regression."""

from .method_strategy import MethodContext, MethodStrategy
from ..core import conformal, mlp


class CQRMethod(MethodStrategy):
    """Low/high quantile heads calibrated separately on validation residuals."""
    
    name = 'cqr'
    
    def member_intervals(self, ctx: MethodContext, member: int):
        q_low, q_high = mlp.train_quantile_pair(
            ctx.train.X, ctx.train.y, ctx.member_config(member), ctx.spec.alpha
        )
        I_low, I_high = conformal.cqr_calibrate(
            mlp.predict(q_low, ctx.val.X), mlp.predict(q_high, ctx.val.X), ctx.val.y, ctx.spec.alpha
        )
        intervals = conformal.cqr_intervals(
            mlp.predict(q_low, ctx.test.X), mlp.predict(q_high, ctx.test.X), I_low, I_high
        )
        return {
            'intervals': intervals,
            'I_low': I_low,
            'I_high': I_high,
            'crossed': float(intervals.crossed.sum()),
        }
