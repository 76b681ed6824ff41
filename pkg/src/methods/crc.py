"""Post-hoc conformal risk control."""

from .method_strategy import MethodContext, MethodStrategy
from ..core import conformal, mlp
from ..core.conformal import IntervalSet


class CRCMethod(MethodStrategy):
    """Symmetric intervals of half-width λ·err with λ chosen by risk control."""
    
    name = 'crc'
    uses_base_models = True
    
    def member_intervals(self, ctx: MethodContext, member: int):
        params = ctx.base_models()[member]
        calib = conformal.crc_select_lambda(
            mlp.predict(params, ctx.val.X), ctx.val.y, ctx.spec, ctx.lambda_grid
        )
        if calib.fallback:
            self.logger.warning(f"member {member}: no λ met the risk bound, using λ_max={calib.lambda_}")
        return {
            'intervals': IntervalSet.symmetric(mlp.predict(params, ctx.test.X), calib.half_width),
            'lambda': calib.lambda_,
            'err': calib.err,
            'I': calib.half_width,
        }
