"""Conformal training with a lower-bound penalty."""

from .method_strategy import MethodContext, MethodStrategy
from ..core import training_aware


class ConformalTrainingMethod(MethodStrategy):
    
    name = 'ct'
    
    def member_intervals(self, ctx: MethodContext, member: int):
        model = training_aware.conformal_train(
            ctx.train.X, ctx.train.y, ctx.val.X, ctx.val.y, ctx.loop_config(member)
        )
        return {
            'intervals': training_aware.fixed_interval_set(model, ctx.test.X),
            'I': model.one_sided_width_I,
        }
