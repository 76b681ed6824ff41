"""Training-aware conformal risk control."""

from .method_strategy import MethodContext, MethodStrategy
from ..core import training_aware


class TrainingAwareCRCMethod(MethodStrategy):
    """
    Per-minibatch λ selection inside the training loop.

    Test intervals use the averaged one-sided width of the training steps.
    """
    
    name = 'ta_crc'
    
    def member_intervals(self, ctx: MethodContext, member: int):
        model = training_aware.crc_aware_train(
            ctx.train.X, ctx.train.y, ctx.val.X, ctx.val.y, ctx.loop_config(member)
        )
        return {
            'intervals': training_aware.fixed_interval_set(model, ctx.test.X),
            'I': model.one_sided_width_I,
        }
