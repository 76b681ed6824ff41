"""Interval method implementations."""

from .method_strategy import MethodContext, MethodOutput, MethodStrategy
from .base_model import BaseModelMethod
from .split_cp import SplitConformalMethod
from .cqr import CQRMethod
from .crc import CRCMethod
from .conformal_training import ConformalTrainingMethod
from .ta_crc import TrainingAwareCRCMethod


# Mapping of method names to strategy classes, in report order
METHOD_REGISTRY = {
    'base': BaseModelMethod,
    'cp': SplitConformalMethod,
    'cqr': CQRMethod,
    'crc': CRCMethod,
    'ct': ConformalTrainingMethod,
    'ta_crc': TrainingAwareCRCMethod,
}

METHOD_LABELS = {
    'base': 'Base Model',
    'cp': 'CP',
    'cqr': 'CQR',
    'crc': 'CRC',
    'ct': 'CT',
    'ta_crc': 'TA-CRC',
}

__all__ = [
    'MethodContext', 'MethodOutput', 'MethodStrategy', 'BaseModelMethod',
    'SplitConformalMethod', 'CQRMethod', 'CRCMethod', 'ConformalTrainingMethod',
    'TrainingAwareCRCMethod', 'METHOD_REGISTRY', 'METHOD_LABELS'
]
