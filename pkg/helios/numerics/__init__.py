# helios - numerics package
# MIT License

from helios.numerics.functional import (
    BN_EPS,
    BN_MOMENTUM,
    PROB_FLOOR,
    batchnorm1d,
    conv1d,
    conv1d_output_length,
    cross_entropy,
    dense,
    flatten,
    relu,
    softmax,
    softmax_cross_entropy,
)
from helios.numerics.gradcheck import gradcheck, numerical_gradient, relative_error
from helios.numerics.optim import Adam, AdamState, Parameter, adam_step
from helios.numerics.tensor import DEFAULT_DTYPE, Tensor, add, as_tensor, backward, matmul, mul, reshape, tensor_mean, tensor_sum

__all__ = [
    'Tensor',
    'DEFAULT_DTYPE',
    'as_tensor',
    'backward',
    'add',
    'mul',
    'matmul',
    'reshape',
    'tensor_sum',
    'tensor_mean',
    'dense',
    'conv1d',
    'conv1d_output_length',
    'batchnorm1d',
    'relu',
    'flatten',
    'softmax',
    'cross_entropy',
    'softmax_cross_entropy',
    'PROB_FLOOR',
    'BN_MOMENTUM',
    'BN_EPS',
    'Parameter',
    'AdamState',
    'adam_step',
    'Adam',
    'gradcheck',
    'numerical_gradient',
    'relative_error',
]
