"""Python bindings for the bitkernel library."""

from bitkernel._core import (
    ConfigError,
    DimensionError,
    DivergenceError,
    DomainError,
    Error,
    InvalidInputError,
    InvalidRegimeError,
    IoError,
    NetworkState,
    NumericalError,
    ParseError,
    PoleError,
    __version__,
    bound_D,
    dequantize_dot,
    eigenvalues,
    evaluate_target,
    forward,
    gamma,
    generate_dataset,
    gram_matrix,
    init_network,
    lambert_w,
    predicted_loss_curve,
    quant_error_vector,
    quantize,
    run_command,
    train_twin,
)

__all__ = [
    "ConfigError",
    "DimensionError",
    "DivergenceError",
    "DomainError",
    "Error",
    "InvalidInputError",
    "InvalidRegimeError",
    "IoError",
    "NetworkState",
    "NumericalError",
    "ParseError",
    "PoleError",
    "__version__",
    "bound_D",
    "dequantize_dot",
    "eigenvalues",
    "evaluate_target",
    "forward",
    "gamma",
    "generate_dataset",
    "gram_matrix",
    "init_network",
    "lambert_w",
    "predicted_loss_curve",
    "quant_error_vector",
    "quantize",
    "run_command",
    "train_twin",
]
