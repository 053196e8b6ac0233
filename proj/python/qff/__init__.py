"""Quantum neural network force fields."""

from ._qff import (
    ArgumentError,
    CapacityError,
    DataError,
    Error,
    NumericalError,
    ParseError,
    QnnTemplate,
    cli,
    dominant_frequency,
    effective_dimension,
    eval_qnn,
    generate_dataset,
    grad_inputs,
    grad_params,
    make_template,
    mixed_hessian,
    model_spectrum,
    morse_md,
    preset_names,
    preset_template,
)

__all__ = [name for name in dir() if not name.startswith("_")]
