"""
Correspondence package: camera pixel, depth, order and wavelength to projector column.
"""

from correspondence.blob import decode_model, encode_model, load_model, save_model
from correspondence.model import (
    CorrespondenceGrids,
    CorrespondenceModel,
    ValidationReport,
    build_lut,
    build_model,
    columns_on_grid,
    knot_columns,
    order_validity,
    query,
    query_many,
    valid_order_mask,
    valid_orders,
    validate,
)
from correspondence.power_law import PowerLawFit, evaluate_power_law, fit_power_law, fit_power_law_batch
from correspondence.sampling import (
    SAMPLE_COLUMNS,
    CorrespondenceSample,
    frame_rows,
    fit_oracle_model,
    frame_to_samples,
    sample_correspondence_oracle,
    samples_from_list,
    samples_to_frame,
)
from correspondence.scanline_index import nearest_column, px2index, px2index_many
from correspondence.zero_order import zero_order, zero_order_many

__all__ = [
    "zero_order",
    "zero_order_many",
    "px2index",
    "px2index_many",
    "nearest_column",
    "PowerLawFit",
    "fit_power_law",
    "fit_power_law_batch",
    "evaluate_power_law",
    "CorrespondenceGrids",
    "CorrespondenceModel",
    "ValidationReport",
    "build_model",
    "build_lut",
    "query",
    "query_many",
    "knot_columns",
    "columns_on_grid",
    "valid_orders",
    "order_validity",
    "valid_order_mask",
    "validate",
    "CorrespondenceSample",
    "SAMPLE_COLUMNS",
    "sample_correspondence_oracle",
    "samples_to_frame",
    "samples_from_list",
    "fit_oracle_model",
    "frame_to_samples",
    "frame_rows",
    "encode_model",
    "decode_model",
    "save_model",
    "load_model",
]
