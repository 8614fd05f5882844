from .records import (
    ALL_CHANNELS,
    BASAL,
    BOLUS,
    CALORIES,
    CARB,
    DRUG,
    FAT,
    GLUCOSE,
    MEAL_TEXT,
    NUMERIC_CHANNELS,
    PROTEIN,
    RawRecord,
    adjust_subcutaneous_delay,
    normalize_units,
)
from .grid import SampleGrid, resample_to_grid
from .clips import Clip, reassemble, segment
from .splits import DatasetSplit, split
from .synthetic import synthetic_profile, synthetic_records

__all__ = [
    "ALL_CHANNELS",
    "BASAL",
    "BOLUS",
    "CALORIES",
    "CARB",
    "DRUG",
    "FAT",
    "GLUCOSE",
    "MEAL_TEXT",
    "NUMERIC_CHANNELS",
    "PROTEIN",
    "RawRecord",
    "SampleGrid",
    "Clip",
    "DatasetSplit",
    "adjust_subcutaneous_delay",
    "normalize_units",
    "resample_to_grid",
    "reassemble",
    "segment",
    "split",
    "synthetic_records",
    "synthetic_profile",
]
