"""Patient basic information and its fixed-length encoding."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ..errors import UnencodableField

PROFILE_BASE_DIM = 11
MEDICAL_BLOCK_DIM = 8
PROFILE_DIM = PROFILE_BASE_DIM + MEDICAL_BLOCK_DIM

_SEXES = ("female", "male")


@dataclass
class PatientProfile:
    """Demographics plus an optional medical-record extension block.

    The medical block is a free-form numeric vector (lab panel values);
    it is truncated or zero-padded to MEDICAL_BLOCK_DIM when encoded.
    """

    height_cm: float
    weight_kg: float
    age_years: float
    sex: str
    bmi: float
    diabetes_type: int
    illness_duration_years: float
    smoking: bool = False
    drinking: bool = False
    medical_record: Optional[list[float]] = None
    patient_id: str = ""

    def encode(self) -> np.ndarray:
        """Scale to a PROFILE_DIM vector with all entries roughly in [0, 2]."""
        positives = {
            "height_cm": self.height_cm,
            "weight_kg": self.weight_kg,
            "age_years": self.age_years,
            "bmi": self.bmi,
        }
        for name, value in positives.items():
            if not np.isfinite(value) or value <= 0:
                raise UnencodableField(f"{name} must be finite and positive, got {value}")
        if self.illness_duration_years < 0 or not np.isfinite(self.illness_duration_years):
            raise UnencodableField(
                f"illness_duration_years must be finite and non-negative, "
                f"got {self.illness_duration_years}"
            )
        if self.sex not in _SEXES:
            raise UnencodableField(f"sex must be one of {_SEXES}, got {self.sex!r}")
        if self.diabetes_type not in (1, 2):
            raise UnencodableField(f"diabetes_type must be 1 or 2, got {self.diabetes_type}")

        vec = np.zeros(PROFILE_DIM)
        vec[0] = self.height_cm / 200.0
        vec[1] = self.weight_kg / 150.0
        vec[2] = self.age_years / 100.0
        vec[3] = 1.0 if self.sex == "female" else 0.0
        vec[4] = 1.0 if self.sex == "male" else 0.0
        vec[5] = self.bmi / 50.0
        vec[6] = 1.0 if self.diabetes_type == 1 else 0.0
        vec[7] = 1.0 if self.diabetes_type == 2 else 0.0
        vec[8] = self.illness_duration_years / 50.0
        vec[9] = 1.0 if self.smoking else 0.0
        vec[10] = 1.0 if self.drinking else 0.0

        if self.medical_record is not None:
            block = np.asarray(self.medical_record, dtype=float)[:MEDICAL_BLOCK_DIM]
            if not np.all(np.isfinite(block)):
                raise UnencodableField("medical_record contains non-finite values")
            vec[PROFILE_BASE_DIM : PROFILE_BASE_DIM + len(block)] = block / 100.0
        return vec

    def to_dict(self) -> dict:
        return {
            "patient_id": self.patient_id,
            "height_cm": self.height_cm,
            "weight_kg": self.weight_kg,
            "age_years": self.age_years,
            "sex": self.sex,
            "bmi": self.bmi,
            "diabetes_type": self.diabetes_type,
            "illness_duration_years": self.illness_duration_years,
            "smoking": self.smoking,
            "drinking": self.drinking,
            "medical_record": self.medical_record,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "PatientProfile":
        known = {f for f in cls.__dataclass_fields__}
        return cls(**{k: v for k, v in data.items() if k in known})


def encode_profile(profile: Optional[PatientProfile]) -> np.ndarray:
    """Encode a profile, or produce the zero placeholder when absent.

    Datasets without demographics (OhioT1DM-style) feed the zero vector;
    pair that with the recurrent decoder variant, which copes better when
    personal context is missing.
    """
    if profile is None:
        return np.zeros(PROFILE_DIM)
    return profile.encode()
