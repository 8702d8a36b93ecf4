"""Enumerations shared across the pipeline."""
from enum import Enum


class JointType(str, Enum):
    REVOLUTE = "revolute"
    PRISMATIC = "prismatic"

    @property
    def flag(self) -> float:
        """Type entry of the 7-vector joint encoding (1 = revolute)."""
        return 1.0 if self is JointType.REVOLUTE else 0.0

    @classmethod
    def from_flag(cls, flag: float) -> "JointType":
        return cls.REVOLUTE if flag >= 0.5 else cls.PRISMATIC

    @property
    def other(self) -> "JointType":
        return JointType.PRISMATIC if self is JointType.REVOLUTE else JointType.REVOLUTE
