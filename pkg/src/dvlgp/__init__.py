"""DVL velocity estimation with multi-output GP regression and INS/DVL fusion."""

__version__ = "0.1.0"
