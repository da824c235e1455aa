import logging
from typing import Dict

import numpy as np
import pandas as pd

from ..models.errors import ErrorReport, OutputValidationException

logger = logging.getLogger(__name__)

# Boolean column marking rows whose delta_f_* cells were not computed
TRACKED_FLAG = "frequencies_tracked"


class OutputValidator:
    """
    Final checkpoint before tables hit disk: every table has rows and
    no numeric column holds NaN. Infinite values are only allowed in
    ratio columns, where they mark a predicted magnitude over a zero actual.
    Empty delta_f_* cells are allowed on rows whose TRACKED_FLAG is False.
    """

    def validate(self, frames: Dict[str, pd.DataFrame]) -> Dict[str, pd.DataFrame]:
        """
        Accumulates errors using the ErrorReport pattern.
        Raises OutputValidationException if any check fails.
        Returns the same mapping if valid.
        """
        errors = ErrorReport()

        for name, frame in frames.items():
            if frame.empty:
                errors.add(f"{name}: table is empty")
                continue
            untracked = None
            if TRACKED_FLAG in frame.columns:
                untracked = ~frame[TRACKED_FLAG].fillna(False).to_numpy(dtype=bool)
            numeric = frame.select_dtypes(include=[np.number])
            for column in numeric.columns:
                values = numeric[column].to_numpy(dtype=np.float64)
                missing = np.isnan(values)
                if untracked is not None and column.startswith("delta_f_"):
                    missing &= ~untracked
                if missing.any():
                    errors.add(f"{name}: NaN in column '{column}'")
                if np.isinf(values).any() and not column.startswith("ratio_"):
                    errors.add(f"{name}: infinite value in column '{column}'")

        if not errors.is_empty():
            logger.error(f"Output validation failed: {errors.errors}")
            raise OutputValidationException(errors)

        return frames
