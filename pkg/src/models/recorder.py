from typing import List, Optional, Sequence

import numpy as np
import pandas as pd

from .circuit import ParamVector
from .spectrum import k_label


class TrainLog:
    """Loss, residuals, tracked Δ_F(k) and per-frequency gradient norms in a single `snapshot()` call."""

    def __init__(
        self,
        n_records: int,
        tracked_ks: Sequence[float],
        num_points: int,
        record_every: int = 1,
        has_test: bool = False,
    ):
        """
        Args:
            n_records: ceil(iterations / record_every), used to pre-allocate arrays.
            tracked_ks: Label-spectrum peaks whose Δ_F and gradient norm are recorded.
            num_points: Training set size (residual vector length).
            record_every: Iteration stride between records.
            has_test: Whether a held-out loss column is recorded.
        """
        self._n_records = n_records
        self._tracked_ks = np.asarray(tracked_ks, dtype=np.float64)
        self._record_every = record_every
        self._has_test = has_test
        self._idx = 0  # write cursor

        n_tracked = self._tracked_ks.shape[0]
        self._iterations = np.zeros(n_records, dtype=np.int64)
        self._losses = np.empty(n_records, dtype=np.float64)
        self._test_losses = np.full(n_records, np.nan, dtype=np.float64)
        self._residuals = np.empty((n_records, num_points), dtype=np.float64)
        self._delta_f = np.empty((n_records, n_tracked), dtype=np.float64)
        self._grad_norms = np.empty((n_records, n_tracked), dtype=np.float64)

        self.final_params: Optional[ParamVector] = None
        self.final_loss: Optional[float] = None
        self.complete = False
        self.abort_reason: Optional[str] = None

    def snapshot(
        self,
        iteration: int,
        loss: float,
        residuals: np.ndarray,
        delta_f: np.ndarray,
        grad_norms: np.ndarray,
        test_loss: Optional[float] = None,
    ) -> None:
        """Record diagnostics for the parameters *before* the update at `iteration`."""
        i = self._idx
        if i >= self._n_records:
            raise IndexError(f"TrainLog already holds {self._n_records} records")

        self._iterations[i] = iteration
        self._losses[i] = loss
        self._residuals[i] = residuals
        self._delta_f[i] = delta_f
        self._grad_norms[i] = grad_norms
        if test_loss is not None:
            self._test_losses[i] = test_loss

        self._idx += 1

    def finalize(self, final_params: ParamVector, final_loss: float) -> None:
        self.final_params = final_params
        self.final_loss = float(final_loss)
        self.complete = True

    def mark_incomplete(self, reason: str, last_params: Optional[ParamVector] = None) -> None:
        self.complete = False
        self.abort_reason = reason
        if last_params is not None:
            self.final_params = last_params

    def __len__(self) -> int:
        return self._idx

    @property
    def record_every(self) -> int:
        return self._record_every

    @property
    def tracked_ks(self) -> np.ndarray:
        return self._tracked_ks.copy()

    @property
    def iterations(self) -> np.ndarray:
        return self._iterations[:self._idx].copy()

    @property
    def losses(self) -> np.ndarray:
        return self._losses[:self._idx].copy()

    @property
    def test_losses(self) -> np.ndarray:
        return self._test_losses[:self._idx].copy()

    @property
    def residuals(self) -> np.ndarray:
        return self._residuals[:self._idx].copy()

    @property
    def delta_f(self) -> np.ndarray:
        return self._delta_f[:self._idx].copy()

    @property
    def grad_norms(self) -> np.ndarray:
        return self._grad_norms[:self._idx].copy()

    def _k_columns(self, prefix: str) -> List[str]:
        return [f"{prefix}_k{k_label(k)}" for k in self._tracked_ks]

    def to_frame(self) -> pd.DataFrame:
        """
        Returns train_log rows as:
        iter, loss, [test_loss], delta_f_k{k}..., grad_norm_k{k}...
        """
        n = self._idx
        frame = pd.DataFrame({"iter": self._iterations[:n], "loss": self._losses[:n]})
        if self._has_test:
            frame["test_loss"] = self._test_losses[:n]
        for j, col in enumerate(self._k_columns("delta_f")):
            frame[col] = self._delta_f[:n, j]
        for j, col in enumerate(self._k_columns("grad_norm")):
            frame[col] = self._grad_norms[:n, j]
        return frame

    def residuals_frame(self) -> pd.DataFrame:
        """Returns residual snapshots as iter × grid: iter, eps_0, ..., eps_{N-1}."""
        n = self._idx
        frame = pd.DataFrame(
            self._residuals[:n],
            columns=[f"eps_{i}" for i in range(self._residuals.shape[1])],
        )
        frame.insert(0, "iter", self._iterations[:n])
        return frame
