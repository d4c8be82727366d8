"""Alignment-quality metrics over paired latent estimates.

All metrics are means of per-sample (per-column) Euclidean norms:
cross-modal error compares the two modality estimates, reconstruction error
compares an estimate against known ground-truth latents.
"""

from dataclasses import dataclass

import numpy as np

from .matio import format_float
from .solver import as_matrix


def _check_pair(a: np.ndarray, b: np.ndarray, name_a: str, name_b: str):
    a = as_matrix(a, name_a, allow_empty=True)
    b = as_matrix(b, name_b, allow_empty=True)
    if a.shape != b.shape:
        raise ValueError(f"{name_a} and {name_b} shapes differ: {a.shape} vs {b.shape}")
    if a.shape[1] == 0:
        raise ValueError("need at least one sample column")
    return a, b


def cmae(z1_hat: np.ndarray, z2_hat: np.ndarray) -> float:
    """Mean Euclidean gap between paired latent estimates."""
    z1_hat, z2_hat = _check_pair(z1_hat, z2_hat, "z1_hat", "z2_hat")
    return float(np.mean(np.linalg.norm(z1_hat - z2_hat, axis=0)))


def normalize_columns(z: np.ndarray) -> np.ndarray:
    """Scale each column to unit norm; exactly-zero columns stay zero."""
    z = as_matrix(z, "z", allow_empty=True)
    norms = np.linalg.norm(z, axis=0)
    out = z.copy()
    nz = norms > 0.0
    out[:, nz] = z[:, nz] / norms[nz]
    return out


def ncmae(z1_hat: np.ndarray, z2_hat: np.ndarray) -> float:
    """Cross-modal error after L2-normalizing each latent column."""
    z1_hat, z2_hat = _check_pair(z1_hat, z2_hat, "z1_hat", "z2_hat")
    return cmae(normalize_columns(z1_hat), normalize_columns(z2_hat))


def mlre(z_true: np.ndarray, z_hat: np.ndarray) -> float:
    """Mean Euclidean error of an estimate against ground-truth latents."""
    z_true, z_hat = _check_pair(z_true, z_hat, "z_true", "z_hat")
    return float(np.mean(np.linalg.norm(z_true - z_hat, axis=0)))


def mlre_avg(z_true: np.ndarray, z_hats) -> float:
    """Mean of per-modality reconstruction errors."""
    z_hats = list(z_hats)
    if not z_hats:
        raise ValueError("need at least one modality estimate")
    return float(np.mean([mlre(z_true, zh) for zh in z_hats]))


@dataclass(frozen=True)
class MetricReport:
    """One evaluation's metrics. Reconstruction fields are None when no
    ground truth was available (e.g. aligning externally supplied
    features)."""

    cmae: float
    ncmae: float
    residual_frobenius: float
    n: int
    mlre_per_modality: tuple = None
    mlre_avg: float = None

    def __post_init__(self):
        values = [self.cmae, self.ncmae, self.residual_frobenius]
        if self.mlre_per_modality is not None:
            object.__setattr__(self, "mlre_per_modality", tuple(self.mlre_per_modality))
            values.extend(self.mlre_per_modality)
        if self.mlre_avg is not None:
            values.append(self.mlre_avg)
        for v in values:
            if not np.isfinite(v) or v < 0:
                raise ValueError(f"metrics must be finite and >= 0, got {v}")
        if self.n < 1:
            raise ValueError("n must be >= 1")

    def csv_header(self) -> str:
        m = len(self.mlre_per_modality or ())
        cols = ["cmae", "ncmae"]
        cols += [f"mlre_{i + 1}" for i in range(m)]
        cols += ["mlre_avg", "residual_frobenius", "n"]
        return ",".join(cols)

    def csv_row(self) -> str:
        cells = [format_float(self.cmae), format_float(self.ncmae)]
        cells += [format_float(v) for v in (self.mlre_per_modality or ())]
        cells.append("" if self.mlre_avg is None else format_float(self.mlre_avg))
        cells += [format_float(self.residual_frobenius), str(self.n)]
        return ",".join(cells)

    def to_dict(self) -> dict:
        out = {
            "cmae": self.cmae,
            "ncmae": self.ncmae,
            "residual_frobenius": self.residual_frobenius,
            "n": self.n,
        }
        if self.mlre_per_modality is not None:
            out["mlre_per_modality"] = list(self.mlre_per_modality)
        if self.mlre_avg is not None:
            out["mlre_avg"] = self.mlre_avg
        return out

    def format_block(self) -> str:
        lines = [
            f"cross-modal alignment error (CMAE):   {self.cmae:.6e}",
            f"normalized CMAE (NCMAE):              {self.ncmae:.6e}",
        ]
        if self.mlre_per_modality is not None:
            for i, v in enumerate(self.mlre_per_modality):
                lines.append(f"latent reconstruction error, mod {i + 1}:   {v:.6e}")
        if self.mlre_avg is not None:
            lines.append(f"latent reconstruction error, mean:    {self.mlre_avg:.6e}")
        lines.append(f"residual Frobenius norm:              {self.residual_frobenius:.6e}")
        lines.append(f"samples:                              {self.n}")
        return "\n".join(lines)


def make_report(z1_hat: np.ndarray, z2_hat: np.ndarray, residual_frobenius: float,
                z_true: np.ndarray = None) -> MetricReport:
    """Assemble a MetricReport from latent estimates (and ground truth when
    known)."""
    per = None
    avg = None
    if z_true is not None:
        per = (mlre(z_true, z1_hat), mlre(z_true, z2_hat))
        avg = float(np.mean(per))
    return MetricReport(
        cmae=cmae(z1_hat, z2_hat),
        ncmae=ncmae(z1_hat, z2_hat),
        residual_frobenius=float(residual_frobenius),
        n=z1_hat.shape[1],
        mlre_per_modality=per,
        mlre_avg=avg,
    )
