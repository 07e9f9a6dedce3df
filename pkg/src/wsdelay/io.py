"""File formats: complex-matrix CSV, spectra, grids, meshes, and the flat
key=value scenario config.

All numeric fields print with 17 significant digits so write/read round-trips
are exact for finite doubles; orderings follow the deterministic mode
ordering, so identical configs produce byte-identical files.
"""

import os
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ConfigError
from .modal import ModeSet

FMT = "%.17g"


def _fmt(x) -> str:
    return FMT % float(x)


# ---------------------------------------------------------------------------
# matrices and vectors
# ---------------------------------------------------------------------------
def write_complex_matrix(path, matrix: np.ndarray):
    m = np.asarray(matrix)
    with open(path, "w") as fh:
        fh.write("row,col,re,im\n")
        for i in range(m.shape[0]):
            for j in range(m.shape[1]):
                fh.write(f"{i},{j},{_fmt(m[i, j].real)},{_fmt(m[i, j].imag)}\n")


def read_complex_matrix(path) -> np.ndarray:
    rows, cols, res, ims = [], [], [], []
    with open(path) as fh:
        header = fh.readline().strip()
        if header != "row,col,re,im":
            raise ConfigError(f"{path}: unexpected matrix header {header!r}")
        for lineno, line in enumerate(fh, start=2):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != 4:
                raise ConfigError(f"{path}:{lineno}: malformed matrix row")
            try:
                rows.append(int(parts[0]))
                cols.append(int(parts[1]))
                res.append(float(parts[2]))
                ims.append(float(parts[3]))
            except ValueError as exc:
                raise ConfigError(f"{path}:{lineno}: {exc}") from None
    n_rows, n_cols = max(rows) + 1, max(cols) + 1
    out = np.zeros((n_rows, n_cols), dtype=complex)
    out[rows, cols] = np.array(res) + 1j * np.array(ims)
    return out


def write_spectrum(path, delays: np.ndarray):
    """Delay spectrum, ascending; index is 1-based like the mode numbering."""
    with open(path, "w") as fh:
        fh.write("index,delay\n")
        for i, d in enumerate(delays, start=1):
            fh.write(f"{i},{_fmt(d)}\n")


def write_modeset(path, modes: ModeSet):
    with open(path, "w") as fh:
        if modes.dim == 3:
            fh.write("index,l,m\n")
            for i, p in enumerate(modes.modes):
                fh.write(f"{i},{p.l},{p.m}\n")
        else:
            fh.write("index,n\n")
            for i, p in enumerate(modes.modes):
                fh.write(f"{i},{p.n}\n")


def write_field_grid(path, grid):
    """Field samples, row-major (x fastest), header x,y,re,im,masked."""
    pts = grid.spec.points()
    with open(path, "w") as fh:
        fh.write("x,y,re,im,masked\n")
        for (x, y), v, m in zip(pts, grid.values, grid.mask):
            fh.write(f"{_fmt(x)},{_fmt(y)},{_fmt(v.real)},{_fmt(v.imag)},{int(m)}\n")


def write_classification(path, classification):
    with open(path, "w") as fh:
        fh.write("index,label,delay,boundary_fraction,corner_fraction,interior_fraction,warning\n")
        for c in classification:
            fh.write(
                f"{c.index + 1},{c.label},{_fmt(c.delay)},{_fmt(c.boundary_fraction)},"
                f"{_fmt(c.corner_fraction)},{_fmt(c.interior_fraction)},{int(c.warning)}\n"
            )


def write_mesh(path, mesh):
    nrm = mesh.normals
    w = mesh.weights
    with open(path, "w") as fh:
        fh.write("x,y,nx,ny,weight\n")
        for i in range(mesh.n_nodes):
            fh.write(
                f"{_fmt(mesh.nodes[i, 0])},{_fmt(mesh.nodes[i, 1])},"
                f"{_fmt(nrm[i, 0])},{_fmt(nrm[i, 1])},{_fmt(w[i])}\n"
            )


# ---------------------------------------------------------------------------
# scenario config
# ---------------------------------------------------------------------------
SCENARIOS = ("sphere", "cylinder", "strip", "cavity", "custom")
CHECK_NAMES = ("volume-q", "appendix-b", "simdiag")


@dataclass
class ScenarioConfig:
    scenario: str
    bc: str = "soft"
    k: float = 1.0
    a: float = 1.0                    # sphere/cylinder radius
    w: float = 3.0                    # cavity gap width
    mode_count: Optional[int] = None  # explicit M
    suggest_a: Optional[float] = None  # sizing-rule inputs when M not given
    suggest_c: float = 3.0
    delta_k: Optional[float] = None   # FD step; default 1e-4 k
    richardson: bool = False
    nodes_per_wavelength: float = 12.0
    grading_exponent: int = 4
    grid_nx: int = 301
    grid_ny: int = 301
    grid_halfwidth: Optional[float] = None
    smatrix_gate: float = 1e-3
    vol_kr: float = 200.0
    vol_npw: float = 16.0
    checks: tuple = ()
    export_modes: tuple = ()          # 1-based mode indices for field export
    polyline: Optional[str] = None
    seed: Optional[int] = None        # reserved; no stochastic components

    def validate(self):
        if self.scenario not in SCENARIOS:
            raise ConfigError(f"unknown scenario {self.scenario!r}")
        if self.bc not in ("soft", "hard"):
            raise ConfigError(f"bc must be soft or hard, got {self.bc!r}")
        for name, val in (("k", self.k), ("a", self.a), ("w", self.w)):
            if val <= 0:
                raise ConfigError(f"{name} must be positive")
        if self.mode_count is not None:
            if self.mode_count <= 0:
                raise ConfigError("modes must be positive")
            if self.scenario != "sphere" and self.mode_count % 2 == 0:
                raise ConfigError("2D mode count must be odd")
        for c in self.checks:
            if c not in CHECK_NAMES:
                raise ConfigError(f"unknown check {c!r}")
        if self.scenario == "custom" and not self.polyline:
            raise ConfigError("custom scenario needs polyline=<csv path>")
        return self


_BOOL = {"true": True, "1": True, "yes": True, "false": False, "0": False, "no": False}

_FIELD_PARSERS = {
    "scenario": str,
    "bc": str,
    "k": float,
    "a": float,
    "w": float,
    "modes": int,
    "suggest_a": float,
    "suggest_c": float,
    "delta_k": float,
    "richardson": lambda s: _BOOL[s.lower()],
    "nodes_per_wavelength": float,
    "grading_exponent": int,
    "grid_nx": int,
    "grid_ny": int,
    "grid_halfwidth": float,
    "smatrix_gate": float,
    "vol_kr": float,
    "vol_npw": float,
    "checks": lambda s: tuple(x.strip() for x in s.split(",") if x.strip()),
    "export_modes": lambda s: tuple(int(x) for x in s.split(",") if x.strip()),
    "polyline": str,
    "seed": int,
}

_FIELD_NAMES = {"modes": "mode_count"}


def parse_config(path) -> ScenarioConfig:
    """Parse the flat key=value scenario file (# starts a comment)."""
    values = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError("expected key=value", line=lineno)
            key, _, val = line.partition("=")
            key, val = key.strip(), val.strip()
            if key not in _FIELD_PARSERS:
                raise ConfigError(f"unknown key {key!r}", line=lineno)
            try:
                values[_FIELD_NAMES.get(key, key)] = _FIELD_PARSERS[key](val)
            except ConfigError:
                raise
            except Exception as exc:
                raise ConfigError(f"bad value for {key}: {exc}", line=lineno) from None
    if "scenario" not in values:
        raise ConfigError("config must set scenario=")
    return ScenarioConfig(**values).validate()


def read_polyline(path) -> np.ndarray:
    verts = []
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.replace(",", " ").split()
            if len(parts) != 2:
                raise ConfigError("expected two coordinates per line", line=lineno)
            verts.append((float(parts[0]), float(parts[1])))
    return np.asarray(verts, dtype=float)


def ensure_dir(path):
    os.makedirs(path, exist_ok=True)
    return path
