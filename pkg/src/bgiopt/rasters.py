"""Esri ASCII grid reading and writing.

Header keys must appear in the exact order ncols, nrows, xllcorner,
yllcorner, cellsize, NODATA_value; data rows are listed north to south and
are stored row-major with row 0 the northernmost.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InputError

__all__ = ["Grid", "parse_ascii_grid", "write_ascii_grid", "read_ascii_grid_file"]

_HEADER_KEYS = ("ncols", "nrows", "xllcorner", "yllcorner", "cellsize", "NODATA_value")


@dataclass(frozen=True)
class Grid:
    """Raster georeferencing: cell counts, lower-left corner, cell size."""

    ncols: int
    nrows: int
    xll: float
    yll: float
    cellsize: float
    nodata: float = -9999.0

    def __post_init__(self) -> None:
        if self.ncols < 1 or self.nrows < 1:
            raise InputError("grid must have at least one row and one column")
        if self.cellsize <= 0.0:
            raise InputError(f"cellsize must be positive, got {self.cellsize}")

    @property
    def shape(self) -> tuple[int, int]:
        return (self.nrows, self.ncols)

    def cell_centers(self) -> tuple[np.ndarray, np.ndarray]:
        """Coordinates of the cell centres as (x per column, y per row)."""
        cx = self.xll + (np.arange(self.ncols) + 0.5) * self.cellsize
        cy = self.yll + (self.nrows - np.arange(self.nrows) - 0.5) * self.cellsize
        return cx, cy

    @property
    def xmax(self) -> float:
        return self.xll + self.ncols * self.cellsize

    @property
    def ymax(self) -> float:
        return self.yll + self.nrows * self.cellsize


def parse_ascii_grid(text: str) -> tuple[Grid, np.ndarray]:
    """Parse ASCII grid text into (Grid, values).

    Cells equal to the NODATA sentinel come back as NaN. Raises InputError
    with a line number on any malformed content.
    """
    lines = text.splitlines()
    header: dict[str, float] = {}
    pos = 0
    for key in _HEADER_KEYS:
        if pos >= len(lines):
            raise InputError(f"line {pos + 1}: missing header key {key!r}")
        parts = lines[pos].split()
        if len(parts) != 2 or parts[0].lower() != key.lower():
            raise InputError(f"line {pos + 1}: expected header key {key!r}")
        try:
            header[key] = float(parts[1])
        except ValueError as exc:
            raise InputError(f"line {pos + 1}: non-numeric value for {key!r}") from exc
        pos += 1

    if header["ncols"] != int(header["ncols"]) or header["nrows"] != int(header["nrows"]):
        raise InputError("ncols and nrows must be integers")
    grid = Grid(
        ncols=int(header["ncols"]),
        nrows=int(header["nrows"]),
        xll=header["xllcorner"],
        yll=header["yllcorner"],
        cellsize=header["cellsize"],
        nodata=header["NODATA_value"],
    )

    values = np.empty(grid.shape, dtype=np.float64)
    row = 0
    for lineno in range(pos, len(lines)):
        tokens = lines[lineno].split()
        if not tokens:
            continue
        if row >= grid.nrows:
            raise InputError(f"line {lineno + 1}: more data rows than nrows={grid.nrows}")
        if len(tokens) != grid.ncols:
            raise InputError(
                f"line {lineno + 1}: expected {grid.ncols} values, found {len(tokens)}"
            )
        for col, tok in enumerate(tokens):
            try:
                values[row, col] = float(tok)
            except ValueError as exc:
                raise InputError(f"line {lineno + 1}: non-numeric token {tok!r}") from exc
        row += 1
    if row != grid.nrows:
        raise InputError(f"expected {grid.nrows} data rows, found {row}")

    values[values == grid.nodata] = np.nan
    return grid, values


def write_ascii_grid(grid: Grid, values: np.ndarray) -> str:
    """Serialize values (NaN rendered as the NODATA sentinel) to grid text.

    Numbers are written with repr so finite values round-trip bit-for-bit.
    """
    if values.shape != grid.shape:
        raise InputError(f"values shape {values.shape} does not match grid {grid.shape}")
    lines = [
        f"ncols {grid.ncols}",
        f"nrows {grid.nrows}",
        f"xllcorner {grid.xll!r}",
        f"yllcorner {grid.yll!r}",
        f"cellsize {grid.cellsize!r}",
        f"NODATA_value {grid.nodata!r}",
    ]
    for row in range(grid.nrows):
        toks = [
            repr(grid.nodata) if np.isnan(v) else repr(float(v))
            for v in values[row]
        ]
        lines.append(" ".join(toks))
    return "\n".join(lines) + "\n"


def read_ascii_grid_file(path: str) -> tuple[Grid, np.ndarray]:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise InputError(f"cannot read grid file {path}: {exc}") from exc
    return parse_ascii_grid(text)
