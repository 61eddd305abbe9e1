"""Reading and writing spectra files for ingest.

Two container formats, selected by config:

* ``jsonl`` — one record per line:
  ``{"ts":..,"x":..,"y":..,"wavenumbers":[..],"intensities":[..]}``
* ``csv`` — long columnar text with header ``ts,x,y,wavenumber,intensity``;
  consecutive rows sharing (ts, x, y) form one spectrum.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import Iterable, Iterator

from ..errors import SpectrumError
from .types import Spectrum

FORMATS = ("jsonl", "csv")


def read_spectra(path: str | Path, fmt: str = "jsonl") -> Iterator[Spectrum]:
    if fmt == "jsonl":
        yield from _read_jsonl(Path(path))
    elif fmt == "csv":
        yield from _read_csv(Path(path))
    else:
        raise SpectrumError(f"unknown spectra format {fmt!r}; expected one of {FORMATS}")


def write_spectra(path: str | Path, spectra: Iterable[Spectrum], fmt: str = "jsonl") -> int:
    count = 0
    path = Path(path)
    if fmt == "jsonl":
        with path.open("w", encoding="utf-8") as fh:
            for spec in spectra:
                fh.write(
                    json.dumps(
                        {
                            "ts": spec.ts,
                            "x": spec.x,
                            "y": spec.y,
                            "wavenumbers": spec.wavenumbers.tolist(),
                            "intensities": spec.intensities.tolist(),
                        }
                    )
                )
                fh.write("\n")
                count += 1
    elif fmt == "csv":
        with path.open("w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["ts", "x", "y", "wavenumber", "intensity"])
            for spec in spectra:
                for wn, iy in zip(spec.wavenumbers, spec.intensities):
                    writer.writerow([spec.ts, spec.x, spec.y, repr(float(wn)), repr(float(iy))])
                count += 1
    else:
        raise SpectrumError(f"unknown spectra format {fmt!r}; expected one of {FORMATS}")
    return count


def _read_jsonl(path: Path) -> Iterator[Spectrum]:
    n = 0
    with path.open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
                spec = Spectrum(
                    rec["wavenumbers"],
                    rec["intensities"],
                    ts=int(rec["ts"]),
                    x=int(rec["x"]),
                    y=int(rec["y"]),
                )
            except (KeyError, TypeError, ValueError, json.JSONDecodeError) as exc:
                raise SpectrumError(f"{path}:{lineno}: bad spectrum record: {exc}") from exc
            n += 1
            yield spec
    if n == 0:
        raise SpectrumError(f"{path}: no spectra found")


def _read_csv(path: Path) -> Iterator[Spectrum]:
    def flush(key, wns, ins):
        ts, x, y = key
        return Spectrum(wns, ins, ts=ts, x=x, y=y)

    n = 0
    with path.open("r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        key = None
        wns: list[float] = []
        ins: list[float] = []
        for lineno, row in enumerate(reader, start=2):
            try:
                this_key = (int(row["ts"]), int(row["x"]), int(row["y"]))
                wn = float(row["wavenumber"])
                iy = float(row["intensity"])
            except (KeyError, TypeError, ValueError) as exc:
                raise SpectrumError(f"{path}:{lineno}: bad row: {exc}") from exc
            if key is not None and this_key != key:
                yield flush(key, wns, ins)
                n += 1
                wns, ins = [], []
            key = this_key
            wns.append(wn)
            ins.append(iy)
        if key is not None:
            yield flush(key, wns, ins)
            n += 1
    if n == 0:
        raise SpectrumError(f"{path}: no spectra found")
