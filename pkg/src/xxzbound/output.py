"""CSV/JSON writers for spectra, trajectories and W-state tables.

Files are written atomically (temporary file in the target directory, then
rename).  Numbers are printed with a fixed number of significant digits.
"""
from __future__ import annotations

import json
import os
import tempfile
from pathlib import Path

import numpy as np


def fmt(x, precision: int) -> str:
    x = float(x)
    if x == 0.0:
        return "0"  # avoids "-0"
    return f"{x:.{precision}g}"


def rounded(x, precision: int) -> float:
    return float(fmt(x, precision))


def atomic_write(path, text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def csv_text(header, rows) -> str:
    lines = [",".join(header)]
    lines.extend(",".join(r) for r in rows)
    return "\n".join(lines) + "\n"


def json_text(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def spectrum_rows(report, precision):
    rows = []
    for st in report.states:
        rows.append([str(st.level_index), fmt(st.E, precision), str(st.multiplicity),
                     fmt(st.d, precision), st.classification]
                    + [fmt(c, precision) for c in st.c])
    return rows


def spectrum_dict(report, precision) -> dict:
    return {
        "n_branches": report.n_branches,
        "n_roots_found": report.n_roots_found,
        "states": [
            {
                "level_index": st.level_index,
                "E": rounded(st.E, precision),
                "multiplicity": st.multiplicity,
                "d": rounded(st.d, precision),
                "classification": st.classification,
                "critical": st.critical,
                "c": [rounded(c, precision) for c in st.c],
            }
            for st in report.states
        ],
        "levels": [
            {"E": rounded(lv.E, precision), "multiplicity": lv.multiplicity,
             "d": rounded(lv.d, precision), "c": [rounded(c, precision) for c in lv.c]}
            for lv in report.levels()
        ],
    }


def write_spectrum(report, N: int, directory, fmt_kind="csv", precision=6) -> list:
    directory = Path(directory)
    written = []
    if fmt_kind in ("csv", "both"):
        header = ["level_index", "E", "multiplicity", "d", "classification"]
        header += [f"c_{i}" for i in range(1, N + 1)]
        written.append(atomic_write(directory / "spectrum.csv",
                                    csv_text(header, spectrum_rows(report, precision))))
        lheader = ["level", "E", "multiplicity", "d"] + [f"c_{i}" for i in range(1, N + 1)]
        lrows = [[str(j), fmt(lv.E, precision), str(lv.multiplicity), fmt(lv.d, precision)]
                 + [fmt(c, precision) for c in lv.c] for j, lv in enumerate(report.levels())]
        written.append(atomic_write(directory / "levels.csv", csv_text(lheader, lrows)))
    if fmt_kind in ("json", "both"):
        written.append(atomic_write(directory / "spectrum.json",
                                    json_text(spectrum_dict(report, precision))))
    return written


def trajectory_text(traj, precision=6, amplitudes=False) -> str:
    N = traj.N
    header = ["t"] + [f"c_{i}" for i in range(1, N + 1)] + ["spin_norm", "d_t"]
    if amplitudes:
        for i in range(1, N + 1):
            header += [f"re_{i}", f"im_{i}"]
    c, norm, dt = traj.c, traj.spin_norm, traj.d_t
    rows = []
    for j, t in enumerate(traj.times):
        row = [fmt(t, precision)] + [fmt(x, precision) for x in c[j]]
        row += [fmt(norm[j], precision), fmt(dt[j], precision)]
        if amplitudes:
            for a in traj.alpha[j]:
                row += [fmt(a.real, precision), fmt(a.imag, precision)]
        rows.append(row)
    return csv_text(header, rows)


def write_trajectory(traj, path, precision=6, amplitudes=False) -> Path:
    return atomic_write(path, trajectory_text(traj, precision, amplitudes))


def trajectory_dict(traj, precision=6) -> dict:
    r = np.vectorize(lambda x: rounded(x, precision), otypes=[float])
    return {"t": r(traj.times).tolist(), "c": r(traj.c).tolist(),
            "spin_norm": r(traj.spin_norm).tolist(), "d_t": r(traj.d_t).tolist()}


def write_wstate(rows, directory, fmt_kind="csv", precision=6) -> list:
    """``rows`` are ``(N, state_or_None)`` pairs."""
    directory = Path(directory)
    written = []
    if fmt_kind in ("csv", "both"):
        out = [[str(N), fmt(st.E, precision), fmt(st.d, precision)] if st else [str(N), "", ""]
               for N, st in rows]
        written.append(atomic_write(directory / "wstate.csv", csv_text(["N", "E", "d"], out)))
    if fmt_kind in ("json", "both"):
        obj = [{"N": N, "E": rounded(st.E, precision) if st else None,
                "d": rounded(st.d, precision) if st else None} for N, st in rows]
        written.append(atomic_write(directory / "wstate.json", json_text({"rows": obj})))
    return written
