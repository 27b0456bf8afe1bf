"""Serialization of region reports, witnesses and matrices.

Numbers in CSV and SVG text use 17 significant digits; JSON relies on
Python's shortest round-trip float repr.  Both reproduce a double exactly.
Matrices travel as nested lists of ``[re, im]`` pairs.
"""

from __future__ import annotations

import json
from html import escape

import numpy as np

from .errors import NotHermitian, NotPSD
from .linalg import eigvalsh
from .channels import DpiWitness, KrausChannel
from .probe import Label, MidpointWitness, RegionReport

__all__ = [
    "CSV_HEADER",
    "fmt",
    "matrix_to_json",
    "matrix_from_json",
    "load_state",
    "witness_to_dict",
    "witness_from_dict",
    "dpi_witness_to_dict",
    "dpi_witness_from_dict",
    "region_csv",
    "region_dict",
    "region_json",
    "region_svg",
    "dumps",
]

CSV_HEADER = "p,q,s,dim,trials,convex_violations,concave_violations,empirical,theoretical,agrees"


def fmt(x: float) -> str:
    return format(float(x), ".17g")


def matrix_to_json(m) -> list:
    m = np.asarray(m, dtype=np.complex128)
    return [[[float(z.real), float(z.imag)] for z in row] for row in m]


def matrix_from_json(data) -> np.ndarray:
    arr = np.asarray(data, dtype=float)
    if arr.ndim != 3 or arr.shape[-1] != 2:
        raise ValueError("matrix must be a nested list of [re, im] pairs")
    return arr[..., 0] + 1j * arr[..., 1]


def load_state(data, tol: float = 1e-10) -> np.ndarray:
    """Parse and validate a density matrix (Hermitian, PSD, unit trace)."""
    m = matrix_from_json(data)
    if m.shape[0] != m.shape[1]:
        raise ValueError("state must be square")
    if np.linalg.norm(m - m.conj().T) > tol * max(1.0, np.linalg.norm(m)):
        raise NotHermitian("state is not Hermitian")
    m = 0.5 * (m + m.conj().T)
    if eigvalsh(m)[0] < -tol:
        raise NotPSD("state is not positive semidefinite")
    if abs(np.trace(m).real - 1) > tol:
        raise ValueError("state does not have unit trace")
    return m


def witness_to_dict(w: MidpointWitness) -> dict:
    return {
        "target": w.target,
        "params": list(w.params),
        "margin": w.margin,
        "tau": w.tau,
        "A1": matrix_to_json(w.A1),
        "B1": matrix_to_json(w.B1),
        "A2": matrix_to_json(w.A2),
        "B2": matrix_to_json(w.B2),
        "K": matrix_to_json(w.K),
    }


def witness_from_dict(d: dict) -> MidpointWitness:
    m = {k: matrix_from_json(d[k]) for k in ("A1", "B1", "A2", "B2", "K")}
    return MidpointWitness(target=d["target"], params=tuple(d["params"]), margin=d["margin"], tau=d["tau"], **m)


def dpi_witness_to_dict(w: DpiWitness) -> dict:
    return {
        "divergence": w.divergence, "margin": w.margin, "threshold": w.threshold, "method": w.method,
        "evaluations": w.evaluations, "rho": matrix_to_json(w.rho), "sigma": matrix_to_json(w.sigma),
        "kraus": [matrix_to_json(k) for k in w.channel.kraus_ops],
    }


def dpi_witness_from_dict(d: dict) -> DpiWitness:
    ops = np.array([matrix_from_json(k) for k in d["kraus"]])
    return DpiWitness(
        d["divergence"], KrausChannel(ops), matrix_from_json(d["rho"]), matrix_from_json(d["sigma"]),
        d["margin"], d["threshold"], d["method"], d["evaluations"],
    )


def region_csv(report: RegionReport) -> str:
    lines = [CSV_HEADER]
    for e in report:
        lines.append(
            ",".join(
                [fmt(e.p), fmt(e.q), fmt(e.s), str(e.dim), str(e.trials), str(e.convex_violations),
                 str(e.concave_violations), str(e.empirical), str(e.theoretical), str(e.agrees).lower()]
            )
        )
    return "\n".join(lines) + "\n"


def region_dict(report: RegionReport, meta: dict | None = None) -> dict:
    entries = []
    for e in report:
        entries.append(
            {
                "p": e.p, "q": e.q, "s": e.s, "dim": e.dim, "trials": e.trials,
                "convex_violations": e.convex_violations, "concave_violations": e.concave_violations,
                "empirical": str(e.empirical), "theoretical": str(e.theoretical), "agrees": e.agrees,
                "failures": e.failures,
                "witnesses": {k: witness_to_dict(w) for k, w in sorted(e.witnesses.items())},
            }
        )
    return {"meta": meta or {}, "entries": entries}


def dumps(obj) -> str:
    return json.dumps(obj, indent=1, sort_keys=True) + "\n"


def region_json(report: RegionReport, meta: dict | None = None) -> str:
    return dumps(region_dict(report, meta))


_FILL = {
    Label.CONCAVE_CONSISTENT: "#4472c4",
    Label.CONVEX_CONSISTENT: "#c0504d",
    Label.NEITHER: "#bfbfbf",
    Label.LINEAR_CONSISTENT: "#70ad47",
    Label.INCONCLUSIVE: "#ffffff",
}


def region_svg(report: RegionReport, cell: int = 24) -> str:
    """Heatmap over ``(p, q)`` with one panel per distinct ``s``.

    The cell fill is the theoretical label, the inner square the empirical
    one, and a black cross marks a disagreement.  Only stored labels are
    used.
    """
    entries = list(report)
    s_vals = sorted({e.s for e in entries})
    p_vals = sorted({e.p for e in entries})
    q_vals = sorted({e.q for e in entries})
    margin = 40
    pw = cell * max(len(p_vals), 1)
    ph = cell * max(len(q_vals), 1)
    width = margin + len(s_vals) * (pw + margin)
    height = 2 * margin + ph + 60
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="10">'
    ]
    for k, s in enumerate(s_vals):
        x0 = margin + k * (pw + margin)
        y0 = margin
        out.append(f'<text x="{x0}" y="{y0 - 8}">s = {escape(fmt(s))}</text>')
        for e in (e for e in entries if e.s == s):
            i = p_vals.index(e.p)
            j = q_vals.index(e.q)
            x = x0 + i * cell
            y = y0 + (len(q_vals) - 1 - j) * cell
            out.append(
                f'<rect x="{x}" y="{y}" width="{cell}" height="{cell}" fill="{_FILL[e.theoretical]}" stroke="#000" stroke-width="0.3"/>'
            )
            inset = cell // 4
            out.append(
                f'<rect x="{x + inset}" y="{y + inset}" width="{cell - 2 * inset}" height="{cell - 2 * inset}" fill="{_FILL[e.empirical]}"/>'
            )
            if not e.agrees:
                out.append(f'<path d="M{x} {y}L{x + cell} {y + cell}M{x + cell} {y}L{x} {y + cell}" stroke="#000" stroke-width="1.5"/>')
        out.append(f'<text x="{x0}" y="{y0 + ph + 14}">p: {escape(fmt(p_vals[0]))} .. {escape(fmt(p_vals[-1]))}</text>' if p_vals else "")
        out.append(f'<text x="{x0}" y="{y0 + ph + 26}">q: {escape(fmt(q_vals[0]))} .. {escape(fmt(q_vals[-1]))} (up)</text>' if q_vals else "")
    y = height - 14
    x = margin
    for lab, colour in _FILL.items():
        out.append(f'<rect x="{x}" y="{y - 9}" width="10" height="10" fill="{colour}" stroke="#000" stroke-width="0.3"/>')
        out.append(f'<text x="{x + 14}" y="{y}">{lab.value}</text>')
        x += 150
    out.append("</svg>")
    return "\n".join(line for line in out if line) + "\n"
