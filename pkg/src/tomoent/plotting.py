"""Figures for the CSV artifacts, rendered directly or emitted as plot scripts.

Three CSV kinds are recognised from their header:

* indicator records (``t, svne, sle, ...``): distances against scaled time;
* Lyapunov curves (``L, lambda_L``): data with the fitted ``Lambda_inf + m/L^q``;
* power spectra (``f, S``): ``S(f)`` on a log scale.

Emitted scripts only need numpy and matplotlib and reference the CSV by path,
so they can be edited and re-run without this package.
"""
from __future__ import annotations

import csv
import os
from pathlib import Path

import numpy as np

STYLE = {
    "figure.figsize": (5.0, 3.2),
    "figure.dpi": 150,
    "font.size": 9,
    "axes.labelsize": 10,
    "legend.fontsize": 8,
    "lines.linewidth": 1.0,
    "savefig.bbox": "tight",
}

CURVE_STYLE = {
    "d1": dict(color="black", linestyle="--", label="$d_1$"),
    "d2": dict(color="tab:blue", linestyle=":", label="$d_2$"),
    "d3": dict(color="saddlebrown", linestyle="-", label="$d_3$"),
    "delta": dict(color="tab:pink", linestyle="-", label=r"$\Delta$"),
}

LYAPUNOV_COLUMNS = ("L", "lambda_L")
SPECTRUM_COLUMNS = ("f", "S")


def read_header(path) -> list[str]:
    with open(path, newline="") as fh:
        return next(csv.reader(fh))


def detect_kind(path) -> str:
    head = read_header(path)
    if head[:2] == ["t", "svne"]:
        return "indicators"
    if tuple(head[:2]) == LYAPUNOV_COLUMNS:
        return "lyapunov"
    if tuple(head[:2]) == SPECTRUM_COLUMNS:
        return "spectrum"
    raise ValueError(f"{path}: unrecognised CSV header {head}")


def read_columns(path) -> dict:
    data = np.genfromtxt(path, delimiter=",", names=True, ndmin=1)
    return {name: np.atleast_1d(data[name]) for name in data.dtype.names}


def fit_summary_path(lyapunov_csv) -> Path:
    p = Path(lyapunov_csv)
    stem = p.stem[: -len("_lyapunov")] if p.stem.endswith("_lyapunov") else p.stem
    return p.with_name(f"{stem}_fit.txt")


def read_fit_summary(path) -> dict:
    """Parse the single ``key=value ...`` line written next to a Lyapunov CSV."""
    text = Path(path).read_text().split()
    return {k: float(v) for k, v in (tok.split("=", 1) for tok in text if "=" in tok)}


def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def render_indicators(csv_path, out_path, columns=("d2", "d3"), rate_label="g"):
    plt = _pyplot()
    data = read_columns(csv_path)
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        for col in columns:
            ax.plot(data["t"], data[col], **CURVE_STYLE.get(col, {"label": col}))
        ax.set_xlabel(f"${rate_label}\\,t/\\pi$")
        ax.set_ylabel("distance")
        ax.legend(frameon=False)
        fig.savefig(out_path)
        plt.close(fig)
    return Path(out_path)


def render_lyapunov(csv_path, out_path, fit: dict | None = None):
    plt = _pyplot()
    data = read_columns(csv_path)
    if fit is None and fit_summary_path(csv_path).exists():
        fit = read_fit_summary(fit_summary_path(csv_path))
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        ax.plot(data["L"], data["lambda_L"], "x", color="tab:blue", label=r"$\Lambda_L$")
        if fit and np.isfinite(fit.get("lambda_inf", np.nan)):
            L = np.linspace(data["L"].min(), data["L"].max(), 200)
            ax.plot(L, fit["lambda_inf"] + fit["m"] / L ** fit["q"], color="tab:red",
                    label=r"$\Lambda_\infty + m/L^q$")
        ax.set_xlabel("$L$")
        ax.set_ylabel(r"$\Lambda_L$")
        ax.legend(frameon=False)
        fig.savefig(out_path)
        plt.close(fig)
    return Path(out_path)


def render_spectrum(csv_path, out_path, rate_label="g"):
    plt = _pyplot()
    data = read_columns(csv_path)
    keep = (data["f"] > 0) & (data["S"] > 0)
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        ax.semilogy(data["f"][keep], data["S"][keep], color="tab:red")
        ax.set_xlabel(f"$f/{rate_label}$")
        ax.set_ylabel("$S(f)$")
        fig.savefig(out_path)
        plt.close(fig)
    return Path(out_path)


def render(csv_path, out_path=None, rate_label="g", columns=("d2", "d3")):
    """Render the figure matching the CSV kind; returns the image path."""
    kind = detect_kind(csv_path)
    out_path = Path(out_path) if out_path else Path(csv_path).with_suffix(".png")
    if kind == "indicators":
        return render_indicators(csv_path, out_path, columns, rate_label)
    if kind == "lyapunov":
        return render_lyapunov(csv_path, out_path)
    return render_spectrum(csv_path, out_path, rate_label)


# ---------------------------------------------------------------------------
# self-contained scripts

_SCRIPT_HEAD = '''\
"""Plot {csv_name}.  Run with: python {script_name}"""
from pathlib import Path

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

HERE = Path(__file__).resolve().parent
CSV = HERE / {csv_rel!r}
OUT = HERE / {png_rel!r}

data = np.genfromtxt(CSV, delimiter=",", names=True, ndmin=1)
fig, ax = plt.subplots(figsize=(5.0, 3.2), dpi=150)
'''

_SCRIPT_BODY = {
    "indicators": '''\
styles = {styles!r}
for col in {columns!r}:
    ax.plot(data["t"], data[col], **styles.get(col, {{"label": col}}))
ax.set_xlabel(r"${rate}\\,t/\\pi$")
ax.set_ylabel("distance")
ax.legend(frameon=False)
''',
    "lyapunov": '''\
ax.plot(data["L"], data["lambda_L"], "x", color="tab:blue", label=r"$\\Lambda_L$")
fit = {fit!r}
if fit is not None:
    L = np.linspace(data["L"].min(), data["L"].max(), 200)
    ax.plot(L, fit["lambda_inf"] + fit["m"] / L ** fit["q"], color="tab:red",
            label=r"$\\Lambda_\\infty + m/L^q$")
ax.set_xlabel("$L$")
ax.set_ylabel(r"$\\Lambda_L$")
ax.legend(frameon=False)
''',
    "spectrum": '''\
keep = (data["f"] > 0) & (data["S"] > 0)
ax.semilogy(data["f"][keep], data["S"][keep], color="tab:red")
ax.set_xlabel(r"$f/{rate}$")
ax.set_ylabel("$S(f)$")
''',
}

_SCRIPT_TAIL = '''\
fig.savefig(OUT, bbox_inches="tight")
print(OUT)
'''


def emit_plot_script(csv_path, script_path=None, rate_label="g", columns=("d2", "d3")) -> Path:
    """Write a standalone script that draws the figure for ``csv_path``."""
    csv_path = Path(csv_path)
    if not csv_path.exists():
        raise FileNotFoundError(f"no such CSV: {csv_path}")
    kind = detect_kind(csv_path)
    script_path = Path(script_path) if script_path else csv_path.with_name(f"plot_{csv_path.stem}.py")
    fit = None
    if kind == "lyapunov" and fit_summary_path(csv_path).exists():
        summary = read_fit_summary(fit_summary_path(csv_path))
        if np.isfinite(summary.get("lambda_inf", np.nan)):
            fit = {k: summary[k] for k in ("lambda_inf", "m", "q")}
    rel_csv = Path(_relpath(csv_path, script_path.parent))
    text = _SCRIPT_HEAD.format(
        csv_name=csv_path.name,
        script_name=script_path.name,
        csv_rel=str(rel_csv),
        png_rel=str(rel_csv.with_suffix(".png")),
    )
    text += _SCRIPT_BODY[kind].format(
        styles={c: CURVE_STYLE[c] for c in columns if c in CURVE_STYLE},
        columns=tuple(columns),
        rate=rate_label,
        fit=fit,
    )
    text += _SCRIPT_TAIL
    script_path.write_text(text)
    return script_path


def _relpath(target: Path, start: Path) -> str:
    return os.path.relpath(target.resolve(), start.resolve())
