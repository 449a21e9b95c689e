"""Figure panels for experiment outputs.

Each panel is a function ``panel(data, ax, **kw)`` where ``data`` maps CSV
column names to numpy arrays. The same functions draw the PNGs written next
to an experiment's CSVs and are copied verbatim into the standalone plot
scripts, so they may only use numpy and matplotlib.
"""
from __future__ import annotations

import csv
import inspect
from pathlib import Path

import numpy as np


def load_table(path):
    """Columns of a CSV written by the CLI; '#' lines are skipped."""
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(ln for ln in fh if not ln.startswith("#")))
    out = {}
    for key in (rows[0].keys() if rows else []):
        col = [r[key] for r in rows]
        try:
            out[key] = np.array([float(x) for x in col])
        except ValueError:
            out[key] = np.array(col)
    return out


def _groups(data, *keys):
    """Yield (label, mask) for each distinct combination of keys."""
    combos = sorted(set(zip(*(data[k].tolist() for k in keys))))
    for combo in combos:
        mask = np.ones(len(data[keys[0]]), dtype=bool)
        for k, v in zip(keys, combo):
            mask &= data[k] == v
        yield ", ".join(f"{k}={v:g}" if isinstance(v, float) else f"{v}" for k, v in zip(keys, combo)), mask


def recon_errors(data, ax):
    for col, lab in (("err_e", r"$e_a$"), ("err_lambda", r"$\lambda_j$"), ("err_c", r"$c_j$")):
        y = np.where(data[col] > 0, data[col], np.nan)
        ax.semilogy(data["E1"], y, ".-", label=lab)
    ax.set_xlabel(r"$E_1$")
    ax.set_ylabel("max abs error")
    ax.legend()


def recon_gap(data, ax):
    ax.semilogy(data["E1"], data["min_gap"], "k-")
    ax.set_xlabel(r"$E_1$")
    ax.set_ylabel(r"min $|\lambda_i-\lambda_j|$")


def funnel_map(data, ax, column="min_gap"):
    A, E = np.unique(data["A"]), np.unique(data["E1"])
    Z = np.full((len(A), len(E)), np.nan)
    ia = np.searchsorted(A, data["A"])
    ie = np.searchsorted(E, data["E1"])
    Z[ia, ie] = np.log10(data[column])
    im = ax.pcolormesh(E, A, Z, shading="auto", cmap="viridis")
    ax.figure.colorbar(im, ax=ax, label=f"log10 {column}")
    k = np.nanargmin(Z) if column == "min_gap" else None
    if k is not None:
        ax.plot(E[k % len(E)], A[k // len(E)], "r+", ms=10)
    ax.set_xlabel(r"$E_1$")
    ax.set_ylabel(r"$A$")


def funnel_slice(data, ax):
    ax.semilogy(data["E1"], data["min_gap"], "b-", label="min gap")
    ax.semilogy(data["E1"], data["kappa"], "r--", label=r"$\kappa$")
    ax.set_xlabel(r"$E_1$")
    ax.legend()


def trajectory(data, ax, keys=("observable", "p")):
    keys = [k for k in keys if k in data]
    for lab, m in _groups(data, *keys):
        ax.plot(data["re"][m], data["im"][m], "-", lw=1, label=lab)
        ax.plot(data["re"][m][:1], data["im"][m][:1], "ko", ms=3)
    ax.axhline(0, color="0.7", lw=0.5)
    ax.axvline(0, color="0.7", lw=0.5)
    ax.set_xlabel("Re")
    ax.set_ylabel("Im")
    ax.legend(fontsize=7)


def cumulative_winding(data, ax, keys=("observable", "p")):
    keys = [k for k in keys if k in data]
    for lab, m in _groups(data, *keys):
        ax.plot(data["param"][m], data["cumulative_winding"][m], "-", label=lab)
    ax.set_xlabel("path parameter")
    ax.set_ylabel(r"$\Delta\arg / 2\pi$")
    ax.legend(fontsize=7)


def mode_windings(data, ax):
    for lab, m in _groups(data, "A", "branch"):
        ax.plot(data["E1"][m], data["cumulative_winding"][m], "-", lw=1, label=lab)
    ax.set_xlabel(r"$E_1$")
    ax.set_ylabel(r"$\Delta\arg\lambda_j / 2\pi$")
    ax.legend(fontsize=6, ncol=2)


def visibility_loss(data, ax):
    for lab, m in _groups(data, "observable", "p"):
        ax.plot(data["A"][m], data["delta_vis"][m], "o-", label=lab)
    ax.set_xlabel(r"$A$")
    ax.set_ylabel(r"$\Delta_{\rm vis}$")
    ax.legend(fontsize=7)


def dobs_curve(data, ax, group=("B",), where=None):
    sel = np.ones(len(data["Q"]), dtype=bool)
    for k, v in (where or {}).items():
        sel &= data[k] == v
    sub = {k: v[sel] for k, v in data.items()}
    for lab, m in _groups(sub, *group):
        ax.semilogx(sub["Q"][m], sub["d_obs"][m], "o-", base=2, label=lab)
    ax.set_xlabel(r"$Q$")
    ax.set_ylabel(r"$D_{\rm obs}$")
    ax.legend(fontsize=7)


def loop_paths(data, ax):
    s0 = data["seed"][0]
    m0 = data["seed"] == s0
    for b in np.unique(data["branch"][m0]):
        m = m0 & (data["branch"] == b)
        ax.plot(data["re"][m], data["im"][m], "-", lw=0.8)
    ax.set_xlabel(r"Re $\lambda$")
    ax.set_ylabel(r"Im $\lambda$")
    ax.set_title(f"seed {s0:g}")


# experiment -> [(panel name, table, function, kwargs)]
PANELS = {
    "dtq3-recon": [("recon_errors", "recon", recon_errors, {}),
                   ("recon_gap", "recon", recon_gap, {})],
    "dtq3-funnel": [("funnel_gap", "funnel", funnel_map, {"column": "min_gap"}),
                    ("funnel_kappa", "funnel", funnel_map, {"column": "kappa"}),
                    ("funnel_slice", "slice", funnel_slice, {})],
    "dtq3-visibility": [("odsd_trajectory", "odsd", trajectory, {}),
                        ("odsd_winding", "odsd", cumulative_winding, {})],
    "dtq3-phase": [("mode_windings", "modes", mode_windings, {}),
                   ("visibility_loss", "visibility_loss", visibility_loss, {})],
    "dtq3-dobs": [("dobs", "dobs", dobs_curve, {"group": ("B",)})],
    "ssh-ep-loop": [("loop_paths", "paths", loop_paths, {})],
    "ssh-ep-visibility": [("osd_trajectory", "osd", trajectory, {"keys": ("observable",)}),
                          ("osd_winding", "osd", cumulative_winding, {"keys": ("observable",)})],
    "ssh-winding": [("winding_trajectory", "winding", trajectory, {"keys": ("observable",)}),
                    ("winding_cumulative", "winding", cumulative_winding, {"keys": ("observable",)})],
    "ssh-dobs": [("dobs_clean", "dobs", dobs_curve, {"group": ("observable",), "where": {"V": 0.0, "W": 0.0}}),
                 ("dobs_bond", "dobs", dobs_curve, {"group": ("observable",), "where": {"V": 0.2, "W": 0.0}}),
                 ("dobs_onsite", "dobs", dobs_curve, {"group": ("observable",), "where": {"V": 0.0, "W": 0.2}})],
}


def _figure():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt, *plt.subplots(figsize=(5.0, 3.6))


def render(experiment: str, out_dir, tables: dict | None = None) -> list:
    """Draw every panel of ``experiment`` into PNG files in out_dir."""
    out_dir = Path(out_dir)
    written = []
    for name, table, fn, kw in PANELS.get(experiment, []):
        data = tables[table] if tables and table in tables else load_table(out_dir / f"{table}.csv")
        if not len(next(iter(data.values()), [])):
            continue
        plt, fig, ax = _figure()
        fn(data, ax, **kw)
        fig.tight_layout()
        path = out_dir / f"{name}.png"
        fig.savefig(path, dpi=120)
        plt.close(fig)
        written.append(path.name)
    return written


_SCRIPT = '''"""Plot panel {name} of {experiment} from {table}.csv in this directory."""
import csv
from pathlib import Path

import numpy as np
import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

HERE = Path(__file__).resolve().parent


{helpers}

if __name__ == "__main__":
    data = load_table(HERE / "{table}.csv")
    fig, ax = plt.subplots(figsize=(5.0, 3.6))
    {func}(data, ax, **{kwargs!r})
    fig.tight_layout()
    fig.savefig(HERE / "{name}.png", dpi=150)
'''


def plot_scripts(experiment: str, report_dir) -> list:
    """Write one standalone script per panel; raise FileNotFoundError listing
    any CSV the panels need that is absent."""
    report_dir = Path(report_dir)
    panels = PANELS.get(experiment)
    if panels is None:
        raise KeyError(experiment)
    missing = sorted({f"{t}.csv" for _, t, _, _ in panels if not (report_dir / f"{t}.csv").exists()})
    if missing:
        raise FileNotFoundError(f"missing CSV files in {report_dir}: {', '.join(missing)}")
    written = []
    for name, table, fn, kw in panels:
        helpers = "\n\n".join(inspect.getsource(f) for f in (load_table, _groups, fn))
        text = _SCRIPT.format(name=name, experiment=experiment, table=table, helpers=helpers,
                              func=fn.__name__, kwargs=dict(kw))
        path = report_dir / f"plot_{name}.py"
        path.write_text(text)
        written.append(path.name)
    return written
