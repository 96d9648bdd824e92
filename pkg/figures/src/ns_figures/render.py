"""Deterministic figure rendering from the simulation CSV schemas.

Figures never recompute physics: every plotted number, including the
annotated convergence slope, comes from the input CSVs. Rendering twice from
identical inputs yields identical image bytes (fixed backend, size, fonts,
hash salt, no timestamps), and each image ships with a JSON sidecar recording
the SHA-256 of its inputs.
"""

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import pandas as pd

matplotlib.rcParams["svg.hashsalt"] = "ns-figures"
matplotlib.rcParams["svg.fonttype"] = "none"   # keep annotations as text nodes
matplotlib.rcParams["figure.dpi"] = 100

KINDS = ("profiles", "convergence", "energy", "interface")

_SCHEMAS = {
    "profiles": ["x", "v", "u", "w", "p"],
    "convergence": ["epsilon", "gamma", "sup_err_free", "x_min", "x_star",
                    "transition_err", "fitted_exponent"],
    "energy": ["t", "E0", "E1", "E2", "D0", "D1", "D2", "X_norm",
               "L1_v", "L1_u", "L1_w", "sup_dev_v", "sup_dev_u", "min_v"],
    "interface": ["t", "x_tilde", "x_tilde_prime", "p_s", "res_EDO1",
                  "res_BCw", "res_transport", "res_EDO2"],
}


class SchemaError(ValueError):
    """Input CSV does not match the declared schema."""


@dataclass(frozen=True)
class FigureSpec:
    kind: str
    inputs: tuple
    output: str
    speed: float | None = None   # interface overlay slope; defaults to the CSV's own x_tilde_prime(0)
    style: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise SchemaError(f"unknown figure kind {self.kind!r}; choose from {KINDS}")
        if not self.inputs:
            raise SchemaError("at least one input CSV is required")


def load_table(path, kind):
    try:
        df = pd.read_csv(path)
    except (OSError, pd.errors.EmptyDataError, pd.errors.ParserError) as exc:
        raise SchemaError(f"cannot read {path}: {exc}") from exc
    missing = [c for c in _SCHEMAS[kind] if c not in df.columns]
    if missing:
        raise SchemaError(
            f"{path} is missing column(s) {missing} required by kind {kind!r}"
        )
    if len(df) == 0:
        raise SchemaError(f"{path} has no data rows")
    return df


def _new_figure():
    return plt.subplots(1, 2, figsize=(9.0, 3.4), constrained_layout=True)


def _render_profiles(df, spec):
    fig, (ax_l, ax_r) = _new_figure()
    ax_l.plot(df["x"], df["v"], color="tab:blue", label="v")
    ax_l.plot(df["x"], df["p"], color="tab:red", label="p")
    ax_l.set_xlabel("x")
    ax_l.legend(loc="center right")
    ax_l.set_title("specific volume and pressure")
    ax_r.plot(df["x"], df["u"], color="tab:green", label="u")
    ax_r.plot(df["x"], df["w"], color="tab:purple", label="w")
    ax_r.set_xlabel("x")
    ax_r.legend(loc="center right")
    ax_r.set_title("velocity and effective velocity")
    return fig


def _render_convergence(df, spec):
    fig, (ax_l, ax_r) = _new_figure()
    slope = float(df["fitted_exponent"].iloc[0])
    for gamma, grp in df.groupby("gamma"):
        ax_l.loglog(grp["epsilon"], grp["sup_err_free"], "o-",
                    label=f"gamma = {gamma:g}")
    ax_l.set_xlabel("epsilon")
    ax_l.set_ylabel("sup error, free zone")
    ax_l.set_title(f"fitted slope = {slope:.4f}")
    ax_l.legend()
    for gamma, grp in df.groupby("gamma"):
        ax_r.loglog(grp["epsilon"], grp["x_min"], "s-", label=f"x_min, gamma = {gamma:g}")
        ax_r.loglog(grp["epsilon"], grp["x_star"].abs(), "^--",
                    label=f"|x*|, gamma = {gamma:g}")
    ax_r.set_xlabel("epsilon")
    ax_r.set_title("transition-zone scales")
    ax_r.legend()
    return fig


def _render_energy(df, spec):
    fig, (ax_l, ax_r) = _new_figure()
    for key in ("E0", "E1", "E2"):
        ax_l.semilogy(df["t"], df[key].clip(lower=1e-300), label=key)
    ax_l.semilogy(df["t"], df["X_norm"].clip(lower=1e-300), "k--", label="X norm")
    ax_l.set_xlabel("t")
    ax_l.set_title("weighted energies")
    ax_l.legend()
    ax_r.semilogy(df["t"], df["sup_dev_v"].clip(lower=1e-300), label="sup |dv|")
    ax_r.semilogy(df["t"], df["sup_dev_u"].clip(lower=1e-300), label="sup |du|")
    ax_r.set_xlabel("t")
    ax_r.set_title("sup deviations")
    ax_r.legend()
    return fig


def _render_interface(df, spec):
    fig, (ax_l, ax_r) = _new_figure()
    speed = spec.speed if spec.speed is not None else float(df["x_tilde_prime"].iloc[0])
    ax_l.plot(df["t"], df["x_tilde"], color="tab:blue", label="interface")
    ax_l.plot(df["t"], speed * df["t"], "k--", label=f"slope {speed:.4g}")
    ax_l.set_xlabel("t")
    ax_l.set_title("interface position")
    ax_l.legend()
    ax_r.plot(df["t"], df["p_s"], color="tab:red", label="congested pressure")
    ax_r.set_xlabel("t")
    ax_r.set_title("congested pressure")
    ax_r.legend()
    return fig


_RENDERERS = {
    "profiles": _render_profiles,
    "convergence": _render_convergence,
    "energy": _render_energy,
    "interface": _render_interface,
}


def render(spec: FigureSpec) -> Path:
    """Render the figure and its metadata sidecar; returns the image path."""
    frames = [load_table(p, spec.kind) for p in spec.inputs]
    df = pd.concat(frames, ignore_index=True) if len(frames) > 1 else frames[0]
    fig = _RENDERERS[spec.kind](df, spec)
    out = Path(spec.output)
    out.parent.mkdir(parents=True, exist_ok=True)
    fmt = out.suffix.lstrip(".").lower() or "svg"
    if fmt not in ("svg", "png"):
        raise SchemaError(f"unsupported output format {fmt!r} (svg or png)")
    metadata = {"Date": None} if fmt == "svg" else {}
    fig.savefig(out, format=fmt, metadata=metadata)
    plt.close(fig)
    sidecar = {
        "kind": spec.kind,
        "output": out.name,
        "inputs": {
            str(p): hashlib.sha256(Path(p).read_bytes()).hexdigest()
            for p in spec.inputs
        },
    }
    Path(str(out) + ".json").write_text(json.dumps(sidecar, indent=2, sort_keys=True) + "\n")
    return out
