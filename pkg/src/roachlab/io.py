"""Deterministic CSV output, seeded noise, initial states and plot scripts.

Every output file starts with a comment header embedding the artifact
version and the normalised configuration, so identical config + seed yields
byte-identical files.
"""

from __future__ import annotations

import os

import numpy as np

import roachlab
from roachlab.config import RunConfig, dump_config
from roachlab.cross import CrossState
from roachlab.errors import ConfigError
from roachlab.grid import Grid
from roachlab.model import constant_steady_conserved, constant_steady_growth
from roachlab.rd3 import RDState
from roachlab.sweeps import split_initial


def make_noise(grid: Grid, seed: int, amplitude: float) -> np.ndarray:
    """Uniform noise in [-amplitude, amplitude] from a counter-based generator.

    Philox is counter-based, so the field depends only on (seed, shape),
    not on any draw order.
    """
    rng = np.random.Generator(np.random.Philox(key=seed))
    return amplitude * (2.0 * rng.random(grid.shape) - 1.0)


def _perturbations(config: RunConfig, grid: Grid):
    ic = config.ic
    bump_v = np.zeros(grid.shape)
    bump_u = np.zeros(grid.shape)
    if ic.noise_amplitude > 0:
        noise = make_noise(grid, ic.seed, ic.noise_amplitude)
        if ic.noise_field == "v":
            bump_v += noise
        else:
            bump_u += noise
    if ic.cosine_amplitude != 0.0 and ic.cosine_mode > 0:
        if grid.dim == 1:
            wave = ic.cosine_amplitude * grid.cosine_mode(ic.cosine_mode)
        else:
            wave = 0.5 * ic.cosine_amplitude * (
                grid.cosine_mode(ic.cosine_mode, 0) + grid.cosine_mode(ic.cosine_mode, 1)
            )
        if ic.cosine_field == "v":
            bump_v += wave
        else:
            bump_u += wave
    return bump_u, bump_v


def make_initial_rd(config: RunConfig, grid: Grid) -> RDState:
    """Constant steady state plus the configured perturbations."""
    params = config.params
    if config.system == "rd3-growth":
        u1b, u2b, vb = constant_steady_growth(params)
    else:
        u1b, u2b, vb = constant_steady_conserved(config.ic.constant_level, params)
    bump_u, bump_v = _perturbations(config, grid)
    v0 = np.full(grid.shape, vb) + bump_v
    total = np.full(grid.shape, u1b + u2b) + bump_u
    if np.any(bump_u):
        u1, u2 = split_initial(total, v0, params, config.ic.split)
    else:
        u1 = np.full(grid.shape, u1b)
        u2 = np.full(grid.shape, u2b)
    return RDState(0.0, u1, u2, v0, grid)


def make_initial_cross(config: RunConfig, grid: Grid) -> CrossState:
    params = config.params
    level = config.ic.constant_level
    vb = params.alpha / params.beta * level
    bump_u, bump_v = _perturbations(config, grid)
    return CrossState(
        0.0,
        np.full(grid.shape, level) + bump_u,
        np.full(grid.shape, vb) + bump_v,
        grid,
    )


def header_lines(config: RunConfig | None, extra: dict | None = None) -> list:
    lines = [f"# roachlab {roachlab.__version__}"]
    if extra:
        for key in sorted(extra):
            lines.append(f"# {key}: {extra[key]}")
    if config is not None:
        lines.append("# config:")
        for line in dump_config(config).rstrip("\n").split("\n"):
            lines.append(f"#   {line}")
    return lines


def _fmt_cell(value) -> str:
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def write_csv(path, columns, rows, head=(), foot=()):
    """Write a CSV with comment header/footer; formatting is deterministic."""
    with open(path, "w", newline="\n") as fh:
        for line in head:
            fh.write(line + "\n")
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(",".join(_fmt_cell(cell) for cell in row) + "\n")
        for line in foot:
            fh.write(line + "\n")


def read_csv(path) -> "np.ndarray":
    """Load one of our CSVs as a named array, skipping the comment header."""
    with open(path) as fh:
        rows = [line for line in fh if not line.startswith("#")]
    return np.genfromtxt(rows, delimiter=",", names=True)


_LOADER = """\
def load(path):
    with open(path) as fh:
        rows = [line for line in fh if not line.startswith("#")]
    return np.genfromtxt(rows, delimiter=",", names=True)
"""

_PLOT_TEMPLATES = {
    "series": """\
import matplotlib.pyplot as plt
import numpy as np

{loader}
data = load({csv!r})
fig, axes = plt.subplots(len(data.dtype.names) - 1, 1, sharex=True, figsize=(7, 8))
for ax, name in zip(np.atleast_1d(axes), data.dtype.names[1:]):
    ax.plot(data[data.dtype.names[0]], data[name])
    ax.set_ylabel(name)
plt.xlabel(data.dtype.names[0])
plt.tight_layout()
plt.savefig({png!r}, dpi=150)
""",
    "snapshot": """\
import matplotlib.pyplot as plt
import numpy as np

{loader}
data = load({csv!r})
names = [n for n in data.dtype.names if n not in ("t", "x", "y")]
for t in np.unique(data["t"]):
    sel = data[data["t"] == t]
    plt.figure()
    if "y" in data.dtype.names:
        n = int(np.sqrt(len(sel)))
        plt.imshow(sel[names[0]].reshape(n, n), origin="lower")
        plt.colorbar(label=names[0])
    else:
        for name in names:
            plt.plot(sel["x"], sel[name], label=name)
        plt.legend()
    plt.title(f"t = {{t}}")
    plt.savefig({png!r}.replace(".png", f"_t{{t}}.png"), dpi=150)
""",
    "curve": """\
import matplotlib.pyplot as plt
import numpy as np

{loader}
data = load({csv!r})
for n in np.unique(data["n"]):
    sel = data[data["n"] == n]
    plt.plot(sel["parameter"], sel["D"], ".", label=f"mode {{int(n)}}")
plt.xlabel("parameter")
plt.ylabel("D")
plt.legend()
plt.savefig({png!r}, dpi=150)
""",
    "branch": """\
import matplotlib.pyplot as plt
import numpy as np

{loader}
data = load({csv!r})
stable = data["stability"] == 1
plt.plot(data["parameter"][stable], data["value_at_x0"][stable], "b.", label="stable")
plt.plot(data["parameter"][~stable], data["value_at_x0"][~stable], "r.", label="unstable", ms=2)
plt.xlabel("parameter")
plt.ylabel("u1+u2 at x=0")
plt.legend()
plt.savefig({png!r}, dpi=150)
""",
    "sweep": """\
import matplotlib.pyplot as plt
import numpy as np

{loader}
data = load({csv!r})
for name in data.dtype.names[1:]:
    plt.loglog(data["eps"], data[name], "o-", label=name)
plt.xlabel("eps")
plt.legend()
plt.savefig({png!r}, dpi=150)
""",
}


def write_plot_script(csv_path: str, kind: str) -> str:
    """Emit a small matplotlib script next to a CSV; returns the script path."""
    if kind not in _PLOT_TEMPLATES:
        raise ConfigError(f"no plot template for kind {kind!r}")
    base = os.path.basename(csv_path)
    script_path = csv_path[:-4] + "_plot.py" if csv_path.endswith(".csv") else csv_path + "_plot.py"
    png = base[:-4] + ".png" if base.endswith(".csv") else base + ".png"
    with open(script_path, "w", newline="\n") as fh:
        fh.write(_PLOT_TEMPLATES[kind].format(csv=base, png=png, loader=_LOADER))
    return script_path
