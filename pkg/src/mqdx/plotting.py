"""PNG renderings of the ASCII outputs (non-interactive backend)."""
import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .analysis import g1, g2  # noqa: E402


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)
    return path


def plot_trajectory(times, occupations, energies, path, title=None):
    """Energy and natural occupations (log scale) against time."""
    times = np.asarray(times)
    occupations = np.asarray(occupations)
    fig, (ax_e, ax_n) = plt.subplots(2, 1, figsize=(6.4, 6.0), sharex=True)
    ax_e.plot(times, energies, "o-", ms=3)
    ax_e.set_ylabel("energy")
    for j in range(occupations.shape[1]):
        ax_n.semilogy(times, np.clip(occupations[:, j], 1e-16, None), lw=1.2)
    ax_n.set_xlabel("time")
    ax_n.set_ylabel("natural occupation")
    if title:
        ax_e.set_title(title)
    return _save(fig, path)


def plot_density(x, density, potential, path, title=None):
    """Density with the one-body potential on a twin axis."""
    fig, ax = plt.subplots(figsize=(6.4, 4.0))
    ax.plot(x, density, color="tab:purple", label="density")
    ax.set_xlabel("x")
    ax.set_ylabel("density")
    twin = ax.twinx()
    twin.plot(x, potential, color="tab:green", lw=1.0, label="V(x)")
    twin.set_ylabel("potential")
    top = max(float(np.max(density)) * 1.1, 1e-12)
    ax.set_ylim(0.0, top)
    if title:
        ax.set_title(title)
    return _save(fig, path)


def plot_density_k(k, density, path, title=None):
    fig, ax = plt.subplots(figsize=(6.4, 4.0))
    ax.plot(k, density, color="tab:blue")
    ax.set_xlabel("k")
    ax.set_ylabel("momentum density")
    if title:
        ax.set_title(title)
    return _save(fig, path)


def plot_correlations(records, path, title=None, cutoff=1e-8):
    """|g1(x, x')| and g2(x, x') maps from correlation records (row-major grid product)."""
    n = int(round(np.sqrt(len(records))))
    x = records["x_prime"][:n]
    maps = [np.abs(g1(records, cutoff)).reshape(n, n), g2(records, cutoff).reshape(n, n)]
    fig, axes = plt.subplots(1, 2, figsize=(10.0, 4.2))
    extent = [x[0], x[-1], x[0], x[-1]]
    for ax, data, label in zip(axes, maps, ["|g1(x,x')|", "g2(x,x')"]):
        im = ax.imshow(data, origin="lower", extent=extent, aspect="equal", cmap="viridis")
        ax.set_xlabel("x'")
        ax.set_ylabel("x")
        ax.set_title(label)
        fig.colorbar(im, ax=ax, fraction=0.046)
    if title:
        fig.suptitle(title)
    return _save(fig, path)
