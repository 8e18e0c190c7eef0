"""Mean return per episode with 95% bands, one SVG per domain."""
import logging
from pathlib import Path
from typing import List, Union

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

from app.harness.results import read_results_frame, summarize_frame  # noqa: E402
from app.utils.exceptions import NoDataError  # noqa: E402

logger = logging.getLogger("bprx.harness")

# fixed ids and no timestamp so reruns write identical files
SVG_RC = {"svg.hashsalt": "bprx", "svg.fonttype": "none"}


def domain_of(task_id: str) -> str:
    return task_id.split("@", 1)[0]


def emit_plots(results_csv: Union[str, Path], out_dir: Union[str, Path]) -> List[Path]:
    frame = read_results_frame(results_csv)
    if frame.empty:
        raise NoDataError(f"{results_csv} holds no result rows")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    frame = frame.assign(domain=frame["target_task"].map(domain_of))
    paths = []
    for domain, rows in frame.groupby("domain", sort=True):
        per_episode = summarize_frame(rows).per_episode
        with plt.rc_context(SVG_RC):
            fig, ax = plt.subplots(figsize=(6.4, 4.0))
            for method, curve in per_episode.groupby("method", sort=True):
                episodes = curve["episode"].to_numpy() + 1
                mean = curve["mean"].to_numpy()
                half = curve["ci95"].to_numpy()
                (line,) = ax.plot(episodes, mean, marker="o", markersize=3, label=method)
                ax.fill_between(episodes, mean - half, mean + half, color=line.get_color(), alpha=0.2, linewidth=0)
            ax.set_xlabel("episode")
            ax.set_ylabel("mean return")
            ax.set_title(domain)
            ax.legend(loc="best", frameon=False)
            fig.tight_layout()
            path = out_dir / f"{domain}.svg"
            fig.savefig(path, format="svg", metadata={"Date": None})
            plt.close(fig)
        logger.info(f"Wrote {path}")
        paths.append(path)
    return paths
