"""Report figures written next to the tab-delimited report files."""

from __future__ import annotations

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

FIGSIZE = (5.0, 3.6)


def write_tsv(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, delimiter="\t", lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def confusion_figure(counts, label_names, path, title="Confusion matrix"):
    counts = np.asarray(counts)
    fig, ax = plt.subplots(figsize=FIGSIZE)
    im = ax.imshow(counts, cmap="Blues")
    ax.set_xticks(range(len(label_names)), label_names)
    ax.set_yticks(range(len(label_names)), label_names)
    ax.set_xlabel("predicted")
    ax.set_ylabel("true")
    ax.set_title(title)
    hi = counts.max() if counts.size else 0
    for i in range(counts.shape[0]):
        for j in range(counts.shape[1]):
            ax.text(j, i, str(counts[i, j]), ha="center", va="center",
                    color="white" if counts[i, j] > hi / 2 else "black")
    fig.colorbar(im, ax=ax)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def fitness_figure(records, path, metric="fitness"):
    gens = [r.generation for r in records]
    fig, ax = plt.subplots(figsize=FIGSIZE)
    ax.plot(gens, [r.best_fitness for r in records], marker="o", label="best")
    ax.plot(gens, [r.mean_fitness for r in records], linestyle="--", label="mean (valid)")
    ax.set_xlabel("generation")
    ax.set_ylabel(metric)
    ax.legend(frameon=False)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def threshold_figure(thresholds, precision, recall, f1, path, marks=()):
    fig, ax = plt.subplots(figsize=FIGSIZE)
    ax.plot(thresholds, precision, label="precision")
    ax.plot(thresholds, recall, label="recall")
    ax.plot(thresholds, f1, label="F1")
    for t in marks:
        ax.axvline(t, color="grey", linewidth=0.8, linestyle=":")
    ax.set_xscale("log")
    ax.set_xlabel("decision threshold")
    ax.set_ylim(0, 1.02)
    ax.legend(frameon=False)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def write_search_report(log, out_dir, metric):
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_tsv(out / "generations.tsv",
              ["generation", "best_fitness", "mean_fitness", "n_ok", "n_timeout", "n_error",
               "seconds", "best_spec"],
              [[r.generation, f"{r.best_fitness:.6f}", f"{r.mean_fitness:.6f}", r.n_ok,
                r.n_timeout, r.n_error, f"{r.seconds:.3f}", r.best_spec] for r in log.records])
    fitness_figure(log.records, out / "fitness.png", metric)
