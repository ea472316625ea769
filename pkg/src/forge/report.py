"""Table-shaped result reports: Markdown + CSV, with rendered figures.

Rows are grouped by test language and setup, one column per task; a cell is
starred when the paired bootstrap marks a significant improvement over the
corresponding monolingual baseline.  Emission is deterministic: unchanged
inputs re-emit byte-identical tables.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

from .bootstrap import BootstrapReport, mark_significance
from .errors import ReportError
from .evaluation import EvalResult, SETUPS, TASKS

LANGUAGE_NAMES = {"en": "English", "fr": "French"}
SETUP_NAMES = {"monolingual": "Monolingual", "bilingual": "Bilingual", "cross_lingual": "Cross-lingual"}

# (pretrain_corpus, test_language) identifies a table row;
# (pretrain_corpus, test_language, task) identifies a cell.
RowKey = tuple[str, str]
CellKey = tuple[str, str, str]


@dataclass(frozen=True)
class ReportDocument:
    markdown: str
    csv_text: str

    def write(self, out_dir: str | Path) -> tuple[Path, Path]:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        md_path = out_dir / "report.md"
        csv_path = out_dir / "report.csv"
        md_path.write_text(self.markdown, encoding="utf-8")
        csv_path.write_text(self.csv_text, encoding="utf-8")
        return md_path, csv_path


def corpus_family(label: str) -> str:
    """Strip leading language qualifiers: "en-fr-wikipedia" -> "wikipedia"."""
    parts = label.split("-")
    while parts and parts[0] in LANGUAGE_NAMES:
        parts = parts[1:]
    return "-".join(parts) if parts else label


def infer_baselines(results: Sequence[EvalResult]) -> dict[RowKey, RowKey]:
    """Map each bilingual/cross-lingual row to the monolingual row of the
    same corpus family and test language."""
    monolingual: dict[tuple[str, str], str] = {}
    for result in results:
        if result.setup == "monolingual":
            monolingual[(corpus_family(result.pretrain_corpus), result.test_language)] = (
                result.pretrain_corpus
            )
    baselines: dict[RowKey, RowKey] = {}
    for result in results:
        if result.setup == "monolingual":
            continue
        family = corpus_family(result.pretrain_corpus)
        baseline_corpus = monolingual.get((family, result.test_language))
        if baseline_corpus is not None:
            baselines[(result.pretrain_corpus, result.test_language)] = (
                baseline_corpus,
                result.test_language,
            )
    return baselines


def _organize(results: Sequence[EvalResult]):
    cells: dict[CellKey, EvalResult] = {}
    rows: dict[RowKey, str] = {}
    for result in results:
        key = (result.pretrain_corpus, result.test_language, result.task)
        if key in cells:
            raise ReportError(f"duplicate result for cell {key}; aggregate seeds first")
        cells[key] = result
        row = (result.pretrain_corpus, result.test_language)
        if rows.setdefault(row, result.setup) != result.setup:
            raise ReportError(f"row {row} appears under two different setups")
    return cells, rows


def emit_report(
    results: Sequence[EvalResult],
    baselines: Mapping[RowKey, RowKey],
    bootstraps: Mapping[CellKey, BootstrapReport],
    alpha: float = 0.05,
) -> ReportDocument:
    """Render results into Markdown and CSV tables with significance stars.

    ``baselines`` designates, for every non-monolingual row, the monolingual
    row it is compared to; ``bootstraps`` holds the paired-bootstrap outcome
    per non-monolingual cell.  Monolingual rows are their own baseline and
    are never starred.
    """
    cells, rows = _organize(results)
    tasks = [t for t in TASKS if any(k[2] == t for k in cells)]
    languages = sorted({k[1] for k in rows}, key=lambda l: (l != "en", l))

    for row_key, setup in rows.items():
        if setup != "monolingual" and row_key not in baselines:
            raise ReportError(
                f"row {row_key} ({setup}) has no designated monolingual baseline"
            )

    def render_cell(cell_key: CellKey, setup: str) -> str:
        result = cells.get(cell_key)
        if result is None:
            return "-"
        text = f"{result.value:.2f}"
        if setup == "monolingual":
            return text
        report = bootstraps.get(cell_key)
        if report is not None and mark_significance(report, alpha):
            baseline_row = baselines[(cell_key[0], cell_key[1])]
            if (baseline_row[0], baseline_row[1], cell_key[2]) not in cells:
                raise ReportError(
                    f"starred cell {cell_key} lacks its baseline cell in the results"
                )
            text += "*"
        return text

    md = io.StringIO()
    md.write("# Results\n")
    md.write("\nValues are averages over seeds, x100. `*` marks a statistically significant\n")
    md.write("improvement over the corresponding monolingual baseline (paired bootstrap,\n")
    md.write(f"p < {alpha:g}).\n")

    csv_buffer = io.StringIO()
    writer = csv.writer(csv_buffer, lineterminator="\n")
    writer.writerow(["test_language", "setup", "pretrain_corpus", *tasks])

    for language in languages:
        md.write(f"\n## Tested in {LANGUAGE_NAMES.get(language, language)}\n")
        for setup in SETUPS:
            setup_rows = sorted(
                row for row, row_setup in rows.items()
                if row[1] == language and row_setup == setup
            )
            if not setup_rows:
                continue
            md.write(f"\n### {SETUP_NAMES[setup]}\n\n")
            md.write("| Pretrain corpus | " + " | ".join(t.upper() for t in tasks) + " |\n")
            md.write("|" + "---|" * (len(tasks) + 1) + "\n")
            for corpus, _ in setup_rows:
                rendered = [render_cell((corpus, language, task), setup) for task in tasks]
                md.write(f"| {corpus} | " + " | ".join(rendered) + " |\n")
                writer.writerow([language, setup, corpus, *rendered])

    return ReportDocument(markdown=md.getvalue(), csv_text=csv_buffer.getvalue())


def render_figures(
    results: Sequence[EvalResult],
    bootstraps: Mapping[CellKey, BootstrapReport],
    out_dir: str | Path,
    alpha: float = 0.05,
) -> list[Path]:
    """Render one grouped-bar figure per test language next to the tables."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    cells, rows = _organize(results)
    tasks = [t for t in TASKS if any(k[2] == t for k in cells)]
    languages = sorted({k[1] for k in rows}, key=lambda l: (l != "en", l))
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    paths: list[Path] = []
    for language in languages:
        language_rows = sorted(
            (row for row in rows if row[1] == language),
            key=lambda row: (SETUPS.index(rows[row]), row[0]),
        )
        if not language_rows:
            continue
        fig, ax = plt.subplots(figsize=(1.8 + 1.6 * len(tasks), 4.0))
        width = 0.8 / max(1, len(language_rows))
        for offset, (corpus, _) in enumerate(language_rows):
            xs, ys, starred = [], [], []
            for task_index, task in enumerate(tasks):
                result = cells.get((corpus, language, task))
                if result is None:
                    continue
                x = task_index + offset * width
                xs.append(x)
                ys.append(result.value)
                report = bootstraps.get((corpus, language, task))
                if report is not None and mark_significance(report, alpha):
                    starred.append((x, result.value))
            label = f"{corpus} ({rows[(corpus, language)]})"
            ax.bar(xs, ys, width=width, label=label)
            for x, y in starred:
                ax.annotate("*", (x, y), ha="center", va="bottom", fontsize=12)
        ax.set_xticks([i + 0.4 - width / 2 for i in range(len(tasks))])
        ax.set_xticklabels([t.upper() for t in tasks])
        ax.set_ylabel("score (x100)")
        ax.set_ylim(0, 100)
        ax.set_title(f"Tested in {LANGUAGE_NAMES.get(language, language)}")
        ax.legend(fontsize=7, loc="upper left", bbox_to_anchor=(1.0, 1.0))
        fig.tight_layout()
        path = out_dir / f"report_{language}.png"
        fig.savefig(path, dpi=150, metadata={"Software": "forge"})
        plt.close(fig)
        paths.append(path)
    return paths
