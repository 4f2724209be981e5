"""Run reports and the artifacts written for them: trajectory tables, JSON, SVG plots and a PDF summary."""

import csv
import json
import logging
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

import matplotlib

matplotlib.use('Agg')
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
from fpdf import FPDF  # noqa: E402

from .decorators import EXIT_COLLISION, EXIT_NOT_CONVERGED, EXIT_OK, EXIT_RANK  # noqa: E402
from .oracles import monotonicity_check  # noqa: E402
from .sim import COLLISION, CONVERGED, CRITICAL_POINT, HORIZON_EXHAUSTED, RANK_FAILURE  # noqa: E402

logger = logging.getLogger(__name__)

plt.rcParams['svg.hashsalt'] = 'bracket-nav'

OUTCOME_EXIT_CODES = {
    CONVERGED: EXIT_OK,
    HORIZON_EXHAUSTED: EXIT_NOT_CONVERGED,
    CRITICAL_POINT: EXIT_NOT_CONVERGED,
    COLLISION: EXIT_COLLISION,
    RANK_FAILURE: EXIT_RANK,
}


@dataclass
class RunReport:
    scenario: str
    outcome: str
    final_distance: float
    min_margin: float
    epochs: int
    monotonicity_violations: int
    wall_time: float
    epsilon: float = 0.0
    gamma: float = 0.0
    final_time: float = 0.0
    lemma1_violations: Optional[int] = None
    lemma1_max_ratio: Optional[float] = None
    detail: str = ''
    artifacts: list = field(default_factory=list)

    @property
    def exit_code(self):
        return OUTCOME_EXIT_CODES[self.outcome]

    def to_document(self):
        return asdict(self)

    def summary(self):
        return ('%s: %s after %d epochs (t=%.4g), distance %.4g, min margin %.4g, %d monotonicity violations'
                % (self.scenario, self.outcome, self.epochs, self.final_time, self.final_distance, self.min_margin,
                   self.monotonicity_violations))


def build_run_report(scenario, traj, wall_time, lemma1=None, detail=''):
    monotonicity = monotonicity_check(traj)
    report = RunReport(
        scenario=scenario.name,
        outcome=traj.outcome,
        final_distance=traj.final_distance,
        min_margin=traj.min_margin,
        epochs=traj.epochs,
        monotonicity_violations=monotonicity.violations,
        wall_time=float(wall_time),
        epsilon=float(scenario.params.epsilon),
        gamma=float(scenario.params.gamma),
        final_time=float(traj.times[-1]),
        detail=detail,
    )
    if lemma1 is not None:
        report.lemma1_violations = len(lemma1.violations)
        report.lemma1_max_ratio = lemma1.max_ratio
    return report


def rank_failure_report(scenario, error, wall_time):
    return RunReport(scenario=scenario.name, outcome=RANK_FAILURE, final_distance=float('nan'),
                     min_margin=float('nan'), epochs=0, monotonicity_violations=0, wall_time=float(wall_time),
                     epsilon=float(scenario.params.epsilon), gamma=float(scenario.params.gamma), detail=str(error))


def trajectory_columns(traj):
    n, m = traj.states.shape[1], traj.controls.shape[1]
    header = (['t'] + ['x%d' % i for i in range(1, n + 1)] + ['u%d' % k for k in range(1, m + 1)]
              + ['distance', 'margin', 'P', 'log_barrier'])
    table = np.column_stack([traj.times, traj.states, traj.controls, traj.distance, traj.margin, traj.potential,
                             traj.log_barrier])
    return header, table


def write_trajectory_csv(traj, path):
    header, table = trajectory_columns(traj)
    np.savetxt(path, table, delimiter=',', fmt='%.17g', header=','.join(header), comments='')
    return Path(path)


def write_trajectory_json(traj, path):
    header, table = trajectory_columns(traj)
    document = {name: table[:, i].tolist() for i, name in enumerate(header)}
    document['epoch_starts'] = list(traj.epoch_starts)
    document['outcome'] = traj.outcome
    Path(path).write_text(json.dumps(document), encoding='utf-8')
    return Path(path)


def write_json(document, path):
    Path(path).write_text(json.dumps(document, indent=2, sort_keys=True, default=float), encoding='utf-8')
    return Path(path)


def _save(fig, path):
    fig.savefig(path, format='svg', metadata={'Date': None})
    plt.close(fig)
    return Path(path)


def _projection_axes(ax, traj, scene, projection):
    i, j = projection
    xs, ys = traj.states[:, i], traj.states[:, j]
    low, high = scene.bounding_box()
    x_range = np.linspace(min(low[i], xs.min()), max(high[i], xs.max()), 240)
    y_range = np.linspace(min(low[j], ys.min()), max(high[j], ys.max()), 240)
    gx, gy = np.meshgrid(x_range, y_range)
    points = np.broadcast_to(scene.target, gx.shape + (scene.n,)).copy()
    points[..., i], points[..., j] = gx, gy
    betas = scene.betas(points)
    ax.contour(gx, gy, betas[..., 0], levels=[0.0], colors='black', linewidths=1.0)
    for k in range(1, betas.shape[-1]):
        beta = betas[..., k]
        # obstacles missing this slice have no zero level
        if beta.min() < 0.0 < beta.max():
            ax.contourf(gx, gy, beta, levels=[beta.min() - 1.0, 0.0], colors='0.75')
            ax.contour(gx, gy, beta, levels=[0.0], colors='0.3', linewidths=0.8)
    ax.plot(xs, ys, color='tab:blue', linewidth=0.8)
    ax.plot(xs[0], ys[0], 'o', color='tab:green', label='x0')
    ax.plot(scene.target[i], scene.target[j], '*', color='tab:red', markersize=10, label='target')
    ax.set_xlabel('x%d' % (i + 1))
    ax.set_ylabel('x%d' % (j + 1))
    ax.set_aspect('equal', adjustable='datalim')
    ax.legend(loc='best', fontsize='small')


def plot_projection(traj, scene, path, projection=(0, 1)):
    fig, ax = plt.subplots(figsize=(6, 6))
    _projection_axes(ax, traj, scene, projection)
    ax.set_title('trajectory projection')
    return _save(fig, path)


def plot_metric(times, values, path, ylabel):
    fig, ax = plt.subplots(figsize=(7, 3))
    ax.plot(times, values, linewidth=0.9)
    ax.set_xlabel('t')
    ax.set_ylabel(ylabel)
    ax.grid(True, linewidth=0.3)
    return _save(fig, path)


def plot_summary(traj, scene, path, projection=(0, 1)):
    fig, (top, middle, bottom) = plt.subplots(3, 1, figsize=(7, 11), gridspec_kw={'height_ratios': [2, 1, 1]})
    _projection_axes(top, traj, scene, projection)
    middle.plot(traj.times, traj.distance, linewidth=0.9)
    middle.set_ylabel('|x(t) - x*|')
    bottom.plot(traj.times, traj.log_barrier, linewidth=0.9)
    bottom.set_ylabel('ln(1 + prod beta_j)')
    bottom.set_xlabel('t')
    for ax in (middle, bottom):
        ax.grid(True, linewidth=0.3)
    fig.tight_layout()
    return _save(fig, path)


def write_plots(traj, scene, output_dir, projection=(0, 1)):
    output_dir = Path(output_dir)
    return [
        plot_projection(traj, scene, output_dir / 'projection.svg', projection),
        plot_metric(traj.times, traj.distance, output_dir / 'distance.svg', '|x(t) - x*|'),
        plot_metric(traj.times, traj.log_barrier, output_dir / 'log_barrier.svg', 'ln(1 + prod beta_j)'),
        plot_summary(traj, scene, output_dir / 'summary.svg', projection),
    ]


def write_pdf_report(report, scenario, path, checks=()):
    pdf = FPDF()
    pdf.alias_nb_pages()
    pdf.add_page()
    pdf.set_font('Times', 'B', 16)
    pdf.cell(0, 10, txt='Run report: %s' % report.scenario, ln=1)
    pdf.set_font('Times', '', 12)
    pdf.cell(0, 8, txt='system %s, n=%d, m=%d' % (scenario.system.name, scenario.system.n, scenario.system.m), ln=1)
    pdf.cell(0, 8, txt='epsilon=%g, gamma=%g, frequencies %s' % (report.epsilon, report.gamma,
                                                              scenario.frequencies.to_document()), ln=1)
    pdf.cell(0, 8, txt='', ln=1)
    pdf.set_font('Times', 'B', 14)
    pdf.cell(0, 10, txt='Outcome: %s' % report.outcome, ln=1)
    pdf.set_font('Times', '', 12)
    lines = [
        'final time %.6g, %d epochs' % (report.final_time, report.epochs),
        'final distance to target %.6g' % report.final_distance,
        'minimum free-space margin %.6g' % report.min_margin,
        'P increases across epochs: %d' % report.monotonicity_violations,
        'wall time %.3f s' % report.wall_time,
    ]
    if report.lemma1_violations is not None:
        lines.append('excursion bound violations: %d (max ratio %.4g)'
                     % (report.lemma1_violations, report.lemma1_max_ratio))
    if report.detail:
        lines.append(report.detail)
    for line in lines:
        pdf.cell(0, 8, txt=line, ln=1)
    if checks:
        pdf.cell(0, 8, txt='', ln=1)
        pdf.set_font('Times', 'B', 14)
        pdf.cell(0, 10, txt='Checks', ln=1)
        pdf.set_font('Times', '', 12)
        for check in checks:
            pdf.cell(0, 8, txt='%s: %s' % ('pass' if check.passed else 'FAIL', check.name), ln=1)
    pdf.output(str(path))
    return Path(path)


def write_run_artifacts(report, traj, scenario, output_dir, fmt='csv', plots=False, projection=(0, 1), pdf=False,
                        checks=()):
    output_dir = Path(output_dir)
    output_dir.mkdir(parents=True, exist_ok=True)
    written = []
    if traj is not None:
        if fmt == 'json':
            written.append(write_trajectory_json(traj, output_dir / 'trajectory.json'))
        else:
            written.append(write_trajectory_csv(traj, output_dir / 'trajectory.csv'))
        if plots:
            written.extend(write_plots(traj, scenario.scene, output_dir, projection))
    if pdf:
        written.append(write_pdf_report(report, scenario, output_dir / 'report.pdf', checks))
    report.artifacts = [p.name for p in written] + ['report.json']
    written.append(write_json(report.to_document(), output_dir / 'report.json'))
    logger.info('wrote %d artifacts to %s', len(written), output_dir)
    return written


SWEEP_COLUMNS = ('value', 'outcome', 'final_distance', 'min_margin', 'monotonicity_violations', 'epochs', 'detail')


def write_sweep_table(rows, path):
    with open(path, 'w', newline='') as f:
        writer = csv.writer(f)
        writer.writerow(SWEEP_COLUMNS)
        for row in rows:
            writer.writerow([row.get(c, '') for c in SWEEP_COLUMNS])
    return Path(path)
