""" Report emission: per-cell tables and per-codec BD tables

Output is a pure function of the EvalReport (no timestamps), so a rerun of
a cached run rewrites identical files.
"""

import csv
import json
import logging
import os

from . import ContractError

log = logging.getLogger(__name__)

REPORT_FORMATS = ('csv', 'json', 'markdown', 'plot')
DEFAULT_REPORT_FORMATS = ('csv', 'json', 'markdown')

CELL_COLUMNS = (
    'sequence', 'codec', 'format', 'q', 'coded_width', 'coded_height',
    'frames', 'bits', 'rate_bpp', 'psnr_y', 'psnr_u', 'psnr_v', 'yuv_psnr',
    'wspsnr_y', 'wspsnr_u', 'wspsnr_v', 'yuv_wspsnr')
BD_COLUMNS = (
    'codec', 'format', 'metric', 'sequence', 'bd_rate', 'bd_quality', 'iou',
    'flagged', 'reason')

METRIC_TITLES = {'yuv_psnr': 'YUV-PSNR', 'yuv_wspsnr': 'YUV-WS-PSNR'}

FLAG_MARK = '*'


def _fmt(value, digits):
    return '' if value is None else '{:.{}f}'.format(value, digits)


def cell_rows(report):
    for c in report.cells:
        row = c.as_dict()
        row.update(row.pop('quality'))
        row['rate_bpp'] = '{:.8g}'.format(row['rate_bpp'])
        for name in CELL_COLUMNS[9:]:
            row[name] = _fmt(row[name], 4)
        yield [row[name] for name in CELL_COLUMNS]


def bd_rows(report):
    for e in report.bd:
        yield [e.codec, e.format, e.metric, e.sequence or 'average',
               _fmt(e.bd_rate, 4), _fmt(e.bd_quality, 4), _fmt(e.iou, 4),
               int(e.flagged), e.reason]


def _write_csv(path, header, rows):
    with open(path, 'w', newline='') as f:
        writer = csv.writer(f, lineterminator='\n')
        writer.writerow(header)
        writer.writerows(rows)


def bd_cell_text(entry):
    if not entry.available:
        return 'n/a'
    text = '{:.2f}'.format(entry.bd_rate)
    return text + FLAG_MARK if entry.flagged else text


def markdown(report):
    settings = report.settings
    lines = [
        '# Projection format evaluation',
        '',
        'Rates are bits per pixel of the {} resolution; BD values use the '
        '{} fit against each codec\'s ERP curve.'.format(
            'source ERP' if settings['rate_normalization'] == 'source'
            else 'coded', settings['bd_fit']),
        '',
        '## Cells',
        '',
        '| sequence | codec | format | q | rate (bpp) | YUV-PSNR | YUV-WS-PSNR |',
        '|---|---|---|---|---|---|---|',
    ]
    for c in report.cells:
        q = c.quality.as_dict()
        lines.append('| {} | {} | {} | {} | {:.6f} | {:.2f} | {:.2f} |'.format(
            c.cell.sequence, c.cell.codec, c.cell.format, c.cell.q,
            c.rate_bpp, q['yuv_psnr'], q['yuv_wspsnr']))
    if report.failed:
        lines += ['', 'Failed cells:', '']
        lines += ['- {} / {} / {} / q={}: {}'.format(
            c.cell.sequence, c.cell.codec, c.cell.format, c.cell.q, c.error)
            for c in report.failed]
    for metric, title in METRIC_TITLES.items():
        averages = report.averages(metric=metric)
        if not averages:
            continue
        formats = report.formats
        lines += [
            '',
            '## BD-rate in % vs ERP, {}'.format(title),
            '',
            '| codec | ' + ' | '.join(f.upper() for f in formats) + ' |',
            '|---' * (len(formats) + 1) + '|',
        ]
        for codec in report.codecs:
            by_format = {e.format: e for e in averages if e.codec == codec}
            if not by_format:
                continue
            lines.append('| {} | {} |'.format(codec, ' | '.join(
                bd_cell_text(by_format[f]) for f in formats)))
        lines += ['', 'Entries marked by {} have a quality-range IoU below '
                  '1/3.'.format(FLAG_MARK)]
    return '\n'.join(lines) + '\n'


def plot(report, path):
    """ Rate vs YUV-WS-PSNR, one panel per (sequence, codec)
    """
    import matplotlib
    matplotlib.use('Agg')
    import matplotlib.pyplot as plt

    panels = []
    for c in report.cells:
        key = (c.cell.sequence, c.cell.codec)
        if key not in panels:
            panels.append(key)
    fig, axes = plt.subplots(
        1, len(panels), figsize=(5 * len(panels), 4), squeeze=False)
    for ax, (seq, codec) in zip(axes[0], panels):
        for fmt in report.formats:
            cells = sorted(
                (c for c in report.cells if c.cell.sequence == seq
                 and c.cell.codec == codec and c.cell.format == fmt
                 and c.rate_bpp > 0),
                key=lambda c: c.rate_bpp)
            if not cells:
                continue
            ax.plot([c.rate_bpp for c in cells],
                    [c.quality.as_dict()['yuv_wspsnr'] for c in cells],
                    '--o' if fmt == 'erp' else '-o', label=fmt.upper())
        ax.set_title('{} / {}'.format(seq, codec))
        ax.set_xlabel('rate (bpp)')
        ax.set_ylabel('YUV-WS-PSNR (dB)')
        ax.grid(True)
        ax.legend()
    fig.tight_layout()
    fig.savefig(path, metadata={'Software': None})
    plt.close(fig)


def emit_report(report, out_dir, formats=DEFAULT_REPORT_FORMATS):
    """ Write the requested report files, returns their paths
    """
    if not report.cells:
        raise ContractError('Nothing to report: no completed cell')
    unknown = set(formats) - set(REPORT_FORMATS)
    if unknown:
        raise ContractError('Unknown report formats: {}'.format(
            ', '.join(sorted(unknown))))
    os.makedirs(out_dir, exist_ok=True)
    written = []
    if 'csv' in formats:
        path = os.path.join(out_dir, 'cells.csv')
        _write_csv(path, CELL_COLUMNS, cell_rows(report))
        written.append(path)
        if report.bd:
            path = os.path.join(out_dir, 'bd.csv')
            _write_csv(path, BD_COLUMNS, bd_rows(report))
            written.append(path)
    if 'json' in formats:
        path = os.path.join(out_dir, 'report.json')
        with open(path, 'w') as f:
            json.dump(report.as_dict(), f, indent=2, sort_keys=True)
            f.write('\n')
        written.append(path)
    if 'markdown' in formats:
        path = os.path.join(out_dir, 'report.md')
        with open(path, 'w') as f:
            f.write(markdown(report))
        written.append(path)
    if 'plot' in formats:
        path = os.path.join(out_dir, 'rd.png')
        plot(report, path)
        written.append(path)
    for path in written:
        log.info('Wrote {}'.format(path))
    return written
