"""
Contains methods for writing experiment results to disk

Each run (one policy on one batch) is written as a CSV file with the columns
slot, mean_regret and std_regret (or as a JSON file with the same curves plus the per-experiment
records), and each command writes a summary JSON file with the configuration and the final-regret
statistics of all of its runs. Identical commands produce byte-identical files unless a creation
timestamp is requested.
"""

# Built-ins
import json
import logging
import os
from datetime import datetime, timezone

# Third-party
import jinja2
import numpy as np

logger = logging.getLogger(__name__)

DEFAULT_FILE_TEMPLATE = '{{ command }}_{{ label }}.{{ ext }}'
SUMMARY_FILE_TEMPLATE = '{{ command }}_summary.json'
OUTPUT_FORMATS = ('csv', 'json')


def slugify(label):
    """
    Makes a run label safe to use in a file name

    Examples
    --------

        >>> slugify('sbts-essr:20@fixed:11:10')
        'sbts-essr-20_fixed-11-10'
    """
    for old, new in ((':', '-'), ('@', '_'), ('/', '_'), (',', '+'), ('[', '_'), (']', '')):
        label = label.replace(old, new)
    return label


def render_file_name(template, **kwargs):
    """
    Renders a file name from a Jinja2 template

    The template can use {{ command }}, {{ label }} (already slugified), {{ env }}, {{ seed }} and
    {{ ext }}.
    """
    return jinja2.Template(os.path.expandvars(template)).render(**kwargs)


def _counter_stats(counts):
    return {'mean': float(counts.mean()), 'max': int(counts.max()), 'last': int(counts[-1]),
            'total': int(counts.sum())}


def trace_record(trace):
    """
    Per-experiment record of a trace for the summary and JSON outputs
    """
    record = {
        'index': trace.index,
        'final_regret': trace.final_regret,
        'realized_regret': trace.realized_regret,
        'optimal_pulls': trace.optimal_pulls,
        'pulls': trace.pulls.tolist(),
        'means': [float(m) for m in trace.env.means],
        'min_gap': trace.env.min_gap,
    }
    if trace.draws is not None:
        record['draws_per_slot'] = _counter_stats(trace.draws)
        record['comparisons_per_slot'] = _counter_stats(trace.comparisons)
    if trace.committed is not None:
        record['committed'] = trace.committed
    if trace.memory_bits is not None:
        record['memory_bits'] = int(trace.memory_bits)
    return record


def summary_record(summary):
    """
    Summary of one run: final-regret statistics and the per-experiment records
    """
    return {
        'label': summary.label,
        'num_experiments': summary.num_experiments,
        'horizon': summary.N,
        'mean_final_regret': float(summary.final_regrets.mean()),
        'ci95': list(summary.ci95),
        'boxplot': summary.boxplot,
        'mean_optimal_pulls': float(summary.optimal_pulls.mean()),
        'experiments': [trace_record(trace) for trace in summary.traces],
    }


def _dump_json(data, file):
    with open(file, 'w') as f:
        json.dump(data, f, indent=2, sort_keys=True)
        f.write('\n')


def write_run(summary, file, format='csv'):
    """
    Writes the regret curves of a run

    ### Parameters

    - summary (BatchSummary): the run
    - file (string): output file
    - format (string): 'csv' (slot, mean_regret, std_regret) or 'json' (the curves, the
      per-experiment records and, for RI-MAB, the per-slot active candidates and the learning-phase
      beliefs)
    """
    if format not in OUTPUT_FORMATS:
        raise ValueError(f'unknown output format {format!r}, must be one of {OUTPUT_FORMATS}')
    if format == 'csv':
        summary.to_xarray().to_dataframe().to_csv(file, float_format='%.6f')
    else:
        data = summary_record(summary)
        data['mean_regret'] = np.round(summary.mean_regret, 6).tolist()
        data['std_regret'] = np.round(summary.std_regret, 6).tolist()
        for record, trace in zip(data['experiments'], summary.traces):
            if trace.active is not None:
                record['active'] = trace.active.tolist()
                record['beliefs'] = np.round(trace.beliefs, 6).tolist()
        _dump_json(data, file)
    logger.info('Wrote %s', file)


def write_summary(file, command, config, summaries, stamp=False):
    """
    Writes the summary JSON file of a command

    ### Parameters

    - file (string): output file
    - command (string): the command that produced the runs
    - config (dict): configuration echo
    - summaries (list of BatchSummary): the runs
    - stamp (bool): add a creation timestamp under metadata.created
    """
    data = {
        'command': command,
        'config': config,
        'runs': [summary_record(summary) for summary in summaries],
        'metadata': {},
    }
    if stamp:
        data['metadata']['created'] = datetime.now(timezone.utc).isoformat()
    _dump_json(data, file)
    logger.info('Wrote %s', file)


def write_results(out_dir, command, config, summaries, format='csv',
                  file_template=DEFAULT_FILE_TEMPLATE, stamp=False):
    """
    Writes one file per run and the command's summary file into `out_dir`

    ### Returns

    - list of strings: the files written (runs first, summary last)
    """
    os.makedirs(out_dir, exist_ok=True)
    files = []
    for summary in summaries:
        name = render_file_name(file_template, command=command, label=slugify(summary.label),
                                env=slugify(config.get('env', '')), seed=config.get('seed'),
                                ext=format)
        file = os.path.join(out_dir, name)
        write_run(summary, file, format)
        files.append(file)
    file = os.path.join(out_dir, render_file_name(SUMMARY_FILE_TEMPLATE, command=command))
    write_summary(file, command, config, summaries, stamp)
    files.append(file)
    return files
