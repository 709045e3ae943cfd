"""
In-process entry point for the experiment commands.

``cli(['experiment', '--data', 'emotions', ...])`` behaves like
``python manage.py experiment --data emotions ...`` and returns the exit code
instead of leaving the interpreter.
"""
from __future__ import annotations

import os
import sys
from typing import Sequence

SUBCOMMANDS = {
    'train': 'train',
    'predict': 'predict',
    'eval': 'eval',
    'experiment': 'experiment',
    'dump-embedding': 'dump_embedding',
    'dump_embedding': 'dump_embedding',
    'inspect-dataset': 'inspect_dataset',
    'inspect_dataset': 'inspect_dataset',
}

USAGE = f"usage: cli {{{','.join(sorted(k for k in SUBCOMMANDS if '_' not in k))}}} [options]"


def cli(argv: Sequence[str]) -> int:
    os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'config.settings')
    from django.core.management import execute_from_command_line

    argv = list(argv)
    if not argv or argv[0] not in SUBCOMMANDS:
        print(USAGE, file=sys.stderr)
        return 2
    try:
        execute_from_command_line(['manage.py', SUBCOMMANDS[argv[0]], *argv[1:]])
    except SystemExit as exc:
        if exc.code is None:
            return 0
        return exc.code if isinstance(exc.code, int) else 1
    return 0
