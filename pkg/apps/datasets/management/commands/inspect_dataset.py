"""
Print the shape statistics of a dataset and compare them with the catalog.
"""
import json

from django.conf import settings
from django.core.management.base import BaseCommand, CommandError

from apps.core.mixins import RUNTIME_ERROR, USAGE_ERROR, CommandErrorsMixin
from apps.datasets.catalog import CATALOG, compare, describe
from apps.datasets.loaders import load_dataset


class Command(CommandErrorsMixin, BaseCommand):
    help = 'Show K, d, N and the number of distinct label vectors of a dataset'

    def add_arguments(self, parser):
        parser.add_argument(
            'datasets',
            nargs='*',
            help=f'Dataset files or names under {settings.CLEMS_DATA_DIR} (default: every catalog entry found there)'
        )
        parser.add_argument('--K', type=int, dest='n_labels', help='Label columns for CSV input')
        parser.add_argument('--json', action='store_true', help='Print JSON instead of text')

    def handle(self, *args, **options):
        names = options['datasets'] or [
            name for name in CATALOG
            if (settings.CLEMS_DATA_DIR / f"{name}.xml").exists()
        ]
        if not names:
            raise CommandError(
                f"error[usage]: no datasets given and none found under {settings.CLEMS_DATA_DIR}",
                returncode=USAGE_ERROR,
            )

        report = {}
        mismatched = 0
        for name in names:
            with self.domain_errors():
                data = load_dataset(name, settings.CLEMS_DATA_DIR, K=options['n_labels'])
            stats = describe(data)
            problems = compare(data.name, stats)
            mismatched += bool(problems)
            report[data.name] = {**stats.to_dict(), 'mismatches': problems}
            if not options['json']:
                line = f'{data.name}: K={stats.K} d={stats.d} N={stats.N} distinct={stats.distinct}'
                if problems:
                    self.stdout.write(self.style.WARNING(f'{line}  ({"; ".join(problems)})'))
                else:
                    self.stdout.write(self.style.SUCCESS(line))

        if options['json']:
            self.stdout.write(json.dumps(report, indent=2))
        if mismatched:
            raise CommandError(f"{mismatched} dataset(s) differ from the catalog", returncode=RUNTIME_ERROR)
