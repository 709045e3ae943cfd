"""
Run the full experiment protocol and export the results.
"""
import json

from django.conf import settings
from django.core.management.base import CommandError

from apps.core.mixins import USAGE_ERROR
from apps.embedding.clems import CANDIDATE_SOURCES

from ...harness import ExperimentConfig, run_experiment, write_results
from ...models import Experiment
from ._base import ExperimentCommand, depth_list


def comma_list(value: str) -> list[str]:
    return [v.strip() for v in value.split(',') if v.strip()]


class Command(ExperimentCommand):
    help = 'Run repeated split/select/train/evaluate experiments and write JSON and CSV results'

    def add_arguments(self, parser):
        self.add_data_arguments(parser)
        self.add_model_arguments(parser, seed_required=True)
        parser.add_argument(
            '--embed-dim',
            default=settings.CLEMS_EMBED_DIM,
            help='Comma-separated embedding dimensions, integers or percentages of K (e.g. 25%%,50%%,100%%)'
        )
        parser.add_argument(
            '--runs',
            type=int,
            default=settings.CLEMS_N_RUNS,
            help='Number of random splits'
        )
        parser.add_argument(
            '--depth-grid',
            type=depth_list,
            default=list(settings.CLEMS_DEPTH_GRID),
            help='Comma-separated tree depths tried on the validation split'
        )
        parser.add_argument(
            '--out',
            default=str(settings.CLEMS_RESULTS_DIR),
            help='Directory for the JSON and CSV result files'
        )
        parser.add_argument(
            '--verify-bound',
            action='store_true',
            help='Check the decoding bound for every CLEMS test prediction'
        )
        parser.add_argument(
            '--no-record',
            action='store_true',
            help='Do not store the results in the database'
        )

    def handle(self, *args, **options):
        sources = comma_list(options['candidates'])
        unknown = [s for s in sources if s not in CANDIDATE_SOURCES]
        if not sources or unknown:
            raise CommandError(
                f"error[usage]: --candidates must list {' and/or '.join(CANDIDATE_SOURCES)}",
                returncode=USAGE_ERROR,
            )
        dims = comma_list(options['embed_dim'])
        if not dims:
            raise CommandError("error[usage]: --embed-dim is empty", returncode=USAGE_ERROR)
        if options['algo'] != 'clems':
            sources = sources[:1]

        with self.domain_errors():
            data = self.load_data(options)
            results = []
            for embed_dim in dims:
                for source in sources:
                    config = ExperimentConfig(
                        dataset=data.name,
                        criterion=options['criterion'],
                        algo=options['algo'],
                        embed_dim=embed_dim,
                        candidates=source,
                        depth_grid=tuple(options['depth_grid']),
                        forest=self.forest_params(options),
                        mds=self.mds_options(options),
                        n_runs=options['runs'],
                        seed=options['seed'],
                        verify_bound=options['verify_bound'],
                        n_jobs=options['jobs'],
                    )
                    results.append(run_experiment(config, data))
            written = write_results(results, options['out'])

        for result in results:
            if not options['no_record']:
                Experiment.record(result)
            self.stdout.write(json.dumps({
                'dataset': result.dataset,
                'algo': result.config.label,
                'criterion': result.config.criterion.value,
                'M': result.M,
                'summary': result.summary,
                'reference': result.reference,
            }, indent=2))
            totals = result.bound_totals
            if totals is not None:
                style = self.style.SUCCESS if totals.violations == 0 else self.style.ERROR
                self.stdout.write(style(
                    f'Decoding bound: {totals.checked} checked, {totals.violations} violations, '
                    f'{totals.skipped} skipped'
                ))
        self.stdout.write(self.style.SUCCESS(f'Wrote {len(written)} result files to {options["out"]}'))
