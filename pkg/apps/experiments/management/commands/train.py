"""
Fit a model on a whole dataset and save it as a model file.
"""
from django.core.management.base import CommandError

from apps.core.mixins import USAGE_ERROR
from apps.datasets.persistence import save_model

from ...harness import ExperimentConfig, fit_model, resolve_embed_dim
from ._base import ExperimentCommand


class Command(ExperimentCommand):
    help = 'Fit CLEMS, PLST or BR on a dataset and save the model file'

    def add_arguments(self, parser):
        self.add_data_arguments(parser)
        self.add_model_arguments(parser)
        parser.add_argument(
            '--embed-dim',
            default='100%',
            help='Embedding dimension M: an integer or a percentage of K'
        )
        parser.add_argument(
            '--depth',
            type=int,
            default=None,
            help='Maximum tree depth (unlimited when omitted)'
        )
        parser.add_argument(
            '--out',
            required=True,
            help='Path of the model file to write'
        )

    def handle(self, *args, **options):
        with self.domain_errors():
            data = self.load_data(options)
            config = ExperimentConfig(
                dataset=data.name,
                criterion=options['criterion'],
                algo=options['algo'],
                embed_dim=options['embed_dim'],
                candidates=options['candidates'],
                forest=self.forest_params(options),
                mds=self.mds_options(options),
                seed=options['seed'],
            )
            if config.candidates != 'train':
                raise CommandError("error[usage]: train only supports --candidates train", returncode=USAGE_ERROR)
            M = resolve_embed_dim(config.embed_dim, data.K)
            model = fit_model(config, data, M, options['depth'], config.seed)
            path = save_model(model, options['out'])

        self.stdout.write(
            self.style.SUCCESS(f'Saved {config.algo} model ({data}, M={M}) to {path}')
        )
