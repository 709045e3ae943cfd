"""
Write the coordinates of a fitted embedding as CSV.
"""
from django.core.management.base import CommandError

from apps.core.mixins import USAGE_ERROR
from apps.datasets.persistence import load_model
from apps.embedding.clems import ClemsModel

from ._base import ExperimentCommand


class Command(ExperimentCommand):
    help = 'Dump the truth-role and prediction-role coordinates of a CLEMS model'

    def add_arguments(self, parser):
        parser.add_argument('--model', required=True, help='CLEMS model file written by train')
        parser.add_argument('--out', required=True, help='Path of the CSV to write')

    def handle(self, *args, **options):
        model_path = self.require_path(options['model'], '--model')
        with self.domain_errors():
            model = load_model(model_path)
            if not isinstance(model, ClemsModel):
                raise CommandError(
                    f"error[usage]: {model_path} holds a {type(model).__name__}, not a CLEMS model",
                    returncode=USAGE_ERROR,
                )
            frame = model.embedding.to_frame()
            frame.insert(3, 'labels', [
                ''.join(str(b) for b in model.embedding.candidates.labels[i])
                for i in frame['candidate_index']
            ])
            frame.to_csv(options['out'], index=False)

        self.stdout.write(
            self.style.SUCCESS(
                f'Wrote {model.embedding.L} candidates x 2 roles (M={model.embedding.M}) to {options["out"]}'
            )
        )
