"""
Predict label vectors for a dataset with a saved model.
"""
from apps.datasets.persistence import load_model

from ._base import ExperimentCommand


class Command(ExperimentCommand):
    help = 'Predict label vectors with a saved model and write them as CSV'

    def add_arguments(self, parser):
        parser.add_argument('--model', required=True, help='Model file written by train')
        self.add_data_arguments(parser)
        parser.add_argument('--out', required=True, help='Path of the predictions CSV to write')

    def handle(self, *args, **options):
        model_path = self.require_path(options['model'], '--model')
        with self.domain_errors():
            model = load_model(model_path)
            data = self.load_data(options)
            preds = model.predict(data.X)
            self.write_label_csv(preds, options['out'], data.label_names)

        self.stdout.write(
            self.style.SUCCESS(f'Wrote {preds.shape[0]} predictions to {options["out"]}')
        )
