"""
Score a predictions CSV against the labels of a dataset.
"""
import json

from apps.core.costs import REPORTED_CRITERIA

from ...harness import evaluate
from ._base import ExperimentCommand


class Command(ExperimentCommand):
    help = 'Evaluate predictions against ground truth and print the metrics as JSON'

    def add_arguments(self, parser):
        parser.add_argument('--predictions', required=True, help='Predictions CSV written by predict')
        self.add_data_arguments(parser)
        parser.add_argument('--out', help='Write the metrics JSON here instead of stdout')

    def handle(self, *args, **options):
        predictions_path = self.require_path(options['predictions'], '--predictions')
        with self.domain_errors():
            data = self.load_data(options)
            preds = self.read_label_csv(predictions_path)
            metrics = {
                criterion.value: evaluate(data.Y, preds, criterion)
                for criterion in REPORTED_CRITERIA
            }

        document = {'dataset': data.name, 'n': data.N, 'metrics': metrics}
        self.write_json(json.dumps(document, indent=2), options.get('out'))
