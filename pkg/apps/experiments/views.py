"""
Read-only JSON API over recorded experiments.
"""
import logging

from django.contrib.auth.mixins import LoginRequiredMixin
from django.http import JsonResponse
from django.shortcuts import get_object_or_404
from django.views import View

from apps.core.mixins import FilterMixin, PaginationMixin

from .models import Experiment

logger = logging.getLogger(__name__)


class ExperimentListView(LoginRequiredMixin, FilterMixin, PaginationMixin, View):
    """Recorded experiments, newest first, filterable by dataset, algorithm and criterion."""

    filter_fields = ['dataset', 'algo', 'criterion', 'embed_dim']
    search_fields = ['dataset']

    def get(self, request):
        queryset = self.filter_queryset(Experiment.objects.all())
        page_obj = self.paginate_queryset(queryset)
        return JsonResponse({
            'results': [experiment.to_dict() for experiment in page_obj.object_list],
            **self.get_pagination_context(page_obj),
            **self.get_filter_context(),
        })


class ExperimentDetailView(LoginRequiredMixin, View):
    """One experiment with its configuration and per-run rows."""

    def get(self, request, pk: int):
        experiment = get_object_or_404(Experiment.objects.prefetch_related('runs'), pk=pk)
        logger.debug(f"Serving experiment {pk}")
        return JsonResponse(experiment.to_dict(runs=True))
