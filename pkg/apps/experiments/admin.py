from django.contrib import admin

from .models import Experiment, ExperimentRun


class ExperimentRunInline(admin.TabularInline):
    model = ExperimentRun
    extra = 0
    fields = ('run', 'seed', 'depth', 'metrics', 'candidate_count', 'stress', 'wall_time_ms')
    readonly_fields = fields
    can_delete = False


@admin.register(Experiment)
class ExperimentAdmin(admin.ModelAdmin):
    list_display = ('dataset', 'algo', 'criterion', 'embed_dim', 'n_runs', 'seed', 'created_at')
    list_filter = ('algo', 'criterion', 'dataset')
    search_fields = ('dataset',)
    readonly_fields = ('created_at', 'updated_at')
    inlines = [ExperimentRunInline]


@admin.register(ExperimentRun)
class ExperimentRunAdmin(admin.ModelAdmin):
    list_display = ('experiment', 'run', 'depth', 'seed', 'wall_time_ms')
    list_filter = ('experiment__dataset', 'experiment__algo')
    readonly_fields = ('created_at', 'updated_at')
