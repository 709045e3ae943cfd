"""
Experiment records.

An ``Experiment`` stores one configuration (dataset, algorithm, target
criterion, M) with its aggregate test metrics; ``ExperimentRun`` stores the
per-run seeds, selected depth, metrics and timing.
"""
from __future__ import annotations

import logging

from django.core.exceptions import ValidationError
from django.core.validators import MinValueValidator
from django.db import models, transaction

from apps.core.costs import Criterion
from apps.core.models import TimestampedModel

logger = logging.getLogger(__name__)


class Experiment(TimestampedModel):
    """One experiment configuration and its aggregate results."""

    ALGORITHM_CHOICES = [
        ('clems', 'CLEMS'),
        ('clems-all', 'CLEMS (all candidates)'),
        ('plst', 'PLST'),
        ('br', 'Binary relevance'),
    ]

    dataset = models.CharField(
        max_length=100,
        db_index=True,
        help_text="Dataset name",
    )
    algo = models.CharField(
        max_length=20,
        choices=ALGORITHM_CHOICES,
        help_text="Algorithm as reported",
    )
    criterion = models.CharField(
        max_length=20,
        choices=Criterion.choices,
        help_text="Target criterion used for depth selection",
    )
    embed_dim = models.PositiveIntegerField(
        validators=[MinValueValidator(1)],
        help_text="Resolved embedding dimension M",
    )
    n_runs = models.PositiveIntegerField(validators=[MinValueValidator(1)])
    seed = models.BigIntegerField(help_text="Master seed")
    config = models.JSONField(default=dict, blank=True, help_text="Full experiment configuration")
    summary = models.JSONField(default=dict, blank=True, help_text="Per-criterion mean, std and 95% CI half-width")
    reference = models.JSONField(default=dict, blank=True, help_text="Published reference numbers")
    bound_checked = models.PositiveIntegerField(default=0)
    bound_violations = models.PositiveIntegerField(default=0)
    wall_time_ms = models.FloatField(default=0.0)

    class Meta:
        ordering = ['-created_at']
        indexes = [
            models.Index(fields=['dataset', 'algo', 'criterion'], name='experiment_lookup_idx'),
        ]
        verbose_name = "Experiment"
        verbose_name_plural = "Experiments"

    def __str__(self) -> str:
        return f"{self.dataset} {self.algo} {self.criterion} M={self.embed_dim}"

    def clean(self) -> None:
        super().clean()
        if self.bound_violations > self.bound_checked:
            raise ValidationError({
                'bound_violations': 'Violations cannot exceed the number of checked predictions.'
            })

    def save(self, *args, **kwargs) -> None:
        self.full_clean()
        super().save(*args, **kwargs)

    def mean(self, criterion) -> float | None:
        entry = self.summary.get(Criterion(criterion).value)
        return entry['mean'] if entry else None

    @classmethod
    def record(cls, result) -> Experiment:
        """Persist an experiment result with one row per run."""
        totals = result.bound_totals
        with transaction.atomic():
            experiment = cls.objects.create(
                dataset=result.dataset,
                algo=result.config.label,
                criterion=result.config.criterion.value,
                embed_dim=result.M,
                n_runs=len(result.runs),
                seed=result.config.seed,
                config=result.config.to_dict(),
                summary=result.summary,
                reference=result.reference,
                bound_checked=totals.checked if totals else 0,
                bound_violations=totals.violations if totals else 0,
                wall_time_ms=result.wall_time_ms,
            )
            ExperimentRun.objects.bulk_create([
                ExperimentRun(
                    experiment=experiment,
                    run=run.run,
                    seed=run.seed,
                    depth=run.depth,
                    metrics=run.metrics,
                    validation={str(k): v for k, v in run.validation.items()},
                    candidate_count=run.candidate_count,
                    stress=run.stress,
                    bound=run.bound.to_dict() if run.bound else None,
                    wall_time_ms=run.wall_time_ms,
                )
                for run in result.runs
            ])
        logger.info(f"Recorded experiment {experiment.pk}: {experiment}")
        return experiment

    def to_dict(self, runs: bool = False) -> dict:
        data = {
            'id': self.pk,
            'dataset': self.dataset,
            'algo': self.algo,
            'criterion': self.criterion,
            'M': self.embed_dim,
            'n_runs': self.n_runs,
            'seed': self.seed,
            'summary': self.summary,
            'reference': self.reference,
            'bound': {'checked': self.bound_checked, 'violations': self.bound_violations},
            'wall_time_ms': self.wall_time_ms,
            'created_at': self.created_at.isoformat() if self.created_at else None,
        }
        if runs:
            data['config'] = self.config
            data['runs'] = [run.to_dict() for run in self.runs.all()]
        return data


class ExperimentRun(TimestampedModel):
    """One split of an experiment."""

    experiment = models.ForeignKey(
        Experiment,
        on_delete=models.CASCADE,
        related_name='runs',
    )
    run = models.PositiveIntegerField()
    seed = models.BigIntegerField()
    depth = models.PositiveIntegerField(help_text="Selected tree depth")
    metrics = models.JSONField(default=dict)
    validation = models.JSONField(default=dict, help_text="Validation value per tried depth")
    candidate_count = models.PositiveIntegerField(null=True, blank=True)
    stress = models.FloatField(null=True, blank=True)
    bound = models.JSONField(null=True, blank=True)
    wall_time_ms = models.FloatField(default=0.0)

    class Meta:
        ordering = ['experiment', 'run']
        constraints = [
            models.UniqueConstraint(fields=['experiment', 'run'], name='unique_run_per_experiment'),
        ]
        verbose_name = "Experiment run"
        verbose_name_plural = "Experiment runs"

    def __str__(self) -> str:
        return f"{self.experiment} run {self.run}"

    def to_dict(self) -> dict:
        return {
            'run': self.run,
            'seed': self.seed,
            'depth': self.depth,
            'metrics': self.metrics,
            'validation': self.validation,
            'candidate_count': self.candidate_count,
            'stress': self.stress,
            'bound': self.bound,
            'wall_time_ms': self.wall_time_ms,
        }
