# Generated by Django 5.0.9 on 2026-10-17 09:12

import django.core.validators
import django.db.models.deletion
from django.db import migrations, models


class Migration(migrations.Migration):

    initial = True

    dependencies = []

    operations = [
        migrations.CreateModel(
            name='Experiment',
            fields=[
                ('id', models.BigAutoField(auto_created=True, primary_key=True, serialize=False, verbose_name='ID')),
                ('created_at', models.DateTimeField(auto_now_add=True, help_text='Timestamp when the record was created')),
                ('updated_at', models.DateTimeField(auto_now=True, help_text='Timestamp when the record was last updated')),
                ('dataset', models.CharField(db_index=True, help_text='Dataset name', max_length=100)),
                ('algo', models.CharField(choices=[('clems', 'CLEMS'), ('clems-all', 'CLEMS (all candidates)'), ('plst', 'PLST'), ('br', 'Binary relevance')], help_text='Algorithm as reported', max_length=20)),
                ('criterion', models.CharField(choices=[('hamming', 'Hamming loss'), ('f1', 'F1 score'), ('accuracy', 'Accuracy score'), ('rank_loss', 'Rank loss')], help_text='Target criterion used for depth selection', max_length=20)),
                ('embed_dim', models.PositiveIntegerField(help_text='Resolved embedding dimension M', validators=[django.core.validators.MinValueValidator(1)])),
                ('n_runs', models.PositiveIntegerField(validators=[django.core.validators.MinValueValidator(1)])),
                ('seed', models.BigIntegerField(help_text='Master seed')),
                ('config', models.JSONField(blank=True, default=dict, help_text='Full experiment configuration')),
                ('summary', models.JSONField(blank=True, default=dict, help_text='Per-criterion mean, std and 95% CI half-width')),
                ('reference', models.JSONField(blank=True, default=dict, help_text='Published reference numbers')),
                ('bound_checked', models.PositiveIntegerField(default=0)),
                ('bound_violations', models.PositiveIntegerField(default=0)),
                ('wall_time_ms', models.FloatField(default=0.0)),
            ],
            options={
                'verbose_name': 'Experiment',
                'verbose_name_plural': 'Experiments',
                'ordering': ['-created_at'],
                'indexes': [models.Index(fields=['dataset', 'algo', 'criterion'], name='experiment_lookup_idx')],
            },
        ),
        migrations.CreateModel(
            name='ExperimentRun',
            fields=[
                ('id', models.BigAutoField(auto_created=True, primary_key=True, serialize=False, verbose_name='ID')),
                ('created_at', models.DateTimeField(auto_now_add=True, help_text='Timestamp when the record was created')),
                ('updated_at', models.DateTimeField(auto_now=True, help_text='Timestamp when the record was last updated')),
                ('run', models.PositiveIntegerField()),
                ('seed', models.BigIntegerField()),
                ('depth', models.PositiveIntegerField(help_text='Selected tree depth')),
                ('metrics', models.JSONField(default=dict)),
                ('validation', models.JSONField(default=dict, help_text='Validation value per tried depth')),
                ('candidate_count', models.PositiveIntegerField(blank=True, null=True)),
                ('stress', models.FloatField(blank=True, null=True)),
                ('bound', models.JSONField(blank=True, null=True)),
                ('wall_time_ms', models.FloatField(default=0.0)),
                ('experiment', models.ForeignKey(on_delete=django.db.models.deletion.CASCADE, related_name='runs', to='experiments.experiment')),
            ],
            options={
                'verbose_name': 'Experiment run',
                'verbose_name_plural': 'Experiment runs',
                'ordering': ['experiment', 'run'],
                'constraints': [models.UniqueConstraint(fields=('experiment', 'run'), name='unique_run_per_experiment')],
            },
        ),
    ]
