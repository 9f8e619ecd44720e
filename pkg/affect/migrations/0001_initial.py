import django.db.models.deletion
from django.db import migrations, models


class Migration(migrations.Migration):

    initial = True

    dependencies = []

    operations = [
        migrations.CreateModel(
            name='TrainingRun',
            fields=[
                ('id', models.BigAutoField(auto_created=True, primary_key=True, serialize=False, verbose_name='ID')),
                ('mode', models.CharField(choices=[('S1', 'S1'), ('S2', 'S2'), ('E1', 'E1'), ('E2', 'E2'), ('M1', 'M1'), ('M2', 'M2')], max_length=2)),
                ('seed', models.PositiveIntegerField()),
                ('config', models.JSONField(default=dict)),
                ('out_dir', models.CharField(blank=True, max_length=500)),
                ('status', models.CharField(choices=[('running', 'Running'), ('completed', 'Completed'), ('failed', 'Failed')], default='running', max_length=20)),
                ('epochs_completed', models.PositiveIntegerField(default=0)),
                ('final_loss', models.FloatField(blank=True, null=True)),
                ('created_at', models.DateTimeField(auto_now_add=True)),
                ('finished_at', models.DateTimeField(blank=True, null=True)),
            ],
            options={
                'ordering': ['-created_at', '-id'],
            },
        ),
        migrations.CreateModel(
            name='EpochLog',
            fields=[
                ('id', models.BigAutoField(auto_created=True, primary_key=True, serialize=False, verbose_name='ID')),
                ('epoch', models.PositiveIntegerField()),
                ('mean_loss', models.FloatField()),
                ('examples', models.PositiveIntegerField(default=0)),
                ('run', models.ForeignKey(on_delete=django.db.models.deletion.CASCADE, related_name='epochs', to='affect.trainingrun')),
            ],
            options={
                'ordering': ['run', 'epoch'],
                'constraints': [models.UniqueConstraint(fields=('run', 'epoch'), name='unique_epoch_per_run')],
            },
        ),
        migrations.CreateModel(
            name='RunMetric',
            fields=[
                ('id', models.BigAutoField(auto_created=True, primary_key=True, serialize=False, verbose_name='ID')),
                ('key', models.CharField(max_length=100)),
                ('value', models.FloatField()),
                ('run', models.ForeignKey(on_delete=django.db.models.deletion.CASCADE, related_name='metrics', to='affect.trainingrun')),
            ],
            options={
                'ordering': ['run', 'key'],
                'constraints': [models.UniqueConstraint(fields=('run', 'key'), name='unique_metric_per_run')],
            },
        ),
    ]
