from affect.exceptions import ContractError
from affect.management.pipeline_command import PipelineCommand
from affect.services.pipeline import load_reports
from affect.services.significance import pair_by_seed, significance_test

DEFAULT_METRICS = ('sentiment.macro_f1', 'emotion.micro.f1')


class Command(PipelineCommand):
    help = "Paired t-test between two groups of runs matched by seed"

    def add_command_arguments(self, parser):
        parser.add_argument('--group-a', nargs='+', required=True, help="Прогони системи A")
        parser.add_argument('--group-b', nargs='+', required=True, help="Прогони системи B")
        parser.add_argument('--metric', action='append', help="Ключ метрики (можна кілька разів)")
        parser.add_argument('--alpha', type=float, default=0.05)

    def run(self, *args, **options):
        group_a = load_reports(options['group_a'])
        group_b = load_reports(options['group_b'])
        metrics = options.get('metric') or [
            key for key in DEFAULT_METRICS
            if all(_has(report, key) for report in group_a + group_b)
        ]
        if not metrics:
            self.usage_error("Немає спільних метрик для порівняння; задайте --metric")

        for key in metrics:
            try:
                pairs = pair_by_seed({r.seed: r.value(key) for r in group_a}, {r.seed: r.value(key) for r in group_b})
                result = significance_test(pairs, key)
            except ContractError as e:
                self.usage_error(str(e))
            verdict = 'significant' if result.is_significant(options['alpha']) else 'not significant'
            flag = ' [degenerate variance]' if result.degenerate else ''
            self.stdout.write(f"{key}: n={result.sample_size} mean diff={result.mean_difference:+.6f} "
                              f"t={result.t_statistic:.6f} p={result.p_value:.6g} ({verdict}){flag}")


def _has(report, key):
    try:
        report.value(key)
    except ContractError:
        return False
    return True
