"""
Парний двосторонній t-тест для порівняння двох систем по seed-ах.
"""
import logging
import math
from dataclasses import dataclass
from typing import Mapping, Sequence, Tuple

import numpy as np
from scipy import stats

from affect.exceptions import ContractError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SignificanceResult:
    metric: str
    sample_size: int
    t_statistic: float
    p_value: float
    pairs: Tuple[Tuple[float, float], ...]
    degenerate: bool = False

    @property
    def mean_difference(self) -> float:
        return float(np.mean([a - b for a, b in self.pairs]))

    def is_significant(self, alpha: float = 0.05) -> bool:
        return self.p_value < alpha


def significance_test(metric_pairs: Sequence[Tuple[float, float]], metric: str = 'metric') -> SignificanceResult:
    """
    metric_pairs: (run_a, run_b) для кожного seed.
    Нульова дисперсія різниць: t = 0, p = 1 для однакових значень,
    інакше t = ±inf, p = 0 з прапорцем degenerate.
    """
    pairs = tuple((float(a), float(b)) for a, b in metric_pairs)
    if len(pairs) < 2:
        raise ContractError(f"significance_test потребує щонайменше 2 пари, отримано {len(pairs)}")
    run_a = np.array([a for a, _ in pairs])
    run_b = np.array([b for _, b in pairs])
    differences = run_a - run_b

    if np.ptp(differences) == 0.0:
        if differences[0] == 0.0:
            result = SignificanceResult(metric, len(pairs), 0.0, 1.0, pairs, degenerate=True)
        else:
            result = SignificanceResult(metric, len(pairs), math.copysign(math.inf, differences[0]), 0.0,
                                        pairs, degenerate=True)
        logger.warning("Zero variance of paired differences for %s", metric)
        return result

    t_statistic, p_value = stats.ttest_rel(run_a, run_b)
    return SignificanceResult(metric, len(pairs), float(t_statistic), float(min(max(p_value, 0.0), 1.0)), pairs)


def pair_by_seed(group_a: Mapping[int, float], group_b: Mapping[int, float]) -> Sequence[Tuple[float, float]]:
    """Пари значень для seed-ів, присутніх в обох групах, у порядку зростання seed"""
    common = sorted(set(group_a) & set(group_b))
    missing = sorted(set(group_a) ^ set(group_b))
    if missing:
        logger.warning("Seeds without a pair are ignored: %s", missing)
    return [(group_a[seed], group_b[seed]) for seed in common]
