import logging

from celery import shared_task

from .ci import harness_batch
from .exceptions import DibiError
from .frames import frame_check
from .serializers import build_category

logger = logging.getLogger(__name__)


@shared_task
def run_frame_condition(instance, condition, seed, trials):
    """
    Run the randomized trials of one frame condition on one instance.

    Each trial seeds its own generator from ``seed``, the condition and the
    trial index, so the report does not depend on which worker runs it.

    Args:
        instance (str | dict): Instance name (finstoch, finrel, gauss or synvar),
            or the header of a kernel file whose category every trial uses.
        condition (str): Frame-condition id.
        seed (int): Seed shared by the whole suite.
        trials (int): Number of trials.

    Returns:
        dict: The condition report, or a failure record when the run raised.
    """
    try:
        category = build_category(instance) if isinstance(instance, dict) else instance
        return frame_check(condition, category, seed, trials)
    except DibiError as e:
        logger.warning("frame condition %s on %s failed: %s", condition, instance, e)
        return failure_record(e, condition=condition, instance=instance, seed=seed, trials=trials)


@shared_task
def run_harness_batch(seed, start, count, instance='finstoch'):
    """
    Run harness trials ``start`` to ``start + count - 1`` on one instance.

    Returns:
        dict: The batch tally, or a failure record when the run raised.
    """
    try:
        return harness_batch(seed, start, count, instance)
    except DibiError as e:
        logger.warning("harness batch %s %d+%d failed: %s", instance, start, count, e)
        return failure_record(e, seed=seed, instance=instance, start=start, count=count)


def failure_record(error, **context):
    return {**context, 'ok': False, 'error': type(error).__name__, 'code': error.code, 'message': str(error)}
