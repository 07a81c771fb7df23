import asyncio
import logging
from typing import Optional, TypeVar

from minimasmith.errors import ConfigError
from minimasmith.job.base import Job


log = logging.getLogger(__name__)

T = TypeVar("T")


class SequentialJob(Job):
    """
    An implementation of :class:`minimasmith.job.base.Job` which executes the given tasks
    one after another, in the order they were added.

    .. code-block:: python

        job = SequentialJob()
        job.add_task(first_run).add_task(second_run)
        await job.run(None)
        print(job.task_output("first-run"))
    """

    async def run(self, job_input: T):
        """
        Run the tasks sequentially.

        :param job_input: The input shared by the tasks
        :type job_input: T
        """
        for task in self._tasks:
            await task.execute(job_input, self._memory)


class ConcurrentJob(Job):
    """
    An implementation of :class:`minimasmith.job.base.Job` which executes the given tasks concurrently.
    Every task added to an instance of `ConcurrentJob` shares the same input.

    At most ``max_concurrency`` tasks run at the same time; tasks that move
    CPU work to a thread with :func:`asyncio.to_thread` then use that many
    worker threads.

    .. code-block:: python

        job = ConcurrentJob(max_concurrency=4)
        for task in training_runs:
            job.add_task(task)

        await job.run(None)
        outcomes = job.outputs()

    :param max_concurrency: cap on simultaneously running tasks; no cap when `None`.
    :type max_concurrency: int, optional
    :raises ConfigError: if the cap is below 1.
    """

    def __init__(self, max_concurrency: Optional[int] = None) -> None:
        super().__init__()
        if max_concurrency is not None and max_concurrency < 1:
            raise ConfigError(
                "max_concurrency must be at least 1", option="max_concurrency"
            )
        self._max_concurrency = max_concurrency

    async def run(self, job_input: T):
        """
        Run the tasks concurrently.

        :param job_input: The input shared by the tasks
        :type job_input: T
        """
        limit = self._max_concurrency or max(len(self._tasks), 1)
        semaphore = asyncio.Semaphore(limit)
        log.debug(f"running {len(self._tasks)} tasks, at most {limit} at a time")

        async def _bounded(task):
            async with semaphore:
                await task.execute(job_input, self._memory)

        await asyncio.gather(*[_bounded(task) for task in self._tasks])
