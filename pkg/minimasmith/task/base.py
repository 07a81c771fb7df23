import asyncio
import logging
import time
from abc import ABC, abstractmethod
from typing import Generic, TypeVar

from minimasmith.errors import ConfigError
from minimasmith.task.models import TaskInput, TaskOutput


log = logging.getLogger(__name__)

T = TypeVar("T")
U = TypeVar("U")


class Task(Generic[T, U], ABC):
    """
    Base class for all tasks. A task is one independent unit of work in a
    job, such as a single training run of a scenario. Subclasses implement
    :meth:`execute`.

    :param name: unique name of the task within its job; must be non-empty.
    :type name: str
    :raises ConfigError: if the name is empty or blank.
    """

    def __init__(self, name: str) -> None:
        if not name or not name.strip():
            raise ConfigError(
                "A task should have a non-empty value for name", option="name"
            )

        self._name = name

    @abstractmethod
    async def execute(self, task_input: TaskInput[T]) -> TaskOutput[U]:
        """
        Runs the task.

        :param task_input: The input to the task.
        :type task_input: TaskInput[T]
        :returns: The output of the task.
        :rtype: TaskOutput[U]
        """
        pass

    def name(self) -> str:
        return self._name


class ThreadedTask(Task[T, U]):
    """
    A task whose work is a blocking, CPU-bound call. :meth:`compute` runs on a
    worker thread through :func:`asyncio.to_thread`, so the event loop of a
    :class:`minimasmith.job.job.ConcurrentJob` stays free to start the next
    task. numpy releases the GIL inside its kernels, which lets independent
    runs overlap.

    The output carries the wall-clock time of :meth:`compute`.
    """

    @abstractmethod
    def compute(self, content: T) -> U:
        """
        The blocking work of the task.

        :param content: the task input content.
        :type content: T
        :rtype: U
        """
        pass

    async def execute(self, task_input: TaskInput[T]) -> TaskOutput[U]:
        started = time.perf_counter()
        result = await asyncio.to_thread(self.compute, task_input.content)
        elapsed = time.perf_counter() - started
        log.debug(f"task {self.name()} finished in {elapsed:.2f}s")

        return TaskOutput(content=result, elapsed_s=elapsed)
