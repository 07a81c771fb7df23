import threading
import unittest

import pytest

from minimasmith.errors import ConfigError
from minimasmith.task.base import ThreadedTask
from minimasmith.task.models import TaskInput


class _SquareTask(ThreadedTask[int, int]):
    def __init__(self, name: str) -> None:
        super().__init__(name)
        self.thread = None

    def compute(self, content: int) -> int:
        self.thread = threading.get_ident()
        return content * content


class ThreadedTaskTest(unittest.IsolatedAsyncioTestCase):
    async def test_runs_off_the_event_loop(self):
        task = _SquareTask("square")
        output = await task.execute(TaskInput(7))

        assert output.content == 49
        assert output.elapsed_s >= 0.0
        assert task.thread != threading.get_ident()
        assert task.name() == "square"

    def test_blank_name(self):
        with pytest.raises(ConfigError) as err:
            _SquareTask("")
        assert err.value.option == "name"
