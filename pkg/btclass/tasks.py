"""
Simple task parallelism for the embarrassingly parallel parts of training (one task per class pair).

.. code-block:: python

    with Scheduler(4):
        T = TaskSpace("pair")
        for p in range(n_pairs):
            @spawn(T[p])
            def fit():
                return fit_pair(p)
    models = [T[p].task.result for p in range(n_pairs)]

"""
import inspect
import itertools
import logging
from abc import ABCMeta, abstractmethod
from typing import Any, Collection, Dict, Iterable, List, Optional, Tuple

from . import task_runtime
from .task_runtime import Task, TaskCompleted

logger = logging.getLogger(__name__)

__all__ = ["TaskID", "TaskSpace", "spawn", "tasks", "Task"]


class TaskID:
    """
    The name of a task inside a `TaskSpace`, bound to the `Task` object once it is spawned.
    """
    _task: Optional[Task]

    def __init__(self, name: str, id: Tuple):
        self._name = name
        self._id = id
        self._task = None

    @property
    def task(self) -> Task:
        """
        :raises ValueError: if nothing was spawned under this id yet.
        """
        if self._task is None:
            raise ValueError("{} has not been spawned yet".format(self))
        return self._task

    @task.setter
    def task(self, v: Task):
        assert self._task is None, "{} was spawned twice".format(self)
        self._task = v

    @property
    def id(self) -> Tuple:
        return self._id

    @property
    def name(self) -> str:
        return self._name

    @property
    def full_name(self) -> str:
        return "_".join(str(i) for i in (self._name, *self._id))

    def __repr__(self):
        return "TaskID({}, task={})".format(self.full_name, self._task)

    def __str__(self):
        return "<TaskID {}>".format(self.full_name)


class TaskSet(Collection, metaclass=ABCMeta):
    """
    A collection of tasks, usable as a dependency list.
    """

    @property
    @abstractmethod
    def _tasks(self) -> Collection:
        raise NotImplementedError()

    @property
    def _flat_tasks(self) -> Tuple[Task, ...]:
        """
        The members as `Task` objects: nested iterables are flattened and `TaskID` objects resolved.

        :raises TypeError: on anything else.
        """
        flat = []
        for member in self._tasks:
            group = member if isinstance(member, Iterable) else (member,)
            for d in group:
                d = d.task if isinstance(d, TaskID) else d
                if not isinstance(d, Task):
                    raise TypeError("Dependencies must be TaskIDs or Tasks, got {!r}".format(d))
                flat.append(d)
        return tuple(flat)

    def __len__(self) -> int:
        return len(self._tasks)

    def __iter__(self):
        return iter(self._tasks)

    def __contains__(self, x) -> bool:
        return x in self._tasks


class tasks(TaskSet):
    """
    An ad-hoc dependency list, as passed to `spawn`.
    """
    __slots__ = ("args",)

    def __init__(self, *args):
        self.args = args

    @property
    def _tasks(self) -> Collection:
        return self.args

    def __repr__(self):
        return "tasks{}".format(self.args)


def _expand(index) -> List[Any]:
    if isinstance(index, slice):
        return list(range(index.start or 0, index.stop, index.step or 1))
    if isinstance(index, Iterable) and not isinstance(index, str):
        return list(index)
    return [index]


class TaskSpace(TaskSet):
    """
    Task ids indexed by any number of hashable values. Integer dimensions can be sliced, so ``T[0:3, 1]`` is a list
    of three ids. Ids are created on first access.
    """
    _data: Dict[tuple, TaskID]

    def __init__(self, name: str = ""):
        self._name = name
        self._data = {}

    @property
    def _tasks(self):
        return self._data.values()

    def __getitem__(self, index):
        if not isinstance(index, tuple):
            index = (index,)
        ids = [self._data.setdefault(key, TaskID(self._name, key))
               for key in itertools.product(*(_expand(i) for i in index))]
        return ids[0] if len(ids) == 1 else ids

    def results(self) -> Dict[tuple, Any]:
        """
        :return: The results of every task in the space keyed by index, re-raising the first failure.
        """
        return {key: taskid.task.result for key, taskid in self._data.items()}

    def __repr__(self):
        return "TaskSpace({}, {} ids)".format(self._name, len(self._data))


def _run_body(task: Task, body):
    logger.debug("Running %s", task.taskid)
    return TaskCompleted(body())


def _cell(value):
    # A fresh closure cell holding `value`.
    return (lambda: value).__closure__[0]


def _detached(body):
    """
    A copy of `body` whose closure cells hold the current values, so later rebinding of the enclosing variables
    (loop variables in particular) is not observed.
    """
    closure = body.__closure__ and tuple(_cell(c.cell_contents) for c in body.__closure__)
    copy = type(body)(body.__code__, body.__globals__, body.__name__, body.__defaults__, closure)
    copy.__kwdefaults__ = body.__kwdefaults__
    copy.__annotations__ = body.__annotations__
    copy.__doc__ = body.__doc__
    copy.__module__ = body.__module__
    return copy


_anonymous_tasks = itertools.count()


def spawn(taskid: Optional[TaskID] = None, dependencies=()):
    """
    Run the decorated function as a new task of the current scheduler. It may start at once, in parallel with the
    code that follows.

    >>> @spawn(T[1], [T[0]])  # id T[1], runs after T[0]
    ... def t():
    ...     code

    :param taskid: The id of the task in a `TaskSpace`, or None for an anonymous task.
    :param dependencies: Tasks, TaskIDs or iterables of them.
    :raises TypeError: if the function is a generator or coroutine, or a dependency is not a task.

    The closure of the body is captured by value when the task is spawned.
    """
    if taskid is None:
        taskid = TaskID("global", (next(_anonymous_tasks),))

    def decorator(body):
        if inspect.isgeneratorfunction(body) or inspect.iscoroutinefunction(body):
            raise TypeError("Spawned tasks must be normal functions.")
        deps = tasks(*dependencies)._flat_tasks
        task = task_runtime.get_scheduler_context().spawn_task(_run_body, (_detached(body),), deps, taskid)
        logger.debug("Spawned %s", taskid)
        return task

    return decorator
