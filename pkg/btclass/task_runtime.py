"""
The worker-thread runtime behind `btclass.tasks`.

A `Scheduler` owns a pool of `WorkerThread` objects that pull ready tasks from one shared FIFO queue. A task becomes
ready once all its dependencies are terminal. Only CPU threads exist, there is no placement or resource accounting.
"""
import abc
import logging
import threading
from collections import deque
from typing import Collection, Deque, List, Optional

from .cpu import get_n_cores

logger = logging.getLogger(__name__)

__all__ = ["Task", "TaskState", "TaskRunning", "TaskCompleted", "TaskException", "Scheduler", "SchedulerContext",
           "InvalidSchedulerAccessException", "get_scheduler_context"]


class TaskState(metaclass=abc.ABCMeta):
    __slots__ = []

    @property
    @abc.abstractmethod
    def is_terminal(self) -> bool:
        raise NotImplementedError()


class TaskRunning(TaskState):
    """
    A task that still has a body to run. Returned from a body it acts as a continuation: `func` runs once the new
    `dependencies` are terminal.
    """
    __slots__ = ["func", "args", "dependencies"]

    def __init__(self, func, args, dependencies):
        if dependencies is not None and (
                not isinstance(dependencies, Collection) or not all(isinstance(d, Task) for d in dependencies)):
            raise ValueError("dependencies must be a collection of Tasks")
        self.func = func
        self.args = args
        self.dependencies = dependencies

    @property
    def is_terminal(self):
        return False

    def __repr__(self):
        return "TaskRunning({})".format(getattr(self.func, "__name__", self.func))


class TaskCompleted(TaskState):
    __slots__ = ["ret"]

    def __init__(self, ret):
        self.ret = ret

    @property
    def is_terminal(self):
        return True

    def __repr__(self):
        return "TaskCompleted({})".format(type(self.ret).__name__)


class TaskException(TaskState):
    __slots__ = ["exc"]

    def __init__(self, exc: BaseException):
        self.exc = exc

    @property
    def is_terminal(self):
        return True

    def __repr__(self):
        return "TaskException({!r})".format(self.exc)


class Task:
    """
    A unit of work with a dependency count. The body is called as ``func(task, *args)`` and returns a `TaskState`
    (None means completed without a value).
    """
    _dependees: List["Task"]
    _state: TaskState

    def __init__(self, func, args, dependencies: Collection["Task"], taskid):
        self._mutex = threading.Lock()
        self.taskid = taskid
        self._state = TaskRunning(func, args, None)
        self._dependees = []
        self._remaining_dependencies = 0
        get_scheduler_context().incr_active_tasks()
        with self._mutex:
            self._wait_for(dependencies)
            # Published before the task can be queued so a body may look itself up by id.
            taskid.task = self
            logger.debug("Task %r: created", self)
            self._enqueue_if_ready()

    def _wait_for(self, dependencies):
        self._remaining_dependencies = sum(1 for d in dependencies if d._add_dependee(self))

    def _enqueue_if_ready(self):
        if not self._remaining_dependencies:
            get_scheduler_context().enqueue_task(self)

    def _dependency_done(self):
        with self._mutex:
            self._remaining_dependencies -= 1
            self._enqueue_if_ready()

    def _add_dependee(self, dependee: "Task") -> bool:
        # False if self is already terminal, so the dependee need not wait.
        with self._mutex:
            if self._state.is_terminal:
                return False
            self._dependees.append(dependee)
            return True

    @property
    def done(self) -> bool:
        return self._state.is_terminal

    @property
    def result(self):
        """
        The return value of the task body.

        :raises: the exception raised by the body, if it failed.
        :raises ValueError: if the task has not finished yet.
        """
        if isinstance(self._state, TaskCompleted):
            return self._state.ret
        if isinstance(self._state, TaskException):
            raise self._state.exc
        raise ValueError("Task {} has not completed".format(self.taskid))

    def run(self):
        state = self._state
        assert isinstance(state, TaskRunning)
        try:
            new_state = state.func(self, *state.args) or TaskCompleted(None)
        except Exception as e:
            logger.exception("Exception in task %s", self.taskid)
            new_state = TaskException(e)
        self._set_state(new_state)

    def _set_state(self, new_state: TaskState):
        logger.debug("Task %r: -> %r", self, new_state)
        ctx = get_scheduler_context()
        if isinstance(new_state, TaskRunning):
            with self._mutex:
                self._state = TaskRunning(new_state.func, new_state.args, None)
                self._wait_for(new_state.dependencies or ())
                self._enqueue_if_ready()
            return
        if isinstance(new_state, TaskException):
            ctx.scheduler.report_exception(new_state.exc)
        with self._mutex:
            self._state = new_state
            dependees, self._dependees = self._dependees, []
        for dependee in dependees:
            dependee._dependency_done()
        ctx.decr_active_tasks()

    def __repr__(self):
        return "<Task {} deps={} {}>".format(self.taskid, self._remaining_dependencies, type(self._state).__name__)


class InvalidSchedulerAccessException(RuntimeError):
    pass


class SchedulerContext(metaclass=abc.ABCMeta):
    """
    Where tasks created on the current thread are registered: the `Scheduler` on the thread that entered it, the
    worker itself on a worker thread.
    """

    def spawn_task(self, function, args, deps, taskid) -> Task:
        return Task(function, args, deps, taskid)

    def __enter__(self):
        _scheduler_locals.stack.append(self)
        return self

    def __exit__(self, exc_type, exc_val, exc_tb):
        _scheduler_locals.stack.pop()

    @property
    @abc.abstractmethod
    def scheduler(self) -> "Scheduler":
        raise NotImplementedError()

    def enqueue_task(self, task: Task):
        self.scheduler.enqueue_task(task)

    def incr_active_tasks(self):
        self.scheduler.incr_active_tasks()

    def decr_active_tasks(self):
        self.scheduler.decr_active_tasks()


class _SchedulerLocals(threading.local):
    def __init__(self):
        super().__init__()
        self.stack: List[SchedulerContext] = []


_scheduler_locals = _SchedulerLocals()


def get_scheduler_context() -> SchedulerContext:
    """
    :raises InvalidSchedulerAccessException: outside a `Scheduler` scope and outside a task.
    """
    if not _scheduler_locals.stack:
        raise InvalidSchedulerAccessException("No scheduler is available in this context")
    return _scheduler_locals.stack[-1]


class WorkerThread(threading.Thread, SchedulerContext):
    def __init__(self, scheduler: "Scheduler", index: int):
        super().__init__(name="btclass-worker-{}".format(index), daemon=True)
        self.index = index
        self._scheduler = scheduler
        self.start()

    @property
    def scheduler(self):
        return self._scheduler

    def run(self) -> None:
        try:
            with self:
                while True:
                    task = self._scheduler.next_task()
                    if task is None:
                        break
                    task.run()
        except Exception:
            logger.exception("Unexpected exception in worker %d", self.index)
            self._scheduler.stop()

    def __repr__(self):
        return "<WorkerThread {}>".format(self.index)


class Scheduler(SchedulerContext):
    """
    Run spawned tasks on a pool of worker threads.

    Use as a context manager: tasks spawned inside the ``with`` block (and tasks they spawn) are complete when the
    block exits. The first exception raised by any task is re-raised on exit.

    :param n_threads: The number of worker threads, defaults to the number of physical cores.
    """
    _worker_threads: List[WorkerThread]
    _ready: Deque[Task]

    def __init__(self, n_threads: Optional[int] = None):
        n_threads = get_n_cores() if n_threads is None else n_threads
        if n_threads < 1:
            raise ValueError("A scheduler needs at least one worker thread, got {}".format(n_threads))
        self._monitor = threading.Condition(threading.Lock())
        self._ready = deque()
        self._exceptions = []
        self._should_run = True
        # The scope itself counts as one active task until it exits.
        self._active_task_count = 1
        self._entered = False
        self._worker_threads = [WorkerThread(self, i) for i in range(n_threads)]
        logger.debug("Scheduler started with %d worker threads", n_threads)

    @property
    def scheduler(self):
        return self

    @property
    def n_threads(self) -> int:
        return len(self._worker_threads)

    def __enter__(self):
        if self._entered:
            raise InvalidSchedulerAccessException("Schedulers can only have a single scope.")
        self._entered = True
        return super().__enter__()

    def __exit__(self, exc_type, exc_val, exc_tb):
        super().__exit__(exc_type, exc_val, exc_tb)
        self.decr_active_tasks()
        with self._monitor:
            while self._should_run:
                self._monitor.wait()
        for w in self._worker_threads:
            w.join()
        if self._exceptions and exc_type is None:
            raise self._exceptions[0]

    def incr_active_tasks(self):
        with self._monitor:
            self._active_task_count += 1

    def decr_active_tasks(self):
        with self._monitor:
            self._active_task_count -= 1
            if self._active_task_count == 0:
                self._stop_locked()

    def enqueue_task(self, task: Task):
        with self._monitor:
            self._ready.append(task)
            self._monitor.notify()

    def next_task(self) -> Optional[Task]:
        """
        Block until a task is ready; None once the scheduler has stopped.
        """
        with self._monitor:
            while self._should_run:
                if self._ready:
                    return self._ready.popleft()
                self._monitor.wait()
            return None

    def _stop_locked(self):
        self._should_run = False
        self._monitor.notify_all()

    def stop(self):
        with self._monitor:
            self._stop_locked()

    def report_exception(self, e: BaseException):
        with self._monitor:
            self._exceptions.append(e)
