"""
Sequential minimal optimization for the dual of the soft-margin linear SVM, as Numba kernels.

The dual is ``min_a 1/2 a'Qa - sum(a)`` subject to ``y'a = 0`` and ``0 <= a <= C`` where ``Q_ij = y_i y_j x_i.x_j``.
Each iteration picks a maximal-violating pair with second order information and solves the two-variable
subproblem exactly. Samples are CSR rows, kernel rows are computed on demand from the sparse data.
"""
import numpy as np
from numba import jit

__all__ = ["smo_solve"]

TAU = 1e-12


# Linear kernel row: out[t] = x_i . x_t for every sample t. `dense` is a zeroed scratch vector of the feature
# dimension and is zeroed again on return.
@jit(nopython=True, nogil=True)
def _kernel_row(i, data, indices, indptr, dense, out):
    for p in range(indptr[i], indptr[i + 1]):
        dense[indices[p]] = data[p]
    for t in range(out.shape[0]):
        s = 0.0
        for p in range(indptr[t], indptr[t + 1]):
            s += data[p] * dense[indices[p]]
        out[t] = s
    for p in range(indptr[i], indptr[i + 1]):
        dense[indices[p]] = 0.0


@jit(nopython=True, nogil=True)
def _dual_objective(alpha, grad):
    return 0.5 * np.sum(alpha * (grad - 1.0))


@jit(nopython=True, nogil=True)
def _rho(alpha, grad, y, c):
    ub = np.inf
    lb = -np.inf
    n_free = 0
    sum_free = 0.0
    for t in range(y.shape[0]):
        yg = y[t] * grad[t]
        if alpha[t] >= c:
            if y[t] < 0:
                ub = min(ub, yg)
            else:
                lb = max(lb, yg)
        elif alpha[t] <= 0.0:
            if y[t] > 0:
                ub = min(ub, yg)
            else:
                lb = max(lb, yg)
        else:
            n_free += 1
            sum_free += yg
    if n_free > 0:
        return sum_free / n_free
    return (ub + lb) / 2.0


@jit(nopython=True, nogil=True)
def _primal_objective(alpha, grad, y, c):
    # y_t w.x_t = grad_t + 1, so |w|^2 and the hinge losses follow from the gradient alone.
    rho = _rho(alpha, grad, y, c)
    s = 0.0
    hinge = 0.0
    for t in range(y.shape[0]):
        s += alpha[t] * (grad[t] + 1.0)
        hinge += max(0.0, y[t] * rho - grad[t])
    return 0.5 * s + c * hinge


@jit(nopython=True, nogil=True)
def smo_solve(data, indices, indptr, y, n_features, c, tol, max_iter, epoch_length):
    """
    Solve the dual problem for labels ``y`` in {-1, +1}; both labels must occur.

    :return: ``(alpha, rho, iterations, objective, primal, violation)``. The decision function is
        ``sum(alpha*y*K(x_i, x)) - rho``. ``objective`` holds the dual objective after every `epoch_length` iterations
        and at the end, ``primal`` the regularized hinge loss of the hyperplane at the same points, and ``violation``
        is the maximal KKT violation at the last working set selection.
    """
    n = y.shape[0]
    alpha = np.zeros(n)
    grad = -np.ones(n)
    qd = np.empty(n)
    for t in range(n):
        s = 0.0
        for p in range(indptr[t], indptr[t + 1]):
            s += data[p] * data[p]
        qd[t] = s
    dense = np.zeros(n_features)
    ki = np.empty(n)
    kj = np.empty(n)
    trace = np.empty(max_iter // epoch_length + 2)
    primal = np.empty(max_iter // epoch_length + 2)
    n_trace = 0
    gap = 0.0

    it = 0
    while it < max_iter:
        # i maximizes -y_t G_t over the samples that may move up.
        gmax = -np.inf
        i = -1
        for t in range(n):
            if y[t] > 0:
                if alpha[t] < c and -grad[t] >= gmax:
                    gmax = -grad[t]
                    i = t
            else:
                if alpha[t] > 0.0 and grad[t] >= gmax:
                    gmax = grad[t]
                    i = t
        if i == -1:
            gap = 0.0
            break
        _kernel_row(i, data, indices, indptr, dense, ki)

        # j minimizes the second order decrease among the samples that may move down.
        gmax2 = -np.inf
        j = -1
        obj_min = np.inf
        for t in range(n):
            if y[t] > 0:
                if alpha[t] > 0.0:
                    grad_diff = gmax + grad[t]
                    if grad[t] >= gmax2:
                        gmax2 = grad[t]
                else:
                    continue
            else:
                if alpha[t] < c:
                    grad_diff = gmax - grad[t]
                    if -grad[t] >= gmax2:
                        gmax2 = -grad[t]
                else:
                    continue
            if grad_diff > 0.0:
                quad = qd[i] + qd[t] - 2.0 * ki[t]
                if quad <= 0.0:
                    quad = TAU
                obj = -(grad_diff * grad_diff) / quad
                if obj <= obj_min:
                    j = t
                    obj_min = obj
        gap = max(gmax + gmax2, 0.0)
        if gap < tol or j == -1:
            break
        _kernel_row(j, data, indices, indptr, dense, kj)

        old_ai = alpha[i]
        old_aj = alpha[j]
        quad = qd[i] + qd[j] - 2.0 * ki[j]
        if quad <= 0.0:
            quad = TAU
        if y[i] != y[j]:
            delta = (-grad[i] - grad[j]) / quad
            diff = alpha[i] - alpha[j]
            alpha[i] += delta
            alpha[j] += delta
            if diff > 0:
                if alpha[j] < 0:
                    alpha[j] = 0.0
                    alpha[i] = diff
            else:
                if alpha[i] < 0:
                    alpha[i] = 0.0
                    alpha[j] = -diff
            if diff > 0:
                if alpha[i] > c:
                    alpha[i] = c
                    alpha[j] = c - diff
            else:
                if alpha[j] > c:
                    alpha[j] = c
                    alpha[i] = c + diff
        else:
            delta = (grad[i] - grad[j]) / quad
            total = alpha[i] + alpha[j]
            alpha[i] -= delta
            alpha[j] += delta
            if total > c:
                if alpha[i] > c:
                    alpha[i] = c
                    alpha[j] = total - c
            else:
                if alpha[j] < 0:
                    alpha[j] = 0.0
                    alpha[i] = total
            if total > c:
                if alpha[j] > c:
                    alpha[j] = c
                    alpha[i] = total - c
            else:
                if alpha[i] < 0:
                    alpha[i] = 0.0
                    alpha[j] = total

        dai = (alpha[i] - old_ai) * y[i]
        daj = (alpha[j] - old_aj) * y[j]
        for t in range(n):
            grad[t] += y[t] * (ki[t] * dai + kj[t] * daj)

        it += 1
        if it % epoch_length == 0:
            trace[n_trace] = _dual_objective(alpha, grad)
            primal[n_trace] = _primal_objective(alpha, grad, y, c)
            n_trace += 1

    trace[n_trace] = _dual_objective(alpha, grad)
    primal[n_trace] = _primal_objective(alpha, grad, y, c)
    n_trace += 1
    return alpha, _rho(alpha, grad, y, c), it, trace[:n_trace], primal[:n_trace], gap
