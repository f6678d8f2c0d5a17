#!/usr/bin/env python
# coding: utf8

"""
Linear feasibility problems over box bounded variables and the embedded
two-phase simplex solving them.

The solver works on the bounded-variable form of a system:

```
G x + s = -g        one slack s >= 0 per inequality row
E x     = e         equality rows
lo <= x <= hi
```

Box bounds never become rows: every nonbasic variable sits on one of its
bounds and the ratio test lets the entering variable flip to its other
bound. Pixels start on their lower bound, the slack of a row satisfied
there starts basic and the remaining rows get an artificial variable.
Phase 1 minimizes the sum of artificials, phase 2 (only when an objective
is given) minimizes the objective. Entering and leaving variables follow
Bland's smallest index rule, which rules out cycling.
"""

import logging

import numpy as np

from .errors import IterationLimit, DimensionMismatch, InexactSolution

LOGGER = logging.getLogger(__name__)

FEASIBILITY_TOLERANCE = 1e-9
PIVOT_TOLERANCE = 1e-11
COST_TOLERANCE = 1e-10


class ConstraintSystem(object):
    """Linear inequalities ``a . x + c <= 0``, equalities ``a . x = v`` and
    box bounds ``lo <= x <= hi`` within [0, 1].
    """

    def __init__(self, lower, upper):
        """Default constructor.

        Parameters
        ----------
        lower:
            Lower bound per variable.
        upper:
            Upper bound per variable.

        Raises
        ------
        ValueError
            If a bound breaks ``0 <= lo <= hi <= 1``.
        """
        self.lower = np.array(lower, dtype=np.float64, ndmin=1)
        self.upper = np.array(upper, dtype=np.float64, ndmin=1)
        if self.lower.shape != self.upper.shape:
            raise DimensionMismatch('Lower and upper bounds differ in length')
        if (self.lower < 0).any() or (self.upper > 1).any() \
                or (self.lower > self.upper).any():
            raise ValueError('Bounds shall satisfy 0 <= lo <= hi <= 1')
        self._rows = []
        self._constants = []
        self._equalities = []
        self._values = []
        self.objective = None

    @property
    def size(self):
        """Number of variables."""
        return self.lower.size

    def _check(self, coefficients):
        coefficients = np.array(coefficients, dtype=np.float64, ndmin=2)
        if coefficients.shape[1] != self.size:
            raise DimensionMismatch('Row of %d coefficients for %d variables'
                                    % (coefficients.shape[1], self.size))
        return coefficients

    def add_inequality(self, coefficients, constant):
        """Add the row ``coefficients . x + constant <= 0``."""
        self.add_inequalities(np.atleast_2d(coefficients), [constant])

    def add_inequalities(self, matrix, constants):
        """Add several rows ``matrix . x + constants <= 0`` at once."""
        matrix = self._check(matrix)
        constants = np.array(constants, dtype=np.float64, ndmin=1)
        if constants.shape != (matrix.shape[0],):
            raise DimensionMismatch('%d constants for %d rows'
                                    % (constants.size, matrix.shape[0]))
        self._rows.append(matrix)
        self._constants.append(constants)

    def add_equality(self, coefficients, value):
        """Add the row ``coefficients . x = value``."""
        self._equalities.append(self._check(coefficients))
        self._values.append(np.array([value], dtype=np.float64))

    def set_objective(self, coefficients):
        """Minimize ``coefficients . x`` among feasible points."""
        self.objective = self._check(coefficients)[0]

    @property
    def rows(self):
        if not self._rows:
            return np.zeros((0, self.size))
        return np.concatenate(self._rows)

    @property
    def constants(self):
        if not self._constants:
            return np.zeros(0)
        return np.concatenate(self._constants)

    @property
    def equality_rows(self):
        if not self._equalities:
            return np.zeros((0, self.size))
        return np.concatenate(self._equalities)

    @property
    def equality_values(self):
        if not self._values:
            return np.zeros(0)
        return np.concatenate(self._values)

    @property
    def inequality_count(self):
        return sum(rows.shape[0] for rows in self._rows)

    def violation(self, x):
        """Largest violation of a row, an equality or a bound by ``x``."""
        x = np.asarray(x, dtype=np.float64)
        worst = [0.0,
                 float(np.max(self.lower - x, initial=0.0)),
                 float(np.max(x - self.upper, initial=0.0))]
        if self.inequality_count:
            worst.append(float(np.max(self.rows.dot(x) + self.constants)))
        if self._equalities:
            worst.append(float(np.max(np.abs(
                self.equality_rows.dot(x) - self.equality_values))))
        return max(worst)

    def is_satisfied(self, x, tolerance=FEASIBILITY_TOLERANCE):
        """Whether ``x`` meets every bound exactly and every row within
        ``tolerance``."""
        x = np.asarray(x, dtype=np.float64)
        if (x < self.lower).any() or (x > self.upper).any():
            return False
        return self.violation(x) <= tolerance


class SolveOutcome(object):
    """Either ``Feasible(pixels)`` or ``Infeasible``."""

    FEASIBLE = 'feasible'
    INFEASIBLE = 'infeasible'

    def __init__(self, status, pixels=None, iterations=0):
        self.status = status
        self.pixels = pixels
        self.iterations = iterations

    @classmethod
    def feasible(cls, pixels, iterations=0):
        return cls(cls.FEASIBLE, np.asarray(pixels, dtype=np.float64), iterations)

    @classmethod
    def infeasible(cls, iterations=0):
        return cls(cls.INFEASIBLE, None, iterations)

    @property
    def is_feasible(self):
        return self.status == self.FEASIBLE

    def __repr__(self):
        return 'SolveOutcome(%s, %d iterations)' % (self.status, self.iterations)


class _Tableau(object):
    """Dense ``B^-1 A`` of the bounded-variable form, nonbasic variables
    sitting exactly on one of their bounds."""

    def __init__(self, matrix, values, basis, lower, upper):
        self.matrix = matrix
        self.values = values
        self.basis = basis
        self.lower = lower
        self.upper = upper
        self.basic = np.zeros(matrix.shape[1], dtype=bool)
        self.basic[basis] = True
        self.reduced = np.zeros(matrix.shape[1])

    def price(self, costs):
        self.reduced = costs - costs[self.basis].dot(self.matrix)

    def entering(self, columns):
        """Smallest improving column among the first ``columns`` and the
        direction (+1 up, -1 down) it moves in, ``(None, 0)`` at optimum."""
        reduced = self.reduced[:columns]
        values = self.values[:columns]
        nonbasic = ~self.basic[:columns]
        up = nonbasic & (reduced < -COST_TOLERANCE) & (values < self.upper[:columns])
        down = nonbasic & (reduced > COST_TOLERANCE) & (values > self.lower[:columns])
        candidates = np.flatnonzero(up | down)
        if candidates.size == 0:
            return None, 0
        column = int(candidates[0])
        return column, (1.0 if up[column] else -1.0)

    def step(self, column, direction):
        """Move ``column`` until it reaches its other bound (a flip) or a
        basic variable reaches one of its bounds (a pivot)."""
        alpha = direction * self.matrix[:, column]
        current = self.values[self.basis]
        lower = self.lower[self.basis]
        upper = self.upper[self.basis]
        limits = np.full(alpha.size, np.inf)
        falling = alpha > PIVOT_TOLERANCE
        rising = alpha < -PIVOT_TOLERANCE
        limits[falling] = (current[falling] - lower[falling]) / alpha[falling]
        limits[rising] = (upper[rising] - current[rising]) / -alpha[rising]
        limits = np.maximum(limits, 0.0)
        best = limits.min(initial=np.inf)
        span = self.upper[column] - self.lower[column]
        if span <= best:
            if np.isinf(span):
                raise RuntimeError('Unbounded direction in a bounded system')
            self.values[self.basis] = current - span * alpha
            self.values[column] = (self.upper[column] if direction > 0
                                   else self.lower[column])
            return
        ties = np.flatnonzero(limits <= best + PIVOT_TOLERANCE * max(1.0, best))
        row = int(ties[np.argmin(self.basis[ties])])
        leaving = self.basis[row]
        bound = lower[row] if alpha[row] > 0 else upper[row]
        self.values[self.basis] = current - best * alpha
        self.values[column] += direction * best
        self.pivot(row, column)
        self.values[leaving] = bound

    def pivot(self, row, column):
        pivot_row = self.matrix[row] / self.matrix[row, column]
        touched = np.flatnonzero(self.matrix[:, column])
        self.matrix[touched] -= np.outer(self.matrix[touched, column], pivot_row)
        self.matrix[row] = pivot_row
        self.reduced -= self.reduced[column] * pivot_row
        self.basic[self.basis[row]] = False
        self.basic[column] = True
        self.basis[row] = column


class SimplexSolver(object):
    """Dense tableau two-phase bounded-variable simplex with Bland's rule."""

    def __init__(self, max_iterations=500000, tolerance=FEASIBILITY_TOLERANCE):
        """Default constructor.

        Parameters
        ----------
        max_iterations:
            Budget of pivots and bound flips over both phases.
        tolerance:
            Phase 1 objective below which the system is declared feasible,
            also the largest row violation of a returned point.
        """
        self.max_iterations = max_iterations
        self.tolerance = tolerance
        self.iterations = 0

    def _standard_form(self, system):
        n = system.size
        rows, equalities = system.rows, system.equality_rows
        inequalities = rows.shape[0]
        m = inequalities + equalities.shape[0]
        matrix = np.zeros((m, n + inequalities))
        matrix[:inequalities, :n] = rows
        matrix[:inequalities, n:] = np.eye(inequalities)
        matrix[inequalities:, :n] = equalities
        rhs = np.concatenate([-system.constants, system.equality_values])
        residual = rhs - matrix[:, :n].dot(system.lower)
        negative = residual < 0
        matrix[negative] *= -1.0
        rhs[negative] *= -1.0
        residual[negative] *= -1.0

        # Equality rows and rows violated at the lower bounds need an artificial.
        needs_artificial = negative.copy()
        needs_artificial[inequalities:] = True
        artificial_rows = np.flatnonzero(needs_artificial)
        artificials = artificial_rows.size
        first_artificial = n + inequalities
        full = np.zeros((m, first_artificial + artificials))
        full[:, :first_artificial] = matrix
        full[artificial_rows, first_artificial + np.arange(artificials)] = 1.0

        basis = n + np.arange(m)
        basis[artificial_rows] = first_artificial + np.arange(artificials)
        values = np.zeros(full.shape[1])
        values[:n] = system.lower
        values[basis] = residual
        lower = np.concatenate([system.lower, np.zeros(full.shape[1] - n)])
        upper = np.concatenate([system.upper, np.full(full.shape[1] - n, np.inf)])
        tableau = _Tableau(full.copy(), values, basis, lower, upper)
        return full, rhs, tableau, first_artificial

    def _count(self):
        self.iterations += 1
        if self.iterations > self.max_iterations:
            raise IterationLimit('Simplex exceeded %d iterations'
                                 % self.max_iterations)

    def _iterate(self, tableau, columns):
        while True:
            column, direction = tableau.entering(columns)
            if column is None:
                return
            self._count()
            tableau.step(column, direction)

    @staticmethod
    def _drop_artificials(tableau, first_artificial):
        # Artificials left basic at zero leave when their row allows it,
        # otherwise the row is redundant and they stay pinned to zero.
        tableau.values[first_artificial:] = 0.0
        tableau.upper[first_artificial:] = 0.0
        for row in np.flatnonzero(tableau.basis >= first_artificial):
            entries = np.abs(tableau.matrix[row, :first_artificial])
            entries[tableau.basic[:first_artificial]] = 0.0
            if entries.max(initial=0.0) > 1e-9:
                tableau.pivot(row, int(np.argmax(entries)))

    def solve(self, system):
        """Solve a ``ConstraintSystem``.

        Returns
        -------
        outcome:
            ``SolveOutcome``, feasible with a satisfying assignment or
            infeasible.

        Raises
        ------
        IterationLimit
            If the iteration budget is exhausted.
        InexactSolution
            If no recovered point meets the rows within the tolerance.
        """
        self.iterations = 0
        n = system.size
        matrix, rhs, tableau, first_artificial = self._standard_form(system)
        columns = matrix.shape[1]

        costs = np.zeros(columns)
        costs[first_artificial:] = 1.0
        tableau.price(costs)
        self._iterate(tableau, columns)
        residual = tableau.values[first_artificial:].sum()
        if residual > self.tolerance:
            LOGGER.debug('Infeasible: phase 1 ends at %g after %d iterations',
                         residual, self.iterations)
            return SolveOutcome.infeasible(self.iterations)
        self._drop_artificials(tableau, first_artificial)

        if system.objective is not None:
            costs = np.zeros(columns)
            costs[:n] = system.objective
            tableau.price(costs)
            self._iterate(tableau, first_artificial)

        pixels = self._extract(system, matrix, rhs, tableau)
        LOGGER.debug('Feasible after %d iterations, violation %g',
                     self.iterations, system.violation(pixels))
        return SolveOutcome.feasible(pixels, self.iterations)

    def _extract(self, system, matrix, rhs, tableau):
        violations = []
        for values in (self._refine(matrix, rhs, tableau), tableau.values):
            if values is None:
                continue
            pixels = np.clip(values[:system.size], system.lower, system.upper)
            violation = system.violation(pixels)
            if violation <= self.tolerance:
                return pixels
            violations.append(violation)
        raise InexactSolution('Simplex point violates the system by %g'
                              % min(violations))

    @staticmethod
    def _refine(matrix, rhs, tableau):
        # Recompute basic values from the original rows to shed pivoting noise.
        if tableau.basis.size == 0:
            return tableau.values.copy()
        nonbasic = ~tableau.basic
        target = rhs - matrix[:, nonbasic].dot(tableau.values[nonbasic])
        try:
            basic = np.linalg.solve(matrix[:, tableau.basis], target)
        except np.linalg.LinAlgError:
            return None
        values = tableau.values.copy()
        values[tableau.basis] = basic
        return values


def solve(system, max_iterations=500000):
    """Solve a ``ConstraintSystem`` with a fresh ``SimplexSolver``."""
    return SimplexSolver(max_iterations).solve(system)
