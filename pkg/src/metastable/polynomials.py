"""Sparse monomial-basis polynomials with exact differentiation.

A polynomial in d variables is stored as an integer exponent matrix
``powers`` of shape (n_terms, d) together with a coefficient vector
``coeffs``.  Gradient and Hessian components are themselves polynomials,
built once by symbolic differentiation of the coefficient table, so all
evaluators are exact and cheap to vectorize.
"""

from __future__ import annotations

import numpy as np


def _diff_terms(powers, coeffs, axis):
    """Differentiate a term table with respect to one variable."""
    keep = powers[:, axis] > 0
    if not keep.any():
        d = powers.shape[1]
        return np.zeros((1, d), dtype=np.int64), np.zeros(1)
    p = powers[keep].copy()
    c = coeffs[keep] * p[:, axis]
    p[:, axis] -= 1
    return p, c


def _eval_terms(powers, coeffs, x):
    """Evaluate a term table at points ``x`` of shape (d,) or (n, d)."""
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    pts = x[None, :] if single else x
    # (n, m): product over coordinates of x_l ** k_l per term
    mono = np.prod(pts[:, None, :] ** powers[None, :, :], axis=2)
    out = mono @ coeffs
    return out[0] if single else out


class Polynomial:
    """Polynomial of several variables in sparse monomial form."""

    def __init__(self, powers, coeffs):
        powers = np.asarray(powers, dtype=np.int64)
        coeffs = np.asarray(coeffs, dtype=float)
        if powers.ndim != 2 or powers.shape[0] != coeffs.shape[0]:
            raise ValueError("powers must be (n_terms, dim) matching coeffs")
        self.powers = powers
        self.coeffs = coeffs
        self.dim = powers.shape[1]
        self._grad = None
        self._hess = None

    def __call__(self, x):
        return _eval_terms(self.powers, self.coeffs, x)

    def diff(self, axis):
        return Polynomial(*_diff_terms(self.powers, self.coeffs, axis))

    @property
    def grad_components(self):
        if self._grad is None:
            self._grad = [self.diff(j) for j in range(self.dim)]
        return self._grad

    @property
    def hess_components(self):
        if self._hess is None:
            self._hess = [
                [self.grad_components[j].diff(k) for k in range(self.dim)]
                for j in range(self.dim)
            ]
        return self._hess

    def grad(self, x):
        x = np.asarray(x, dtype=float)
        comps = [g(x) for g in self.grad_components]
        return np.stack(comps, axis=-1)

    def hess(self, x):
        x = np.asarray(x, dtype=float)
        d = self.dim
        rows = [
            np.stack([self.hess_components[j][k](x) for k in range(d)], axis=-1)
            for j in range(d)
        ]
        return np.stack(rows, axis=-2)

    def dense_gradient2(self):
        """Bivariate gradient as dense coefficient matrices for Horner kernels.

        Only valid for dim == 2.  Returns C of shape (2, A, B) with
        grad_j(x, y) = sum_{a,b} C[j, a, b] x^a y^b.
        """
        if self.dim != 2:
            raise ValueError("dense_gradient2 requires a 2-variable polynomial")
        comps = self.grad_components
        A = max(int(c.powers[:, 0].max()) for c in comps) + 1
        B = max(int(c.powers[:, 1].max()) for c in comps) + 1
        C = np.zeros((2, A, B))
        for j, c in enumerate(comps):
            for (a, b), coef in zip(c.powers, c.coeffs):
                C[j, a, b] += coef
        return C

    def packed_gradient(self):
        """Gradient components padded into dense arrays for jitted kernels.

        Returns (powers, coeffs) of shapes (d, m_max, d) and (d, m_max);
        padding terms carry zero coefficients.
        """
        comps = self.grad_components
        m_max = max(c.powers.shape[0] for c in comps)
        d = self.dim
        gp = np.zeros((d, m_max, d), dtype=np.int64)
        gc = np.zeros((d, m_max))
        for j, c in enumerate(comps):
            m = c.powers.shape[0]
            gp[j, :m] = c.powers
            gc[j, :m] = c.coeffs
        return gp, gc
