"""
Second order central differences for the Cauchy-Riemann operators
    d = (d_x1 - i d_x2) / 2,    dbar = (d_x1 + i d_x2) / 2
and their second order products d^2, d dbar, dbar^2 on Cartesian grids indexed [ix, iy, ...].
"""
import numpy as np

from tensoray_errors import ConfigError


class ORDERS:
    """Derivative orders (p, q) of d^p dbar^q"""
    VALUE = (0, 0)
    D = (1, 0)
    DBAR = (0, 1)
    DD = (2, 0)
    D_DBAR = (1, 1)
    DBAR_DBAR = (0, 2)


def _nan_frame(values):
    return np.full(values.shape, np.nan + 0j, dtype=complex)


def grid_d(values, step, conjugate=False):
    """
    Central difference d (or dbar when conjugate is True) of values on a Cartesian grid indexed [ix, iy, ...].
    The outermost rows and columns are set to nan.
    """
    out = _nan_frame(values)
    dx = (values[2:, 1:-1] - values[:-2, 1:-1]) / (2.0 * step)
    dy = (values[1:-1, 2:] - values[1:-1, :-2]) / (2.0 * step)
    sign = 1j if conjugate else -1j
    out[1:-1, 1:-1] = 0.5 * (dx + sign * dy)
    return out


def grid_dbar(values, step):
    return grid_d(values, step, conjugate=True)


def grid_hessian(values, step):
    """(f_xx, f_xy, f_yy) by the 3 x 3 stencil, nan on the outermost rows and columns"""
    center = values[1:-1, 1:-1]
    fxx, fxy, fyy = _nan_frame(values), _nan_frame(values), _nan_frame(values)
    fxx[1:-1, 1:-1] = (values[2:, 1:-1] - 2.0 * center + values[:-2, 1:-1]) / step ** 2
    fyy[1:-1, 1:-1] = (values[1:-1, 2:] - 2.0 * center + values[1:-1, :-2]) / step ** 2
    fxy[1:-1, 1:-1] = (values[2:, 2:] - values[2:, :-2] - values[:-2, 2:] + values[:-2, :-2]) / (4.0 * step ** 2)
    return fxx, fxy, fyy


def grid_derivative(values, step, order):
    """
    d^p dbar^q of grid values for the orders of ORDERS; second orders use the direct 3 x 3 stencil so that every
    derivative only loses the outermost ring
    """
    if order == ORDERS.VALUE:
        return np.asarray(values, dtype=complex)
    if order == ORDERS.D:
        return grid_d(values, step)
    if order == ORDERS.DBAR:
        return grid_dbar(values, step)
    if order not in (ORDERS.DD, ORDERS.D_DBAR, ORDERS.DBAR_DBAR):
        raise ConfigError(f"Attention, unsupported derivative order {order}.")
    fxx, fxy, fyy = grid_hessian(values, step)
    if order == ORDERS.D_DBAR:
        return 0.25 * (fxx + fyy)
    sign = -2j if order == ORDERS.DD else 2j
    return 0.25 * (fxx + sign * fxy - fyy)
