"""Generic velocity-Verlet loop over tuples of ndarrays.

Shared by the full tensor dynamics and all reduced systems.  The scheme is
the standard kick-drift-kick form: accelerations are evaluated at the step
endpoints t_n and t_n + dt (the two half-kicks), positions advance with the
half-step velocity.  For zero forcing the map is exactly time-reversible.
"""

from __future__ import annotations


def velocity_verlet(y, v, t, dt, n_steps, acc, on_step=None):
    """Integrate y'' = acc(y, t) with velocity Verlet.

    y, v        tuples of ndarrays (positions, velocities), not mutated
    acc(y, t)   returns (accelerations tuple, aux); aux is passed through
                to on_step untouched
    on_step(k, y, v, t, a, aux) is called after each completed step with the
                acceleration already evaluated at the new time level

    Returns (y, v, t).
    """
    y = tuple(c.copy() for c in y)
    v = tuple(c.copy() for c in v)
    a, aux = acc(y, t)
    for k in range(n_steps):
        v = tuple(vc + (0.5 * dt) * ac for vc, ac in zip(v, a))
        y = tuple(yc + dt * vc for yc, vc in zip(y, v))
        t = t + dt
        a, aux = acc(y, t)
        v = tuple(vc + (0.5 * dt) * ac for vc, ac in zip(v, a))
        if on_step is not None:
            on_step(k + 1, y, v, t, a, aux)
    return y, v, t
