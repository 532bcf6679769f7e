"""Planar 5-link biped: torso, two thighs, two shanks, point feet.

Generalized coordinates ``q = [x, z, pitch, hip_L, knee_L, hip_R, knee_R]``
where (x, z) is the hip (pelvis) position, pitch leans the torso forward
for positive values, hip angles flex the thigh forward and knee angles flex
the shank backward (knee >= 0 is the anatomical range).

Equations of motion are assembled per substep from point Jacobians:

    M(q) qdd = Q(q, qd) - b(q, qd)

and integrated with semi-implicit Euler. Ground contact is a penalty
spring-damper with viscous, Coulomb-capped friction; contact forces are
treated linearly implicitly in the new velocity so the stiff contact does
not drive the step size.

Semi-implicit Euler on a configuration-dependent mass matrix can create a
little energy when the limbs whip around. After every substep the total
mechanical energy is therefore capped at its previous value plus the work done
by the actuators and the external push, by uniformly scaling the velocities.
"""
import numpy as np
from numba import njit

# parameter vector layout
P_M_TORSO, P_M_THIGH, P_M_SHANK = 0, 1, 2
P_L_TORSO, P_L_THIGH, P_L_SHANK = 3, 4, 5
P_G, P_KP, P_KD, P_TAU_MAX = 6, 7, 8, 9
P_K_CONTACT, P_C_CONTACT, P_MU, P_C_FRICTION = 10, 11, 12, 13
P_DT = 14
N_PARAMS = 15

N_Q = 7
# contact points: foot L, foot R, knee L, knee R, hip, head
N_CONTACTS = 6
FOOT_L, FOOT_R, KNEE_L, KNEE_R, HIP, HEAD = range(N_CONTACTS)


@njit(cache=True)
def _points(q, qd, p):
    """Positions, Jacobians and velocity-product accelerations.

    Returns (pos[12, 2], jac[12, 2, 7], quad[12, 2]): rows 0-5 are the contact
    points, rows 6-10 the link centres of mass (torso, thigh L, shank L,
    thigh R, shank R); row 11 is padding.
    """
    pos = np.zeros((12, 2))
    jac = np.zeros((12, 2, N_Q))
    quad = np.zeros((12, 2))
    x, z, phi = q[0], q[1], q[2]
    phid = qd[2]
    lt, l1, l2 = p[P_L_TORSO], p[P_L_THIGH], p[P_L_SHANK]

    for i in range(12):
        pos[i, 0] = x
        pos[i, 1] = z
        jac[i, 0, 0] = 1.0
        jac[i, 1, 1] = 1.0

    sphi, cphi = np.sin(phi), np.cos(phi)
    # torso: head point and torso COM
    for idx, length in ((HEAD, lt), (6, 0.5 * lt)):
        pos[idx, 0] += length * sphi
        pos[idx, 1] += length * cphi
        jac[idx, 0, 2] += length * cphi
        jac[idx, 1, 2] += -length * sphi
        quad[idx, 0] += -length * phid * phid * sphi
        quad[idx, 1] += -length * phid * phid * cphi

    for leg in range(2):
        ih = 3 + 2 * leg          # hip joint coordinate index
        ik = ih + 1               # knee joint coordinate index
        knee_idx = KNEE_L + leg
        foot_idx = FOOT_L + leg
        thigh_com = 7 + 2 * leg
        shank_com = 8 + 2 * leg
        bt = q[ih] - phi
        btd = qd[ih] - phid
        bs = bt - q[ik]
        bsd = btd - qd[ik]
        sbt, cbt = np.sin(bt), np.cos(bt)
        sbs, cbs = np.sin(bs), np.cos(bs)
        # thigh segment contributes to knee, thigh COM, shank COM and foot
        for idx, length in ((knee_idx, l1), (thigh_com, 0.5 * l1),
                            (shank_com, l1), (foot_idx, l1)):
            pos[idx, 0] += length * sbt
            pos[idx, 1] += -length * cbt
            jac[idx, 0, 2] += -length * cbt
            jac[idx, 1, 2] += -length * sbt
            jac[idx, 0, ih] += length * cbt
            jac[idx, 1, ih] += length * sbt
            quad[idx, 0] += -length * btd * btd * sbt
            quad[idx, 1] += length * btd * btd * cbt
        # shank segment
        for idx, length in ((shank_com, 0.5 * l2), (foot_idx, l2)):
            pos[idx, 0] += length * sbs
            pos[idx, 1] += -length * cbs
            jac[idx, 0, 2] += -length * cbs
            jac[idx, 1, 2] += -length * sbs
            jac[idx, 0, ih] += length * cbs
            jac[idx, 1, ih] += length * sbs
            jac[idx, 0, ik] += -length * cbs
            jac[idx, 1, ik] += -length * sbs
            quad[idx, 0] += -length * bsd * bsd * sbs
            quad[idx, 1] += length * bsd * bsd * cbs
    return pos, jac, quad


@njit(cache=True)
def _masses(p):
    """Link masses, rotational inertias about the COM, angular-velocity Jacobian rows."""
    m = np.array([p[P_M_TORSO], p[P_M_THIGH], p[P_M_SHANK], p[P_M_THIGH], p[P_M_SHANK]])
    lengths = np.array([p[P_L_TORSO], p[P_L_THIGH], p[P_L_SHANK], p[P_L_THIGH], p[P_L_SHANK]])
    inertia = m * lengths * lengths / 12.0
    omega = np.zeros((5, N_Q))
    omega[0, 2] = 1.0
    for leg in range(2):
        ih = 3 + 2 * leg
        omega[1 + 2 * leg, 2] = -1.0
        omega[1 + 2 * leg, ih] = 1.0
        omega[2 + 2 * leg, 2] = -1.0
        omega[2 + 2 * leg, ih] = 1.0
        omega[2 + 2 * leg, ih + 1] = -1.0
    return m, inertia, omega


@njit(cache=True)
def mass_matrix_and_forces(q, qd, p):
    """Returns M, the generalized gravity-minus-bias force, and the point data."""
    pos, jac, quad = _points(q, qd, p)
    m, inertia, omega = _masses(p)
    M = np.zeros((N_Q, N_Q))
    f = np.zeros(N_Q)
    g = p[P_G]
    for b in range(5):
        idx = 6 + b
        J = jac[idx]
        M += m[b] * (J.T @ J)
        M += inertia[b] * np.outer(omega[b], omega[b])
        # gravity minus velocity-product (Coriolis/centripetal) terms
        f += J.T @ np.array([-m[b] * quad[idx, 0], -m[b] * (g + quad[idx, 1])])
    return M, f, pos, jac


@njit(cache=True)
def pd_torque(q, qd, q_target, p):
    tau = p[P_KP] * (q_target - q[3:]) - p[P_KD] * qd[3:]
    tmax = p[P_TAU_MAX]
    for i in range(4):
        if tau[i] > tmax:
            tau[i] = tmax
        elif tau[i] < -tmax:
            tau[i] = -tmax
    return tau


@njit(cache=True)
def substep(q, qd, tau, push_fx, p):
    """Advance (q, qd) in place by one physics step of length p[P_DT]."""
    dt = p[P_DT]
    M, f, pos, jac = mass_matrix_and_forces(q, qd, p)
    f[3:] += tau
    f[0] += push_fx
    k, c, mu, ct = p[P_K_CONTACT], p[P_C_CONTACT], p[P_MU], p[P_C_FRICTION]

    active = np.zeros(N_CONTACTS, dtype=np.bool_)
    implicit_friction = np.ones(N_CONTACTS, dtype=np.bool_)
    coulomb = np.zeros(N_CONTACTS)
    # a point joins the contact solve if it is, or is about to be, below ground;
    # the normal force acts on the end-of-step penetration, so an approaching
    # point is caught within the step instead of storing spring energy unopposed
    for i in range(N_CONTACTS):
        active[i] = pos[i, 1] + dt * (jac[i, 1] @ qd) < 0.0 or pos[i, 1] < 0.0

    base_rhs = M @ qd + dt * f
    v_new = qd.copy()
    for _ in range(2 * N_CONTACTS + 1):
        A = M.copy()
        rhs = base_rhs.copy()
        for i in range(N_CONTACTS):
            if not active[i]:
                continue
            jx = jac[i, 0]
            jz = jac[i, 1]
            A += dt * (k * dt + c) * np.outer(jz, jz)
            rhs += -dt * k * pos[i, 1] * jz
            if implicit_friction[i]:
                A += dt * ct * np.outer(jx, jx)
            else:
                rhs += dt * coulomb[i] * jx
        v_new = np.linalg.solve(A, rhs)

        changed = False
        for i in range(N_CONTACTS):
            if not active[i]:
                continue
            vz = jac[i, 1] @ v_new
            fn = -k * pos[i, 1] - (k * dt + c) * vz
            if fn < 0.0:
                active[i] = False
                changed = True
                continue
            if implicit_friction[i]:
                vx = jac[i, 0] @ v_new
                ft = -ct * vx
                if abs(ft) > mu * fn:
                    implicit_friction[i] = False
                    coulomb[i] = -mu * fn if vx > 0.0 else mu * fn
                    changed = True
        if not changed:
            break

    energy_before = 0.5 * qd @ (M @ qd) + _potential(pos, p)
    work = dt * (tau @ v_new[3:] + push_fx * v_new[0])
    for j in range(N_Q):
        qd[j] = v_new[j]
        q[j] += dt * v_new[j]

    M_new, _, pos_new, _ = mass_matrix_and_forces(q, qd, p)
    kinetic = 0.5 * qd @ (M_new @ qd)
    budget = energy_before + work - _potential(pos_new, p)
    if kinetic > budget and kinetic > 0.0:
        scale = np.sqrt(max(budget, 0.0) / kinetic)
        for j in range(N_Q):
            qd[j] *= scale


@njit(cache=True)
def simulate(q, qd, q_target, push_fx, p):
    """Run len(push_fx) substeps under PD control toward ``q_target``.

    Returns the mean over substeps of the summed absolute joint torque, and the
    per-joint mean torque.
    """
    n = len(push_fx)
    total = 0.0
    mean_tau = np.zeros(4)
    for s in range(n):
        tau = pd_torque(q, qd, q_target, p)
        for i in range(4):
            total += abs(tau[i])
            mean_tau[i] += tau[i]
        substep(q, qd, tau, push_fx[s], p)
    return total / n, mean_tau / n


@njit(cache=True)
def contact_points(q, p):
    pos, _, _ = _points(q, np.zeros(N_Q), p)
    return pos[:N_CONTACTS].copy()


@njit(cache=True)
def _potential(pos, p):
    """Gravitational plus elastic contact energy (ground at z = 0)."""
    m, _, _ = _masses(p)
    energy = 0.0
    for b in range(5):
        energy += m[b] * p[P_G] * pos[6 + b, 1]
    for i in range(N_CONTACTS):
        if pos[i, 1] < 0.0:
            energy += 0.5 * p[P_K_CONTACT] * pos[i, 1] * pos[i, 1]
    return energy


@njit(cache=True)
def mechanical_energy(q, qd, p):
    """Kinetic + gravitational + elastic contact energy."""
    M, _, pos, _ = mass_matrix_and_forces(q, qd, p)
    return 0.5 * qd @ (M @ qd) + _potential(pos, p)
