"""JIT-compiled stepping kernels.

State layout everywhere: y = [S_b, I_b, R_b, D_b, S_r, I_r, R_r, D_r].

Both forces go through the same scalar helpers in the same order, so
swapping the blue and red inputs reproduces the swapped trajectory
bit for bit. Kernels are nopython + nogil, which lets a thread pool run
many simulations in parallel, and fastmath stays off so results are
deterministic IEEE754.
"""

import math

import numpy as np
from numba import njit

# Epidemic terms dividing by the live force size N are defined as 0 below
# this threshold (all such flows vanish in that regime anyway).
EPS_N = 1e-9

# Scale of the suppression factor f(x) = exp(-BARRIER_SCALE / x).
BARRIER_SCALE = 1e-4

# stopped_by codes
STOP_FADING = 0
STOP_TIME_CAP = 1
STOP_NONFINITE = 2

# stepping methods
METHOD_EULER = 0
METHOD_RK4 = 1

# result vector layout of simulate()
OUT_STATE = 0          # 0..7: final state
OUT_T_END = 8
OUT_T_KIN_END = 9      # nan when never triggered
OUT_T_PEAK_IB = 10
OUT_T_PEAK_IR = 11
OUT_STOP_CODE = 12
OUT_CONS_ERR = 13      # max |N + D - (N0 + D0)| over both forces and all steps
OUT_MIN_LEVEL = 14     # min compartment level over the whole run
OUT_FAIL_TIME = 15     # nan unless STOP_NONFINITE
OUT_N_STEPS = 16
OUT_N_RECORDED = 17
OUT_LEN = 18


@njit(cache=True, nogil=True, inline="always")
def barrier(x):
    if x <= 0.0:
        return 0.0
    return math.exp(-BARRIER_SCALE / x)


@njit(cache=True, nogil=True, inline="always")
def damped_power(x, a):
    if x <= 0.0:
        return 0.0
    return math.exp(-BARRIER_SCALE / x) * x ** a


@njit(cache=True, nogil=True, inline="always")
def attrition_factor(delta_eff, eta, S, I, R, p):
    """Kinetic hit rate one force exerts: delta (f(S)S^p + f(R)R^p + eta f(I)I^p)."""
    if delta_eff == 0.0:
        return 0.0
    return delta_eff * (
        damped_power(S, p) + damped_power(R, p) + eta * damped_power(I, p)
    )


@njit(cache=True, nogil=True, inline="always")
def _flows(S, I, R, beta, gamma_eff, gtil_eff, alpha_opp, sr_opp, k_opp, q):
    """Outflow rates of one force's compartments.

    Returns (infect, patch_v, patch_i, attack, kin_s, kin_i, kin_r) for the
    transfers S->I, S->R, I->R, S->I (adversarial attack), S->D, I->D, R->D.
    """
    n = S + I + R
    if n < EPS_N:
        infect = 0.0
        patch_i = 0.0
    else:
        infect = beta * S * I / n
        patch_i = gtil_eff * I * (S + R) / n
    patch_v = gamma_eff * S
    attack = alpha_opp * sr_opp * S
    if k_opp > 0.0:
        kin_s = k_opp * damped_power(S, q)
        kin_i = k_opp * damped_power(I, q)
        kin_r = k_opp * damped_power(R, q)
    else:
        kin_s = 0.0
        kin_i = 0.0
        kin_r = 0.0
    return infect, patch_v, patch_i, attack, kin_s, kin_i, kin_r


@njit(cache=True, nogil=True, inline="always")
def _force_rhs(S, I, R, beta, gamma_eff, gtil_eff, alpha_opp, sr_opp, k_opp, q):
    """Raw derivatives (dS, dI, dR, dD) of one force."""
    infect, patch_v, patch_i, attack, kin_s, kin_i, kin_r = _flows(
        S, I, R, beta, gamma_eff, gtil_eff, alpha_opp, sr_opp, k_opp, q
    )
    ds = -(infect + patch_v + attack + kin_s)
    di = (infect + attack) - (patch_i + kin_i)
    dr = (patch_v + patch_i) - kin_r
    dd = kin_s + kin_i + kin_r
    return ds, di, dr, dd


@njit(cache=True, nogil=True)
def rhs_into(y, d,
             ab, bb, gb, gtb, db, eb,
             ar, br, gr, gtr, dr, er,
             p, q):
    """Write the 8-component derivative of state y into d.

    Parameter scalars are the *effective* values per force in the order
    alpha, beta, gamma, gamma_tilde, delta, eta. Negative levels (possible
    inside RK4 stages) are clamped to zero before evaluation so the barrier
    stays defined.
    """
    Sb = y[0] if y[0] > 0.0 else 0.0
    Ib = y[1] if y[1] > 0.0 else 0.0
    Rb = y[2] if y[2] > 0.0 else 0.0
    Sr = y[4] if y[4] > 0.0 else 0.0
    Ir = y[5] if y[5] > 0.0 else 0.0
    Rr = y[6] if y[6] > 0.0 else 0.0
    kb = attrition_factor(db, eb, Sb, Ib, Rb, p)
    kr = attrition_factor(dr, er, Sr, Ir, Rr, p)
    dSb, dIb, dRb, dDb = _force_rhs(Sb, Ib, Rb, bb, gb, gtb, ar, Sr + Rr, kr, q)
    dSr, dIr, dRr, dDr = _force_rhs(Sr, Ir, Rr, br, gr, gtr, ab, Sb + Rb, kb, q)
    d[0] = dSb
    d[1] = dIb
    d[2] = dRb
    d[3] = dDb
    d[4] = dSr
    d[5] = dIr
    d[6] = dRr
    d[7] = dDr


@njit(cache=True, nogil=True, inline="always")
def _euler_force(S, I, R, D, beta, gamma_eff, gtil_eff, alpha_opp, sr_opp,
                 k_opp, q, dt):
    """One limited explicit Euler step for one force.

    If a compartment's total outflow over the step would exceed its level,
    all its outflows are scaled by level / (dt * total outflow); inflows are
    never scaled directly. Every transfer amount is subtracted from its
    source and added to its destination, so N + D is conserved to rounding,
    and the final zero clamp only absorbs 1-ulp residue of the scaled sum.
    """
    infect, patch_v, patch_i, attack, kin_s, kin_i, kin_r = _flows(
        S, I, R, beta, gamma_eff, gtil_eff, alpha_opp, sr_opp, k_opp, q
    )
    out_s = infect + patch_v + attack + kin_s
    scale_s = 1.0
    if dt * out_s > S:
        scale_s = S / (dt * out_s)
    out_i = patch_i + kin_i
    scale_i = 1.0
    if dt * out_i > I:
        scale_i = I / (dt * out_i)
    scale_r = 1.0
    if dt * kin_r > R:
        scale_r = R / (dt * kin_r)

    a_inf = dt * infect * scale_s
    a_pv = dt * patch_v * scale_s
    a_att = dt * attack * scale_s
    a_ks = dt * kin_s * scale_s
    a_pi = dt * patch_i * scale_i
    a_ki = dt * kin_i * scale_i
    a_kr = dt * kin_r * scale_r

    s1 = S - (a_inf + a_pv + a_att + a_ks)
    i1 = I + (a_inf + a_att) - (a_pi + a_ki)
    r1 = R + (a_pv + a_pi) - a_kr
    d1 = D + (a_ks + a_ki + a_kr)
    if s1 < 0.0:
        s1 = 0.0
    if i1 < 0.0:
        i1 = 0.0
    if r1 < 0.0:
        r1 = 0.0
    return s1, i1, r1, d1


@njit(cache=True, nogil=True)
def simulate(y0, par_b, par_r, p, q, t_kin,
             t_att_b, t_ae_b, t_pat_b,
             t_att_r, t_ae_r, t_pat_r,
             dt, eps_stop, window, eps_kin, t_max,
             method, substeps,
             record, stride, traj_t, traj_y):
    """Integrate one run on the fixed grid t_i = i * dt.

    par_b / par_r hold the nominal values [alpha, beta, gamma, gamma_tilde,
    delta, eta]. Events are step-aligned: a switch takes effect at the first
    step whose start time satisfies t >= event time. The fading-dynamics
    stop compares each compartment against its value `window` steps earlier:
    the run ends at the first grid time whose full comparison window lies
    after every event time and whose eight windowed changes all stay below
    eps_stop. A window longer than the step budget disables the stop (the
    run then ends at t_max). RK4 (method=1) advances `substeps` stages of
    the raw right-hand side inside each grid step and shares all other
    bookkeeping with the Euler path.

    Returns a float64[OUT_LEN] result vector; when `record` is set, grid
    states land in traj_t / traj_y every `stride` steps (plus the final
    state).
    """
    out = np.zeros(OUT_LEN, dtype=np.float64)

    Sb = y0[0]
    Ib = y0[1]
    Rb = y0[2]
    Db = y0[3]
    Sr = y0[4]
    Ir = y0[5]
    Rr = y0[6]
    Dr = y0[7]

    tot_b0 = (Sb + Ib + Rb) + Db
    tot_r0 = (Sr + Ir + Rr) + Dr

    alpha_b = par_b[0]
    beta_b = par_b[1]
    gamma_b = par_b[2]
    gtil_b = par_b[3]
    delta_b = par_b[4]
    eta_b = par_b[5]
    alpha_r = par_r[0]
    beta_r = par_r[1]
    gamma_r = par_r[2]
    gtil_r = par_r[3]
    delta_r = par_r[4]
    eta_r = par_r[5]

    t_check = t_kin
    if t_ae_b > t_check:
        t_check = t_ae_b
    if t_ae_r > t_check:
        t_check = t_ae_r
    if t_pat_b > t_check:
        t_check = t_pat_b
    if t_pat_r > t_check:
        t_check = t_pat_r

    # ring buffer of the last (window + 1) grid states for the windowed
    # stop comparison; slot s % (window + 1) holds the state of step s
    max_steps = int(math.ceil(t_max / dt)) + 2
    live_window = 0 < window < max_steps
    buf_rows = window + 1 if live_window else 1
    buf = np.empty((buf_rows, 8), dtype=np.float64)
    buf[0, 0] = Sb
    buf[0, 1] = Ib
    buf[0, 2] = Rb
    buf[0, 3] = Db
    buf[0, 4] = Sr
    buf[0, 5] = Ir
    buf[0, 6] = Rr
    buf[0, 7] = Dr

    t_end = 0.0
    stop_code = STOP_TIME_CAP
    t_kin_end = np.nan
    peak_ib = Ib
    t_peak_ib = 0.0
    peak_ir = Ir
    t_peak_ir = 0.0
    cons_err = 0.0
    min_level = Sb
    for v in (Ib, Rb, Db, Sr, Ir, Rr, Dr):
        if v < min_level:
            min_level = v
    fail_t = np.nan

    if t_kin <= 0.0 and ((Sb + Ib + Rb) < eps_kin or (Sr + Ir + Rr) < eps_kin):
        t_kin_end = 0.0

    nrec = 0
    last_rec_step = -1
    if record:
        traj_t[0] = 0.0
        traj_y[0, 0] = Sb
        traj_y[0, 1] = Ib
        traj_y[0, 2] = Rb
        traj_y[0, 3] = Db
        traj_y[0, 4] = Sr
        traj_y[0, 5] = Ir
        traj_y[0, 6] = Rr
        traj_y[0, 7] = Dr
        nrec = 1
        last_rec_step = 0

    # RK4 buffers (unused on the Euler path)
    y = np.empty(8, dtype=np.float64)
    yt = np.empty(8, dtype=np.float64)
    k1 = np.empty(8, dtype=np.float64)
    k2 = np.empty(8, dtype=np.float64)
    k3 = np.empty(8, dtype=np.float64)
    k4 = np.empty(8, dtype=np.float64)

    step = 0
    while True:
        t = step * dt
        if t >= t_max:
            t_end = t
            stop_code = STOP_TIME_CAP
            break

        # effective values at the step start
        ab = alpha_b if (t >= t_att_b and t < t_ae_b) else 0.0
        ar = alpha_r if (t >= t_att_r and t < t_ae_r) else 0.0
        db = delta_b if t >= t_kin else 0.0
        dr = delta_r if t >= t_kin else 0.0
        gb = gamma_b if t >= t_pat_b else 0.0
        gtb = gtil_b if t >= t_pat_b else 0.0
        gr = gamma_r if t >= t_pat_r else 0.0
        gtr = gtil_r if t >= t_pat_r else 0.0

        if method == METHOD_EULER:
            kb = attrition_factor(db, eta_b, Sb, Ib, Rb, p)
            kr = attrition_factor(dr, eta_r, Sr, Ir, Rr, p)
            srb = Sb + Rb
            srr = Sr + Rr
            nSb, nIb, nRb, nDb = _euler_force(
                Sb, Ib, Rb, Db, beta_b, gb, gtb, ar, srr, kr, q, dt)
            nSr, nIr, nRr, nDr = _euler_force(
                Sr, Ir, Rr, Dr, beta_r, gr, gtr, ab, srb, kb, q, dt)
        else:
            y[0] = Sb
            y[1] = Ib
            y[2] = Rb
            y[3] = Db
            y[4] = Sr
            y[5] = Ir
            y[6] = Rr
            y[7] = Dr
            h = dt / substeps
            for _ in range(substeps):
                rhs_into(y, k1, ab, beta_b, gb, gtb, db, eta_b,
                         ar, beta_r, gr, gtr, dr, eta_r, p, q)
                for j in range(8):
                    yt[j] = y[j] + 0.5 * h * k1[j]
                rhs_into(yt, k2, ab, beta_b, gb, gtb, db, eta_b,
                         ar, beta_r, gr, gtr, dr, eta_r, p, q)
                for j in range(8):
                    yt[j] = y[j] + 0.5 * h * k2[j]
                rhs_into(yt, k3, ab, beta_b, gb, gtb, db, eta_b,
                         ar, beta_r, gr, gtr, dr, eta_r, p, q)
                for j in range(8):
                    yt[j] = y[j] + h * k3[j]
                rhs_into(yt, k4, ab, beta_b, gb, gtb, db, eta_b,
                         ar, beta_r, gr, gtr, dr, eta_r, p, q)
                for j in range(8):
                    y[j] += (h / 6.0) * (k1[j] + 2.0 * (k2[j] + k3[j]) + k4[j])
                    if y[j] < 0.0:
                        y[j] = 0.0
            nSb = y[0]
            nIb = y[1]
            nRb = y[2]
            nDb = y[3]
            nSr = y[4]
            nIr = y[5]
            nRr = y[6]
            nDr = y[7]

        Sb = nSb
        Ib = nIb
        Rb = nRb
        Db = nDb
        Sr = nSr
        Ir = nIr
        Rr = nRr
        Dr = nDr
        step += 1
        t_next = step * dt

        finite = (math.isfinite(Sb) and math.isfinite(Ib)
                  and math.isfinite(Rb) and math.isfinite(Db)
                  and math.isfinite(Sr) and math.isfinite(Ir)
                  and math.isfinite(Rr) and math.isfinite(Dr))
        if not finite:
            t_end = t_next
            stop_code = STOP_NONFINITE
            fail_t = t_next
            break

        e = abs(((Sb + Ib + Rb) + Db) - tot_b0)
        if e > cons_err:
            cons_err = e
        e = abs(((Sr + Ir + Rr) + Dr) - tot_r0)
        if e > cons_err:
            cons_err = e
        for v in (Sb, Ib, Rb, Db, Sr, Ir, Rr, Dr):
            if v < min_level:
                min_level = v

        if Ib > peak_ib:
            peak_ib = Ib
            t_peak_ib = t_next
        if Ir > peak_ir:
            peak_ir = Ir
            t_peak_ir = t_next

        if math.isnan(t_kin_end) and t_next >= t_kin:
            if (Sb + Ib + Rb) < eps_kin or (Sr + Ir + Rr) < eps_kin:
                t_kin_end = t_next

        if record and step % stride == 0:
            traj_t[nrec] = t_next
            traj_y[nrec, 0] = Sb
            traj_y[nrec, 1] = Ib
            traj_y[nrec, 2] = Rb
            traj_y[nrec, 3] = Db
            traj_y[nrec, 4] = Sr
            traj_y[nrec, 5] = Ir
            traj_y[nrec, 6] = Rr
            traj_y[nrec, 7] = Dr
            nrec += 1
            last_rec_step = step

        if live_window:
            s = step % (window + 1)
            buf[s, 0] = Sb
            buf[s, 1] = Ib
            buf[s, 2] = Rb
            buf[s, 3] = Db
            buf[s, 4] = Sr
            buf[s, 5] = Ir
            buf[s, 6] = Rr
            buf[s, 7] = Dr
            if step >= window and (step - window) * dt >= t_check:
                o = (step - window) % (window + 1)
                if (abs(Sb - buf[o, 0]) < eps_stop
                        and abs(Ib - buf[o, 1]) < eps_stop
                        and abs(Rb - buf[o, 2]) < eps_stop
                        and abs(Db - buf[o, 3]) < eps_stop
                        and abs(Sr - buf[o, 4]) < eps_stop
                        and abs(Ir - buf[o, 5]) < eps_stop
                        and abs(Rr - buf[o, 6]) < eps_stop
                        and abs(Dr - buf[o, 7]) < eps_stop):
                    t_end = t_next
                    stop_code = STOP_FADING
                    break

    if record and last_rec_step != step and stop_code != STOP_NONFINITE:
        traj_t[nrec] = t_end
        traj_y[nrec, 0] = Sb
        traj_y[nrec, 1] = Ib
        traj_y[nrec, 2] = Rb
        traj_y[nrec, 3] = Db
        traj_y[nrec, 4] = Sr
        traj_y[nrec, 5] = Ir
        traj_y[nrec, 6] = Rr
        traj_y[nrec, 7] = Dr
        nrec += 1

    out[0] = Sb
    out[1] = Ib
    out[2] = Rb
    out[3] = Db
    out[4] = Sr
    out[5] = Ir
    out[6] = Rr
    out[7] = Dr
    out[OUT_T_END] = t_end
    out[OUT_T_KIN_END] = t_kin_end
    out[OUT_T_PEAK_IB] = t_peak_ib
    out[OUT_T_PEAK_IR] = t_peak_ir
    out[OUT_STOP_CODE] = stop_code
    out[OUT_CONS_ERR] = cons_err
    out[OUT_MIN_LEVEL] = min_level
    out[OUT_FAIL_TIME] = fail_t
    out[OUT_N_STEPS] = step
    out[OUT_N_RECORDED] = nrec
    return out
