# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled tick kernel; mirrors ``_simcore_py.tick`` operation for operation."""

cdef double EPS = 1e-9


def tick(double t_end,
         const unsigned char[::1] green,
         const double[::1] lane_len,
         const int[::1] lane_cap,
         int[::1] lane_count,
         int[:, ::1] lane_slots,
         double[::1] lane_timer,
         double[::1] veh_pos,
         double[::1] veh_speed,
         int[::1] veh_lane,
         const int[::1] route_lanes,
         int[::1] route_ptr,
         const int[::1] route_end,
         double[::1] veh_finish,
         double v_max, double jam, double headway, double dt,
         int[:, ::1] out_moves,
         int[::1] out_finished):
    cdef Py_ssize_t n_lanes = lane_count.shape[0]
    cdef Py_ssize_t k, i, j
    cdef int n, m, v, ptr, nxt
    cdef double step = v_max * dt
    cdef double limit, p, adv
    cdef int n_moves = 0
    cdef int n_fin = 0

    for k in range(n_lanes):
        n = lane_count[k]
        limit = lane_len[k]
        for i in range(n):
            v = lane_slots[k, i]
            p = veh_pos[v]
            adv = limit - p
            if adv > step:
                adv = step
            if adv < 0.0:
                adv = 0.0
            p = p + adv
            veh_pos[v] = p
            veh_speed[v] = adv / dt
            limit = p - jam

    for k in range(n_lanes):
        lane_timer[k] += dt
        n = lane_count[k]
        if n == 0:
            continue
        v = lane_slots[k, 0]
        if veh_pos[v] < lane_len[k] - EPS:
            continue
        ptr = route_ptr[v]
        if ptr + 1 >= route_end[v]:
            for j in range(n - 1):
                lane_slots[k, j] = lane_slots[k, j + 1]
            lane_count[k] = n - 1
            veh_finish[v] = t_end
            veh_lane[v] = -1
            out_finished[n_fin] = v
            n_fin += 1
            continue
        if not green[k] or lane_timer[k] < headway - EPS:
            continue
        nxt = route_lanes[ptr + 1]
        m = lane_count[nxt]
        if m >= lane_cap[nxt]:
            continue
        if m > 0 and veh_pos[lane_slots[nxt, m - 1]] < jam - EPS:
            continue
        for j in range(n - 1):
            lane_slots[k, j] = lane_slots[k, j + 1]
        lane_count[k] = n - 1
        lane_slots[nxt, m] = v
        lane_count[nxt] = m + 1
        veh_pos[v] = 0.0
        veh_speed[v] = v_max
        veh_lane[v] = nxt
        route_ptr[v] = ptr + 1
        lane_timer[k] = 0.0
        out_moves[n_moves, 0] = v
        out_moves[n_moves, 1] = k
        out_moves[n_moves, 2] = nxt
        n_moves += 1

    return n_moves, n_fin
