"""Pure-Python tick kernel; same contract as the compiled ``_simcore.tick``."""

EPS = 1e-9


def tick(t_end, green, lane_len, lane_cap, lane_count, lane_slots, lane_timer,
         veh_pos, veh_speed, veh_lane, route_lanes, route_ptr, route_end, veh_finish,
         v_max, jam, headway, dt, out_moves, out_finished):
    """Advance every lane by one tick: car-following, then stop-line departures.

    Returns ``(n_moves, n_finished)``; rows ``out_moves[:n_moves]`` are
    ``(vehicle, from_lane, to_lane)`` and ``out_finished[:n_finished]`` the
    vehicles that left the network.
    """
    n_lanes = lane_count.shape[0]
    step = v_max * dt
    counts = lane_count.tolist()

    for k in range(n_lanes):
        n = counts[k]
        if n == 0:
            continue
        slots = lane_slots[k]
        limit = lane_len[k]
        for i in range(n):
            v = slots[i]
            p = veh_pos[v]
            adv = limit - p
            if adv > step:
                adv = step
            if adv < 0.0:
                adv = 0.0
            p += adv
            veh_pos[v] = p
            veh_speed[v] = adv / dt
            limit = p - jam

    n_moves = 0
    n_fin = 0
    for k in range(n_lanes):
        lane_timer[k] += dt
        n = counts[k]
        if n == 0:
            continue
        v = lane_slots[k, 0]
        if veh_pos[v] < lane_len[k] - EPS:
            continue
        ptr = route_ptr[v]
        if ptr + 1 >= route_end[v]:
            lane_slots[k, : n - 1] = lane_slots[k, 1:n]
            counts[k] = n - 1
            veh_finish[v] = t_end
            veh_lane[v] = -1
            out_finished[n_fin] = v
            n_fin += 1
            continue
        if not green[k] or lane_timer[k] < headway - EPS:
            continue
        nxt = route_lanes[ptr + 1]
        m = counts[nxt]
        if m >= lane_cap[nxt]:
            continue
        if m > 0 and veh_pos[lane_slots[nxt, m - 1]] < jam - EPS:
            continue
        lane_slots[k, : n - 1] = lane_slots[k, 1:n]
        counts[k] = n - 1
        lane_slots[nxt, m] = v
        counts[nxt] = m + 1
        veh_pos[v] = 0.0
        veh_speed[v] = v_max
        veh_lane[v] = nxt
        route_ptr[v] = ptr + 1
        lane_timer[k] = 0.0
        out_moves[n_moves, 0] = v
        out_moves[n_moves, 1] = k
        out_moves[n_moves, 2] = nxt
        n_moves += 1

    lane_count[:] = counts
    return n_moves, n_fin
