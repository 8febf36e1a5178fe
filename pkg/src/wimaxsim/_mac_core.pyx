# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled MAC frame loop.

Array-based mirror of `_mac_core_py.simulate_mac`; see that module for the
full semantics and the event-ordering contract. Every floating-point
expression here matches the reference implementation operation for
operation, so the two kernels emit bit-identical completion times.
"""

import numpy as np

IN_FLIGHT = 0
DELIVERED = 1
DROP_OVERFLOW = 2
DROP_DEADLINE = 3
DROP_OUTAGE = 4

cdef enum:
    _IN_FLIGHT = 0
    _DELIVERED = 1
    _DROP_OVERFLOW = 2
    _DROP_DEADLINE = 3
    _DROP_OUTAGE = 4


def simulate_mac(
    double[::1] arrival_ms,
    long long[::1] size_bytes,
    int[::1] flow_of,
    double[::1] latency_ms,
    long long[::1] queue_cap_bytes,
    double[::1] max_sustained_bps,
    double[::1] min_reserved_bps,
    int[::1] class_rank,
    int[::1] group_members,
    int[::1] group_offsets,
    int[::1] group_class,
    long long n_frames,
    double frame_ms,
    double duration_ms,
    double rate_bps,
    long long capacity_bits,
    int deliver_status,
    signed char[::1] status_out,
    double[::1] done_ms_out,
):
    cdef Py_ssize_t n_packets = arrival_ms.shape[0]
    cdef Py_ssize_t n_flows = latency_ms.shape[0]
    cdef Py_ssize_t n_groups = group_class.shape[0]

    # Per-flow FIFO queues of packet indices live in one backing buffer,
    # sliced by each flow's total packet count.
    qoff_arr = np.zeros(n_flows + 1, dtype=np.int64)
    cdef long long[::1] qoff = qoff_arr
    cdef Py_ssize_t i
    for i in range(n_packets):
        qoff[flow_of[i] + 1] += 1
    cdef Py_ssize_t f
    for f in range(n_flows):
        qoff[f + 1] += qoff[f]

    qbuf_arr = np.zeros(n_packets, dtype=np.int64)
    qh_arr = np.zeros(n_flows, dtype=np.int64)
    qt_arr = np.zeros(n_flows, dtype=np.int64)
    queued_arr = np.zeros(n_flows, dtype=np.int64)
    head_sent_arr = np.zeros(n_flows, dtype=np.float64)
    g_bits_arr = np.zeros(n_flows, dtype=np.float64)
    cdef long long[::1] qbuf = qbuf_arr
    cdef long long[::1] qh = qh_arr
    cdef long long[::1] qt = qt_arr
    cdef long long[::1] queued_bytes = queued_arr
    cdef double[::1] head_sent = head_sent_arr
    cdef double[::1] g_bits = g_bits_arr

    cdef Py_ssize_t ap = 0
    cdef long long k
    cdef double t, remaining, cap, reserve, grant, backlog, extra, headroom
    cdef double cursor, need, send
    cdef Py_ssize_t g, gbase, gsize, start, jj, s, j, w, r
    cdef int rank

    for k in range(n_frames):
        t = k * frame_ms

        while ap < n_packets and arrival_ms[ap] < t:
            f = flow_of[ap]
            if queued_bytes[f] + size_bytes[ap] > queue_cap_bytes[f]:
                status_out[ap] = _DROP_OVERFLOW
                done_ms_out[ap] = arrival_ms[ap]
            else:
                qbuf[qoff[f] + qt[f]] = ap
                qt[f] += 1
                queued_bytes[f] += size_bytes[ap]
            ap += 1

        # Deadline expiry: drop the expired prefix of each flow's waiting
        # packets; a head packet mid-transmission is committed and stays.
        for f in range(n_flows):
            if latency_ms[f] < 0.0:
                continue
            s = qh[f]
            if head_sent[f] > 0.0:
                s += 1
            j = s
            while j < qt[f]:
                i = qbuf[qoff[f] + j]
                if arrival_ms[i] + latency_ms[f] < t:
                    status_out[i] = _DROP_DEADLINE
                    done_ms_out[i] = t
                    queued_bytes[f] -= size_bytes[i]
                    j += 1
                else:
                    break
            if j > s:
                if s == qh[f]:
                    qh[f] = j
                else:
                    w = s
                    r = j
                    while r < qt[f]:
                        qbuf[qoff[f] + w] = qbuf[qoff[f] + r]
                        w += 1
                        r += 1
                    qt[f] = w

        while ap < n_packets and arrival_ms[ap] == t:
            f = flow_of[ap]
            if queued_bytes[f] + size_bytes[ap] > queue_cap_bytes[f]:
                status_out[ap] = _DROP_OVERFLOW
                done_ms_out[ap] = arrival_ms[ap]
            else:
                qbuf[qoff[f] + qt[f]] = ap
                qt[f] += 1
                queued_bytes[f] += size_bytes[ap]
            ap += 1

        if capacity_bits <= 0:
            continue

        # Grant phases, mirroring mac.schedule_frame: UGS fixed grants,
        # then reserved-rate guarantees of the polled classes, then their
        # backlog top-ups, then BE leftovers.
        remaining = <double>capacity_bits
        for g in range(n_groups):
            if group_class[g] != 0:
                continue
            gbase = group_offsets[g]
            gsize = group_offsets[g + 1] - gbase
            start = k % gsize
            for jj in range(gsize):
                f = group_members[gbase + ((start + jj) % gsize)]
                cap = max_sustained_bps[f] * frame_ms / 1000.0
                grant = cap
                if remaining < grant:
                    grant = remaining
                g_bits[f] = grant
                remaining = remaining - grant
        for rank in range(1, 4):
            for g in range(n_groups):
                if group_class[g] != rank:
                    continue
                gbase = group_offsets[g]
                gsize = group_offsets[g + 1] - gbase
                start = k % gsize
                for jj in range(gsize):
                    f = group_members[gbase + ((start + jj) % gsize)]
                    cap = max_sustained_bps[f] * frame_ms / 1000.0
                    reserve = min_reserved_bps[f] * frame_ms / 1000.0
                    backlog = <double>(8 * queued_bytes[f]) - head_sent[f]
                    grant = backlog
                    if reserve < grant:
                        grant = reserve
                    if cap < grant:
                        grant = cap
                    if remaining < grant:
                        grant = remaining
                    g_bits[f] = grant
                    remaining = remaining - grant
        for rank in range(1, 4):
            for g in range(n_groups):
                if group_class[g] != rank:
                    continue
                gbase = group_offsets[g]
                gsize = group_offsets[g + 1] - gbase
                start = k % gsize
                for jj in range(gsize):
                    f = group_members[gbase + ((start + jj) % gsize)]
                    cap = max_sustained_bps[f] * frame_ms / 1000.0
                    backlog = <double>(8 * queued_bytes[f]) - head_sent[f]
                    extra = backlog - g_bits[f]
                    headroom = cap - g_bits[f]
                    if headroom < extra:
                        extra = headroom
                    if remaining < extra:
                        extra = remaining
                    g_bits[f] = g_bits[f] + extra
                    remaining = remaining - extra
        for g in range(n_groups):
            if group_class[g] != 4:
                continue
            gbase = group_offsets[g]
            gsize = group_offsets[g + 1] - gbase
            start = k % gsize
            for jj in range(gsize):
                f = group_members[gbase + ((start + jj) % gsize)]
                cap = max_sustained_bps[f] * frame_ms / 1000.0
                backlog = <double>(8 * queued_bytes[f]) - head_sent[f]
                grant = backlog
                if cap < grant:
                    grant = cap
                if remaining < grant:
                    grant = remaining
                g_bits[f] = grant
                remaining = remaining - grant

        # Transmission drain: one serial downlink burst per frame, flows in
        # service order, packets completing when their last bit is granted.
        cursor = t
        for g in range(n_groups):
            gbase = group_offsets[g]
            gsize = group_offsets[g + 1] - gbase
            start = k % gsize
            for jj in range(gsize):
                f = group_members[gbase + ((start + jj) % gsize)]
                grant = g_bits[f]
                while grant > 0.0 and qh[f] < qt[f]:
                    i = qbuf[qoff[f] + qh[f]]
                    need = <double>(8 * size_bytes[i]) - head_sent[f]
                    send = need if need < grant else grant
                    cursor = cursor + send / rate_bps * 1000.0
                    grant = grant - send
                    if send == need:
                        status_out[i] = <signed char>deliver_status
                        done_ms_out[i] = cursor
                        queued_bytes[f] -= size_bytes[i]
                        head_sent[f] = 0.0
                        qh[f] += 1
                    else:
                        head_sent[f] = head_sent[f] + send

    while ap < n_packets and arrival_ms[ap] < duration_ms:
        f = flow_of[ap]
        if queued_bytes[f] + size_bytes[ap] > queue_cap_bytes[f]:
            status_out[ap] = _DROP_OVERFLOW
            done_ms_out[ap] = arrival_ms[ap]
        else:
            qbuf[qoff[f] + qt[f]] = ap
            qt[f] += 1
            queued_bytes[f] += size_bytes[ap]
        ap += 1
