"""Pure-Python MAC frame loop; the reference kernel.

Drives the public mac-module operations (enqueue_packet, expire_deadlines,
schedule_frame) over real ServiceFlow objects, frame boundary by frame
boundary. The compiled extension `_mac_core` runs the same loop on flat
arrays; both kernels must fill identical output arrays for the same inputs,
including bit-identical completion times, so every arithmetic expression
here is mirrored operation for operation in the extension.

Event ordering at a boundary time t: packets that arrived strictly before t
are enqueued first, then deadline expiry runs, then arrivals at exactly t,
then scheduling and the transmission drain for the frame starting at t.
"""

from __future__ import annotations

from . import mac

# Packet fate codes shared with the compiled kernel and the engine.
IN_FLIGHT = 0
DELIVERED = 1
DROP_OVERFLOW = 2
DROP_DEADLINE = 3
DROP_OUTAGE = 4

_RANK_TO_CLASS = {rank: cls for cls, rank in mac.CLASS_RANK.items()}


def simulate_mac(
    arrival_ms,
    size_bytes,
    flow_of,
    latency_ms,
    queue_cap_bytes,
    max_sustained_bps,
    min_reserved_bps,
    class_rank,
    group_members,
    group_offsets,
    group_class,
    n_frames,
    frame_ms,
    duration_ms,
    rate_bps,
    capacity_bits,
    deliver_status,
    status_out,
    done_ms_out,
):
    """Run the downlink MAC over pre-expanded packet arrivals.

    Packet arrays are sorted by arrival time (ties by index). Per-flow
    latency is -1 for classes without a deadline bound, min_reserved is 0
    where inapplicable. Groups define the service order: one group per
    class (per traffic priority for nrtPS/BE), class-major, rotated by one
    position every frame for round-robin fairness. Results land in
    status_out (fate codes) and done_ms_out (completion or drop time).
    """
    arrivals = [float(v) for v in arrival_ms]
    sizes = [int(v) for v in size_bytes]
    flow_idx = [int(v) for v in flow_of]
    n_packets = len(arrivals)
    n_flows = len(latency_ms)

    flows = []
    for f in range(n_flows):
        rank = int(class_rank[f])
        latency = float(latency_ms[f])
        reserved = float(min_reserved_bps[f])
        qos = mac.QosParams(
            max_sustained_rate_bps=float(max_sustained_bps[f]),
            min_reserved_rate_bps=reserved if rank in (1, 2, 3) else None,
            max_latency_ms=latency if latency >= 0.0 else None,
        )
        flows.append(
            mac.ServiceFlow(
                id=str(f),
                service_class=_RANK_TO_CLASS[rank],
                qos=qos,
                queue_capacity_bytes=int(queue_cap_bytes[f]),
            )
        )

    packets = [
        mac.Packet(
            id=i,
            flow_id=str(flow_idx[i]),
            size_bytes=sizes[i],
            created_at_ms=arrivals[i],
            fragment_of_frame=0,
        )
        for i in range(n_packets)
    ]

    groups = []
    for g in range(len(group_class)):
        members = [
            int(group_members[j])
            for j in range(int(group_offsets[g]), int(group_offsets[g + 1]))
        ]
        groups.append(members)

    def enqueue(i: int) -> None:
        flow = flows[flow_idx[i]]
        if mac.enqueue_packet(flow, packets[i], arrivals[i]):
            return
        status_out[i] = DROP_OVERFLOW
        done_ms_out[i] = arrivals[i]

    ap = 0
    for k in range(n_frames):
        t = k * frame_ms
        while ap < n_packets and arrivals[ap] < t:
            enqueue(ap)
            ap += 1
        for flow in flows:
            for expired in mac.expire_deadlines(flow, t):
                status_out[expired.id] = DROP_DEADLINE
                done_ms_out[expired.id] = t
        while ap < n_packets and arrivals[ap] == t:
            enqueue(ap)
            ap += 1
        if capacity_bits <= 0:
            continue

        ordered = []
        for members in groups:
            start = k % len(members)
            for j in range(len(members)):
                ordered.append(flows[members[(start + j) % len(members)]])
        grants = mac.schedule_frame(ordered, capacity_bits, frame_ms)

        cursor = t
        for flow in ordered:
            grant = grants[flow.id]
            while grant > 0.0 and flow.queue:
                head = flow.queue[0]
                need = 8 * head.size_bytes - flow.head_bits_sent
                send = need if need < grant else grant
                cursor = cursor + send / rate_bps * 1000.0
                grant = grant - send
                if send == need:
                    status_out[head.id] = deliver_status
                    done_ms_out[head.id] = cursor
                    flow.queue.popleft()
                    flow.queued_bytes -= head.size_bytes
                    flow.head_bits_sent = 0.0
                else:
                    flow.head_bits_sent = flow.head_bits_sent + send

    # Arrivals after the last frame boundary still hit the buffers (and can
    # overflow); whatever stays queued is in flight at the end of the run.
    while ap < n_packets and arrivals[ap] < duration_ms:
        enqueue(ap)
        ap += 1
