"""Service-class QoS validation, queueing and the per-frame grant policy."""

import random

import pytest

from wimaxsim import mac
from wimaxsim.mac import Packet, QosParams, ServiceClass, ServiceFlow

FRAME_MS = 5.0


def make_flow(flow_id, cls, max_sustained, *, reserved=None, latency=None,
              jitter=None, priority=None, capacity=10**9):
    qos = mac.qos_for_class(
        cls,
        max_sustained,
        min_reserved_rate_bps=reserved,
        max_latency_ms=latency,
        tolerated_jitter_ms=jitter,
        traffic_priority=priority,
    )
    return ServiceFlow(id=flow_id, service_class=cls, qos=qos,
                       queue_capacity_bytes=capacity)


def fill_backlog(flow, bits, now_ms=0.0):
    """Queue one packet carrying exactly `bits` (must be a multiple of 8)."""
    assert bits % 8 == 0
    pkt = Packet(id=0, flow_id=flow.id, size_bytes=bits // 8,
                 created_at_ms=now_ms, fragment_of_frame=0)
    assert mac.enqueue_packet(flow, pkt, now_ms)
    return pkt


class TestApplicabilityMatrix:
    def test_valid_parameter_sets(self):
        ok_cases = [
            (ServiceClass.UGS,
             QosParams(1e6, None, 400.0, 50.0, None)),
            (ServiceClass.ERTPS,
             QosParams(1e6, 2e5, 400.0, None, None)),
            (ServiceClass.RTPS,
             QosParams(1e6, 2e5, 400.0, None, None)),
            (ServiceClass.NRTPS,
             QosParams(1e6, 2e5, None, None, 3)),
            (ServiceClass.BE,
             QosParams(1e6, None, None, None, 0)),
        ]
        for cls, qos in ok_cases:
            assert mac.validate_flow(cls, qos) == []

    def test_ugs_rejects_min_reserved(self):
        qos = QosParams(1e6, 5e5, 400.0, 50.0, None)
        problems = mac.validate_flow(ServiceClass.UGS, qos)
        assert any("min_reserved" in p for p in problems)

    def test_be_rejects_min_reserved_and_latency(self):
        qos = QosParams(1e6, 5e5, 400.0, None, 0)
        problems = mac.validate_flow(ServiceClass.BE, qos)
        assert any("min_reserved" in p for p in problems)
        assert any("max_latency" in p for p in problems)

    def test_missing_required_fields_reported(self):
        problems = mac.validate_flow(ServiceClass.RTPS, QosParams(1e6))
        assert any("requires min_reserved_rate_bps" in p for p in problems)
        assert any("requires max_latency_ms" in p for p in problems)

    def test_nrtps_rejects_latency(self):
        qos = QosParams(1e6, 2e5, 400.0, None, 1)
        assert any(
            "max_latency" in p for p in mac.validate_flow(ServiceClass.NRTPS, qos)
        )

    def test_value_range_checks(self):
        assert mac.validate_flow(ServiceClass.BE, QosParams(0.0, traffic_priority=0))
        bad_reserve = QosParams(1e6, 2e6, 400.0, None, None)
        assert any(
            "exceed" in p for p in mac.validate_flow(ServiceClass.RTPS, bad_reserve)
        )
        bad_latency = QosParams(1e6, 2e5, 0.0, None, None)
        assert mac.validate_flow(ServiceClass.RTPS, bad_latency)
        assert mac.validate_flow(
            ServiceClass.BE, QosParams(1e6, traffic_priority=-1)
        )


class TestQosForClass:
    def test_keeps_only_applicable_fields(self):
        qos = mac.qos_for_class(
            ServiceClass.UGS, 1e6,
            min_reserved_rate_bps=5e5, max_latency_ms=300.0,
            tolerated_jitter_ms=40.0, traffic_priority=5,
        )
        assert qos.min_reserved_rate_bps is None
        assert qos.traffic_priority is None
        assert qos.max_latency_ms == 300.0
        assert qos.tolerated_jitter_ms == 40.0

    def test_fills_required_defaults(self):
        qos = mac.qos_for_class(ServiceClass.RTPS, 1e6)
        assert qos.min_reserved_rate_bps == 0.0
        assert qos.max_latency_ms == mac.DEFAULT_MAX_LATENCY_MS
        be = mac.qos_for_class(ServiceClass.BE, 1e6)
        assert be.traffic_priority == mac.DEFAULT_TRAFFIC_PRIORITY

    def test_every_class_produces_a_valid_flow(self):
        for cls in ServiceClass:
            qos = mac.qos_for_class(
                cls, 2e6,
                min_reserved_rate_bps=1e6, max_latency_ms=400.0,
                tolerated_jitter_ms=50.0, traffic_priority=2,
            )
            assert mac.validate_flow(cls, qos) == []


class TestQueueing:
    def test_admission_within_capacity(self):
        flow = make_flow("v", ServiceClass.RTPS, 1e6, reserved=0.0,
                         latency=400.0, capacity=10**6)
        pkt = Packet(id=1, flow_id="v", size_bytes=1460, created_at_ms=0.0,
                     fragment_of_frame=0)
        assert mac.enqueue_packet(flow, pkt, 0.0)
        assert flow.queued_bytes == 1460

    def test_exact_fit_accepted_one_byte_over_dropped(self):
        flow = make_flow("v", ServiceClass.BE, 1e6, capacity=2920)
        first = Packet(id=1, flow_id="v", size_bytes=1460, created_at_ms=0.0,
                       fragment_of_frame=0)
        second = Packet(id=2, flow_id="v", size_bytes=1460, created_at_ms=0.0,
                        fragment_of_frame=0)
        third = Packet(id=3, flow_id="v", size_bytes=1, created_at_ms=0.0,
                       fragment_of_frame=0)
        assert mac.enqueue_packet(flow, first, 0.0)
        assert mac.enqueue_packet(flow, second, 0.0)
        assert not mac.enqueue_packet(flow, third, 0.0)
        assert flow.queued_bytes == 2920

    def test_deadline_stamped_from_latency(self):
        flow = make_flow("v", ServiceClass.RTPS, 1e6, reserved=0.0, latency=400.0)
        pkt = fill_backlog(flow, 8 * 1000, now_ms=100.0)
        assert pkt.deadline_ms == 500.0
        assert pkt.enqueued_at_ms == 100.0

    def test_no_deadline_without_latency_bound(self):
        flow = make_flow("b", ServiceClass.BE, 1e6)
        pkt = fill_backlog(flow, 8 * 1000, now_ms=100.0)
        assert pkt.deadline_ms is None
        assert mac.expire_deadlines(flow, 1e9) == []

    def test_expiry_is_strictly_after_deadline(self):
        def flow_with_deadline_500():
            flow = make_flow("v", ServiceClass.RTPS, 1e6, reserved=0.0,
                             latency=400.0)
            fill_backlog(flow, 800, now_ms=100.0)
            return flow

        assert mac.expire_deadlines(flow_with_deadline_500(), 450.0) == []
        assert mac.expire_deadlines(flow_with_deadline_500(), 500.0) == []
        dropped = mac.expire_deadlines(flow_with_deadline_500(), 501.0)
        assert [p.id for p in dropped] == [0]

    def test_expiry_removes_prefix_and_updates_bytes(self):
        flow = make_flow("v", ServiceClass.RTPS, 1e6, reserved=0.0, latency=100.0)
        for i, t in enumerate((0.0, 10.0, 300.0)):
            pkt = Packet(id=i, flow_id="v", size_bytes=100, created_at_ms=t,
                         fragment_of_frame=i)
            assert mac.enqueue_packet(flow, pkt, t)
        dropped = mac.expire_deadlines(flow, 200.0)
        assert [p.id for p in dropped] == [0, 1]
        assert flow.queued_bytes == 100
        assert [p.id for p in flow.queue] == [2]

    def test_in_service_head_is_committed(self):
        flow = make_flow("v", ServiceClass.RTPS, 1e6, reserved=0.0, latency=100.0)
        for i in range(2):
            pkt = Packet(id=i, flow_id="v", size_bytes=100, created_at_ms=0.0,
                         fragment_of_frame=i)
            assert mac.enqueue_packet(flow, pkt, 0.0)
        flow.head_bits_sent = 8.0  # one byte already on the air
        dropped = mac.expire_deadlines(flow, 500.0)
        assert [p.id for p in dropped] == [1]
        assert [p.id for p in flow.queue] == [0]

    def test_fifo_order(self):
        flow = make_flow("v", ServiceClass.BE, 1e6)
        for i in range(5):
            pkt = Packet(id=i, flow_id="v", size_bytes=10, created_at_ms=float(i),
                         fragment_of_frame=i)
            assert mac.enqueue_packet(flow, pkt, float(i))
        assert [p.id for p in flow.queue] == [0, 1, 2, 3, 4]

    def test_packet_size_must_be_positive(self):
        with pytest.raises(ValueError):
            Packet(id=0, flow_id="v", size_bytes=0, created_at_ms=0.0,
                   fragment_of_frame=0)


class TestScheduleExamples:
    def test_worked_three_class_frame(self):
        # 20 000 bits of capacity; a UGS flow rated for 6000 bits/frame,
        # rtPS and nrtPS each 10 000 bits behind: 6000 / 10 000 / 4000.
        ugs = make_flow("ugs", ServiceClass.UGS, 6000 / FRAME_MS * 1000.0)
        rtps = make_flow("rtps", ServiceClass.RTPS, 4e6, reserved=0.0)
        nrtps = make_flow("nrtps", ServiceClass.NRTPS, 4e6, reserved=0.0)
        fill_backlog(rtps, 10_000)
        fill_backlog(nrtps, 10_000)
        grants = mac.schedule_frame([ugs, rtps, nrtps], 20_000, FRAME_MS)
        assert grants["ugs"] == pytest.approx(6000.0)
        assert grants["rtps"] == pytest.approx(10_000.0)
        assert grants["nrtps"] == pytest.approx(4000.0)

    def test_zero_capacity_grants_nothing(self):
        flows = [
            make_flow("ugs", ServiceClass.UGS, 1e6),
            make_flow("be", ServiceClass.BE, 1e6),
        ]
        fill_backlog(flows[1], 8000)
        grants = mac.schedule_frame(flows, 0, FRAME_MS)
        assert all(g == 0.0 for g in grants.values())

    def test_single_be_flow_takes_its_backlog(self):
        be = make_flow("be", ServiceClass.BE, 8000 / FRAME_MS * 1000.0)
        fill_backlog(be, 5000 - 5000 % 8 + 8)  # one 626 B packet = 5008 bits
        be2 = make_flow("be2", ServiceClass.BE, 8000 / FRAME_MS * 1000.0)
        fill_backlog(be2, 5000)  # exactly 625 B
        grants = mac.schedule_frame([be2], 20_000, FRAME_MS)
        assert grants["be2"] == pytest.approx(5000.0)
        # And the max_sustained share caps it once backlog exceeds the share.
        fill_backlog(be, 8000, now_ms=1.0)
        grants = mac.schedule_frame([be], 20_000, FRAME_MS)
        assert grants["be"] == pytest.approx(8000.0)

    def test_ugs_grant_ignores_backlog(self):
        ugs = make_flow("ugs", ServiceClass.UGS, 1.2e6)
        for frame in range(4):
            grants = mac.schedule_frame([ugs], 20_000, FRAME_MS)
            assert grants["ugs"] == pytest.approx(6000.0)

    def test_reservation_precedes_lower_class_topup(self):
        # nrtPS's reserved share must survive an rtPS flow able to absorb
        # the entire frame.
        rtps = make_flow("rtps", ServiceClass.RTPS, 1e8, reserved=0.0)
        nrtps = make_flow("nrtps", ServiceClass.NRTPS, 1e8,
                          reserved=4000 / FRAME_MS * 1000.0)
        fill_backlog(rtps, 100_000)
        fill_backlog(nrtps, 100_000)
        grants = mac.schedule_frame([rtps, nrtps], 10_000, FRAME_MS)
        assert grants["nrtps"] == pytest.approx(4000.0)
        assert grants["rtps"] == pytest.approx(6000.0)

    def test_priority_dominance_starves_be(self):
        rtps = make_flow("rtps", ServiceClass.RTPS, 1e8, reserved=0.0)
        be = make_flow("be", ServiceClass.BE, 1e8)
        fill_backlog(rtps, 50_000)
        fill_backlog(be, 50_000)
        grants = mac.schedule_frame([rtps, be], 20_000, FRAME_MS)
        assert grants["rtps"] == pytest.approx(20_000.0)
        assert grants["be"] == 0.0

    def test_input_validation(self):
        with pytest.raises(ValueError):
            mac.schedule_frame([], -1, FRAME_MS)
        with pytest.raises(ValueError):
            mac.schedule_frame([], 1000, 0.0)


def random_flow_set(rng):
    flows = []
    for i in range(rng.randrange(1, 6)):
        cls = rng.choice(list(ServiceClass))
        max_rate = rng.uniform(1e5, 8e6)
        flow = make_flow(
            f"f{i}", cls, max_rate,
            reserved=rng.uniform(0.0, max_rate),
            latency=rng.uniform(50.0, 500.0),
            jitter=rng.uniform(10.0, 100.0),
            priority=rng.randrange(0, 8),
        )
        if rng.random() < 0.8:
            fill_backlog(flow, 8 * rng.randrange(1, 8000))
        flows.append(flow)
    return flows


class TestScheduleProperties:
    def test_grants_conserve_capacity_and_stay_bounded(self):
        rng = random.Random(0xABCD)
        for _ in range(300):
            flows = random_flow_set(rng)
            capacity = rng.randrange(0, 60_000)
            grants = mac.schedule_frame(flows, capacity, FRAME_MS)
            total = sum(grants.values())
            assert total <= capacity + 1e-6
            for flow in flows:
                grant = grants[flow.id]
                share = flow.qos.max_sustained_rate_bps * FRAME_MS / 1000.0
                assert grant >= 0.0
                assert grant <= share + 1e-6
                if flow.service_class is not ServiceClass.UGS:
                    assert grant <= flow.backlog_bits() + 1e-6

    def test_work_conservation_without_ugs(self):
        rng = random.Random(0x5EED)
        for _ in range(200):
            flows = [
                f for f in random_flow_set(rng)
                if f.service_class is not ServiceClass.UGS
            ]
            if not flows:
                continue
            # Make the rate caps irrelevant so only backlog and capacity bind.
            flows = [
                make_flow(f.id, f.service_class, 1e12,
                          reserved=f.qos.min_reserved_rate_bps,
                          latency=f.qos.max_latency_ms,
                          jitter=f.qos.tolerated_jitter_ms,
                          priority=f.qos.traffic_priority)
                for f in flows
            ]
            backlogs = [8 * rng.randrange(1, 4000) for _ in flows]
            for flow, bits in zip(flows, backlogs):
                fill_backlog(flow, bits)
            total_backlog = sum(backlogs)
            capacity = rng.randrange(1, 80_000)
            grants = mac.schedule_frame(flows, capacity, FRAME_MS)
            expected = min(float(capacity), float(total_backlog))
            assert sum(grants.values()) == pytest.approx(expected, abs=1e-6)

    def test_grants_monotone_in_capacity(self):
        rng = random.Random(0xCAFE)
        for _ in range(200):
            flows = random_flow_set(rng)
            big = rng.randrange(1, 60_000)
            small = rng.randrange(0, big)
            at_big = mac.schedule_frame(flows, big, FRAME_MS)
            at_small = mac.schedule_frame(flows, small, FRAME_MS)
            for flow in flows:
                assert at_small[flow.id] <= at_big[flow.id] + 1e-9

    def test_ugs_constant_across_backlog_changes(self):
        rng = random.Random(0xF00D)
        for _ in range(100):
            rate = rng.uniform(1e5, 2e6)
            ugs = make_flow("u", ServiceClass.UGS, rate)
            empty = mac.schedule_frame([ugs], 10**6, FRAME_MS)["u"]
            fill_backlog(ugs, 8 * rng.randrange(1, 10_000))
            backlogged = mac.schedule_frame([ugs], 10**6, FRAME_MS)["u"]
            assert empty == backlogged == pytest.approx(rate * FRAME_MS / 1000.0)
