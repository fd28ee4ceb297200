import pytest

from conftest import ring_section, service_section
from metrotwin.controlplane import (ConnectivityRequirements, NsDescriptor,
                                    OrchestrationStack, ServiceStatus,
                                    VnfDescriptor, check_channel_exclusivity,
                                    check_no_light_loop, trace_channel_light)
from metrotwin.errors import IllegalTransition, IncompleteRecord
from metrotwin.simkernel import Kernel, SECOND, SimRng
from metrotwin.topology import TransponderState, build_ring


def descriptor(endpoints=("tp1", "tp2"), computes=("edge1", "edge2"),
               vcpu=4, mean_s=40.0):
    return NsDescriptor(
        name="slice-under-test",
        vnfs=[VnfDescriptor(name="csm-analytics", vcpu=vcpu,
                            instantiation_mean_s=mean_s, target_compute=computes[0]),
              VnfDescriptor(name="css-dm", vcpu=vcpu,
                            instantiation_mean_s=mean_s, target_compute=computes[1])],
        connectivity=ConnectivityRequirements(endpoints=tuple(endpoints)))


def fresh_stack(section=None, jitter=False):
    topo = build_ring(section or ring_section())
    kernel = Kernel()
    stack = OrchestrationStack(topo, kernel, SimRng(0), jitter=jitter)
    return topo, kernel, stack


def deploy(stack, kernel, ns=None):
    rec = stack.request_network_service(ns or descriptor())
    kernel.run_to_end()
    return rec


S = SECOND


def test_workflow_timestamps_without_jitter():
    _, kernel, stack = fresh_stack()
    rec = deploy(stack, kernel)
    ts = rec.timestamps
    assert rec.status is ServiceStatus.ACTIVE
    assert (ts.t_request, ts.t_vnfs_started) == (0, 0)
    assert ts.t_vnfs_ready == ts.t_conn_requested == 40 * S
    assert ts.t_roadms_configured == 48 * S  # 2 s messaging + 3 x 2 s configs
    assert ts.t_transponders_configured == 50 * S
    assert ts.t_path_operational == 175 * S
    assert ts.t_probe_verified == ts.t_monitoring_active == 177 * S


def test_kpis_from_record():
    _, kernel, stack = fresh_stack()
    rec = deploy(stack, kernel)
    kpis = stack.compute_kpis(rec)
    assert kpis.kpi_ns_deploy_ns == 40 * S
    assert kpis.kpi_connectivity_ns == 135 * S
    assert kpis.kpi_e2e_ns == 177 * S
    assert kpis.e2e_excl_transponder_ns == 50 * S


def test_kpis_refuse_incomplete_record():
    _, kernel, stack = fresh_stack()
    rec = stack.request_network_service(descriptor())
    kernel.run_until(30 * S)  # VNFs still instantiating
    with pytest.raises(IncompleteRecord):
        stack.compute_kpis(rec)


def test_path_choice_and_channel():
    topo, kernel, stack = fresh_stack()
    rec = deploy(stack, kernel)
    assert rec.path.links == ("r1-r2",)  # fewest hops wins over total length
    assert rec.channel == 0
    assert topo.transponders["tp1"].claimed_by == rec.request_id
    assert stack.channel_ledger == {("r1-r2", 0): rec.request_id}


def test_blockers_keep_light_on_the_arc():
    topo, kernel, stack = fresh_stack()
    rec = deploy(stack, kernel)
    hops, drops, looped = trace_channel_light(topo, "roadm1", "r1-r2", 0)
    assert not looped
    assert drops == ["roadm2"]
    assert [h[0] for h in hops] == ["r1-r2"]  # terminal blocks stop the ring
    assert stack.verify_invariants() == []


def test_placement_failure_keeps_capacity():
    topo, kernel, stack = fresh_stack()
    before = topo.compute_nodes["edge1"].vcpu_free
    rec = deploy(stack, kernel, descriptor(vcpu=1000))
    assert rec.status is ServiceStatus.FAILED
    assert "capacity" in rec.failure_reason
    assert topo.compute_nodes["edge1"].vcpu_free == before


def test_vnfs_instantiate_in_parallel():
    _, kernel, stack = fresh_stack()
    ns = descriptor()
    ns.vnfs[1].instantiation_mean_s = 25.0
    rec = deploy(stack, kernel, ns)
    # ready when the slowest one lands, not the sum
    assert rec.timestamps.t_vnfs_ready == 40 * S


def test_transponder_unavailable_fails_second_service():
    topo, kernel, stack = fresh_stack()
    first = deploy(stack, kernel)
    assert first.status is ServiceStatus.ACTIVE
    second = deploy(stack, kernel, descriptor())
    assert second.status is ServiceStatus.FAILED
    assert "TransponderUnavailable" in second.failure_reason
    # the failed request must not have disturbed the running one
    assert stack.verify_invariants() == []
    cap = topo.compute_nodes["edge1"].vcpu_capacity
    assert topo.compute_nodes["edge1"].vcpu_free == cap - 4  # only first's share held


def four_endpoint_section():
    sec = ring_section()
    sec["transponders"] += [{"id": "tp3", "roadm": "roadm1"},
                            {"id": "tp4", "roadm": "roadm2"}]
    sec["switches"] += [{"id": "sw3", "transponder": "tp3"},
                        {"id": "sw4", "transponder": "tp4"}]
    sec["compute_nodes"] += [{"id": "edge3", "switch": "sw3"},
                             {"id": "edge4", "switch": "sw4"}]
    return sec


def test_second_service_gets_next_channel():
    topo, kernel, stack = fresh_stack(four_endpoint_section())
    a = deploy(stack, kernel)
    b = deploy(stack, kernel, descriptor(endpoints=("tp3", "tp4"),
                                         computes=("edge3", "edge4")))
    assert a.status is ServiceStatus.ACTIVE and b.status is ServiceStatus.ACTIVE
    assert a.channel == 0 and b.channel == 1
    assert check_channel_exclusivity(stack) == []
    assert check_no_light_loop(stack) == []


def test_channel_exhaustion():
    sec = four_endpoint_section()
    sec["channel_grid_size"] = 1
    _, kernel, stack = fresh_stack(sec)
    a = deploy(stack, kernel)
    b = deploy(stack, kernel, descriptor(endpoints=("tp3", "tp4"),
                                         computes=("edge3", "edge4")))
    assert a.status is ServiceStatus.ACTIVE
    assert b.status is ServiceStatus.FAILED
    assert "ChannelExhausted" in b.failure_reason


def test_teardown_returns_everything():
    topo, kernel, stack = fresh_stack()
    rec = deploy(stack, kernel)
    stack.teardown(rec)
    assert rec.status is ServiceStatus.TORN_DOWN
    assert stack.channel_ledger == {}
    assert topo.compute_nodes["edge1"].vcpu_free == topo.compute_nodes["edge1"].vcpu_capacity
    assert topo.transponders["tp1"].state is TransponderState.OFF
    assert topo.transponders["tp1"].claimed_by is None
    assert all(not r.blocker_state for r in topo.roadms.values())
    # the ring is clean; an identical request succeeds again on channel 0
    again = deploy(stack, kernel, descriptor())
    assert again.status is ServiceStatus.ACTIVE and again.channel == 0


def test_restoration_moves_to_spare_arc():
    topo, kernel, stack = fresh_stack()
    rec = deploy(stack, kernel)
    assert stack.verify_invariants() == []
    alert_at = kernel.now()
    outcome = stack.handle_degradation_alert(rec, alert_at)
    assert rec.status is ServiceStatus.DEGRADED
    kernel.run_to_end()
    assert rec.status is ServiceStatus.RESTORED
    # 2 s messaging + 3 x 2 s rewrites + 2 s retune
    assert outcome.restored_at == alert_at + 10 * S
    assert outcome.failed_at is None
    assert set(rec.path.links) == {"r2-r3", "r3-r1"}
    assert rec.channel == 0  # same channel, complementary arc
    assert ("r1-r2", 0) not in stack.channel_ledger
    assert stack.verify_invariants() == []


def test_restoration_blocked_when_spare_arc_is_lit():
    sec = four_endpoint_section()
    sec["transponders"] += [{"id": "tp5", "roadm": "roadm3"}]
    sec["switches"] += [{"id": "sw5", "transponder": "tp5"}]
    sec["compute_nodes"] += [{"id": "edge5", "switch": "sw5"}]
    sec["channel_grid_size"] = 1
    _, kernel, stack = fresh_stack(sec)
    rec = deploy(stack, kernel)
    rival = deploy(stack, kernel, descriptor(endpoints=("tp4", "tp5"),
                                             computes=("edge4", "edge5")))
    assert rival.status is ServiceStatus.ACTIVE
    assert rival.path.links == ("r2-r3",)  # occupies channel 0 on the spare arc
    outcome = stack.handle_degradation_alert(rec, kernel.now())
    kernel.run_to_end()
    assert outcome.restored_at is None
    assert "busy" in outcome.reason
    assert rec.status is ServiceStatus.DEGRADED
    stack.notify_fail_crossing(rec, kernel.now())
    assert rec.status is ServiceStatus.FAILED
    assert outcome.failed_at == kernel.now()


def test_crossing_before_retune_means_failed():
    _, kernel, stack = fresh_stack()
    rec = deploy(stack, kernel)
    t0 = kernel.now()
    stack.handle_degradation_alert(rec, t0)
    kernel.schedule(lambda: stack.notify_fail_crossing(rec, kernel.now()),
                    t0 + 5 * S)  # mid-rewrite
    kernel.run_to_end()
    assert rec.status is ServiceStatus.FAILED
    assert rec.restoration.restored_at is None
    assert rec.restoration.failed_at == t0 + 5 * S


def test_status_transitions_are_guarded():
    _, kernel, stack = fresh_stack()
    rec = stack.request_network_service(descriptor())
    with pytest.raises(IllegalTransition):
        rec.transition(ServiceStatus.DEGRADED)  # Deploying cannot degrade
    kernel.run_to_end()
    rec.transition(ServiceStatus.DEGRADED)
    with pytest.raises(IllegalTransition):
        rec.transition(ServiceStatus.ACTIVE)  # no way back to Active


def test_forced_loop_is_caught():
    topo, kernel, stack = fresh_stack()
    deploy(stack, kernel)
    for roadm in topo.roadms.values():
        for link_id in topo.neighbors(roadm.id):
            roadm.set_blocker(link_id, 0, "pass")
    _, _, looped = trace_channel_light(topo, "roadm1", "r1-r2", 0)
    assert looped
    assert any("loop" in p for p in check_no_light_loop(stack))
