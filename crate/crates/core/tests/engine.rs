use soen_core::devices::SomaSpec;
use soen_core::engine::{self, Event, EventKind, EventLog, EdgeLink, Network, SimConfig, Simulation};
use soen_core::layout::{place_system, ColumnSpec, TilingSpec, WaferSpec};
use soen_core::topology::{generate_random, Topology};

fn fires(log: &EventLog) -> Vec<(u32, u64)> {
    log.events
        .iter()
        .filter(|e| e.kind == EventKind::Fire)
        .map(|e| (e.src, e.time))
        .collect()
}

#[test]
fn single_photon_fires_after_latency_and_processing() {
    let topo = Topology::from_edges(1, &[], 1.0).unwrap();
    let cfg = SimConfig {
        stimulus_latency: 10e-9,
        ..SimConfig::default()
    };
    let net = Network::from_links(&topo, &[], cfg).unwrap();
    let log = engine::run(&net, &[Event::photon(0, 1, 0, 1)], 1_000_000).unwrap();
    assert_eq!(fires(&log), vec![(0, 10_050)]);
    assert_eq!(log.summary.spikes, 1);
    // Empty fan-out: the whole pulse is lost.
    assert_eq!(log.pulses[0].lost, log.pulses[0].emitted);
}

#[test]
fn no_stimulus_no_activity() {
    let topo = generate_random(50, 5, 3).unwrap();
    let links = vec![EdgeLink { efficiency: 0.5, latency_ps: 1000 }; topo.n_edges()];
    let net = Network::from_links(&topo, &links, SimConfig::default()).unwrap();
    let log = engine::run(&net, &[], 1_000_000_000).unwrap();
    assert!(log.events.is_empty());
    assert_eq!(log.final_weights, topo.weights());
}

fn two_neuron_loop(latency_ps: u64) -> Network {
    let topo = Topology::from_edges(2, &[(0, 1), (1, 0)], 1.0).unwrap();
    let links = vec![EdgeLink { efficiency: 1.0, latency_ps }; 2];
    let cfg = SimConfig {
        plasticity: false,
        soma: SomaSpec {
            refractory: 50e-9,
            ..SomaSpec::default()
        },
        ..SimConfig::default()
    };
    Network::from_links(&topo, &links, cfg).unwrap()
}

#[test]
fn two_neuron_loop_oscillates() {
    let latency = 30_000;
    let net = two_neuron_loop(latency);
    let log = engine::run(&net, &[Event::photon(0, 2, 0, 1)], 10_000_000).unwrap();
    let period = 2 * (latency + 50);
    for (n, times) in log.spike_times().iter().enumerate() {
        assert!(times.len() > 100, "neuron {n}: {} spikes", times.len());
        assert!(times.windows(2).all(|w| w[1] - w[0] == period), "neuron {n}");
    }
    let f = fires(&log);
    assert_eq!(f[0], (0, 50));
    assert_eq!(f[1], (1, 50 + latency + 50));
    assert_eq!(log.summary.throttled_emissions, 0);
}

#[test]
fn loop_faster_than_refractory_is_silenced_not_violated() {
    // Round trip of 20.1 ns is shorter than the 50 ns refractory period.
    let net = two_neuron_loop(10_000);
    let log = engine::run(&net, &[Event::photon(0, 2, 0, 1)], 10_000_000).unwrap();
    for times in log.spike_times() {
        assert!(times.windows(2).all(|w| w[1] - w[0] >= 50_000));
    }
}

fn small_network() -> (Network, Vec<Event>) {
    let mut topo = generate_random(200, 8, 9).unwrap();
    topo.set_uniform_weight(0.3);
    let placed = place_system(&topo, &WaferSpec::default(), &ColumnSpec::default(), &TilingSpec::default(), 9).unwrap();
    let net = Network::build(&topo, &placed, SimConfig::default()).unwrap();
    let stim = engine::poisson_stimulus(200, 2e6, 20_000_000, 5);
    (net, stim)
}

#[test]
fn repeated_step_equals_run() {
    let (net, stim) = small_network();
    let t_end = 20_000_000;
    let log = engine::run(&net, &stim, t_end).unwrap();
    assert!(log.summary.spikes > 0);

    let mut sim = Simulation::new(&net, &stim).unwrap();
    let mut last = 0;
    while sim.next_time().is_some_and(|t| t < t_end) {
        let e = sim.step().unwrap();
        assert!(e.time >= last);
        last = e.time;
    }
    assert_eq!(sim.into_log(), log);
}

#[test]
fn n_events_drain_in_n_steps() {
    let topo = Topology::from_edges(10, &[], 1.0).unwrap();
    let cfg = SimConfig {
        stimulus_weight: 0.1,
        ..SimConfig::default()
    };
    let net = Network::from_links(&topo, &[], cfg).unwrap();
    let stim: Vec<Event> = (0..10).map(|i| Event::photon(i * 100_000, 10, i as u32, 1)).collect();
    let mut sim = Simulation::new(&net, &stim).unwrap();
    let mut steps = 0;
    while sim.step().is_some() {
        steps += 1;
    }
    assert_eq!(steps, 10);
    assert_eq!(sim.pending(), 0);
}

#[test]
fn stdp_potentiates_causal_and_depresses_acausal_edges() {
    // 0 -> 1 is causal for the stimulus order below, 1 -> 0 acausal.
    let topo = Topology::from_edges(2, &[(0, 1), (1, 0)], 0.5).unwrap();
    let links = vec![EdgeLink { efficiency: 1.0, latency_ps: 1000 }; 2];
    let net = Network::from_links(&topo, &links, SimConfig::default()).unwrap();
    let stim = [Event::photon(0, 2, 0, 1), Event::photon(10_000, 2, 1, 1)];
    let log = engine::run(&net, &stim, 1_000_000).unwrap();
    let e01 = topo.edge_index(0, 1).unwrap();
    let e10 = topo.edge_index(1, 0).unwrap();
    assert!(log.final_weights[e01] > 0.5);
    assert!(log.final_weights[e10] < 0.5);
    assert!(log.summary.stdp_pairings >= 2);
}

#[test]
fn late_stimulus_is_rejected() {
    let topo = Topology::from_edges(1, &[], 1.0).unwrap();
    let net = Network::from_links(&topo, &[], SimConfig::default()).unwrap();
    assert!(engine::run(&net, &[Event::photon(100, 1, 0, 1)], 100).is_err());
}

#[test]
fn event_log_text_round_trips() {
    let (net, stim) = small_network();
    let log = engine::run(&net, &stim, 20_000_000).unwrap();
    let mut text = Vec::new();
    log.write_text(&mut text).unwrap();
    let back = engine::read_events(text.as_slice()).unwrap();
    assert_eq!(back, log.events);
}

#[test]
fn dendrite_stage_adds_a_processing_stage() {
    let topo = Topology::from_edges(1, &[], 1.0).unwrap();
    let cfg = SimConfig {
        dendrite: true,
        ..SimConfig::default()
    };
    let net = Network::from_links(&topo, &[], cfg).unwrap();
    let log = engine::run(&net, &[Event::photon(0, 1, 0, 1)], 1_000_000).unwrap();
    assert_eq!(fires(&log), vec![(0, 100)]);
}

#[test]
fn stochastic_runs_are_reproducible() {
    let mut topo = generate_random(100, 6, 1).unwrap();
    topo.set_uniform_weight(0.6);
    let links = vec![EdgeLink { efficiency: 0.01, latency_ps: 2000 }; topo.n_edges()];
    let cfg = SimConfig {
        delivery: soen_core::photonics::DeliveryMode::Stochastic { seed: 3 },
        ..SimConfig::default()
    };
    let net = Network::from_links(&topo, &links, cfg).unwrap();
    let stim = engine::poisson_stimulus(100, 5e6, 5_000_000, 2);
    let a = engine::run(&net, &stim, 5_000_000).unwrap();
    let b = engine::run(&net, &stim, 5_000_000).unwrap();
    assert_eq!(a, b);
    for p in &a.pulses {
        assert_eq!(p.emitted, p.delivered + p.lost);
    }
}
