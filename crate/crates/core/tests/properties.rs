mod common;

use aerogrid::aircraft_energy::{flight_energy, propagate_soc, soc_delta, FlightEnergyInputs};
use aerogrid::airport_energy::{bess_feasible_step, grid_power, solar_cap, BessBranch};
use aerogrid::graph::{build_graph, flight_steps};
use aerogrid::pipeline::{run, PipelineOptions};
use aerogrid::scenario::{Scenario, TimeGrid};
use aerogrid::solver::HighsBackend;
use common::{aircraft, airport, flat_scenario, flight, random_tiny, IDS};
use proptest::prelude::*;

fn inputs(mass: f64, distance: f64) -> FlightEnergyInputs {
    let mut i = FlightEnergyInputs::for_aircraft(&aircraft("P", "A"), distance);
    i.mass_kg = mass;
    i
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

fn graph_scenario(num_airports: usize, layers: usize, block_steps: usize) -> Scenario {
    let airports = IDS
        .iter()
        .chain(&["D", "E"])
        .take(num_airports)
        .map(|id| airport(id))
        .collect();
    let block = (block_steps * 60) as f64;
    flat_scenario(
        TimeGrid::new(60, 4, 4 + layers - 1).unwrap(),
        airports,
        vec![aircraft("P1", "A")],
        vec![flight("AB", "A", "B", block, 0), flight("BA", "B", "A", block, 0)],
        0.0,
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn flight_energy_is_linear_in_mass(m in 1000.0..20000.0f64, d in 0.0..500.0f64, k in 0.1..5.0f64) {
        let e1 = flight_energy(&inputs(m, d)).unwrap();
        let ek = flight_energy(&inputs(k * m, d)).unwrap();
        prop_assert!(rel(ek, k * e1) <= 1e-12);
    }

    #[test]
    fn cruise_energy_is_linear_in_distance(m in 1000.0..20000.0f64, d in 1.0..500.0f64, k in 0.1..5.0f64) {
        let climb = flight_energy(&inputs(m, 0.0)).unwrap();
        let e1 = flight_energy(&inputs(m, d)).unwrap() - climb;
        let ek = flight_energy(&inputs(m, k * d)).unwrap() - climb;
        prop_assert!(rel(ek, k * e1) <= 1e-9);
        prop_assert!(e1 > 0.0);
    }

    #[test]
    fn soc_bookkeeping_closes(
        initial in 0.0..800.0f64,
        steps in prop::collection::vec((0.0..300.0f64, prop::option::of(10.0..200.0f64)), 1..40),
    ) {
        let deltas: Vec<f64> = steps
            .iter()
            .map(|&(p, f)| match f {
                Some(e) => soc_delta(&[0.0, 0.0], &[e], 10).unwrap(),
                None => soc_delta(&[p, 0.0], &[], 10).unwrap(),
            })
            .collect();
        let traj = propagate_soc(initial, &deltas, 1e9);
        let expected = initial + deltas.iter().sum::<f64>();
        prop_assert!((traj.last() - expected).abs() <= 1e-9);
        prop_assert_eq!(traj.energy_kwh.len(), deltas.len() + 1);
    }

    #[test]
    fn bess_branch_follows_the_sign_of_power(
        e in 0.0..1000.0f64,
        p in -500.0..500.0f64,
        eta in 0.5..0.999f64,
        dt in prop::sample::select(vec![5u32, 10, 15, 30, 60]),
    ) {
        let c = bess_feasible_step(e, e, p, eta, dt);
        let expected = if p > 0.0 {
            BessBranch::InverseEfficiency
        } else if p < 0.0 {
            BessBranch::Efficiency
        } else {
            BessBranch::Both
        };
        prop_assert_eq!(c.binding, expected);
        let dt_h = f64::from(dt) / 60.0;
        prop_assert!((c.upper_bound_kwh() - (e - eta * p * dt_h).min(e - p * dt_h / eta)).abs() < 1e-9);
        // keeping the energy constant is feasible only when not discharging
        if p.abs() > 1e-6 {
            prop_assert_eq!(c.passed(1e-9), p < 0.0);
        }
    }

    #[test]
    fn power_split_balances(pa in 0.0..1000.0f64, aux in 0.0..50.0f64, irr in 0.0..1100.0f64, pb in -200.0..200.0f64) {
        let rnw = solar_cap(irr, 1000.0, 0.2);
        let pgr = grid_power(pa, aux, rnw, pb);
        prop_assert!((pgr + rnw + pb - pa - aux).abs() < 1e-9);
    }

    #[test]
    fn graph_counts(h in 2usize..6, layers in 2usize..10, tf in 1usize..4) {
        let s = graph_scenario(h, layers, tf);
        let steps = layers - 1;
        if tf > steps {
            prop_assert!(build_graph(&s).is_err());
            return Ok(());
        }
        let g = build_graph(&s).unwrap();
        prop_assert_eq!(g.num_vertices(), h * layers);
        prop_assert_eq!(g.num_ground_edges(), h * (layers - 1));
        prop_assert_eq!(g.flight_steps(0), tf);
        prop_assert_eq!(g.num_flight_edges(), 2 * (steps + 1).saturating_sub(tf));
        for e in g.all_flight_edges() {
            prop_assert_eq!(e.head.time, e.tail.time + 1);
            prop_assert!(e.tail.time + tf <= steps);
            let virtuals = g.virtual_edges(e.id).unwrap();
            prop_assert_eq!(virtuals.len(), tf - 1);
            for (tau, &v) in virtuals.iter().enumerate() {
                let ve = g.edge(v);
                prop_assert!(ve.is_ground());
                prop_assert_eq!(ve.tail.airport, e.head.airport);
                prop_assert_eq!(ve.tail.time, e.head.time + tau);
            }
        }
    }

    #[test]
    fn flight_steps_round_to_nearest(block in 1.0..600.0f64, dt in prop::sample::select(vec![5u32, 10, 15, 30, 60])) {
        let tf = flight_steps(block, dt);
        prop_assert!(tf >= 1);
        let ratio = block / f64::from(dt);
        if ratio >= 1.0 {
            prop_assert!((tf as f64 - ratio).abs() <= 0.5 + 1e-12);
        }
    }
}

#[test]
fn three_airports_five_layers() {
    let s = graph_scenario(3, 5, 2);
    let g = build_graph(&s).unwrap();
    assert_eq!(g.num_vertices(), 15);
    assert_eq!(g.num_ground_edges(), 12);
    for e in g.all_flight_edges() {
        assert_eq!(g.virtual_edges(e.id).unwrap().len(), 1);
    }
}

#[test]
fn solved_profiles_are_periodic_and_non_negative() {
    for seed in 0..16 {
        let s = random_tiny(seed);
        let out = run(&s, &PipelineOptions::default(), &mut HighsBackend::new()).unwrap();
        let Some(sol) = out.solution else { continue };
        for p in &sol.airports {
            assert!(
                p.periodicity_residual() <= 1e-6,
                "seed {seed} airport {}",
                p.airport
            );
            assert!(p.grid_kw.iter().all(|&g| g >= -1e-9), "seed {seed}");
        }
        let recomputed = sol.grid_energy_kwh(&s.time_grid);
        assert!((recomputed - sol.objective_kwh).abs() <= 1e-6 * (1.0 + recomputed.abs()));
    }
}

#[test]
fn more_solar_never_costs_more() {
    for seed in [1u64, 4, 7] {
        let base = random_tiny(seed);
        for a in 0..base.airports.len() {
            let mut last = f64::INFINITY;
            for area in [0.0, 200.0, 400.0, 800.0, 1600.0] {
                let mut s = base.clone();
                s.airports[a].solar_area_m2 = area;
                let out = run(&s, &PipelineOptions::default(), &mut HighsBackend::new()).unwrap();
                let Some(obj) = out.objective_kwh() else { break };
                assert!(
                    obj <= last + 1e-6 * (1.0 + obj.abs()),
                    "seed {seed} airport {a} area {area}"
                );
                last = obj;
            }
        }
    }
}
