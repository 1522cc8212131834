//! Acceptance gate. Runs each criterion, prints one PASS/FAIL line per
//! criterion and exits non-zero if any fails.

mod common;

use std::panic::{self, AssertUnwindSafe};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use rm2_core::actuator::{Fault, MechState, ReleaseMechanism};
use rm2_core::benchlab::{self, GeometryTable};
use rm2_core::geodesy::{self, GeoPoint, LocalFrame, EARTH_RADIUS};
use rm2_core::physics::{self, TowConfig, WaveField};
use rm2_core::simulator::{self, AuvMode, Scenario, MISSION_NOMINAL, MISSION_STUCK_CONTROLLER};
use rm2_core::controller::DeployReason;

type Check = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {{
        let ok: bool = $cond;
        if !ok {
            return Err(format!($($fmt)+));
        }
    }};
}

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

// Hand evaluation of rho / (2 cos theta) * C_D * sigma * v^2, frozen.
const TENSION_AT_2_5: f64 = 107.916_869_177_737_91;

fn towline_tension() -> Check {
    let cfg = TowConfig::with_theta_deg(1020.0, 0.42, 0.057, 45.0, 2000.0).map_err(|e| e.to_string())?;
    let t = physics::tow_tension(&cfg, 2.5).map_err(|e| e.to_string())?;
    let hand = 1020.0 / (2.0 * 45f64.to_radians().cos()) * 0.42 * 0.057 * 2.5 * 2.5;
    ensure!(rel(hand, TENSION_AT_2_5) < 1e-12, "oracle drifted: {hand}");
    ensure!(rel(t, 109.0) <= 0.02, "{t} N is not within 2% of 109 N");
    ensure!(rel(t, TENSION_AT_2_5) <= 1e-9, "{t} N vs oracle {TENSION_AT_2_5} N");
    Ok(format!("{t:.4} N, {:.2}% from 109 N", 100.0 * rel(t, 109.0)))
}

fn release_speed() -> Check {
    let w = WaveField::deep_water(0.5, 30.0).map_err(|e| e.to_string())?;
    let v = physics::min_release_speed(&w);
    let oracle = 0.5 * std::f64::consts::TAU / 30.0;
    let kn = physics::mps_to_knots(v);
    ensure!(rel(v, oracle) < 1e-12, "{v} vs oracle {oracle}");
    ensure!((v - 0.10472).abs() < 5e-6, "{v} does not round to 0.10472");
    ensure!((v - 0.105).abs() <= 0.001, "{v} m/s too far from 0.105");
    ensure!((kn - 0.20).abs() <= 0.005, "{kn} kn too far from 0.20");
    ensure!(physics::assured_release(v, &w) == Ok(true), "boundary speed not assured");
    ensure!(
        physics::assured_release(v * (1.0 - 1e-9), &w) == Ok(false),
        "speed below the boundary reported as assured"
    );
    Ok(format!("{v:.5} m/s = {kn:.4} kn"))
}

fn bench_geometry() -> Check {
    let table = GeometryTable::REFERENCE;
    let trough = benchlab::theta_trough(&table.real).map_err(|e| e.to_string())?;
    ensure!((trough - 83.57).abs() <= 0.05, "trough angle {trough}");
    let report = benchlab::consistency_report(&table);
    let row = |column: &str, angle: &str| {
        report
            .rows
            .iter()
            .find(|r| r.column == column && r.angle == angle)
            .cloned()
            .ok_or_else(|| format!("report has no {column}/{angle} row"))
    };
    let real_trough = row("real-time", "theta_trough")?;
    let real_crest = row("real-time", "theta_crest")?;
    let exp_trough = row("experimental", "theta_trough")?;
    ensure!(real_trough.matches(), "real trough row not marked as a match");
    let crest = real_crest.computed_deg.ok_or("crest angle missing")?;
    ensure!((crest - 11.91).abs() < 0.01, "crest angle {crest}");
    ensure!(!real_crest.matches(), "crest row not flagged");
    ensure!(!exp_trough.feasible(), "experimental trough not flagged infeasible");
    Ok(format!(
        "trough {trough:.2} deg; flagged crest {crest:.2} vs {:.2}, experimental trough ratio {:.4} infeasible",
        real_crest.tabulated_deg, exp_trough.ratio
    ))
}

const AMPLITUDES: [f64; 8] = [0.1, 0.25, 0.5, 0.75, 1.0, 1.25, 1.5, 2.0];
const PERIODS: [f64; 8] = [3.0, 5.0, 8.0, 10.0, 15.0, 20.0, 25.0, 30.0];
const PHASES_DEG: [f64; 4] = [0.0, 90.0, 180.0, 270.0];
const SPEED_FACTORS: [f64; 4] = [1.0, 1.001, 1.25, 2.0];

fn sweep_scenario(a: f64, period: f64, phase_deg: f64, trigger_at: f64) -> Scenario {
    let mut s = Scenario::default();
    s.wave.amplitude = a;
    s.wave.period = period;
    s.wave.phase_deg = phase_deg;
    s.rm2.deploy_position = None;
    s.rm2.trigger_time = Some(trigger_at);
    s
}

fn assured_release_sweep() -> Check {
    let mut combos = 0;
    let mut gated = 0;
    for (ia, &a) in AMPLITUDES.iter().enumerate() {
        for (ip, &period) in PERIODS.iter().enumerate() {
            for (iph, &phase_deg) in PHASES_DEG.iter().enumerate() {
                let i = combos;
                combos += 1;
                let wave = WaveField::new(a, period, physics::DEFAULT_GRAVITY, phase_deg.to_radians())
                    .map_err(|e| e.to_string())?;
                let trigger_at = 0.5 + (i % 7) as f64 * 0.37;
                let tag = format!("A={a} T={period} phase={phase_deg}");

                // Under way at or above the release speed.
                let v_min = physics::min_release_speed(&wave);
                let speed = (v_min * SPEED_FACTORS[(ia + ip + iph) % 4]).min(physics::MAX_ASV_SPEED);
                let mut s = sweep_scenario(a, period, phase_deg, trigger_at);
                s.asv.waypoints = "2000,0".into();
                s.asv.speed = Some(speed);
                s.sim.duration = trigger_at + 1.0 + period + 1.0;
                let out = simulator::run(s.resolve().map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
                let sum = &out.summary;
                let hook = sum.hook_open_time.ok_or(format!("{tag}: hook never opened"))?;
                let release = sum.release_time.ok_or(format!("{tag}: no release at {speed} m/s"))?;
                ensure!(release - hook <= period, "{tag}: release {release} s, hook open {hook} s");
                for row in &out.telemetry.rows {
                    let u = physics::surge_velocity(&wave, row.auv_x, 0.0, row.t).map_err(|e| e.to_string())?;
                    ensure!(row.asv_speed >= u, "{tag}: line slack under way at t={}", row.t);
                }

                // Stopped in the same sea: half of every period is slack.
                let mut s = sweep_scenario(a, period, phase_deg, trigger_at);
                s.asv.waypoints = String::new();
                s.sim.duration = trigger_at + 1.0 + 2.0 * period + 1.0;
                let out = simulator::run(s.resolve().map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
                let mut released = false;
                for row in &out.telemetry.rows {
                    ensure!(row.asv_speed == 0.0, "{tag}: ASV moving at t={}", row.t);
                    let u = physics::surge_velocity(&wave, row.auv_x, 0.0, row.t).map_err(|e| e.to_string())?;
                    let oracle_taut = row.asv_speed >= u;
                    if row.mech_state == MechState::TetherFree && !released {
                        released = true;
                        ensure!(oracle_taut, "{tag}: released on a slack step t={}", row.t);
                    }
                    if row.mech_state == MechState::HookFalling {
                        ensure!(!oracle_taut, "{tag}: hook open on a taut step t={} without release", row.t);
                    }
                }
                let sum = &out.summary;
                let hook = sum.hook_open_time.ok_or(format!("{tag}: hook never opened at rest"))?;
                let release = sum.release_time.ok_or(format!("{tag}: no release at rest"))?;
                ensure!(release - hook <= period, "{tag}: held {} s at rest", release - hook);
                if release > hook {
                    gated += 1;
                }
            }
        }
    }
    ensure!(gated > 0, "no combination exercised slack gating");

    // A line that never goes taut never lets go.
    let mut m = ReleaseMechanism::in_state(MechState::HookFalling, Fault::None);
    for _ in 0..20_000 {
        ensure!(m.advance(0.05, false).is_none(), "released on a permanently slack line");
    }
    Ok(format!("{combos} sea states x 2 runs; slack held the hook in {gated} runs at rest"))
}

fn deployment_oracle() -> Check {
    let traces = 1500;
    let mut steps = 0;
    let mut fires = 0;
    let mut boundary = 0;
    let mut literal = 0;
    for seed in 0..traces {
        let trace = common::random_trace(seed, true);
        let r = common::run_trace(&trace);
        ensure!(
            r.node == r.reference,
            "trace {seed} diverged: node {:?} reference {:?}",
            r.node,
            r.reference
        );
        steps += r.node.len();
        fires += r.node.iter().filter(|f| **f).count();
        boundary += r.exact_boundary;
        literal += usize::from(trace.resend);
    }
    ensure!(boundary > 0, "no trace put a position exactly on the tolerance circle");

    // Exactly on the circle stays quiet; just inside fires.
    let on = common::Trace {
        deploy: Some(GeoPoint::new(common::ORIGIN_LAT, common::ORIGIN_LON).unwrap()),
        use_trigger: false,
        delta: 5.0,
        resend: false,
        steps: vec![
            vec![common::TraceEvent::Position(3.0, 4.0)],
            vec![common::TraceEvent::Position(0.0, 5.0)],
            vec![common::TraceEvent::Position(0.0, 4.999_999_999)],
        ],
    };
    let r = common::run_trace(&on);
    ensure!(r.node == vec![false, false, true], "boundary trace fired {:?}", r.node);
    Ok(format!(
        "{traces} traces ({literal} literal), {steps} steps, {fires} fires, {boundary} exact-boundary positions"
    ))
}

fn declared(from: MechState, to: MechState) -> bool {
    matches!(
        (from, to),
        (MechState::Locked, MechState::PinRetracting)
            | (MechState::PinRetracting, MechState::HookFalling)
            | (MechState::HookFalling, MechState::TetherFree)
    )
}

fn actuator_exhaustion() -> Check {
    let mut cases = 0;
    for state in MechState::ALL {
        for fault in Fault::ALL {
            for byte in 0..=u8::MAX {
                for taut in [false, true] {
                    for dt in [0.05, 1.0, 5.0] {
                        cases += 1;
                        let tag = format!("{state} {fault:?} 0x{byte:02x} taut={taut} dt={dt}");
                        let mut m = ReleaseMechanism::in_state(state, fault);
                        m.handle_byte(byte);
                        let expect = if byte == b'D' && state == MechState::Locked && fault != Fault::StuckController {
                            MechState::PinRetracting
                        } else {
                            state
                        };
                        ensure!(m.state() == expect, "{tag}: byte moved to {}", m.state());
                        let ev = m.advance(dt, taut);
                        let end = m.state();
                        for &(a, b) in m.transitions() {
                            ensure!(declared(a, b), "{tag}: undeclared {a} -> {b}");
                        }
                        ensure!(
                            ev.is_some() == (end == MechState::TetherFree && state != MechState::TetherFree),
                            "{tag}: event/state mismatch"
                        );
                        if !taut {
                            ensure!(ev.is_none(), "{tag}: released on a slack line");
                        }
                        match fault {
                            Fault::StuckController if state == MechState::Locked => {
                                ensure!(end == MechState::Locked, "{tag}: stuck controller moved")
                            }
                            Fault::StuckPin if expect == MechState::PinRetracting => {
                                ensure!(end == MechState::PinRetracting, "{tag}: stuck pin moved")
                            }
                            _ => {}
                        }
                    }
                }
            }
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let traces = 2000;
    for n in 0..traces {
        let fault = Fault::ALL[rng.gen_range(0..3)];
        let mut m = ReleaseMechanism::with_fault(fault);
        let mut events = 0;
        for _ in 0..rng.gen_range(1..80) {
            if rng.gen_bool(0.3) {
                let b = if rng.gen_bool(0.5) { b'D' } else { rng.gen() };
                m.handle_byte(b);
            } else {
                events += m.advance(rng.gen_range(0.01..0.7), rng.gen_bool(0.6)).iter().count();
            }
        }
        ensure!(events <= 1, "trace {n}: {events} release events");
        for w in m.transitions().windows(2) {
            ensure!(w[0].1 == w[1].0, "trace {n}: broken transition chain");
        }
        for &(a, b) in m.transitions() {
            ensure!(declared(a, b), "trace {n}: undeclared {a} -> {b}");
        }
    }
    Ok(format!("{cases} single-input cases, {traces} random traces"))
}

fn mission_replay() -> Check {
    let out = simulator::run_scenario(MISSION_NOMINAL).map_err(|e| e.to_string())?;
    let s = &out.summary;
    let delta = Scenario::from_toml(MISSION_NOMINAL).map_err(|e| e.to_string())?.rm2.delta_m;
    ensure!(s.deploy_reason == Some(DeployReason::Position), "deployed by {:?}", s.deploy_reason);
    let err = s.deploy_position_error.ok_or("no deploy distance")?;
    ensure!(err < delta, "deployed {err} m from the deploy point");
    ensure!(s.release_time.is_some(), "no release");
    ensure!(
        s.waypoints_total > 0 && s.waypoints_reached == s.waypoints_total,
        "{} of {} waypoints",
        s.waypoints_reached,
        s.waypoints_total
    );
    ensure!(s.rendezvous_time.is_some(), "no rendezvous");
    ensure!(s.mission_success, "mission not successful");
    let nominal = format!(
        "nominal: deploy {:.2} s at {err:.2} m, rendezvous {:.1} s",
        s.deploy_time.unwrap_or(f64::NAN),
        s.rendezvous_time.unwrap_or(f64::NAN)
    );

    let out = simulator::run_scenario(MISSION_STUCK_CONTROLLER).map_err(|e| e.to_string())?;
    let s = &out.summary;
    ensure!(s.deploy_time.is_some(), "stuck variant never commanded a release");
    ensure!(s.auv_mode == AuvMode::Stowed, "stuck variant AUV is {}", s.auv_mode);
    ensure!(s.mech_state == MechState::Locked, "stuck variant mechanism {}", s.mech_state);
    ensure!(s.release_time.is_none() && !s.mission_success, "stuck variant released");
    ensure!(
        out.telemetry.rows.iter().all(|r| r.auv_mode == AuvMode::Stowed),
        "stuck variant AUV left the housing"
    );
    Ok(format!("{nominal}; stuck controller: AUV STOWED"))
}

fn determinism() -> Check {
    let noisy = Scenario::with_overrides(MISSION_NOMINAL, &["rm2.position_noise_m=0.8", "sim.rng_seed=7"])
        .map_err(|e| e.to_string())?
        .to_toml();
    let reseeded = Scenario::with_overrides(MISSION_NOMINAL, &["rm2.position_noise_m=0.8", "sim.rng_seed=8"])
        .map_err(|e| e.to_string())?
        .to_toml();
    let csv = |text: &str| -> Result<String, String> {
        Ok(simulator::run_scenario(text).map_err(|e| e.to_string())?.telemetry.to_csv())
    };
    let mut bytes = 0;
    for (name, text) in [
        ("nominal", MISSION_NOMINAL),
        ("stuck controller", MISSION_STUCK_CONTROLLER),
        ("noisy", noisy.as_str()),
    ] {
        let a = csv(text)?;
        let b = csv(text)?;
        ensure!(a.as_bytes() == b.as_bytes(), "{name}: runs differ");
        bytes += a.len();
    }
    ensure!(csv(&noisy)? != csv(&reseeded)?, "seed has no effect on a noisy run");
    Ok(format!("3 scenarios, {bytes} CSV bytes identical across reruns"))
}

fn numerical_checks() -> Check {
    let mut worst_fd: f64 = 0.0;
    let h = 1e-3;
    for &(a, period) in &[(0.1, 3.0), (0.5, 30.0), (2.0, 10.0), (1.0, 5.0)] {
        for phase in [0.0, 1.1, 4.0] {
            let w = WaveField::new(a, period, physics::DEFAULT_GRAVITY, phase).map_err(|e| e.to_string())?;
            for x in [-50.0, 0.0, 13.7, 200.0] {
                for z in [0.0, -1.0, -5.0] {
                    for t in [0.0, 7.3, 100.0] {
                        let phi = |x: f64| physics::velocity_potential(&w, x, z, t).unwrap();
                        let fd = (phi(x + h) - phi(x - h)) / (2.0 * h);
                        let u = physics::surge_velocity(&w, x, z, t).map_err(|e| e.to_string())?;
                        worst_fd = worst_fd.max((u - fd).abs());
                    }
                }
            }
        }
    }
    ensure!(worst_fd <= 1e-6, "surge vs finite difference off by {worst_fd}");

    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut worst_deg: f64 = 0.0;
    let points = 5000;
    for _ in 0..points {
        let lat0 = rng.gen_range(-80.0..80.0);
        let lon0 = if rng.gen_bool(0.1) {
            179.999 * if rng.gen_bool(0.5) { 1.0 } else { -1.0 }
        } else {
            rng.gen_range(-180.0..180.0)
        };
        let frame = LocalFrame::new(GeoPoint::new(lat0, lon0).unwrap()).map_err(|e| e.to_string())?;
        let r = rng.gen_range(0.0..10_000.0);
        let bearing: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
        let lat = lat0 + (r * bearing.cos() / EARTH_RADIUS).to_degrees();
        let mut lon = lon0 + (r * bearing.sin() / (EARTH_RADIUS * lat0.to_radians().cos())).to_degrees();
        if lon >= 180.0 {
            lon -= 360.0;
        } else if lon < -180.0 {
            lon += 360.0;
        }
        let p = GeoPoint::new(lat, lon).map_err(|e| e.to_string())?;
        let local = geodesy::to_local(&frame, &p).map_err(|e| e.to_string())?;
        let back = geodesy::to_geo(&frame, &local).map_err(|e| e.to_string())?;
        let dlon = (back.lon - p.lon + 540.0).rem_euclid(360.0) - 180.0;
        worst_deg = worst_deg.max((back.lat - p.lat).abs()).max(dlon.abs());
    }
    ensure!(worst_deg <= 1e-9, "geodesy round trip off by {worst_deg} deg");
    Ok(format!(
        "finite difference worst {worst_fd:.2e} m/s; {points} round trips worst {worst_deg:.2e} deg"
    ))
}

fn main() {
    let criteria: [(&str, fn() -> Check); 9] = [
        ("towline tension", towline_tension),
        ("minimum release speed", release_speed),
        ("bench geometry", bench_geometry),
        ("assured-release sweep", assured_release_sweep),
        ("deployment oracle equivalence", deployment_oracle),
        ("actuator exhaustion", actuator_exhaustion),
        ("mission replay", mission_replay),
        ("determinism", determinism),
        ("numerical checks", numerical_checks),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = panic::catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let secs = start.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("PASS criterion {} {name} ({secs:.2} s): {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL criterion {} {name} ({secs:.2} s): {why}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
