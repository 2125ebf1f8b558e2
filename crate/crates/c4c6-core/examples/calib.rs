use c4c6_core::code::CodeTables;
use c4c6_core::harness::{probe_decode, run_bell_stats, run_gate_experiment, GateKind};
use c4c6_core::protocol::Mode;
use std::time::Instant;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let which = args.get(1).map(String::as_str).unwrap_or("l1");
    let ct = CodeTables::new(3);
    let gamma = 0.03;
    match which {
        "l1" => {
            for gate in [
                GateKind::Cnot,
                GateKind::Had,
                GateKind::Prep,
                GateKind::Meas,
                GateKind::Decode,
                GateKind::Inject,
            ] {
                let t0 = Instant::now();
                let st = run_gate_experiment(&ct, gate, 1, gamma, 100_000, Mode::Postselect, 1, 99);
                println!(
                    "L1 {:?}: acc {}/{} p_d {:.4e} [{:.2e},{:.2e}] p_c {:.4e} [{:.2e},{:.2e}] excl {} ({:.1?})",
                    gate, st.accepted, st.trials, st.p_d, st.ci68_d.0, st.ci68_d.1,
                    st.p_c, st.ci68_c.0, st.ci68_c.1, st.excluded, t0.elapsed()
                );
            }
        }
        "l2" => {
            let trials: u64 = args.get(2).map(|s| s.parse().unwrap()).unwrap_or(16_384);
            for gate in [
                GateKind::Cnot,
                GateKind::Had,
                GateKind::Prep,
                GateKind::Meas,
                GateKind::Decode,
                GateKind::Inject,
            ] {
                let t0 = Instant::now();
                let st = run_gate_experiment(&ct, gate, 2, gamma, trials, Mode::Postselect, 1, 99);
                println!(
                    "L2 {:?}: acc {}/{} p_d {:.4e} [{:.2e},{:.2e}] p_c {:.4e} [{:.2e},{:.2e}] excl {} ({:.1?})",
                    gate, st.accepted, st.trials, st.p_d, st.ci68_d.0, st.ci68_d.1,
                    st.p_c, st.ci68_c.0, st.ci68_c.1, st.excluded, t0.elapsed()
                );
            }
        }
        "dec" => {
            let trials: u64 = args.get(2).map(|s| s.parse().unwrap()).unwrap_or(100_000);
            for level in [1usize, 2] {
                let t0 = Instant::now();
                let p = probe_decode(&ct, level, gamma, trials, Mode::Postselect, 1, 99);
                let den = (p.accepted - p.detected) as f64;
                let den_x = den - p.pre as f64;
                println!(
                    "L{} probe: trials {} acc {} det {} ({:.3e}; dec {} ver {}) pre {} ({:.1?})",
                    level,
                    p.trials,
                    p.accepted,
                    p.detected,
                    p.detected as f64 / p.accepted as f64,
                    p.det_dec,
                    p.det_ver,
                    p.pre,
                    t0.elapsed()
                );
                println!("  pair       {:.4e}", p.pair as f64 / den);
                println!("  pair_x     {:.4e}", p.pair_x as f64 / den_x);
                println!("  l_only     {:.4e}", p.l_only as f64 / den);
                println!("  l_only_x   {:.4e}", p.l_only_x as f64 / den_x);
                println!("  pair_fl    {:.4e}", p.pair_fl as f64 / den);
                println!("  pair_fboth {:.4e}", p.pair_fboth as f64 / den);
                println!("  l_fl       {:.4e}", p.l_fl as f64 / den);
                println!("  pair_fl_x  {:.4e}", p.pair_fl_x as f64 / den_x);
                println!("  l_fl_x     {:.4e}", p.l_fl_x as f64 / den_x);
            }
        }
        "bell" => {
            let t0 = Instant::now();
            let bs = run_bell_stats(&ct, 2, 0.001, 4096, Mode::Ec, 12);
            println!("bell l2 g=0.001: {:?} ({:.1?})", bs, t0.elapsed());
            let t0 = Instant::now();
            let bs = run_bell_stats(&ct, 2, 0.03, 4096, Mode::Postselect, 12);
            println!("bell l2 g=0.03: {:?} ({:.1?})", bs, t0.elapsed());
        }
        _ => eprintln!("unknown mode"),
    }
}
