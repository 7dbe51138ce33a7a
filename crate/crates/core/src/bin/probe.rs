use clawbench::demos::{ExpertKnobs, ScriptedExpert};
use clawbench::envsuite::{EnvConfig, EnvModel, Task};
use clawbench::rngs::substream;

fn trace(task: Task, fingers: usize, knobs: &ExpertKnobs) {
    let mut cfg = EnvConfig::new(task);
    cfg.fingers = fingers;
    let mut env = EnvModel::create(cfg.clone()).unwrap();
    let mut env_rng = substream(7, "demo-env", &[0]);
    let mut act_rng = substream(7, "demo-act", &[0]);
    env.reset(&mut env_rng);
    let mut expert = ScriptedExpert::new(task, fingers, cfg.dt, knobs).unwrap();
    println!("== trace {task:?} f{fingers} goal {:.3}", env.goal());
    for t in 0..cfg.horizon {
        let obs = env.observation();
        let a = expert.action(&obs, &mut act_rng);
        env.step(&a).unwrap();
        if t % 4 == 0 {
            let q = env.joint_positions();
            println!(
                "t{t:3} ang {:7.3} vel {:7.3} q0 {:6.2},{:6.2} q1 {:6.2},{:6.2}",
                env.obj_angle(),
                env.obj_vel(),
                q[0],
                q[1],
                q[2],
                q[3],
            );
        }
    }
    println!(
        "final ang {:.3} success {}",
        env.obj_angle(),
        env.episode_success()
    );
}

fn rates(task: Task, fingers: usize, knobs: &ExpertKnobs) {
    let mut cfg = EnvConfig::new(task);
    cfg.fingers = fingers;
    let mut env = EnvModel::create(cfg.clone()).unwrap();
    let n = 20;
    let mut successes = 0;
    let mut finals = Vec::new();
    for attempt in 0..n {
        let mut env_rng = substream(7, "demo-env", &[attempt]);
        let mut act_rng = substream(7, "demo-act", &[attempt]);
        env.reset(&mut env_rng);
        let mut expert = ScriptedExpert::new(task, fingers, cfg.dt, knobs).unwrap();
        for _ in 0..cfg.horizon {
            let obs = env.observation();
            let a = expert.action(&obs, &mut act_rng);
            env.step(&a).unwrap();
        }
        finals.push((env.obj_angle() * 100.0).round() / 100.0);
        if env.episode_success() {
            successes += 1;
        }
    }
    println!(
        "{task:?} f{fingers}: success {successes}/{n} finals {:?}",
        &finals[..8.min(finals.len())]
    );
}

fn gait_clearance() {
    // Mirror of the rig geometry: finger segments 0.15/0.10 rooted
    // 0.31 from the center, rim at 0.06, contact shell 0.035.
    let (l1, l2, base, rim, shell) = (0.15, 0.10, 0.31, 0.06, 0.035);
    let tip = |q1: f64, q2: f64| {
        let x = base - l1 * q1.cos() - l2 * (q1 + q2).cos();
        let y = -l1 * q1.sin() - l2 * (q1 + q2).sin();
        (x, y)
    };
    println!("phase  sweep   bend      x       y   d-rim  contact");
    for i in 0..100 {
        let phase = i as f64 / 100.0;
        let (sweep, bend) = clawbench::demos::gait_probe(phase);
        let (x, y) = tip(sweep, bend);
        let d = (x * x + y * y).sqrt();
        // Worst case: a paddle tangentially dead ahead of the tip.
        let radial_excess = d - rim;
        let in_reach = radial_excess.abs() < shell;
        println!(
            "{phase:5.2} {sweep:6.2} {bend:6.2} {x:7.3} {y:7.3} {:7.3}  {}",
            radial_excess,
            if in_reach { "YES" } else { "." }
        );
    }
}

fn anchor_slide(task: Task, fingers: usize) {
    println!("== anchor slide {task:?} f{fingers}");
    for thresh in [0.3, 0.5, 0.8, 1.0, 1.2, 1.5, 2.0, 2.5] {
        let mut cfg = EnvConfig::new(task);
        cfg.fingers = fingers;
        let mut env = EnvModel::create(cfg.clone()).unwrap();
        let mut env_rng = substream(11, "demo-env", &[0]);
        env.reset(&mut env_rng);
        let knobs = ExpertKnobs {
            action_noise: 0.0,
            ..ExpertKnobs::default()
        };
        let mut expert = ScriptedExpert::new(task, fingers, cfg.dt, &knobs).unwrap();
        let mut rng = substream(11, "demo-act", &[0]);
        let mut at_anchor = None;
        let mut v_at = 0.0;
        for _ in 0..cfg.horizon {
            let obs = env.observation();
            let joints = 2 * fingers;
            let a = if at_anchor.is_none() && env.obj_vel() >= thresh {
                at_anchor = Some(env.obj_angle());
                v_at = env.obj_vel();
                press(&obs[..joints])
            } else if at_anchor.is_some() {
                press(&obs[..joints])
            } else {
                expert.action(&obs, &mut rng)
            };
            env.step(&a).unwrap();
        }
        match at_anchor {
            Some(start) => println!(
                "  v {v_at:5.2}  slide {:6.3}",
                env.obj_angle() - start
            ),
            None => println!("  v {thresh:5.2}  never reached"),
        }
    }
}

fn press(q: &[f64]) -> clawbench::numkit::DenseVec {
    let mut a = vec![0.0; q.len()];
    for f in 0..q.len() / 2 {
        a[2 * f + 1] = (-2.0 * q[2 * f + 1]).clamp(-1.0, 1.0);
    }
    clawbench::numkit::DenseVec::from_vec(a)
}

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let knobs = ExpertKnobs::default();
    if args.iter().any(|a| a == "gait") {
        gait_clearance();
    } else if args.iter().any(|a| a == "slide") {
        anchor_slide(Task::Valve, 3);
        anchor_slide(Task::Valve, 4);
        anchor_slide(Task::BoxFlip, 3);
    } else if args.iter().any(|a| a == "trace") {
        let task = if args.iter().any(|a| a == "box") {
            Task::BoxFlip
        } else {
            Task::Valve
        };
        let fingers = args
            .iter()
            .find_map(|a| a.strip_prefix("f").and_then(|s| s.parse().ok()))
            .unwrap_or(3);
        trace(task, fingers, &knobs);
    } else {
        rates(Task::Valve, 3, &knobs);
        rates(Task::Valve, 4, &knobs);
        rates(Task::BoxFlip, 3, &knobs);
    }
}
