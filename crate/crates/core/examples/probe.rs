use hooksmith::geometry::{build_shape, DesignSpace, ToolParams};
use hooksmith::objective::{free_energy, ObjectiveConfig};
use hooksmith::sim::{simulate, PlanSpec, WorldConfig};

fn trace(label: &str, c: [f64; 3]) {
    let space = DesignSpace::<f64>::default();
    let params = match ToolParams::new(c[0], c[1], c[2], &space) {
        Ok(p) => p,
        Err(e) => {
            println!("{label}: invalid params: {e}");
            return;
        }
    };
    let shape = match build_shape(&params, &space) {
        Ok(s) => s,
        Err(e) => {
            println!("{label}: build failed: {e}");
            return;
        }
    };
    let world = WorldConfig::<f64>::default();
    let plan = PlanSpec::default_plan();
    let roll = simulate(&shape, &plan, &world);
    let obj = ObjectiveConfig::<f64>::default();
    let rep = free_energy(&roll, &obj).unwrap();
    let n = roll.x.len();
    let contact_steps = roll.contact_flags.iter().filter(|&&f| f).count();
    let last_contact = roll
        .contact_flags
        .iter()
        .rposition(|&f| f)
        .map(|i| i as i64)
        .unwrap_or(-1);
    let turn = hooksmith::geometry::turning_angle(&shape);
    let end = roll.x[n - 1];
    let d = ((end.x - world.goal.x).powi(2) + (end.y - world.goal.y).powi(2)).sqrt();
    let curve = &shape.points[shape.curve_start..];
    let xmax = curve.last().map(|p| p.x).unwrap_or(0.0);
    let pmin = curve.iter().map(|p| p.y).fold(f64::INFINITY, f64::min);
    let pmax = curve.iter().map(|p| p.y).fold(f64::NEG_INFINITY, f64::max);
    // Band profile: min over curve of (x + p), where it sits, tip band.
    let (band_min, band_min_x) = curve
        .iter()
        .map(|p| (p.x + p.y, p.x))
        .fold((f64::INFINITY, 0.0), |a, b| if b.0 < a.0 { b } else { a });
    let band_tip = curve.last().map(|p| p.x + p.y).unwrap_or(0.0);
    println!("== {label} c=[{:+.1},{:+.1},{:+.1}]", c[0], c[1], c[2]);
    println!(
        "   xmax {:.3}  p range [{:+.3},{:+.3}]  turn {:.3}  band min {:+.3} at x={:.2}, tip {:+.3}",
        xmax, pmin, pmax, turn, band_min, band_min_x, band_tip
    );
    println!(
        "   F {:.1}  goal_raw {:.1}  conf {:.1}  contact {}/{} last {}  end ({:+.3},{:+.3}) d {:.3}",
        rep.free_energy,
        rep.goal_error_total,
        rep.confidence_total,
        contact_steps,
        n,
        last_contact,
        end.x,
        end.y,
        d
    );
    for &k in &[130usize, 180, 220, 254, 270, 300, 360, 420, 508] {
        if k < n {
            let b = roll.x[k];
            let e = roll.ee[k];
            let v = roll.box_vel[k];
            let fc = roll.contact_force[k];
            println!(
                "   k {:3}  ee ({:+.2},{:+.2})  box ({:+.3},{:+.3})  v ({:+.2},{:+.2})  fc ({:+.1},{:+.1}){}",
                k,
                e.x,
                e.y,
                b.x,
                b.y,
                v.x,
                v.y,
                fc.x,
                fc.y,
                if roll.contact_flags[k] { "  C" } else { "" }
            );
        }
    }
}

fn main() {
    trace("straight bar", [0.0, 0.0, 0.0]);
    trace("diag ramp", [0.0, 0.0, 1.0]);
    trace("blade", [-4.0, 0.5, 5.0]);
    trace("px0 scan winner", [-5.0, 4.0, 4.0]);
    trace("neg blade", [0.0, -5.0, 5.0]);
    trace("pocket A", [5.0, 0.0, -2.0]);
    trace("pocket B", [3.0, 0.0, -1.5]);
    trace("pocket C", [4.0, -1.0, -1.0]);
    trace("trench", [0.0, 0.0, -2.0]);
    trace("down then flat", [2.0, 1.0, -3.0]);
}
