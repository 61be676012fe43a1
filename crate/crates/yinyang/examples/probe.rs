use yinyang::flow::{
    build_square_profile, maybe_resample, scheme_dissipation, step_parametric, FlowConfig,
    SquareProfileSpec,
};
use yinyang::geom::compute_geometry;
use yinyang::soliton::{expansion_coefficients, integrate_u};

fn main() {
    let table = integrate_u(8.0, 1.6, 2000.0, 1e-11).unwrap();
    let coeffs = expansion_coefficients(6);
    for nodes in [4000usize, 8000, 16000] {
        for c_stab in [0.4, 0.1] {
            let spec = SquareProfileSpec::new(-100.0, nodes);
            let profile = build_square_profile(&spec, &table, &coeffs).unwrap();
            let mut state = profile.state;
            let cfg = FlowConfig {
                c_stab,
                ..FlowConfig::default()
            };
            let start = std::time::Instant::now();
            let l0 = state.curve.total_arclength();
            let mut q_prev = scheme_dissipation(state.curve.points(), true);
            let mut integral = 0.0;
            let t_end = state.t + 2.0;
            let mut kmax_seen = 0.0f64;
            let mut steps = 0usize;
            while state.t < t_end - 1e-9 {
                let dt = step_parametric(&mut state, 0.1, &cfg).unwrap();
                steps += 1;
                let q = scheme_dissipation(state.curve.points(), true);
                integral += 0.5 * (q_prev + q) * dt;
                q_prev = if maybe_resample(&mut state, &cfg).unwrap() {
                    scheme_dissipation(state.curve.points(), true)
                } else {
                    q
                };
                if steps % 500 == 0 {
                    let geo = compute_geometry(&state.curve).unwrap();
                    let k = geo.curvature.iter().cloned().fold(0.0f64, |a, b| a.max(b.abs()));
                    kmax_seen = kmax_seen.max(k);
                }
            }
            let drop = l0 - state.curve.total_arclength() - state.resample_loss;
            println!(
                "n {nodes} c {c_stab}: drop {drop:.3} loss {:.3} int {integral:.3} rel {:+.4} kmax {kmax_seen:.1} steps {steps} ({:.1}s)",
                state.resample_loss,
                (integral - drop) / drop,
                start.elapsed().as_secs_f64()
            );
        }
    }
}
