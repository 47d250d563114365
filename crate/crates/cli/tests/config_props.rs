use proptest::prelude::*;
use qutrit_floquet::phase::GridAxis;
use qutrit_floquet_cli::config::{Format, RunConfig, SweepSection};

fn config() -> impl Strategy<Value = RunConfig> {
    (2usize..12, -4.0f64..4.0, -4.0f64..4.0, 0usize..500, -1.0f64..1.0, 1usize..5, 1e-12f64..1e-3, 1usize..1000, any::<bool>())
        .prop_map(|(l, tx, tz, steps, eps, stride, tol, cap, sweep)| {
            let mut c = RunConfig::new(l, tx, tz, steps);
            c.epsilon = eps;
            c.measure_every = stride;
            c.tebd_tol = tol;
            c.chi_cap = cap;
            if sweep {
                c.sweep = Some(SweepSection { grid_x: GridAxis::new(0.0, tx.abs(), 5), grid_z: GridAxis::new(0.0, tz.abs(), 7), cycles: steps });
            }
            c
        })
}

proptest! {
    #[test]
    fn parse_inverts_serialize(c in config()) {
        for f in [Format::Json, Format::Toml] {
            prop_assert_eq!(RunConfig::parse_str(&c.to_string(f), f).unwrap(), c.clone());
        }
    }
}
