macro_rules! example {
    ($name:ident, $file:literal) => {
        mod $name {
            include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/", $file));

            #[test]
            fn runs() {
                run_example().unwrap();
            }
        }
    };
}

example!(simulate, "simulate.rs");
example!(short_time_limit, "short_time_limit.rs");
example!(saturation, "saturation.rs");
example!(steer, "steer.rs");
example!(steer_in_time, "steer_in_time.rs");
example!(noise_ensemble, "noise_ensemble.rs");
example!(experiment_runner, "experiment_runner.rs");
