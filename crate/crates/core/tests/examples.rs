//! Every cargo example runs to completion.

macro_rules! example {
    ($name:ident) => {
        mod $name {
            include!(concat!("../examples/", stringify!($name), ".rs"));
        }

        #[test]
        fn $name() {
            $name::run_example().unwrap();
        }
    };
}

example!(exact_magnitude);
example!(iterative_solvers);
example!(subset_selection);
example!(cover_hierarchy);
example!(magnitude_function);
example!(clustering);
example!(submodularity_lab);
example!(param_magnitude);
example!(solver_bench);
