//! Cached 2D complex FFTs on the collocation grid.
//!
//! Plans are shared per thread; scratch buffers are allocated per call.

use std::cell::RefCell;
use std::collections::HashMap;
use std::rc::Rc;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

pub(crate) struct Fft2 {
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

thread_local! {
    static PLANS: RefCell<HashMap<usize, Rc<Fft2>>> = RefCell::new(HashMap::new());
}

impl Fft2 {
    pub(crate) fn get(n: usize) -> Rc<Fft2> {
        PLANS.with(|plans| {
            plans
                .borrow_mut()
                .entry(n)
                .or_insert_with(|| {
                    let mut planner = FftPlanner::new();
                    Rc::new(Fft2 {
                        n,
                        forward: planner.plan_fft_forward(n),
                        inverse: planner.plan_fft_inverse(n),
                    })
                })
                .clone()
        })
    }

    /// Unnormalised `sum_x f(x) e^{-2 pi i k.x / n}` in place (row-major `n x n`).
    pub(crate) fn forward(&self, data: &mut [Complex64]) {
        self.run(&*self.forward, data);
    }

    /// Unnormalised `sum_k f(k) e^{+2 pi i k.x / n}` in place.
    pub(crate) fn inverse(&self, data: &mut [Complex64]) {
        self.run(&*self.inverse, data);
    }

    fn run(&self, plan: &dyn Fft<f64>, data: &mut [Complex64]) {
        let n = self.n;
        debug_assert_eq!(data.len(), n * n);
        let mut scratch = vec![Complex64::default(); plan.get_inplace_scratch_len()];
        plan.process_with_scratch(data, &mut scratch);
        transpose_square(data, n);
        plan.process_with_scratch(data, &mut scratch);
        transpose_square(data, n);
    }
}

fn transpose_square(data: &mut [Complex64], n: usize) {
    for i in 0..n {
        for j in (i + 1)..n {
            data.swap(i * n + j, j * n + i);
        }
    }
}
