use sphdecon_core::estimators::{Dataset, DeconvKernel};
use sphdecon_core::fourier::ErrorModel;
use sphdecon_core::geom::{fibonacci_grid, sample_error, sample_vmf_sphere, SpherePoint};
use sphdecon_core::inference::{intervals_on_grid, CiMethod};

#[test]
fn density_an_coverage_in_simulation_setup() {
    // X ~ vMF(0.1, (1,1,1)/sqrt 3), Laplace(0.5) rotations, n = 500
    let model = ErrorModel::laplace(2, 0.5).unwrap();
    let mean = SpherePoint::from_coords(vec![1.0, 1.0, 1.0]).unwrap();
    let kappa: f64 = 0.1;
    let truth = |x: &SpherePoint| {
        kappa / (4.0 * std::f64::consts::PI * kappa.sinh()) * (kappa * mean.dot(x)).exp()
    };
    let grid = fibonacci_grid(100);
    let k = DeconvKernel::from_model(&model, 2.0).unwrap();
    let (mut covered, mut total) = (0usize, 0usize);
    for r in 0..40 {
        let x = sample_vmf_sphere(&mean, kappa, 500, 100 + r).unwrap();
        let u = sample_error(&model, 500, 200 + r).unwrap();
        let z = x.iter().zip(&u).map(|(x, u)| u.apply(x).unwrap()).collect();
        let data = Dataset::new(z, None).unwrap();
        let est = intervals_on_grid(&data, &k, &grid, 0.95, CiMethod::An).unwrap();
        let (lo, hi) = (est.ci_low.unwrap(), est.ci_high.unwrap());
        for (i, p) in grid.iter().enumerate() {
            let f = truth(p);
            covered += (lo[i] <= f && f <= hi[i]) as usize;
            total += 1;
        }
    }
    let cov = covered as f64 / total as f64;
    assert!((0.85..=0.99).contains(&cov), "coverage {cov}");
}
