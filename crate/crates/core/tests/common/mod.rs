#![allow(dead_code)]

use quadsim::qp::{FrictionParams, QpWeights, WrenchMatrix};
use quadsim::so3::{Vec12, Vec3, Vec6};
use rand::Rng;

pub const HIPS: [[f64; 3]; 4] = [[0.183, -0.132, 0.0], [0.183, 0.132, 0.0], [-0.183, -0.132, 0.0], [-0.183, 0.132, 0.0]];

/// Random feasible balance problem with at least one stance leg.
pub struct Instance {
    pub a: WrenchMatrix,
    pub b: Vec6,
    pub w: QpWeights,
    pub f_prev: Vec12,
    pub contacts: [bool; 4],
    pub fp: FrictionParams,
}

pub fn random_instance(rng: &mut impl Rng) -> Instance {
    let mut contacts = [true; 4];
    match rng.random_range(0..4) {
        0 => {}
        1 => contacts[rng.random_range(0..4)] = false,
        2 => {
            let a = rng.random_range(0..4);
            contacts[a] = false;
            contacts[(a + rng.random_range(1..4)) % 4] = false;
        }
        _ => {
            contacts = [false; 4];
            contacts[rng.random_range(0..4)] = true;
        }
    }
    let p_c = Vec3::new(rng.random_range(-0.05..0.05), rng.random_range(-0.05..0.05), rng.random_range(0.2..0.35));
    let feet: [Vec3; 4] = std::array::from_fn(|i| {
        Vec3::new(HIPS[i][0] + rng.random_range(-0.08..0.08), HIPS[i][1] + rng.random_range(-0.05..0.05), 0.0)
    });
    let a = quadsim::qp::build_wrench_matrix(&feet, &p_c);
    let b = Vec6::new(
        rng.random_range(-40.0..40.0),
        rng.random_range(-40.0..40.0),
        rng.random_range(-20.0..300.0),
        rng.random_range(-15.0..15.0),
        rng.random_range(-15.0..15.0),
        rng.random_range(-8.0..8.0),
    );
    let s = Vec6::from_fn(|_, _| rng.random_range(1.0..60.0));
    let w = QpWeights { s, gamma1: rng.random_range(0.01..1.0), gamma2: rng.random_range(0.0..0.1) };
    let f_prev = Vec12::from_fn(|_, _| rng.random_range(-20.0..80.0));
    let fp = FrictionParams { mu: rng.random_range(0.3..1.0), fz_min: 0.0, fz_max: rng.random_range(80.0..250.0) };
    Instance { a, b, w, f_prev, contacts, fp }
}

/// Euclidean projection onto one foot's friction pyramid with normal-force bounds.
/// Candidate active subsets of the six half-spaces are enumerated; the first one
/// meeting the KKT conditions gives the projection.
pub fn project_foot(q: &Vec3, fp: &FrictionParams) -> Vec3 {
    let mu = fp.mu;
    // n · f ≤ c
    let planes: [(Vec3, f64); 6] = [
        (Vec3::new(1.0, 0.0, -mu), 0.0),
        (Vec3::new(-1.0, 0.0, -mu), 0.0),
        (Vec3::new(0.0, 1.0, -mu), 0.0),
        (Vec3::new(0.0, -1.0, -mu), 0.0),
        (Vec3::new(0.0, 0.0, -1.0), -fp.fz_min),
        (Vec3::new(0.0, 0.0, 1.0), fp.fz_max),
    ];
    let feasible = |f: &Vec3| planes.iter().all(|(n, c)| n.dot(f) <= c + 1e-12);
    if feasible(q) {
        return *q;
    }
    for mask in 1u32..64 {
        if mask.count_ones() > 3 {
            continue;
        }
        let mut idx = [0usize; 3];
        let mut k = 0;
        for i in 0..6 {
            if mask & (1 << i) != 0 {
                idx[k] = i;
                k += 1;
            }
        }
        // Gram system padded with identity rows for unused slots.
        let mut gram = nalgebra::Matrix3::<f64>::identity();
        let mut resid = Vec3::zeros();
        for i in 0..k {
            for j in 0..k {
                gram[(i, j)] = planes[idx[i]].0.dot(&planes[idx[j]].0);
            }
            resid[i] = planes[idx[i]].0.dot(q) - planes[idx[i]].1;
        }
        if gram.determinant().abs() < 1e-12 {
            continue;
        }
        let lam = gram.try_inverse().expect("nonsingular") * resid;
        if (0..k).any(|i| lam[i] < -1e-12) {
            continue;
        }
        let mut f = *q;
        for i in 0..k {
            f -= planes[idx[i]].0 * lam[i];
        }
        if feasible(&f) {
            return f;
        }
    }
    unreachable!("projection onto a non-empty polyhedron exists")
}

/// Accelerated projected gradient with adaptive restart.
pub fn projected_gradient_oracle(inst: &Instance, max_iter: usize) -> Vec12 {
    projected_gradient_oracle_counted(inst, max_iter).0
}

pub fn projected_gradient_oracle_counted(inst: &Instance, max_iter: usize) -> (Vec12, usize) {
    let s = nalgebra::SMatrix::<f64, 6, 6>::from_diagonal(&inst.w.s);
    let reg = inst.w.gamma1 + inst.w.gamma2;
    let h = inst.a.transpose() * s * inst.a * 2.0 + nalgebra::SMatrix::<f64, 12, 12>::identity() * (2.0 * reg);
    let g = -(inst.a.transpose() * s * inst.b) * 2.0 - inst.f_prev * (2.0 * inst.w.gamma2);
    let lip = h.symmetric_eigenvalues().max();
    let project = |f: &Vec12| -> Vec12 {
        let mut out = Vec12::zeros();
        for leg in 0..4 {
            if inst.contacts[leg] {
                let p = project_foot(&f.fixed_rows::<3>(3 * leg).into_owned(), &inst.fp);
                out.fixed_rows_mut::<3>(3 * leg).copy_from(&p);
            }
        }
        out
    };
    let obj = |f: &Vec12| 0.5 * f.dot(&(h * f)) + g.dot(f);
    let mut x = project(&Vec12::zeros());
    let mut y = x;
    let mut t = 1.0f64;
    let mut fx = obj(&x);
    let mut best = fx;
    let mut stale = 0;
    let mut iters = 0;
    while iters < max_iter {
        iters += 1;
        let next = project(&(y - (h * y + g) / lip));
        let f_next = obj(&next);
        if f_next > fx {
            if t == 1.0 {
                // A plain projected-gradient step no longer descends.
                break;
            }
            y = x;
            t = 1.0;
            continue;
        }
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        y = next + (next - x) * ((t - 1.0) / t_next);
        let step = (next - x).amax();
        x = next;
        fx = f_next;
        t = t_next;
        if step < 1e-12 {
            break;
        }
        // Stop once the objective has stopped moving at working precision.
        if best - fx > 1e-15 * best.abs().max(1.0) {
            best = fx;
            stale = 0;
        } else {
            stale += 1;
            if stale > 5000 {
                break;
            }
        }
    }
    (x, iters)
}

/// Tumbling free flight of an asymmetric body, integrated with plant steps of
/// `dt` over 0.1 s. No contacts, so only gravity and the gyroscopic term act.
pub fn free_flight(dt: f64) -> quadsim::plant::PlantState {
    use quadsim::plant::{plant_step, InertialParams, PlantState, TrueBody, Wrench};
    let body = TrueBody::unloaded(InertialParams::diagonal(12.0, 0.07, 0.26, 0.24).unwrap());
    let mut s = PlantState::standing(Vec3::new(0.0, 0.0, 0.3), [Vec3::zeros(); 4]);
    s.contact = [false; 4];
    s.v_c = Vec3::new(0.4, -0.2, 1.0);
    s.omega_b = Vec3::new(3.0, 0.5, -2.0);
    let n = (0.1 / dt).round() as usize;
    for _ in 0..n {
        s = plant_step(&s, &Vec12::zeros(), &body, &Wrench::default(), dt).unwrap();
    }
    s
}

pub fn state_distance(a: &quadsim::plant::PlantState, b: &quadsim::plant::PlantState) -> f64 {
    let dr = (a.rot.matrix() - b.rot.matrix()).norm();
    [(a.p_c - b.p_c).norm(), (a.v_c - b.v_c).norm(), (a.omega_b - b.omega_b).norm(), dr].into_iter().fold(0.0, f64::max)
}

/// Error at dt = 1 ms over error at dt = 0.5 ms, both against a 1 µs reference.
pub fn plant_convergence_ratio() -> f64 {
    let reference = free_flight(1e-6);
    state_distance(&free_flight(1e-3), &reference) / state_distance(&free_flight(5e-4), &reference)
}
