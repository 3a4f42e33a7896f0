//! Collision checking against the point-sampling oracle, plus the geometric
//! invariants as property tests.

mod common;

use common::{oracle_boxes_intersect, oracle_config_collides, random_box, signed_clearance};
use planfolio::env_gen::{generate_arm_problem, generate_nav_problem};
use planfolio::geometry::{
    boxes_intersect, config_collides, motion_valid, normalize_angle, OrientedBox,
};
use planfolio::problem::Vec2;
use planfolio::rng::Stream;
use proptest::prelude::*;

#[test]
fn narrow_diagonal_contact_matches_oracle() {
    // Thin box reaching toward another at 45 degrees; the verdict comes from
    // the sampling oracle, not from eyeballing.
    let a = OrientedBox::new(Vec2::new(0.0, 0.0), Vec2::new(1.0, 0.2), 0.0);
    let b = OrientedBox::new(
        Vec2::new(0.9, 0.0),
        Vec2::new(1.0, 0.2),
        std::f64::consts::FRAC_PI_4,
    );
    let want = oracle_boxes_intersect(&a, &b, 1000);
    assert_eq!(boxes_intersect(&a, &b), want);
}

#[test]
fn randomized_pairs_match_sampling_oracle() {
    // Margin-filtered randomized suite; full 200-pair 10^6-point run lives in
    // the acceptance suite, this is a faster spot check.
    let mut rng = Stream::new(0xB0);
    let mut checked = 0;
    while checked < 60 {
        let a = random_box(&mut rng);
        let b = random_box(&mut rng);
        if signed_clearance(&a, &b).abs() <= 1e-4 {
            continue;
        }
        checked += 1;
        let want = oracle_boxes_intersect(&a, &b, 300);
        assert_eq!(boxes_intersect(&a, &b), want, "a={a:?} b={b:?}");
    }
}

#[test]
fn config_collision_matches_oracle_on_randomized_cases() {
    // 100 margin-filtered cases per robot type.
    let mut rng = Stream::new(0xC0);
    let mut nav_checked = 0;
    let mut seed = 0u64;
    while nav_checked < 100 {
        seed += 1;
        let problem = generate_nav_problem(seed);
        let q = vec![
            rng.uniform(0.0, 0.9),
            rng.uniform(0.0, 0.9),
            rng.angle(),
        ];
        let Some(want) = oracle_config_collides(&problem, &q, 300, 1e-4) else {
            continue;
        };
        nav_checked += 1;
        assert_eq!(
            config_collides(&problem, &q).unwrap(),
            want,
            "nav seed {seed} q {q:?}"
        );
    }

    let mut arm_checked = 0;
    seed = 0;
    while arm_checked < 100 {
        seed += 1;
        let Ok(problem) = generate_arm_problem(seed, 3) else {
            continue;
        };
        let q: Vec<f64> = (0..3).map(|_| rng.angle()).collect();
        let Some(want) = oracle_config_collides(&problem, &q, 300, 1e-4) else {
            continue;
        };
        arm_checked += 1;
        assert_eq!(
            config_collides(&problem, &q).unwrap(),
            want,
            "arm seed {seed} q {q:?}"
        );
    }
}

#[test]
fn motion_refinement_disagreements_are_one_sided() {
    // Coarse (0.01) vs fine (0.0001) agreement on narrow-gap crossings:
    // whenever they disagree, coarse says valid and fine says invalid.
    let mut rng = Stream::new(0xD0);
    let mut agree = 0;
    let mut disagree = 0;
    for seed in 0..40 {
        let problem = generate_nav_problem(seed);
        for _ in 0..5 {
            let q0 = vec![rng.uniform(0.0, 0.9), rng.uniform(0.0, 0.9), rng.angle()];
            let q1 = vec![rng.uniform(0.0, 0.9), rng.uniform(0.0, 0.9), rng.angle()];
            if config_collides(&problem, &q0).unwrap() || config_collides(&problem, &q1).unwrap()
            {
                continue;
            }
            let coarse = motion_valid(&problem, &q0, &q1, 0.01).unwrap();
            let fine = motion_valid(&problem, &q0, &q1, 0.0001).unwrap();
            if coarse == fine {
                agree += 1;
            } else {
                disagree += 1;
                assert!(
                    coarse && !fine,
                    "disagreement must be coarse-valid/fine-invalid"
                );
            }
        }
    }
    // Report the rate; most motions agree.
    println!("refinement agreement: {agree} agree, {disagree} one-sided disagreements");
    assert!(agree > 0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn intersection_is_symmetric(seed in 0u64..10_000) {
        let mut rng = Stream::new(seed);
        let a = random_box(&mut rng);
        let b = random_box(&mut rng);
        prop_assert_eq!(boxes_intersect(&a, &b), boxes_intersect(&b, &a));
    }

    #[test]
    fn intersection_is_rigid_transform_invariant(
        seed in 0u64..10_000,
        tx in -2.0f64..2.0,
        ty in -2.0f64..2.0,
        rot in -3.0f64..3.0,
    ) {
        let mut rng = Stream::new(seed);
        let a = random_box(&mut rng);
        let b = random_box(&mut rng);
        let transform = |bx: &OrientedBox| {
            let c = bx.center.rotated(rot) + Vec2::new(tx, ty);
            OrientedBox::new(c, bx.half_extents, normalize_angle(bx.angle + rot))
        };
        // Exclude near-boundary pairs: a rigid transform perturbs the
        // arithmetic by a few ulps, which can flip exact-touch verdicts.
        prop_assume!(signed_clearance(&a, &b).abs() > 1e-9);
        prop_assert_eq!(
            boxes_intersect(&a, &b),
            boxes_intersect(&transform(&a), &transform(&b))
        );
    }

    #[test]
    fn motion_validity_is_monotone_in_resolution(seed in 0u64..500) {
        let problem = generate_nav_problem(seed);
        let mut rng = Stream::new(seed ^ 0xABCD);
        let q0 = vec![rng.uniform(0.0, 0.9), rng.uniform(0.0, 0.9), rng.angle()];
        let q1 = vec![rng.uniform(0.0, 0.9), rng.uniform(0.0, 0.9), rng.angle()];
        prop_assume!(!config_collides(&problem, &q0).unwrap());
        prop_assume!(!config_collides(&problem, &q1).unwrap());
        let mut prev_valid = true;
        for res in [0.02, 0.01, 0.005, 0.0025, 0.00125] {
            let valid = motion_valid(&problem, &q0, &q1, res).unwrap();
            // Once invalid at a coarser resolution, finer ones stay invalid.
            if !prev_valid {
                prop_assert!(!valid, "resolution {res} resurrected a rejected motion");
            }
            prev_valid = valid;
        }
    }

    #[test]
    fn normalize_angle_is_in_half_open_interval(a in -100.0f64..100.0) {
        let r = normalize_angle(a);
        prop_assert!(r > -std::f64::consts::PI && r <= std::f64::consts::PI);
    }
}
