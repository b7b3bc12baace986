use corrobe_core::corruption::{enumerate_corruptions, psnr, CorruptionKind, CorruptionSpec, Corruptor, MAX_SEVERITY};
use corrobe_core::synthetic::test_images;

const SEEDS: u64 = 10;

fn mean_psnr(c: &Corruptor, kind: CorruptionKind, severity: u8) -> Vec<f64> {
    let spec = CorruptionSpec::new(kind, severity).unwrap();
    let stochastic = c.params().is_stochastic(kind);
    let seeds = if stochastic { SEEDS } else { 1 };
    test_images()
        .iter()
        .map(|(id, img)| {
            (0..seeds)
                .map(|seed| psnr(img, &c.corrupt(img, &spec, seed, id).unwrap()))
                .sum::<f64>()
                / seeds as f64
        })
        .collect()
}

#[test]
fn psnr_never_rises_with_severity() {
    let c = Corruptor::default();
    let mut failures = Vec::new();
    for kind in CorruptionKind::ALL {
        let curves: Vec<Vec<f64>> = (1..=MAX_SEVERITY).map(|s| mean_psnr(&c, kind, s)).collect();
        for img in 0..curves[0].len() {
            for s in 1..curves.len() {
                let (prev, cur) = (curves[s - 1][img], curves[s][img]);
                if cur > prev + 0.5 {
                    failures.push(format!("{kind} image {img}: s{} {prev:.2} dB -> s{} {cur:.2} dB", s, s + 1));
                }
            }
        }
    }
    assert!(failures.is_empty(), "{}", failures.join("\n"));
}

#[test]
fn seeded_runs_are_bit_identical() {
    let c = Corruptor::default();
    for (id, img) in test_images().iter().take(2) {
        for spec in enumerate_corruptions() {
            let a = c.corrupt(img, &spec, 42, id).unwrap();
            let b = c.corrupt(img, &spec, 42, id).unwrap();
            assert_eq!(a, b, "{spec}");
            assert_eq!((a.width(), a.height()), (img.width(), img.height()));
        }
    }
}
