use kabp::mimo::{
    bit_llr, complex_gaussian, detect, mmse_filter, modulate, n0_from_ebn0, pic_cancel,
    residual_covariance, sample_channel, soft_symbol, ChannelRealization, CMatrix, CVector,
    ModulationMap, SoftSymbol,
};
use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn p0(l: f64) -> f64 {
    1.0 / (1.0 + (-l).exp())
}

/// Exhaustive extrinsic LLR of bit `j`: likelihood times the prior
/// probabilities of the other bits, summed over the constellation, clipped
/// like the detector output.
fn brute_llr(y: Complex64, gain: f64, var: f64, priors: &[f64], map: &ModulationMap, j: usize) -> f64 {
    let (mut num, mut den) = (0.0, 0.0);
    for (label, &a) in map.points().iter().enumerate() {
        let mut w = (-(y - a * gain).norm_sqr() / var).exp();
        for (i, &l) in priors.iter().enumerate() {
            if i != j {
                w *= if map.bit(label, i) == 0 { p0(l) } else { 1.0 - p0(l) };
            }
        }
        if map.bit(label, j) == 0 {
            num += w;
        } else {
            den += w;
        }
    }
    (num / den).ln().clamp(-kabp::decoder::LLR_CLIP, kabp::decoder::LLR_CLIP)
}

fn brute_soft(priors: &[f64], map: &ModulationMap) -> (Complex64, f64) {
    let mut mean = c(0.0, 0.0);
    let mut energy = 0.0;
    for (label, &a) in map.points().iter().enumerate() {
        let p: f64 = priors
            .iter()
            .enumerate()
            .map(|(i, &l)| if map.bit(label, i) == 0 { p0(l) } else { 1.0 - p0(l) })
            .product();
        mean += a * p;
        energy += p * a.norm_sqr();
    }
    (mean, energy - mean.norm_sqr())
}

proptest! {
    #[test]
    fn soft_symbol_matches_enumeration(a in -30.0f64..30.0, b in -30.0f64..30.0, qam in any::<bool>(),
                                       x in -30.0f64..30.0, z in -30.0f64..30.0) {
        let map = if qam { ModulationMap::qam16() } else { ModulationMap::qpsk() };
        let priors: Vec<f64> = [a, b, x, z][..map.bits_per_symbol()].to_vec();
        let s = soft_symbol(&priors, &map);
        let (mean, var) = brute_soft(&priors, &map);
        prop_assert!((s.mean - mean).norm() < 1e-12);
        prop_assert!((s.err_var - var.max(0.0)).abs() < 1e-12);
        // constant modulus bounds the residual by Es; 16-QAM by its peak energy
        let peak = map.points().iter().map(|p| p.norm_sqr()).fold(0.0, f64::max);
        let bound = if qam { peak } else { map.es() };
        prop_assert!(s.err_var >= 0.0 && s.err_var <= bound + 1e-12);
    }

    #[test]
    fn err_var_shrinks_with_confidence(l in 0.0f64..20.0, extra in 0.01f64..5.0, sign in any::<bool>()) {
        let map = ModulationMap::qpsk();
        let s = if sign { 1.0 } else { -1.0 };
        let weak = soft_symbol(&[s * l, 0.3], &map).err_var;
        let strong = soft_symbol(&[s * (l + extra), 0.3], &map).err_var;
        prop_assert!(strong <= weak + 1e-15);
    }

    #[test]
    fn bit_llr_matches_enumeration(yr in -2.0f64..2.0, yi in -2.0f64..2.0, gain in 0.05f64..1.0,
                                   var in 0.05f64..2.0, pa in -8.0f64..8.0, pb in -8.0f64..8.0,
                                   pc in -8.0f64..8.0, pd in -8.0f64..8.0, qam in any::<bool>()) {
        let map = if qam { ModulationMap::qam16() } else { ModulationMap::qpsk() };
        let priors = [pa, pb, pc, pd][..map.bits_per_symbol()].to_vec();
        let y = c(yr, yi);
        let out = bit_llr(y, gain, var, &priors, &map);
        for (j, &l) in out.iter().enumerate() {
            prop_assert!((l - brute_llr(y, gain, var, &priors, &map, j)).abs() < 1e-9);
        }
    }

    #[test]
    fn mmse_solve_residual_is_small(seed in any::<u64>(), n0 in 0.01f64..3.0, pa in -6.0f64..6.0, pb in -6.0f64..6.0) {
        let ch = sample_channel(4, 4, seed).unwrap();
        let map = ModulationMap::qpsk();
        let stats: Vec<SoftSymbol> = (0..4).map(|q| soft_symbol(&[pa * q as f64, pb], &map)).collect();
        for k in 0..4 {
            let f = mmse_filter(&ch, &stats, k, 1.0, n0).unwrap();
            let cov = residual_covariance(&ch, &stats, k, 1.0, n0);
            let lhs = &cov * &f.w;
            let rhs: CVector = ch.column(k).into_owned();
            let rel = (lhs - rhs.clone()).norm() / rhs.norm();
            prop_assert!(rel < 1e-10);
            prop_assert!(f.gain > 0.0 && f.gain <= 1.0 + 1e-12);
        }
    }
}

#[test]
fn scalar_mmse_closed_form() {
    let ch = CMatrix::from_element(1, 1, c(1.0, 0.0));
    let stats = [SoftSymbol {
        mean: c(0.0, 0.0),
        err_var: 1.0,
    }];
    let f = mmse_filter(&ch, &stats, 0, 1.0, 1.0).unwrap();
    assert_eq!(f.w[0], c(0.5, 0.0));
    assert_eq!(f.gain, 0.5);
    assert_eq!(f.eff_var, 0.25);
}

#[test]
fn zero_forcing_limit() {
    let ch = CMatrix::identity(3, 3) * c(0.0, 1.0);
    let stats = vec![
        SoftSymbol {
            mean: c(0.0, 0.0),
            err_var: 1.0
        };
        3
    ];
    for k in 0..3 {
        assert!((mmse_filter(&ch, &stats, k, 1.0, 1e-9).unwrap().gain - 1.0).abs() < 1e-8);
    }
}

#[test]
fn mmse_orthogonality_monte_carlo() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let map = ModulationMap::qpsk();
    let ch = sample_channel(4, 4, 3).unwrap();
    let n0 = 0.4;
    let priors = [[0.0, 0.0], [1.5, -0.7], [3.0, 2.0], [-0.4, 0.9]];
    let stats: Vec<SoftSymbol> = priors.iter().map(|p| soft_symbol(p, &map)).collect();
    let k = 0;
    let f = mmse_filter(&ch, &stats, k, 1.0, n0).unwrap();
    let samples = 100_000;
    let mut acc = CVector::zeros(4);
    for _ in 0..samples {
        // stream k uniform; the others drawn from their priors so that the
        // soft estimates are their true means
        let bits: Vec<u8> = priors
            .iter()
            .enumerate()
            .flat_map(|(q, p)| {
                p.iter()
                    .map(|&l| {
                        let prob0 = if q == k { 0.5 } else { p0(l) };
                        (rng.gen::<f64>() >= prob0) as u8
                    })
                    .collect::<Vec<_>>()
            })
            .collect();
        let s = modulate(&bits, &map, 4).unwrap().remove(0);
        let mut r = &ch * &s;
        for x in r.iter_mut() {
            *x += complex_gaussian(&mut rng, n0);
        }
        let rhat = pic_cancel(&r, &ch, &stats, k);
        let err = s[k] - f.w.dotc(&rhat);
        acc += rhat.map(|x| err * x.conj());
    }
    let worst = acc.iter().map(|x| x.norm() / samples as f64).fold(0.0, f64::max);
    assert!(worst < 0.01, "{worst}");
}

#[test]
fn soft_symbol_examples() {
    let map = ModulationMap::qpsk();
    let s = soft_symbol(&[2.0, -1.0], &map);
    let expected = c(1f64.tanh(), -(0.5f64).tanh()) / 2f64.sqrt();
    assert!((s.mean - expected).norm() < 1e-15);
    assert!((s.err_var - (1.0 - expected.norm_sqr())).abs() < 1e-15);
    let z = soft_symbol(&[0.0, 0.0], &map);
    assert_eq!(z.mean, c(0.0, 0.0));
    assert!((z.err_var - 1.0).abs() < 1e-15);
    let sure = soft_symbol(&[50.0, 50.0], &map);
    assert!((sure.mean - map.map(&[0, 0])).norm() < 1e-12);
    assert!(sure.err_var < 1e-12);
}

#[test]
fn qpsk_zero_prior_llr_closed_form() {
    let map = ModulationMap::qpsk();
    let (gain, var) = (0.7, 0.3);
    for y in [c(0.4, -0.9), c(-1.2, 0.1), c(0.05, 0.05)] {
        let out = bit_llr(y, gain, var, &[0.0, 0.0], &map);
        let scale = 2.0 * 2f64.sqrt() * gain / var;
        assert!((out[0] - scale * y.re).abs() < 1e-12);
        assert!((out[1] - scale * y.im).abs() < 1e-12);
    }
    let boundary = bit_llr(c(0.0, 0.6), gain, var, &[0.0, 0.0], &map);
    assert_eq!(boundary[0], 0.0);
}

#[test]
fn correct_prior_on_amplitude_bit_moves_sign_bit_toward_truth() {
    // transmitted real part +3/√10 (sign bit 0, amplitude bit 0), received
    // just right of the origin
    let map = ModulationMap::qam16();
    let s = 1.0 / 10f64.sqrt();
    let y = c(0.5 * s, 3.0 * s);
    let (gain, var) = (1.0, 0.2);
    let free = bit_llr(y, gain, var, &[0.0; 4], &map);
    let informed = bit_llr(y, gain, var, &[0.0, 12.0, 0.0, 0.0], &map);
    assert!(free[0] > 0.0);
    assert!(informed[0] > free[0] + 1.0);
    for (j, (&a, &b)) in free.iter().zip(&informed).enumerate() {
        assert!((a - brute_llr(y, gain, var, &[0.0; 4], &map, j)).abs() < 1e-9);
        assert!((b - brute_llr(y, gain, var, &[0.0, 12.0, 0.0, 0.0], &map, j)).abs() < 1e-9);
    }
}

#[test]
fn pic_cancellation_examples() {
    let map = ModulationMap::qpsk();
    let ch = sample_channel(2, 2, 7).unwrap();
    let bits = [0u8, 1, 1, 1];
    let s = modulate(&bits, &map, 2).unwrap().remove(0);
    let r = &ch * &s;
    let perfect: Vec<SoftSymbol> = bits.chunks(2).map(|b| {
        let l: Vec<f64> = b.iter().map(|&x| if x == 0 { 50.0 } else { -50.0 }).collect();
        soft_symbol(&l, &map)
    }).collect();
    for k in 0..2 {
        let rhat = pic_cancel(&r, &ch, &perfect, k);
        let direct: CVector = ch.column(k) * s[k];
        assert!((rhat - direct).norm() < 1e-12);
    }
    let blank = vec![SoftSymbol { mean: c(0.0, 0.0), err_var: 1.0 }; 2];
    assert_eq!(pic_cancel(&r, &ch, &blank, 0), r);

    // dense arithmetic on a 2×2 instance
    let stats = [SoftSymbol { mean: c(0.3, -0.1), err_var: 0.5 }, SoftSymbol { mean: c(-0.2, 0.6), err_var: 0.4 }];
    let rhat = pic_cancel(&r, &ch, &stats, 1);
    for i in 0..2 {
        let expect = r[i] - ch[(i, 0)] * stats[0].mean;
        assert!((rhat[i] - expect).norm() < 1e-15);
    }
}

#[test]
fn channel_entry_statistics() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let draws = 100_000;
    let (mut total, mut re, mut im) = (0.0, 0.0, 0.0);
    for _ in 0..draws {
        let x = complex_gaussian(&mut rng, 1.0);
        total += x.norm_sqr();
        re += x.re * x.re;
        im += x.im * x.im;
    }
    let v = total / draws as f64;
    assert!((0.99..=1.01).contains(&v), "{v}");
    assert!((re / draws as f64 - 0.5).abs() < 0.01);
    assert!((im / draws as f64 - 0.5).abs() < 0.01);
    assert_eq!(sample_channel(4, 4, 9).unwrap(), sample_channel(4, 4, 9).unwrap());
    assert!(sample_channel(2, 4, 0).is_err());
}

#[test]
fn received_snr_matches_configuration() {
    let map = ModulationMap::qpsk();
    let n0 = n0_from_ebn0(3.0, 0.5, 2, 1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let ch = ChannelRealization::new(CMatrix::identity(4, 4), n0, 1.0).unwrap();
    let (mut sig, mut noise) = (0.0, 0.0);
    for _ in 0..25_000 {
        let bits: Vec<u8> = (0..8).map(|_| rng.gen_range(0..2u8)).collect();
        let s = modulate(&bits, &map, 4).unwrap().remove(0);
        let r = ch.transmit(&s, &mut rng);
        sig += s.norm_squared();
        noise += (r - s).norm_squared();
    }
    let measured = sig / noise;
    assert!((measured / (1.0 / n0) - 1.0).abs() < 0.01, "{measured} vs {}", 1.0 / n0);
}

#[test]
fn noiseless_identity_channel_recovers_bits() {
    let map = ModulationMap::qpsk();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let ch = ChannelRealization::new(CMatrix::identity(4, 4), 1e-9, 1.0).unwrap();
    for _ in 0..200 {
        let bits: Vec<u8> = (0..8).map(|_| rng.gen_range(0..2u8)).collect();
        let s = modulate(&bits, &map, 4).unwrap().remove(0);
        let out = detect(&ch, &ch.transmit(&s, &mut rng), &[0.0; 8], &map).unwrap();
        let hard: Vec<u8> = out.llr1.iter().map(|&l| (l < 0.0) as u8).collect();
        assert_eq!(hard, bits);
    }
    assert!(modulate(&[0u8; 7], &map, 4).is_err());
    assert!((map.map(&[0, 0]) - c(1.0, 1.0) / 2f64.sqrt()).norm() < 1e-15);
}

#[test]
fn detector_llrs_are_consistent_in_sign() {
    let map = ModulationMap::qpsk();
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let n0 = n0_from_ebn0(2.0, 0.5, 2, 1.0);
    let (mut sum0, mut n0c, mut sum1, mut n1c) = (0.0, 0usize, 0.0, 0usize);
    for _ in 0..12_500 {
        let ch = ChannelRealization::sample(4, 4, n0, &mut rng).unwrap();
        let bits: Vec<u8> = (0..8).map(|_| rng.gen_range(0..2u8)).collect();
        let s = modulate(&bits, &map, 4).unwrap().remove(0);
        let out = detect(&ch, &ch.transmit(&s, &mut rng), &[0.0; 8], &map).unwrap();
        for (&b, &l) in bits.iter().zip(&out.llr1) {
            if b == 0 {
                sum0 += l;
                n0c += 1;
            } else {
                sum1 += l;
                n1c += 1;
            }
        }
    }
    let (m0, m1) = (sum0 / n0c as f64, sum1 / n1c as f64);
    assert!(m0 > 0.0 && m1 < 0.0);
    assert!((m0 + m1).abs() < 0.05 * m0, "{m0} {m1}");
}

#[test]
fn singular_system_is_reported() {
    let ch = CMatrix::from_element(2, 2, c(1.0, 0.0));
    let stats = vec![SoftSymbol { mean: c(0.0, 0.0), err_var: 1.0 }; 2];
    assert!(mmse_filter(&ch, &stats, 0, 1.0, 0.0).is_err());
}
