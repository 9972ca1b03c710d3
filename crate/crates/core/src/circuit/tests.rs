use super::*;
use crate::linalg::{haar_random_unitary, random_state, ComplexVector, C64, ONE};

fn identities(k: usize, n: usize) -> Vec<ComplexMatrix> {
    vec![ComplexMatrix::identity(n); k]
}

fn spec_with(weights: Vec<f64>, unitaries: Vec<ComplexMatrix>) -> CircuitSpec {
    let qubits = unitaries[0].rows().trailing_zeros() as usize;
    CircuitSpec::new(qubits, weights, unitaries, Mixing::Hadamard, Variant::Reflection).unwrap()
}

/// Gate-by-gate simulation: single-qubit Hadamards on each index qubit (or
/// the dense mixing matrix for other mixings), then per-term controlled
/// `R_t` and controlled `U_t`, then the output mixing layer. Uses only index
/// arithmetic on the flat state, no Kronecker products.
fn statevector_oracle(spec: &CircuitSpec, psi: &ComplexVector) -> ComplexVector {
    let (k, n) = (spec.terms(), spec.dim());
    let at = |i: usize, r: usize, kk: usize| (i * 2 + r) * n + kk;
    let mut state = vec![C64::new(0.0, 0.0); 2 * k * n];
    state[..n].copy_from_slice(psi.as_slice());

    let apply_index = |state: &mut Vec<C64>, g: &ComplexMatrix| {
        let old = state.clone();
        for i in 0..k {
            for r in 0..2 {
                for kk in 0..n {
                    state[at(i, r, kk)] = (0..k).map(|j| g[(i, j)] * old[at(j, r, kk)]).sum();
                }
            }
        }
    };
    let hadamard_qubits = |state: &mut Vec<C64>| {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let mut bit = 1;
        while bit < k {
            for i in (0..k).filter(|i| i & bit == 0) {
                for r in 0..2 {
                    for kk in 0..n {
                        let (a, b) = (state[at(i, r, kk)], state[at(i | bit, r, kk)]);
                        state[at(i, r, kk)] = (a + b) * s;
                        state[at(i | bit, r, kk)] = (a - b) * s;
                    }
                }
            }
            bit <<= 1;
        }
    };

    match spec.mixing() {
        Mixing::Hadamard => hadamard_qubits(&mut state),
        _ => apply_index(&mut state, &spec.mixing_matrix().adjoint()),
    }
    for t in 0..k {
        let w = spec.weights()[t];
        let r = (1.0 - w * w).sqrt();
        let gate = match spec.variant() {
            Variant::Reflection => [[w, r], [r, -w]],
            Variant::Cyclic => [[w, r], [-r, w]],
        };
        for kk in 0..n {
            let (a, b) = (state[at(t, 0, kk)], state[at(t, 1, kk)]);
            state[at(t, 0, kk)] = a * gate[0][0] + b * gate[0][1];
            state[at(t, 1, kk)] = a * gate[1][0] + b * gate[1][1];
        }
        let u = &spec.unitaries()[t];
        for rr in 0..2 {
            let block: Vec<C64> = (0..n).map(|kk| state[at(t, rr, kk)]).collect();
            for row in 0..n {
                state[at(t, rr, row)] = (0..n).map(|col| u[(row, col)] * block[col]).sum();
            }
        }
    }
    match spec.mixing() {
        Mixing::Hadamard => hadamard_qubits(&mut state),
        _ => apply_index(&mut state, &spec.mixing_matrix()),
    }
    ComplexVector::new(state)
}

#[test]
fn rotation_gate_examples() {
    let z = rotation_gate(1.0, Variant::Reflection).unwrap();
    assert_eq!(z, ComplexMatrix::from_real(2, 2, &[1.0, 0.0, 0.0, -1.0]).unwrap());
    let x = rotation_gate(0.0, Variant::Reflection).unwrap();
    assert_eq!(x, ComplexMatrix::from_real(2, 2, &[0.0, 1.0, 1.0, 0.0]).unwrap());
    let g = rotation_gate(0.6, Variant::Reflection).unwrap();
    let expect = ComplexMatrix::from_real(2, 2, &[0.6, 0.8, 0.8, -0.6]).unwrap();
    assert!(g.distance(&expect) < 1e-15);
    let c = rotation_gate(0.6, Variant::Cyclic).unwrap();
    assert!(c.unitarity_defect() < 1e-15);
    assert!(rotation_gate(1.0001, Variant::Reflection).is_err());
    assert!(rotation_gate(f64::NAN, Variant::Reflection).is_err());
}

#[test]
fn scale_coefficient_examples() {
    assert_eq!(scale_coefficients(&[2.0, -1.0]).unwrap(), (2.0, vec![1.0, -0.5]));
    assert_eq!(scale_coefficients(&[0.3, 0.3]).unwrap(), (0.3, vec![1.0, 1.0]));
    let alpha = [1.0, 1.0, 0.1, 0.1];
    assert_eq!(scale_coefficients(&alpha).unwrap(), (1.0, alpha.to_vec()));
    assert!(scale_coefficients(&[0.0, 0.0]).is_err());
}

#[test]
fn spec_rejects_invalid() {
    let ids = identities(3, 2);
    assert!(CircuitSpec::new(1, vec![1.0; 3], ids, Mixing::Hadamard, Variant::Reflection).is_err());
    assert!(CircuitSpec::new(1, vec![1.0, 1.5], identities(2, 2), Mixing::Hadamard, Variant::Reflection).is_err());
    assert!(CircuitSpec::new(2, vec![1.0, 1.0], identities(2, 2), Mixing::Hadamard, Variant::Reflection).is_err());
    let mut bad = identities(2, 2);
    bad[1][(0, 0)] = C64::new(2.0, 0.0);
    assert!(matches!(
        CircuitSpec::new(1, vec![1.0, 1.0], bad, Mixing::Hadamard, Variant::Reflection),
        Err(LcuError::NotUnitary(_))
    ));
    let not_unitary = ComplexMatrix::from_real(2, 2, &[1.0, 1.0, 0.0, 1.0]).unwrap();
    assert!(CircuitSpec::new(1, vec![1.0, 1.0], identities(2, 2), Mixing::Secret(not_unitary), Variant::Reflection).is_err());
}

#[test]
fn select_operator_cases() {
    let spec = spec_with(vec![1.0], identities(1, 2));
    let z_i = ComplexMatrix::diag(&[ONE, ONE, -ONE, -ONE]);
    assert_eq!(select_operator(&spec), z_i);

    let spec = spec_with(vec![1.0, 1.0], identities(2, 2));
    assert_eq!(select_operator(&spec), ComplexMatrix::direct_sum(&[z_i.clone(), z_i]));

    let spec = CircuitSpec::haar(vec![0.9, 0.2, -0.4, 0.7], 2, 5).unwrap();
    let m = select_operator(&spec);
    let n = spec.dim();
    assert!(m.unitarity_defect() < 1e-10);
    for t in 0..4 {
        let g = rotation_gate(spec.weights()[t], Variant::Reflection).unwrap();
        let u = &spec.unitaries()[t];
        for a in 0..2 * n {
            for b in 0..2 * n {
                // Elementwise Kronecker definition.
                let expect = g[(a / n, b / n)] * u[(a % n, b % n)];
                assert_eq!(m[(t * 2 * n + a, t * 2 * n + b)], expect);
            }
        }
        for s in (0..4).filter(|&s| s != t) {
            assert_eq!(m.submatrix(t * 2 * n, s * 2 * n, 2 * n, 2 * n).frobenius_norm(), 0.0);
        }
    }
}

#[test]
fn circuit_unitary_cases() {
    let spec = spec_with(vec![1.0], identities(1, 4));
    let v = circuit_unitary(&spec);
    let expect = kron(&ComplexMatrix::diag(&[ONE, -ONE]), &ComplexMatrix::identity(4));
    assert!(v.distance(&expect) < 1e-15);

    for (k, n, seed) in [(2, 1, 1), (4, 2, 2), (8, 1, 3)] {
        let w: Vec<f64> = (0..k).map(|t| 0.1 + 0.8 * t as f64 / k as f64).collect();
        let spec = CircuitSpec::haar(w, n, seed).unwrap();
        assert!(circuit_unitary(&spec).unitarity_defect() < 1e-10);
    }
}

#[test]
fn circuit_unitary_matches_gate_by_gate() {
    let spec = CircuitSpec::haar(vec![0.3, 1.0, 0.5, -0.8], 2, 6).unwrap();
    let psi = random_state(4, 7).unwrap();
    let dense = circuit_unitary(&spec).apply(&extended_input(&spec, &psi));
    let oracle = statevector_oracle(&spec, &psi);
    assert!(dense.distance(&oracle) < 1e-13);

    // The same state, read out per outcome.
    let out = output_states(&spec, &psi).unwrap();
    for i in 0..4 {
        for r in 0..2 {
            let slice = &oracle.as_slice()[(i * 2 + r) * 4..(i * 2 + r + 1) * 4];
            assert!(ComplexVector::new(slice.to_vec()).distance(out.state(i, r)) < 1e-13);
        }
    }

    for mixing in [Mixing::Dft, Mixing::Secret(haar_random_unitary(4, 8).unwrap())] {
        let s = spec.with_mixing(mixing).unwrap().with_variant(Variant::Cyclic);
        let dense = circuit_unitary(&s).apply(&extended_input(&s, &psi));
        assert!(dense.distance(&statevector_oracle(&s, &psi)) < 1e-13);
        let out = output_states(&s, &psi).unwrap();
        for i in 0..4 {
            for r in 0..2 {
                let slice = &dense.as_slice()[(i * 2 + r) * 4..(i * 2 + r + 1) * 4];
                assert!(ComplexVector::new(slice.to_vec()).distance(out.state(i, r)) < 1e-13);
            }
        }
    }
}

#[test]
fn output_state_examples() {
    let n = 4;
    let psi = random_state(n, 9).unwrap();
    let spec = spec_with(vec![0.7; 4], identities(4, n));
    let out = output_states(&spec, &psi).unwrap();
    assert!(out.state(0, 0).distance(&psi.scale_real(0.7)) < 1e-15);
    for i in 1..4 {
        assert!(out.state(i, 0).norm() < 1e-15);
        assert!(out.state(i, 1).norm() < 1e-15);
    }

    let spec = CircuitSpec::haar(vec![1.0], 2, 10).unwrap();
    let out = output_states(&spec, &psi).unwrap();
    assert!(out.state(0, 0).distance(&spec.unitaries()[0].apply(&psi)) < 1e-15);
    assert_eq!(out.state(0, 1).norm(), 0.0);
    assert!((out.probability(0, 0) - 1.0).abs() < 1e-14);

    // All-plus outcome: D_w psi / K and D_r psi / K.
    let spec = CircuitSpec::haar(vec![0.9, 0.4, 0.6, 0.2], 2, 11).unwrap();
    let out = output_states(&spec, &psi).unwrap();
    let dw = spec.linear_combination(spec.weights()).apply(&psi).scale_real(0.25);
    let dr = spec.linear_combination(&spec.complements()).apply(&psi).scale_real(0.25);
    assert!(out.state(0, 0).distance(&dw) < 1e-14);
    assert!(out.state(0, 1).distance(&dr) < 1e-14);

    assert!(output_states(&spec, &random_state(8, 1).unwrap()).is_err());
    let unnormalized = psi.scale_real(2.0);
    assert!(output_states(&spec, &unnormalized).is_err());
}

#[test]
fn output_states_match_full_unitary_slices() {
    let spec = CircuitSpec::haar(vec![1.0, 1.0, 0.5, 0.5], 4, 12).unwrap();
    let psi = random_state(16, 13).unwrap();
    let full = circuit_unitary(&spec).apply(&extended_input(&spec, &psi));
    let out = output_states(&spec, &psi).unwrap();
    let mut total = 0.0;
    for i in 0..4 {
        for r in 0..2 {
            let slice = &full.as_slice()[(i * 2 + r) * 16..(i * 2 + r + 1) * 16];
            assert!(ComplexVector::new(slice.to_vec()).distance(out.state(i, r)) < 1e-12);
            let p = out.probability(i, r);
            assert!((p - out.state(i, r).norm_sqr()).abs() < 1e-12);
            total += p;
        }
    }
    assert!((total - 1.0).abs() < 1e-10);
}

#[test]
fn unit_weights_silence_rotation_outcomes() {
    let spec = CircuitSpec::haar(vec![1.0; 8], 2, 14).unwrap();
    let out = output_states(&spec, &random_state(4, 15).unwrap()).unwrap();
    for i in 0..8 {
        assert_eq!(out.probability(i, 1), 0.0);
    }
}

#[test]
fn variant_changes_only_signs() {
    let spec = CircuitSpec::haar(vec![0.8, 0.3, 0.5, 0.9], 2, 16).unwrap();
    let cyc = spec.with_variant(Variant::Cyclic);
    let psi = random_state(4, 17).unwrap();
    let a = output_states(&spec, &psi).unwrap();
    let b = output_states(&cyc, &psi).unwrap();
    for i in 0..4 {
        assert!(a.state(i, 1).distance(&b.state(i, 1).scale_real(-1.0)) < 1e-15);
        assert_eq!(a.state(i, 0), b.state(i, 0));
        assert!((a.probability(i, 1) - b.probability(i, 1)).abs() < 1e-15);
    }
}

#[test]
fn success_probability_cases() {
    let psi = random_state(4, 18).unwrap();
    let spec = CircuitSpec::haar(vec![1.0], 2, 19).unwrap();
    let p = success_probabilities(&spec, &psi, &[1.0]).unwrap();
    assert!((p.p00 - 1.0).abs() < 1e-14 && (p.p_std - 1.0).abs() < 1e-14);

    let spec = spec_with(vec![1.0; 4], identities(4, 4));
    let p = success_probabilities(&spec, &psi, &[1.0; 4]).unwrap();
    assert!((p.p00 - 1.0).abs() < 1e-14 && (p.p_std - 1.0).abs() < 1e-14);

    let alpha = [1.0, 1.0, 0.5, 0.5];
    let spec = CircuitSpec::haar(alpha.to_vec(), 4, 20).unwrap();
    let psi16 = random_state(16, 21).unwrap();
    let p = success_probabilities(&spec, &psi16, &alpha).unwrap();
    assert!((p.p00 - p.p00_simulated).abs() < 1e-12);
    assert!(p.p_std >= p.p00);
    assert!(p.p0_any >= p.p00 && p.p0_any <= 1.0);

    assert!(success_probabilities(&spec, &psi16, &[1.0, 1.0, 0.5, 0.4]).is_err());
    assert!(success_probabilities(&spec, &psi16, &[1.0, 1.0]).is_err());
    let secret = spec.with_mixing(Mixing::Secret(haar_random_unitary(4, 1).unwrap())).unwrap();
    assert!(matches!(
        success_probabilities(&secret, &psi16, &alpha),
        Err(LcuError::Unsupported(_))
    ));
}

#[test]
fn shots_concentrated_and_deterministic() {
    let spec = spec_with(vec![1.0], identities(1, 2));
    let psi = ComplexVector::basis(2, 0);
    let d = sample_shots(&spec, &psi, 1000, 3).unwrap();
    assert_eq!(d.count(0, 0, 0), 1000);
    assert_eq!(d.counts.len(), 1);
    assert!(sample_shots(&spec, &psi, 0, 3).is_err());

    let spec = CircuitSpec::haar(vec![0.4, 0.9], 2, 22).unwrap();
    let psi = random_state(4, 23).unwrap();
    assert_eq!(
        sample_shots(&spec, &psi, 5000, 24).unwrap(),
        sample_shots(&spec, &psi, 5000, 24).unwrap()
    );
}

#[test]
fn shots_within_multinomial_bounds() {
    let spec = CircuitSpec::haar(vec![0.4, 0.9], 2, 25).unwrap();
    let psi = random_state(4, 26).unwrap();
    let shots = 1_000_000u64;
    let data = sample_shots(&spec, &psi, shots, 27).unwrap();
    assert_eq!(data.counts.values().sum::<u64>(), shots);
    let probs = outcome_distribution(&spec, &psi).unwrap();
    let (k, n) = (2, 4);
    for (idx, &p) in probs.iter().enumerate() {
        let row = idx / n;
        let (i, r, col) = (row % k, row / k, idx % n);
        let freq = data.count(i, r, col) as f64 / shots as f64;
        let bound = 5.0 * (p * (1.0 - p) / shots as f64).sqrt() + 1.0 / shots as f64;
        assert!((freq - p).abs() <= bound, "({i},{r},{col}): {freq} vs {p}");
    }
}

#[test]
fn plusminus_examples() {
    let psi = random_state(4, 28).unwrap();
    let spec = CircuitSpec::haar(vec![1.0; 4], 2, 29).unwrap();
    let out = output_states(&spec, &psi).unwrap();
    let pm = plusminus_states(&spec, &psi).unwrap();
    let s = std::f64::consts::FRAC_1_SQRT_2;
    for i in 0..4 {
        assert_eq!(pm.plus[i], pm.minus[i]);
        assert!(pm.plus[i].distance(&out.state(i, 0).scale_real(s)) < 1e-15);
    }

    let spec = spec_with(vec![0.6], identities(1, 4));
    let pm = plusminus_states(&spec, &psi).unwrap();
    assert!(pm.plus[0].distance(&psi.scale_real(1.4 * s)) < 1e-15);
    assert!(pm.minus[0].distance(&psi.scale_real(-0.2 * s)) < 1e-15);
}

#[test]
fn mixing_amplitudes() {
    let spec = CircuitSpec::haar(vec![0.5; 4], 1, 30).unwrap();
    let a = spec.index_amplitudes();
    for i in 0..4 {
        for t in 0..4 {
            let expect = crate::linalg::hadamard_sign(i, t) / 4.0;
            assert!((a[(i, t)] - C64::new(expect, 0.0)).norm() < 1e-15);
        }
    }
    assert_eq!(Mixing::Dft.name(), "dft");
    assert_eq!(Variant::Cyclic.name(), "cyclic");
}
