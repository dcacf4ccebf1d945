//! Plug-in mutual information against a direct evaluation of the defining
//! double sum, over every small input.

use influence_core::measures::{discrete_mutual_information, entropy, CategorySeries};

const K: u32 = 3;
const TOL: f64 = 1e-12;

/// Direct double sum over the joint table in the obvious order.
fn oracle(x: &[u32], y: &[u32], kx: usize, ky: usize) -> f64 {
    let n = x.len() as f64;
    let mut joint = vec![vec![0.0; ky]; kx];
    for (&a, &b) in x.iter().zip(y) {
        joint[a as usize][b as usize] += 1.0 / n;
    }
    let px: Vec<f64> = joint.iter().map(|row| row.iter().sum()).collect();
    let py: Vec<f64> = (0..ky).map(|j| joint.iter().map(|row| row[j]).sum()).collect();
    let mut total = 0.0;
    for i in 0..kx {
        for j in 0..ky {
            let p = joint[i][j];
            if p > 0.0 {
                total += p * (p / (px[i] * py[j])).log2();
            }
        }
    }
    total
}

fn check(x: &[u32], y: &[u32], kx: u32, ky: u32) {
    let xs = CategorySeries::new(x.to_vec(), kx).unwrap();
    let ys = CategorySeries::new(y.to_vec(), ky).unwrap();
    let mi = discrete_mutual_information(&xs, &ys).unwrap().value;
    let expected = oracle(x, y, kx as usize, ky as usize);
    assert!((mi - expected).abs() <= TOL, "x={x:?} y={y:?}: {mi} vs {expected}");
    assert!(mi >= 0.0);
    let back = discrete_mutual_information(&ys, &xs).unwrap().value;
    assert_eq!(mi, back, "asymmetric on x={x:?} y={y:?}");
    let selfinfo = discrete_mutual_information(&xs, &xs).unwrap().value;
    assert!((selfinfo - entropy(&xs).unwrap().value).abs() <= TOL);
}

/// Every sequence of joint cells up to length 4.
#[test]
fn all_sequences_up_to_four() {
    let cells = (K * K) as usize;
    let mut checked = 0;
    for n in 1..=4u32 {
        for code in 0..cells.pow(n) {
            let mut c = code;
            let (mut x, mut y) = (Vec::new(), Vec::new());
            for _ in 0..n {
                x.push((c % cells) as u32 / K);
                y.push((c % cells) as u32 % K);
                c /= cells;
            }
            check(&x, &y, K, K);
            checked += 1;
        }
    }
    assert_eq!(checked, 9 + 81 + 729 + 6561);
}

fn multisets(n: usize, cells: usize, first: usize, current: &mut Vec<usize>, out: &mut dyn FnMut(&[usize])) {
    if current.len() == n {
        out(current);
        return;
    }
    for c in first..cells {
        current.push(c);
        multisets(n, cells, c, current, out);
        current.pop();
    }
}

/// The estimate only depends on the multiset of joint cells, so every
/// multiset of size 5..=8 over every table shape up to 3x3 covers all
/// distinct inputs. Each multiset is checked in sorted and reversed order.
#[test]
fn all_joint_multisets_up_to_eight() {
    let mut checked = 0usize;
    for kx in 1..=K {
        for ky in 1..=K {
            let cells = (kx * ky) as usize;
            for n in 5..=8 {
                multisets(n, cells, 0, &mut Vec::new(), &mut |ms| {
                    let x: Vec<u32> = ms.iter().map(|&c| c as u32 / ky).collect();
                    let y: Vec<u32> = ms.iter().map(|&c| c as u32 % ky).collect();
                    check(&x, &y, kx, ky);
                    let (mut rx, mut ry) = (x.clone(), y.clone());
                    rx.reverse();
                    ry.reverse();
                    check(&rx, &ry, kx, ky);
                    checked += 1;
                });
            }
        }
    }
    // C(n + c - 1, n) summed over shapes and sizes
    assert!(checked > 25_000, "{checked}");
}
