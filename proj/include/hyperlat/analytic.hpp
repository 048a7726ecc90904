#pragma once

#include <cstdint>

#include "hyperlat/fields.hpp"
#include "hyperlat/lattice.hpp"
#include "hyperlat/rng.hpp"

namespace hyperlat {

// Bessel function of the first kind, order 1. Power series for |x| <= 12,
// Hankel asymptotic expansion beyond.
double bessel_j1(double x);

// Radial kernel pair for dimensions 1 and 2, normalized so that
// jr_hat(0) = 1 and the integral of jr over R^d equals 1; consequently
// jr(0) = |B_r| / (2 pi)^d.
struct KernelEval {
    int dim = 2;
    double r = 1.0;
};

// jr_hat(|t|): the tent 1 - |t|/(2r) in d=1, the Euclid's hat in d=2;
// supported on |t| <= 2r.
double jr_hat(const KernelEval& k, double t_norm);

// jr(|t|): sin^2(rt)/(pi r t^2) in d=1, J1(rt)^2/(pi t^2) in d=2.
double jr(const KernelEval& k, double t_norm);

// Deterministic lattice contribution to the rescaled number variance of the
// unperturbed stationary lattice (d = 2):
//   A(r) = (2 pi)^2 sum_{k in L*, k != 0} jr(2 pi k).
// The dual sum is truncated at |k| <= cutoff with a certified tail bound
// from the |J1|^2 <= C/x decay; the cutoff doubles until the bound drops
// below max(rel_tol * |A|, abs_tol).
struct ATermResult {
    double value = 0.0;
    double tail_bound = 0.0;
    double cutoff = 0.0;
    std::int64_t terms = 0;
};
ATermResult lattice_A_term(const Lattice& lat, double r, double rel_tol = 1e-4,
                           double abs_tol = 0.0, int threads = 0);

// Same quantity by the finite direct route: sum_{x in L} jr_hat(x) - |B_r|.
// Exact up to floating point; the Poisson-pairing cross-check for A.
double lattice_sigma_direct(const Lattice& lat, double r);

// Rescaled number variance of the unperturbed stationary Z lattice in d=1:
// f(1-f) with f = frac(2r).
double exact_sigma_1d(double r);

// Semi-analytic sigma(r) for an i.i.d.-perturbed lattice:
//   sigma = A + B,  B = sum_{x != 0} E[jr_hat(x + Delta)] - jr_hat(x),
// with Delta = p - p' and the pair expectation estimated from
// `pair_samples` Monte Carlo draws (batched for a standard error).
struct OracleResult {
    double sigma = 0.0;
    double a_term = 0.0;
    double b_term = 0.0;
    double std_error = 0.0;
    double remainder_bound = 0.0;  // E[|p|^d 1{|p| >= M/4}] tail estimate
};
OracleResult iid_sigma_oracle(const Lattice& lat, double r, const IidDistribution& dist,
                              double M, std::int64_t pair_samples, Rng& rng, int batches = 20);

}  // namespace hyperlat
