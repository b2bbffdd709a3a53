#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "kernel.hpp"

namespace kp {

// Super-additive time budget Q(u,v); the linear family Q = c (v - u) is the
// one every experiment uses (equality in the super-additivity condition).
struct QFunction {
    double c = 0.0;

    double operator()(double u, double v) const {
        require(u <= v, "QFunction: u <= v required");
        return c * (v - u);
    }
    double at_lag(double lag) const { return c * lag; }
};

QFunction make_linear_q(double c);

// Envelope factor of the certified series bound:
// (1/(1-eta))^{1+Q/eta} for eta > 0, e^Q for eta = 0.
double bound_factor(double eta, double q);

// Certified remainder sum_{n>N} prod_{l<=n} (eta + Q/l) of the term bounds.
double product_tail(double eta, double q, int n_terms);

struct BoundCertificate {
    double eta = 0.0;
    QFunction q;
    int n_terms = 0;
    double rel_tol = 0.0;
    bool smallness_verified = false;
    // Certified relative remainder per time lag (a multiple of the base kernel).
    std::vector<double> tail_per_lag;

    double max_tail() const;
};

struct SignedBounds {
    bool lower_applicable = false;  // Q <= (1-eta)/2 on the whole strip
    bool upper_applicable = false;  // Q <= 2 (1-eta) on the whole strip
    double min_ratio = 0.0;         // min series/base on the support
    double max_ratio = 0.0;         // max series/base on the support
};

struct PerturbedKernel {
    ForwardKernel base;
    JumpKernel jump;
    ForwardKernel series_sum;
    BoundCertificate certificate;
    bool signed_perturbation = false;
    SignedBounds signed_bounds;  // populated for signed series
    // Memoized series terms K_0 .. K_{n_terms}; verification ops reuse them.
    std::vector<ForwardKernel> terms;
};

// One step of the series recursion K_n = K_{n-1} J K. For kernels with
// transition limits the time integral is the trapezoid rule with its two
// endpoint limits, which exist because the base approaches the identity at
// zero lag: at u -> s+ only the delta content of A contributes (J fires
// immediately), at u -> t- the jump fires on arrival. `delta_content` says
// whether A contains the base kernel (true for A = K_0 and A = K-tilde).
ForwardKernel series_step(const ForwardKernel& a, const JumpKernel& j, const ForwardKernel& base,
                          bool delta_content);

// K_n = (KJ)^n K by the recursion; n = 0 returns K itself.
ForwardKernel series_term(const ForwardKernel& k, const JumpKernel& j, int n);

// Consistency of the recursion with every split K_n = K_{n-1-m} J K_m,
// relative to the sup of K_n.
double lemma1_defect(const ForwardKernel& k, const JumpKernel& j, int n);

struct SmallnessFit {
    bool feasible = false;
    double eta = 0.0;  // selected pair: minimal eta on the scanned frontier,
    double c = 0.0;    // then minimal c attaining it
    // alternative extreme: smallest scanned c that admits any certificate
    double c_min = 0.0;
    double eta_at_c_min = 0.0;
    double jump_norm = 0.0;
    std::int64_t off_support_entries = 0;
    std::vector<std::pair<double, double>> frontier;  // (c, eta(c)) scan
};

// Fits the smallness condition K J K <= (eta + c (t-s)) K over the grid.
// Throws unsupported_perturbation_error if K_1 charges entries outside the
// support of K (the condition cannot hold on the instance).
SmallnessFit verify_smallness(const ForwardKernel& k, const JumpKernel& j);

// Minimal c such that R <= eta + c (t-s) holds at a prescribed eta.
double fit_c_at_eta(const ForwardKernel& k, const JumpKernel& j, double eta);

PerturbedKernel perturbation_series(const ForwardKernel& k, const JumpKernel& j, const QFunction& q,
                                    double eta, double rel_tol, bool smallness_verified = true,
                                    int n_max = 200);

PerturbedKernel signed_series(const ForwardKernel& k, const JumpKernel& j, const QFunction& q,
                              double eta, double rel_tol, bool smallness_verified = true,
                              int n_max = 200);

// Worst positive-part violation of K_n <= K_{n-1} (eta + Q/n), relative to
// K_{n-1}, over n <= n_max.
double verify_term_recursion(const PerturbedKernel& p, int n_max);

// Worst positive-part violation of the product bound
// K_n <= K prod_{l<=n} (eta + Q/l), relative to the right side, n <= n_max.
double verify_product_bound(const PerturbedKernel& p, int n_max);

// max over the grid of series_sum / (K * bound_factor(eta, Q)).
double verify_bound(const PerturbedKernel& p);

// max relative defect of K-tilde = K + K-tilde J K (truncation shows up here).
double perturbation_formula_defect(const PerturbedKernel& p);

// Transition-closure defect: worst relative error of
// int K(s,x,u,dz) K(u,z,t,A) = K(s,x,t,A) over interior nodes u.
double chapman_defect(const ForwardKernel& k);

// Defect of the split identity sum_{m<=n} int k_m(s,x,u,dz) k_{n-m}(u,z,t,.)
// = k_n(s,x,t,.) for the node-quadrature series (no endpoint terms), which
// converges first order in dt. Relative to k_n.
double lemma_prop1_defect(const ForwardKernel& k, const JumpKernel& j, int n);

struct PropagationResult {
    double min_ratio = 0.0;       // min composed-tilde / composed-base
    double bound = 0.0;           // ((1-eta)/2)^n
    double worst_defect = 0.0;    // positive part of (bound - ratio)
};

// Verifies the lower bound of the signed perturbation through an n-fold
// composition at the subdivision nodes; every subinterval must satisfy
// Q(u_{l-1}, u_l) <= (1-eta)/2.
PropagationResult propagate_lower_bound(const ForwardKernel& k_tilde_minus,
                                        const ForwardKernel& k, const std::vector<int>& nodes,
                                        double eta, const QFunction& q);

// Support floor below which entries are excluded from ratio checks.
constexpr double kSupportFloor = 1e-300;

}  // namespace kp
