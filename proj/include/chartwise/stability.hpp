#pragma once

// Calculators for the sign-cocycle stability bounds. All inputs are
// user-supplied constants; nothing here estimates them from a network.

#include <chartwise/error.hpp>

#include <algorithm>
#include <cmath>

namespace chartwise {

/// Regularity constants of an approximate atlas.
///   l_e, l_e_prime : encoder Jacobian bound and its Lipschitz constant
///   l_d, l_d_prime : decoder Jacobian bound and its Lipschitz constant
///   eps, eta       : pointwise and differential reconstruction error
///   delta          : non-degeneracy gap, d : latent dimension
/// With `on_manifold` set, the off-manifold inflation of eps is dropped
/// (eps_tilde = eps); otherwise eps_tilde = (l_e l_d + 2) eps.
struct RegularityBounds {
    double l_e = 1.0;
    double l_e_prime = 0.0;
    double l_d = 1.0;
    double l_d_prime = 0.0;
    double eps = 0.0;
    double eta = 0.0;
    double delta = 0.0;
    int d = 2;
    bool on_manifold = false;

    void validate() const {
        detail::require(l_e >= 0 && l_e_prime >= 0 && l_d >= 0 && l_d_prime >= 0 && eps >= 0 && eta >= 0 &&
                            delta >= 0,
                        ErrorKind::parameter, "regularity bounds must be non-negative");
        detail::require(d >= 1, ErrorKind::parameter, "latent dimension must be positive");
    }
};

/// Lipschitz constant of p -> d(Phi)_p: L_D' L_E^2 + L_D L_E'.
inline double reconstruction_differential_lipschitz(const RegularityBounds& b) {
    return b.l_d_prime * b.l_e * b.l_e + b.l_d * b.l_e_prime;
}

inline double eps_tilde(const RegularityBounds& b) {
    return b.on_manifold ? b.eps : (b.l_e * b.l_d + 2.0) * b.eps;
}

/// (L_E L_D + 2) eta / (1 - eta) + L_Phi' eps.
inline double eta_eff(const RegularityBounds& b) {
    b.validate();
    detail::require(b.eta < 1.0, ErrorKind::domain, "effective differential error needs eta < 1");
    return (b.l_e * b.l_d + 2.0) * b.eta / (1.0 - b.eta) + reconstruction_differential_lipschitz(b) * b.eps;
}

/// L_E eta_eff L_D + L_E' eps_tilde (1 + eta_eff) L_D.
inline double perturbation_magnitude(double l_e, double l_d, double l_e_prime, double eps_tilde_value,
                                     double eta_eff_value) {
    return l_e * eta_eff_value * l_d + l_e_prime * eps_tilde_value * (1.0 + eta_eff_value) * l_d;
}

inline double gamma(const RegularityBounds& b) {
    return perturbation_magnitude(b.l_e, b.l_d, b.l_e_prime, eps_tilde(b), eta_eff(b));
}

/// Lipschitz constant of p -> det g_ji(p):
/// d (L_E L_D)^(d-1) L_E (L_E L_D' + L_E' L_D^2).
inline double l_det(const RegularityBounds& b) {
    b.validate();
    return b.d * std::pow(b.l_e * b.l_d, b.d - 1) * b.l_e * (b.l_e * b.l_d_prime + b.l_e_prime * b.l_d * b.l_d);
}

struct StabilityCheck {
    bool holds = false;
    bool eta_below_one = false;
    double branch_gamma = 0.0; // d Gamma (L_E L_D + Gamma)^(d-1)
    double branch_det = 0.0;   // L_det eps
    double margin = 0.0;       // delta - max(branches)
};

/// The two branches and the strict comparison against delta, given Gamma.
inline StabilityCheck stability_branches(int d, double l_e_l_d, double gamma_value, double l_det_eps,
                                         double delta) {
    StabilityCheck out;
    out.eta_below_one = true;
    out.branch_gamma = d * gamma_value * std::pow(l_e_l_d + gamma_value, d - 1);
    out.branch_det = l_det_eps;
    out.margin = delta - std::max(out.branch_gamma, out.branch_det);
    out.holds = out.margin > 0.0;
    return out;
}

/// eta < 1 and max(d Gamma (L_E L_D + Gamma)^(d-1), L_det eps) < delta.
inline StabilityCheck stability_check(const RegularityBounds& b) {
    b.validate();
    if (!(b.eta < 1.0)) {
        StabilityCheck out;
        out.branch_gamma = INFINITY;
        out.branch_det = l_det(b) * b.eps;
        out.margin = -INFINITY;
        return out;
    }
    return stability_branches(b.d, b.l_e * b.l_d, gamma(b), l_det(b) * b.eps, b.delta);
}

/// Leading-order form of branch_gamma for small eps and eta:
/// d L_E^(d-1) L_D^d [(L_E L_D + 2) L_E eta + (L_Phi' L_E + L_E') eps].
inline double simplified_branch(const RegularityBounds& b) {
    return b.d * std::pow(b.l_e, b.d - 1) * std::pow(b.l_d, b.d) *
           ((b.l_e * b.l_d + 2.0) * b.l_e * b.eta +
            (reconstruction_differential_lipschitz(b) * b.l_e + b.l_e_prime) * b.eps);
}

/// Lower bound (s_E s_D)^d on |det g_ji| for an exact atlas.
inline double nondeg_lower_bound(double s_e, double s_d, int d) {
    detail::require(s_e >= 0.0 && s_d >= 0.0, ErrorKind::parameter, "singular value bounds must be non-negative");
    detail::require(d >= 1, ErrorKind::parameter, "latent dimension must be positive");
    return std::pow(s_e * s_d, d);
}

/// mu < delta0 / (2 C0).
inline bool mu_condition(double mu, double delta0, double c0) {
    detail::require(c0 > 0.0, ErrorKind::parameter, "C0 must be positive");
    return mu < delta0 / (2.0 * c0);
}

} // namespace chartwise
