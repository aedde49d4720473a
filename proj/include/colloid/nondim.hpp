#pragma once

/**
 * @file nondim.hpp
 * Reference scales and the three dimensionless groups of the pore-scale
 * model: the homogenization parameter eps = a0 L / d, the Thiele modulus
 * Lambda = L^2 u0 / d and the Biot number Bi = a0 L^2 u0 / (d v0).
 */

#include <vector>

namespace colloid::nondim {

struct ReferenceQuantities {
    double time_scale = 1.0;            // tau [s]
    double length_scale = 1.0;          // L [m]
    double diffusivity_scale = 1.0;     // d [m^2/s]
    double mobile_conc_scale = 1.0;     // u0 [1/m^3]
    double deposited_conc_scale = 1.0;  // v0 [1/m^2]
    double deposition_rate_scale = 1.0; // a0 [m/s]

    /// All six scales given explicitly.
    static ReferenceQuantities make(double tau, double length, double diffusivity, double u0,
                                    double v0, double a0);
    /// tau = L^2 / d.
    static ReferenceQuantities diffusive(double length, double diffusivity, double u0, double v0,
                                         double a0);
    /// L = v0 / u0, tau = L^2 / d.
    static ReferenceQuantities surface_matched(double diffusivity, double u0, double v0, double a0);

    void validate() const;
};

struct DimensionlessGroups {
    double epsilon = 0.0;
    double thiele = 0.0;
    double biot = 0.0;
    // Reporting labels only; the thresholds carry no physics.
    bool fast_reaction = false;    // Lambda >= 1e3
    bool slow_deposition = false;  // Bi <= 1e-3
};

inline constexpr double kFastReactionThreshold = 1e3;
inline constexpr double kSlowDepositionThreshold = 1e-3;

DimensionlessGroups dimensionless_groups(const ReferenceQuantities& ref);

/// Pore-scale coefficients per class, either in physical units or scaled.
struct MicroParams {
    std::vector<double> diffusivity; // d_i
    std::vector<double> attachment;  // a_i
    std::vector<double> detachment;  // b_i
    std::vector<double> mobile;      // u_i
    std::vector<double> deposited;   // v_i
};

/// d/d, a/a0, b v0/(a0 u0), u/u0, v/v0.
MicroParams scale_micro_to_dimensionless(const MicroParams& params, const ReferenceQuantities& ref);
/// Inverse of scale_micro_to_dimensionless.
MicroParams unscale_micro(const MicroParams& scaled, const ReferenceQuantities& ref);

} // namespace colloid::nondim
