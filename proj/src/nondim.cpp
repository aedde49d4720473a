#include "colloid/nondim.hpp"

#include "colloid/errors.hpp"

namespace colloid::nondim {

ReferenceQuantities ReferenceQuantities::make(double tau, double length, double diffusivity,
                                              double u0, double v0, double a0) {
    ReferenceQuantities ref{tau, length, diffusivity, u0, v0, a0};
    ref.validate();
    return ref;
}

ReferenceQuantities ReferenceQuantities::diffusive(double length, double diffusivity, double u0,
                                                   double v0, double a0) {
    if (!(diffusivity > 0.0)) throw ParameterError("reference diffusivity must be positive");
    return make(length * length / diffusivity, length, diffusivity, u0, v0, a0);
}

ReferenceQuantities ReferenceQuantities::surface_matched(double diffusivity, double u0, double v0,
                                                         double a0) {
    if (!(u0 > 0.0)) throw ParameterError("reference mobile concentration must be positive");
    return diffusive(v0 / u0, diffusivity, u0, v0, a0);
}

void ReferenceQuantities::validate() const {
    if (!(time_scale > 0.0) || !(length_scale > 0.0) || !(diffusivity_scale > 0.0) ||
        !(mobile_conc_scale > 0.0) || !(deposited_conc_scale > 0.0) ||
        !(deposition_rate_scale > 0.0)) {
        throw ParameterError("reference quantities must all be positive");
    }
}

DimensionlessGroups dimensionless_groups(const ReferenceQuantities& ref) {
    ref.validate();
    const double L = ref.length_scale;
    const double d = ref.diffusivity_scale;
    DimensionlessGroups g;
    g.epsilon = ref.deposition_rate_scale * L / d;
    g.thiele = L * L * ref.mobile_conc_scale / d;
    g.biot = ref.deposition_rate_scale * L * L * ref.mobile_conc_scale /
             (d * ref.deposited_conc_scale);
    g.fast_reaction = g.thiele >= kFastReactionThreshold;
    g.slow_deposition = g.biot <= kSlowDepositionThreshold;
    return g;
}

namespace {

std::vector<double> times(const std::vector<double>& v, double factor) {
    std::vector<double> out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i] * factor;
    return out;
}

std::vector<double> over(const std::vector<double>& v, double scale) {
    std::vector<double> out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i] / scale;
    return out;
}

double detachment_scale(const ReferenceQuantities& ref) {
    return ref.deposition_rate_scale * ref.mobile_conc_scale / ref.deposited_conc_scale;
}

} // namespace

MicroParams scale_micro_to_dimensionless(const MicroParams& params,
                                         const ReferenceQuantities& ref) {
    ref.validate();
    return MicroParams{over(params.diffusivity, ref.diffusivity_scale),
                       over(params.attachment, ref.deposition_rate_scale),
                       over(params.detachment, detachment_scale(ref)),
                       over(params.mobile, ref.mobile_conc_scale),
                       over(params.deposited, ref.deposited_conc_scale)};
}

MicroParams unscale_micro(const MicroParams& scaled, const ReferenceQuantities& ref) {
    ref.validate();
    return MicroParams{times(scaled.diffusivity, ref.diffusivity_scale),
                       times(scaled.attachment, ref.deposition_rate_scale),
                       times(scaled.detachment, detachment_scale(ref)),
                       times(scaled.mobile, ref.mobile_conc_scale),
                       times(scaled.deposited, ref.deposited_conc_scale)};
}

} // namespace colloid::nondim
