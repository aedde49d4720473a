#include "colloid/blocking.hpp"

#include "colloid/errors.hpp"

namespace colloid::transport {

namespace {

constexpr double kRsa1 = -4.0;
constexpr double kRsa2 = 3.308;
constexpr double kRsa3 = 1.4069;

} // namespace

BlockingFunction BlockingFunction::langmuir(double beta) {
    if (!(beta > 0.0)) throw ParameterError("Langmuir blocking parameter must be positive");
    return {BlockingKind::Langmuir, beta, 1.0 / beta};
}

BlockingFunction BlockingFunction::rsa(double beta, double theta_inf) {
    if (!(beta > 0.0) || !(theta_inf > 0.0)) {
        throw ParameterError("RSA blocking parameters must be positive");
    }
    return {BlockingKind::RSA, beta, theta_inf};
}

double BlockingFunction::value(double theta) const {
    switch (kind) {
    case BlockingKind::None: return 1.0;
    case BlockingKind::Langmuir: return 1.0 - beta * theta;
    case BlockingKind::RSA: {
        const double x = beta * theta;
        return 1.0 + x * (kRsa1 + x * (kRsa2 + x * kRsa3));
    }
    }
    return 1.0;
}

double BlockingFunction::derivative(double theta) const {
    switch (kind) {
    case BlockingKind::None: return 0.0;
    case BlockingKind::Langmuir: return -beta;
    case BlockingKind::RSA: {
        const double x = beta * theta;
        return beta * (kRsa1 + x * (2.0 * kRsa2 + x * 3.0 * kRsa3));
    }
    }
    return 0.0;
}

double BlockingFunction::first_root() const {
    switch (kind) {
    case BlockingKind::None: return std::numeric_limits<double>::infinity();
    case BlockingKind::Langmuir: return 1.0 / beta;
    case BlockingKind::RSA: break;
    }
    // Bracket the first sign change of the cubic in x, then bisect.
    const double step = 1e-3;
    double lo = 0.0;
    double hi = step;
    auto cubic = [](double x) { return 1.0 + x * (kRsa1 + x * (kRsa2 + x * kRsa3)); };
    while (cubic(hi) > 0.0) {
        lo = hi;
        hi += step;
        if (hi > 10.0) return std::numeric_limits<double>::infinity();
    }
    for (int it = 0; it < 200 && hi - lo > 0.0; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid == lo || mid == hi) break;
        (cubic(mid) > 0.0 ? lo : hi) = mid;
    }
    return lo / beta;
}

double blocking_value(const BlockingFunction& b, double theta) {
    if (theta < 0.0) throw ParameterError("coverage must be nonnegative");
    return b.value(theta);
}

const char* to_string(BlockingKind kind) {
    switch (kind) {
    case BlockingKind::None: return "none";
    case BlockingKind::Langmuir: return "langmuir";
    case BlockingKind::RSA: return "rsa";
    }
    return "unknown";
}

} // namespace colloid::transport
