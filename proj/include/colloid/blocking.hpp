#pragma once

#include <limits>
#include <string>

namespace colloid::transport {

enum class BlockingKind { None, Langmuir, RSA };

/**
 * Dynamic blocking B(theta) scaling the deposition rate with surface coverage.
 *   Langmuir: B = 1 - beta theta
 *   RSA:      B = 1 - 4x + 3.308x^2 + 1.4069x^3, x = beta theta
 * theta_inf is carried for reporting; with beta ~ 1/theta_inf the RSA
 * argument is the usual coverage ratio theta / theta_inf.
 */
struct BlockingFunction {
    BlockingKind kind = BlockingKind::None;
    double beta = 0.0;
    double theta_inf = 0.0;

    static BlockingFunction none() { return {}; }
    static BlockingFunction langmuir(double beta);
    static BlockingFunction rsa(double beta, double theta_inf);

    double value(double theta) const;
    double derivative(double theta) const;
    /// Smallest positive coverage with B = 0; +inf when B never vanishes.
    double first_root() const;
};

double blocking_value(const BlockingFunction& b, double theta);

const char* to_string(BlockingKind kind);

} // namespace colloid::transport
