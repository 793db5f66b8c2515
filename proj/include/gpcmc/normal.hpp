#pragma once

#include <cmath>
#include <limits>

// Scalar standard-normal helpers shared by the sampler and the quadrature
// oracles. All of them are pure and thread-safe.

namespace gpcmc {

inline constexpr double kLogTwoPi = 1.8378770664093454835606594728112;
inline constexpr double kSqrtTwo = 1.4142135623730950488016887242097;

/// Standard normal CDF.
inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / kSqrtTwo); }

/// log of the standard normal CDF, accurate into the deep lower tail.
/// For x >= -8 the erfc route is exact to machine precision; below that the
/// asymptotic tail series is summed to convergence, which avoids the
/// underflow of erfc near x ~ -38.
inline double log_normal_cdf(double x) {
  if (x >= -8.0) {
    return std::log(0.5 * std::erfc(-x / kSqrtTwo));
  }
  // Phi(x) = phi(x)/|x| * (1 - 1/x^2 + 3/x^4 - 15/x^6 + ...)
  const double inv_x2 = 1.0 / (x * x);
  double term = 1.0;
  double sum = 0.0;
  double coeff = 1.0;
  for (int k = 1; k <= 40; ++k) {
    coeff *= static_cast<double>(2 * k - 1);
    term *= -inv_x2;
    const double contrib = coeff * term;
    sum += contrib;
    if (std::abs(contrib) < 1e-17 * (1.0 + std::abs(sum))) break;
  }
  return -0.5 * x * x - std::log(-x) - 0.5 * kLogTwoPi + std::log1p(sum);
}

/// Inverse of the standard normal CDF (Wichura's PPND16 rational
/// approximation, relative accuracy ~1e-16). p must lie in (0,1).
inline double inverse_normal_cdf(double p) {
  const double q = p - 0.5;
  if (std::abs(q) <= 0.425) {
    const double r = 0.180625 - q * q;
    return q *
           (((((((2.5090809287301226727e+3 * r + 3.3430575583588128105e+4) * r +
                 6.7265770927008700853e+4) *
                    r +
                4.5921953931549871457e+4) *
                   r +
               1.3731693765509461125e+4) *
                  r +
              1.9715909503065514427e+3) *
                 r +
             1.3314166789178437745e+2) *
                r +
            3.3871328727963666080e0) /
           (((((((5.2264952788528545610e+3 * r + 2.8729085735721942674e+4) * r +
                 3.9307895800092710610e+4) *
                    r +
                2.1213794301586595867e+4) *
                   r +
               5.3941960214247511077e+3) *
                  r +
              6.8718700749205790830e+2) *
                 r +
             4.2313330701600911252e+1) *
                r +
            1.0);
  }
  double r = (q < 0.0) ? p : 1.0 - p;
  if (r <= 0.0) {
    return (q < 0.0) ? -std::numeric_limits<double>::infinity()
                     : std::numeric_limits<double>::infinity();
  }
  r = std::sqrt(-std::log(r));
  double z;
  if (r <= 5.0) {
    r -= 1.6;
    z = (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r +
              2.41780725177450611770e-1) *
                 r +
             1.27045825245236838258e0) *
                r +
            3.64784832476320460504e0) *
               r +
           5.76949722146069140550e0) *
              r +
          4.63033784615654529590e0) *
             r +
         1.42343711074968357734e0) /
        (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r +
              1.51986665636164571966e-2) *
                 r +
             1.48103976427480074590e-1) *
                r +
            6.89767334985100004550e-1) *
               r +
           1.67638483018380384940e0) *
              r +
          2.05319162663775882187e0) *
             r +
         1.0);
  } else {
    r -= 5.0;
    z = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r +
              1.24266094738807843860e-3) *
                 r +
             2.65321895265761230930e-2) *
                r +
            2.96560571828504891230e-1) *
               r +
           1.78482653991729133580e0) *
              r +
          5.46378491116411436990e0) *
             r +
         6.65790464350110377720e0) /
        (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r +
              1.84631831751005468180e-5) *
                 r +
             7.86869131145613259100e-4) *
                r +
            1.48753612908506148525e-2) *
               r +
           1.36929880922735805310e-1) *
              r +
          5.99832206555887937690e-1) *
             r +
         1.0);
  }
  return (q < 0.0) ? -z : z;
}

}  // namespace gpcmc
