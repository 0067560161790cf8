#pragma once

#include <cmath>

namespace crowd::temporal {

/// Weibull with shape k and scale lambda:
///   f(t) = (k/lambda) (t/lambda)^(k-1) exp(-(t/lambda)^k),  S(t) = exp(-(t/lambda)^k).
struct Weibull {
    double shape = 1.0;
    double scale = 1.0;
};

inline double log_pdf(const Weibull& w, double t) {
    const double z = std::log(t) - std::log(w.scale);
    return std::log(w.shape) - std::log(t) + w.shape * z - std::exp(w.shape * z);
}

inline double pdf(const Weibull& w, double t) { return std::exp(log_pdf(w, t)); }

inline double log_survival(const Weibull& w, double t) {
    if (t <= 0.0) return 0.0;
    return -std::pow(t / w.scale, w.shape);
}

inline double survival(const Weibull& w, double t) { return std::exp(log_survival(w, t)); }

inline double cdf(const Weibull& w, double t) { return t <= 0.0 ? 0.0 : -std::expm1(log_survival(w, t)); }

/// Inverse survival transform: for u uniform on (0, 1], lambda (-ln u)^(1/k) is Weibull distributed.
inline double inverse_survival(const Weibull& w, double u) { return w.scale * std::pow(-std::log(u), 1.0 / w.shape); }

inline double mean(const Weibull& w) { return w.scale * std::tgamma(1.0 + 1.0 / w.shape); }

}  // namespace crowd::temporal
