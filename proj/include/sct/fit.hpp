// fit.hpp: least-squares helpers for scaling checks

#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

namespace sct {

struct LinearFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
};

inline LinearFit linear_fit(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("linear_fit: need >= 2 paired points");
    const double n = static_cast<double>(x.size());
    double sx = 0, sy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
    }
    const double mx = sx / n, my = sy / n;
    double sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx == 0.0) throw std::invalid_argument("linear_fit: x values are all equal");
    LinearFit f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    f.r_squared = syy == 0.0 ? 1.0 : (sxy * sxy) / (sxx * syy);
    return f;
}

/// Slope of log|y| against log x.
inline LinearFit loglog_fit(const std::vector<double>& x, const std::vector<double>& y) {
    std::vector<double> lx, ly;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!(x[i] > 0.0) || y[i] == 0.0) throw std::invalid_argument("loglog_fit: need x > 0 and y != 0");
        lx.push_back(std::log(x[i]));
        ly.push_back(std::log(std::abs(y[i])));
    }
    return linear_fit(lx, ly);
}

/// Coefficients c_k of y ~ sum_k c_k x^{powers[k]} by least squares.
inline std::vector<double> power_series_fit(const std::vector<double>& x, const std::vector<double>& y,
                                            const std::vector<int>& powers) {
    if (x.size() != y.size() || x.size() < powers.size()) throw std::invalid_argument("power_series_fit: too few points");
    Eigen::MatrixXd a(static_cast<Eigen::Index>(x.size()), static_cast<Eigen::Index>(powers.size()));
    Eigen::VectorXd b(static_cast<Eigen::Index>(x.size()));
    for (std::size_t i = 0; i < x.size(); ++i) {
        for (std::size_t k = 0; k < powers.size(); ++k)
            a(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = std::pow(x[i], powers[k]);
        b(static_cast<Eigen::Index>(i)) = y[i];
    }
    const Eigen::VectorXd c = a.colPivHouseholderQr().solve(b);
    return {c.data(), c.data() + c.size()};
}

} // namespace sct
