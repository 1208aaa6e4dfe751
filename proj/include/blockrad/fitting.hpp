#ifndef BLOCKRAD_FITTING_HPP
#define BLOCKRAD_FITTING_HPP

#include <vector>

namespace blockrad {

struct LinearFit {
    double slope = 0.0;
    double intercept = 0.0;
    double residual_variance = 0.0;
};

// Ordinary least squares y ~ intercept + slope*x. Needs >= 2 points.
LinearFit ols_fit(const std::vector<double>& x, const std::vector<double>& y);

struct TwoRegressorFit {
    double coef_x = 0.0;
    double coef_z = 0.0;
    double intercept = 0.0;
    double residual_variance = 0.0;
};

// OLS y ~ intercept + coef_x*x + coef_z*z. Needs >= 3 points.
TwoRegressorFit ols_fit2(const std::vector<double>& x, const std::vector<double>& z,
                         const std::vector<double>& y);

} // namespace blockrad

#endif
