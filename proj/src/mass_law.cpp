#include "kinex/mass_law.hpp"
#include "kinex/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace kinex {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

// log(m e^{beta m} / gamma_m) for m = 1..M_max
std::vector<double> log_weights(const MassLaw& law, double beta) {
    std::vector<double> lw(static_cast<std::size_t>(law.M_max));
    for (int m = 1; m <= law.M_max; ++m)
        lw[m - 1] = std::log(static_cast<double>(m)) + beta * m - std::log(law.gamma_of(m));
    return lw;
}

} // namespace

MassLaw MassLaw::from_table(int n, std::vector<double> gamma_table) {
    MassLaw law;
    law.M_max = static_cast<int>(gamma_table.size());
    law.n = n;
    law.gamma = std::move(gamma_table);
    law.validate();
    return law;
}

MassLaw MassLaw::from_family(int n, int M_max, double a, double b, double c) {
    MassLaw law;
    law.M_max = M_max;
    law.n = n;
    if (M_max >= 1) {
        law.gamma.resize(static_cast<std::size_t>(M_max));
        for (int m = 1; m <= M_max; ++m)
            law.gamma[m - 1] = c * std::pow(static_cast<double>(m), a) * std::exp(b * m);
    }
    law.validate();
    return law;
}

void MassLaw::validate() const {
    if (M_max < 1)
        throw std::domain_error("MassLaw: M_max >= 1 violated");
    if (n < 1 || n > 3)
        throw std::domain_error("MassLaw: velocity dimension n must lie in {1,2,3}");
    if (gamma.size() != static_cast<std::size_t>(M_max))
        throw std::domain_error("MassLaw: gamma table length must equal M_max");
    for (int m = 1; m <= M_max; ++m) {
        double g = gamma_of(m);
        if (!(g > 0.0) || !std::isfinite(g)) {
            std::ostringstream os;
            os << "MassLaw: gamma[" << m << "] > 0 violated (got " << g << ")";
            throw std::domain_error(os.str());
        }
    }
}

BetaWeights::BetaWeights(const MassLaw& law, double b) : beta(b) {
    law.validate();
    auto lw = log_weights(law, b);
    double shift = *std::max_element(lw.begin(), lw.end());
    w.resize(lw.size());
    double total = 0.0;
    for (std::size_t i = 0; i < lw.size(); ++i) {
        w[i] = std::exp(lw[i] - shift);
        total += w[i];
    }
    for (double& wi : w) wi /= total;
    log_norm = shift + std::log(total);
}

double log_partition_Z(const MassLaw& law, double beta, double Theta) {
    if (!(Theta > 0.0))
        throw std::domain_error("partition_Z: Theta > 0 violated");
    BetaWeights bw(law, beta);
    return 0.5 * law.n * std::log(kTwoPi * Theta) + bw.log_norm;
}

double partition_Z(const MassLaw& law, double beta, double Theta) {
    double z = std::exp(log_partition_Z(law, beta, Theta));
    if (!std::isfinite(z)) {
        std::ostringstream os;
        os << "partition_Z: overflow at beta = " << beta;
        throw std::range_error(os.str());
    }
    return z;
}

double beta_average(const MassLaw& law, double beta, const std::vector<double>& a) {
    if (a.size() != static_cast<std::size_t>(law.M_max))
        throw std::domain_error("beta_average: value table length must equal M_max");
    BetaWeights bw(law, beta);
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += bw.w[i] * a[i];
    return acc;
}

double mean_mass(const MassLaw& law, double beta) {
    BetaWeights bw(law, beta);
    double acc = 0.0;
    for (int m = 1; m <= law.M_max; ++m) acc += bw.w[m - 1] * m;
    return acc;
}

double mean_inv_mass(const MassLaw& law, double beta) {
    BetaWeights bw(law, beta);
    double acc = 0.0;
    for (int m = 1; m <= law.M_max; ++m) acc += bw.w[m - 1] / m;
    return acc;
}

double mean_inv_mass_sq(const MassLaw& law, double beta) {
    BetaWeights bw(law, beta);
    double acc = 0.0;
    for (int m = 1; m <= law.M_max; ++m) acc += bw.w[m - 1] / (static_cast<double>(m) * m);
    return acc;
}

double d_inv_mass_mean_d_beta(const MassLaw& law, double beta) {
    BetaWeights bw(law, beta);
    double im = 0.0, mm = 0.0;
    for (int m = 1; m <= law.M_max; ++m) {
        im += bw.w[m - 1] / m;
        mm += bw.w[m - 1] * m;
    }
    return 1.0 - im * mm;
}

double beta_from_inv_mass_mean(const MassLaw& law, double target) {
    law.validate();
    if (law.M_max == 1) {
        if (std::abs(target - 1.0) > 1e-12)
            throw std::domain_error("beta_from_inv_mass_mean: target must be 1 when M_max = 1");
        return 0.0;
    }
    double lo_val = 1.0 / law.M_max;
    if (!(target > lo_val) || !(target < 1.0)) {
        std::ostringstream os;
        os << "beta_from_inv_mass_mean: target in (1/M_max, 1) violated (got " << target << ")";
        throw std::domain_error(os.str());
    }

    const double tol = 1e-13 * std::max(1.0, std::abs(target));
    auto f = [&](double b) { return mean_inv_mass(law, b) - target; };

    // <m^-1>_beta decreases from 1 to 1/M_max, so f(lo) > 0 > f(hi) once the
    // bracket is wide enough.
    double lo = -1.0, hi = 1.0;
    int iters = 0;
    while (f(lo) <= 0.0) {
        lo *= 2.0;
        if (++iters > 200) throw convergence_error("beta_from_inv_mass_mean: bracket growth exhausted (low side)");
    }
    while (f(hi) >= 0.0) {
        hi *= 2.0;
        if (++iters > 200) throw convergence_error("beta_from_inv_mass_mean: bracket growth exhausted (high side)");
    }

    double beta = 0.0;
    if (beta < lo || beta > hi) beta = 0.5 * (lo + hi);
    for (; iters <= 200; ++iters) {
        double r = f(beta);
        if (std::abs(r) <= tol) return beta;
        if (r > 0.0) lo = beta; else hi = beta;
        double slope = d_inv_mass_mean_d_beta(law, beta);
        double step = (slope != 0.0) ? -r / slope : 0.0;
        double next = beta + step;
        if (!(next > lo) || !(next < hi)) next = 0.5 * (lo + hi);  // bisection safeguard
        beta = next;
    }
    throw convergence_error("beta_from_inv_mass_mean: no convergence in 200 iterations");
}

double gauss_moment_scalar(double m, double Theta, int n, int p) {
    if (!(m > 0.0) || !(Theta > 0.0))
        throw std::domain_error("gauss_moment: m > 0 and Theta > 0 required");
    if (n < 1 || n > 3 || p < 0)
        throw std::domain_error("gauss_moment: n in {1,2,3} and p >= 0 required");
    double s = Theta / m;
    double val = std::pow(kTwoPi * s, 0.5 * n);
    for (int k = 0; k < p; ++k) val *= (n + 2 * k) * s;
    return val;
}

double gauss_moment_tensor2_coef(double m, double Theta, int n, int p) {
    if (!(m > 0.0) || !(Theta > 0.0))
        throw std::domain_error("gauss_moment: m > 0 and Theta > 0 required");
    if (n < 1 || n > 3 || p < 0)
        throw std::domain_error("gauss_moment: n in {1,2,3} and p >= 0 required");
    double s = Theta / m;
    double val = std::pow(kTwoPi * s, 0.5 * n) * s;
    for (int k = 1; k <= p; ++k) val *= (n + 2 * k) * s;
    return val;
}

double gauss_moment_tensor4_coef(double m, double Theta, int n) {
    if (!(m > 0.0) || !(Theta > 0.0))
        throw std::domain_error("gauss_moment: m > 0 and Theta > 0 required");
    if (n < 1 || n > 3)
        throw std::domain_error("gauss_moment: n in {1,2,3} required");
    double s = Theta / m;
    return std::pow(kTwoPi * s, 0.5 * n) * s * s;
}

} // namespace kinex
