#pragma once

#include <vector>

namespace kinex {

/// Discrete mass ladder m = 1..M_max with per-mass rate coefficients gamma_m.
/// Binary collisions redistribute integer mass between partners, so the ladder
/// together with gamma fixes every channel rate (A_{m,m1;m'} = gamma_m gamma_m1).
/// The velocity dimension n rides along because the partition function and the
/// Gaussian moment helpers depend on it.
struct MassLaw {
    int M_max = 1;
    int n = 3;                  // velocity dimension, 1..3
    std::vector<double> gamma;  // gamma[m-1] > 0, finite

    static MassLaw from_table(int n, std::vector<double> gamma_table);
    /// gamma_m = c * m^a * exp(b*m)
    static MassLaw from_family(int n, int M_max, double a, double b, double c);

    double gamma_of(int m) const { return gamma[static_cast<std::size_t>(m - 1)]; }
    void validate() const;
};

/// Normalized statistical weights w_m proportional to m e^{beta m}/gamma_m.
/// Assembled with a max-shift in log space so that extreme beta*M_max cannot
/// overflow the intermediate sums.
struct BetaWeights {
    double beta = 0.0;
    std::vector<double> w;   // normalized to sum 1
    double log_norm = 0.0;   // log sum_m m e^{beta m} / gamma_m

    BetaWeights(const MassLaw& law, double beta);
};

/// Partition function Z(beta, Theta) = (2 pi Theta)^{n/2} sum_m m e^{beta m}/gamma_m.
/// Raises std::range_error if the result overflows to non-finite.
double partition_Z(const MassLaw& law, double beta, double Theta);

/// log Z, safe at beta values where Z itself would overflow.
double log_partition_Z(const MassLaw& law, double beta, double Theta);

/// Weighted mean <a>_beta = sum_m w_m a_m with w from BetaWeights.
/// a must have size M_max.
double beta_average(const MassLaw& law, double beta, const std::vector<double>& a);

double mean_mass(const MassLaw& law, double beta);         // <m>_beta
double mean_inv_mass(const MassLaw& law, double beta);     // <m^-1>_beta
double mean_inv_mass_sq(const MassLaw& law, double beta);  // <m^-2>_beta

/// d<m^-1>_beta / dbeta = 1 - <m^-1>_beta <m>_beta, strictly negative once the
/// ladder has at least two rungs.
double d_inv_mass_mean_d_beta(const MassLaw& law, double beta);

/// Invert target = <m^-1>_beta for beta. Safeguarded Newton with a geometrically
/// grown bisection bracket; tolerance 1e-13 * max(1, |target|), cap 200 iterations.
/// Target must lie in (1/M_max, 1); for M_max = 1 only target = 1 is admissible
/// and beta = 0 is returned by convention.
double beta_from_inv_mass_mean(const MassLaw& law, double target);

/// Centered Gaussian moments used as quadrature references and in transport
/// coefficients. All three kinds are isotropic, so the tensor kinds are returned
/// as the scalar coefficient of their canonical isotropic tensor.
///
///   scalar:   integral e^{-m|c|^2/2Theta} |c|^{2p} dc
///   tensor2:  ... |c|^{2p} c (x) c dc            = coef * I_n
///   tensor4:  ... c (x) c (x) c (x) c dc         = coef * E,
///             E_ijkl = d_ij d_kl + d_ik d_jl + d_il d_jk
double gauss_moment_scalar(double m, double Theta, int n, int p);
double gauss_moment_tensor2_coef(double m, double Theta, int n, int p);
double gauss_moment_tensor4_coef(double m, double Theta, int n);

} // namespace kinex
