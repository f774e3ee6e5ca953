#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace fracdiff {

inline constexpr double kDefaultTol = 1e-10;

/// Request for E_{beta,zeta}(z).
struct MLParams {
    double beta = 1.0;
    double zeta = 1.0;
    double z = 0.0;
};

/// Request for the Mittag-Leffler type function
/// e_{beta,zeta}(t; lambda) = t^{zeta-1} E_{beta,zeta}(-lambda t^beta).
struct MLTypeParams {
    double beta = 1.0;
    double zeta = 1.0;
    double t = 0.0;
    double lambda = 1.0;
};

enum class EvalMethod { taylor, asymptotic, integral };

const char* to_string(EvalMethod m) noexcept;

struct EvalReport {
    double value = 0.0;
    double abs_error_estimate = 0.0;
    EvalMethod method = EvalMethod::taylor;
};

/// Two-parameter Mittag-Leffler function on the real line.
///
/// Branches, tried in order until the error estimate meets `tol`:
///  - compensated Taylor summation in extended precision (small |z|, and
///    any z > 0);
///  - for z < 0 and beta < 2, the algebraic asymptotic expansion truncated
///    at its smallest term, plus the decaying exponential pair when
///    beta >= 1;
///  - for z < 0 and beta < 1, the real integral representation obtained by
///    collapsing the inverse Laplace contour onto the negative axis.
/// For z < -5 the asymptotic branch is tried first.
///
/// Throws DomainError for beta <= 0 or tol outside [1e-14, 1e-6], and
/// NonConvergent (carrying the best estimate) if no branch meets `tol`.
EvalReport ml_eval(const MLParams& p, double tol = kDefaultTol);

/// e_{beta,zeta}(t; lambda). Throws SingularAtZero for t = 0 with zeta < 1.
EvalReport ml_type_eval(const MLTypeParams& p, double tol = kDefaultTol);

/// E_{beta,zeta}(-lambda t_i^beta) at every node of an increasing grid
/// starting at 0. For beta <= 1 on large grids the values come from a
/// piecewise Chebyshev table with relative accuracy near tol; otherwise each
/// node is evaluated directly.
std::vector<double> ml_decay_samples(double beta, double zeta, double lambda, std::span<const double> t,
                                     double tol = kDefaultTol);

/// Reciprocal gamma function with exact zeros at the poles.
double rgamma(double x);

struct MLBoundSample {
    double lhs = 0.0;        ///< |E_{beta,zeta}(z)|
    double rhs_shape = 0.0;  ///< 1 / (1 + |z|)
};

/// Samples both sides of the bound |E_{beta,zeta}(z)| <= C / (1 + |z|) on the
/// negative real axis. Requires 0 < beta < 2 and z <= 0.
MLBoundSample check_ml_bound(const MLParams& p);

/// Smallest C with lhs <= C * rhs_shape over the given arguments.
double fit_ml_bound_constant(double beta, double zeta, std::span<const double> z);

/// Product-integration weights for (g * e_{beta,beta}(.; lambda))(t_i) with g
/// piecewise linear on the grid. Kernel moments over each subinterval are
/// taken exactly from the antiderivatives e_{beta,beta+1} and e_{beta,beta+2},
/// so the t^{beta-1} singularity costs no accuracy.
///
/// On a uniform grid the weights depend only on i - j and cost O(N) kernel
/// evaluations. Otherwise there are O(N^2) kernel values; for beta <= 1 they
/// come from a piecewise Chebyshev table of E_{beta,beta+1} and E_{beta,beta+2}
/// built once per convolution.
class MLConvolution {
public:
    MLConvolution(double beta, double lambda, std::span<const double> t_grid,
                  double tol = kDefaultTol);

    std::size_t size() const noexcept { return t_.size(); }
    bool uniform() const noexcept { return uniform_; }

    /// Weight of sample g_j in the value at node i (zero for j > i).
    double weight(std::size_t i, std::size_t j) const;

    std::vector<double> apply(std::span<const double> g) const;

private:
    std::vector<double> t_;
    bool uniform_ = false;
    // Uniform grid: left/right weights per lag m = i - j - 1.
    std::vector<double> left_, right_;
    // General grid: row-major lower-triangular node weights.
    std::vector<double> dense_;
};

/// Convenience wrapper: product-integration convolution at every node.
/// Throws GridError if the grid is not strictly increasing from 0, and
/// DomainError unless lambda > 0 and beta > 0.
std::vector<double> conv_ml(std::span<const double> g, double beta,
                            std::span<const double> t_grid, double lambda,
                            double tol = kDefaultTol);

}  // namespace fracdiff
