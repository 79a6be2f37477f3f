#pragma once

// Small dense linear algebra, adaptive quadrature and random sampling kernels.

#include <array>
#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <vector>

namespace uvjitter::numerics {

using Vec4 = std::array<double, 4>;
using Mat4 = std::array<std::array<double, 4>, 4>;

/// 4x4 real symmetric matrix. Construction checks finiteness and symmetry
/// (to 1e-12 relative to the largest entry) and stores the symmetrized value.
class SymMatrix4 {
public:
    SymMatrix4() = default;
    explicit SymMatrix4(const Mat4& m);

    static SymMatrix4 diagonal(const Vec4& d);

    double operator()(int i, int j) const { return m_[i][j]; }
    const Mat4& matrix() const noexcept { return m_; }

    double frobenius_norm() const;
    double trace() const { return m_[0][0] + m_[1][1] + m_[2][2] + m_[3][3]; }
    /// x^T M x
    double quadratic(const Vec4& x) const;

private:
    Mat4 m_{};
};

struct EigenDecomp {
    Vec4 values{};  ///< sorted descending
    Mat4 vectors{}; ///< column k is the eigenvector of values[k]
};

/// Cyclic Jacobi rotations until the largest off-diagonal entry drops
/// below 1e-14 * ||m||_F.
EigenDecomp jacobi_eigen(const SymMatrix4& m);

/// Determinant by LU with partial pivoting.
double det4(const Mat4& a);

/// Solves a x = b by Gaussian elimination with partial pivoting. Throws
/// SingularMatrixError when |det a| < 1e-14 * max|a_ij|^4.
Vec4 solve4(const Mat4& a, const Vec4& b);

Vec4 mat_vec(const Mat4& a, const Vec4& x);
double dot(const Vec4& a, const Vec4& b);

struct QuadratureSpec {
    double rel_tol = 1e-8;
    double abs_floor = 1e-300;
    int max_subdivisions = 2000;
};

struct QuadratureResult {
    double value = 0.0;
    double error = 0.0;   ///< achieved error estimate
    bool converged = true; ///< false when max_subdivisions was hit first
    int panels = 0;
};

using Integrand = std::function<double(double)>;

/// Globally adaptive Gauss-Kronrod (7/15) quadrature on [lo, hi].
QuadratureResult integrate_adaptive(const Integrand& f, double lo, double hi,
                                    const QuadratureSpec& spec = {});

/// Same, starting from the partition given by sorted breakpoints
/// (first and last entries are the integration limits).
QuadratureResult integrate_adaptive(const Integrand& f,
                                    std::span<const double> breakpoints,
                                    const QuadratureSpec& spec = {});

struct VectorQuadratureResult {
    std::vector<double> values;
    std::vector<double> errors;
    bool converged = true;
    int panels = 0;
};

/// Vector-valued integrand: f(x, out) fills out[0..n). Every component is
/// held to its own relative tolerance.
using VectorIntegrand = std::function<void(double, std::span<double>)>;

VectorQuadratureResult integrate_adaptive_vector(const VectorIntegrand& f,
                                                 std::size_t n,
                                                 std::span<const double> breakpoints,
                                                 const QuadratureSpec& spec = {});

/// Seedable 64-bit random stream. Independent streams for parallel workers
/// are derived from (seed, index).
class Rng {
public:
    explicit Rng(std::uint64_t seed = 0);
    static Rng stream(std::uint64_t seed, std::uint64_t index);

    /// Uniform on [0, 1) with 53 random bits.
    double uniform();
    /// Uniform on (0, 1).
    double uniform_open();
    double standard_normal();

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

double sample_gaussian(double mean, double sd, Rng& rng);
/// Inversion for mean < 30, transformed rejection (PTRS) above.
std::int64_t sample_poisson(double mean, Rng& rng);

} // namespace uvjitter::numerics
