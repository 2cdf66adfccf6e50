// fock.hpp: truncated spin x boson Fock space and the model Hamiltonians
//
// States |s, n> with s in {Up, Down} (sigma_z = +1, -1) and |n| <= C.
// Ordering: spin-major, then total boson number, then lexicographic in n.

#pragma once

#include "spinboson/model.hpp"

#include <Eigen/SparseCore>

#include <complex>
#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace spinboson {

using cplx = std::complex<double>;
using SparseC = Eigen::SparseMatrix<cplx>;

enum class Spin { Up = 0, Down = 1 };

inline int spin_sign(Spin s) noexcept { return s == Spin::Up ? 1 : -1; }

class FockBasis {
public:
    FockBasis(std::size_t n_modes, int cutoff);

    std::size_t n_modes() const noexcept { return n_modes_; }
    int cutoff() const noexcept { return cutoff_; }
    std::size_t dimension() const noexcept { return 2 * occupations_.size(); }
    // Number of boson configurations per spin state, binomial(C+N, N).
    std::size_t per_spin() const noexcept { return occupations_.size(); }

    Spin spin(std::size_t i) const noexcept { return i < per_spin() ? Spin::Up : Spin::Down; }
    const MultiIndex& occupation(std::size_t i) const { return occupations_[i % per_spin()]; }
    int level(std::size_t i) const { return occupation(i).level(); }

    // nullopt when n lies above the cutoff.
    std::optional<std::size_t> index_of(Spin s, const MultiIndex& n) const;

private:
    std::size_t n_modes_;
    int cutoff_;
    std::vector<MultiIndex> occupations_;
    std::vector<std::size_t> level_offset_;
};

// Memory guard for 2 * binomial(C+N, N), checked before any allocation.
std::size_t fock_dimension(std::size_t n_modes, int cutoff);

enum class OperatorKind {
    H_M,   // sum w a+a + sigma_x sum g (a+ + a) + Delta sigma_z
    H_D,   // sum w a+a + sum g (a+ + a) + Delta Pi
    H_Rot, // sum w a+a - i sum g (a+ - a) + Delta Pi
    H_MS,  // sum w a+a + sigma_x sum g (a+^2 + a^2) + Delta sigma_z
    H_MSRot, // sum w a+a - i sum g (a+^2 - a^2) + Delta Pi_q
    Custom,
};

std::string_view to_string(OperatorKind kind) noexcept;

struct FockOperator {
    std::shared_ptr<const FockBasis> basis;
    SparseC matrix;
    OperatorKind kind = OperatorKind::Custom;
    double hermiticity_defect = 0.0;
    double max_abs = 0.0;
    std::vector<std::string> warnings;

    bool is_real() const;
    // Recompute hermiticity_defect and max_abs from the matrix.
    void refresh_metrics();
};

struct BuildLimits {
    std::size_t max_dimension = 200000;
};

// Throws DimensionTooLarge, or ValidationError for cutoff < 2 or kind Custom.
FockOperator build_hamiltonian(const ModelParams& params, OperatorKind kind, int cutoff,
                               const BuildLimits& limits = {});

// Pieces used by the transformation checks.
SparseC number_term(const FockBasis& basis, const std::vector<double>& omegas);
SparseC sigma_z(const FockBasis& basis);
SparseC sigma_y(const FockBasis& basis);
SparseC total_parity(const FockBasis& basis);            // sigma_z (-1)^N
SparseC boson_parity_phase(const FockBasis& basis, double theta); // e^{i theta N}, spin identity
// sum_j g_j (a_j^{+p} + a_j^p), or -i sum_j g_j (a_j^{+p} - a_j^p) when rotated; p = 1 or 2.
// Identity on the spin.
SparseC boson_coupling(const FockBasis& basis, const std::vector<double>& g, int power,
                       bool rotated);
// sigma_x (x) B, where B is a spin-diagonal operator with equal blocks.
SparseC sigma_x_times(const FockBasis& basis, const SparseC& boson_op);
// sigma_z cos(pi N / 2) - sigma_y sin(pi N / 2)
SparseC pi_q(const FockBasis& basis);

double max_abs(const SparseC& m);

// e^{i angle}, exact when angle is a multiple of pi/2.
cplx unit_phase(double angle);

// --- parity projections ----------------------------------------------------

enum class SymmetryGenerator { Z2_Pi, Z4_sqrtP, SpinZ };

struct ParityBlock {
    std::string label;
    cplx eigenvalue;
    std::vector<std::size_t> states;
    SparseC matrix;
};

struct ParityDecomposition {
    std::vector<ParityBlock> blocks;
    double off_block_residual = 0.0;
};

// Eigenvalue of the generator on basis state i.
cplx generator_eigenvalue(const FockBasis& basis, SymmetryGenerator gen, std::size_t i);

ParityDecomposition parity_blocks(const FockOperator& op, SymmetryGenerator gen);

// --- eigenvalues ---------------------------------------------------------------

struct EigenOptions {
    std::size_t dense_threshold = 5000;
    double residual_tol = 1e-8;
    int max_restarts = 200;
    std::size_t krylov_dim = 80;
};

// k smallest eigenvalues, ascending. Dense LAPACK at or below dense_threshold,
// Lanczos with locking above. Throws EigenConvergenceError carrying the residual.
std::vector<double> hermitian_eigenvalues(const SparseC& m, std::size_t k,
                                          const EigenOptions& opts = {});
std::vector<double> eigenvalues(const FockOperator& op, std::size_t k,
                                const EigenOptions& opts = {});

} // namespace spinboson
