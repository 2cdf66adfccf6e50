// symmetry.hpp: number-diagonal unitaries, parity operators and the
// transformation identities between the model Hamiltonians.

#pragma once

#include "spinboson/fock.hpp"
#include "spinboson/model.hpp"

#include <memory>
#include <string>
#include <vector>

namespace spinboson {

enum class UnitaryLabel { U_theta, U_B, Pi, sqrtP, PiQ, Reflection };

std::string_view to_string(UnitaryLabel label) noexcept;

struct UnitaryFactor {
    std::shared_ptr<const FockBasis> basis;
    SparseC matrix;
    UnitaryLabel label = UnitaryLabel::U_theta;
    double theta = 0.0;
    double unitarity_defect = 0.0;
};

// e^{i theta sigma_x N}. With squared set the angle is halved, so that
// theta = pi/2 gives the two-photon rotation e^{i (pi/4) sigma_x N}.
UnitaryFactor number_rotation(std::shared_ptr<const FockBasis> basis, double theta,
                              bool squared = false);
// e^{i theta N} acting on the bosons only; U_B is theta = -pi/2.
UnitaryFactor boson_rotation(std::shared_ptr<const FockBasis> basis, double theta);
UnitaryFactor total_parity_op(std::shared_ptr<const FockBasis> basis);  // sigma_z (-1)^N
UnitaryFactor sqrt_boson_parity(std::shared_ptr<const FockBasis> basis); // e^{i (pi/2) N}
UnitaryFactor pi_q_op(std::shared_ptr<const FockBasis> basis);
UnitaryFactor reflection(std::shared_ptr<const FockBasis> basis);        // (-1)^N

// U^+ H U
SparseC conjugate(const UnitaryFactor& u, const SparseC& h);

enum class TransformPair { M_to_Rot, Rot_to_D, MS_to_MSRot };

std::string_view to_string(TransformPair pair) noexcept;

struct IdentityReport {
    std::string name;
    double deviation = 0.0; // max entrywise |lhs - rhs|
    double scale = 0.0;     // max |H| of the reference side
    double threshold = 0.0;
    bool passed = false;
};

// Conjugated source operator (built from params) against the directly built target
// (built from target_params). Passes when deviation <= 1e-12 * max|H|.
IdentityReport verify_transformation(const ModelParams& params, TransformPair pair, int cutoff);
IdentityReport verify_transformation(const ModelParams& params, const ModelParams& target_params,
                                     TransformPair pair, int cutoff);

// The three Hamiltonian identities, the two operator identities behind the first
// rotation, and the two-construction check of Pi_q.
std::vector<IdentityReport> identity_suite(const ModelParams& params, int cutoff);

struct BlockReport {
    std::string name;
    std::vector<std::string> block_labels;
    double deviation = 0.0;
    double scale = 0.0;
    double threshold = 0.0;
    bool passed = false;
};

// [H_M, Pi] and [H_MS, sigma_z sqrt(P)] as off-block residuals, and the spin-block
// structure of H_D (plus block at Delta equals minus block at -Delta).
std::vector<BlockReport> symmetry_suite(const ModelParams& params, int cutoff);

// Multiplies the coefficient of every multi-index n by (-1)^{|n|}.
GradedSeries reflection_apply(const GradedSeries& series);

// Exchanges (g_i, w_i) and (g_j, w_j). Throws ValidationError on a bad index.
ModelParams swap_modes(const ModelParams& params, std::size_t i, std::size_t j);

} // namespace spinboson
