#include "spinboson/symmetry.hpp"

#include "spinboson/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace spinboson {

namespace {

using Triplet = Eigen::Triplet<cplx>;
constexpr double kIdentityRel = 1e-12;
constexpr double kBlockRel = 1e-13;
constexpr double kSpectrumTol = 1e-10;

double unitarity_defect(const SparseC& u) {
    SparseC id(u.rows(), u.cols());
    id.setIdentity();
    const SparseC uu = u.adjoint() * u;
    return max_abs(SparseC(uu - id));
}

UnitaryFactor make_factor(std::shared_ptr<const FockBasis> basis, SparseC m, UnitaryLabel label,
                          double theta) {
    UnitaryFactor u;
    u.basis = std::move(basis);
    u.matrix = std::move(m);
    u.label = label;
    u.theta = theta;
    u.unitarity_defect = unitarity_defect(u.matrix);
    return u;
}

IdentityReport compare(std::string name, const SparseC& lhs, const SparseC& rhs,
                       double scale_floor = 0.0) {
    IdentityReport r;
    r.name = std::move(name);
    r.deviation = max_abs(SparseC(lhs - rhs));
    r.scale = std::max({max_abs(rhs), scale_floor});
    r.threshold = kIdentityRel * r.scale;
    r.passed = r.deviation <= r.threshold;
    return r;
}

OperatorKind source_of(TransformPair pair) {
    switch (pair) {
    case TransformPair::M_to_Rot: return OperatorKind::H_M;
    case TransformPair::Rot_to_D: return OperatorKind::H_Rot;
    case TransformPair::MS_to_MSRot: return OperatorKind::H_MS;
    }
    return OperatorKind::Custom;
}

OperatorKind target_of(TransformPair pair) {
    switch (pair) {
    case TransformPair::M_to_Rot: return OperatorKind::H_Rot;
    case TransformPair::Rot_to_D: return OperatorKind::H_D;
    case TransformPair::MS_to_MSRot: return OperatorKind::H_MSRot;
    }
    return OperatorKind::Custom;
}

UnitaryFactor rotation_for(TransformPair pair, std::shared_ptr<const FockBasis> basis) {
    switch (pair) {
    case TransformPair::M_to_Rot: return number_rotation(basis, std::numbers::pi / 2);
    case TransformPair::Rot_to_D: return boson_rotation(basis, -std::numbers::pi / 2);
    case TransformPair::MS_to_MSRot: return number_rotation(basis, std::numbers::pi / 2, true);
    }
    throw ValidationError("unknown transformation pair");
}

BlockReport block_check(std::string name, const FockOperator& op, SymmetryGenerator gen) {
    const auto dec = parity_blocks(op, gen);
    BlockReport r;
    r.name = std::move(name);
    for (const auto& b : dec.blocks) r.block_labels.push_back(b.label);
    r.deviation = dec.off_block_residual;
    r.scale = op.max_abs;
    r.threshold = kBlockRel * op.max_abs;
    r.passed = r.deviation <= r.threshold;
    return r;
}

} // namespace

std::string_view to_string(UnitaryLabel label) noexcept {
    switch (label) {
    case UnitaryLabel::U_theta: return "U_theta";
    case UnitaryLabel::U_B: return "U_B";
    case UnitaryLabel::Pi: return "Pi";
    case UnitaryLabel::sqrtP: return "sqrtP";
    case UnitaryLabel::PiQ: return "PiQ";
    case UnitaryLabel::Reflection: return "Reflection";
    }
    return "U_theta";
}

std::string_view to_string(TransformPair pair) noexcept {
    switch (pair) {
    case TransformPair::M_to_Rot: return "M_to_Rot";
    case TransformPair::Rot_to_D: return "Rot_to_D";
    case TransformPair::MS_to_MSRot: return "MS_to_MSRot";
    }
    return "";
}

UnitaryFactor number_rotation(std::shared_ptr<const FockBasis> basis, double theta, bool squared) {
    const double phi = squared ? theta / 2 : theta;
    const std::size_t m = basis->per_spin();
    std::vector<Triplet> t;
    t.reserve(4 * m);
    for (std::size_t i = 0; i < m; ++i) {
        // sigma_x = +1 eigenvector picks up e^{i phi n}, sigma_x = -1 the conjugate
        const cplx p = unit_phase(phi * basis->level(i));
        const cplx q = std::conj(p);
        const cplx diag = 0.5 * (p + q);
        const cplx off = 0.5 * (p - q);
        if (diag != cplx{}) {
            t.emplace_back(i, i, diag);
            t.emplace_back(i + m, i + m, diag);
        }
        if (off != cplx{}) {
            t.emplace_back(i, i + m, off);
            t.emplace_back(i + m, i, off);
        }
    }
    SparseC u(static_cast<Eigen::Index>(basis->dimension()),
              static_cast<Eigen::Index>(basis->dimension()));
    u.setFromTriplets(t.begin(), t.end());
    return make_factor(std::move(basis), std::move(u), UnitaryLabel::U_theta, theta);
}

UnitaryFactor boson_rotation(std::shared_ptr<const FockBasis> basis, double theta) {
    SparseC u = boson_parity_phase(*basis, theta);
    return make_factor(std::move(basis), std::move(u), UnitaryLabel::U_B, theta);
}

UnitaryFactor total_parity_op(std::shared_ptr<const FockBasis> basis) {
    SparseC u = total_parity(*basis);
    return make_factor(std::move(basis), std::move(u), UnitaryLabel::Pi, std::numbers::pi);
}

UnitaryFactor sqrt_boson_parity(std::shared_ptr<const FockBasis> basis) {
    SparseC u = boson_parity_phase(*basis, std::numbers::pi / 2);
    return make_factor(std::move(basis), std::move(u), UnitaryLabel::sqrtP, std::numbers::pi / 2);
}

UnitaryFactor pi_q_op(std::shared_ptr<const FockBasis> basis) {
    SparseC u = pi_q(*basis);
    return make_factor(std::move(basis), std::move(u), UnitaryLabel::PiQ, std::numbers::pi / 4);
}

UnitaryFactor reflection(std::shared_ptr<const FockBasis> basis) {
    SparseC u = boson_parity_phase(*basis, std::numbers::pi);
    return make_factor(std::move(basis), std::move(u), UnitaryLabel::Reflection, std::numbers::pi);
}

SparseC conjugate(const UnitaryFactor& u, const SparseC& h) {
    SparseC out = u.matrix.adjoint() * h * u.matrix;
    out.prune(cplx{});
    return out;
}

IdentityReport verify_transformation(const ModelParams& params, TransformPair pair, int cutoff) {
    return verify_transformation(params, params, pair, cutoff);
}

IdentityReport verify_transformation(const ModelParams& params, const ModelParams& target_params,
                                     TransformPair pair, int cutoff) {
    if (cutoff < 4) throw ValidationError("verify_transformation needs cutoff >= 4");
    const FockOperator source = build_hamiltonian(params, source_of(pair), cutoff);
    const FockOperator target = build_hamiltonian(target_params, target_of(pair), cutoff);
    const UnitaryFactor u = rotation_for(pair, source.basis);
    return compare(std::string(to_string(pair)), conjugate(u, source.matrix), target.matrix);
}

std::vector<IdentityReport> identity_suite(const ModelParams& params, int cutoff) {
    std::vector<IdentityReport> out;
    for (auto pair : {TransformPair::M_to_Rot, TransformPair::Rot_to_D,
                      TransformPair::MS_to_MSRot}) {
        out.push_back(verify_transformation(params, pair, cutoff));
    }

    auto basis = std::make_shared<const FockBasis>(params.n_modes(), cutoff);
    const UnitaryFactor u = number_rotation(basis, std::numbers::pi / 2);
    const auto& g = params.couplings();

    // sigma_x (a+ + a) -> -i (a+ - a)
    const SparseC coupling = sigma_x_times(*basis, boson_coupling(*basis, g, 1, false));
    out.push_back(compare("rotated_coupling", conjugate(u, coupling),
                          boson_coupling(*basis, g, 1, true)));

    // sigma_z -> sigma_z (-1)^N
    out.push_back(compare("rotated_spin", conjugate(u, sigma_z(*basis)), total_parity(*basis)));

    // Pi_q: sigma_z sqrt(P) on even N and i sigma_y sqrt(P) on odd N; also the
    // two-photon rotation of sigma_z
    const SparseC sqrt_p = boson_parity_phase(*basis, std::numbers::pi / 2);
    const SparseC even = SparseC(sigma_z(*basis) * sqrt_p);
    const SparseC odd = SparseC(cplx{0, 1} * SparseC(sigma_y(*basis) * sqrt_p));
    std::vector<Triplet> t;
    for (int k = 0; k < even.outerSize(); ++k) {
        for (SparseC::InnerIterator it(even, k); it; ++it) {
            if (basis->level(static_cast<std::size_t>(it.col())) % 2 == 0) {
                t.emplace_back(it.row(), it.col(), it.value());
            }
        }
        for (SparseC::InnerIterator it(odd, k); it; ++it) {
            if (basis->level(static_cast<std::size_t>(it.col())) % 2 == 1) {
                t.emplace_back(it.row(), it.col(), it.value());
            }
        }
    }
    SparseC blockwise(even.rows(), even.cols());
    blockwise.setFromTriplets(t.begin(), t.end());
    const SparseC piq = pi_q(*basis);
    const UnitaryFactor u2 = number_rotation(basis, std::numbers::pi / 2, true);
    auto a = compare("pi_q_constructions", blockwise, piq);
    const auto b = compare("pi_q_constructions", conjugate(u2, sigma_z(*basis)), piq);
    a.deviation = std::max(a.deviation, b.deviation);
    a.passed = a.deviation <= a.threshold;
    out.push_back(a);
    return out;
}

std::vector<BlockReport> symmetry_suite(const ModelParams& params, int cutoff) {
    std::vector<BlockReport> out;
    out.push_back(block_check("H_M_Z2_Pi", build_hamiltonian(params, OperatorKind::H_M, cutoff),
                              SymmetryGenerator::Z2_Pi));
    out.push_back(block_check("H_MS_Z4_sqrtP",
                              build_hamiltonian(params, OperatorKind::H_MS, cutoff),
                              SymmetryGenerator::Z4_sqrtP));

    // H_D is spin diagonal; its up block at Delta is its down block at -Delta
    auto flipped_raw = params.raw();
    flipped_raw.delta = -params.delta();
    const FockOperator hd = build_hamiltonian(params, OperatorKind::H_D, cutoff);
    const FockOperator hd_flip = build_hamiltonian(validate(flipped_raw), OperatorKind::H_D, cutoff);
    auto spin = block_check("H_D_spin_blocks", hd, SymmetryGenerator::SpinZ);
    const auto up = parity_blocks(hd, SymmetryGenerator::SpinZ).blocks.at(0);
    const auto down = parity_blocks(hd_flip, SymmetryGenerator::SpinZ).blocks.at(1);
    const auto n = static_cast<std::size_t>(up.matrix.rows());
    const auto ev_up = hermitian_eigenvalues(up.matrix, n);
    const auto ev_down = hermitian_eigenvalues(down.matrix, n);
    double spec = 0.0;
    for (std::size_t i = 0; i < n; ++i) spec = std::max(spec, std::abs(ev_up[i] - ev_down[i]));
    spin.passed = spin.passed && spec <= kSpectrumTol;
    spin.deviation = spec;
    spin.threshold = kSpectrumTol;
    out.push_back(spin);
    return out;
}

GradedSeries reflection_apply(const GradedSeries& series) {
    GradedSeries out = series;
    for (std::size_t p = 1; p < out.by_level.size(); p += 2) {
        for (auto& c : out.by_level[p]) c = -c;
    }
    return out;
}

ModelParams swap_modes(const ModelParams& params, std::size_t i, std::size_t j) {
    const std::size_t n = params.n_modes();
    if (i >= n || j >= n) {
        throw ValidationError("swap_modes index out of range", static_cast<int>(std::max(i, j)));
    }
    auto raw = params.raw();
    std::swap(raw.omegas[i], raw.omegas[j]);
    std::swap(raw.couplings[i], raw.couplings[j]);
    return validate(raw);
}

} // namespace spinboson
