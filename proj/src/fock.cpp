#include "spinboson/fock.hpp"

#include "spinboson/error.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

namespace spinboson {

using Triplet = Eigen::Triplet<cplx>;

namespace {

SparseC from_triplets(std::size_t dim, const std::vector<Triplet>& t) {
    SparseC m(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
    m.setFromTriplets(t.begin(), t.end());
    m.makeCompressed();
    return m;
}

SparseC diagonal(const FockBasis& basis, auto&& value_of) {
    std::vector<Triplet> t;
    t.reserve(basis.dimension());
    for (std::size_t i = 0; i < basis.dimension(); ++i) {
        const cplx v = value_of(i);
        if (v != cplx{}) t.emplace_back(i, i, v);
    }
    return from_triplets(basis.dimension(), t);
}

int pow_minus_one(int n) { return n % 2 == 0 ? 1 : -1; }

} // namespace

cplx unit_phase(double angle) {
    const double quarter = std::numbers::pi / 2;
    const double k = std::round(angle / quarter);
    if (std::abs(angle - k * quarter) <= 1e-12 * std::max(1.0, std::abs(angle))) {
        static constexpr std::array<cplx, 4> exact{cplx{1, 0}, cplx{0, 1}, cplx{-1, 0},
                                                   cplx{0, -1}};
        const long long r = static_cast<long long>(k) % 4;
        return exact[static_cast<std::size_t>(r < 0 ? r + 4 : r)];
    }
    return {std::cos(angle), std::sin(angle)};
}

FockBasis::FockBasis(std::size_t n_modes, int cutoff) : n_modes_(n_modes), cutoff_(cutoff) {
    if (n_modes == 0) throw ValidationError("Fock basis needs at least one mode");
    if (cutoff < 0) throw ValidationError("cutoff must be non-negative");
    occupations_.reserve(fock_dimension(n_modes, cutoff) / 2);
    for (int p = 0; p <= cutoff; ++p) {
        level_offset_.push_back(occupations_.size());
        for (auto& n : enumerate_level(n_modes, p)) occupations_.push_back(std::move(n));
    }
}

std::optional<std::size_t> FockBasis::index_of(Spin s, const MultiIndex& n) const {
    if (n.size() != n_modes_ || n.level() > cutoff_) return std::nullopt;
    const std::size_t base = s == Spin::Up ? 0 : per_spin();
    return base + level_offset_[static_cast<std::size_t>(n.level())] + level_rank(n);
}

std::size_t fock_dimension(std::size_t n_modes, int cutoff) {
    return 2 * static_cast<std::size_t>(
                   binomial(cutoff + static_cast<int>(n_modes), static_cast<int>(n_modes)));
}

std::string_view to_string(OperatorKind kind) noexcept {
    switch (kind) {
    case OperatorKind::H_M: return "H_M";
    case OperatorKind::H_D: return "H_D";
    case OperatorKind::H_Rot: return "H_Rot";
    case OperatorKind::H_MS: return "H_MS";
    case OperatorKind::H_MSRot: return "H_MSRot";
    case OperatorKind::Custom: return "Custom";
    }
    return "Custom";
}

double max_abs(const SparseC& m) {
    double out = 0.0;
    for (int k = 0; k < m.outerSize(); ++k) {
        for (SparseC::InnerIterator it(m, k); it; ++it) out = std::max(out, std::abs(it.value()));
    }
    return out;
}

bool FockOperator::is_real() const {
    for (int k = 0; k < matrix.outerSize(); ++k) {
        for (SparseC::InnerIterator it(matrix, k); it; ++it) {
            if (it.value().imag() != 0.0) return false;
        }
    }
    return true;
}

void FockOperator::refresh_metrics() {
    max_abs = spinboson::max_abs(matrix);
    const SparseC adj = matrix.adjoint();
    hermiticity_defect = spinboson::max_abs(SparseC(matrix - adj));
}

// --- building blocks -------------------------------------------------------------

SparseC number_term(const FockBasis& basis, const std::vector<double>& omegas) {
    return diagonal(basis, [&](std::size_t i) { return cplx{basis.occupation(i).dot(omegas)}; });
}

SparseC sigma_z(const FockBasis& basis) {
    return diagonal(basis, [&](std::size_t i) { return cplx(spin_sign(basis.spin(i))); });
}

SparseC total_parity(const FockBasis& basis) {
    return diagonal(basis, [&](std::size_t i) {
        return cplx(spin_sign(basis.spin(i)) * pow_minus_one(basis.level(i)));
    });
}

SparseC boson_parity_phase(const FockBasis& basis, double theta) {
    return diagonal(basis, [&](std::size_t i) { return unit_phase(theta * basis.level(i)); });
}

SparseC sigma_y(const FockBasis& basis) {
    const std::size_t m = basis.per_spin();
    std::vector<Triplet> t;
    t.reserve(2 * m);
    for (std::size_t i = 0; i < m; ++i) {
        t.emplace_back(i, i + m, cplx{0, -1});
        t.emplace_back(i + m, i, cplx{0, 1});
    }
    return from_triplets(basis.dimension(), t);
}

SparseC pi_q(const FockBasis& basis) {
    const std::size_t m = basis.per_spin();
    std::vector<Triplet> t;
    t.reserve(2 * m);
    for (std::size_t i = 0; i < m; ++i) {
        const int n = basis.level(i);
        if (n % 2 == 0) {
            const double c = pow_minus_one(n / 2);
            t.emplace_back(i, i, c);
            t.emplace_back(i + m, i + m, -c);
        } else {
            // -sin(pi n/2) sigma_y
            const double s = pow_minus_one((n - 1) / 2);
            t.emplace_back(i, i + m, cplx{0, s});
            t.emplace_back(i + m, i, cplx{0, -s});
        }
    }
    return from_triplets(basis.dimension(), t);
}

SparseC boson_coupling(const FockBasis& basis, const std::vector<double>& g, int power,
                       bool rotated) {
    if (power != 1 && power != 2) throw ValidationError("coupling power must be 1 or 2");
    const std::size_t m = basis.per_spin();
    std::vector<Triplet> t;
    for (std::size_t i = 0; i < m; ++i) {
        const MultiIndex& n = basis.occupation(i);
        if (n.level() + power > basis.cutoff()) continue;
        for (std::size_t j = 0; j < g.size(); ++j) {
            if (g[j] == 0.0) continue;
            MultiIndex up = n.plus_unit(j);
            double amp = std::sqrt(static_cast<double>(up[j]));
            if (power == 2) {
                up = up.plus_unit(j);
                amp *= std::sqrt(static_cast<double>(up[j]));
            }
            amp *= g[j];
            const std::size_t r = *basis.index_of(Spin::Up, up);
            // a^+ element at (r, i); a at (i, r)
            const cplx raise = rotated ? cplx{0, -amp} : cplx{amp};
            for (std::size_t off : {std::size_t{0}, m}) {
                t.emplace_back(r + off, i + off, raise);
                t.emplace_back(i + off, r + off, std::conj(raise));
            }
        }
    }
    return from_triplets(basis.dimension(), t);
}

SparseC sigma_x_times(const FockBasis& basis, const SparseC& boson_op) {
    const auto m = static_cast<Eigen::Index>(basis.per_spin());
    std::vector<Triplet> t;
    for (int k = 0; k < boson_op.outerSize(); ++k) {
        for (SparseC::InnerIterator it(boson_op, k); it; ++it) {
            if (it.row() >= m || it.col() >= m) continue;
            t.emplace_back(it.row() + m, it.col(), it.value());
            t.emplace_back(it.row(), it.col() + m, it.value());
        }
    }
    return from_triplets(basis.dimension(), t);
}

FockOperator build_hamiltonian(const ModelParams& params, OperatorKind kind, int cutoff,
                               const BuildLimits& limits) {
    if (cutoff < 2) throw ValidationError("cutoff must be at least 2");
    if (kind == OperatorKind::Custom) {
        throw ValidationError("build_hamiltonian: kind Custom has no defining formula");
    }
    const std::size_t dim = fock_dimension(params.n_modes(), cutoff);
    if (dim > limits.max_dimension) throw DimensionTooLarge(dim, limits.max_dimension);

    auto basis = std::make_shared<const FockBasis>(params.n_modes(), cutoff);
    const auto& g = params.couplings();
    const double delta = params.delta();

    FockOperator op;
    op.basis = basis;
    op.kind = kind;
    SparseC h = number_term(*basis, params.omegas());
    switch (kind) {
    case OperatorKind::H_M:
        h += sigma_x_times(*basis, boson_coupling(*basis, g, 1, false));
        h += delta * sigma_z(*basis);
        break;
    case OperatorKind::H_D:
        h += boson_coupling(*basis, g, 1, false);
        h += delta * total_parity(*basis);
        break;
    case OperatorKind::H_Rot:
        h += boson_coupling(*basis, g, 1, true);
        h += delta * total_parity(*basis);
        break;
    case OperatorKind::H_MS:
        h += sigma_x_times(*basis, boson_coupling(*basis, g, 2, false));
        h += delta * sigma_z(*basis);
        break;
    case OperatorKind::H_MSRot:
        h += boson_coupling(*basis, g, 2, true);
        h += delta * pi_q(*basis);
        break;
    case OperatorKind::Custom:
        break;
    }
    h.prune(cplx{});
    op.matrix = std::move(h);
    op.refresh_metrics();

    if (kind == OperatorKind::H_MS || kind == OperatorKind::H_MSRot) {
        const double gmax = *std::max_element(g.begin(), g.end());
        const double wmin = *std::min_element(params.omegas().begin(), params.omegas().end());
        if (2.0 * gmax >= wmin) {
            op.warnings.push_back(
                "two-photon coupling 2*max(g) >= min(omega): the truncated spectrum is "
                "cutoff dependent (spectral collapse regime)");
        }
    }
    return op;
}

// --- parity projections ------------------------------------------------------------

cplx generator_eigenvalue(const FockBasis& basis, SymmetryGenerator gen, std::size_t i) {
    const int s = spin_sign(basis.spin(i));
    switch (gen) {
    case SymmetryGenerator::Z2_Pi: return cplx(s * pow_minus_one(basis.level(i)));
    case SymmetryGenerator::Z4_sqrtP:
        return double(s) * unit_phase(std::numbers::pi / 2 * basis.level(i));
    case SymmetryGenerator::SpinZ: return cplx(s);
    }
    return {};
}

ParityDecomposition parity_blocks(const FockOperator& op, SymmetryGenerator gen) {
    struct Label {
        cplx value;
        const char* name;
    };
    std::vector<Label> labels;
    switch (gen) {
    case SymmetryGenerator::Z2_Pi: labels = {{1, "plus"}, {-1, "minus"}}; break;
    case SymmetryGenerator::Z4_sqrtP:
        labels = {{1, "+1"}, {cplx{0, 1}, "+i"}, {-1, "-1"}, {cplx{0, -1}, "-i"}};
        break;
    case SymmetryGenerator::SpinZ: labels = {{1, "up"}, {-1, "down"}}; break;
    }

    const FockBasis& basis = *op.basis;
    const std::size_t dim = basis.dimension();
    std::vector<int> block_of(dim, -1);
    std::vector<std::size_t> local(dim, 0);
    std::vector<std::vector<std::size_t>> members(labels.size());
    for (std::size_t i = 0; i < dim; ++i) {
        const cplx ev = generator_eigenvalue(basis, gen, i);
        for (std::size_t b = 0; b < labels.size(); ++b) {
            if (std::abs(ev - labels[b].value) < 1e-12) {
                block_of[i] = static_cast<int>(b);
                local[i] = members[b].size();
                members[b].push_back(i);
                break;
            }
        }
    }

    ParityDecomposition out;
    std::vector<std::vector<Triplet>> trip(labels.size());
    for (int k = 0; k < op.matrix.outerSize(); ++k) {
        for (SparseC::InnerIterator it(op.matrix, k); it; ++it) {
            const auto r = static_cast<std::size_t>(it.row());
            const auto c = static_cast<std::size_t>(it.col());
            if (block_of[r] == block_of[c]) {
                trip[static_cast<std::size_t>(block_of[r])].emplace_back(local[r], local[c],
                                                                         it.value());
            } else {
                out.off_block_residual = std::max(out.off_block_residual, std::abs(it.value()));
            }
        }
    }
    for (std::size_t b = 0; b < labels.size(); ++b) {
        if (members[b].empty()) continue;
        ParityBlock blk;
        blk.label = labels[b].name;
        blk.eigenvalue = labels[b].value;
        blk.matrix = from_triplets(members[b].size(), trip[b]);
        blk.states = std::move(members[b]);
        out.blocks.push_back(std::move(blk));
    }
    return out;
}

} // namespace spinboson
